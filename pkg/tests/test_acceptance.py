"""Acceptance criteria, each at its stated tolerance and time budget.

All randomized criteria share one root seed. A one-line PASS/FAIL summary
per criterion is printed at the end of the run.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from reluam.altmin import am_step_one_hidden
from reluam.datagen import RngSeed, make_dataset, one_hidden_teacher
from reluam.gd import grad_one_hidden, loss
from reluam.harness.config import ExperimentSpec, GridPoint, InitSpec
from reluam.harness.io import write_csv
from reluam.harness.runner import make_teacher, run_experiment, trial_seed
from reluam.initializers import init_tensor
from reluam.linearize import assemble_B, assemble_B2, assemble_C, estimate_signs, hidden_map
from reluam.metrics import perm_dist, perm_match, column_cost, subspace_angle
from reluam.model import Variant, forward_one_hidden, forward_two_hidden

ROOT_SEED = 20241015
FIXTURES = Path(__file__).parent / "fixtures"

criterion = pytest.mark.criterion


def _prob(result, algo=None, init=None):
    rows = [r for r in result.phase_rows() if (algo is None or r.algo == algo) and (init is None or r.init == init)]
    assert len(rows) == 1
    return rows[0].probability


@criterion(1, "linearization identities for B, C and B2")
def test_linearization_identity(record_property):
    rng = np.random.default_rng([ROOT_SEED, 1])
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n, d, k = rng.integers(5, 101), rng.integers(1, 31), rng.integers(1, 9)
        X = rng.standard_normal((n, d))
        W = rng.standard_normal((d, k))
        y = forward_one_hidden(X, W)
        err = np.linalg.norm(assemble_B(X, estimate_signs(X, W)) @ W.ravel(order="F") - y)
        worst = max(worst, err / (1 + np.linalg.norm(y)))
    for _ in range(1000):
        n, d, k, ko = rng.integers(5, 101), rng.integers(1, 31), rng.integers(1, 9), rng.integers(1, 5)
        X = rng.standard_normal((n, d))
        W1 = rng.standard_normal((d, k))
        W2 = rng.standard_normal((k, ko))
        y = forward_two_hidden(X, W1, W2)
        s1 = estimate_signs(X, W1)
        H = hidden_map(X, W1, s1)
        s2 = estimate_signs(H, W2)
        for lin in (assemble_C(X, s1, s2, W2) @ W1.ravel(order="F"), assemble_B2(H, s2) @ W2.ravel(order="F")):
            worst = max(worst, np.linalg.norm(lin - y) / (1 + np.linalg.norm(y)))
    elapsed = time.perf_counter() - start
    record_property("measured", f"max scaled error {worst:.2e}")
    assert worst <= 1e-10
    assert elapsed < 10


@criterion(2, "one AM step recovers W* from a sign-consistent start")
def test_one_step_exact_recovery(record_property):
    rng = np.random.default_rng([ROOT_SEED, 2])
    start = time.perf_counter()
    done = worst = 0
    while done < 200:
        d, k = int(rng.integers(2, 11)), int(rng.integers(1, 5))
        n = int(rng.integers(3 * d * k, 6 * d * k + 20))
        X = rng.standard_normal((n, d))
        Wstar = rng.standard_normal((d, k))
        W0 = Wstar + 1e-6 * rng.standard_normal((d, k))
        signs = estimate_signs(X, W0)
        if not np.array_equal(signs, estimate_signs(X, Wstar)):
            continue
        if np.linalg.matrix_rank(assemble_B(X, signs)) < d * k:
            continue
        W1 = am_step_one_hidden(X, forward_one_hidden(X, Wstar), W0)
        worst = max(worst, perm_dist(W1, Wstar) / np.linalg.norm(Wstar))
        done += 1
    elapsed = time.perf_counter() - start
    record_property("measured", f"max relative distance {worst:.2e}")
    assert worst <= 1e-8
    assert elapsed < 10


@criterion(3, "AM from a 0.9-perturbed start converges within 10 iterations")
def test_linear_convergence(record_property):
    spec = ExperimentSpec(
        "losscurve", Variant.ONE_HIDDEN, ROOT_SEED, inits=(InitSpec("perturbed", delta=0.9),),
        d=(20,), k=(5,), n=(2000,), trials=50, T=10,
    )
    start = time.perf_counter()
    result = run_experiment(spec)
    elapsed = time.perf_counter() - start
    successes = sum(r.success for r in result.trials)
    monotone = 0
    for r in result.trials:
        teacher = make_teacher(spec, r.point, trial_seed(spec, r.point, r.trial).child(0))
        scale = np.linalg.norm(teacher.W1)
        dists = [0.9 * scale] + [t.param_dist for t in r.trace]
        ok = True
        for prev, cur in zip(dists, dists[1:]):
            if prev <= 1e-10 * scale:
                break
            ok &= cur < prev
        monotone += ok
    record_property("measured", f"{successes}/50 recovered, {monotone}/50 strictly contracting")
    assert successes >= 45
    assert monotone == 50
    assert elapsed < 120


@criterion(4, "single-neuron phase transition at three grid points")
def test_single_neuron_phase(record_property):
    targets = {(25, 100): (1.0, 0.05), (200, 400): (0.6, 0.15), (50, 50): (0.0, 0.05)}
    start = time.perf_counter()
    measured = {}
    for (d, n) in targets:
        spec = ExperimentSpec("phase", Variant.SINGLE_NEURON, ROOT_SEED, d=(d,), n=(n,), trials=100)
        measured[(d, n)] = _prob(run_experiment(spec))
    elapsed = time.perf_counter() - start
    record_property("measured", ", ".join(f"(d={d}, n={n}): {p:.2f}" for (d, n), p in measured.items()))
    for key, (target, tol) in targets.items():
        assert abs(measured[key] - target) <= tol, key
    assert elapsed < 600


@criterion(5, "AM beats GD from a small random start (d=20, k=6, n=190)")
def test_am_vs_gd(record_property):
    spec = ExperimentSpec(
        "phase", Variant.ONE_HIDDEN, ROOT_SEED, algos=("am", "gd"), inits=(InitSpec("random", scale=1e-4),),
        d=(20,), k=(6,), n=(190,), trials=50, eta=0.1,
    )
    start = time.perf_counter()
    result = run_experiment(spec)
    elapsed = time.perf_counter() - start
    am, gd = _prob(result, "am"), _prob(result, "gd")
    record_property("measured", f"AM {am:.2f}, GD {gd:.2f}")
    assert am >= 0.6
    assert gd <= 0.35
    assert elapsed < 900


@criterion(6, "identity start for skipped connections")
def test_skipped_identity(record_property):
    def run(init, k, n):
        spec = ExperimentSpec(
            "phase", Variant.SKIPPED, ROOT_SEED, inits=(InitSpec(init, scale=1e-4),),
            d=(20,), k=(k,), n=(n,), trials=20, gamma=3.0,
        )
        return _prob(run_experiment(spec))

    start = time.perf_counter()
    ident = run("identity", 5, 200)
    rand = run("random", 15, 1000)
    elapsed = time.perf_counter() - start
    record_property("measured", f"identity K=5: {ident:.2f}, random K=15: {rand:.2f}")
    assert ident >= 0.9
    assert rand <= 0.1
    assert elapsed < 600


@criterion(7, "two-hidden-layer recovery and training loss")
def test_two_hidden(record_property):
    init = InitSpec("perturbed", delta=0.2, norm="spectral")
    phase = ExperimentSpec(
        "twohidden", Variant.TWO_HIDDEN, ROOT_SEED, inits=(init,), d=(20,), k=(3,), k_o=(2,), n=(1500,), trials=10,
    )
    curve = ExperimentSpec(
        "losscurve", Variant.TWO_HIDDEN, ROOT_SEED, inits=(init,), d=(20,), k=(3,), k_o=(2,), n=(2000,), trials=1,
    )
    start = time.perf_counter()
    prob = _prob(run_experiment(phase))
    trace = run_experiment(curve).trials[0].trace
    point = GridPoint("am", "perturbed", 20, 3, 2, 2000)
    seed = trial_seed(curve, point, 0)
    data = make_dataset(make_teacher(curve, point, seed.child(0)), 2000, seed.child(1))
    best = min(t.residual for t in trace) / np.linalg.norm(data.y)
    elapsed = time.perf_counter() - start
    record_property("measured", f"recovery {prob:.2f} at n=1500, best residual/||y|| {best:.2e} in {len(trace)} its")
    assert prob >= 0.8
    assert len(trace) <= 10 and best < 1e-10
    assert elapsed < 300


@criterion(8, "gradient matches central finite differences")
def test_gradient_oracle(record_property):
    rng = np.random.default_rng([ROOT_SEED, 8])
    start = time.perf_counter()
    h = 1e-6
    checked, worst = 0, 0.0
    while checked < 100:
        n, d, k = int(rng.integers(5, 40)), int(rng.integers(1, 8)), int(rng.integers(1, 5))
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        W = rng.standard_normal((d, k))
        # stay well clear of the ReLU kinks so the difference quotient is exact up to rounding
        if np.min(np.abs(X @ W)) < 10 * h * np.abs(X).max():
            continue
        G = grad_one_hidden(X, y, W)
        fd = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            E = np.zeros_like(W)
            E[idx] = h
            fd[idx] = (loss(X, y, W + E) - loss(X, y, W - E)) / (2 * h)
        worst = max(worst, np.linalg.norm(G - fd) / np.linalg.norm(fd))
        checked += 1
    elapsed = time.perf_counter() - start
    record_property("measured", f"max relative error {worst:.2e}")
    assert worst < 1e-5
    assert elapsed < 5


@criterion(9, "spectral bound sigma_max(B) <= sqrt(k) sigma_max(X)")
def test_spectral_bound(record_property):
    rng = np.random.default_rng([ROOT_SEED, 9])
    start = time.perf_counter()
    worst = -np.inf
    for _ in range(100):
        n, d, k = int(rng.integers(5, 80)), int(rng.integers(1, 20)), int(rng.integers(1, 8))
        X = rng.standard_normal((n, d))
        signs = rng.random((n, k)) < rng.random()
        gap = np.linalg.norm(assemble_B(X, signs), 2) - np.sqrt(k) * np.linalg.norm(X, 2)
        worst = max(worst, gap)
    elapsed = time.perf_counter() - start
    record_property("measured", f"max sigma(B) - sqrt(k) sigma(X) = {worst:.2e}")
    assert worst <= 1e-10
    assert elapsed < 10


@criterion(10, "assignment solver equals exhaustive permutation search")
def test_permutation_oracle(record_property):
    rng = np.random.default_rng([ROOT_SEED, 10])
    start = time.perf_counter()
    mismatches = 0
    for i in range(200):
        k = 1 + i % 6
        W = rng.standard_normal((int(rng.integers(1, 8)), k))
        Wref = rng.standard_normal(W.shape)
        cost = column_cost(W, Wref)
        fast = cost[np.arange(k), perm_match(W, Wref)].sum()
        slow = cost[np.arange(k), perm_match(W, Wref, exhaustive=True)].sum()
        mismatches += not np.isclose(fast, slow, rtol=1e-12, atol=1e-12)
    elapsed = time.perf_counter() - start
    record_property("measured", f"{mismatches} mismatches in 200 pairs")
    assert mismatches == 0
    assert elapsed < 10


@criterion(11, "tensor initialization span quality")
def test_tensor_init(record_property):
    threshold = json.loads((FIXTURES / "tensor_init_threshold.json").read_text())["threshold_rad"]
    start = time.perf_counter()
    medians = []
    for n in (500, 2000, 20000):
        angles = []
        for t in range(20):
            seed = RngSeed(ROOT_SEED, t, key=(11, n))
            teacher = one_hidden_teacher(10, 2, seed.child(0))
            data = make_dataset(teacher, n, seed.child(1))
            angles.append(subspace_angle(init_tensor(data.X, data.y, 2), teacher.W1))
        medians.append(float(np.median(angles)))
    elapsed = time.perf_counter() - start
    record_property("measured", "median angles " + ", ".join(f"{m:.3f}" for m in medians) + f" (threshold {threshold})")
    assert medians[-1] < threshold
    assert medians[0] > medians[1] > medians[2]
    assert elapsed < 120


@criterion(12, "byte-identical CSV on rerun and with --jobs 2")
def test_determinism(tmp_path, record_property):
    specs = [
        ExperimentSpec("phase", Variant.SINGLE_NEURON, ROOT_SEED, d=(10, 20), n=(20, 40), trials=4),
        ExperimentSpec("phase", Variant.ONE_HIDDEN, ROOT_SEED, algos=("am", "gd"),
                       inits=(InitSpec("random"), InitSpec("tensor")), d=(10,), k=(3,), n=(80,), trials=3, eta=0.1),
        ExperimentSpec("phase", Variant.SKIPPED, ROOT_SEED, inits=(InitSpec("identity"),), d=(10,), k=(4,),
                       n=(100,), trials=3),
        ExperimentSpec("losscurve", Variant.TWO_HIDDEN, ROOT_SEED, inits=(InitSpec("perturbed", 0.2, "spectral"),),
                       d=(8,), k=(3,), k_o=(2,), n=(300,), trials=3),
    ]
    identical = 0
    for i, spec in enumerate(specs):
        outputs = [
            write_csv(run_experiment(spec, jobs=jobs), tmp_path / f"{i}_{j}.csv").read_bytes()
            for j, jobs in enumerate((1, 1, 2))
        ]
        identical += outputs[0] == outputs[1] == outputs[2]
    record_property("measured", f"{identical}/{len(specs)} experiments byte-identical")
    assert identical == len(specs)
