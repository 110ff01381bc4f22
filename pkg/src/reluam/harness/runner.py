"""Monte-Carlo execution of experiment grids."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from reluam import datagen
from reluam.altmin import AmParams, train_one_hidden, train_two_hidden
from reluam.datagen import RngSeed
from reluam.gd import DivergenceError, GdParams, train_gd
from reluam.harness.config import ExperimentSpec, GridPoint
from reluam.initializers import (
    init_identity_skipped,
    init_perturbed,
    init_scaled_random,
    init_tensor,
    init_zero,
)
from reluam.metrics import recovery_success, two_hidden_recovery
from reluam.model import TeacherNetwork, Variant

# BLAS threads per trial; fixed so results do not depend on --jobs
BLAS_THREADS = 1

_ARCH_CODE = {
    Variant.SINGLE_NEURON: 1,
    Variant.ONE_HIDDEN: 2,
    Variant.SKIPPED: 3,
    Variant.TWO_HIDDEN: 4,
}


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    residual: float
    param_dist: float


@dataclass(frozen=True)
class TrialResult:
    point: GridPoint
    trial: int
    success: bool
    relative_error: float
    iterations_used: int
    wall_time: float
    diverged: bool = False
    trace: Tuple[TracePoint, ...] = ()


@dataclass(frozen=True)
class PhaseRow:
    arch: str
    algo: str
    init: str
    d: int
    k: int
    k_o: int
    n: int
    trials: int
    successes: int
    probability: float


@dataclass(frozen=True)
class LossRow:
    arch: str
    algo: str
    init: str
    d: int
    k: int
    n: int
    trial: int
    iteration: int
    residual: float
    param_dist: float


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    trials: List[TrialResult] = field(default_factory=list)

    @property
    def schema(self) -> str:
        return "loss" if self.spec.kind.is_loss else "phase"

    def phase_rows(self) -> List[PhaseRow]:
        counts = {}
        for r in self.trials:
            counts.setdefault(r.point, [0, 0])
            counts[r.point][0] += int(r.success)
            counts[r.point][1] += 1
        arch = self.spec.arch.value
        return [
            PhaseRow(arch, p.algo, p.init, p.d, p.k, p.k_o, p.n, total, succ, succ / total)
            for p, (succ, total) in sorted(counts.items())
        ]

    def loss_rows(self) -> List[LossRow]:
        arch = self.spec.arch.value
        rows = []
        for r in sorted(self.trials, key=lambda r: (r.point, r.trial)):
            p = r.point
            rows.extend(
                LossRow(arch, p.algo, p.init, p.d, p.k, p.n, r.trial, t.iteration, t.residual, t.param_dist)
                for t in r.trace
            )
        return rows

    def rows(self):
        return self.loss_rows() if self.spec.kind.is_loss else self.phase_rows()


def trial_seed(spec: ExperimentSpec, point: GridPoint, trial_index: int) -> RngSeed:
    # algo and init are left out of the key so that all methods see the same data
    key = (_ARCH_CODE[spec.arch], point.d, point.k, point.k_o, point.n)
    return RngSeed(spec.seed, trial_index, key)


def make_teacher(spec: ExperimentSpec, point: GridPoint, seed: RngSeed) -> TeacherNetwork:
    arch = spec.arch
    if arch is Variant.SINGLE_NEURON:
        return datagen.single_neuron_teacher(point.d, seed)
    if arch is Variant.ONE_HIDDEN:
        return datagen.one_hidden_teacher(point.d, point.k, seed, kappa=spec.kappa)
    if arch is Variant.SKIPPED:
        return datagen.skipped_teacher(point.d, point.k, point.n, seed, gamma=spec.gamma)
    return datagen.two_hidden_teacher(point.d, point.k, point.k_o, seed)


def _initial_weights(spec, point, teacher, X, y, seed: RngSeed):
    init = spec.init_spec(point.init)
    d, k = point.d, point.k
    if teacher.variant is Variant.TWO_HIDDEN:
        if init.kind == "perturbed":
            return (
                init_perturbed(teacher.W1, init.delta, seed.child(0), norm=init.norm),
                init_perturbed(teacher.W2, init.delta, seed.child(1), norm=init.norm),
            )
        if init.kind == "random":
            return (
                init_scaled_random(d, k, init.scale, seed.child(0)),
                init_scaled_random(k, point.k_o, init.scale, seed.child(1)),
            )
        if init.kind == "zero":
            return init_zero(d, k), init_zero(k, point.k_o)
        raise ValueError(f"init {init.kind!r} is not available for two hidden layers")
    if init.kind == "zero":
        return init_zero(d, k)
    if init.kind == "perturbed":
        return init_perturbed(teacher.effective_weights, init.delta, seed, norm=init.norm)
    if init.kind == "random":
        return init_scaled_random(d, k, init.scale, seed)
    if init.kind == "identity":
        return init_identity_skipped(teacher.support, d)
    return init_tensor(X, y, k, C_mult=init.c_mult)


def run_trial(spec: ExperimentSpec, point: GridPoint, trial_index: int) -> TrialResult:
    """Build the teacher and data for one trial, train, and score the result."""
    start = time.perf_counter()
    seed = trial_seed(spec, point, trial_index)
    teacher = make_teacher(spec, point, seed.child(0))
    data = datagen.make_dataset(teacher, point.n, seed.child(1))
    X, y = data.X, data.y
    W0 = _initial_weights(spec, point, teacher, X, y, seed.child(2))
    T = spec.iterations(point.algo)
    want_dist = spec.kind.is_loss
    diverged = False

    if teacher.variant is Variant.TWO_HIDDEN:
        truth = (teacher.W1, teacher.W2)
        W1, W2, trace = train_two_hidden(
            X, y, *W0, AmParams(T, rcond=spec.rcond), teacher=truth if want_dist else None
        )
        report = two_hidden_recovery(W1, W2, *truth, threshold=spec.threshold)
    else:
        target = teacher.effective_weights
        ref = target if want_dist else None
        if point.algo == "am":
            W, trace = train_one_hidden(X, y, W0, AmParams(T, rcond=spec.rcond), teacher=ref)
        else:
            try:
                W, trace = train_gd(X, y, W0, GdParams(spec.eta, T), teacher=ref)
            except DivergenceError as exc:
                W, trace, diverged = None, exc.trace, True
        report = None if diverged else recovery_success(W, target, threshold=spec.threshold)

    points = tuple(TracePoint(r.iteration, r.residual, r.param_dist) for r in trace) if want_dist else ()
    return TrialResult(
        point=point,
        trial=trial_index,
        success=bool(report.success) if report else False,
        relative_error=float(report.relative_error) if report else float("inf"),
        iterations_used=len(trace),
        wall_time=time.perf_counter() - start,
        diverged=diverged,
        trace=points,
    )


def _run_task(task):
    spec, point, trial = task
    return run_trial(spec, point, trial)


def _worker_init():
    threadpool_limits(BLAS_THREADS)


def default_jobs() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1))


def run_experiment(spec: ExperimentSpec, jobs: Optional[int] = None) -> ExperimentResult:
    """Run every (grid point, trial) pair and collect the results in grid order.

    Trials are independent; with ``jobs > 1`` they run in worker processes.
    Each trial owns its random stream and BLAS is pinned to one thread, so
    the output does not depend on ``jobs``.
    """
    if jobs is None:
        jobs = spec.jobs if spec.jobs is not None else default_jobs()
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    tasks = [(spec, p, t) for p in spec.points() for t in range(spec.trials)]
    if jobs == 1 or len(tasks) == 1:
        with threadpool_limits(BLAS_THREADS):
            results = [_run_task(task) for task in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=chunk))
    results.sort(key=lambda r: (r.point, r.trial))
    return ExperimentResult(spec, results)
