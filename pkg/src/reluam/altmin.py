"""Alternating minimization drivers.

Each iteration freezes the activation pattern of the current weights,
which turns the network into a linear model, and then re-fits the weights
by minimum-norm least squares.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from reluam.linearize import (
    assemble_B,
    assemble_B2,
    assemble_C,
    estimate_signs,
    hidden_map,
    sign_flips,
)
from reluam.lsq import solve_min_norm_lsq
from reluam.metrics import perm_dist, two_hidden_recovery
from reluam.model import (
    _as_matrix,
    _as_weights,
    forward_one_hidden,
    forward_two_hidden,
    identity_columns,
)

RESIDUAL_STOP = 1e-12


@dataclass(frozen=True)
class AmParams:
    max_iterations: int = 50
    early_stop_tol: float = 1e-12
    record_trace: bool = True
    rcond: Optional[float] = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.early_stop_tol < 0:
            raise ValueError("early_stop_tol must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    residual: float
    param_dist: float
    sign_flips: int
    wall_time: float


@dataclass
class ConvergenceTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    @property
    def param_dists(self) -> np.ndarray:
        return np.array([r.param_dist for r in self.records])

    @property
    def flips(self) -> np.ndarray:
        return np.array([r.sign_flips for r in self.records], dtype=int)


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    denom = np.linalg.norm(old)
    diff = np.linalg.norm(new - old)
    if denom == 0:
        return 0.0 if diff == 0 else np.inf
    return diff / denom


def am_step_one_hidden(X, y, W, rcond=None) -> np.ndarray:
    """One sign-estimation + least-squares update of the hidden weights."""
    W = _as_weights(W)
    signs = estimate_signs(X, W)
    return _lsq_update(X, y, signs, W.shape, rcond)


def _lsq_update(X, y, signs, shape, rcond):
    B = assemble_B(X, signs)
    sol = solve_min_norm_lsq(B, y, rcond=rcond)
    return sol.x.reshape(shape, order="F")


def train_one_hidden(
    X,
    y,
    W0,
    params: AmParams = AmParams(),
    teacher: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, ConvergenceTrace]:
    """Run the alternating minimization for a one-hidden-layer network.

    Parameters
    ----------
    X, y : arrays
        Samples ``(n, d)`` and labels ``(n,)``.
    W0 : array_like, shape (d, k)
        Starting weights; a vector is a single neuron.
    params : AmParams
    teacher : ndarray, optional
        Ground-truth weights, only used to fill ``param_dist`` in the trace.

    Returns
    -------
    W : ndarray, shape (d, k)
    trace : ConvergenceTrace
        One record per completed iteration.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    W = _as_weights(W0).copy()
    ynorm = np.linalg.norm(y)
    trace = ConvergenceTrace()
    prev_signs = None
    t0 = time.perf_counter()
    for t in range(params.max_iterations):
        signs = estimate_signs(X, W)
        W_new = _lsq_update(X, y, signs, W.shape, params.rcond)
        res = float(np.linalg.norm(forward_one_hidden(X, W_new) - y))
        if params.record_trace:
            dist = np.nan
            if teacher is not None:
                dist = perm_dist(W_new, teacher)
            flips = 0 if prev_signs is None else sign_flips(prev_signs, signs)
            trace.append(TraceRecord(t + 1, res, float(dist), flips, time.perf_counter() - t0))
        prev_signs = signs
        change = _relative_change(W_new, W)
        W = W_new
        if change <= params.early_stop_tol or res <= RESIDUAL_STOP * ynorm:
            break
    return W, trace


def train_skipped(
    X,
    y,
    support: Sequence[int],
    params: AmParams = AmParams(),
    teacher: Optional[np.ndarray] = None,
    W0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, ConvergenceTrace]:
    """Alternating minimization on the effective weights ``W + I_S``.

    Starts from ``I_S`` unless ``W0`` (effective weights) is given.
    ``teacher`` is the true effective weight matrix. Returns the learned
    effective weights; subtract ``I_S`` for the residual part.
    """
    X = _as_matrix(X)
    I_S = identity_columns(support, X.shape[1])
    start = I_S if W0 is None else _as_weights(W0)
    if start.shape != I_S.shape:
        raise ValueError(f"initial weights {start.shape} do not match support size {I_S.shape[1]}")
    return train_one_hidden(X, y, start, params, teacher=teacher)


def am_step_two_hidden(X, y, W1, W2, rcond=None) -> Tuple[np.ndarray, np.ndarray]:
    """One sweep of the two-hidden-layer scheme (W1 update, then W2 update)."""
    W1_new, W2_new, _, _ = _two_hidden_sweep(
        _as_matrix(X), np.asarray(y, dtype=float), _as_weights(W1, "W1"), _as_weights(W2, "W2"), rcond
    )
    return W1_new, W2_new


def _two_hidden_sweep(X, y, W1, W2, rcond):
    s1 = estimate_signs(X, W1)
    H = hidden_map(X, W1, s1)
    s2 = estimate_signs(H, W2)
    C = assemble_C(X, s1, s2, W2)
    W1_new = solve_min_norm_lsq(C, y, rcond=rcond).x.reshape(W1.shape, order="F")
    # the W2 fit reuses the frozen states with the freshly updated W1
    H_new = hidden_map(X, W1_new, s1)
    B2 = assemble_B2(H_new, s2)
    W2_new = solve_min_norm_lsq(B2, y, rcond=rcond).x.reshape(W2.shape, order="F")
    return W1_new, W2_new, s1, s2


def train_two_hidden(
    X,
    y,
    W1_0,
    W2_0,
    params: AmParams = AmParams(max_iterations=10),
    teacher: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, ConvergenceTrace]:
    """Alternating minimization for ``sigma(sigma(X W1) W2) 1``.

    ``param_dist`` in the trace is the canonical distance of
    :func:`reluam.metrics.two_hidden_recovery` (unnormalized). Sign flips
    count both layers.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    W1 = _as_weights(W1_0, "W1").copy()
    W2 = _as_weights(W2_0, "W2").copy()
    ynorm = np.linalg.norm(y)
    trace = ConvergenceTrace()
    prev = None
    t0 = time.perf_counter()
    for t in range(params.max_iterations):
        W1_new, W2_new, s1, s2 = _two_hidden_sweep(X, y, W1, W2, params.rcond)
        res = float(np.linalg.norm(forward_two_hidden(X, W1_new, W2_new) - y))
        if params.record_trace:
            dist = np.nan
            if teacher is not None:
                dist = two_hidden_recovery(W1_new, W2_new, *teacher).dist
            flips = 0 if prev is None else sign_flips(prev[0], s1) + sign_flips(prev[1], s2)
            trace.append(TraceRecord(t + 1, res, float(dist), flips, time.perf_counter() - t0))
        prev = (s1, s2)
        old = np.concatenate([W1.ravel(), W2.ravel()])
        new = np.concatenate([W1_new.ravel(), W2_new.ravel()])
        W1, W2 = W1_new, W2_new
        if _relative_change(new, old) <= params.early_stop_tol or res <= RESIDUAL_STOP * ynorm:
            break
    return W1, W2, trace
