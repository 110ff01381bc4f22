"""Plain gradient descent on the squared loss, as a baseline for AM."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from reluam.altmin import RESIDUAL_STOP, ConvergenceTrace, TraceRecord, _relative_change
from reluam.linearize import sign_flips
from reluam.metrics import perm_dist
from reluam.model import _as_matrix, _as_weights, relu

DIVERGENCE_FACTOR = 1e6


class DivergenceError(RuntimeError):
    """Raised when the loss blows up past ``DIVERGENCE_FACTOR`` times its start value.

    ``trace`` holds the records completed before the blow-up.
    """

    def __init__(self, message, iteration=0, trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace if trace is not None else ConvergenceTrace()


@dataclass(frozen=True)
class GdParams:
    eta: float
    max_iterations: int = 200
    early_stop_tol: float = 1e-12
    record_trace: bool = True

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"step size must be positive, got {self.eta}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def _check(X, y, W):
    X = _as_matrix(X)
    W = _as_weights(W)
    y = np.asarray(y, dtype=float)
    if X.shape[1] != W.shape[0] or y.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}, W {W.shape}")
    return X, y, W


def loss(X, y, W) -> float:
    """``||sigma(X W) 1 - y||^2``."""
    X, y, W = _check(X, y, W)
    r = relu(X @ W).sum(axis=1) - y
    return float(r @ r)


def grad_one_hidden(X, y, W) -> np.ndarray:
    """Gradient of :func:`loss`; the kink at 0 uses the active (>= 0) branch."""
    X, y, W = _check(X, y, W)
    Z = X @ W
    r = np.maximum(Z, 0.0).sum(axis=1) - y
    return 2.0 * X.T @ ((Z >= 0) * r[:, None])


def train_gd(
    X,
    y,
    W0,
    params: GdParams,
    teacher: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, ConvergenceTrace]:
    """Constant-step gradient descent with the same stopping rules as AM.

    Raises
    ------
    DivergenceError
        If the loss exceeds ``1e6`` times the initial loss or turns
        non-finite.
    """
    X, y, W = _check(X, y, W0)
    W = W.copy()
    ynorm = np.linalg.norm(y)
    trace = ConvergenceTrace()
    Z = X @ W
    r = np.maximum(Z, 0.0).sum(axis=1) - y
    start_loss = float(r @ r)
    limit = DIVERGENCE_FACTOR * max(start_loss, np.finfo(float).tiny)
    prev_signs = None
    t0 = time.perf_counter()
    for t in range(params.max_iterations):
        signs = Z >= 0
        G = 2.0 * X.T @ (signs * r[:, None])
        W_new = W - params.eta * G
        Z = X @ W_new
        r = np.maximum(Z, 0.0).sum(axis=1) - y
        cur = float(r @ r)
        if not np.isfinite(cur) or cur > limit:
            raise DivergenceError(
                f"loss {cur:.3g} at iteration {t + 1} exceeds {DIVERGENCE_FACTOR:g} x initial {start_loss:.3g}",
                iteration=t + 1,
                trace=trace,
            )
        res = float(np.sqrt(cur))
        if params.record_trace:
            dist = perm_dist(W_new, teacher) if teacher is not None else np.nan
            flips = 0 if prev_signs is None else sign_flips(prev_signs, signs)
            trace.append(TraceRecord(t + 1, res, float(dist), flips, time.perf_counter() - t0))
        prev_signs = signs
        change = _relative_change(W_new, W)
        W = W_new
        if change <= params.early_stop_tol or res <= RESIDUAL_STOP * ynorm:
            break
    return W, trace
