"""Minimum-norm least squares for the weight update of each alternation.

The operators can lose column rank (a neuron that is inactive on every
sample contributes an all-zero block), so the solver is SVD based with an
explicit rank cut-off instead of the normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class LsqSolution:
    x: np.ndarray
    residual_norm: float
    effective_rank: int


def rank_tolerance(A: np.ndarray, smax: Optional[float] = None) -> float:
    """Default cut-off ``max(m, p) * sigma_max * eps``."""
    if smax is None:
        smax = np.linalg.norm(A, 2) if A.size else 0.0
    return max(A.shape) * smax * np.finfo(float).eps


def residual(A, x, b) -> float:
    """``||A x - b||_2``."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape != (b.shape[0], x.shape[0]):
        raise ValueError(f"shape mismatch: A {A.shape}, x {x.shape}, b {b.shape}")
    return float(np.linalg.norm(A @ x - b))


def solve_min_norm_lsq(A, b, rcond: Optional[float] = None) -> LsqSolution:
    """Pseudo-inverse solution of ``min ||A x - b||``.

    Parameters
    ----------
    A : array_like, shape (m, p)
    b : array_like, shape (m,)
    rcond : float, optional
        Relative cut-off for small singular values. Defaults to
        ``max(m, p) * eps``, i.e. an absolute cut-off of
        ``max(m, p) * sigma_max * eps``.

    Returns
    -------
    LsqSolution
        ``residual_norm`` is recomputed from ``A``, ``x`` and ``b``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"A must be a non-empty matrix, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise ValueError(f"b must have shape ({A.shape[0]},), got {b.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("least-squares input contains non-finite entries")
    if rcond is None:
        rcond = max(A.shape) * np.finfo(float).eps
    x, _, rank, _ = np.linalg.lstsq(A, b, rcond=rcond)
    return LsqSolution(x=x, residual_norm=residual(A, x, b), effective_rank=int(rank))
