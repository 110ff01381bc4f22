"""Permutation-invariant distances, recovery criteria and conditioning."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.linalg import subspace_angles

from reluam.model import _as_weights


def _pair(W, Wref):
    W = _as_weights(W)
    Wref = _as_weights(Wref, "Wref")
    if W.shape != Wref.shape:
        raise ValueError(f"shape mismatch: {W.shape} vs {Wref.shape}")
    return W, Wref


def column_cost(W, Wref) -> np.ndarray:
    """``cost[q, r] = ||w_q - wref_r||^2``."""
    W, Wref = _pair(W, Wref)
    diff = W[:, :, None] - Wref[:, None, :]
    return np.einsum("dqr,dqr->qr", diff, diff)


def perm_match(W, Wref, exhaustive: bool = False) -> np.ndarray:
    """Permutation ``pi`` minimizing ``sum_q ||w_q - wref_{pi[q]}||^2``.

    Solved as a linear assignment problem (Hungarian-type solver from
    scipy). ``exhaustive=True`` enumerates all ``k!`` permutations instead
    and is only meant for small ``k``; ties go to the lexicographically
    first permutation.
    """
    cost = column_cost(W, Wref)
    if exhaustive:
        return _exhaustive_match(cost)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.intp)
    perm[rows] = cols
    return perm


def _exhaustive_match(cost: np.ndarray) -> np.ndarray:
    k = cost.shape[0]
    idx = np.arange(k)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(k)):
        c = cost[idx, perm].sum()
        if c < best_cost:
            best, best_cost = perm, c
    return np.array(best, dtype=np.intp)


def perm_dist(W, Wref, exhaustive: bool = False) -> float:
    """``min_pi ||W - Wref[:, pi]||_F``."""
    W, Wref = _pair(W, Wref)
    perm = perm_match(W, Wref, exhaustive=exhaustive)
    return float(np.linalg.norm(W - Wref[:, perm]))


@dataclass(frozen=True)
class RecoveryReport:
    permutation: np.ndarray
    dist: float
    relative_error: float
    success: bool


def recovery_success(W, Wref, threshold: float = 0.01) -> RecoveryReport:
    W, Wref = _pair(W, Wref)
    ref_norm = np.linalg.norm(Wref)
    if ref_norm == 0:
        raise ValueError("reference weights are zero; relative error undefined")
    perm = perm_match(W, Wref)
    dist = float(np.linalg.norm(W - Wref[:, perm]))
    rel = dist / ref_norm
    return RecoveryReport(perm, dist, rel, bool(rel < threshold))


def canonical_two_hidden(W1, W2):
    """Representative of the class of ``(W1, W2)`` computing the same function.

    - an output unit whose ``W2`` column is entrywise <= 0 never fires
      (hidden activations are nonnegative), so its column is zeroed;
    - a positive scale of a first-layer neuron is moved into its ``W2`` row,
      leaving unit-norm ``W1`` columns;
    - a first-layer neuron that feeds no live output unit is zeroed.
    """
    W1 = np.array(W1, dtype=float)
    W2 = np.array(W2, dtype=float)
    W2[:, np.all(W2 <= 0, axis=0)] = 0.0
    norms = np.linalg.norm(W1, axis=0)
    live = norms > 0
    W1[:, live] /= norms[live]
    W2[live, :] *= norms[live, None]
    W2[~live, :] = 0.0
    W1[:, ~np.any(W2 != 0, axis=1)] = 0.0
    return W1, W2


def two_hidden_recovery(W1, W2, W1ref, W2ref, threshold: float = 0.01) -> RecoveryReport:
    """Recovery criterion for two hidden layers, modulo the model's symmetries.

    The network is unchanged by permuting hidden units in either layer, by
    moving a positive scale between a first-layer neuron and its row of
    ``W2``, and by any change to units that can never fire. Both networks
    are mapped by :func:`canonical_two_hidden`; first-layer units are then
    matched on the stacked column ``[w1_q; W2[q, :]]`` for every ordering
    of the second-layer units. The reported permutation is the first-layer
    one. If the reference is the zero function the relative error is 0 for
    an exact match and infinite otherwise.
    """
    W1, W1ref = _pair(W1, W1ref)
    W2, W2ref = _pair(W2, W2ref)
    if W1.shape[1] != W2.shape[0]:
        raise ValueError("inner dimensions disagree")
    A1, A2 = canonical_two_hidden(W1, W2)
    R1, R2 = canonical_two_hidden(W1ref, W2ref)
    ref_norm = np.sqrt(np.sum(R1**2) + np.sum(R2**2))

    best = None
    # second-layer permutations are enumerated; k_o is small in practice
    for p2 in itertools.permutations(range(W2.shape[1])):
        R2p = R2[:, list(p2)]
        p1 = perm_match(np.vstack([A1, A2.T]), np.vstack([R1, R2p.T]))
        dist = np.sqrt(np.sum((A1 - R1[:, p1]) ** 2) + np.sum((A2 - R2p[p1, :]) ** 2))
        if best is None or dist < best[1]:
            best = (p1, float(dist))
    p1, dist = best
    if ref_norm > 0:
        rel = dist / ref_norm
    else:
        rel = 0.0 if dist == 0 else np.inf
    return RecoveryReport(p1, dist, rel, bool(rel < threshold))


def condition_stats(W) -> Tuple[float, float]:
    """Condition numbers ``kappa = s_1 / s_k`` and ``lambda = prod(s) / s_k^k``."""
    W = _as_weights(W)
    s = np.linalg.svd(W, compute_uv=False)
    k = W.shape[1]
    if s.size < k:
        raise ValueError("W must have at least as many rows as columns")
    tol = max(W.shape) * s[0] * np.finfo(float).eps
    if s[-1] <= tol:
        raise ValueError("W is rank deficient")
    kappa = s[0] / s[-1]
    lam = float(np.prod(s / s[-1]))
    return float(kappa), lam


def subspace_angle(W0, Wstar) -> float:
    """Largest principal angle (radians) between the column spans."""
    W0 = _as_weights(W0, "W0")
    Wstar = _as_weights(Wstar, "Wstar")
    if W0.shape[0] != Wstar.shape[0]:
        raise ValueError("ambient dimensions disagree")
    for M in (W0, Wstar):
        if np.linalg.matrix_rank(M) < M.shape[1]:
            raise ValueError("subspace basis is rank deficient")
    return float(np.max(subspace_angles(W0, Wstar)))
