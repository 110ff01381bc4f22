"""Activation sign states and the operators that linearize the ReLU model.

A sign state is a boolean ``(n, k)`` array; column q marks the samples
for which neuron q is active. Ties (pre-activation exactly 0) count as
active.

With the sign state frozen, the network output is linear in the weights:
``assemble_B(X, s) @ W.ravel(order="F")`` equals ``sigma(X W) 1`` whenever
``s`` matches ``W``.
"""

from __future__ import annotations

import numpy as np

from reluam.model import _as_matrix, _as_weights


def _as_signs(signs, n=None, name="signs"):
    s = np.asarray(signs)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {s.shape}")
    if s.dtype != bool:
        if not np.all((s == 0) | (s == 1)):
            raise ValueError(f"{name} entries must be 0 or 1")
        s = s.astype(bool)
    if n is not None and s.shape[0] != n:
        raise ValueError(f"{name} has {s.shape[0]} rows, expected {n}")
    return s


def estimate_signs(X, W) -> np.ndarray:
    """Return the boolean state ``X W >= 0``."""
    X = _as_matrix(X)
    W = _as_weights(W)
    if X.shape[1] != W.shape[0]:
        raise ValueError(f"dimension mismatch: X is {X.shape}, W is {W.shape}")
    return X @ W >= 0


def sign_flips(previous, current) -> int:
    """Number of entries that differ between two sign states."""
    return int(np.count_nonzero(np.asarray(previous) != np.asarray(current)))


def assemble_B(X, signs) -> np.ndarray:
    """Stack ``[diag(p_1) X ... diag(p_k) X]`` into an ``(n, d k)`` matrix."""
    X = _as_matrix(X)
    s = _as_signs(signs, X.shape[0])
    n, d = X.shape
    k = s.shape[1]
    # (n, k, d) -> (n, k*d) keeps block q contiguous, matching column-stacked vec(W)
    return (s[:, :, None] * X[:, None, :]).reshape(n, k * d)


def hidden_map(X, W1, signs1) -> np.ndarray:
    """First-layer outputs under a frozen state: column q is ``diag(p_q) X w_q``."""
    X = _as_matrix(X)
    W1 = _as_weights(W1, "W1")
    s1 = _as_signs(signs1, X.shape[0], "signs1")
    if X.shape[1] != W1.shape[0] or s1.shape[1] != W1.shape[1]:
        raise ValueError(f"shape mismatch: X {X.shape}, W1 {W1.shape}, signs1 {s1.shape}")
    return s1 * (X @ W1)


def assemble_C(X, signs1, signs2, W2) -> np.ndarray:
    """Operator that is linear in ``vec(W1)`` for the two-hidden-layer model.

    Block q is ``sum_r W2[q, r] diag(p2_r) diag(p1_q) X``; the blocks are
    concatenated horizontally, giving an ``(n, d1 d2)`` matrix.
    """
    X = _as_matrix(X)
    W2 = _as_weights(W2, "W2")
    s1 = _as_signs(signs1, X.shape[0], "signs1")
    s2 = _as_signs(signs2, X.shape[0], "signs2")
    d2, d3 = W2.shape
    if s1.shape[1] != d2 or s2.shape[1] != d3:
        raise ValueError(f"shape mismatch: signs1 {s1.shape}, signs2 {s2.shape}, W2 {W2.shape}")
    n, d1 = X.shape
    # per-sample weight of block q: sum_r W2[q, r] p2_r(i), masked by p1_q(i)
    coeff = (s2.astype(float) @ W2.T) * s1
    return (coeff[:, :, None] * X[:, None, :]).reshape(n, d2 * d1)


def assemble_B2(H, signs2) -> np.ndarray:
    """Operator linear in ``vec(W2)``: blocks ``diag(p2_r) H`` for each output unit r."""
    H = _as_matrix(H, "H")
    s2 = _as_signs(signs2, H.shape[0], "signs2")
    n, d2 = H.shape
    d3 = s2.shape[1]
    return (s2[:, :, None] * H[:, None, :]).reshape(n, d3 * d2)
