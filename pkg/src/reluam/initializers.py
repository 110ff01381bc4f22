"""Starting points for the training drivers."""

from __future__ import annotations

import numpy as np

from reluam.datagen import SeedLike, as_generator
from reluam.model import _as_matrix, _as_weights, identity_columns


def init_zero(d: int, k: int) -> np.ndarray:
    return np.zeros((d, k))


def init_perturbed(Wstar, delta: float, seed: SeedLike, norm: str = "fro") -> np.ndarray:
    """Return ``W* + E`` with ``||E|| = delta ||W*||`` in the chosen norm.

    ``E`` is a Gaussian direction rescaled to the exact magnitude.
    ``norm`` is ``"fro"`` (Frobenius) or ``"spectral"`` (largest singular
    value).
    """
    Wstar = np.asarray(Wstar, dtype=float)
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    ord_ = {"fro": None, "spectral": 2}.get(norm, "bad")
    if ord_ == "bad":
        raise ValueError(f"norm must be 'fro' or 'spectral', got {norm!r}")
    if delta == 0:
        return Wstar.copy()

    def size(M):
        return np.linalg.norm(M if M.ndim == 2 else M[:, None], ord_)

    ref = size(Wstar)
    if ref == 0:
        raise ValueError("cannot scale a perturbation relative to zero weights")
    E = as_generator(seed).standard_normal(Wstar.shape)
    return Wstar + E * (delta * ref / size(E))


def init_scaled_random(d: int, k: int, scale: float, seed: SeedLike) -> np.ndarray:
    """Entries i.i.d. ``scale * N(0, 1)``."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return scale * as_generator(seed).standard_normal((d, k))


def init_identity_skipped(support, d: int) -> np.ndarray:
    """``I_S`` as the starting effective weights of a skipped-connection network."""
    return identity_columns(support, d)


def moment_matrix(X, y, variance: float | None = None) -> np.ndarray:
    """Empirical second-order moment ``sum_i y_i (x_i x_i^T - I)``.

    The samples are first standardized to unit variance, so the identity
    subtraction is the correct centering for ``N(0, variance I)`` inputs.
    ``variance`` defaults to the empirical mean of ``X**2``.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise ValueError("y must have one entry per sample")
    if variance is None:
        variance = float(np.mean(X**2))
    if not variance > 0:
        raise ValueError("input variance must be positive")
    Z = X / np.sqrt(variance)
    P = (Z * y[:, None]).T @ Z - y.sum() * np.eye(X.shape[1])
    return 0.5 * (P + P.T)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


def init_tensor(X, y, k: int, C_mult: float = 3.0, variance: float | None = None) -> np.ndarray:
    """Orthonormal estimate of the span of the teacher's hidden weights.

    Builds ``P1 = C I + P`` and ``P2 = C I - P`` from the moment matrix
    ``P`` with ``C = C_mult ||P||_2``, takes the top-k eigenvectors of each,
    pools the 2k candidates ordered by ``|eigenvalue - C|`` and
    Gram-Schmidt orthonormalizes them in that order, skipping candidates
    that are (numerically) in the span already.

    Returns
    -------
    ndarray, shape (d, k)
        Orthonormal columns. Neuron norms are not estimated.
    """
    X = _as_matrix(X)
    d = X.shape[1]
    if k > d or k < 1:
        raise ValueError(f"k must lie in [1, d = {d}], got {k}")
    if not C_mult > 2:
        raise ValueError(f"C_mult must exceed 2, got {C_mult}")
    P = moment_matrix(X, y, variance)
    C = C_mult * np.linalg.norm(P, 2)
    eye = np.eye(d)
    candidates = []
    for M in (C * eye + P, C * eye - P):
        vals, vecs = np.linalg.eigh(M)
        top = np.argsort(-np.abs(vals), kind="stable")[:k]
        candidates += [(abs(vals[i] - C), _fix_sign(vecs[:, i])) for i in top]
    candidates.sort(key=lambda c: -c[0])
    # fall back on the full eigenbasis if duplicates leave fewer than k vectors
    pool = [v for _, v in candidates] + list(np.linalg.eigh(P)[1][:, ::-1].T)

    basis = []
    for v in pool:
        r = v - sum((b @ v) * b for b in basis) if basis else v.copy()
        # second pass keeps the columns orthonormal to working precision
        r = r - sum((b @ r) * b for b in basis) if basis else r
        nrm = np.linalg.norm(r)
        if nrm < 1e-8:
            continue
        basis.append(r / nrm)
        if len(basis) == k:
            break
    return np.column_stack(basis)
