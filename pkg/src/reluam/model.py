"""Teacher architectures and exact forward evaluation.

All weight matrices are dense ``(d, k)`` arrays whose columns are the
hidden neurons. Flattening with ``order="F"`` stacks the columns, which
is the block order used by the linearized operators.

Support indices for skipped connections are 0-based.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class Variant(str, enum.Enum):
    SINGLE_NEURON = "single"
    ONE_HIDDEN = "onehidden"
    SKIPPED = "skipped"
    TWO_HIDDEN = "twohidden"


def relu(v):
    """Elementwise ``max(v, 0)``."""
    return np.maximum(v, 0.0)


def _as_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    return X


def _as_weights(W, name="W"):
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {W.shape}")
    return W


def check_support(support: Sequence[int], d: int) -> np.ndarray:
    S = np.asarray(support)
    if S.ndim != 1 or S.size == 0:
        raise ValueError("support must be a non-empty 1-D sequence of indices")
    if not np.issubdtype(S.dtype, np.integer):
        raise ValueError("support indices must be integers")
    if S.size > d:
        raise ValueError(f"support has {S.size} entries but d = {d}")
    if S.min() < 0 or S.max() >= d:
        raise ValueError(f"support indices must lie in [0, {d - 1}]")
    if np.unique(S).size != S.size:
        raise ValueError("support indices must be distinct")
    return S.astype(np.intp)


def identity_columns(support: Sequence[int], d: int) -> np.ndarray:
    """Return ``I_S``: the ``(d, k)`` matrix whose column q is ``e_{S[q]}``."""
    S = check_support(support, d)
    I_S = np.zeros((d, S.size))
    I_S[S, np.arange(S.size)] = 1.0
    return I_S


def forward_one_hidden(X, W):
    """Evaluate ``sigma(X W) 1_k``.

    Parameters
    ----------
    X : array_like, shape (n, d)
        Samples as rows.
    W : array_like, shape (d, k) or (d,)
        Hidden weights; a vector is treated as a single neuron.

    Returns
    -------
    ndarray, shape (n,)
    """
    X = _as_matrix(X)
    W = _as_weights(W)
    if X.shape[1] != W.shape[0]:
        raise ValueError(f"dimension mismatch: X is {X.shape}, W is {W.shape}")
    return relu(X @ W).sum(axis=1)


def forward_skipped(X, W, support):
    """Evaluate the skipped-connection model ``sigma(X (W + I_S)) 1_k``."""
    X = _as_matrix(X)
    W = _as_weights(W)
    I_S = identity_columns(support, W.shape[0])
    if I_S.shape != W.shape:
        raise ValueError(f"support of size {I_S.shape[1]} does not match W with k = {W.shape[1]}")
    return forward_one_hidden(X, W + I_S)


def forward_two_hidden(X, W1, W2):
    """Evaluate ``sigma(sigma(X W1) W2) 1``.

    ``W1`` is ``(d1, d2)`` and ``W2`` is ``(d2, d3)``; the output layer is
    fixed to the all-ones vector.
    """
    X = _as_matrix(X)
    W1 = _as_weights(W1, "W1")
    W2 = _as_weights(W2, "W2")
    if X.shape[1] != W1.shape[0] or W1.shape[1] != W2.shape[0]:
        raise ValueError(
            f"dimension mismatch: X {X.shape}, W1 {W1.shape}, W2 {W2.shape}"
        )
    return relu(relu(X @ W1) @ W2).sum(axis=1)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = _as_matrix(self.X)
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(f"y must have {X.shape[0]} entries, got shape {y.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class TeacherNetwork:
    """Ground-truth network of one of the four supported variants.

    For ``SKIPPED`` the stored ``W1`` is the residual part; the effective
    first-layer weights are ``W1 + I_S``.
    """

    variant: Variant
    W1: np.ndarray
    W2: Optional[np.ndarray] = None
    support: Optional[np.ndarray] = None

    def __post_init__(self):
        variant = Variant(self.variant)
        W1 = _as_weights(self.W1, "W1")
        W2 = self.W2
        support = self.support
        if variant is Variant.SINGLE_NEURON and W1.shape[1] != 1:
            raise ValueError("single-neuron teacher needs a d-vector")
        if variant is Variant.SKIPPED:
            if support is None:
                raise ValueError("skipped teacher needs a support")
            support = check_support(support, W1.shape[0])
            if support.size != W1.shape[1]:
                raise ValueError("support size must equal k")
        elif support is not None:
            raise ValueError(f"{variant.value} teacher takes no support")
        if variant is Variant.TWO_HIDDEN:
            if W2 is None:
                raise ValueError("two-hidden teacher needs W2")
            W2 = _as_weights(W2, "W2")
            if W2.shape[0] != W1.shape[1]:
                raise ValueError(f"inner dimensions disagree: W1 {W1.shape}, W2 {W2.shape}")
        elif W2 is not None:
            raise ValueError(f"{variant.value} teacher takes no W2")
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "W2", W2)
        object.__setattr__(self, "support", support)

    @property
    def d(self) -> int:
        return self.W1.shape[0]

    @property
    def k(self) -> int:
        return self.W1.shape[1]

    @property
    def effective_weights(self) -> np.ndarray:
        if self.variant is Variant.SKIPPED:
            return self.W1 + identity_columns(self.support, self.d)
        return self.W1

    def forward(self, X) -> np.ndarray:
        if self.variant is Variant.TWO_HIDDEN:
            return forward_two_hidden(X, self.W1, self.W2)
        if self.variant is Variant.SKIPPED:
            return forward_skipped(X, self.W1, self.support)
        return forward_one_hidden(X, self.W1)
