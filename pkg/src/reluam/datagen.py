"""Seeded Gaussian data and ground-truth teacher construction.

Randomness comes from numpy's PCG64 bit generator. Normal variates use
``Generator.standard_normal`` (the ziggurat method), which numpy keeps
stable across platforms for a fixed bit-generator state.

Every draw is addressed by an :class:`RngSeed`, i.e. a root seed plus a
trial index plus an optional key (e.g. the grid point). The key is fed to
``SeedSequence`` as its ``spawn_key`` so distinct addresses map to
independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from reluam.model import Dataset, TeacherNetwork, Variant


@dataclass(frozen=True)
class RngSeed:
    root: int
    trial: int = 0
    key: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.root < 0 or self.root >= 2**64:
            raise ValueError("root seed must be a 64-bit unsigned integer")
        if self.trial < 0:
            raise ValueError("trial index must be non-negative")

    def sequence(self, *stream: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            self.root, spawn_key=(*self.key, self.trial, *stream)
        )

    def generator(self, *stream: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence(*stream)))

    def child(self, *stream: int) -> "RngSeed":
        """Sub-address for one component of a trial (data, teacher, init...)."""
        return RngSeed(self.root, self.trial, (*self.key, *stream))


SeedLike = Union[RngSeed, int, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.generator()
    return RngSeed(int(seed)).generator()


def sample_gaussian_matrix(n: int, d: int, variance: float, seed: SeedLike) -> np.ndarray:
    """Draw an ``(n, d)`` matrix with i.i.d. ``N(0, variance)`` entries."""
    if n < 1 or d < 1:
        raise ValueError(f"dimensions must be positive, got ({n}, {d})")
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    rng = as_generator(seed)
    return np.sqrt(variance) * rng.standard_normal((n, d))


def _orthonormal_factor(G: np.ndarray) -> np.ndarray:
    # reduced QR with sign convention diag(R) >= 0, which makes Q unique
    Q, R = np.linalg.qr(G, mode="reduced")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs


def make_conditioned_weights(d: int, k: int, kappa: float, seed: SeedLike) -> np.ndarray:
    """Teacher weights ``U diag(s) V^T`` with singular values evenly spaced on ``[1, kappa]``.

    ``U`` (d x k) and ``V`` (k x k) are the orthonormal QR factors of
    independent Gaussian matrices. For ``k = 1`` the single singular value
    is 1.
    """
    if k > d:
        raise ValueError(f"k = {k} exceeds d = {d}")
    if k < 1:
        raise ValueError("k must be positive")
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    rng = as_generator(seed)
    U = _orthonormal_factor(rng.standard_normal((d, k)))
    V = _orthonormal_factor(rng.standard_normal((k, k)))
    sigma = np.linspace(1.0, kappa, k)
    return (U * sigma) @ V.T


def random_support(d: int, k: int, seed: SeedLike) -> np.ndarray:
    """Pick ``k`` distinct indices from ``range(d)`` uniformly, in random order."""
    if k > d:
        raise ValueError(f"k = {k} exceeds d = {d}")
    if k < 1:
        raise ValueError("k must be positive")
    rng = as_generator(seed)
    return rng.permutation(d)[:k].astype(np.intp)


def single_neuron_teacher(d: int, seed: SeedLike) -> TeacherNetwork:
    w = as_generator(seed).standard_normal(d)
    return TeacherNetwork(Variant.SINGLE_NEURON, w)


def one_hidden_teacher(d: int, k: int, seed: SeedLike, kappa: float = 1.8) -> TeacherNetwork:
    return TeacherNetwork(Variant.ONE_HIDDEN, make_conditioned_weights(d, k, kappa, seed))


def skipped_teacher(d: int, k: int, n: int, seed: SeedLike, gamma: float = 3.0) -> TeacherNetwork:
    """Residual teacher: ``W`` entries from ``gamma * N(0, 1/n)`` on a random support."""
    if isinstance(seed, np.random.Generator):
        rng_support = rng_weights = seed
    else:
        seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
        rng_support, rng_weights = seed.generator(0), seed.generator(1)
    S = random_support(d, k, rng_support)
    W = gamma * sample_gaussian_matrix(d, k, 1.0 / n, rng_weights)
    return TeacherNetwork(Variant.SKIPPED, W, support=S)


def two_hidden_teacher(d: int, k: int, k_o: int, seed: SeedLike) -> TeacherNetwork:
    rng = as_generator(seed)
    W1 = rng.standard_normal((d, k))
    W2 = rng.standard_normal((k, k_o))
    return TeacherNetwork(Variant.TWO_HIDDEN, W1, W2)


def make_dataset(teacher: TeacherNetwork, n: int, seed: SeedLike) -> Dataset:
    """Sample ``X`` with ``N(0, 1/n)`` entries and label it with the teacher (no noise)."""
    X = sample_gaussian_matrix(n, teacher.d, 1.0 / n, seed)
    return Dataset(X, teacher.forward(X))
