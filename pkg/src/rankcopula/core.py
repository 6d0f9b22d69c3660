"""Foundational types: bivariate samples, joint ranks, grid densities, streams."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

MASK64 = (1 << 64) - 1


class TiesDetected(ValueError):
    """Raised when a coordinate contains exactly repeated values."""


class AllSubsamplesTied(RuntimeError):
    """Every drawn subsample contained a tie; the data is unusable for ranks."""


@dataclass(frozen=True, eq=False)
class BivariateSample:
    """N paired real observations."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=np.float64).ravel()
        ys = np.array(self.ys, dtype=np.float64).ravel()
        if xs.shape != ys.shape:
            raise ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})")
        if xs.size < 2:
            raise ValueError(f"need at least 2 observations, got {xs.size}")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise ValueError("sample contains NaN or infinite values")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def size(self) -> int:
        return int(self.xs.size)

    def __len__(self) -> int:
        return self.size

    def subset(self, indices) -> BivariateSample:
        idx = np.asarray(indices, dtype=np.intp)
        return BivariateSample(self.xs[idx], self.ys[idx])

    def has_ties(self) -> bool:
        return _has_dupes(self.xs) or _has_dupes(self.ys)


@dataclass(frozen=True, eq=False)
class JointRanks:
    """Ranks in 1..k of both coordinates; permutations when tie-free."""

    r: np.ndarray
    s: np.ndarray

    @property
    def k(self) -> int:
        return int(self.r.size)


def _has_dupes(v: np.ndarray) -> bool:
    sv = np.sort(v)
    return bool(np.any(sv[1:] == sv[:-1]))


def _ordinal_ranks(v: np.ndarray) -> np.ndarray:
    r = np.empty(v.size, dtype=np.int64)
    r[np.argsort(v, kind="stable")] = np.arange(1, v.size + 1)
    return r


def compute_ranks(sample: BivariateSample) -> JointRanks:
    """Joint ranks r_i = #{j : x_j <= x_i}, likewise for y.

    Raises
    ------
    TiesDetected
        If two xs or two ys are exactly equal. The caller decides the policy.
    """
    if _has_dupes(sample.xs):
        raise TiesDetected("tied values in the first coordinate")
    if _has_dupes(sample.ys):
        raise TiesDetected("tied values in the second coordinate")
    return JointRanks(_ordinal_ranks(sample.xs), _ordinal_ranks(sample.ys))


def dense_keys(v: np.ndarray) -> np.ndarray:
    """0-based dense ranks; tied values share a key."""
    _, inv = np.unique(v, return_inverse=True)
    return inv.astype(np.int64).ravel()


@dataclass(frozen=True, eq=False)
class DiscreteCopulaDensity:
    """Nonnegative mass on the n x n grid of rank atoms (p/n, q/n).

    ``mass[p-1, q-1]`` is the weight of the atom at rank p in x and rank q in y.
    """

    mass: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        mass = np.array(self.mass, dtype=np.float64)
        if mass.ndim != 2 or mass.shape[0] != mass.shape[1] or mass.shape[0] < 2:
            raise ValueError(f"mass must be a square grid of size >= 2, got {mass.shape}")
        if not np.isfinite(mass).all() or (mass < 0).any():
            raise ValueError("mass entries must be finite and nonnegative")
        total = mass.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"total mass {total!r} differs from 1")
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)

    @property
    def n(self) -> int:
        return int(self.mass.shape[0])

    @classmethod
    def uniform(cls, n: int) -> DiscreteCopulaDensity:
        return cls(np.full((n, n), 1.0 / (n * n)))

    @classmethod
    def from_counts(cls, counts: np.ndarray, **meta) -> DiscreteCopulaDensity:
        counts = np.asarray(counts)
        return cls(counts / counts.sum(), meta)

    def row_sums(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.mass.sum(axis=0)


@dataclass(frozen=True)
class SubsampleScheme:
    """n observations per subsample, m subsamples, 64-bit seed."""

    n: int
    m: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"subsample size must be >= 2, got {self.n}")
        if self.m < 1:
            raise ValueError(f"number of subsamples must be >= 1, got {self.m}")
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    @staticmethod
    def default_m(n: int) -> int:
        return max(100_000, 200 * n * n)

    @classmethod
    def with_default_m(cls, n: int, seed: int = 0) -> SubsampleScheme:
        return cls(n, cls.default_m(n), seed)


@dataclass
class TestOutcome:
    """Statistic, threshold and decision of one hypothesis test."""

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    threshold: float
    level: float
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def reject(self) -> bool:
        return bool(self.statistic > self.threshold)

    def as_dict(self) -> dict[str, Any]:
        return {
            "statistic": float(self.statistic),
            "threshold": float(self.threshold),
            "reject": self.reject,
            "level": float(self.level),
            **self.details,
        }


def derive_stream(seed: int, stream_index: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream_index)``.

    Philox takes a 128-bit key; the two 64-bit words are used verbatim, so the
    mapping is pure and distinct indices select disjoint key spaces.
    """
    key = np.array([int(seed) & MASK64, int(stream_index) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def spawn_seed(seed: int, *tags: int) -> int:
    """Hash a seed and integer tags into a fresh 64-bit seed (SplitMix64 chain)."""
    h = _mix64((int(seed) + 0x9E3779B97F4A7C15) & MASK64)
    for t in tags:
        h = _mix64((h ^ (int(t) & MASK64)) + 0x9E3779B97F4A7C15 & MASK64)
    return h
