"""Parametric copulas: Frank (cdf, density, sampler, rank-based MLE), Gaussian and
Student samplers, and the half/half contamination mixture.

All samplers return an ``(count, 2)`` array of pairs strictly inside the unit square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numba import njit
from scipy import special

from .core import BivariateSample, compute_ranks

FRANK_MIN_ABS_THETA = 1e-6
FRANK_THETA_BOUND = 50.0
_HALF_ULP = 2.0 ** -53


def open_uniform(stream: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1), on a 2**-53 lattice offset by half a step."""
    return (stream.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) * _HALF_ULP


def _clip_open(u: np.ndarray) -> np.ndarray:
    return np.clip(u, np.finfo(float).tiny, 1.0 - _HALF_ULP)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta == 0.0:
        raise ValueError(f"Frank parameter must be finite and nonzero, got {theta}")
    return theta


def _check_unit(*arrays, closed=True):
    for a in arrays:
        a = np.asarray(a)
        bad = (a < 0) | (a > 1) if closed else (a <= 0) | (a >= 1)
        if np.any(bad) or np.any(np.isnan(a)):
            raise ValueError("arguments must lie in the unit interval")


def frank_cdf(u, v, theta: float):
    """C(u, v) = -(1/theta) log(1 + (e^{-theta u} - 1)(e^{-theta v} - 1) / (e^{-theta} - 1))."""
    theta = _check_theta(theta)
    _check_unit(u, v)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if theta < 0:
        out = -np.log1p(np.expm1(-theta * u) * np.expm1(-theta * v) / np.expm1(-theta)) / theta
    else:
        # the log1p argument approaches -1 for large theta; use the positive-sum form
        em = -math.expm1(-theta)
        denom = -np.exp(-theta * u) * np.expm1(-theta * v) - np.exp(-theta * v) * np.expm1(-theta * (1.0 - v))
        out = (math.log(em) - np.log(denom)) / theta
    out = np.clip(out, 0.0, np.minimum(u, v))
    return out[()] if out.ndim == 0 else out


def frank_logpdf(u, v, theta: float):
    theta = _check_theta(theta)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if theta < 0:
        # c(u, v; -t) = c(u, 1 - v; t); keeps every exponential below one
        theta, v = -theta, 1.0 - v
    em = -np.expm1(-theta)
    # 1 - e^-t - (e^-tu - 1)(e^-tv - 1) as a sum of two nonnegative terms
    denom = -np.exp(-theta * u) * np.expm1(-theta * v) - np.exp(-theta * v) * np.expm1(-theta * (1.0 - v))
    out = math.log(theta) + math.log(em) - theta * (u + v) - 2.0 * np.log(denom)
    return out[()] if out.ndim == 0 else out


def frank_pdf(u, v, theta: float):
    """Mixed partial derivative of ``frank_cdf``.

    theta (1 - e^{-theta}) e^{-theta(u+v)} / [(1 - e^{-theta}) - (1 - e^{-theta u})(1 - e^{-theta v})]^2
    """
    _check_unit(u, v, closed=False)
    return np.exp(frank_logpdf(u, v, theta))


def frank_conditional_inverse(u, w, theta: float):
    """v solving dC/du(u, v) = w."""
    theta = _check_theta(theta)
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    arg = w * np.expm1(-theta) / (w + (1.0 - w) * np.exp(-theta * u))
    return -np.log1p(arg) / theta


def frank_sample(theta: float, count: int, stream: np.random.Generator) -> np.ndarray:
    theta = _check_theta(theta)
    u = open_uniform(stream, count)
    w = open_uniform(stream, count)
    v = _clip_open(frank_conditional_inverse(u, w, theta))
    return np.column_stack([u, v])


def independence_sample(count: int, stream: np.random.Generator) -> np.ndarray:
    return open_uniform(stream, (count, 2))


def _correlated_normals(rho: float, count: int, stream: np.random.Generator) -> np.ndarray:
    if not -1.0 < rho < 1.0:
        raise ValueError(f"correlation must lie in (-1, 1), got {rho}")
    z = stream.standard_normal((count, 2))
    z[:, 1] = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
    return z


def gaussian_copula_sample(rho: float, count: int, stream: np.random.Generator) -> np.ndarray:
    z = _correlated_normals(rho, count, stream)
    return _clip_open(special.ndtr(z))


def student_copula_sample(nu: float, rho: float, count: int, stream: np.random.Generator) -> np.ndarray:
    if not nu >= 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {nu}")
    z = _correlated_normals(rho, count, stream)
    scale = np.sqrt(nu / stream.chisquare(nu, count))
    return _clip_open(special.stdtr(nu, z * scale[:, None]))


@dataclass(frozen=True)
class Frank:
    theta: float

    def __post_init__(self):
        if not abs(self.theta) >= FRANK_MIN_ABS_THETA:
            raise ValueError(f"|theta| must be >= {FRANK_MIN_ABS_THETA}, got {self.theta}")

    def sample(self, count, stream):
        return frank_sample(self.theta, count, stream)


@dataclass(frozen=True)
class Gaussian:
    rho: float

    def sample(self, count, stream):
        return gaussian_copula_sample(self.rho, count, stream)


@dataclass(frozen=True)
class StudentT:
    nu: float
    rho: float

    def sample(self, count, stream):
        return student_copula_sample(self.nu, self.rho, count, stream)


@dataclass(frozen=True)
class Independence:
    def sample(self, count, stream):
        return independence_sample(count, stream)


@dataclass(frozen=True)
class MixtureHalf:
    """Each pair comes from ``base`` with probability 1/2, else from ``contaminant``."""

    base: CopulaModel
    contaminant: CopulaModel

    def sample(self, count, stream):
        return mixture_sample(self.base, self.contaminant, count, stream)


CopulaModel = Union[Frank, Gaussian, StudentT, Independence, MixtureHalf]


def mixture_sample(base, contaminant, count: int, stream: np.random.Generator, return_labels: bool = False):
    from_base = stream.random(count) < 0.5
    k = int(from_base.sum())
    out = np.empty((count, 2))
    out[from_base] = base.sample(k, stream)
    out[~from_base] = contaminant.sample(count - k, stream)
    return (out, from_base) if return_labels else out


@dataclass(frozen=True)
class FrankFit:
    theta: float
    loglik: float
    at_bound: bool


def pseudo_observations(sample: BivariateSample) -> tuple[np.ndarray, np.ndarray]:
    """Rank surrogates r/(N+1), s/(N+1)."""
    ranks = compute_ranks(sample)
    N = sample.size
    return ranks.r / (N + 1.0), ranks.s / (N + 1.0)


@njit(cache=True)
def _frank_nll(u, v, theta):
    if theta < 0:
        theta = -theta
        flip = True
    else:
        flip = False
    em = -math.expm1(-theta)
    total = u.size * (math.log(theta) + math.log(em))
    for i in range(u.size):
        vi = 1.0 - v[i] if flip else v[i]
        denom = -math.exp(-theta * u[i]) * math.expm1(-theta * vi) - math.exp(-theta * vi) * math.expm1(-theta * (1.0 - vi))
        total -= theta * (u[i] + vi) + 2.0 * math.log(denom)
    return -total


@njit(cache=True)
def _golden_min(u, v, lo, hi, xatol):
    g = 0.3819660112501051
    a, b = lo, hi
    x1 = a + g * (b - a)
    x2 = b - g * (b - a)
    f1 = _frank_nll(u, v, x1)
    f2 = _frank_nll(u, v, x2)
    while b - a > xatol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = a + g * (b - a)
            f1 = _frank_nll(u, v, x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = b - g * (b - a)
            f2 = _frank_nll(u, v, x2)
    x = 0.5 * (a + b)
    best_x, best_f = x, _frank_nll(u, v, x)
    for y in (lo, hi):
        fy = _frank_nll(u, v, y)
        if fy < best_f:
            best_x, best_f = y, fy
    return best_x, best_f


def frank_fit(sample: BivariateSample, xatol: float = 1e-6) -> FrankFit:
    """Maximise the rank pseudo-likelihood over theta in [-50, 50] minus (-1e-6, 1e-6).

    Golden-section search on each sign, keeping the better of the two.
    """
    if sample.size < 5:
        raise ValueError(f"need at least 5 observations, got {sample.size}")
    u, v = pseudo_observations(sample)
    pos = _golden_min(u, v, FRANK_MIN_ABS_THETA, FRANK_THETA_BOUND, xatol)
    neg = _golden_min(u, v, -FRANK_THETA_BOUND, -FRANK_MIN_ABS_THETA, xatol)
    theta, fun = pos if pos[1] <= neg[1] else neg
    if not math.isfinite(fun):
        raise RuntimeError("Frank pseudo-likelihood is not finite")
    at_bound = FRANK_THETA_BOUND - abs(theta) < 10 * xatol
    return FrankFit(float(theta), -float(fun), bool(at_bound))


def frank_mle(sample: BivariateSample) -> float:
    return frank_fit(sample).theta
