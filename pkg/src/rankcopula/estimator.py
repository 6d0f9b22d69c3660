"""Subsampled discrete copula density and its full-sample and exhaustive counterparts.

Each subsample of n distinct observations is ranked within itself and drops one
point per observation on the n x n rank grid. Averaging over m subsamples gives
the grid density; subsamples with a tie in either coordinate are discarded.

Randomness: subsamples are processed in fixed-size chunks, chunk ``c`` drawing
its raw 64-bit words from ``derive_stream(seed, c)``. Per-chunk counts are
integers, so the reduction is exact and independent of how chunks are scheduled.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import int64, njit, uint64

from .core import (
    AllSubsamplesTied,
    BivariateSample,
    DiscreteCopulaDensity,
    SubsampleScheme,
    TiesDetected,
    compute_ranks,
    dense_keys,
    derive_stream,
)

CHUNK = 8192
# Above this many distinct keys the bitset ranking loses to pairwise counting.
_BITSET_MAX_KEYS = 1024
ENUMERATION_LIMIT = 1_000_000

_ONE = np.uint64(1)


@njit(inline="always")
def _popcount(x):
    x = x - ((x >> uint64(1)) & uint64(0x5555555555555555))
    x = (x & uint64(0x3333333333333333)) + ((x >> uint64(2)) & uint64(0x3333333333333333))
    x = (x + (x >> uint64(4))) & uint64(0x0F0F0F0F0F0F0F0F)
    return int64((x * uint64(0x0101010101010101)) >> uint64(56))


@njit(inline="always")
def _bounded(raw, w, bound):
    # 32-bit multiply-shift: uniform on [0, bound) up to a bias of bound / 2**32.
    word = raw[w >> 1]
    if w & 1:
        r32 = word >> uint64(32)
    else:
        r32 = word & uint64(0xFFFFFFFF)
    return int64((r32 * uint64(bound)) >> uint64(32))


@njit(nogil=True, cache=True)
def _draw_indices(N, n, count, raw, out):
    """``count`` independent draws of n distinct indices (partial Fisher-Yates)."""
    perm = np.arange(N)
    w = 0
    for s in range(count):
        for i in range(n):
            j = i + _bounded(raw, w, N - i)
            w += 1
            t = perm[j]
            perm[j] = perm[i]
            perm[i] = t
            out[s, i] = t


@njit(nogil=True, cache=True)
def _accumulate_bitset(kx, ky, n, count, raw, counts):
    N = kx.shape[0]
    nw = (max(kx.max(), ky.max()) >> 6) + 1
    perm = np.arange(N)
    sx = np.empty(n, np.int64)
    sy = np.empty(n, np.int64)
    bx = np.zeros(nw, np.uint64)
    by = np.zeros(nw, np.uint64)
    cx = np.zeros(nw, np.int64)
    cy = np.zeros(nw, np.int64)
    discarded = 0
    w = 0
    for s in range(count):
        tied = False
        for i in range(n):
            j = i + _bounded(raw, w, N - i)
            w += 1
            t = perm[j]
            perm[j] = perm[i]
            perm[i] = t
            a = kx[t]
            b = ky[t]
            sx[i] = a
            sy[i] = b
            ma = _ONE << uint64(a & 63)
            mb = _ONE << uint64(b & 63)
            if (bx[a >> 6] & ma) or (by[b >> 6] & mb):
                tied = True
            bx[a >> 6] |= ma
            by[b >> 6] |= mb
        if tied:
            discarded += 1
        else:
            ax = 0
            ay = 0
            for k in range(nw):
                cx[k] = ax
                cy[k] = ay
                ax += _popcount(bx[k])
                ay += _popcount(by[k])
            for i in range(n):
                a = sx[i]
                b = sy[i]
                p = cx[a >> 6] + _popcount(bx[a >> 6] & ((_ONE << uint64(a & 63)) - _ONE))
                q = cy[b >> 6] + _popcount(by[b >> 6] & ((_ONE << uint64(b & 63)) - _ONE))
                counts[p, q] += 1
        for i in range(n):
            bx[sx[i] >> 6] = uint64(0)
            by[sy[i] >> 6] = uint64(0)
    return discarded


@njit(nogil=True, cache=True)
def _accumulate_pairwise(kx, ky, n, count, raw, counts):
    N = kx.shape[0]
    perm = np.arange(N)
    sx = np.empty(n, np.int64)
    sy = np.empty(n, np.int64)
    discarded = 0
    w = 0
    for s in range(count):
        for i in range(n):
            j = i + _bounded(raw, w, N - i)
            w += 1
            t = perm[j]
            perm[j] = perm[i]
            perm[i] = t
            sx[i] = kx[t]
            sy[i] = ky[t]
        tied = False
        for i in range(n):
            for j in range(i + 1, n):
                if sx[i] == sx[j] or sy[i] == sy[j]:
                    tied = True
        if tied:
            discarded += 1
            continue
        for i in range(n):
            p = 0
            q = 0
            for j in range(n):
                if sx[j] < sx[i]:
                    p += 1
                if sy[j] < sy[i]:
                    q += 1
            counts[p, q] += 1
    return discarded


def _chunk_words(count: int, n: int) -> int:
    return (count * n + 1) // 2


def draw_subsample_indices(N: int, n: int, stream: np.random.Generator, count: int | None = None):
    """n distinct indices in 0..N-1, uniform over subsets up to ordering.

    With ``count`` given, returns a ``(count, n)`` array of independent draws.
    """
    if not 2 <= n <= N:
        raise ValueError(f"need 2 <= n <= N, got n={n}, N={N}")
    reps = 1 if count is None else int(count)
    raw = stream.bit_generator.random_raw(_chunk_words(reps, n))
    out = np.empty((reps, n), dtype=np.int64)
    _draw_indices(N, n, reps, np.atleast_1d(raw), out)
    return out[0] if count is None else out


def _prepared_keys(sample: BivariateSample) -> tuple[np.ndarray, np.ndarray]:
    return dense_keys(sample.xs), dense_keys(sample.ys)


def accumulate_counts(kx, ky, n: int, m: int, seed: int, threads: int = 1):
    """Integer n x n rank-grid counts over m subsamples, plus the discard count.

    ``kx`` and ``ky`` are 0-based dense keys of the full sample (ties share a key).
    """
    kx = np.ascontiguousarray(kx, dtype=np.int64)
    ky = np.ascontiguousarray(ky, dtype=np.int64)
    N = kx.size
    if not 2 <= n <= N:
        raise ValueError(f"need 2 <= n <= N, got n={n}, N={N}")
    kernel = _accumulate_bitset if N <= _BITSET_MAX_KEYS else _accumulate_pairwise
    nchunks = -(-m // CHUNK)

    def run(c):
        size = min(CHUNK, m - c * CHUNK)
        raw = derive_stream(seed, c).bit_generator.random_raw(_chunk_words(size, n))
        counts = np.zeros((n, n), dtype=np.int64)
        discarded = kernel(kx, ky, n, size, np.atleast_1d(raw), counts)
        return counts, discarded

    if threads > 1 and nchunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(nchunks)))
    else:
        parts = [run(c) for c in range(nchunks)]
    counts = np.zeros((n, n), dtype=np.int64)
    discarded = 0
    for c, d in parts:
        counts += c
        discarded += d
    return counts, discarded


def estimate_gamma(sample: BivariateSample, scheme: SubsampleScheme, threads: int = 1):
    """Subsampled discrete copula density.

    Returns
    -------
    (DiscreteCopulaDensity, int)
        The n x n density, normalised by the retained subsamples, and the
        number of subsamples discarded because of ties.

    Raises
    ------
    AllSubsamplesTied
        If no subsample was tie-free.
    """
    if scheme.n > sample.size:
        raise ValueError(f"subsample size {scheme.n} exceeds sample size {sample.size}")
    kx, ky = _prepared_keys(sample)
    counts, discarded = accumulate_counts(kx, ky, scheme.n, scheme.m, scheme.seed, threads)
    retained = scheme.m - discarded
    if retained == 0:
        raise AllSubsamplesTied(f"all {scheme.m} subsamples of size {scheme.n} contained ties")
    density = DiscreteCopulaDensity.from_counts(
        counts, n=scheme.n, m=scheme.m, retained=retained, discarded=discarded, seed=scheme.seed
    )
    return density, discarded


def estimate_beta(sample: BivariateSample) -> DiscreteCopulaDensity:
    """Full-sample rank measure: mass 1/N at each (R_i, S_i) on the N x N grid."""
    ranks = compute_ranks(sample)
    N = sample.size
    mass = np.zeros((N, N))
    mass[ranks.r - 1, ranks.s - 1] = 1.0 / N
    return DiscreteCopulaDensity(mass, {"n": N})


def enumerate_exact_gamma(sample: BivariateSample, n: int, batch: int = 65536) -> DiscreteCopulaDensity:
    """Average rank histogram over every tie-free n-subset (the m -> infinity limit).

    Brute force; refuses when C(N, n) exceeds ``ENUMERATION_LIMIT``.
    """
    N = sample.size
    if not 2 <= n <= N:
        raise ValueError(f"need 2 <= n <= N, got n={n}, N={N}")
    total = math.comb(N, n)
    if total > ENUMERATION_LIMIT:
        raise OverflowError(f"C({N}, {n}) = {total} subsets exceeds {ENUMERATION_LIMIT}")
    kx, ky = _prepared_keys(sample)
    counts = np.zeros((n, n), dtype=np.int64)
    retained = 0
    combos = itertools.combinations(range(N), n)
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, batch)), dtype=np.int64)
        if flat.size == 0:
            break
        idx = flat.reshape(-1, n)
        sx = np.sort(kx[idx], axis=1)
        sy = np.sort(ky[idx], axis=1)
        ok = ~((sx[:, 1:] == sx[:, :-1]).any(axis=1) | (sy[:, 1:] == sy[:, :-1]).any(axis=1))
        idx = idx[ok]
        if idx.size == 0:
            continue
        rx = np.argsort(np.argsort(kx[idx], axis=1), axis=1)
        ry = np.argsort(np.argsort(ky[idx], axis=1), axis=1)
        np.add.at(counts, (rx.ravel(), ry.ravel()), 1)
        retained += idx.shape[0]
    if retained == 0:
        raise AllSubsamplesTied(f"every {n}-subset of the sample contains a tie")
    return DiscreteCopulaDensity.from_counts(counts, n=n, retained=retained, discarded=total - retained)


@njit(cache=True)
def _binom_row(total, n, lf, out):
    for k in range(n):
        out[k] = math.exp(lf[total] - lf[k] - lf[total - k]) if k <= total else 0.0


@njit(cache=True)
def _limit_counts(r, s, n):
    N = r.shape[0]
    lf = np.empty(N + 1)
    for k in range(N + 1):
        lf[k] = math.lgamma(k + 1.0)
    # binomial products never exceed C(N-1, n-1), far below float overflow
    inv_total = math.exp(-(lf[N - 1] - lf[n - 1] - lf[N - n]))
    wa = np.empty(n)
    wb = np.empty(n)
    wc = np.empty(n)
    wd = np.empty(n)
    out = np.zeros((n, n))
    for i in range(N):
        qa = 0
        qb = 0
        qc = 0
        for j in range(N):
            if r[j] < r[i]:
                if s[j] < s[i]:
                    qa += 1
                else:
                    qb += 1
            elif r[j] > r[i] and s[j] < s[i]:
                qc += 1
        qd = N - 1 - qa - qb - qc
        _binom_row(qa, n, lf, wa)
        _binom_row(qb, n, lf, wb)
        _binom_row(qc, n, lf, wc)
        _binom_row(qd, n, lf, wd)
        # a others below-left, b above-left, c below-right, d above-right
        for a in range(min(qa, n - 1) + 1):
            for b in range(min(qb, n - 1 - a) + 1):
                ab = wa[a] * wb[b] * inv_total
                for c in range(min(qc, n - 1 - a - b) + 1):
                    d = n - 1 - a - b - c
                    if d > qd:
                        continue
                    out[a + b, a + c] += ab * wc[c] * wd[d]
    return out / N


def limit_gamma(sample: BivariateSample, n: int) -> DiscreteCopulaDensity:
    """Closed-form m -> infinity limit of ``estimate_gamma`` for a tie-free sample.

    An observation with a, b, c, d others in its four rank quadrants lands on
    cell (p, q) with multivariate hypergeometric probability over how many of
    each quadrant join it in the subsample. Cost O(N^2 + N n^3).
    """
    N = sample.size
    if not 2 <= n <= N:
        raise ValueError(f"need 2 <= n <= N, got n={n}, N={N}")
    ranks = compute_ranks(sample)
    mass = _limit_counts(ranks.r, ranks.s, n)
    return DiscreteCopulaDensity(mass / mass.sum(), {"n": n, "m": math.inf})


def _keys(v: np.ndarray) -> tuple[np.ndarray, bool]:
    order = np.argsort(v, kind="stable")
    sv = v[order]
    if np.any(sv[1:] == sv[:-1]):
        return dense_keys(v), True
    keys = np.empty(v.size, dtype=np.int64)
    keys[order] = np.arange(v.size)
    return keys, False


def grid_counts(xs: np.ndarray, ys: np.ndarray, n: int, m, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Unnormalised grid for raw coordinate arrays; the hot path of the Monte Carlo loops.

    Integer counts for finite m, limit probabilities for ``m = inf``. Raises
    ``AllSubsamplesTied`` or ``TiesDetected`` like the public estimators.
    """
    kx, tx = _keys(np.asarray(xs, dtype=np.float64))
    ky, ty = _keys(np.asarray(ys, dtype=np.float64))
    if m == math.inf:
        if tx or ty:
            raise TiesDetected("the closed-form limit needs a tie-free sample")
        if not 2 <= n <= kx.size:
            raise ValueError(f"need 2 <= n <= N, got n={n}, N={kx.size}")
        return _limit_counts(kx, ky, n)
    counts, discarded = accumulate_counts(kx, ky, n, int(m), seed, threads)
    if discarded == m:
        raise AllSubsamplesTied(f"all {m} subsamples of size {n} contained ties")
    return counts


def grid_mass(xs, ys, n: int, m, seed: int = 0, threads: int = 1) -> np.ndarray:
    c = grid_counts(xs, ys, n, m, seed, threads)
    return c / c.sum()


def grid_density(sample: BivariateSample, n: int, m, seed: int = 0, threads: int = 1) -> DiscreteCopulaDensity:
    """``estimate_gamma`` for integer m; ``limit_gamma`` when m is infinite."""
    if m == math.inf:
        return limit_gamma(sample, n)
    return estimate_gamma(sample, SubsampleScheme(n, int(m), seed), threads)[0]


def parse_num_subsamples(text: str):
    """CLI helper: an integer count, or 'inf' for the closed-form limit."""
    if text.strip().lower() in ("inf", "limit", "infinity"):
        return math.inf
    m = int(text)
    if m < 1:
        raise ValueError(f"number of subsamples must be >= 1, got {m}")
    return m
