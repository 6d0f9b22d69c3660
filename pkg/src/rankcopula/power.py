"""Power studies over (test, scenario, subsample size) and minimax-regret size choice.

Thresholds are simulated once per configuration and kept in a ``ThresholdCache``,
a JSON document keyed by every parameter the simulated quantile depends on.

Random streams: replicate r of a scenario at sample size N draws its data from
``derive_stream(spawn_seed(seed, TAG, N, scenario), r)``; the same data is
reused across subsample sizes so that power differences between sizes are not
swamped by sampling noise.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import SubsampleScheme, derive_stream, spawn_seed
from .gof import upper_quantile
from .indep_bench import (
    DependenceKind,
    DependenceScenario,
    _deheuvels_xy,
    deheuvels_threshold,
    ks_threshold,
    new_statistic,
    null_statistics,
    pearson_critical,
    scenario_xy,
    smart_statistic,
)

_TAG_POWER = 0x504F57
_CACHE_FORMAT = "rankcopula-thresholds/1"


def _m_label(m) -> str:
    return "inf" if m == math.inf else str(int(m))


@dataclass(frozen=True)
class TestSpec:
    """Which independence test to run: ``new``, ``deheuvels`` or ``smart``.

    ``subsample_size`` and ``num_subsamples`` only matter for ``new``;
    ``num_subsamples`` may be ``math.inf`` for the closed-form limit.
    """

    __test__ = False

    kind: str
    alpha: float = 0.05
    subsample_size: int | None = None
    num_subsamples: float | None = None

    def __post_init__(self):
        if self.kind not in ("new", "deheuvels", "smart"):
            raise ValueError(f"unknown test kind {self.kind!r}")
        if self.kind == "new" and self.subsample_size is None:
            raise ValueError("the new test needs a subsample size")

    @property
    def m(self):
        if self.num_subsamples is None:
            return SubsampleScheme.default_m(self.subsample_size)
        return self.num_subsamples

    def with_size(self, n: int) -> TestSpec:
        return TestSpec(self.kind, self.alpha, n, self.num_subsamples)


def threshold_key(kind: str, N: int, n, m, alpha: float, reps: int, seed: int) -> str:
    return f"kind={kind}|N={N}|n={n if n is not None else '-'}|m={_m_label(m) if m is not None else '-'}|alpha={alpha:g}|reps={reps}|seed={seed}"


class ThresholdCache:
    """Simulated critical values, optionally persisted as indented JSON."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self.values: dict[str, float] = {}
        self.misses = 0
        if self.path is not None and self.path.exists():
            doc = json.loads(self.path.read_text())
            if not isinstance(doc, dict) or doc.get("format") != _CACHE_FORMAT:
                raise ValueError(f"not a threshold cache (expected format {_CACHE_FORMAT!r})")
            self.values = {k: float(v) for k, v in doc["thresholds"].items()}

    def __contains__(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, compute) -> float:
        if key not in self.values:
            self.misses += 1
            self.values[key] = float(compute())
            self.save()
        return self.values[key]

    def put(self, key: str, value: float):
        self.values[key] = float(value)

    def save(self):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"format": _CACHE_FORMAT, "thresholds": dict(sorted(self.values.items()))}
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(doc, indent=2) + "\n")
        tmp.replace(self.path)


def _map_rows(func, reps: int, threads: int) -> np.ndarray:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(func, range(reps)))
    else:
        rows = [func(r) for r in range(reps)]
    return np.array(rows, dtype=np.float64)


def new_thresholds(N: int, sizes, m, alpha: float, reps: int = 3000, seed: int = 0,
                   cache: ThresholdCache | None = None) -> dict[int, float]:
    """Null critical values of the grid-divergence test for several sizes at once."""
    cache = cache if cache is not None else ThresholdCache()
    sizes = [int(n) for n in sizes]
    keys = {n: threshold_key("new", N, n, m, alpha, reps, seed) for n in sizes}
    missing = [n for n in sizes if keys[n] not in cache]
    if missing:
        null = null_statistics(N, missing, m, reps, seed)
        for j, n in enumerate(missing):
            cache.put(keys[n], upper_quantile(null[:, j], alpha))
        cache.misses += 1
        cache.save()
    return {n: cache.values[keys[n]] for n in sizes}


def test_threshold(spec: TestSpec, N: int, scenario_kind=None, reps: int = 3000, seed: int = 0,
                   cache: ThresholdCache | None = None) -> float:
    cache = cache if cache is not None else ThresholdCache()
    if spec.kind == "new":
        return new_thresholds(N, [spec.subsample_size], spec.m, spec.alpha, reps, seed, cache)[spec.subsample_size]
    if spec.kind == "deheuvels":
        key = threshold_key("deheuvels", N, None, None, spec.alpha, reps, seed)
        return cache.get(key, lambda: deheuvels_threshold(N, spec.alpha, reps, seed))
    if DependenceKind(scenario_kind) is DependenceKind.DONUT:
        key = threshold_key("smart-donut", N, None, None, spec.alpha, reps, seed)
        return cache.get(key, lambda: ks_threshold(N, spec.alpha, reps, seed))
    return pearson_critical(N, spec.alpha)


def scenario_statistics(spec: TestSpec, scenario: DependenceScenario, N: int, reps: int, seed: int = 0,
                        sizes=None, threads: int = 1) -> np.ndarray:
    """Test statistics on ``reps`` scenario samples: shape (reps, len(sizes)) for ``new``, else (reps,)."""
    base = spawn_seed(seed, _TAG_POWER, N, scenario.tag)
    sizes = [spec.subsample_size] if sizes is None else list(sizes)
    ms = [spec.with_size(n).m for n in sizes] if spec.kind == "new" else []

    def row(r):
        x, y = scenario_xy(scenario, N, derive_stream(base, r))
        if spec.kind == "new":
            return [new_statistic(x, y, n, m, spawn_seed(base, r, n)) for n, m in zip(sizes, ms)]
        if spec.kind == "deheuvels":
            return _deheuvels_xy(x, y)
        return smart_statistic(scenario.kind, x, y)

    return _map_rows(row, reps, threads)


@dataclass(frozen=True)
class PowerEstimate:
    rate: float
    reps: int

    @property
    def stderr(self) -> float:
        return math.sqrt(self.rate * (1.0 - self.rate) / self.reps)


def estimate_power(spec: TestSpec, scenario: DependenceScenario, N: int, reps: int = 1000, seed: int = 0,
                   cache: ThresholdCache | None = None, threshold_reps: int = 3000, threads: int = 1) -> PowerEstimate:
    """Fraction of ``reps`` scenario samples on which the test rejects."""
    threshold = test_threshold(spec, N, scenario.kind, threshold_reps, seed, cache)
    st = scenario_statistics(spec, scenario, N, reps, seed, threads=threads)
    return PowerEstimate(float(np.mean(st.ravel() > threshold)), reps)


@dataclass
class PowerReport:
    """Rejection rates P[s, d] for subsample sizes s (rows) and scenarios d (columns)."""

    sizes: list[int]
    scenarios: list[str]
    P: np.ndarray
    reps: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64).reshape(len(self.sizes), len(self.scenarios))
        if np.any((self.P < 0) | (self.P > 1)):
            raise ValueError("rejection rates must lie in [0, 1]")

    @property
    def mc_stderr(self) -> np.ndarray:
        return np.sqrt(self.P * (1.0 - self.P) / self.reps)

    def best_size(self, d: int = 0) -> int:
        return self.sizes[int(np.argmax(self.P[:, d]))]

    def best_power(self, d: int = 0) -> float:
        return float(self.P[:, d].max())

    def regret(self) -> np.ndarray:
        return self.P.max(axis=0, keepdims=True) - self.P

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "scenarios": list(self.scenarios),
            "reps": self.reps,
            "power": self.P.tolist(),
            "mc_stderr": self.mc_stderr.tolist(),
            "best_size": {d: self.best_size(j) for j, d in enumerate(self.scenarios)},
            "best_power": {d: self.best_power(j) for j, d in enumerate(self.scenarios)},
            "minimax_regret_size": minimax_regret_size(self),
            **self.meta,
        }

    def render_text(self) -> str:
        width = max(12, *(len(d) + 2 for d in self.scenarios))
        lines = ["size".rjust(5) + "".join(d.rjust(width) for d in self.scenarios)]
        for i, s in enumerate(self.sizes):
            lines.append(f"{s:5d}" + "".join(f"{p:{width}.3f}" for p in self.P[i]))
        lines.append("best " + "".join(str(self.best_size(j)).rjust(width) for j in range(len(self.scenarios))))
        lines.append(f"minimax-regret size: {minimax_regret_size(self)}  (reps={self.reps})")
        return "\n".join(lines)


def minimax_regret_size(report: PowerReport) -> int:
    """argmin over s of max over d of [max_s' P(s', d) - P(s, d)]; ties go to the smaller size."""
    if report.P.size == 0:
        raise ValueError("empty power report")
    worst = report.regret().max(axis=1)
    best = worst.min()
    candidates = [s for s, w in zip(report.sizes, worst) if w == best]
    return min(candidates)


def power_table(scenarios, N: int, sizes, m, alpha: float = 0.05, reps: int = 1000, seed: int = 0,
                threshold_reps: int = 3000, cache: ThresholdCache | None = None, threads: int = 1) -> PowerReport:
    """Powers of the grid-divergence test for every (size, scenario) pair."""
    cache = cache if cache is not None else ThresholdCache()
    sizes = sorted(int(s) for s in sizes)
    if not sizes or sizes[0] < 2 or sizes[-1] > N:
        raise ValueError(f"sizes must lie in [2, {N}]")
    thr = new_thresholds(N, sizes, m, alpha, threshold_reps, seed, cache)
    thr_vec = np.array([thr[s] for s in sizes])
    spec = TestSpec("new", alpha, sizes[0], m)
    cols = []
    for sc in scenarios:
        st = scenario_statistics(spec, sc, N, reps, seed, sizes=sizes, threads=threads)
        cols.append((st > thr_vec[None, :]).mean(axis=0))
    meta = {"N": N, "num_subsamples": _m_label(m), "alpha": alpha, "threshold_reps": threshold_reps, "seed": seed,
            "thresholds": {str(s): thr[s] for s in sizes}}
    return PowerReport(sizes, [sc.label for sc in scenarios], np.column_stack(cols), reps, meta)


def scan_sizes(scenario: DependenceScenario, N: int, sizes, m, alpha: float = 0.05, reps: int = 1000, seed: int = 0,
               threshold_reps: int = 3000, cache: ThresholdCache | None = None, threads: int = 1) -> PowerReport:
    """Single-scenario column of ``power_table``; ``best_size()`` gives the power-optimal size."""
    return power_table([scenario], N, sizes, m, alpha, reps, seed, threshold_reps, cache, threads)


def default_size_range(N: int) -> list[int]:
    return list(range(2, min(21, N) + 1))
