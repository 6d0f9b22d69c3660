"""Goodness-of-fit to the likeliest Frank copula.

The sample is compared to a Frank copula fitted by rank pseudo-likelihood. Both
sides are turned into n x n grid densities: the sample through the subsampling
estimator, the fitted model through the same estimator applied to a much larger
simulated sample. The distance is the Kullback divergence, and its null
distribution comes from samples of size N drawn from the fitted model, each
refitted and scored against the reference of its own fit.

A reference depends only on the Frank parameter, so references are built on a
grid of parameters evenly spaced in asinh(theta) (spacing ``theta_step``) and
memoised in a ``ReferenceBank``. The grid is fine near independence and coarser
where the fitted parameter is itself imprecise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .copulas import Frank, Independence, frank_fit
from .core import MASK64, BivariateSample, DiscreteCopulaDensity, SubsampleScheme, TestOutcome, derive_stream, spawn_seed
from .divergence import default_smoothing, kullback, smooth
from .estimator import estimate_gamma, grid_mass

_TAG_REFERENCE = 0x5245
_TAG_NULL = 0x4E55
_TAG_SAMPLE = 0x5341


@dataclass(frozen=True)
class GofConfig:
    """Settings of one goodness-of-fit test.

    ``num_subsamples`` applies to the sample-side densities (observed and null);
    ``math.inf`` selects the closed-form limit. ``reference_subsamples`` applies
    to the big reference sample. ``None`` means the default m for the grid size.
    With ``refit`` off, every null sample is scored against the reference of the
    observed sample's fit. ``reference_seed`` defaults to ``seed``; sharing it
    lets several tests share one ``ReferenceBank``.
    """

    subsample_size: int
    num_subsamples: float | None = None
    reference_multiplier: int = 1000
    reference_subsamples: int | None = None
    null_replicates: int = 500
    alpha: float = 0.05
    seed: int = 0
    refit: bool = True
    theta_step: float = 0.01
    reference_seed: int | None = None
    threads: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.null_replicates < 100:
            raise ValueError(f"need at least 100 null replicates, got {self.null_replicates}")
        if self.reference_multiplier < 100:
            raise ValueError(f"reference multiplier must be >= 100, got {self.reference_multiplier}")
        if self.subsample_size < 2:
            raise ValueError(f"subsample size must be >= 2, got {self.subsample_size}")
        if not self.theta_step > 0:
            raise ValueError(f"theta_step must be positive, got {self.theta_step}")

    @property
    def m(self):
        if self.num_subsamples is None:
            return SubsampleScheme.default_m(self.subsample_size)
        return self.num_subsamples

    @property
    def m_reference(self) -> int:
        if self.reference_subsamples is None:
            return SubsampleScheme.default_m(self.subsample_size)
        return int(self.reference_subsamples)


def upper_quantile(values, alpha: float) -> float:
    """Order statistic at 1-based index ceil((1 - alpha) K)."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    k = math.ceil((1.0 - alpha) * v.size - 1e-9)
    return float(v[min(max(k, 1), v.size) - 1])


def reference_density(model, N: int, config: GofConfig, stream: np.random.Generator) -> DiscreteCopulaDensity:
    """Smoothed grid density of a ``reference_multiplier * N`` sample from ``model``."""
    uv = model.sample(config.reference_multiplier * N, stream)
    scheme = SubsampleScheme(config.subsample_size, config.m_reference, int(stream.integers(0, 2**63)))
    density, _ = estimate_gamma(BivariateSample(uv[:, 0], uv[:, 1]), scheme, config.threads)
    return smooth(density, default_smoothing(density))


class ReferenceBank:
    """Smoothed references for Frank parameters rounded to the grid sinh(k * theta_step).

    Grid point k uses stream ``k`` of a seed derived from the reference seed, N and
    n, so a reference does not depend on which test asked for it first.
    """

    def __init__(self, N: int, config: GofConfig):
        self.N = N
        self.config = config
        seed = config.seed if config.reference_seed is None else config.reference_seed
        self._seed = spawn_seed(seed, _TAG_REFERENCE, N, config.subsample_size)
        self._refs: dict[int, DiscreteCopulaDensity] = {}

    def index(self, theta: float) -> int:
        return int(round(math.asinh(theta) / self.config.theta_step))

    def grid_theta(self, theta: float) -> float:
        return math.sinh(self.index(theta) * self.config.theta_step)

    def compatible(self, N: int, config: GofConfig) -> bool:
        mine, theirs = asdict(self.config), asdict(config)
        for name in ("seed", "null_replicates", "alpha", "refit", "threads", "num_subsamples"):
            mine.pop(name)
            theirs.pop(name)
        if self.config.reference_seed is None:
            mine["reference_seed"] = self.config.seed
        if config.reference_seed is None:
            theirs["reference_seed"] = config.seed
        return N == self.N and mine == theirs

    def __len__(self) -> int:
        return len(self._refs)

    def get(self, theta: float) -> DiscreteCopulaDensity:
        k = self.index(theta)
        ref = self._refs.get(k)
        if ref is None:
            model = Independence() if k == 0 else Frank(math.sinh(k * self.config.theta_step))
            ref = reference_density(model, self.N, self.config, derive_stream(self._seed, k & MASK64))
            self._refs[k] = ref
        return ref


def gof_statistic(sample: BivariateSample, ref: DiscreteCopulaDensity, config: GofConfig, seed: int = 0) -> float:
    """Kullback divergence of the sample's grid density from the reference."""
    if ref.n != config.subsample_size:
        raise ValueError(f"reference grid {ref.n} does not match subsample size {config.subsample_size}")
    return kullback(grid_mass(sample.xs, sample.ys, config.subsample_size, config.m, seed), ref)


def _null_statistic(k: int, theta: float, N: int, bank: ReferenceBank, config: GofConfig) -> float:
    stream = derive_stream(spawn_seed(config.seed, _TAG_NULL), k)
    uv = Frank(theta).sample(N, stream)
    if config.refit:
        ref = bank.get(frank_fit(BivariateSample(uv[:, 0], uv[:, 1])).theta)
    else:
        ref = bank.get(theta)
    mass = grid_mass(uv[:, 0], uv[:, 1], config.subsample_size, config.m, int(stream.integers(0, 2**63)))
    return kullback(mass, ref)


def gof_test(sample: BivariateSample, config: GofConfig, bank: ReferenceBank | None = None) -> TestOutcome:
    """Fit the likeliest Frank copula, simulate the null distances, compare.

    Null samples are drawn from the fitted copula. ``bank`` may carry references
    over from earlier tests with the same N and reference settings.
    """
    N = sample.size
    if N < 10:
        raise ValueError(f"goodness-of-fit needs N >= 10, got {N}")
    if config.subsample_size > N:
        raise ValueError(f"subsample size {config.subsample_size} exceeds N={N}")
    if bank is None:
        bank = ReferenceBank(N, config)
    elif not bank.compatible(N, config):
        raise ValueError("reference bank was built for a different sample size or reference settings")
    fit = frank_fit(sample)
    statistic = gof_statistic(sample, bank.get(fit.theta), config, spawn_seed(config.seed, _TAG_SAMPLE))

    def run(k):
        return _null_statistic(k, fit.theta, N, bank, config)

    K = config.null_replicates
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            null = list(pool.map(run, range(K)))
    else:
        null = [run(k) for k in range(K)]
    threshold = upper_quantile(null, config.alpha)
    cfg = asdict(config)
    cfg.pop("threads")
    if cfg["num_subsamples"] is None:
        cfg["num_subsamples"] = config.m
    elif cfg["num_subsamples"] == math.inf:
        cfg["num_subsamples"] = "inf"
    cfg["reference_subsamples"] = config.m_reference
    if cfg["reference_seed"] is None:
        cfg["reference_seed"] = config.seed
    return TestOutcome(
        statistic,
        threshold,
        config.alpha,
        {
            "theta_hat": fit.theta,
            "theta_reference": bank.grid_theta(fit.theta),
            "theta_at_bound": fit.at_bound,
            "sample_size": N,
            "reference_size": config.reference_multiplier * N,
            "config": cfg,
        },
    )
