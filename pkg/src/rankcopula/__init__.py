"""Subsampled discrete copula densities and rank-based tests built on them."""

from .copulas import Frank, FrankFit, Gaussian, Independence, MixtureHalf, StudentT, frank_cdf, frank_fit, frank_mle, frank_pdf
from .core import (
    AllSubsamplesTied,
    BivariateSample,
    DiscreteCopulaDensity,
    JointRanks,
    SubsampleScheme,
    TestOutcome,
    TiesDetected,
    compute_ranks,
    derive_stream,
    spawn_seed,
)
from .divergence import indep_statistic, kullback, smooth
from .estimator import enumerate_exact_gamma, estimate_beta, estimate_gamma, grid_density, limit_gamma
from .gof import GofConfig, ReferenceBank, gof_test
from .indep_bench import DependenceKind, DependenceScenario, deheuvels_statistic, indep_test, smart_test
from .power import PowerReport, TestSpec, ThresholdCache, estimate_power, minimax_regret_size, power_table, scan_sizes

__version__ = "0.1.0"
