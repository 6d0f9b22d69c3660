"""Kullback divergence between grid densities, and the zero-cell repair."""

from __future__ import annotations

import numpy as np

from .core import DiscreteCopulaDensity


class GridMismatch(ValueError):
    pass


class DivergenceUndefined(ValueError):
    pass


def _mass(d) -> np.ndarray:
    return d.mass if isinstance(d, DiscreteCopulaDensity) else np.asarray(d, dtype=np.float64)


def kullback(p, q) -> float:
    """sum p log(p/q) over the grid, natural log, with 0 log(0/q) = 0."""
    pm, qm = _mass(p), _mass(q)
    if pm.shape != qm.shape:
        raise GridMismatch(f"grid sizes differ: {pm.shape} vs {qm.shape}")
    support = pm > 0
    if (qm[support] <= 0).any():
        raise DivergenceUndefined("reference has zero mass where the density is positive; smooth it first")
    pp = pm[support]
    return max(float(np.sum(pp * np.log(pp / qm[support]))), 0.0)


def indep_statistic(gamma) -> float:
    """Divergence from the uniform n x n density: sum g log(n^2 g)."""
    gm = _mass(gamma)
    n = gm.shape[0]
    g = gm[gm > 0]
    return max(float(np.sum(g * np.log(n * n * g))), 0.0)


def smooth(q: DiscreteCopulaDensity, pseudo_count_weight: float) -> DiscreteCopulaDensity:
    """Mix with the uniform grid: (mass + eps/n^2) / (1 + eps)."""
    eps = float(pseudo_count_weight)
    if not eps > 0:
        raise ValueError(f"pseudo-count weight must be positive, got {eps}")
    n = q.n
    return DiscreteCopulaDensity((q.mass + eps / (n * n)) / (1.0 + eps), {**q.meta, "smoothing": eps})


def default_smoothing(density: DiscreteCopulaDensity) -> float:
    """One pseudo-observation per cell: n^2 / (retained subsample points)."""
    n = density.n
    points = density.meta.get("retained", 0) * n
    if points <= 0:
        raise ValueError("density carries no retained-subsample count")
    return n * n / points
