"""Measurement-model building blocks shared by the built-in models.

Negative binomial densities use the (mean, size) parameterization with
variance ``mean + mean^2/size``; a zero mean is the distribution degenerate
at zero.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from .errors import ValidationError


def nb_logpmf(y, mean, size):
    """Negative binomial log-pmf, vectorized, with the mean-0 degenerate case."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValidationError("observed counts must be nonnegative")
    mean = np.asarray(mean, dtype=float)
    size = np.asarray(size, dtype=float)
    mean_b = np.broadcast_arrays(mean, y, size)[0]
    p = size / (size + np.where(mean_b > 0, mean_b, 1.0))
    out = stats.nbinom.logpmf(y, size, p)
    degenerate = np.broadcast_to(mean_b <= 0, out.shape)
    y_b = np.broadcast_to(y, out.shape)
    return np.where(degenerate, np.where(y_b == 0, 0.0, -np.inf), out)


def nb_sample(mean, size, rng: np.random.Generator):
    """Negative binomial draw with the given mean and size."""
    mean = np.asarray(mean, dtype=float)
    size_b = np.broadcast_to(np.asarray(size, dtype=float), mean.shape)
    out = np.zeros(mean.shape)
    pos = mean > 0
    if np.any(pos):
        p = size_b[pos] / (size_b[pos] + mean[pos])
        out[pos] = rng.negative_binomial(size_b[pos], p)
    return out


def norm_logpdf(x, mean, sd):
    return stats.norm.logpdf(np.asarray(x, dtype=float), loc=mean, scale=sd)


def lognormal_case_logpdf(y, mean_cases, sd):
    """Log-density of log(y+1) ~ Normal(log(mean_cases+1), sd^2)."""
    y = np.asarray(y, dtype=float)
    return stats.norm.logpdf(np.log1p(y), loc=np.log1p(mean_cases), scale=sd)


def lognormal_case_sample(mean_cases, sd, rng: np.random.Generator):
    """Sample reported cases whose log(y+1) is Gaussian around log(mean+1)."""
    mean_cases = np.asarray(mean_cases, dtype=float)
    z = rng.normal(size=mean_cases.shape)
    return np.expm1(np.log1p(mean_cases) + sd * z)
