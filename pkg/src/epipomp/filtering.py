"""Bootstrap particle filtering with optional block resampling.

The plain particle filter is the one-block special case of the block filter:
particles are propagated jointly, weighted by the measurement density, and
resampled systematically within each block of spatial units. Conditional
log-likelihoods, effective sample sizes, and a sample from the final
filtering distribution are returned for diagnostics and forecasting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .grid import TimeGrid
from .model import PompModel, Theta, advance, compile_theta, make_rng
from .params import ParameterSet
from .series import CovariateTable, ObservationSeries


def logmeanexp(logw: np.ndarray) -> float:
    """log of the mean of exponentials, stable under -inf entries."""
    m = np.max(logw)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.mean(np.exp(logw - m))))


def effective_sample_size(logw: np.ndarray) -> float:
    """ESS of a log-weight vector; equals J for constant weights."""
    m = np.max(logw)
    if not np.isfinite(m):
        return 1.0
    w = np.exp(logw - m)
    s = w.sum()
    return float(s * s / np.sum(w * w))


def systematic_indices(logw: np.ndarray, u: float) -> np.ndarray:
    """Systematic resampling indices for one block.

    ``u`` is a single uniform(0,1) draw; offspring are chosen at the J
    equally spaced points (u + j)/J against the cumulative normalized weights.
    """
    m = np.max(logw)
    w = np.exp(logw - m)
    cum = np.cumsum(w)
    cum /= cum[-1]
    points = (u + np.arange(logw.size)) / logw.size
    return np.searchsorted(cum, points, side="right").clip(max=logw.size - 1)


def resolve_blocks(model: PompModel, blocks: Sequence[Sequence[str]] | None) -> list[list[str]]:
    """Validate a block partition of the model's units (default: one block)."""
    if blocks is None:
        return [list(model.units)]
    blocks = [list(b) for b in blocks]
    flat = [u for b in blocks for u in b]
    if sorted(flat) != sorted(model.units) or len(flat) != len(set(flat)):
        raise ValidationError(
            f"blocks must partition the units {list(model.units)} exactly, got {blocks}"
        )
    return blocks


@dataclass
class PfResult:
    """Particle filter output.

    ``cond_logliks`` sum to ``loglik`` exactly (fixed summation order).
    ``ess`` is per observation time (minimum across blocks when block
    filtering). ``filter_sample`` holds particles drawn from the filtering
    distribution at the final observation time. ``failed_times`` flags
    observation indices where every particle had zero weight; the total
    log-likelihood is -inf in that case rather than an exception.
    """

    loglik: float
    cond_logliks: np.ndarray
    ess: np.ndarray
    filter_sample: np.ndarray
    unit_cond_logliks: np.ndarray
    block_ess: np.ndarray
    failed_times: tuple[int, ...] = ()
    n_particles: int = 0


def particle_filter(
    model: PompModel,
    params: ParameterSet,
    data: ObservationSeries,
    grid: TimeGrid,
    covs: CovariateTable | None = None,
    J: int = 1000,
    seed: int = 0,
    blocks: Sequence[Sequence[str]] | None = None,
    sample_size: int | None = None,
    rng: np.random.Generator | None = None,
    theta: Theta | None = None,
) -> PfResult:
    """Bootstrap particle filter log-likelihood estimate.

    ``blocks`` partitions the units for block resampling (default: a single
    block, the standard filter). Missing observations contribute zero to the
    measurement density and trigger no resampling at that time/unit.
    """
    if J < 1:
        raise ValidationError("J must be >= 1")
    if data.n_units != model.n_units or tuple(data.units) != tuple(model.units):
        raise ValidationError(
            f"data units {data.units} do not match model units {model.units}"
        )
    if data.n_obs != grid.n_obs:
        raise ValidationError(
            f"data has {data.n_obs} observations but grid has {grid.n_obs}"
        )
    model.check_params(params)
    if model.needs_covariates:
        if covs is None:
            raise ValidationError(f"model {model.name!r} requires covariates")
        covs.check_span(grid.t0, grid.t_end)
    block_units = resolve_blocks(model, blocks)
    unit_index = {u: i for i, u in enumerate(model.units)}
    block_cols = [np.array([unit_index[u] for u in b]) for b in block_units]
    unit_slices = model.unit_state_indices()
    block_states = [
        np.concatenate([unit_slices[i] for i in cols]) if len(unit_slices) > 1 else unit_slices[0]
        for cols in block_cols
    ]

    if rng is None:
        rng = make_rng(seed)
    if theta is None:
        theta = compile_theta(model, params)

    X = np.asarray(model.rinit(theta, J, rng), dtype=float)
    N, U, B = grid.n_obs, model.n_units, len(block_cols)
    cond = np.zeros(N)
    ess = np.zeros(N)
    block_ess = np.zeros((N, B))
    unit_cond = np.zeros((N, U))
    failed: list[int] = []
    acc = model.accum_indices

    for n, (t_prev, t_next) in enumerate(grid.intervals()):
        if acc.size:
            X[:, acc] = 0.0
        X = advance(model, X, t_prev, t_next, theta, covs, grid, rng)
        y = data.values[:, n]
        missing = np.isnan(y)
        if missing.all():
            cond[n] = 0.0
            ess[n] = float(J)
            block_ess[n] = float(J)
            continue
        logw_units = np.asarray(
            model.dunit_measure(np.where(missing, 0.0, y), X, t_next, theta), dtype=float
        )
        logw_units[:, missing] = 0.0
        for u in range(U):
            unit_cond[n, u] = 0.0 if missing[u] else logmeanexp(logw_units[:, u])
        t_cond = 0.0
        time_failed = False
        for b, cols in enumerate(block_cols):
            logw = logw_units[:, cols].sum(axis=1)
            c = logmeanexp(logw)
            t_cond += c
            if not np.isfinite(c):
                time_failed = True
                block_ess[n, b] = 1.0
                continue
            block_ess[n, b] = effective_sample_size(logw)
            if np.ptp(logw) < 1e-14:
                continue  # constant weights: resampling is a no-op
            idx = systematic_indices(logw, rng.random())
            if B == 1:
                X = X[idx]
            else:
                sl = block_states[b]
                X[:, sl] = X[np.ix_(idx, sl)]
        cond[n] = t_cond
        ess[n] = block_ess[n].min()
        if time_failed:
            failed.append(n)

    K = J if sample_size is None else int(sample_size)
    if K == J:
        sample = X.copy()
    else:
        sample = X[rng.integers(0, J, size=K)]
    return PfResult(
        loglik=float(np.sum(cond)),
        cond_logliks=cond,
        ess=ess,
        filter_sample=sample,
        unit_cond_logliks=unit_cond,
        block_ess=block_ess,
        failed_times=tuple(failed),
        n_particles=J,
    )


def sample_params_by_likelihood(
    candidates: Sequence[tuple[ParameterSet, float]],
    K: int,
    seed: int = 0,
) -> list[ParameterSet]:
    """Draw K parameter sets with probability proportional to their likelihoods.

    Numerically stable via max-subtraction of the log-likelihoods. Raises if
    no candidate has a finite log-likelihood.
    """
    if not candidates:
        raise ValidationError("no candidate parameter sets given")
    logliks = np.array([float(ll) for _, ll in candidates])
    m = np.max(logliks)
    if not np.isfinite(m):
        raise ValidationError("all candidate log-likelihoods are -inf")
    w = np.exp(logliks - m)
    p = w / w.sum()
    rng = make_rng(seed)
    idx = rng.choice(len(candidates), size=K, p=p)
    return [candidates[i][0] for i in idx]
