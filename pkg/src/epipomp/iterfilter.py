"""Iterated filtering: IF2 and the iterated block particle filter.

Both algorithms run repeated filtering passes in which each particle carries
its own parameter vector, perturbed by a geometrically cooled random walk on
the estimation scale and resampled together with the latent states. IF2 is
the one-block special case of the block variant and is implemented as such,
so a one-block IBPF run is bit-identical to IF2 under shared seeds.

Unit-specific parameters are owned by the block containing their unit and
are resampled only with that block. Shared parameters keep one copy per
block during a pass; the copies are reconciled to their per-particle mean on
the estimation scale at the end of every iteration.

After every iteration the swarm center (mean on the estimation scale) is
evaluated with a fresh-seeded filtering pass (same block structure: a plain
particle filter evaluation would collapse on high-dimensional models), so
the trace is not optimized to a single noise realization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .filtering import logmeanexp, particle_filter, resolve_blocks, systematic_indices
from .grid import TimeGrid
from .model import PompModel, advance, compile_theta
from .params import ParameterSet, from_estimation, split_key, to_estimation
from .series import CovariateTable, ObservationSeries


@dataclass(frozen=True)
class If2Settings:
    """IF2 hyperparameters.

    ``rw_sd`` maps searched parameter names (shared names, unit-specific
    keys ``"name[unit]"``, or family bases covering every unit) to their
    random-walk standard deviation on the estimation scale. ``cooling`` is
    the fraction of the initial sd remaining after 50 iterations.
    ``hypercube`` optionally samples the initial swarm uniformly (natural
    scale) instead of starting every particle at ``initial``.
    """

    J: int
    M: int
    rw_sd: Mapping[str, float]
    cooling: float = 0.5
    initial: ParameterSet | None = None
    hypercube: Mapping[str, tuple[float, float]] | None = None
    eval_particles: int | None = None

    def __post_init__(self) -> None:
        if self.J < 1 or self.M < 1:
            raise ValidationError("J and M must be >= 1")
        if not 0.0 < self.cooling <= 1.0:
            raise ValidationError("cooling fraction must lie in (0, 1]")
        for k, v in self.rw_sd.items():
            if v < 0.0:
                raise ValidationError(f"rw sd for {k!r} must be >= 0")


@dataclass(frozen=True)
class IbpfSettings(If2Settings):
    """IF2 settings plus a block partition of the units (default: one block
    per unit)."""

    blocks: Sequence[Sequence[str]] | None = None


def cooled_sd(sd0: float, cooling: float, iteration: int) -> float:
    """Random-walk sd at a given iteration under geometric cooling.

    Iteration 0 is the uncooled value; after 50 iterations the sd is
    ``cooling * sd0``.
    """
    return sd0 * cooling ** (iteration / 50.0)


@dataclass
class IterationRecord:
    iteration: int
    pass_loglik: float
    eval_loglik: float
    center: ParameterSet


@dataclass
class If2Result:
    """Search output: best center parameters, per-iteration trace, and the
    final parameter swarm (natural scale, one row per particle) usable for
    likelihood-weighted empirical-Bayes sampling."""

    best: ParameterSet
    best_loglik: float
    trace: list[IterationRecord]
    swarm: np.ndarray
    searched: tuple[str, ...]
    aborted: bool = False


@dataclass
class _SearchLayout:
    """Searched-parameter bookkeeping for one run."""

    keys: tuple[str, ...]          # explicit parameter keys, in column order
    sds: np.ndarray                # (P,) estimation-scale random-walk sds
    transforms: tuple[str, ...]
    shared_cols: np.ndarray        # column indices of shared parameters
    unit_cols: np.ndarray          # column indices of unit-specific parameters
    col_block: np.ndarray          # owning block per column (-1 = shared)
    bases: tuple[str, ...]         # base name per column


def _expand_search(
    model: PompModel, params: ParameterSet, rw_sd: Mapping[str, float],
    block_of_unit: Mapping[str, int],
) -> _SearchLayout:
    keys: list[str] = []
    sds: list[float] = []
    for name, sd in rw_sd.items():
        if name in params:
            keys.append(name)
            sds.append(float(sd))
        else:
            fam = [k for k in params if split_key(k)[0] == name and split_key(k)[1] is not None]
            if not fam:
                raise ValidationError(f"rw_sd names unknown parameter {name!r}")
            keys.extend(sorted(fam, key=lambda k: model.units.index(split_key(k)[1])))
            sds.extend([float(sd)] * len(fam))
    col_block = []
    transforms = []
    bases = []
    for k in keys:
        base, unit = split_key(k)
        bases.append(base)
        transforms.append(params.transform_of(k))
        if unit is None:
            col_block.append(-1)
        else:
            if unit not in block_of_unit:
                raise ValidationError(f"searched parameter {k!r} references unknown unit {unit!r}")
            col_block.append(block_of_unit[unit])
    col_block = np.array(col_block, dtype=int)
    return _SearchLayout(
        keys=tuple(keys),
        sds=np.array(sds),
        transforms=tuple(transforms),
        shared_cols=np.flatnonzero(col_block < 0),
        unit_cols=np.flatnonzero(col_block >= 0),
        col_block=col_block,
        bases=tuple(bases),
    )


def _natural_theta(
    model: PompModel,
    fixed_theta: dict,
    layout: _SearchLayout,
    est_shared: np.ndarray,   # (B, J, P_sh)
    est_unit: np.ndarray,     # (J, P_us)
    block_of_unit: Mapping[str, int],
) -> dict:
    """Assemble the per-particle natural-scale theta mapping for one pass."""
    J = est_unit.shape[0] if est_unit.size else est_shared.shape[1]
    U = model.n_units
    theta = dict(fixed_theta)
    grouped: dict[str, np.ndarray] = {}
    for base in set(layout.bases):
        cols = [i for i, b in enumerate(layout.bases) if b == base]
        mat = np.empty((J, U))
        template = fixed_theta.get(base)
        if template is not None:
            mat[:] = template
        for ci in cols:
            tr = layout.transforms[ci]
            sh_pos = np.searchsorted(layout.shared_cols, ci)
            if layout.col_block[ci] < 0:
                per_block = est_shared[:, :, sh_pos]  # (B, J)
                for u_idx, u in enumerate(model.units):
                    vals = per_block[block_of_unit[u]]
                    mat[:, u_idx] = _vec_from_est(vals, tr)
            else:
                us_pos = np.searchsorted(layout.unit_cols, ci)
                unit = split_key(layout.keys[ci])[1]
                mat[:, model.units.index(unit)] = _vec_from_est(est_unit[:, us_pos], tr)
        grouped[base] = mat
    theta.update(grouped)
    return theta


def _vec_from_est(values: np.ndarray, transform: str) -> np.ndarray:
    if transform == "identity":
        return values
    if transform == "log":
        return np.exp(values)
    if transform == "logit":
        return 1.0 / (1.0 + np.exp(-values))
    raise ValidationError(f"unknown transform {transform!r}")


def _center_params(
    params: ParameterSet, layout: _SearchLayout,
    est_shared: np.ndarray, est_unit: np.ndarray,
) -> ParameterSet:
    updates = {}
    for ci, key in enumerate(layout.keys):
        if layout.col_block[ci] < 0:
            sh_pos = np.searchsorted(layout.shared_cols, ci)
            center = float(np.mean(est_shared[:, :, sh_pos]))
        else:
            us_pos = np.searchsorted(layout.unit_cols, ci)
            center = float(np.mean(est_unit[:, us_pos]))
        updates[key] = from_estimation(center, layout.transforms[ci])
    return params.replace(updates)


def ibpf(
    model: PompModel,
    data: ObservationSeries,
    grid: TimeGrid,
    covs: CovariateTable | None,
    settings: IbpfSettings,
    seed: int = 0,
) -> If2Result:
    """Iterated block particle filter parameter search (default blocks: one
    per unit)."""
    given = getattr(settings, "blocks", None)
    blocks = resolve_blocks(model, given if given is not None else [[u] for u in model.units])
    return _iterated_filter(model, data, grid, covs, settings, blocks, seed)


def if2(
    model: PompModel,
    data: ObservationSeries,
    grid: TimeGrid,
    covs: CovariateTable | None,
    settings: If2Settings,
    seed: int = 0,
) -> If2Result:
    """IF2 iterated filtering: the one-block case of the block search."""
    return _iterated_filter(model, data, grid, covs, settings, [list(model.units)], seed)


def _iterated_filter(
    model: PompModel,
    data: ObservationSeries,
    grid: TimeGrid,
    covs: CovariateTable | None,
    settings: If2Settings,
    blocks: list[list[str]],
    seed: int,
) -> If2Result:
    params = settings.initial if settings.initial is not None else model.params
    model.check_params(params)
    if data.n_obs != grid.n_obs:
        raise ValidationError("data/grid length mismatch")
    if model.needs_covariates:
        if covs is None:
            raise ValidationError(f"model {model.name!r} requires covariates")
        covs.check_span(grid.t0, grid.t_end)

    J, M = settings.J, settings.M
    B = len(blocks)
    unit_index = {u: i for i, u in enumerate(model.units)}
    block_of_unit = {u: b for b, bu in enumerate(blocks) for u in bu}
    block_cols = [np.array([unit_index[u] for u in b]) for b in blocks]
    unit_slices = model.unit_state_indices()
    if len(unit_slices) == 1:
        block_states = [np.arange(model.n_states)]
    else:
        block_states = [np.concatenate([unit_slices[i] for i in cols]) for cols in block_cols]

    layout = _expand_search(model, params, settings.rw_sd, block_of_unit)
    fixed = {k: v for k, v in compile_theta(model, params).items()}
    P_sh, P_us = layout.shared_cols.size, layout.unit_cols.size

    ss = np.random.SeedSequence(seed)
    children = ss.spawn(2 * M + 1)
    init_rng = np.random.Generator(np.random.Philox(children[0]))

    # initial swarm on the estimation scale
    est0 = params.to_est(layout.keys)
    est_unit = np.tile(est0[layout.unit_cols], (J, 1)) if P_us else np.zeros((J, 0))
    est_shared = (
        np.tile(est0[layout.shared_cols], (B, J, 1)) if P_sh else np.zeros((B, J, 0))
    )
    if settings.hypercube:
        for name, (lo, hi) in settings.hypercube.items():
            matches = [i for i, k in enumerate(layout.keys) if k == name or split_key(k)[0] == name]
            if not matches:
                raise ValidationError(f"hypercube names unsearched parameter {name!r}")
            for ci in matches:
                tr = layout.transforms[ci]
                draws = init_rng.uniform(lo, hi, size=J)
                est = np.array([to_estimation(v, tr) for v in draws])
                if layout.col_block[ci] < 0:
                    est_shared[:, :, np.searchsorted(layout.shared_cols, ci)] = est[None, :]
                else:
                    est_unit[:, np.searchsorted(layout.unit_cols, ci)] = est

    acc = model.accum_indices
    trace: list[IterationRecord] = []
    best: tuple[float, ParameterSet] | None = None
    aborted = False

    for m in range(1, M + 1):
        pass_rng = np.random.Generator(np.random.Philox(children[2 * m - 1]))
        eval_seed = children[2 * m]
        sd_m = np.array([cooled_sd(s, settings.cooling, m) for s in layout.sds])
        sd_sh, sd_us = sd_m[layout.shared_cols], sd_m[layout.unit_cols]
        snapshot = (est_shared.copy(), est_unit.copy())

        def perturb() -> None:
            nonlocal est_shared, est_unit
            if P_sh:
                est_shared = est_shared + pass_rng.normal(size=(B, J, P_sh)) * sd_sh
            if P_us:
                est_unit = est_unit + pass_rng.normal(size=(J, P_us)) * sd_us

        perturb()
        theta = _natural_theta(model, fixed, layout, est_shared, est_unit, block_of_unit)
        X = np.asarray(model.rinit(theta, J, pass_rng), dtype=float)
        pass_loglik = 0.0
        failed_pass = False

        for n, (t_prev, t_next) in enumerate(grid.intervals()):
            if n > 0:
                perturb()
                theta = _natural_theta(model, fixed, layout, est_shared, est_unit, block_of_unit)
            if acc.size:
                X[:, acc] = 0.0
            X = advance(model, X, t_prev, t_next, theta, covs, grid, pass_rng)
            y = data.values[:, n]
            missing = np.isnan(y)
            if missing.all():
                continue
            logw_units = np.asarray(
                model.dunit_measure(np.where(missing, 0.0, y), X, t_next, theta), dtype=float
            )
            logw_units[:, missing] = 0.0
            for b, cols in enumerate(block_cols):
                logw = logw_units[:, cols].sum(axis=1)
                c = logmeanexp(logw)
                pass_loglik += c
                if not np.isfinite(c):
                    failed_pass = True
                    continue
                if np.ptp(logw) < 1e-14:
                    continue
                idx = systematic_indices(logw, pass_rng.random())
                if B == 1:
                    X = X[idx]
                else:
                    sl = block_states[b]
                    X[:, sl] = X[np.ix_(idx, sl)]
                if P_sh:
                    est_shared[b] = est_shared[b][idx]
                if P_us:
                    owned = np.flatnonzero(layout.col_block[layout.unit_cols] == b)
                    if owned.size:
                        est_unit[:, owned] = est_unit[np.ix_(idx, owned)]

        if failed_pass:
            # total filtering failure: restore the swarm and stop after tracing
            est_shared, est_unit = snapshot
            aborted = True

        # reconcile shared parameters across blocks (mean on estimation scale)
        if P_sh and B > 1:
            est_shared[:] = est_shared.mean(axis=0, keepdims=True)

        center = _center_params(params, layout, est_shared, est_unit)
        eval_J = settings.eval_particles or J
        eval_res = particle_filter(
            model, center, data, grid, covs, J=eval_J,
            rng=np.random.Generator(np.random.Philox(eval_seed)),
            blocks=blocks,
        )
        trace.append(IterationRecord(m, float(pass_loglik), eval_res.loglik, center))
        if np.isfinite(eval_res.loglik) and (best is None or eval_res.loglik >= best[0]):
            best = (eval_res.loglik, center)
        if aborted:
            break

    if best is None:
        last = trace[-1] if trace else IterationRecord(0, -np.inf, -np.inf, params)
        best = (last.eval_loglik, last.center)

    swarm = np.empty((J, len(layout.keys)))
    for ci in range(len(layout.keys)):
        tr = layout.transforms[ci]
        if layout.col_block[ci] < 0:
            vals = est_shared[0, :, np.searchsorted(layout.shared_cols, ci)]
        else:
            vals = est_unit[:, np.searchsorted(layout.unit_cols, ci)]
        swarm[:, ci] = _vec_from_est(vals, tr)

    return If2Result(
        best=best[1],
        best_loglik=best[0],
        trace=trace,
        swarm=swarm,
        searched=layout.keys,
        aborted=aborted,
    )
