"""Derivative-free optimization and trajectory matching.

Trajectory matching maximizes the measurement log-density of a deterministic
skeleton over free parameters on the estimation scale, using a restarted
Nelder-Mead simplex (the restart-until-no-improvement scheme plays the role
of subplex: repeated simplex solves from the incumbent defeat premature
collapse of the simplex).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize as sciopt

from .errors import ValidationError
from .grid import TimeGrid
from .model import PompModel, advance, compile_theta
from .params import ParameterSet
from .series import CovariateTable, ObservationSeries


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    n_eval: int
    restarts: int


def restarted_nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    max_restarts: int = 10,
    xatol: float = 1e-9,
    fatol: float = 1e-11,
    improvement_tol: float = 1e-9,
    max_iter: int | None = None,
) -> OptimResult:
    """Minimize ``f`` by Nelder-Mead, restarting at the incumbent until the
    restart no longer improves. Deterministic for deterministic ``f``."""
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    best = float(f(x))
    n_eval, restarts = 1, 0
    for _ in range(max_restarts):
        res = sciopt.minimize(
            f, x, method="Nelder-Mead",
            options={"xatol": xatol, "fatol": fatol, "maxiter": max_iter or 400 * x.size},
        )
        n_eval += int(res.nfev)
        restarts += 1
        if res.fun < best - improvement_tol:
            x, best = np.atleast_1d(res.x), float(res.fun)
        else:
            if res.fun < best:
                x, best = np.atleast_1d(res.x), float(res.fun)
            break
    return OptimResult(x=x, fun=best, n_eval=n_eval, restarts=restarts)


def deterministic_loglik(
    model: PompModel,
    params: ParameterSet,
    data: ObservationSeries,
    grid: TimeGrid,
    covs: CovariateTable | None = None,
) -> float:
    """Measurement log-density summed along the deterministic skeleton."""
    theta = compile_theta(model, params)
    X = np.asarray(model.rinit(theta, 1, None), dtype=float)
    acc = model.accum_indices
    total = 0.0
    for n, (t_prev, t_next) in enumerate(grid.intervals()):
        if acc.size:
            X[:, acc] = 0.0
        X = advance(model, X, t_prev, t_next, theta, covs, grid, None)
        y = data.values[:, n]
        missing = np.isnan(y)
        if missing.all():
            continue
        logw = np.asarray(model.dunit_measure(np.where(missing, 0.0, y), X, t_next, theta))
        total += float(logw[0, ~missing].sum())
    return total


@dataclass
class TrajMatchResult:
    best: ParameterSet
    loglik: float
    n_eval: int
    restarts: int


def trajectory_match(
    model: PompModel,
    data: ObservationSeries,
    grid: TimeGrid,
    covs: CovariateTable | None,
    params: ParameterSet | None = None,
    free: Sequence[str] = (),
    max_restarts: int = 10,
) -> TrajMatchResult:
    """Maximize the skeleton measurement log-density over ``free`` parameters.

    ``free`` may name shared parameters or unit-specific keys. An empty list
    returns the input parameters and their log-likelihood unchanged.
    """
    if model.stochastic:
        raise ValidationError("trajectory matching requires a deterministic skeleton")
    params = params if params is not None else model.params
    model.check_params(params)
    free = list(free)
    if not free:
        return TrajMatchResult(params, deterministic_loglik(model, params, data, grid, covs), 0, 0)
    params.require(free)

    def objective(est: np.ndarray) -> float:
        ps = params.from_est(free, est)
        return -deterministic_loglik(model, ps, data, grid, covs)

    x0 = params.to_est(free)
    f0 = objective(x0)
    if not np.isfinite(f0):
        bad = [n for n in free if not np.isfinite(params[n])]
        raise ValidationError(
            f"objective is non-finite at the starting parameters; "
            f"check free parameters {bad or free}"
        )
    res = restarted_nelder_mead(objective, x0, max_restarts=max_restarts)
    return TrajMatchResult(
        best=params.from_est(free, res.x),
        loglik=-res.fun,
        n_eval=res.n_eval,
        restarts=res.restarts,
    )
