"""Stochastic metapopulation cholera model with a rainfall-driven reservoir.

Each department carries susceptibles by vaccination cohort, pooled infected
and asymptomatic compartments, a three-stage (Erlang) recovered chain, and a
bacterial water variable. Infection pressure combines a saturating water
term - amplified after the hurricane for the two directly struck departments
- with between-department human transmission. Shedding into water scales
with population density and standardized rainfall. All deaths are balanced
by births into the local unvaccinated susceptible class, so department
populations are conserved exactly; gamma white noise acts on the infection
flows, drawn independently per department. Reported cases are negative
binomial on accumulated new symptomatic infections.

Initialization enforces the model dynamics on the pre-window case reports
(four weeks up to and including t0); departments reporting zero in the week
before t0 use estimated initial-infection parameters instead.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import ValidationError
from ..euler import euler_multinomial, gamma_increment
from ..measures import nb_logpmf, nb_sample
from ..model import PompModel, unit_param
from ..params import ParamDef, ParameterSet
from ..units import DAYS_PER_YEAR, WEEK, WEEKS_PER_YEAR, per_day, per_week, weekly_variance
from .efficacy import AGE_CORRECTION, EfficacyCurve, default_curve
from .geography import GeographyData, synthetic_geography
from .scenarios import VaccinationSchedule, empty_schedule

BETA_HUMAN = np.array([0.82, 0.02, 0.38, 0.21, 0.51, 0.51, 0.35, 0.12, 0.26, 0.10]) * 1e-6
BETA_WATER = np.array([4.70, 21.00, 24.97, 27.14, 5.28, 30.70, 10.17, 0.99, 11.89, 12.82])
HURRICANE_BETA = {"Grand'Anse": 36.88, "Sud": 31.64}
HURRICANE_DECAY = {"Grand'Anse": 98.98, "Sud": 58.43}
I0_DEFAULTS = {"Grand'Anse": 21.0, "Nippes": 6.0}


def model3_force_of_infection(
    W, I, A, t, beta_w, beta_hm, h_hm, t_hm, beta_h, epsilon
):
    """Per-unit force of infection: saturating water exposure with hurricane
    amplification, plus transmission from the other units' infections."""
    water = W / (1.0 + W)
    rate_w = np.asarray(beta_w, dtype=float)
    if t_hm is not None and t >= t_hm:
        rate_w = rate_w + beta_hm * np.exp(-h_hm * (t - t_hm))
    burden = I + epsilon * A
    others = burden.sum(axis=-1, keepdims=True) - burden
    return rate_w * water + beta_h * others


def default_params(geography: GeographyData | None = None) -> ParameterSet:
    geo = geography or synthetic_geography()
    entries = {
        "mu_w": ParamDef(per_week(9.77e-7), "log"),
        "delta_w": ParamDef(per_week(1.0 / 0.11), "log"),
        "a_rain": ParamDef(1.00, "log"),
        "r_rain": ParamDef(0.78, "log"),
        "epsilon": ParamDef(1.0),
        "epsilon_w": ParamDef(0.008, "logit"),
        "f": ParamDef(0.25, "logit"),
        "mu_ir": ParamDef(per_day(1.0 / 5.0), "log"),
        "mu_rs": ParamDef(1.0 / 8.0, "log"),
        "delta": ParamDef(1.59e-2, "log"),
        "delta_c": ParamDef(1.46, "log"),
        "sigma_proc": ParamDef(0.218, "log"),
        "rho": ParamDef(0.98, "logit"),
        "psi": ParamDef(88.58, "log"),
    }
    for i, u in enumerate(geo.units):
        entries[f"beta_h[{u}]"] = ParamDef(float(BETA_HUMAN[i % 10]), "log")
        entries[f"beta_w[{u}]"] = ParamDef(float(BETA_WATER[i % 10]), "log")
        entries[f"beta_hm[{u}]"] = ParamDef(HURRICANE_BETA.get(u, 0.0))
        entries[f"h_hm[{u}]"] = ParamDef(HURRICANE_DECAY.get(u, 1.0), "log")
        entries[f"i0[{u}]"] = ParamDef(I0_DEFAULTS.get(u, 1.0), "log")
    return ParameterSet(entries)


def _validate(params: ParameterSet) -> None:
    for key in params:
        if key.startswith("beta_hm[") and params[key] < 0:
            raise ValidationError(f"hurricane amplitude {key} must be nonnegative")
    if not 0.0 < params["rho"] <= 1.0:
        raise ValidationError("reporting rate must lie in (0, 1]")


def build_model3(
    init_obs: np.ndarray,
    geography: GeographyData | None = None,
    schedule: VaccinationSchedule | None = None,
    curve: EfficacyCurve | None = None,
    median_rainfall: float = 0.002376,
    name: str = "model3",
) -> PompModel:
    """Assemble the stochastic metapopulation model.

    ``init_obs`` is the (U, 4) block of case reports for weeks t-3..t0 used
    to enforce the model dynamics at initialization. ``median_rainfall`` is
    the median standardized rainfall entering the water-equilibrium start;
    pass the value computed from the bound rainfall covariate when available.
    """
    geo = geography or synthetic_geography()
    units = geo.units
    U = geo.n_units
    init_obs = np.asarray(init_obs, dtype=float)
    if init_obs.shape != (U, 4):
        raise ValidationError(f"init_obs must be (U, 4) = ({U}, 4) case reports up to t0")
    if np.any(np.isnan(init_obs)):
        raise ValidationError("initialization weeks must not contain missing values")
    schedule = schedule if schedule is not None else empty_schedule(units)
    curve = curve or default_curve()
    Z = schedule.n_cohorts
    dose_type = schedule.dose_type.astype(int)
    pops = np.round(geo.populations)
    dens = geo.densities

    comp_names = (
        [f"S{z}" for z in range(Z + 1)]
        + ["I", "A", "R1", "R2", "R3", "W", "CI", "TI"]
    )
    V = len(comp_names)
    state_names = tuple(f"{c}[{u}]" for u in units for c in comp_names)
    unit_states = tuple(tuple(f"{c}[{u}]" for c in comp_names) for u in units)
    iI, iA = Z + 1, Z + 2
    iR = np.arange(Z + 3, Z + 6)
    iW, iCI, iTI = Z + 6, Z + 7, Z + 8

    def protections(t: float) -> np.ndarray:
        """theta_uz(t) for cohorts z >= 1, shape (U, Z)."""
        if Z == 0:
            return np.zeros((U, 0))
        weeks_since = (t - schedule.cohort_start) / WEEK  # (U, Z)
        out = np.empty((U, Z))
        for z in range(Z):
            out[:, z] = AGE_CORRECTION * curve.protection(weeks_since[:, z], dose_type[z])
        return out

    def rinit(theta, J, rng):
        rho = unit_param(theta, "rho")
        f = unit_param(theta, "f")
        mu_ir_day = unit_param(theta, "mu_ir") / DAYS_PER_YEAR
        hazard = mu_ir_day + (unit_param(theta, "delta") + unit_param(theta, "delta_c")) / 365.0
        y_prev = init_obs[:, 2]  # y*_{u,-1}
        i0_est = unit_param(theta, "i0")
        I0 = np.broadcast_to(y_prev[None, :] / (7.0 * rho * hazard), (J, U)).copy()
        zero_mask = y_prev == 0.0
        if np.any(zero_mask):
            I0[:, zero_mask] = np.broadcast_to(i0_est, (J, U))[:, zero_mask]
        I0 = np.round(I0)
        A0 = np.round(I0 * (1.0 - f) / f)
        total = init_obs.sum(axis=1)[None, :]
        R_each = (total / (rho * f) - (I0 + A0)) / 3.0
        if np.any(R_each < 0):
            warnings.warn("model3 initialization clamped negative recovered counts at 0", stacklevel=2)
            R_each = np.maximum(R_each, 0.0)
        R_each = np.round(R_each)
        factor = 1.0 + unit_param(theta, "a_rain") * median_rainfall ** unit_param(theta, "r_rain")
        W0 = factor * dens[None, :] * unit_param(theta, "mu_w") * (
            I0 + unit_param(theta, "epsilon_w") * A0
        ) / unit_param(theta, "delta_w")
        X = np.zeros((J, U, V))
        X[:, :, 0] = pops[None, :] - I0 - A0 - 3.0 * R_each
        X[:, :, iI] = I0
        X[:, :, iA] = A0
        for k in range(3):
            X[:, :, iR[k]] = R_each
        X[:, :, iW] = np.broadcast_to(W0, (J, U))
        return X.reshape(J, U * V)

    def step(X, t, dt, theta, covs, rng):
        J = X.shape[0]
        Y = X.reshape(J, U, V)
        S = Y[:, :, : Z + 1].astype(np.int64)
        I = Y[:, :, iI].astype(np.int64)
        A = Y[:, :, iA].astype(np.int64)
        R = Y[:, :, iR[0] : iR[0] + 3].astype(np.int64)
        W = Y[:, :, iW]

        if covs is None or covs.rainfall is None:
            raise ValidationError(
                f"model3 requires a rainfall covariate (missing at t={t:.6g})"
            )
        rain = covs.rainfall_at(t)  # (U,)
        t_hm = covs.hurricane_time

        lam = model3_force_of_infection(
            W, I.astype(float), A.astype(float), t,
            unit_param(theta, "beta_w"),
            unit_param(theta, "beta_hm"),
            unit_param(theta, "h_hm"),
            t_hm,
            unit_param(theta, "beta_h"),
            unit_param(theta, "epsilon"),
        )  # (J, U)
        sigma2 = weekly_variance(np.asarray(unit_param(theta, "sigma_proc"), dtype=float) ** 2)
        noise = gamma_increment(np.full((J, U), dt), np.broadcast_to(sigma2, (J, U)), rng) / dt
        lam_noisy = lam * noise
        f = unit_param(theta, "f")
        death = unit_param(theta, "delta")
        death_c = unit_param(theta, "delta_c")
        mu_ir = unit_param(theta, "mu_ir")
        mu_rs3 = 3.0 * unit_param(theta, "mu_rs")

        bshape = (J, U)
        bx = lambda v: np.broadcast_to(np.asarray(v, dtype=float), bshape)

        newS = S.copy()
        newI = I.copy()
        newA = A.copy()
        newR = R.copy()

        # unvaccinated susceptibles: infection split + vaccination dosing
        if Z:
            dosing = schedule.rates_at(t) * WEEKS_PER_YEAR  # (U, Z) persons/yr
            eta = dosing[None, :, :] / np.maximum(S[:, :, 0], 1)[:, :, None]  # (J, U, Z)
            rates0 = np.concatenate(
                [np.stack([bx(f) * lam_noisy, bx(1.0 - f) * lam_noisy], axis=-1), eta], axis=-1
            )
        else:
            rates0 = np.stack([bx(f) * lam_noisy, bx(1.0 - f) * lam_noisy], axis=-1)
        s0 = euler_multinomial(S[:, :, 0], rates0, dt, rng)
        newS[:, :, 0] -= s0.sum(axis=-1)
        newI += s0[:, :, 0]
        newA += s0[:, :, 1]
        if Z:
            newS[:, :, 1:] += s0[:, :, 2:]
        new_sympt = s0[:, :, 0].astype(float)
        new_asympt = s0[:, :, 1].astype(float)

        if Z:
            theta_uz = protections(t)  # (U, Z)
            lamz = lam_noisy[:, :, None] * (1.0 - theta_uz[None, :, :])
            ratesZ = np.stack(
                [
                    bx(f)[:, :, None] * lamz,
                    bx(1.0 - f)[:, :, None] * lamz,
                    np.broadcast_to(bx(death)[:, :, None], (J, U, Z)),
                ],
                axis=-1,
            )
            sz = euler_multinomial(S[:, :, 1:], ratesZ, dt, rng)
            newS[:, :, 1:] -= sz.sum(axis=-1)
            newI += sz[:, :, :, 0].sum(axis=-1)
            newA += sz[:, :, :, 1].sum(axis=-1)
            newS[:, :, 0] += sz[:, :, :, 2].sum(axis=-1)  # deaths rebalanced as births
            new_sympt += sz[:, :, :, 0].sum(axis=-1)
            new_asympt += sz[:, :, :, 1].sum(axis=-1)

        fi = euler_multinomial(I, np.stack([bx(mu_ir), bx(death + death_c)], axis=-1), dt, rng)
        fa = euler_multinomial(A, np.stack([bx(mu_ir), bx(death)], axis=-1), dt, rng)
        r1 = euler_multinomial(R[:, :, 0], np.stack([bx(mu_rs3), bx(death)], axis=-1), dt, rng)
        r2 = euler_multinomial(R[:, :, 1], np.stack([bx(mu_rs3), bx(death)], axis=-1), dt, rng)
        r3 = euler_multinomial(R[:, :, 2], np.stack([bx(death + mu_rs3)], axis=-1), dt, rng)

        newI -= fi.sum(axis=-1)
        newA -= fa.sum(axis=-1)
        newR[:, :, 0] += fi[:, :, 0] + fa[:, :, 0] - r1.sum(axis=-1)
        newR[:, :, 1] += r1[:, :, 0] - r2.sum(axis=-1)
        newR[:, :, 2] += r2[:, :, 0] - r3.sum(axis=-1)
        # balanced demography: every death is a birth into S_u0
        newS[:, :, 0] += fi[:, :, 1] + fa[:, :, 1] + r1[:, :, 1] + r2[:, :, 1] + r3[:, :, 0]

        # water: exact decay with constant shedding over the substep
        a_rain = unit_param(theta, "a_rain")
        r_rain = unit_param(theta, "r_rain")
        factor = 1.0 + a_rain * rain[None, :] ** r_rain
        shed = factor * dens[None, :] * unit_param(theta, "mu_w") * (
            I + unit_param(theta, "epsilon_w") * A
        )
        dw = unit_param(theta, "delta_w")
        decay = np.exp(-dw * dt)
        newW = W * decay + shed * (1.0 - decay) / dw

        out = Y.copy()
        out[:, :, : Z + 1] = newS
        out[:, :, iI] = newI
        out[:, :, iA] = newA
        out[:, :, iR[0] : iR[0] + 3] = newR
        out[:, :, iW] = newW
        out[:, :, iCI] = Y[:, :, iCI] + new_sympt
        out[:, :, iTI] = Y[:, :, iTI] + new_sympt + new_asympt
        return out.reshape(J, U * V)

    def dunit(y, X, t, theta):
        Y = X.reshape(X.shape[0], U, V)
        mean = unit_param(theta, "rho") * Y[:, :, iCI]
        return nb_logpmf(y[None, :], mean, unit_param(theta, "psi"))

    def runit(X, t, theta, rng):
        Y = X.reshape(X.shape[0], U, V)
        mean = unit_param(theta, "rho") * Y[:, :, iCI]
        psi = np.broadcast_to(np.asarray(unit_param(theta, "psi"), dtype=float), mean.shape)
        return nb_sample(mean, psi, rng)

    return PompModel(
        name=name,
        units=units,
        state_names=state_names,
        params=default_params(geo),
        rinit=rinit,
        step=step,
        dunit_measure=dunit,
        runit_measure=runit,
        accumulators=tuple(f"CI[{u}]" for u in units) + tuple(f"TI[{u}]" for u in units),
        true_infection_states=tuple(f"TI[{u}]" for u in units),
        measured_states=tuple(f"CI[{u}]" for u in units),
        needs_covariates=True,
        unit_states=unit_states,
        validate_params=_validate,
    )


def person_counts(model: PompModel, X: np.ndarray, n_units: int) -> np.ndarray:
    """Per-unit person totals (J, U) of a model3 state array: everything but
    the water variable and the accumulators."""
    V = X.shape[1] // n_units
    Y = X.reshape(X.shape[0], n_units, V)
    return Y[:, :, : V - 3].sum(axis=2)
