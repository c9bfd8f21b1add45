"""Deterministic metapopulation cholera model with an aquatic reservoir.

Ten departments, five vaccination cohorts per department (unvaccinated, then
one/two dose by under/over five), SEIAR compartments plus separate recovered
classes for symptomatic and asymptomatic infection, and a bacterial water
compartment per department. People move between departments at gravity-model
rates; water moves along river-flow connections. The skeleton is integrated
with fixed-step RK4; reported cases are log-normal around the reporting rate
times accumulated E -> I transitions, which makes maximum likelihood a least
squares calculation on the log scale.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..euler import rk4_step
from ..measures import lognormal_case_logpdf, lognormal_case_sample
from ..model import PompModel, unit_param
from ..params import ParamDef, ParameterSet
from ..units import per_day, per_week, WEEKS_PER_YEAR
from .efficacy import ONE_DOSE_MEDIAN, TWO_DOSE_MEDIAN, UNDER5_EFFICACY_FACTOR
from .geography import GeographyData, synthetic_geography
from .scenarios import VaccinationSchedule, empty_schedule

N_COHORTS = 5  # z = 0 unvaccinated, 1..4 vaccination groups

#: Vaccine effectiveness per cohort (constant; waning is a compartment exit).
COHORT_EFFICACY = np.array(
    [
        0.0,
        ONE_DOSE_MEDIAN * UNDER5_EFFICACY_FACTOR,
        TWO_DOSE_MEDIAN * UNDER5_EFFICACY_FACTOR,
        ONE_DOSE_MEDIAN,
        TWO_DOSE_MEDIAN,
    ]
)


def model2_force_of_infection(W, i_total, a_total, t, a_seas, phi, beta_w, wsat, beta, epsilon):
    """Per-unit force of infection: seasonal saturating water term plus
    direct transmission, per year."""
    seasonal = 0.5 * (1.0 + a_seas * np.cos(2.0 * np.pi * np.asarray(t, dtype=float) + phi))
    water = beta_w * W / (wsat + W)
    return seasonal * water + beta * (i_total + epsilon * a_total)


def default_params() -> ParameterSet:
    return ParameterSet(
        {
            "beta": ParamDef(5.97e-15, "log"),
            "beta_w": ParamDef(1.1, "log"),
            "wsat": ParamDef(1e5, "log"),
            "a_seas": ParamDef(0.4),
            "phi": ParamDef(0.97),  # stored unwrapped; 2*pi aliasing is not resolved
            "mu_ei": ParamDef(per_day(1.0 / 1.3), "log"),
            "mu_ir": ParamDef(per_day(1.0 / 7.0), "log"),
            "mu_rs": ParamDef(1.0 / 1.4e11, "log"),
            "omega1": ParamDef(1.0, "log"),
            "omega2": ParamDef(1.0 / 5.0, "log"),
            "f": ParamDef(0.2, "logit"),
            "epsilon": ParamDef(0.001, "logit"),
            "epsilon_w": ParamDef(1e-7, "logit"),
            "mu_w": ParamDef(per_week(179.0), "log"),
            "delta_w": ParamDef(per_week(1.0 / 3.0), "log"),
            "rho": ParamDef(0.20, "logit"),
            "psi": ParamDef(1.319, "log"),
            "v_rate": ParamDef(1e-12, "log"),
            "w_r": ParamDef(1.0, "log"),
        }
    )


def _validate(params: ParameterSet) -> None:
    if not 0.0 <= params["a_seas"] < 1.0:
        raise ValidationError("seasonal amplitude must lie in [0, 1)")


def build_model2(
    init_cases: np.ndarray,
    geography: GeographyData | None = None,
    schedule: VaccinationSchedule | None = None,
    name: str = "model2",
) -> PompModel:
    """Assemble the deterministic metapopulation model.

    ``init_cases`` is the first reported week per department; latent states
    initialize as I_u0 = cases/rho, S_u0 = Pop_u - I_u0, all else zero.
    """
    geo = geography or synthetic_geography()
    units = geo.units
    U = geo.n_units
    init_cases = np.asarray(init_cases, dtype=float)
    if init_cases.shape != (U,):
        raise ValidationError(f"init_cases must have shape ({U},)")
    if np.any(np.isnan(init_cases)):
        raise ValidationError("first-week cases must not be missing for initialization")
    schedule = schedule if schedule is not None else empty_schedule(units)
    if schedule.n_cohorts not in (0, 4):
        raise ValidationError("model2 expects a 4-cohort vaccination schedule")
    pops = geo.populations

    # per-unit layout: S0..S4, E0..E4, I0..I4, A0..A4, R0..R4, RA0..RA4, W, CI, TI, CLAMP
    comp_names = (
        [f"S{z}" for z in range(N_COHORTS)]
        + [f"E{z}" for z in range(N_COHORTS)]
        + [f"I{z}" for z in range(N_COHORTS)]
        + [f"A{z}" for z in range(N_COHORTS)]
        + [f"R{z}" for z in range(N_COHORTS)]
        + [f"RA{z}" for z in range(N_COHORTS)]
        + ["W", "CI", "TI", "CLAMP"]
    )
    V = len(comp_names)  # 34
    state_names = tuple(f"{c}[{u}]" for u in units for c in comp_names)
    unit_states = tuple(tuple(f"{c}[{u}]" for c in comp_names) for u in units)
    sl = {c: i for i, c in enumerate(comp_names)}
    S_cols = slice(0, 5)
    E_cols = slice(5, 10)
    I_cols = slice(10, 15)
    A_cols = slice(15, 20)
    R_cols = slice(20, 25)
    RA_cols = slice(25, 30)
    iW, iCI, iTI, iCL = sl["W"], sl["CI"], sl["TI"], sl["CLAMP"]

    def rinit(theta, J, rng):
        rho = unit_param(theta, "rho")
        i0 = init_cases[None, :] / rho  # (J or 1, U)
        i0 = np.broadcast_to(i0, (J, U)).copy()
        X = np.zeros((J, U, V))
        X[:, :, sl["I0"]] = i0
        X[:, :, sl["S0"]] = pops[None, :] - i0
        return X.reshape(J, U * V)

    def step(X, t, dt, theta, covs, rng):
        J = X.shape[0]
        Y = X.reshape(J, U, V)

        a_seas = unit_param(theta, "a_seas")
        phi = unit_param(theta, "phi")
        beta_w = unit_param(theta, "beta_w")
        wsat = unit_param(theta, "wsat")
        beta = unit_param(theta, "beta")
        eps = unit_param(theta, "epsilon")
        eps_w = unit_param(theta, "epsilon_w")
        mu_ei = unit_param(theta, "mu_ei")
        mu_ir = unit_param(theta, "mu_ir")
        mu_rs = unit_param(theta, "mu_rs")
        om1 = unit_param(theta, "omega1")
        om2 = unit_param(theta, "omega2")
        f = unit_param(theta, "f")
        mu_w = unit_param(theta, "mu_w")
        delta_w = unit_param(theta, "delta_w")
        w_r = unit_param(theta, "w_r")
        # v_rate is a fixed constant; per-particle search of it is not supported
        v_rate = float(np.mean(unit_param(theta, "v_rate")))
        T = geo.gravity_matrix(v_rate)
        T_out = T.sum(axis=1)
        TW = geo.river_flows
        TW_out = TW.sum(axis=1)

        def deriv(tt, Yf):
            Yv = Yf.reshape(J, U, V)
            S = Yv[:, :, S_cols]
            E = Yv[:, :, E_cols]
            I = Yv[:, :, I_cols]
            A = Yv[:, :, A_cols]
            R = Yv[:, :, R_cols]
            RA = Yv[:, :, RA_cols]
            W = Yv[:, :, iW]
            lam = model2_force_of_infection(
                W, I.sum(-1), A.sum(-1), tt, a_seas, phi, beta_w, wsat, beta, eps
            )  # (J, U)
            effective = lam[:, :, None] * (1.0 - COHORT_EFFICACY[None, None, :])
            inf_flow = effective * S  # (J, U, 5)

            d = np.zeros_like(Yv)
            dS = d[:, :, S_cols]
            dE = d[:, :, E_cols]
            dI = d[:, :, I_cols]
            dA = d[:, :, A_cols]
            dR = d[:, :, R_cols]
            dRA = d[:, :, RA_cols]

            f3 = f[:, :, None] if np.ndim(f) else f
            mu_ei3 = mu_ei[:, :, None] if np.ndim(mu_ei) else mu_ei
            mu_ir3 = mu_ir[:, :, None] if np.ndim(mu_ir) else mu_ir
            mu_rs3 = mu_rs[:, :, None] if np.ndim(mu_rs) else mu_rs

            dS[:] = -inf_flow + mu_rs3 * (R + RA)
            dE[:] = inf_flow - mu_ei3 * E
            dI[:] = f3 * mu_ei3 * E - mu_ir3 * I
            dA[:] = (1.0 - f3) * mu_ei3 * E - mu_ir3 * A
            dR[:] = mu_ir3 * I - mu_rs3 * R
            dRA[:] = mu_ir3 * A - mu_rs3 * RA
            # waning of vaccine protection back to cohort 0
            om = np.stack(
                [np.broadcast_to(o, lam.shape) for o in (om1, om2, om1, om2)], axis=-1
            ) if np.ndim(om1) or np.ndim(om2) else np.array([om1, om2, om1, om2])
            wane = om * S[:, :, 1:]
            dS[:, :, 1:] -= wane
            dS[:, :, 0] += wane.sum(-1)
            # vaccination dosing out of S_u0
            if schedule.n_cohorts:
                dosing = schedule.rates_at(tt) * WEEKS_PER_YEAR  # (U, 4) persons/yr
                pc = dosing[None, :, :] / np.maximum(S[:, :, 0], 1.0)[:, :, None]
                vacc = pc * S[:, :, 0][:, :, None]
                dS[:, :, 0] -= vacc.sum(-1)
                dS[:, :, 1:] += vacc
            # gravity transport of every person compartment
            for block, dblock in ((S, dS), (E, dE), (I, dI), (A, dA), (R, dR), (RA, dRA)):
                dblock += np.einsum("vu,jvz->juz", T, block) - block * T_out[None, :, None]
            # water dynamics and transport
            shed = mu_w * (I.sum(-1) + eps_w * A.sum(-1))
            d[:, :, iW] = (
                shed
                - delta_w * W
                + w_r * (np.einsum("vu,jv->ju", TW, W) - W * TW_out[None, :])
            )
            d[:, :, iCI] = (f3 * mu_ei3 * E).sum(-1)
            d[:, :, iTI] = inf_flow.sum(-1)
            return d.reshape(J, U * V)

        out = rk4_step(deriv, t, X, dt)
        neg = out < 0.0
        if np.any(neg):
            clamp = np.where(neg, -out, 0.0).reshape(J, U, V).sum(axis=2)
            out = np.maximum(out, 0.0)
            out = out.reshape(J, U, V)
            out[:, :, iCL] += clamp
            return out.reshape(J, U * V)
        return out

    def dunit(y, X, t, theta):
        Y = X.reshape(X.shape[0], U, V)
        mean = unit_param(theta, "rho") * Y[:, :, iCI]
        return lognormal_case_logpdf(y[None, :], mean, unit_param(theta, "psi"))

    def runit(X, t, theta, rng):
        Y = X.reshape(X.shape[0], U, V)
        mean = unit_param(theta, "rho") * Y[:, :, iCI]
        psi = np.broadcast_to(np.asarray(unit_param(theta, "psi"), dtype=float), mean.shape)
        return lognormal_case_sample(mean, psi, rng)

    return PompModel(
        name=name,
        units=units,
        state_names=state_names,
        params=default_params(),
        rinit=rinit,
        step=step,
        dunit_measure=dunit,
        runit_measure=runit,
        accumulators=tuple(f"CI[{u}]" for u in units) + tuple(f"TI[{u}]" for u in units),
        true_infection_states=tuple(f"TI[{u}]" for u in units),
        measured_states=tuple(f"CI[{u}]" for u in units),
        stochastic=False,
        unit_states=unit_states,
        validate_params=_validate,
    )


def person_total(model: PompModel, X: np.ndarray, geography: GeographyData) -> np.ndarray:
    """National person total of a model2 state array (J, S)."""
    U = geography.n_units
    V = X.shape[1] // U
    Y = X.reshape(X.shape[0], U, V)
    return Y[:, :, :30].sum(axis=(1, 2))
