"""Small fully specified models for testing, benchmarking, and the CLI.

Toy models use weeks as their time unit (observations at t = 1, 2, ...).
They exist so the inference machinery can be validated against independent
oracles: a two-state hidden Markov model (exact forward algorithm), a scalar
linear-Gaussian state-space model (Kalman filter), SIR/SIRS compartment
models with known generating parameters, and pure-death chains with
closed-form decay/extinction behavior.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .euler import euler_multinomial, gamma_increment, rk4_step
from .grid import TimeGrid
from .measures import nb_logpmf, nb_sample, norm_logpdf
from .model import PompModel, scalar_param, unit_param
from .params import ParamDef, ParameterSet


def toy_grid(n_obs: int, euler_step: float = 1.0) -> TimeGrid:
    """Weekly toy grid: observations at t = 1..n_obs."""
    return TimeGrid(t0=0.0, obs_times=np.arange(1, n_obs + 1, dtype=float), euler_step=euler_step)


# ---------------------------------------------------------------------------
# SIR / SIRS
# ---------------------------------------------------------------------------


def sir_model(
    pop: float = 5000.0,
    stochastic: bool = True,
    name: str = "toy:sir",
) -> PompModel:
    """SIRS model with negative binomial reporting of weekly new infections.

    Rates are per week: ``beta`` transmission, ``gamma`` recovery, ``waning``
    loss of immunity (0 gives plain SIR). ``sigma_proc`` (wk^(1/2)) adds
    gamma white noise on the infection rate. The deterministic variant is
    the RK4-integrated skeleton of the same rate functions.
    """
    params = ParameterSet(
        {
            "beta": ParamDef(2.0, "log"),
            "gamma": ParamDef(1.0, "log"),
            "waning": ParamDef(0.05, "log"),
            "rho": ParamDef(0.5, "logit"),
            "psi": ParamDef(10.0, "log"),
            "i0": ParamDef(10.0, "log"),
            "sigma_proc": ParamDef(1e-9, "log"),
            "pop": ParamDef(pop, "log"),
        }
    )

    def rinit(theta, J, rng):
        i0 = np.round(np.broadcast_to(scalar_param(theta, "i0"), (J,)))
        n = np.round(np.broadcast_to(scalar_param(theta, "pop"), (J,)))
        X = np.zeros((J, 4))
        X[:, 0] = n - i0
        X[:, 1] = i0
        return X

    def step_stochastic(X, t, dt, theta, covs, rng):
        S = X[:, 0].astype(np.int64)
        I = X[:, 1].astype(np.int64)
        R = X[:, 2].astype(np.int64)
        beta = scalar_param(theta, "beta")
        gamma = scalar_param(theta, "gamma")
        waning = scalar_param(theta, "waning")
        sigma2 = np.asarray(scalar_param(theta, "sigma_proc")) ** 2
        n_alive = np.maximum(S + I + R, 1)
        lam = beta * I / n_alive
        noise = gamma_increment(np.full(S.shape, dt), sigma2, rng) / dt
        inf = euler_multinomial(S, (lam * noise)[:, None], dt, rng)[:, 0]
        rec = euler_multinomial(I, np.broadcast_to(gamma, I.shape)[:, None], dt, rng)[:, 0]
        wane = euler_multinomial(R, np.broadcast_to(waning, R.shape)[:, None], dt, rng)[:, 0]
        out = X.copy()
        out[:, 0] = S - inf + wane
        out[:, 1] = I + inf - rec
        out[:, 2] = R + rec - wane
        out[:, 3] = X[:, 3] + inf
        return out

    def step_deterministic(X, t, dt, theta, covs, rng):
        beta = scalar_param(theta, "beta")
        gamma = scalar_param(theta, "gamma")
        waning = scalar_param(theta, "waning")

        def deriv(tt, Y):
            S, I, R = Y[:, 0], Y[:, 1], Y[:, 2]
            n_alive = np.maximum(S + I + R, 1e-12)
            lam = beta * I / n_alive
            d = np.empty_like(Y)
            d[:, 0] = -lam * S + waning * R
            d[:, 1] = lam * S - gamma * I
            d[:, 2] = gamma * I - waning * R
            d[:, 3] = lam * S
            return d

        return np.maximum(rk4_step(deriv, t, X, dt), 0.0)

    def dunit(y, X, t, theta):
        mean = scalar_param(theta, "rho") * X[:, 3]
        return nb_logpmf(y[0], mean, scalar_param(theta, "psi"))[:, None]

    def runit(X, t, theta, rng):
        mean = scalar_param(theta, "rho") * X[:, 3]
        return nb_sample(mean, scalar_param(theta, "psi"), rng)[:, None]

    return PompModel(
        name=name,
        units=("unit",),
        state_names=("S", "I", "R", "C_inc"),
        params=params,
        rinit=rinit,
        step=step_stochastic if stochastic else step_deterministic,
        dunit_measure=dunit,
        runit_measure=runit,
        accumulators=("C_inc",),
        true_infection_states=("C_inc",),
        measured_states=("C_inc",),
        stochastic=stochastic,
    )


# ---------------------------------------------------------------------------
# Coupled / independent metapopulation SIRS
# ---------------------------------------------------------------------------


def metapop_model(
    units: tuple[str, ...] = ("north", "center", "south"),
    pops: tuple[float, ...] | None = None,
    coupling: float = 0.1,
    name: str = "toy:metapop",
) -> PompModel:
    """U-unit SIRS metapopulation with unit-specific transmission rates.

    Force of infection in unit u is beta_u * (I_u + coupling * sum of other
    units' I) / N_u; coupling 0 gives independent units. Weekly new
    infections are reported per unit with negative binomial noise.
    """
    U = len(units)
    if pops is None:
        pops = tuple(4000.0 + 1000.0 * i for i in range(U))
    if len(pops) != U:
        raise ValidationError("pops must match units")
    entries = {
        "gamma": ParamDef(1.0, "log"),
        "waning": ParamDef(0.05, "log"),
        "rho": ParamDef(0.5, "logit"),
        "psi": ParamDef(10.0, "log"),
        "coupling": ParamDef(max(coupling, 1e-12), "log"),
        "i0": ParamDef(10.0, "log"),
    }
    for u in units:
        entries[f"beta[{u}]"] = ParamDef(1.5, "log")
    params = ParameterSet(entries)
    pops_arr = np.array(pops)

    # state layout: per unit (S, I, R, C_inc)
    state_names = tuple(f"{s}[{u}]" for u in units for s in ("S", "I", "R", "C_inc"))
    unit_states = tuple(
        tuple(f"{s}[{u}]" for s in ("S", "I", "R", "C_inc")) for u in units
    )
    sl_S = np.arange(U) * 4
    sl_I = sl_S + 1
    sl_R = sl_S + 2
    sl_C = sl_S + 3

    def rinit(theta, J, rng):
        i0 = np.round(np.broadcast_to(scalar_param(theta, "i0"), (J,)))
        X = np.zeros((J, 4 * U))
        for u in range(U):
            X[:, sl_S[u]] = pops_arr[u] - i0
            X[:, sl_I[u]] = i0
        return X

    def step(X, t, dt, theta, covs, rng):
        S = X[:, sl_S].astype(np.int64)
        I = X[:, sl_I].astype(np.int64)
        R = X[:, sl_R].astype(np.int64)
        beta = unit_param(theta, "beta")
        kappa = unit_param(theta, "coupling")
        gamma = unit_param(theta, "gamma")
        waning = unit_param(theta, "waning")
        other_I = I.sum(axis=1, keepdims=True) - I
        lam = beta * (I + kappa * other_I) / pops_arr[None, :]
        inf = euler_multinomial(S, lam[..., None], dt, rng)[..., 0]
        rec = euler_multinomial(I, np.broadcast_to(gamma, I.shape)[..., None], dt, rng)[..., 0]
        wane = euler_multinomial(R, np.broadcast_to(waning, R.shape)[..., None], dt, rng)[..., 0]
        out = X.copy()
        out[:, sl_S] = S - inf + wane
        out[:, sl_I] = I + inf - rec
        out[:, sl_R] = R + rec - wane
        out[:, sl_C] = X[:, sl_C] + inf
        return out

    def dunit(y, X, t, theta):
        mean = unit_param(theta, "rho") * X[:, sl_C]
        return nb_logpmf(y[None, :], mean, unit_param(theta, "psi"))

    def runit(X, t, theta, rng):
        mean = unit_param(theta, "rho") * X[:, sl_C]
        return nb_sample(mean, np.broadcast_to(unit_param(theta, "psi"), mean.shape), rng)

    return PompModel(
        name=name,
        units=tuple(units),
        state_names=state_names,
        params=params,
        rinit=rinit,
        step=step,
        dunit_measure=dunit,
        runit_measure=runit,
        accumulators=tuple(f"C_inc[{u}]" for u in units),
        true_infection_states=tuple(f"C_inc[{u}]" for u in units),
        measured_states=tuple(f"C_inc[{u}]" for u in units),
        unit_states=unit_states,
    )


# ---------------------------------------------------------------------------
# Discrete 2-state HMM (exact forward-algorithm oracle available)
# ---------------------------------------------------------------------------


def hmm_model(
    transition: np.ndarray | None = None,
    emission: np.ndarray | None = None,
    initial: np.ndarray | None = None,
) -> PompModel:
    """Finite HMM; one latent jump per observation interval.

    Use with ``toy_grid(n, euler_step=1.0)`` so each interval is a single
    step. ``emission[x, y]`` are the categorical observation probabilities.
    """
    transition = np.asarray(transition if transition is not None else [[0.9, 0.1], [0.2, 0.8]])
    emission = np.asarray(emission if emission is not None else [[0.8, 0.15, 0.05], [0.1, 0.3, 0.6]])
    initial = np.asarray(initial if initial is not None else [0.6, 0.4])
    cum_t = transition.cumsum(axis=1)
    cum_e = emission.cumsum(axis=1)
    log_e = np.log(emission)
    params = ParameterSet({"dummy": ParamDef(1.0)})

    def rinit(theta, J, rng):
        r = rng.random(J)
        x = (r[:, None] >= initial.cumsum()[None, :]).sum(axis=1)
        return x[:, None].astype(float)

    def step(X, t, dt, theta, covs, rng):
        x = X[:, 0].astype(int)
        r = rng.random(x.size)
        nxt = (r[:, None] >= cum_t[x]).sum(axis=1)
        return nxt[:, None].astype(float)

    def dunit(y, X, t, theta):
        x = X[:, 0].astype(int)
        return log_e[x, int(y[0])][:, None]

    def runit(X, t, theta, rng):
        x = X[:, 0].astype(int)
        r = rng.random(x.size)
        y = (r[:, None] >= cum_e[x]).sum(axis=1)
        return y[:, None].astype(float)

    return PompModel(
        name="toy:hmm",
        units=("unit",),
        state_names=("state",),
        params=params,
        rinit=rinit,
        step=step,
        dunit_measure=dunit,
        runit_measure=runit,
    )


def hmm_forward_loglik(
    obs: np.ndarray,
    transition: np.ndarray,
    emission: np.ndarray,
    initial: np.ndarray,
) -> float:
    """Exact HMM log-likelihood by the forward algorithm (test oracle)."""
    alpha = np.asarray(initial, dtype=float)
    loglik = 0.0
    for y in np.asarray(obs, dtype=int):
        alpha = (alpha @ np.asarray(transition)) * np.asarray(emission)[:, y]
        s = alpha.sum()
        loglik += np.log(s)
        alpha /= s
    return float(loglik)


# ---------------------------------------------------------------------------
# Scalar linear-Gaussian state-space model (Kalman oracle available)
# ---------------------------------------------------------------------------


def lgssm_model(a: float = 0.8, sig_proc: float = 1.0, sig_obs: float = 0.5,
                x0_mean: float = 0.0, x0_sd: float = 1.0) -> PompModel:
    """x' = a x + sig_proc * eps per interval; y = x + sig_obs * nu."""
    params = ParameterSet({"a": ParamDef(a), "sig_proc": ParamDef(sig_proc, "log"),
                           "sig_obs": ParamDef(sig_obs, "log")})

    def rinit(theta, J, rng):
        return (x0_mean + x0_sd * rng.normal(size=J))[:, None]

    def step(X, t, dt, theta, covs, rng):
        coef = scalar_param(theta, "a")
        sp = scalar_param(theta, "sig_proc")
        return (coef * X[:, 0] + sp * rng.normal(size=X.shape[0]))[:, None]

    def dunit(y, X, t, theta):
        return norm_logpdf(y[0], X[:, 0], scalar_param(theta, "sig_obs"))[:, None]

    def runit(X, t, theta, rng):
        so = scalar_param(theta, "sig_obs")
        return (X[:, 0] + so * rng.normal(size=X.shape[0]))[:, None]

    return PompModel(
        name="toy:lgssm",
        units=("unit",),
        state_names=("x",),
        params=params,
        rinit=rinit,
        step=step,
        dunit_measure=dunit,
        runit_measure=runit,
    )


def kalman_loglik(obs: np.ndarray, a: float, sig_proc: float, sig_obs: float,
                  x0_mean: float = 0.0, x0_sd: float = 1.0) -> float:
    """Exact scalar Kalman-filter log-likelihood (test oracle)."""
    mean, var = x0_mean, x0_sd**2
    q, r = sig_proc**2, sig_obs**2
    loglik = 0.0
    for y in np.asarray(obs, dtype=float):
        pm = a * mean
        pv = a * a * var + q
        s = pv + r
        loglik += -0.5 * (np.log(2.0 * np.pi * s) + (y - pm) ** 2 / s)
        k = pv / s
        mean = pm + k * (y - pm)
        var = (1.0 - k) * pv
    return float(loglik)


# ---------------------------------------------------------------------------
# Pure-death chain
# ---------------------------------------------------------------------------


def pure_death_model(stochastic: bool = True) -> PompModel:
    """Infected individuals recover independently at rate ``mu`` (per week).

    No infection source exists, so the weekly true-infection accumulator is
    identically zero. Reporting is negative binomial on prevalence.
    """
    params = ParameterSet(
        {
            "mu": ParamDef(np.log(2.0), "log"),
            "i0": ParamDef(10.0, "log"),
            "rho": ParamDef(0.9, "logit"),
            "psi": ParamDef(20.0, "log"),
        }
    )

    def rinit(theta, J, rng):
        X = np.zeros((J, 2))
        X[:, 0] = np.round(np.broadcast_to(scalar_param(theta, "i0"), (J,)))
        return X

    def step_stochastic(X, t, dt, theta, covs, rng):
        I = X[:, 0].astype(np.int64)
        mu = scalar_param(theta, "mu")
        rec = euler_multinomial(I, np.broadcast_to(mu, I.shape)[:, None], dt, rng)[:, 0]
        out = X.copy()
        out[:, 0] = I - rec
        return out

    def step_deterministic(X, t, dt, theta, covs, rng):
        mu = scalar_param(theta, "mu")

        def deriv(tt, Y):
            d = np.zeros_like(Y)
            d[:, 0] = -mu * Y[:, 0]
            return d

        return rk4_step(deriv, t, X, dt)

    def dunit(y, X, t, theta):
        mean = scalar_param(theta, "rho") * X[:, 0]
        return nb_logpmf(y[0], mean, scalar_param(theta, "psi"))[:, None]

    def runit(X, t, theta, rng):
        mean = scalar_param(theta, "rho") * X[:, 0]
        return nb_sample(mean, scalar_param(theta, "psi"), rng)[:, None]

    return PompModel(
        name="toy:puredeath",
        units=("unit",),
        state_names=("I", "C_inc"),
        params=params,
        rinit=rinit,
        step=step_stochastic if stochastic else step_deterministic,
        dunit_measure=dunit,
        runit_measure=runit,
        accumulators=("C_inc",),
        true_infection_states=("C_inc",),
        measured_states=("C_inc",),
        stochastic=stochastic,
    )
