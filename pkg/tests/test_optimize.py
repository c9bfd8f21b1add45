"""Restarted Nelder-Mead and trajectory matching."""

import numpy as np
import pytest

from epipomp.errors import ValidationError
from epipomp.model import simulate
from epipomp.optimize import deterministic_loglik, restarted_nelder_mead, trajectory_match
from epipomp.toys import pure_death_model, sir_model, toy_grid


class TestRestartedNelderMead:
    def test_quadratic_recovers_minimum_to_1e6(self):
        res = restarted_nelder_mead(lambda x: (x[0] - 3.0) ** 2, np.array([0.0]))
        assert abs(res.x[0] - 3.0) < 1e-6

    def test_two_dimensional_rosenbrock_like(self):
        f = lambda x: (x[0] - 1) ** 2 + 10 * (x[1] - x[0] ** 2) ** 2
        res = restarted_nelder_mead(f, np.array([-1.0, 2.0]))
        assert np.allclose(res.x, [1.0, 1.0], atol=1e-4)

    def test_deterministic(self):
        f = lambda x: np.sin(3 * x[0]) + 0.1 * x[0] ** 2
        a = restarted_nelder_mead(f, np.array([0.3]))
        b = restarted_nelder_mead(f, np.array([0.3]))
        assert a.x[0] == b.x[0] and a.fun == b.fun


class TestTrajectoryMatch:
    @pytest.fixture(scope="class")
    def det_setup(self):
        m = sir_model(stochastic=False)
        truth = m.params.replace({"beta": 1.6, "sigma_proc": 1e-9})
        g = toy_grid(30, euler_step=0.25)
        data = simulate(m, truth, g, n_sims=1, seed=10).observation_series(0)
        return m, truth, g, data

    def test_empty_free_list_returns_inputs_unchanged(self, det_setup):
        m, truth, g, data = det_setup
        res = trajectory_match(m, data, g, None, truth, free=())
        assert dict(res.best) == dict(truth)
        assert res.loglik == deterministic_loglik(m, truth, data, g, None)

    def test_self_fit_recovers_loglik_from_perturbed_start(self, det_setup):
        # started 20% away, the optimizer recovers (at least) the truth's fit
        m, truth, g, data = det_setup
        start = truth.replace({"beta": 1.6 * 1.2})
        ll_truth = deterministic_loglik(m, truth, data, g, None)
        res = trajectory_match(m, data, g, None, start, free=["beta"])
        assert res.loglik >= ll_truth - 0.01
        assert abs(res.best["beta"] - 1.6) < 0.15

    def test_stochastic_model_rejected(self):
        m = sir_model(stochastic=True)
        with pytest.raises(ValidationError):
            trajectory_match(m, None, None, None, m.params, free=["beta"])

    def test_non_finite_start_names_parameters(self, det_setup):
        m, truth, g, data = det_setup
        # i0 rounds to zero infected: the skeleton stays at zero incidence
        # while the data has positive counts, so the objective is -inf
        start = truth.replace({"i0": 1e-9})
        assert not np.isfinite(deterministic_loglik(m, start, data, g, None))
        with pytest.raises(ValidationError, match="non-finite"):
            trajectory_match(m, data, g, None, start, free=["beta"])


class TestDeterministicLoglik:
    def test_matches_single_particle_filter(self):
        from epipomp.filtering import particle_filter

        m = pure_death_model(stochastic=False)
        g = toy_grid(15, euler_step=0.5)
        data = simulate(m, m.params, g, n_sims=1, seed=4).observation_series(0)
        direct = deterministic_loglik(m, m.params, data, g, None)
        pf = particle_filter(m, m.params, data, g, J=1, seed=9)
        assert direct == pytest.approx(pf.loglik, abs=1e-12)
