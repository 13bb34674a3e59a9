import math

import mpmath as mp
import numpy as np
import pytest
from scipy.special import mathieu_a

from circadian_mfg.grid import make_grid, reflect_field
from circadian_mfg.mathieu import (
    mathieu_char_value,
    mathieu_eval,
    mathieu_even,
    perturbation_dV1,
    perturbation_lambda1,
    perturbation_mu1,
    special_case_solution,
)
from circadian_mfg.operators import interaction_cost


class TestCharValue:
    def test_zero_coupling(self):
        assert mathieu_char_value(0.0) == pytest.approx(0.0, abs=1e-12)

    def test_small_q_series(self):
        # leading perturbation of the lowest even characteristic value
        q = 0.1
        assert mathieu_char_value(q) == pytest.approx(-(q**2) / 2, abs=1e-4)

    def test_even_in_q(self):
        assert mathieu_char_value(-200.0) == pytest.approx(mathieu_char_value(200.0), abs=1e-10)

    @pytest.mark.parametrize("q", [0.1, 1.0, 25.0, 100.0, 200.0])
    def test_against_scipy(self, q):
        # independent route: scipy's own Mathieu characteristic values
        assert mathieu_char_value(q) == pytest.approx(float(mathieu_a(0, q)), abs=1e-10)

    def test_reference_value_pinned(self):
        # converged eigensolve value for the strongest reference coupling,
        # cross-checked by the ODE residual test below
        assert mathieu_char_value(-200.0) == pytest.approx(-371.9679994628, abs=1e-9)


class TestEvenFunction:
    def test_zero_q_is_constant(self):
        m = mathieu_even(0.0)
        x = np.linspace(-3, 7, 23)
        np.testing.assert_allclose(mathieu_eval(m, x), 1.0, rtol=0, atol=1e-12)

    def test_even_and_normalized(self):
        m = mathieu_even(-100.0)
        xs = np.random.default_rng(7).uniform(-4, 4, 25)
        np.testing.assert_allclose(mathieu_eval(m, xs), mathieu_eval(m, -xs), rtol=0, atol=1e-14)
        assert mathieu_eval(m, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_pi_periodic(self):
        m = mathieu_even(-50.0)
        xs = np.linspace(0, math.pi, 9)
        np.testing.assert_allclose(
            mathieu_eval(m, xs + math.pi), mathieu_eval(m, xs), rtol=0, atol=1e-12
        )

    @pytest.mark.parametrize("q", [-1.0, -100.0, -200.0])
    def test_ode_residual(self, q):
        # independent oracle: high-precision finite differences of the series
        m = mathieu_even(q)
        mp.mp.dps = 40
        coeffs = [mp.mpf(float(c)) for c in m.coeffs]

        def f(x):
            return mp.fsum(c * mp.cos(2 * k * x) for k, c in enumerate(coeffs))

        h = mp.mpf("1e-10")
        worst = 0.0
        for x in np.linspace(0.0, math.pi, 64):
            xm = mp.mpf(float(x))
            fpp = (f(xm + h) - 2 * f(xm) + f(xm - h)) / h**2
            res = fpp + (mp.mpf(m.a) - 2 * mp.mpf(m.q) * mp.cos(2 * xm)) * f(xm)
            worst = max(worst, abs(float(res)))
        assert worst < 1e-8


class TestSpecialCase:
    def test_no_sun_weight_gives_uniform(self):
        grid = make_grid(120)
        sol = special_case_solution(0.0, 0.1, grid)
        np.testing.assert_allclose(sol.mu_K0, 1 / (2 * math.pi), rtol=0, atol=1e-14)
        np.testing.assert_allclose(sol.dV_K0, 0.0, rtol=0, atol=1e-14)
        assert sol.lambda_K0 == pytest.approx(0.0, abs=1e-14)

    def test_reference_shape(self):
        grid = make_grid(120)
        sol = special_case_solution(0.01, 0.1, grid)
        assert int(np.argmax(sol.mu_K0)) == 0  # concentrated at the sun phase
        assert sol.mu_K0.sum() * grid.dphi == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(sol.mu_K0, reflect_field(sol.mu_K0), rtol=0, atol=1e-12)
        half = grid.n // 2
        assert np.all(np.diff(sol.mu_K0[: half + 1]) < 0)  # decreasing away from the peak

    def test_average_cost_value(self):
        # lambda = F/4 + sigma^4/8 * C(-F/sigma^4); cross-checked against the
        # density-weighted running cost of the closed form itself
        grid = make_grid(240)
        F, sigma = 0.01, 0.1
        sol = special_case_solution(F, sigma, grid)
        csun = 0.5 * np.sin(grid.phis() / 2) ** 2
        direct = ((0.5 * sol.dV_K0**2 + F * csun) * sol.mu_K0).sum() * grid.dphi
        assert sol.lambda_K0 == pytest.approx(direct, abs=1e-6)

    def test_depends_on_q_only(self):
        # same q = -F/sigma^4 gives the same density
        grid = make_grid(60)
        a = special_case_solution(0.01, 0.1, grid)
        b = special_case_solution(0.16, 0.2, grid)
        assert a.mathieu.q == b.mathieu.q
        np.testing.assert_allclose(a.mu_K0, b.mu_K0, rtol=0, atol=1e-12)

    def test_rejects_bad_inputs(self):
        grid = make_grid(12)
        with pytest.raises(ValueError):
            special_case_solution(-0.1, 0.1, grid)
        with pytest.raises(ValueError):
            special_case_solution(0.1, 0.0, grid)


class TestPerturbation:
    def test_lambda1_uniform(self):
        grid = make_grid(120)
        mu = np.full(grid.n, 1 / (2 * math.pi))
        lam1 = perturbation_lambda1(mu, grid)
        assert lam1.unweighted == pytest.approx(2 * math.pi * 0.25, abs=1e-10)
        assert lam1.density_weighted == pytest.approx(0.25, abs=1e-10)

    def test_lambda1_concentrated(self):
        # a population aligned with itself pays almost nothing to synchronize
        grid = make_grid(240)
        phis = grid.phis()
        mu = np.exp(np.cos(phis) * 200.0)
        mu /= mu.sum() * grid.dphi
        lam1 = perturbation_lambda1(mu, grid)
        assert lam1.density_weighted < 5e-3

    def test_lambda1_weighted_matches_double_sum(self):
        grid = make_grid(120)
        sol = special_case_solution(0.01, 0.1, grid)
        mu = sol.mu_K0
        acc = 0.0
        for j in range(grid.n):
            conv = 0.0
            for k in range(grid.n):
                conv += 0.5 * math.sin((k - j) * grid.dphi / 2) ** 2 * mu[k] * grid.dphi
            acc += conv * mu[j] * grid.dphi
        assert perturbation_lambda1(mu, grid).density_weighted == pytest.approx(acc, abs=1e-12)

    def test_dv1_uniform_case_vanishes(self):
        grid = make_grid(120)
        sol = special_case_solution(0.0, 0.1, grid)
        out = perturbation_dV1(sol, 0.25, grid)
        np.testing.assert_allclose(out, 0.0, rtol=0, atol=1e-12)

    def test_dv1_odd_and_zero_mean(self):
        # F small enough that the density stays clear of the division floor
        grid = make_grid(120)
        sol = special_case_solution(0.001, 0.1, grid)
        lam1 = perturbation_lambda1(sol.mu_K0, grid).density_weighted
        out = perturbation_dV1(sol, lam1, grid)
        assert abs(out.sum() * grid.dphi) < 1e-8
        np.testing.assert_allclose(out, -reflect_field(out), rtol=0, atol=1e-7)

    def test_dv1_rejects_vanishing_density(self):
        # at the reference coupling the density bottoms out around 4e-17,
        # far below the 1e-12 floor the integrating-factor division allows
        grid = make_grid(120)
        sol = special_case_solution(0.01, 0.1, grid)
        assert sol.mu_K0.min() < 1e-12
        with pytest.raises(ValueError):
            perturbation_dV1(sol, 0.25, grid)

    def test_mu1_uniform_case_vanishes(self):
        grid = make_grid(120)
        sol = special_case_solution(0.0, 0.1, grid)
        out = perturbation_mu1(sol, 0.25, grid)
        np.testing.assert_allclose(out, 0.0, rtol=0, atol=1e-10)

    def test_mu1_zero_total_mass(self):
        grid = make_grid(120)
        sol = special_case_solution(0.01, 0.1, grid)
        lam1 = perturbation_lambda1(sol.mu_K0, grid).density_weighted
        mu1 = perturbation_mu1(sol, lam1, grid)
        assert abs(mu1.sum() * grid.dphi) < 1e-10

    def test_mu1_solves_gamma_equation(self):
        # residual of the defining linear problem, reconstructed independently;
        # the system is singular, so the least-squares residual is the discrete
        # Fredholm mismatch: O(dphi^2) relative to the forcing, order two in n
        residuals = {}
        for n in (120, 240):
            grid = make_grid(n)
            sol = special_case_solution(0.01, 0.1, grid)
            lam1 = perturbation_lambda1(sol.mu_K0, grid).density_weighted
            mu1 = perturbation_mu1(sol, lam1, grid)
            gamma = mu1 / sol.W_K0
            d2 = (np.roll(gamma, -1) - 2 * gamma + np.roll(gamma, 1)) / grid.dphi**2
            wpp = -(sol.mathieu.a - 2 * sol.mathieu.q * np.cos(grid.phis())) * sol.W_K0 / 4
            sigma = sol.sigma
            lhs = sigma**2 / 2 * (gamma * wpp - sol.W_K0 * d2)
            rhs = 2 / sigma**2 * sol.mu_K0 * (lam1 - interaction_cost(grid, sol.mu_K0))
            residuals[n] = np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))
        assert residuals[120] < 5e-3
        assert 3.0 < residuals[120] / residuals[240] < 5.0
