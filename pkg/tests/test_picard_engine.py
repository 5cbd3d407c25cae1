from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilfer_picard.hadamard_calculus import LogGrid, WeightedSample
from hilfer_picard.picard_engine import (
    BOX_SLACK,
    Hypotheses,
    PreconditionError,
    Problem,
    a_priori_iteration_count,
    box_excess,
    error_bound_log_terms,
    error_bound_term,
    error_bound_terms,
    existence_radius,
    gamma_order,
    initial_condition_check,
    picard_initial,
    picard_step,
    residual,
    sample_residual,
    solve,
)
from hilfer_picard.rhs_catalog import (
    LinearInLog,
    PowerNonlinear,
    PowerSource,
    closed_form_solution,
    derive_hypotheses,
)

ZERO = PowerSource(0.0, 0.0)


def hyp(k=0.0, M=1.0, A=1.0, valid=True):
    return Hypotheses(k=k, M=M, A=A, valid_H1=valid, valid_H2=valid)


@pytest.fixture(scope="module")
def small_grid():
    return LogGrid(0.5, 256)


class TestGammaOrder:
    @pytest.mark.parametrize("a, b, g", [(0.5, 0.0, 0.5), (0.5, 1.0, 1.0), (0.3, 0.4, 0.58)])
    def test_examples(self, a, b, g):
        assert gamma_order(a, b) == pytest.approx(g, abs=1e-15)

    @pytest.mark.parametrize("a, b", [(0.0, 0.5), (1.0, 0.5), (0.5, -0.1), (0.5, 1.1)])
    def test_domain(self, a, b):
        with pytest.raises(ValueError):
            gamma_order(a, b)

    @settings(max_examples=100)
    @given(st.floats(0.01, 0.99), st.floats(0.0, 1.0))
    def test_range(self, a, b):
        g = gamma_order(a, b)
        assert a <= g <= 1.0
        assert Problem(a, b, 0.0, ZERO).gamma == g


class TestExistenceRadius:
    def test_zero_envelope(self):
        assert existence_radius(hyp(M=0.0), Problem(0.5, 0.5, 0.0, ZERO, h=1.0)) == 1.0

    def test_beta_zero(self):
        # mu = 1 - beta (1 - alpha) = 1, so l = Gamma(1.5) / Gamma(1)
        p = Problem(0.5, 0.0, 0.0, ZERO, h=10.0, b=1.0)
        assert p.mu == 1.0
        assert existence_radius(hyp(k=0.0, M=1.0), p) == pytest.approx(
            float(mpmath.gamma(1.5)), rel=1e-14
        )

    def test_beta_one(self):
        # mu = 0.5, so l = (Gamma(1.5) / 2)^2 ~ 0.196, just under h = 0.2
        p = Problem(0.5, 1.0, 0.0, ZERO, h=0.2, b=1.0)
        assert p.mu == 0.5
        expected = float((mpmath.gamma(1.5) / 2) ** 2)
        assert existence_radius(hyp(k=0.0, M=2.0), p) == pytest.approx(expected, rel=1e-14)

    def test_capped_by_h(self):
        p = Problem(0.5, 1.0, 0.0, ZERO, h=0.15, b=1.0)
        assert existence_radius(hyp(k=0.0, M=2.0), p) == 0.15

    def test_invalid(self):
        with pytest.raises(PreconditionError):
            existence_radius(hyp(valid=False), Problem(0.5, 0.5, 0.0, ZERO))

    @settings(max_examples=50)
    @given(st.floats(0.05, 0.95), st.floats(0, 1), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_radius_keeps_power_source_in_box(self, a, b, c, box):
        # |z - x0| = c Gamma(1)/Gamma(a+1) l^(a+1-gamma) <= box exactly at u = l
        p = Problem(a, b, 0.0, PowerSource(c, 0.0), b=box, h=100.0)
        l = existence_radius(derive_hypotheses(p.rhs, p), p)
        reach = c / math.gamma(a + 1) * l ** (a + 1 - p.gamma)
        assert reach <= box * (1 + 1e-12)


class TestPicardStep:
    def test_initial(self, small_grid):
        for x0 in (0.0, 1.0, -2.5):
            z = picard_initial(Problem(0.5, 0.5, x0, ZERO), small_grid)
            np.testing.assert_array_equal(z.zvalues, x0)

    def test_zero_source(self, small_grid):
        p = Problem(0.5, 0.5, 1.3, ZERO)
        z0 = picard_initial(p, small_grid)
        np.testing.assert_array_equal(picard_step(z0, p, small_grid).zvalues, z0.zvalues)

    @pytest.mark.parametrize("alpha, beta", [(0.3, 0.0), (0.5, 0.5), (0.8, 1.0)])
    def test_power_source_exact_in_one_step(self, alpha, beta, small_grid):
        p = Problem(alpha, beta, 1.0, PowerSource(-2.0, 0.5))
        rng = np.random.default_rng(0)
        prev = WeightedSample(small_grid, p.gamma, rng.normal(size=small_grid.N + 1))
        z = picard_step(prev, p, small_grid).zvalues
        exact = closed_form_solution(p.rhs, p)(small_grid.nodes)
        np.testing.assert_allclose(z, exact, atol=1e-12)

    def test_linear_first_step(self, small_grid):
        p = Problem(0.5, 0.5, 1.0, LinearInLog(0.5, 0.0))
        z = picard_step(picard_initial(p, small_grid), p, small_grid).zvalues
        u = small_grid.nodes
        g = p.gamma
        exact = 1.0 + 0.5 * math.gamma(g) / math.gamma(g + 0.5) * u**0.5
        np.testing.assert_allclose(z, exact, atol=1e-10)

    def test_origin_is_exactly_x0(self, small_grid):
        p = Problem(0.4, 0.3, 0.7, PowerNonlinear(1.0, 0.0, 2.0), b=1.0)
        z = picard_initial(p, small_grid)
        for _ in range(3):
            z = picard_step(z, p, small_grid)
            assert z.zvalues[0] == 0.7

    def test_rejects_foreign_grid(self, small_grid):
        p = Problem(0.5, 0.5, 1.0, ZERO)
        with pytest.raises(ValueError):
            picard_step(picard_initial(p, LogGrid(0.5, 128)), p, small_grid)


class TestBoundSeries:
    P = Problem(0.5, 0.0, 0.0, ZERO)

    def test_zero_envelope(self):
        assert error_bound_term(3, hyp(M=0.0), self.P, 1.0) == 0.0
        np.testing.assert_array_equal(error_bound_terms(5, hyp(M=0.0), self.P, 1.0), 0.0)

    def test_first_term(self):
        exact = float(1 / (mpmath.gamma(1.5) * mpmath.gamma(2.5)))
        assert exact == pytest.approx(0.848826, rel=1e-6)
        assert error_bound_term(0, hyp(), self.P, 1.0) == pytest.approx(exact, rel=1e-13)

    def test_matches_product_formula(self):
        # direct product with mpmath for a non-trivial configuration
        p = Problem(0.5, 0.5, 1.0, ZERO)
        k, M, A, l = -0.25, 1.0, 0.5, 0.547
        a, g = p.alpha, p.gamma
        for n in (0, 3, 12):
            prod = mpmath.mpf(1)
            for i in range(n + 2):
                prod *= mpmath.gamma((i + 1) * k + i * (a + 1 - g) + 1)
                prod /= mpmath.gamma((i + 1) * (a + k) + i * (1 - g) + 1)
            exact = M * A ** (n + 1) * mpmath.mpf(l) ** ((n + 2) * (a + k + 1 - g)) * prod
            got = error_bound_term(n, hyp(k, M, A), p, l)
            assert got == pytest.approx(float(exact), rel=1e-12)

    def test_ratio_shrinks(self):
        u = error_bound_terms(30, hyp(), self.P, 1.0)
        assert u[21] / u[20] < u[6] / u[5]

    def test_minus_one_term(self):
        # u_{-1} = M l^e Gamma(k+1)/Gamma(alpha+k+1)
        assert error_bound_term(-1, hyp(), self.P, 1.0) == pytest.approx(1 / math.gamma(1.5))
        with pytest.raises(ValueError):
            error_bound_term(-2, hyp(), self.P, 1.0)

    def test_logs_agree_and_do_not_underflow(self):
        logs = error_bound_log_terms(400, hyp(), self.P, 1.0)
        assert np.all(np.isfinite(logs))
        np.testing.assert_allclose(np.exp(logs[:50]), error_bound_terms(50, hyp(), self.P, 1.0))

    def test_invalid(self):
        with pytest.raises(PreconditionError):
            error_bound_term(0, hyp(valid=False), self.P, 1.0)


class TestAPrioriCount:
    P = Problem(0.5, 0.0, 0.0, ZERO)

    def test_zero_envelope(self):
        assert a_priori_iteration_count(hyp(M=0.0), self.P, 1.0, 1e-8) == 0

    def test_tail_is_below_eps(self):
        N = a_priori_iteration_count(hyp(), self.P, 1.0, 1e-8)
        terms = error_bound_terms(10_000, hyp(), self.P, 1.0)
        assert math.fsum(terms[N:]) < 1e-8
        assert math.fsum(terms[N - 1 :]) >= 1e-8

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-30, -1), st.floats(-30, -1), st.floats(0.1, 3.0))
    def test_monotone_in_eps(self, le1, le2, A):
        e1, e2 = sorted((10**le1, 10**le2))
        h = hyp(A=A)
        assert a_priori_iteration_count(h, self.P, 1.0, e1) >= a_priori_iteration_count(h, self.P, 1.0, e2)

    def test_rejects_bad_eps(self):
        with pytest.raises(ValueError):
            a_priori_iteration_count(hyp(), self.P, 1.0, 0.0)


class TestSolve:
    def test_zero_source_one_step(self, small_grid):
        p = Problem(0.5, 0.5, 1.0, ZERO)
        run = solve(p, small_grid, tol=1e-12)
        assert run.converged and run.n_performed == 1
        np.testing.assert_array_equal(run.final.zvalues, 1.0)
        assert initial_condition_check(run, p) == 0.0
        assert residual(run, p, small_grid) < 1e-8

    def test_power_source_two_steps(self):
        p = Problem(0.5, 0.5, 1.0, PowerSource(1.0, 0.5))
        grid = LogGrid(existence_radius(derive_hypotheses(p.rhs, p), p), 512)
        run = solve(p, grid, tol=1e-10)
        assert run.converged and run.n_performed <= 2
        exact = closed_form_solution(p.rhs, p)(grid.nodes)
        assert np.max(np.abs(run.final.zvalues - exact)) < 1e-12
        # second diagnostic tracks the closed form at the first node
        assert initial_condition_check(run, p) == pytest.approx(exact[1] - 1.0, rel=1e-8)
        assert run.box_violations == []

    def test_mittag_leffler(self, ml_problem, ml_run, ml_grid):
        assert ml_run.converged
        exact = closed_form_solution(ml_problem.rhs, ml_problem)(ml_grid.nodes)
        assert np.max(np.abs(ml_run.final.zvalues - exact)) < 1e-5
        assert ml_run.n_performed <= ml_run.a_priori_N + 10
        assert len(ml_run.sup_diffs) == ml_run.n_performed
        assert ml_run.sup_diffs[-1] <= 1e-10

    def test_bound_domination_and_containment(self, ml_problem, ml_run):
        for diff, bound in zip(ml_run.sup_diffs, ml_run.bound_terms):
            assert diff <= bound + 10 * 1e-6
        for z in ml_run.iterates:
            assert box_excess(z, ml_problem) <= BOX_SLACK * ml_problem.b
            assert z.zvalues[0] == ml_problem.x0

    def test_exhausted_budget_is_not_an_error(self, ml_problem, small_grid):
        run = solve(ml_problem, small_grid, tol=1e-14, n_max=3)
        assert not run.converged and run.n_performed == 3
        with pytest.raises(PreconditionError):
            residual(run, ml_problem, small_grid)

    def test_out_of_box_is_flagged(self):
        p = Problem(0.5, 0.5, 1.0, PowerSource(10.0, 0.0), b=0.1, h=5.0)
        run = solve(p, LogGrid(2.0, 64), tol=1e-10, n_max=5)
        assert run.hypothesis_violating and run.box_violations[0] == 1

    def test_uniqueness_from_other_start(self, ml_problem, ml_grid, ml_run):
        other = solve(ml_problem, ml_grid, tol=1e-10, start=ml_problem.x0 + ml_problem.b / 2)
        assert np.max(np.abs(other.final.zvalues - ml_run.final.zvalues)) <= 1e-9

    def test_residual_of_analytic_solution_is_comparable(self, ml_problem, ml_grid, ml_run):
        exact = closed_form_solution(ml_problem.rhs, ml_problem)(ml_grid.nodes)
        analytic = sample_residual(WeightedSample(ml_grid, ml_problem.gamma, exact), ml_problem)
        numeric = residual(ml_run, ml_problem, ml_grid)
        assert numeric <= 1e-3
        assert analytic / 3 <= numeric <= 3 * analytic

    def test_invalid_hypotheses_need_explicit_budget(self, small_grid):
        p = Problem(0.5, 1.0, 1.0, PowerSource(1.0, -0.8))
        with pytest.raises(PreconditionError):
            solve(p, small_grid)

    def test_rejects_bad_tol(self, ml_problem, small_grid):
        with pytest.raises(ValueError):
            solve(ml_problem, small_grid, tol=0.0)
