from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilfer_picard.hadamard_calculus import hadamard_integral_powerlaw
from hilfer_picard.problem import PreconditionError, Problem
from hilfer_picard.rhs_catalog import (
    LinearInLog,
    PowerNonlinear,
    PowerSource,
    Sum,
    closed_form_solution,
    derive_hypotheses,
    eval_factored,
    evaluate,
)

orders = st.tuples(st.floats(0.05, 0.95), st.floats(0.0, 1.0))


def variant_strategy():
    real = st.floats(-3.0, 3.0)
    return st.one_of(
        st.builds(PowerSource, real, st.floats(-0.9, 2.0)),
        st.builds(LinearInLog, real, st.floats(0.0, 2.0)),
        st.builds(PowerNonlinear, real, st.floats(-0.5, 2.0), st.floats(1.01, 4.0)),
    )


def any_spec():
    return st.one_of(
        variant_strategy(),
        st.lists(variant_strategy(), min_size=1, max_size=3).map(lambda t: Sum(tuple(t))),
    )


class TestFactoredEvaluation:
    def test_power_source(self):
        g, k = eval_factored(PowerSource(2.0, 0.5), 0.3, 7.0, 0.75)
        assert (float(g), k) == (2.0, 0.5)

    def test_linear(self):
        g, k = eval_factored(LinearInLog(0.5, 0.0), 0.3, 4.0, 0.75)
        assert float(g) == 2.0 and k == pytest.approx(-0.25)

    def test_power_nonlinear(self):
        g, k = eval_factored(PowerNonlinear(1.0, 0.0, 2.0), 0.3, 3.0, 0.75)
        assert float(g) == pytest.approx(9.0) and k == pytest.approx(-0.5)

    def test_sum_uses_smallest_exponent(self):
        spec = Sum((PowerSource(1.0, 0.5), LinearInLog(2.0, 0.0)))
        g, k = eval_factored(spec, 0.25, 1.0, 0.75)
        assert k == pytest.approx(-0.25)
        assert float(g) == pytest.approx(0.25**0.75 + 2.0)

    @settings(max_examples=1000, deadline=None)
    @given(any_spec(), orders, st.floats(math.log(1e-6), 0.0), st.floats(-5.0, 5.0))
    def test_reassembly(self, spec, ab, logu, z):
        alpha, beta = ab
        gamma = alpha + beta * (1 - alpha)
        u = math.exp(logu)
        g, k = eval_factored(spec, u, z, gamma)
        direct = evaluate(spec, u, u ** (gamma - 1.0) * z)
        assembled = float(g) * u**k
        scale = max(abs(direct), 1e-300)
        # sums may cancel; compare against the size of the terms
        if isinstance(spec, Sum):
            scale = max(scale, sum(abs(float(t(u, u ** (gamma - 1) * z))) for t in spec.terms))
        assert abs(assembled - direct) <= 1e-13 * scale

    def test_vectorised(self):
        u = np.linspace(0.1, 1.0, 5)
        g, _ = eval_factored(PowerNonlinear(1.0, 0.0, 2.0), u, np.arange(5.0), 0.5)
        assert g.shape == (5,)


class TestHypotheses:
    def test_power_source(self):
        p = Problem(0.5, 0.5, 1.0, PowerSource(2.0, 0.5))
        hyp = derive_hypotheses(p.rhs, p)
        assert (hyp.k, hyp.M, hyp.valid_H1) == (0.5, 2.0, True)
        assert hyp.vacuous_lipschitz and hyp.A > 0.0

    def test_linear(self):
        p = Problem(0.5, 0.5, 1.0, LinearInLog(0.5, 0.0), b=1.0)
        hyp = derive_hypotheses(p.rhs, p)
        assert hyp.k == pytest.approx(-0.25)
        assert (hyp.M, hyp.A, hyp.valid_H1, hyp.valid_H2) == (1.0, 0.5, True, True)

    def test_power_nonlinear(self):
        p = Problem(0.5, 0.5, 0.0, PowerNonlinear(1.0, 0.0, 2.0), b=1.0)
        hyp = derive_hypotheses(p.rhs, p)
        assert hyp.k == pytest.approx(-0.5)
        assert (hyp.M, hyp.A) == (1.0, 2.0)

    def test_rejection_names_the_term(self):
        bad = PowerSource(1.0, -2.0)
        p = Problem(0.5, 0.5, 1.0, Sum((LinearInLog(1.0), bad)))
        hyp = derive_hypotheses(p.rhs, p)
        assert not hyp.valid_H1 and not hyp.valid_H2
        assert "PowerSource" in hyp.diagnostic and "-2" in hyp.diagnostic
        with pytest.raises(PreconditionError, match="PowerSource"):
            hyp.require_valid()

    def test_floor_depends_on_orders(self):
        # k = -0.6: fine for beta = 0 (floor -1), not for beta = 1 (floor -0.5)
        spec = PowerSource(1.0, -0.6)
        assert derive_hypotheses(spec, Problem(0.5, 0.0, 1.0, spec)).valid_H1
        assert not derive_hypotheses(spec, Problem(0.5, 1.0, 1.0, spec)).valid_H1

    @settings(max_examples=60, deadline=None)
    @given(any_spec(), orders, st.floats(-2.0, 2.0), st.floats(0.1, 2.0), st.floats(0.1, 3.0), st.integers(0, 2**32 - 1))
    def test_envelope_and_lipschitz(self, spec, ab, x0, b, h, seed):
        alpha, beta = ab
        p = Problem(alpha, beta, x0, spec, b=b, h=h)
        hyp = derive_hypotheses(spec, p)
        gamma = p.gamma
        rng = np.random.default_rng(seed)
        n = 10_000
        u = h * rng.random(n) ** 2 + 1e-12
        z1 = x0 + b * rng.uniform(-1, 1, n)
        z2 = x0 + b * rng.uniform(-1, 1, n)
        f1 = evaluate(spec, u, u ** (gamma - 1) * z1)
        f2 = evaluate(spec, u, u ** (gamma - 1) * z2)
        env = hyp.M * u**hyp.k
        assert np.all(np.abs(f1) <= env * (1 + 1e-12))
        if not hyp.vacuous_lipschitz:
            lip = hyp.A * u**hyp.k * np.abs(z1 - z2)
            # linear terms attain the bound; allow for rounding in f1 - f2
            slack = 1e-13 * np.maximum(np.abs(f1), np.abs(f2))
            assert np.all(np.abs(f1 - f2) <= lip * (1 + 1e-12) + slack)
        else:
            np.testing.assert_array_equal(np.asarray(f1), np.asarray(f2))


class TestClosedForms:
    def test_zero_source(self):
        p = Problem(0.5, 0.5, 1.5, PowerSource(0.0, 0.7))
        np.testing.assert_array_equal(closed_form_solution(p.rhs, p)(np.linspace(0, 1, 5)), 1.5)

    def test_unit_source(self):
        p = Problem(0.5, 0.5, 0.0, PowerSource(1.0, 0.0))
        u = np.linspace(0.0, 1.0, 9)
        np.testing.assert_allclose(
            closed_form_solution(p.rhs, p)(u), u**0.75 / math.gamma(1.5), rtol=1e-14
        )

    def test_linear_with_zero_rate(self):
        p = Problem(0.5, 0.5, 2.0, LinearInLog(0.0, 0.0))
        np.testing.assert_allclose(closed_form_solution(p.rhs, p)(np.linspace(0, 1, 5)), 2.0, rtol=1e-14)

    def test_absent_for_other_variants(self):
        for spec in (LinearInLog(1.0, 0.5), PowerNonlinear(1.0, 0.0, 2.0), Sum((PowerSource(1, 0),))):
            p = Problem(0.5, 0.5, 1.0, spec)
            assert closed_form_solution(spec, p) is None

    @settings(max_examples=100, deadline=None)
    @given(orders, st.floats(-3, 3), st.floats(-0.9, 2.0), st.floats(-2, 2), st.floats(1e-6, 2.0))
    def test_power_source_solves_integral_equation(self, ab, c, nu, x0, u):
        alpha, beta = ab
        p = Problem(alpha, beta, x0, PowerSource(c, nu))
        gamma = p.gamma
        z = closed_form_solution(p.rhs, p)(np.array([u]))[0]
        # x0 + u^(1-gamma) I^alpha[c u^nu], all analytic
        rhs = x0 + u ** (1 - gamma) * c * hadamard_integral_powerlaw(alpha, nu, u)
        assert z == pytest.approx(rhs, rel=1e-13, abs=1e-13)


class TestValidation:
    def test_nested_sum_rejected(self):
        with pytest.raises(ValueError):
            Sum((Sum((PowerSource(1, 0),)),))

    def test_empty_sum_rejected(self):
        with pytest.raises(ValueError):
            Sum(())

    @pytest.mark.parametrize(
        "make",
        [
            lambda: PowerNonlinear(1.0, 0.0, 1.0),
            lambda: LinearInLog(1.0, -0.5),
            lambda: PowerSource(math.nan, 0.0),
        ],
    )
    def test_bad_parameters(self, make):
        with pytest.raises(ValueError):
            make()
