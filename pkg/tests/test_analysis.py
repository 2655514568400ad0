"""Slow-manifold charts, expectations, reversion, initial conditions, and
the long-time quadratic-noise replacement."""

from fractions import Fraction

import pytest

from conftest import make_system
from snf import noise
from snf.analysis import (AnalysisError, expected_series, expected_ssm,
                          long_time_model, project_initial_condition, revert,
                          ssm_parametrisation)
from snf.engine import construct
from snf.render import parse_series_for
from snf.series import Series
from snf.systems import ALLOW

F = Fraction


def S(spec, text):
    return parse_series_for(text, spec)


def test_toy_ssm_chart(toy3):
    spec = toy3.spec
    chart = ssm_parametrisation(toy3)
    assert chart.x_of_X[0] == S(spec, """
        x + sigma*x*Z[-1]{ phi[0] }
        - 1/2*sigma^2*x*Z[-1]{ phi[0] }^2
        - 2*sigma^2*x*Z[-1]{ Z[-1]{ phi[0] }^2 }""")
    assert chart.y_of_X[0] == S(spec, """
        x^2 + sigma*Z[-1]{ phi[0] }
        + 2*sigma*x^2*Z[-1]{ phi[0] - Z[-1]{ phi[0] } }
        - 2*sigma^2*Z[-1]{ Z[-1]{ phi[0] }^2 }
        + 8*sigma^3*Z[-1]{ Z[-1]{ phi[0] }*Z[-1]{ Z[-1]{ phi[0] }^2 } }""")


def test_ssm_chart_deterministic_limit(toy3):
    spec = toy3.spec
    chart = ssm_parametrisation(toy3)
    zero = [Series.zero(spec.dims, spec.trunc)]
    assert chart.x_of_X[0].substitute(par=zero) == S(spec, "x")
    assert chart.y_of_X[0].substitute(par=zero) == S(spec, "x^2")


def test_ssm_chart_has_no_anticipation(toy5):
    chart = ssm_parametrisation(toy5)
    for s in chart.x_of_X + chart.y_of_X:
        for (_m, expr), _c in s.terms.items():
            assert not noise.anticipates(expr)


def test_linear_ssm(linear3):
    spec = linear3.spec
    chart = ssm_parametrisation(linear3)
    assert chart.x_of_X[0] == S(spec, "x - eps*Z[-1]{ phi[0] }")
    assert chart.y_of_X[0] == S(spec, "Z[-1]{ phi[0] }")


def test_expected_ssm_toy(toy3):
    # E[x] = (1 - 5/4 sigma^2) X under the expectation tables; E[y] picks up
    # the mean of the -2 sigma^2 Z-((Z-phi)^2) transform term.
    spec = toy3.spec
    ex, ey = expected_ssm(ssm_parametrisation(toy3))
    assert ex[0].value == S(spec, "x - 5/4*sigma^2*x")
    assert ex[0].unevaluable == []
    assert ey[0].value == S(spec, "x^2 - sigma^2")
    assert ey[0].unevaluable == []


def test_expected_ssm_consistent_with_steeper_parabola(toy3):
    # (E[x]/X)^2 * (1 + 5/2 sigma^2) = 1 + O(sigma^4) at sigma = 0.1: the
    # steeper-parabola factor 1 + 5/2 sigma^2 squares the 5/4 coefficient.
    spec = toy3.spec
    ex, _ey = expected_ssm(ssm_parametrisation(toy3))
    coeff = -ex[0].value.coefficient(spec.dims.mono(slow=(1,), par=(2,)))
    assert coeff == F(5, 4)
    s2 = F(1, 100)
    lhs = (1 - coeff * s2) ** 2 * (1 + 2 * coeff * s2)
    assert abs(lhs - 1) <= 3 * coeff ** 2 * s2 ** 2


def test_reversion_matches_roundtrip(toy3):
    spec = toy3.spec
    rv = revert(toy3)
    tx, ty = toy3.transform_x(), toy3.transform_y()
    assert rv.X_of_xy[0].substitute(slow=tx, fast=ty) == S(spec, "x")
    assert rv.Y_of_xy[0].substitute(slow=tx, fast=ty) == S(spec, "y")


def test_toy_reversion_slow(toy3):
    spec = toy3.spec
    rv = revert(toy3)
    assert rv.X_of_xy[0] == S(spec, """
        x + x^3 - x*y + 3/2*x*y^2
        + 2*sigma*x*y*Z[+1]{ phi[0] }
        - 2*sigma^2*x*Z[+1]{ phi[0] }*Z[-1]{ phi[0] }""")


def test_toy_reversion_fast(toy3):
    # The grade-2 part; the sigma^2 coefficient 2(1 + Z-) is fixed by the
    # round-trip identity.
    spec = toy3.spec
    rv = revert(toy3)
    low = rv.Y_of_xy[0].grade_filter(lambda m: spec.trunc.grade_of(m) <= 2)
    assert low == S(spec, """
        y - x^2 - 2*y^2 - sigma*Z[-1]{ phi[0] }
        + 2*sigma^2*Z[-1]{ phi[0] }^2
        + 2*sigma^2*Z[-1]{ Z[-1]{ phi[0] }^2 }""")


def test_initial_condition_projection(toy3):
    # From the order-3 projection (the displayed one): known mean and the
    # leading variance 2 sigma^2 x0^2 y0^2 + sigma^4 x0^2, exactly.
    spec = toy3.spec
    rv = revert(toy3)
    ip = project_initial_condition(rv, toy3, F(3, 10), F(1, 5))
    x0, y0 = F(3, 10), F(1, 5)
    want_mean = x0 + x0 ** 3 - x0 * y0 + F(3, 2) * x0 * y0 ** 2
    assert ip.mean.coefficient(spec.dims.mono()) == want_mean
    assert ip.mean_tail == []
    assert ip.variance.coefficient(spec.dims.mono(par=(2,))) == 2 * x0 ** 2 * y0 ** 2
    assert ip.variance.coefficient(spec.dims.mono(par=(4,))) == x0 ** 2

    # knowing the future noise shifts the mean and shrinks the variance
    zp = noise.z_atom(F(1), (noise.phi_atom(0),))
    assert ip.mean_future_known.terms.get(
        (spec.dims.mono(par=(1,)), (zp,))) == 2 * x0 * y0
    assert ip.variance_future_known.terms.get(
        (spec.dims.mono(par=(4,)), (zp, zp))) == 2 * x0 ** 2
    assert list(ip.variance_future_known.terms) == [
        (spec.dims.mono(par=(4,)), (zp, zp))]


def test_initial_condition_deterministic_case(toy3):
    spec = toy3.spec
    rv = revert(toy3)
    ip = project_initial_condition(rv, toy3, F(3, 10), F(0))
    x0 = F(3, 10)
    zero = [Series.zero(spec.dims, ip.expr.trunc)]
    det = ip.expr.substitute(par=zero)
    assert det.coefficient(spec.dims.mono()) == x0 + x0 ** 3
    assert ip.variance.substitute(par=zero).is_zero()


def test_long_time_model_pk(pk3):
    spec = pk3.spec
    lt = long_time_model(pk3)
    # phi Z- phi -> 1/2 + (1/sqrt 2) fresh noise: drift coefficient -eps/2,
    # fresh symbol amplitude carried as intensity 1/2
    assert lt.F[0] == S(spec, """
        -eps*(x + eps*x + x^2) - eps*sigma*(1 + 2*eps + 2*x)*phi[0]
        - 1/2*eps*sigma^2 - eps*sigma^2*phi[1]""")
    assert len(lt.fresh) == 1
    f = lt.fresh[0]
    assert f.index == 1 and f.rate == F(-1) and f.intensity == F(1, 2)
    assert lt.leftovers == []


def test_long_time_model_leading_truncation_is_averaged_model(pk3):
    # dropping the noise recovers dxbar = -(xbar + xbar^2 + 1/2) dtau after
    # restoring slow time (dividing by eps, sigma = 1)
    spec = pk3.spec
    lt = long_time_model(pk3)
    det = lt.deterministic_part()[0]
    lead = det.grade_filter(lambda m: m[2][0] == 1)   # eps^1 terms
    assert lead == S(spec, "-eps*x - eps*x^2 - 1/2*eps*sigma^2")


def test_long_time_model_reports_leftovers(toy5):
    lt = long_time_model(toy5)
    # the X^3 phi Z-Z- phi factor is outside the replacement table
    assert len(lt.leftovers) == 1
    (_i, (mono, expr), _c) = lt.leftovers[0]
    assert sum(mono[0]) == 3


def test_long_time_model_no_quadratic_terms_identity(linear3):
    lt = long_time_model(linear3)
    assert lt.F[0] == linear3.F[0]
    assert lt.fresh == [] and lt.leftovers == []
