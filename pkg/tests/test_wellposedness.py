import math

import pytest
from hypothesis import given, settings, strategies as st

from dmhfem.problem import Coefficients, ProblemSpec, Robin, SIDES
from dmhfem.wellposedness import (
    CoefficientBounds,
    WellposednessError,
    coefficient_bounds,
    coercivity_constants,
    continuity_constants,
    delta,
    script_m,
    smallness,
)


def spec(mu=1.0, r=1.0, v=(0.0, 0.0, 0.0), kappa=1.0, alpha=1.0):
    c = Coefficients(mu=mu, r=r, g=0.0, v=v)
    return ProblemSpec(c, c, kappa=kappa, bcs={s: Robin(alpha, 0.0) for s in SIDES})


def bounds(mu=1.0, r=1.0, v=0.0, kappa=1.0, alpha=1.0):
    return CoefficientBounds(mu, mu, r, r, v, kappa, alpha)


def test_continuity_unit_advection():
    M_a, M_b, M_c = continuity_constants(spec(v=(0, 0, 1.0)))
    assert M_a == pytest.approx(5.0)
    assert M_b == 1.0 and M_c == 1.0


def test_coercivity_no_advection():
    co = coercivity_constants(spec())
    assert co.c0_statement == co.c0_proof == 1.0
    assert co.k_a_statement == co.k_a_proof == 1.0


def test_delta_example():
    assert delta(1.0, 1.0, 0.1, 1.0) == pytest.approx(0.2)
    assert delta(1.0, 0.0, 0.1, 1.0) == math.inf


def test_script_m_infinite_when_drift_dominates():
    b = bounds(mu=1.0, r=1.0, v=4.0)
    assert script_m(b, 1.0) == math.inf


def test_report_lists_both_c0():
    rep = smallness(spec(v=(0, 0, 1.0)), 0.1)
    text = rep.format()
    for key in ("c0_statement", "c0_proof", "k_a_statement", "k_a_proof",
                "script_M_statement", "script_M_proof", "delta_statement", "delta_proof"):
        assert key in text
    assert rep.c0_statement == pytest.approx(1.0)
    assert rep.c0_proof == pytest.approx(0.5)


def test_advection_bound_boundary_case():
    # |v| = 2 mu_min c0 exactly is not admissible
    assert not smallness(spec(v=(0, 0, 2.0))).advection_bound
    assert smallness(spec(v=(0, 0, 1.999))).advection_bound


@pytest.mark.parametrize("c", [0.0, -1.0, float("nan")])
def test_bad_trace_constant(c):
    with pytest.raises(WellposednessError):
        smallness(spec(), c)


def test_callable_coefficients_sampled():
    c1 = Coefficients(mu=lambda p: 1.0 + p[:, 2], r=1.0, g=0.0, v=(0.0, 0.0, 0.0))
    b = coefficient_bounds(ProblemSpec(c1, c1))
    assert 1.0 < b.mu_min < 1.1 and 1.9 < b.mu_max < 2.0


@settings(max_examples=50, deadline=None)
@given(
    mu=st.floats(0.1, 10.0), r=st.floats(0.1, 10.0), v=st.floats(0.0, 5.0),
    kappa=st.floats(0.1, 5.0), c1=st.floats(0.01, 10.0), c2=st.floats(0.01, 10.0),
)
def test_delta_monotone(mu, r, v, kappa, c1, c2):
    lo, hi = sorted((c1, c2))
    s = spec(mu=mu, r=r, v=(0.0, 0.0, v), kappa=kappa)
    a, b = smallness(s, lo), smallness(s, hi)
    assert a.delta_proof <= b.delta_proof or math.isinf(a.delta_proof)
    assert a.delta_statement <= b.delta_statement or math.isinf(a.delta_statement)
    bigger = smallness(spec(mu=mu, r=r, v=(0.0, 0.0, v), kappa=kappa * 2), lo)
    if math.isfinite(a.delta_statement):
        assert bigger.delta_statement >= a.delta_statement
