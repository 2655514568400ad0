"""Per-term homological assignments: the case table and the defining relation."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from snf import noise
from snf.noise import ONE, diff, n_add, n_scale, phi_atom, product, z_atom
from snf.homological import solve_fast, solve_slow
from snf.systems import ALLOW, FORBID, Policy, PolicyConflict

F = Fraction
PHI = phi_atom(0)
ZM = z_atom(F(-1), (PHI,))
ZP = z_atom(F(1), (PHI,))
B = (F(-1),)


def check_relation(asg, mu, c):
    """a + db/dt - mu*b must reproduce the forcing exactly."""
    got = dict(asg.evolution)
    if asg.transform:
        got = n_add(got, diff(asg.transform))
        got = n_add(got, n_scale(asg.transform, -mu))
    assert got == c


def test_fast_noise_goes_to_memory_convolution():
    # toy first step: forcing sigma*phi with q=0 -> eta gets Z- phi
    c = {(PHI,): F(1)}
    asg = solve_fast(c, (0,), 0, B, ALLOW)
    assert asg.evolution == {}
    assert asg.transform == {(ZM,): F(1)}
    check_relation(asg, F(-1), c)


def test_fast_resonant_bare_stays_in_evolution():
    # forcing -4 sigma Y phi at q=1: mu = 0, bare noise must stay
    c = {(PHI,): F(-4)}
    asg = solve_fast(c, (1,), 0, B, ALLOW)
    assert asg.evolution == c and asg.transform == {}


def test_fast_resonant_memory_splits_by_parts():
    # forcing -4 sigma Y Z- phi at mu=0: evolution -4 phi, transform 4 Z- phi
    c = {(ZM,): F(-4)}
    asg = solve_fast(c, (1,), 0, B, ALLOW)
    assert asg.evolution == {(PHI,): F(-4)}
    assert asg.transform == {(ZM,): F(4)}
    check_relation(asg, F(0), c)


def test_fast_anticipation_with_minus_sign():
    # forcing 8 Y^2 (2 phi - 3 Z- phi): mu = +1, b = -Z+ applied to c
    c = {(PHI,): F(16), (ZM,): F(-24)}
    asg = solve_fast(c, (2,), 0, B, ALLOW)
    assert asg.evolution == {}
    # -Z+(16 phi - 24 Z- phi) with the composition Z+Z- = (Z+ + Z-)/2
    assert asg.transform == {(ZP,): F(-4), (ZM,): F(12)}
    check_relation(asg, F(1), c)


def test_fast_anticipation_forbidden_couples_evolution():
    c = {(PHI,): F(16), (ZM,): F(-24)}
    asg = solve_fast(c, (2,), 0, B, FORBID)
    assert asg.evolution == c and asg.transform == {}


def test_fast_deterministic_forbidden_also_coupled():
    # even deterministic mu>0 forcings go to the evolution when anticipation
    # is off (the transform is kept free of fast-variable content)
    c = {ONE: F(-2)}
    asg = solve_fast(c, (2,), 0, B, FORBID)
    assert asg.evolution == c and asg.transform == {}


def test_fast_deterministic_anticipating_is_plain_division():
    # Z+ of a constant is 1/|mu|: no anticipatory atom survives
    c = {ONE: F(-2)}
    asg = solve_fast(c, (2,), 0, B, ALLOW)
    assert asg.evolution == {}
    assert asg.transform == {ONE: F(2)}
    check_relation(asg, F(1), c)


def test_near_resonance_threshold():
    pol = Policy(anticipation=True, mu_min=F(1, 4))
    c = {(PHI,): F(1)}
    # mu = -1/8 is slower than the threshold: stays in the evolution
    asg = solve_fast(c, (0,), 0, (F(-1, 8),), pol)
    assert asg.evolution == c and asg.transform == {}
    # mu = -1 is fast enough
    asg2 = solve_fast(c, (0,), 0, (F(-1),), pol)
    assert asg2.transform


def test_slow_resonant_memory_split():
    # forcing -sigma X Z- phi: evolution -sigma X phi, transform +sigma X Z- phi
    c = {(ZM,): F(-1)}
    asg = solve_slow(c, (0,), B, ALLOW)
    assert asg.evolution == {(PHI,): F(-1)}
    assert asg.transform == {(ZM,): F(1)}
    check_relation(asg, F(0), c)


def test_slow_quadratic_irreducible_stays():
    c = {product(PHI, ZM): F(2)}
    asg = solve_slow(c, (0,), B, ALLOW)
    assert asg.evolution == c and asg.transform == {}


def test_slow_anticipation_branches():
    # forcing sigma X Y (5 phi - 6 Z- phi): anticipate -> transform only
    c = {(PHI,): F(5), (ZM,): F(-6)}
    allow = solve_slow(c, (1,), B, ALLOW)
    assert allow.evolution == {}
    check_relation(allow, F(1), c)
    forbid = solve_slow(c, (1,), B, FORBID)
    assert forbid.evolution == c and forbid.transform == {}


def test_policy_conflict_surfaces():
    # a memory solve whose forcing already anticipates cannot be hidden
    c = {(ZP,): F(1)}
    with pytest.raises(PolicyConflict):
        solve_fast(c, (0,), 0, B, FORBID)


rates = st.sampled_from([F(-2), F(-1), F(-1, 2)])


@st.composite
def forcings(draw):
    terms = {}
    for _ in range(draw(st.integers(1, 3))):
        kind = draw(st.integers(0, 2))
        if kind == 0:
            expr = (PHI,)
        elif kind == 1:
            expr = (z_atom(draw(rates), (PHI,)),)
        else:
            expr = product(z_atom(draw(rates), (PHI,)),
                           z_atom(draw(rates), (PHI,)))
        c = F(draw(st.integers(-3, 3)) or 1)
        terms[expr] = terms.get(expr, F(0)) + c
    return {e: c for e, c in terms.items() if c}


@given(forcings(), st.integers(0, 3))
@settings(max_examples=80, deadline=None)
def test_fast_defining_relation(c, q):
    mu = F(-1) - F(-q)   # beta_j - q*beta with beta = -1
    asg = solve_fast(c, (q,), 0, B, ALLOW)
    check_relation(asg, mu, c)


@given(forcings(), st.integers(0, 3))
@settings(max_examples=80, deadline=None)
def test_slow_defining_relation(c, q):
    mu = F(q)
    asg = solve_slow(c, (q,), B, ALLOW)
    check_relation(asg, mu, c)


@given(forcings(), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_forbidden_never_anticipates(c, q):
    asg_f = solve_fast(c, (q,), 0, B, FORBID)
    asg_s = solve_slow(c, (q,), B, FORBID)
    for asg in (asg_f, asg_s):
        for e in list(asg.evolution) + list(asg.transform):
            assert not noise.anticipates(e)
