"""Closed forms: frozen reference values, branches, clamping, monotonicity.

Reference values were frozen from 50-digit evaluation of the exact
expressions (mpmath); the tolerances below are pure double-precision
round-off allowances.
"""

import math

import numpy as np
import pytest

from slepian_ncp import (
    InternalConsistencyError,
    abs_sup_bound,
    bachelier_levy,
    constant_ncp,
    linear_ncp,
    zero_hitting_prob,
)
from slepian_ncp.closedform import B_SWITCH, CLAMP_SLACK, _clamp
from slepian_ncp.normmath import Phi, phi

# (a, value) frozen at 50 digits.
CONSTANT_REFERENCE = [
    (0.0, 0.090845056908104664),
    (1.0, 0.44573035243624183),
    (-1.0, 0.0050115848182992866),
    (2.5, 0.94376334893927844),
]

# ((a, b), value) frozen at 50 digits, generic branch.
LINEAR_REFERENCE = [
    ((0.0, 1.0), 0.20600974369349431),
    ((1.0, 1.0), 0.63116319948387336),
    ((1.0, -0.5), 0.32396902846894409),
    ((-1.0, 2.0), 0.050888328814393587),
]

# ((a, b), value) frozen at 50 digits, slopes below the series switch.
LINEAR_SERIES_REFERENCE = [
    ((1.0, 1e-5), 0.44573268098998419),
    ((-2.0, 3e-5), 5.9151935050044175e-5),
    ((0.0, -5e-5), 0.090840070195915245),
]

# ((a, b, T), value) frozen at 50 digits.
BACHELIER_REFERENCE = [
    ((0.5, 0.5, 1.0), 0.53807941621222624),
    ((1.0, -0.5, 1.0), 0.50986166005467015),
    ((2.0, 1.0, 1.0), 0.99574422962956091),
    ((1.0, 0.0, 4.0), 0.38292492254802621),
]


# ---------------------------------------------------------------------------
# constant boundary
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("a,expect", CONSTANT_REFERENCE)
def test_constant_frozen_values(a, expect):
    r = constant_ncp(a)
    assert r.p == pytest.approx(expect, abs=1e-14)
    assert r.branch == "generic"


def test_constant_zero_boundary_closed_value():
    # P(S <= 0 on [0,1]) = 1/4 - 1/(2 pi) exactly.
    assert constant_ncp(0.0).p == pytest.approx(0.25 - 1.0 / (2.0 * math.pi), abs=1e-15)


def test_constant_limits():
    assert constant_ncp(40.0).p == pytest.approx(1.0, abs=1e-15)
    assert constant_ncp(-40.0).p == pytest.approx(0.0, abs=1e-300)


def test_constant_monotone_in_a():
    a = np.linspace(-4.0, 4.0, 81)
    p = np.array([constant_ncp(ai).p for ai in a])
    assert np.all(np.diff(p) > 0.0)
    assert np.all((p >= 0.0) & (p <= 1.0))


def test_constant_rejects_nonfinite():
    with pytest.raises(ValueError):
        constant_ncp(float("nan"))
    with pytest.raises(ValueError):
        constant_ncp(float("inf"))


# ---------------------------------------------------------------------------
# linear boundary
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("ab,expect", LINEAR_REFERENCE)
def test_linear_frozen_values(ab, expect):
    r = linear_ncp(*ab)
    assert r.p == pytest.approx(expect, abs=1e-14)
    assert r.branch == "generic"


@pytest.mark.parametrize("ab,expect", LINEAR_SERIES_REFERENCE)
def test_linear_series_frozen_values(ab, expect):
    r = linear_ncp(*ab)
    assert r.p == pytest.approx(expect, abs=1e-12)
    assert r.branch == "small_slope_series"


def test_linear_zero_slope_equals_constant():
    for a in (-2.0, 0.0, 1.5):
        assert linear_ncp(a, 0.0).p == pytest.approx(constant_ncp(a).p, abs=1e-15)


@pytest.mark.parametrize("a", [-2.0, -1.0, 0.0, 1.0, 2.0])
@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_linear_continuous_at_series_switch(a, sign):
    # The generic formula just above the switch and the series just below
    # must agree far better than either side's own error.
    b_hi = sign * B_SWITCH * 1.0000001
    b_lo = sign * B_SWITCH * 0.9999999
    hi = linear_ncp(a, b_hi)
    lo = linear_ncp(a, b_lo)
    assert hi.branch == "generic"
    assert lo.branch == "small_slope_series"
    assert abs(hi.p - lo.p) < 1e-10


def test_linear_monotone_in_intercept_and_slope():
    b_fixed = 0.7
    ps = [linear_ncp(a, b_fixed).p for a in np.linspace(-2.0, 2.0, 41)]
    assert np.all(np.diff(ps) > 0.0)
    a_fixed = 0.5
    ps = [linear_ncp(a_fixed, b).p for b in np.linspace(-2.0, 2.0, 41)]
    assert np.all(np.diff(ps) > 0.0)


def test_linear_zero_intercept_reduction():
    # For a = 0 the formula collapses to
    # (1/2 - phi(0)/b) Phi(b) + phi(b)/(2b); identity checked to 3e-52 in
    # extended precision, so double precision must hit round-off.
    for b in (-2.0, -0.5, 0.5, 2.0):
        reduced = (0.5 - phi(0.0) / b) * Phi(b) + phi(b) / (2.0 * b)
        assert linear_ncp(0.0, b).p == pytest.approx(reduced, abs=1e-12)


def test_linear_rejects_nonfinite():
    with pytest.raises(ValueError):
        linear_ncp(float("nan"), 1.0)
    with pytest.raises(ValueError):
        linear_ncp(0.0, float("inf"))


# ---------------------------------------------------------------------------
# Brownian half-line formula
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("abT,expect", BACHELIER_REFERENCE)
def test_bachelier_frozen_values(abT, expect):
    assert bachelier_levy(*abT) == pytest.approx(expect, abs=1e-14)


def test_bachelier_zero_for_nonpositive_intercept():
    assert bachelier_levy(0.0, 1.0, 1.0) == 0.0
    assert bachelier_levy(-0.5, 2.0, 1.0) == 0.0


def test_bachelier_flat_case_is_reflection_value():
    # b = 0: P(max B <= a on [0,1]) = 2 Phi(a) - 1.
    assert bachelier_levy(1.0, 0.0, 1.0) == pytest.approx(0.6826894921370859, abs=1e-13)


def test_bachelier_monotone_and_bounded():
    for b in (-1.0, 0.0, 1.0):
        p = [bachelier_levy(a, b, 1.0) for a in np.linspace(0.05, 4.0, 40)]
        assert np.all(np.diff(p) > 0.0)
        assert np.all((np.array(p) >= 0.0) & (np.array(p) <= 1.0))


def test_bachelier_steep_negative_slope_tail_is_stable():
    # phi/Phi products deep in the Mills regime; naive evaluation returns
    # garbage (0 * inf) while the fused form stays in [0, 1].
    p = bachelier_levy(30.0, -35.0, 1.0)
    assert 0.0 <= p <= 1.0


def test_bachelier_rejects_bad_horizon():
    with pytest.raises(ValueError):
        bachelier_levy(1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        bachelier_levy(1.0, 0.0, -2.0)


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------

def test_abs_sup_identity_against_constants():
    for a in np.arange(0.0, 6.01, 0.1):
        direct = constant_ncp(a).p - constant_ncp(-a).p
        assert abs(direct - abs_sup_bound(a)) <= 1e-12, a


def test_abs_sup_reference_value():
    assert abs_sup_bound(2.0) == pytest.approx(0.84651780307726548, abs=1e-14)


def test_abs_sup_rejects_negative_levels():
    with pytest.raises(ValueError):
        abs_sup_bound(-0.5)


def test_zero_hitting_value():
    assert zero_hitting_prob() == pytest.approx(0.5 + 1.0 / math.pi, abs=1e-15)
    assert zero_hitting_prob() == pytest.approx(0.81830988618379067, abs=1e-15)


# ---------------------------------------------------------------------------
# clamp guard
# ---------------------------------------------------------------------------

def test_clamp_passes_and_flags():
    assert _clamp(0.5) == (0.5, False)
    assert _clamp(-CLAMP_SLACK / 2.0) == (0.0, True)
    assert _clamp(1.0 + CLAMP_SLACK / 2.0) == (1.0, True)


def test_clamp_rejects_gross_violations():
    with pytest.raises(InternalConsistencyError):
        _clamp(-1e-9)
    with pytest.raises(InternalConsistencyError):
        _clamp(1.0 + 1e-9)
