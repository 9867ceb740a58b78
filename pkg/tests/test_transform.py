"""Slepian-to-Brownian reduction: clocks, conditional law, boundary image."""

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import stats

from slepian_ncp import PiecewiseLinearBoundary
from slepian_ncp.transform import (
    boundary_image,
    boundary_image_coeffs,
    brownian_clock_time,
    conditional_covariance,
    conditional_density,
    z_transform_time,
)


# ---------------------------------------------------------------------------
# clock maps
# ---------------------------------------------------------------------------

def test_clocks_are_inverse_bijections():
    s = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(z_transform_time(brownian_clock_time(s)), s, atol=1e-14)
    u = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(brownian_clock_time(z_transform_time(u)), u, atol=1e-14)


def test_clock_endpoints_and_monotonicity():
    assert brownian_clock_time(0.0) == 0.0
    assert brownian_clock_time(1.0) == 1.0
    assert z_transform_time(0.0) == 0.0
    assert z_transform_time(1.0) == 1.0
    u = brownian_clock_time(np.linspace(0.0, 1.0, 200))
    assert np.all(np.diff(u) > 0.0)
    # the Brownian clock runs slow: u = t/(2-t) <= t on [0, 1]
    t = np.linspace(0.0, 1.0, 200)
    assert np.all(brownian_clock_time(t) <= t + 1e-15)


# ---------------------------------------------------------------------------
# conditional law of S given S(0) = x
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("t,x", [(0.1, 0.0), (0.5, 1.3), (1.0, -0.7)])
def test_conditional_density_is_the_right_normal(t, x):
    y = np.linspace(-6.0, 6.0, 13)
    expect = stats.norm.pdf(y, loc=(1.0 - t) * x, scale=np.sqrt(t * (2.0 - t)))
    np.testing.assert_allclose(conditional_density(t, y, x), expect, rtol=1e-12)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_conditional_density_integrates_to_one(t):
    val, err = sp_integrate.quad(lambda y: conditional_density(t, y, 0.8), -np.inf, np.inf)
    assert abs(val - 1.0) <= 1e-10 + err


def test_conditional_density_rejects_bad_times():
    for t in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            conditional_density(t, 0.0, 0.0)


def test_conditional_covariance_min_form_values():
    assert conditional_covariance(0.0, 0.7) == 0.0
    assert conditional_covariance(0.3, 0.3) == pytest.approx(0.3 * 1.7)
    assert conditional_covariance(0.3, 0.8) == pytest.approx(0.3 * 1.2)
    assert conditional_covariance(0.8, 0.3) == pytest.approx(0.3 * 1.2)  # symmetric
    assert conditional_covariance(1.0, 1.0) == pytest.approx(1.0)


def test_conditional_covariance_equals_conditioning_identity():
    # Conditioning the triangular covariance 1 - |t1 - t2| on S(0) (variance 1,
    # Cov(S(0), S(t)) = 1 - t) leaves 1 - |t1-t2| - (1-t1)(1-t2), which must
    # equal the min form everywhere on the square.
    t1, t2 = np.meshgrid(np.linspace(0.0, 1.0, 41), np.linspace(0.0, 1.0, 41))
    direct = 1.0 - np.abs(t1 - t2) - (1.0 - t1) * (1.0 - t2)
    np.testing.assert_allclose(conditional_covariance(t1, t2), direct, atol=1e-14)


def test_conditional_covariance_matrix_is_psd():
    t = np.linspace(0.0, 1.0, 21)
    mat = conditional_covariance(t[:, None], t[None, :])
    eig = np.linalg.eigvalsh(mat)
    assert eig.min() >= -1e-12


def test_conditional_covariance_rejects_out_of_range():
    with pytest.raises(ValueError):
        conditional_covariance(-0.1, 0.5)
    with pytest.raises(ValueError):
        conditional_covariance(0.5, 1.2)


# ---------------------------------------------------------------------------
# boundary image
# ---------------------------------------------------------------------------

def test_boundary_image_coeffs_structure(tent):
    u, p, q = boundary_image_coeffs(tent)
    t = tent.times
    np.testing.assert_allclose(u, t / (2.0 - t), atol=1e-15)
    assert u[0] == 0.0
    assert np.all(np.diff(u) > 0.0)
    np.testing.assert_allclose(p, tent.values / (2.0 - t), atol=1e-15)
    np.testing.assert_allclose(q, (1.0 - t) / (2.0 - t), atol=1e-15)
    for arr in (u, p, q):
        assert not arr.flags.writeable


def test_boundary_image_coeffs_cached(tent):
    assert boundary_image_coeffs(tent) is boundary_image_coeffs(tent)


@pytest.mark.parametrize("x", [-1.5, 0.0, 2.0])
def test_boundary_image_matches_direct_formula(three_seg, x):
    knots = boundary_image(three_seg, x)
    t = three_seg.times
    c = three_seg.values
    np.testing.assert_allclose(knots.u, t / (2.0 - t), atol=1e-15)
    np.testing.assert_allclose(knots.h, (c - (1.0 - t) * x) / (2.0 - t), atol=1e-14)
    assert knots.x == x


def test_boundary_image_start_value():
    # h_0 = (f(0) - x) / 2: the Brownian path starts at 0, so the boundary at
    # u = 0 must clear the conditioning value's image.
    b = PiecewiseLinearBoundary(((0.0, 1.2), (1.0, 0.3)))
    for x in (-2.0, 0.0, 1.0):
        knots = boundary_image(b, x)
        assert knots.h[0] == pytest.approx((1.2 - x) / 2.0, abs=1e-14)


def test_boundary_image_affine_in_x(tent):
    k0 = boundary_image(tent, 0.0)
    k1 = boundary_image(tent, 1.0)
    k2 = boundary_image(tent, 2.0)
    np.testing.assert_allclose(k2.h - k1.h, k1.h - k0.h, atol=1e-14)
