import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpratio import specfun
from lpratio.errors import DomainError, NoStationaryPointError
from lpratio.ratefn import (
    PParam,
    clt_sigma,
    cumulant,
    cumulant_grad,
    cumulant_oracle,
    g_p,
    legendre_star,
    legendre_star_oracle,
    m_p,
    rate_curve,
    rate_j,
    stationary_point,
)

GAMMA = specfun.EULER_GAMMA


def eq_residuals(alpha, beta, tilt, p):
    ds, dt = cumulant_grad(tilt.s, tilt.t, p)
    return abs(ds - alpha), abs(dt - beta)


def test_pparam():
    assert PParam(0.5).restricted_mode
    assert not PParam(1.0).restricted_mode
    for bad in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(DomainError):
            PParam(bad)


def test_m_p_special_values():
    assert m_p(1) == pytest.approx(-GAMMA, rel=1e-14)
    assert m_p(2) == pytest.approx(-(GAMMA + math.log(2)) / 2, rel=1e-14)
    assert m_p(4) == pytest.approx(-(2 * GAMMA + math.pi + 2 * math.log(2)) / 8, rel=1e-14)
    # the published 3-digit values are truncations (0.52984 -> 0.529)
    for p, shown in [(1, 0.561), (2, 0.529), (4, 0.491)]:
        assert math.floor(math.exp(m_p(p)) * 1000) / 1000 == shown


@pytest.mark.parametrize("p", [0.3, 1, 2, 7.5, 100])
def test_m_p_is_negative_and_equals_h_identity(p):
    assert m_p(p) < 0
    assert m_p(p) == pytest.approx(specfun.h_func(1 / p) / p, abs=1e-12)


def test_m_p_large_p_trend():
    assert m_p(1000) == pytest.approx(-1.0, abs=1e-2)


def test_clt_sigma():
    assert clt_sigma(1) == pytest.approx(math.sqrt(math.pi**2 / 6 - 1), rel=1e-12)
    assert clt_sigma(2) == pytest.approx(math.sqrt(math.pi**2 / 2 - 2) / 2, rel=1e-12)
    assert round(clt_sigma(1), 4) == 0.8031
    assert round(clt_sigma(2), 4) == 0.8566
    # Var(N1 - N2/2) with Var N1 = psi'(1/2)/4, Var N2 = 2, Cov = 1
    assert specfun.trigamma(0.5) / 4 - 0.5 == pytest.approx(clt_sigma(2) ** 2, rel=1e-13)


@pytest.mark.parametrize("p", [0.5, 1, 2, 10])
def test_cumulant_at_origin(p):
    assert cumulant(0.0, 0.0, p) == 0.0


@pytest.mark.parametrize("p", [1, 2, 4])
def test_cumulant_s_derivative_at_origin_is_m_p(p):
    h = 1e-5
    fd = (cumulant(h, 0.0, p) - cumulant(-h, 0.0, p)) / (2 * h)
    assert fd == pytest.approx(m_p(p), abs=1e-8)


@pytest.mark.parametrize("p", [1, 2, 4])
def test_cumulant_t_derivative_at_origin_is_one(p):
    # E|Z|^p = 1
    h = 1e-5
    fd = (cumulant(0.0, h, p) - cumulant(0.0, -h, p)) / (2 * h)
    assert fd == pytest.approx(1.0, abs=1e-8)


def test_cumulant_outside_domain_is_infinite():
    for p in (1, 2):
        assert cumulant(-1.5, 0.0, p) == math.inf
        assert cumulant(0.0, 1 / p, p) == math.inf
        assert cumulant(-1.0, -3.0, p) == math.inf


@pytest.mark.parametrize(
    "s, t, p", [(0.0, 0.0, 2), (1.0, 0.0, 2), (0.5, -1.0, 1), (-0.6, 0.3, 3), (4.0, -2.0, 1.5)]
)
def test_cumulant_matches_quadrature(s, t, p):
    assert cumulant_oracle(s, t, p) == pytest.approx(cumulant(s, t, p), abs=1e-6)


def test_cumulant_oracle_domain():
    with pytest.raises(DomainError):
        cumulant_oracle(-2.0, 0.0, 2)


@settings(max_examples=60)
@given(
    st.floats(min_value=-0.9, max_value=8.0),
    st.floats(min_value=-5.0, max_value=0.9),
    st.sampled_from([1.0, 1.5, 2.0, 4.0]),
)
def test_gradient_matches_finite_differences(s, u, p):
    t = u / p  # keeps t < 1/p
    h = 1e-6
    ds = (cumulant(s + h, t, p) - cumulant(s - h, t, p)) / (2 * h)
    dt = (cumulant(s, t + h, p) - cumulant(s, t - h, p)) / (2 * h)
    gs, gt = cumulant_grad(s, t, p)
    assert ds == pytest.approx(gs, abs=1e-6, rel=1e-6)
    assert dt == pytest.approx(gt, abs=1e-6, rel=1e-6)


@pytest.mark.parametrize("p", [1, 2])
def test_stationary_point_at_mean_is_origin(p):
    tilt = stationary_point(m_p(p), 1.0, p)
    assert tilt.s == pytest.approx(0.0, abs=1e-12)
    assert tilt.t == pytest.approx(0.0, abs=1e-12)


def test_stationary_point_matches_g_p():
    theta, p = 0.4, 2
    g = g_p(theta, p)
    tilt = stationary_point(math.log(theta), 1.0, p)
    assert tilt.s == pytest.approx(2 * g - 1, rel=1e-13)
    assert tilt.t == pytest.approx(0.5 - g, rel=1e-13)
    ra, rb = eq_residuals(math.log(theta), 1.0, tilt, p)
    assert ra <= 1e-9 and rb <= 1e-9


def test_stationary_point_infeasible():
    with pytest.raises(NoStationaryPointError):
        stationary_point(0.0, 0.5, 1)


@settings(max_examples=100)
@given(
    st.floats(min_value=-3.0, max_value=1.0),
    st.floats(min_value=1e-3, max_value=5.0),
    st.sampled_from([0.5, 1.0, 2.0, 3.0, 10.0]),
)
def test_stationarity_residuals(alpha, log_gap, p):
    beta = math.exp(p * alpha + log_gap)
    tilt = stationary_point(alpha, beta, p)
    assert tilt.in_domain(p)
    ra, rb = eq_residuals(alpha, beta, tilt, p)
    assert ra <= 1e-9 and rb <= 1e-9 * max(1.0, beta)


@pytest.mark.parametrize("p", [1, 2])
def test_legendre_star_zero_at_mean(p):
    assert legendre_star(m_p(p), 1.0, p) == pytest.approx(0.0, abs=1e-14)


def test_legendre_star_infeasible_is_infinite():
    assert legendre_star(0.0, 0.9, 1) == math.inf
    assert legendre_star(0.0, -1.0, 1) == math.inf


def test_legendre_star_oracle_values():
    # oracle recorded at bring-up: (log 0.3, 1), p = 2
    assert legendre_star_oracle(math.log(0.3), 1.0, 2) == pytest.approx(0.1441900915477745, abs=1e-9)
    assert legendre_star_oracle(m_p(2), 1.0, 2) == pytest.approx(0.0, abs=1e-4)
    assert legendre_star_oracle(math.log(0.561), 1.0, 1) == pytest.approx(0.0, abs=1e-3)
    with pytest.raises(DomainError):
        legendre_star_oracle(0.0, 0.5, 1)


def test_legendre_star_matches_oracle_off_the_beta_one_line():
    for alpha, beta, p in [(math.log(0.4), 1.0, 2), (-1.0, 0.7, 1), (-0.2, 2.0, 2), (-0.8, 0.5, 3)]:
        assert legendre_star(alpha, beta, p) == pytest.approx(
            legendre_star_oracle(alpha, beta, p), abs=1e-4
        )


def test_g_p():
    for p in (1, 2, 10):
        assert g_p(math.exp(m_p(p)), p) == pytest.approx(1 / p, rel=1e-12)
    assert g_p(0.999999, 2) > 1e3
    assert g_p(1e-9, 2) < 0.1
    for bad in (0.0, 1.0, -0.3, 1.2):
        with pytest.raises(DomainError):
            g_p(bad, 2)


def test_g_p_increasing():
    thetas = np.linspace(0.01, 0.99, 99)
    g = [g_p(th, 2) for th in thetas]
    assert all(a < b for a, b in zip(g, g[1:]))


@pytest.mark.parametrize("p", [1, 1.5, 2, 4, 10])
def test_rate_zero_at_concentration_point(p):
    assert abs(rate_j(math.exp(m_p(p)), p)) <= 1e-10


def test_rate_infinite_outside_unit_interval():
    for theta in (1.5, -0.2, 0.0, 1.0):
        assert rate_j(theta, 2) == math.inf


def test_rate_matches_oracle_at_03():
    assert rate_j(0.3, 2) == pytest.approx(legendre_star_oracle(math.log(0.3), 1.0, 2), abs=1e-4)


def test_rate_is_inf_over_beta_of_legendre_star():
    # The constrained infimum over beta of Lambda*(log theta + log(beta)/p, beta) sits at beta = 1.
    theta, p = 0.45, 2
    betas = np.geomspace(0.2, 5.0, 101)
    vals = [legendre_star(math.log(theta) + math.log(b) / p, b, p) for b in betas]
    assert min(vals) >= rate_j(theta, p) - 1e-12
    assert betas[int(np.argmin(vals))] == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("p", [1, 2, 10])
def test_rate_non_negative(p):
    for theta in np.linspace(0.0, 1.0, 1002)[1:-1]:
        assert rate_j(theta, p) >= -1e-12


@pytest.mark.parametrize("p", [1, 2, 10])
def test_rate_unimodal_on_grid(p):
    j = np.array([pt.j_value for pt in rate_curve(p, 0.05, 0.95, 200)])
    k = int(np.argmin(j))
    assert np.all(np.diff(j[: k + 1]) < 0)
    assert np.all(np.diff(j[k:]) > 0)


def test_rate_curve_p2():
    pts = rate_curve(2, 0.05, 0.95, 19)
    assert len(pts) == 19
    assert all(pt.j_value >= 0 for pt in pts)
    thetas = np.array([pt.theta for pt in pts])
    best = thetas[np.argmin([pt.j_value for pt in pts])]
    assert best == thetas[np.argmin(np.abs(thetas - math.exp(m_p(2))))]
    for pt in pts:
        assert pt.s_star == pytest.approx(2 * pt.g_value - 1)
        assert pt.t_star == pytest.approx(0.5 - pt.g_value)
        assert pt.g_value == pytest.approx(specfun.h_inverse(2 * math.log(pt.theta)))


def test_rate_curve_p1_shape():
    j = [pt.j_value for pt in rate_curve(1, 0.3, 0.8, 6)]
    # grid 0.3, 0.4, 0.5, 0.6, 0.7, 0.8 straddles the zero at 0.5615
    assert j[0] > j[1] > j[2]
    assert j[3] < j[4] < j[5]


def test_rate_curve_two_points_are_the_endpoints():
    pts = rate_curve(2, 0.1, 0.9, 2)
    assert [pt.theta for pt in pts] == [0.1, 0.9]


@pytest.mark.parametrize("args", [(0.0, 0.5, 5), (0.5, 0.4, 5), (0.1, 1.0, 5), (0.1, 0.9, 1)])
def test_rate_curve_bad_range(args):
    with pytest.raises(DomainError):
        rate_curve(2, *args)


def test_rate_endpoint_growth_is_monotone():
    for p in (1, 2, 10):
        upper = [rate_j(1 - 10.0**-k, p) for k in range(2, 9)]
        lower = [rate_j(10.0**-k, p) for k in range(2, 9)]
        assert all(a < b for a, b in zip(upper, upper[1:]))
        assert all(a < b for a, b in zip(lower, lower[1:]))
        assert lower[-1] > 10
