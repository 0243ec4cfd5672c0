import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lpratio import specfun
from lpratio.errors import DomainError

mpmath.mp.dps = 40

# Frozen from mpmath series oracles (Euler product / 1/k - 1/(k+x-1) sums) at 40 digits.
LOG_GAMMA_HALF = 0.5723649429247000870717136756765293558236
DIGAMMA_HALF = -1.963510026021423479440976332998755567193
H_HALF = -1.270362845461478170023744211540578999118


def psi_series(x):
    x = mpmath.mpf(x)
    return -mpmath.euler + mpmath.nsum(lambda k: 1 / k - 1 / (k + x - 1), [1, mpmath.inf])


def log_gamma_series(x):
    x = mpmath.mpf(x)
    return -mpmath.euler * x - mpmath.log(x) + mpmath.nsum(
        lambda k: x / k - mpmath.log(1 + x / k), [1, mpmath.inf]
    )


def test_oracles_reproduce_frozen_values():
    assert float(log_gamma_series(0.5)) == pytest.approx(LOG_GAMMA_HALF, rel=1e-15)
    assert float(psi_series(0.5)) == pytest.approx(DIGAMMA_HALF, rel=1e-15)
    # duplication formula: psi(1/2) = -gamma - 2 log 2
    assert float(psi_series(0.5)) == pytest.approx(-specfun.EULER_GAMMA - 2 * math.log(2), rel=1e-15)


def test_euler_gamma_constant():
    assert specfun.EULER_GAMMA == pytest.approx(float(mpmath.euler), rel=1e-16)


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, 0.0), (5.0, math.log(24.0)), (0.5, LOG_GAMMA_HALF), (2.0, 0.0)],
)
def test_log_gamma_examples(x, expected):
    assert specfun.log_gamma(x) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize(
    "x, expected",
    [
        (1.0, -specfun.EULER_GAMMA),
        (2.0, 1.0 - specfun.EULER_GAMMA),
        (0.5, DIGAMMA_HALF),
    ],
)
def test_digamma_examples(x, expected):
    assert specfun.digamma(x) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, math.pi**2 / 6), (0.5, math.pi**2 / 2), (2.0, math.pi**2 / 6 - 1)],
)
def test_trigamma_examples(x, expected):
    assert specfun.trigamma(x) == pytest.approx(expected, rel=1e-10)


def test_accuracy_against_mpmath_on_log_grid():
    xs = np.geomspace(1e-3, 1e6, 400)
    for x in map(float, xs):
        lg = float(mpmath.loggamma(x))
        assert abs(specfun.log_gamma(x) - lg) <= 1e-12 * max(1.0, abs(lg)), x
        tg = float(mpmath.psi(1, x))
        assert abs(specfun.trigamma(x) - tg) <= 1e-10 * tg, x
        dg = float(mpmath.digamma(x))
        # relative error, floored near the root of psi at 1.4616...
        assert abs(specfun.digamma(x) - dg) <= 1e-11 * max(abs(dg), 1e-3), x


def test_h_func_examples():
    assert specfun.h_func(1.0) == pytest.approx(-specfun.EULER_GAMMA, rel=1e-14)
    assert specfun.h_func(0.5) == pytest.approx(H_HALF, rel=1e-14)
    assert -1e-6 < specfun.h_func(1e6) < 0.0


def test_h_func_matches_definition():
    for x in (1e-4, 0.3, 1.7, 9.99, 10.0, 123.0):
        assert specfun.h_func(x) == pytest.approx(specfun.digamma(x) - math.log(x), rel=1e-12, abs=1e-15)


def test_h_func_large_argument_has_no_cancellation():
    for x in (1e3, 1e6, 1e9):
        exact = float(mpmath.digamma(x) - mpmath.log(x))
        assert specfun.h_func(x) == pytest.approx(exact, rel=1e-13)


def test_h_prime_matches_finite_difference():
    for x in (0.01, 0.7, 3.0, 50.0):
        step = 1e-6 * x
        fd = (specfun.h_func(x + step) - specfun.h_func(x - step)) / (2 * step)
        assert specfun.h_prime(x) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("x", [1e-4, 0.37, 1.0, 42.0, 1e5])
def test_h_inverse_round_trip_examples(x):
    assert specfun.h_inverse(specfun.h_func(x)) == pytest.approx(x, rel=1e-12)


def test_h_inverse_of_minus_gamma_is_one():
    assert specfun.h_inverse(-specfun.EULER_GAMMA) == pytest.approx(1.0, rel=1e-13)


def test_h_inverse_residual():
    for y in (-1e3, -5.0, -0.3, -1e-3, -1e-9):
        x = specfun.h_inverse(y)
        assert abs(specfun.h_func(x) - y) <= 1e-12


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_domain_errors(bad):
    for fn in (specfun.log_gamma, specfun.digamma, specfun.trigamma, specfun.h_func):
        with pytest.raises(DomainError):
            fn(bad)


@pytest.mark.parametrize("bad", [0.0, 1.0, math.nan])
def test_h_inverse_domain(bad):
    with pytest.raises(DomainError):
        specfun.h_inverse(bad)


positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


@given(positive, positive)
def test_h_func_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    # strictness is only resolvable in double precision above ~1 ulp of H
    assume(hi > lo * (1 + 1e-9))
    assert specfun.h_func(lo) < specfun.h_func(hi)


@given(positive)
def test_h_func_negative(x):
    assert specfun.h_func(x) < 0.0


@settings(max_examples=300)
@given(positive)
def test_h_round_trip_property(x):
    assert abs(specfun.h_inverse(specfun.h_func(x)) - x) <= 1e-9 * max(1.0, x)


@given(st.floats(min_value=1e-3, max_value=100.0))
def test_recurrences(x):
    # Relative to the largest term: forming psi(x) + 1/x in floating point
    # already costs an ulp of psi(x), which dwarfs psi(x+1) for tiny x.
    d0, d1 = specfun.digamma(x), specfun.digamma(x + 1)
    assert abs(d1 - (d0 + 1 / x)) <= 1e-11 * max(abs(d0), abs(d1), 1 / x)
    t0, t1 = specfun.trigamma(x), specfun.trigamma(x + 1)
    assert abs(t1 - (t0 - 1 / x**2)) <= 1e-11 * t0
