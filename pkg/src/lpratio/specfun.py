"""Log-gamma, digamma, trigamma and H(x) = digamma(x) - log(x) with its inverse.

All functions take and return Python floats. Small arguments are shifted
above ``_ASYMPTOTIC_MIN`` with the standard recurrences, then evaluated with
the Bernoulli-number asymptotic series.
"""

import math

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243
HALF_LOG_2PI = 0.91893853320467274178032973640561764

_ASYMPTOTIC_MIN = 10.0

# B_2, B_4, ..., B_18
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
)


def _check_positive(x, name="x"):
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"{name} must be a finite positive real, got {x!r}")
    return x


def _shift(x):
    """Number of unit steps needed to lift x to the asymptotic region."""
    if x >= _ASYMPTOTIC_MIN:
        return 0
    return int(math.ceil(_ASYMPTOTIC_MIN - x))


def _stirling_series(x):
    # sum_k B_2k / (2k (2k-1) x^(2k-1))
    inv = 1.0 / x
    inv2 = inv * inv
    term = inv
    total = 0.0
    for k, b in enumerate(_BERNOULLI, start=1):
        total += b / (2 * k * (2 * k - 1)) * term
        term *= inv2
    return total


def _h_asymptotic(x):
    # -1/(2x) - sum_k B_2k / (2k x^2k)
    inv2 = 1.0 / (x * x)
    term = inv2
    total = -0.5 / x
    for k, b in enumerate(_BERNOULLI, start=1):
        total -= b / (2 * k) * term
        term *= inv2
    return total


def _h_prime_asymptotic(x):
    # trigamma(x) - 1/x = 1/(2x^2) + sum_k B_2k / x^(2k+1)
    inv = 1.0 / x
    inv2 = inv * inv
    term = inv2 * inv
    total = 0.5 * inv2
    for b in _BERNOULLI:
        total += b * term
        term *= inv2
    return total


def stirling_remainder(x):
    """log Gamma(x) - [(x - 1/2) log x - x + log(2 pi)/2].

    Computed from the series for large x, so it stays accurate where
    log Gamma itself is huge and the difference is tiny.
    """
    x = _check_positive(x)
    if x >= _ASYMPTOTIC_MIN:
        return _stirling_series(x)
    return log_gamma(x) - ((x - 0.5) * math.log(x) - x + HALF_LOG_2PI)


def log_gamma(x):
    """Natural log of the gamma function for x > 0."""
    x = _check_positive(x)
    n = _shift(x)
    if n == 0:
        return (x - 0.5) * math.log(x) - x + HALF_LOG_2PI + _stirling_series(x)
    prod = 1.0
    for j in range(n):
        prod *= x + j
    return log_gamma(x + n) - math.log(prod)


def digamma(x):
    """psi(x) = d/dx log Gamma(x) for x > 0."""
    x = _check_positive(x)
    n = _shift(x)
    acc = 0.0
    for j in range(n):
        acc += 1.0 / (x + j)
    y = x + n
    return math.log(y) + _h_asymptotic(y) - acc


def trigamma(x):
    """psi'(x) for x > 0."""
    x = _check_positive(x)
    n = _shift(x)
    acc = 0.0
    for j in range(n):
        acc += 1.0 / ((x + j) * (x + j))
    y = x + n
    return 1.0 / y + _h_prime_asymptotic(y) + acc


def h_func(x):
    """H(x) = psi(x) - log(x), negative and strictly increasing on (0, inf).

    Evaluated without forming psi(x) and log(x) separately, which would
    cancel catastrophically for large x where H(x) ~ -1/(2x).
    """
    x = _check_positive(x)
    n = _shift(x)
    if n == 0:
        return _h_asymptotic(x)
    acc = 0.0
    for j in range(n):
        acc += 1.0 / (x + j)
    return _h_asymptotic(x + n) + math.log1p(n / x) - acc


def h_prime(x):
    """Derivative of H: psi'(x) - 1/x (positive)."""
    x = _check_positive(x)
    n = _shift(x)
    if n == 0:
        return _h_prime_asymptotic(x)
    acc = 0.0
    for j in range(n):
        acc += 1.0 / ((x + j) * (x + j))
    # psi'(x) - 1/x = H'(x+n) + 1/(x+n) + acc - 1/x
    return _h_prime_asymptotic(x + n) + acc - n / (x * (x + n))


def h_inverse(y, max_iter=200):
    """Solve H(x) = y for x > 0, given y < 0.

    The root is bracketed by doubling/halving from x = 1, then refined by
    Newton steps that fall back to bisection whenever they leave the bracket.
    """
    y = float(y)
    if not y < 0.0 or math.isinf(y):
        raise DomainError(f"h_inverse needs a finite negative argument, got {y!r}")

    lo = hi = 1.0
    if h_func(1.0) < y:
        while h_func(hi) < y:
            lo, hi = hi, hi * 2.0
    else:
        while h_func(lo) > y:
            lo, hi = lo * 0.5, lo

    x = math.sqrt(lo * hi)
    for _ in range(max_iter):
        f = h_func(x) - y
        if f == 0.0:
            return x
        if f < 0.0:
            lo = x
        else:
            hi = x
        step = f / h_prime(x)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4.0 * math.ulp(x) or hi - lo <= 4.0 * math.ulp(hi):
            return x_new
        x = x_new
    return x
