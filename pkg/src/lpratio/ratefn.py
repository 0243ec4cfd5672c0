"""Analytic quantities for the geometric/p-generalized mean ratio.

Covers the concentration constant m_p, the CLT scale, the joint cumulant
generating function of (log|Z|, |Z|^p) for a p-generalized Gaussian Z, its
Legendre-Fenchel transform, and the large-deviations rate function J_p.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import specfun
from .errors import DomainError, InvariantError, NoStationaryPointError

INF = math.inf


@dataclass(frozen=True)
class PParam:
    """Exponent p > 0; ``restricted_mode`` marks 0 < p < 1 (no surface measure)."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not (p > 0.0 and math.isfinite(p)):
            raise DomainError(f"p must be a finite positive real, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def restricted_mode(self):
        return self.p < 1.0

    def __float__(self):
        return self.p


def as_p(p):
    """Validate p (float or PParam) and return it as a float."""
    if isinstance(p, PParam):
        return p.p
    return PParam(p).p


@dataclass(frozen=True)
class TiltParams:
    s: float
    t: float

    def in_domain(self, p):
        return in_cumulant_domain(self.s, self.t, p)


@dataclass(frozen=True)
class MeanPoint:
    alpha: float
    beta: float

    def feasible(self, p):
        return self.beta > 0 and self.beta > math.exp(as_p(p) * self.alpha)


@dataclass(frozen=True)
class RatePoint:
    theta: float
    j_value: float
    g_value: float
    s_star: float
    t_star: float


def m_p(p):
    """(psi(1/p) + log p) / p, the log of the concentration constant."""
    p = as_p(p)
    return (specfun.digamma(1.0 / p) + math.log(p)) / p


def clt_sigma(p):
    """Standard deviation sqrt(psi'(1/p) - p) / p of the normalized ratio's normal limit."""
    p = as_p(p)
    gap = specfun.trigamma(1.0 / p) - p
    if not gap > 0.0:
        raise InvariantError(f"trigamma(1/p) - p = {gap!r} is not positive for p={p}")
    return math.sqrt(gap) / p


def in_cumulant_domain(s, t, p):
    p = as_p(p)
    return s > -1.0 and t < 1.0 / p


def cumulant(s, t, p):
    """Lambda(s, t) = log E exp(s log|Z| + t |Z|^p); +inf off (-1, inf) x (-inf, 1/p)."""
    p = as_p(p)
    if not in_cumulant_domain(s, t, p):
        return INF
    log_one_minus = math.log1p(-p * t)
    return (
        -log_one_minus / p
        + s / p * (math.log(p) - log_one_minus)
        + specfun.log_gamma((s + 1.0) / p)
        - specfun.log_gamma(1.0 / p)
    )


def cumulant_grad(s, t, p):
    """Analytic (dLambda/ds, dLambda/dt) inside the domain."""
    p = as_p(p)
    if not in_cumulant_domain(s, t, p):
        raise DomainError(f"({s}, {t}) is outside the cumulant domain for p={p}")
    one_minus = 1.0 - p * t
    ds = (specfun.digamma((s + 1.0) / p) + math.log(p / one_minus)) / p
    dt = (s + 1.0) / one_minus
    return ds, dt


def cumulant_oracle(s, t, p):
    """Lambda(s, t) by adaptive quadrature of the defining integral."""
    p = as_p(p)
    if not in_cumulant_domain(s, t, p):
        raise DomainError(f"({s}, {t}) is outside the cumulant domain for p={p}")
    rate = 1.0 / p - t
    # Put the bulk of the mass near x = 1 by rescaling: x = scale * u.
    scale = rate ** (-1.0 / p)

    def integrand(u):
        return math.exp(s * math.log(u) - u**p)

    head, _ = integrate.quad(integrand, 0.0, 1.0, limit=200, epsabs=0.0, epsrel=1e-13)
    tail, _ = integrate.quad(integrand, 1.0, INF, limit=200, epsabs=0.0, epsrel=1e-13)
    log_integral = math.log(head + tail) + (s + 1.0) * math.log(scale)
    log_norm = math.log(p) / p + math.lgamma(1.0 + 1.0 / p)
    return log_integral - log_norm


def stationary_point(alpha, beta, p):
    """The tilt (s*, t*) at which grad Lambda equals (alpha, beta).

    Requires beta > exp(p * alpha); raises NoStationaryPointError otherwise.
    """
    p = as_p(p)
    if not (beta > 0.0 and beta > math.exp(p * alpha)):
        raise NoStationaryPointError(
            f"no stationary point: beta={beta!r} <= exp(p*alpha)={math.exp(p * alpha)!r}"
        )
    v = specfun.h_inverse(p * alpha - math.log(beta))
    s = p * v - 1.0
    t = 1.0 / p - (s + 1.0) / (beta * p)
    return TiltParams(s, t)


def legendre_star(alpha, beta, p):
    """Lambda*(alpha, beta) via the stationary point; +inf when beta <= exp(p*alpha)."""
    p = as_p(p)
    if not (beta > 0.0 and beta > math.exp(p * alpha)):
        return INF
    tilt = stationary_point(alpha, beta, p)
    return alpha * tilt.s + beta * tilt.t - cumulant(tilt.s, tilt.t, p)


def _cumulant_grid(s, t, p):
    # Vectorized over s and t arrays, scipy special functions only.
    log_one_minus = np.log1p(-p * t)
    return (
        -log_one_minus / p
        + s / p * (math.log(p) - log_one_minus)
        + special.gammaln((s + 1.0) / p)
        - special.gammaln(1.0 / p)
    )


def legendre_star_oracle(alpha, beta, p, size=200, rounds=2, s_max=50.0, t_min=-50.0, eps=1e-6):
    """Brute-force sup of alpha*s + beta*t - Lambda(s, t) over a refined grid.

    The coarse grid is log-spaced towards the domain boundary s = -1,
    t = 1/p. Each refinement round re-grids a window of +-1 coarse cell
    around the current argmax at 10x finer resolution; a window whose argmax
    lands on its edge is re-centred at the same resolution before refining.
    """
    p = as_p(p)
    if not (beta > 0.0 and beta > math.exp(p * alpha)):
        raise DomainError(f"infeasible target ({alpha}, {beta}) for p={p}")

    def objective(S, T):
        return alpha * S + beta * T - _cumulant_grid(S, T, p)

    s_axis = -1.0 + np.geomspace(eps, s_max + 1.0, size)
    t_axis = 1.0 / p - np.geomspace(eps, 1.0 / p - t_min, size)[::-1]
    S, T = np.meshgrid(s_axis, t_axis, indexing="ij")
    vals = objective(S, T)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    best = vals[i, j]
    s0, t0 = s_axis[i], t_axis[j]
    ds = max(s_axis[min(i + 1, size - 1)] - s_axis[i], s_axis[i] - s_axis[max(i - 1, 0)])
    dt = max(t_axis[min(j + 1, size - 1)] - t_axis[j], t_axis[j] - t_axis[max(j - 1, 0)])

    for _ in range(rounds):
        ds, dt = ds / 10.0, dt / 10.0
        for _recentre in range(1000):
            s_loc = s0 + ds * np.arange(-10, 11)
            t_loc = t0 + dt * np.arange(-10, 11)
            s_loc = s_loc[s_loc > -1.0]
            t_loc = t_loc[t_loc < 1.0 / p]
            S, T = np.meshgrid(s_loc, t_loc, indexing="ij")
            vals = objective(S, T)
            i, j = np.unravel_index(np.argmax(vals), vals.shape)
            best = max(best, vals[i, j])
            s0, t0 = s_loc[i], t_loc[j]
            on_edge = i in (0, len(s_loc) - 1) or j in (0, len(t_loc) - 1)
            if not on_edge:
                break
    return float(best)


def _check_theta(theta):
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    return theta


def g_p(theta, p):
    """G_p(theta) = H^{-1}(p log theta), increasing on (0, 1)."""
    p = as_p(p)
    theta = _check_theta(theta)
    return specfun.h_inverse(p * math.log(theta))


def _rate_from_g(theta, g, p):
    # g(log g - 1) - log Gamma(g) == log(g)/2 - log(2 pi)/2 - stirling_remainder(g);
    # the right side avoids cancelling two huge terms as theta -> 1.
    return (
        (p * g - 1.0) * math.log(theta)
        + 0.5 * math.log(g)
        - specfun.HALF_LOG_2PI
        - specfun.stirling_remainder(g)
        + 1.0 / p
        + math.log(p) / p
        + specfun.log_gamma(1.0 / p)
    )


def rate_j(theta, p):
    """Large-deviations rate J_p(theta) of the ratio; +inf outside (0, 1)."""
    p = as_p(p)
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        return INF
    g = g_p(theta, p)
    return _rate_from_g(theta, g, p)


def rate_point(theta, p):
    p = as_p(p)
    theta = _check_theta(theta)
    g = g_p(theta, p)
    return RatePoint(
        theta=theta,
        j_value=_rate_from_g(theta, g, p),
        g_value=g,
        s_star=p * g - 1.0,
        t_star=1.0 / p - g,
    )


def rate_curve(p, theta_min, theta_max, count):
    """J_p with G_p and the optimal tilt on a uniform theta grid (endpoints included)."""
    p = as_p(p)
    if not 0.0 < theta_min < theta_max < 1.0:
        raise DomainError(f"need 0 < theta_min < theta_max < 1, got ({theta_min}, {theta_max})")
    if int(count) != count or count < 2:
        raise DomainError(f"count must be an integer >= 2, got {count!r}")
    return [rate_point(float(th), p) for th in np.linspace(theta_min, theta_max, int(count))]
