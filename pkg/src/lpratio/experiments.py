"""Seeded Monte Carlo experiments for the CLT and LDP of the ratio statistic.

Replication ``r`` always draws from ``RngState(seed, r)``, so every result
is a deterministic function of its arguments whatever ``workers`` is.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import ratefn
from .errors import DomainError, UnsupportedError
from .ratefn import as_p
from .sampler import (
    RngState,
    sample_ball,
    sample_cone,
    sample_log_abs_pgauss,
    sample_log_abs_tilted,
)

MEASURES = ("ball", "cone", "surface")
SIDES = ("upper", "lower")
SURFACE_MIN_REPS = 10_000
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass
class RatioStat:
    log_gm: float
    log_pm: float
    ratio: float


@dataclass
class ProbRow:
    a: float
    empirical_prob: float
    limit_prob: float
    abs_diff: float
    stderr: float


@dataclass
class CltResult:
    p: float
    n: int
    reps: int
    measure: str
    seed: int
    mean: float
    sd: float
    quantiles: dict
    ks_distance: float
    half_prob: float
    rows: list = field(default_factory=list)


@dataclass
class LdpResult:
    p: float
    n: int
    theta: float
    side: str
    estimator: str
    reps: int
    seed: int
    prob: float
    prob_stderr: float
    log_prob_per_n: float
    std_error: float
    j_reference: float
    rel_stderr: float
    count: int
    feasible: bool = True
    zero_count: bool = False

    @property
    def minus_log_prob_per_n(self):
        return -self.log_prob_per_n

    @property
    def rel_err(self):
        if self.j_reference == 0.0 or not math.isfinite(self.log_prob_per_n):
            return math.nan
        return abs(-self.log_prob_per_n - self.j_reference) / self.j_reference


@dataclass
class GapRow:
    n: int
    cone_prob: float
    surface_prob: float
    diff: float
    diff_stderr: float


def _log_ratio(log_abs, p):
    """log of geometric mean over p-generalized mean, row-wise; -inf on zero coordinates."""
    log_abs = np.atleast_2d(log_abs)
    n = log_abs.shape[1]
    log_gm = log_abs.mean(axis=1)
    top = log_abs.max(axis=1, keepdims=True)
    log_pm = (top[:, 0] + np.log(np.exp(p * (log_abs - top)).sum(axis=1) / n) / p)
    return log_gm, log_pm


def gm_ratio(coords, p):
    """Geometric mean of |x_i| divided by (mean |x_i|^p)^(1/p), computed in log space."""
    p = as_p(p)
    x = np.abs(np.asarray(coords, dtype=float)).ravel()
    if x.size == 0 or not x.any():
        raise DomainError("gm_ratio needs at least one nonzero coordinate")
    with np.errstate(divide="ignore"):
        log_abs = np.log(x)
    log_gm, log_pm = _log_ratio(log_abs, p)
    log_gm, log_pm = float(log_gm[0]), float(log_pm[0])
    ratio = 0.0 if log_gm == -math.inf else math.exp(log_gm - log_pm)
    return RatioStat(log_gm=log_gm, log_pm=log_pm, ratio=ratio)


def _run_reps(draw, reps, workers):
    """Evaluate draw(r) for r in range(reps), in order, across ``workers`` threads."""
    if workers is None or workers <= 1:
        return [draw(r) for r in range(reps)]
    chunk = -(-reps // workers)
    bounds = [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda b: [draw(r) for r in range(*b)], bounds)
    return [x for part in parts for x in part]


def _normal_cdf(x):
    return special.ndtr(x)


def weighted_ks_distance(samples, cdf, weights=None):
    """sup_x |F_w(x) - cdf(x)| for the (optionally weighted) empirical CDF F_w."""
    samples = np.asarray(samples, dtype=float)
    order = np.argsort(samples, kind="stable")
    xs = samples[order]
    if weights is None:
        w = np.full(xs.size, 1.0 / xs.size)
    else:
        w = np.asarray(weights, dtype=float)[order]
        w = w / w.sum()
    upper = np.cumsum(w)
    lower = upper - w
    f = cdf(xs)
    return float(max(np.max(upper - f), np.max(f - lower)))


def _weighted_prob(indicator, weights):
    """Self-normalized probability estimate and its delta-method standard error."""
    indicator = np.asarray(indicator, dtype=float)
    reps = indicator.size
    if weights is None:
        prob = indicator.mean()
        return float(prob), float(math.sqrt(prob * (1.0 - prob) / reps))
    w = np.asarray(weights, dtype=float)
    w = w / w.mean()
    prob = float(np.sum(w * indicator) / reps)
    se = math.sqrt(float(np.sum((w * (indicator - prob)) ** 2))) / reps
    return prob, se


def _check_clt_args(p, n, reps, measure, n_min=100):
    p = as_p(p)
    if measure not in MEASURES:
        raise DomainError(f"measure must be one of {MEASURES}, got {measure!r}")
    if int(n) != n or n < n_min:
        raise DomainError(f"n must be an integer >= {n_min}, got {n!r}")
    if int(reps) != reps or reps < 100:
        raise DomainError(f"reps must be an integer >= 100, got {reps!r}")
    if measure == "surface":
        if p < 1.0:
            raise UnsupportedError(f"surface measure requires p >= 1, got p={p}")
        if reps < SURFACE_MIN_REPS:
            raise DomainError(f"surface experiments need reps >= {SURFACE_MIN_REPS}, got {reps}")
    return p, int(n), int(reps)


def _summarize(p, n, reps, measure, seed, normalized, weights, a_grid):
    sigma = ratefn.clt_sigma(p)
    rows = []
    for a in a_grid:
        prob, se = _weighted_prob(normalized >= a, weights)
        limit = float(1.0 - _normal_cdf(a / sigma))
        rows.append(ProbRow(float(a), prob, limit, abs(prob - limit), se))
    half, _ = _weighted_prob(normalized <= 0.0, weights)
    if weights is None:
        mean, sd = float(normalized.mean()), float(normalized.std(ddof=1))
    else:
        w = weights / weights.sum()
        mean = float(np.sum(w * normalized))
        sd = float(math.sqrt(np.sum(w * (normalized - mean) ** 2)))
    quantiles = {str(q): float(v) for q, v in zip(QUANTILES, np.quantile(normalized, QUANTILES))}
    ks = weighted_ks_distance(normalized, lambda x: _normal_cdf(x / sigma), weights)
    return CltResult(p, n, reps, measure, int(seed), mean, sd, quantiles, ks, half, rows)


def clt_experiment(p, n, reps, measure="cone", a_grid=(0.0,), seed=0, workers=1):
    """Compare P(R_n >= e^{m_p}(1 + a/sqrt(n))) with its normal limit for each a.

    ``measure`` picks the law of the point: uniform in the ball, cone
    measure, or surface measure (cone draws reweighted by the surface
    density, self-normalized).
    """
    p, n, reps = _check_clt_args(p, n, reps, measure)

    def draw(r):
        rng = RngState(seed, r)
        if measure == "ball":
            x, w = sample_ball(n, p, rng).coords, 1.0
        else:
            smp = sample_cone(n, p, rng)
            x, w = smp.coords, smp.weight
        return gm_ratio(x, p).ratio, w

    out = _run_reps(draw, reps, workers)
    ratios = np.array([r for r, _ in out])
    weights = np.array([w for _, w in out]) if measure == "surface" else None
    normalized = math.sqrt(n) * (math.exp(-ratefn.m_p(p)) * ratios - 1.0)
    return _summarize(p, n, reps, measure, seed, normalized, weights, a_grid)


def clt_ratio_samples(p, n, reps, measure="cone", seed=0, workers=1):
    """Raw R_n draws (and surface weights) behind clt_experiment, for diagnostics."""
    p, n, reps = _check_clt_args(p, n, reps, measure, n_min=1)

    def draw(r):
        rng = RngState(seed, r)
        if measure == "ball":
            return gm_ratio(sample_ball(n, p, rng).coords, p).ratio, 1.0
        smp = sample_cone(n, p, rng)
        return gm_ratio(smp.coords, p).ratio, smp.weight

    out = _run_reps(draw, reps, workers)
    return np.array([r for r, _ in out]), np.array([w for _, w in out])


def reduced_form_experiment(p, n, reps, a_grid=(0.0,), seed=0, workers=1):
    """Geometric mean of a uniform ball point against e^{m_p}(1 + a/sqrt(n)) n^(-1/p).

    The reported statistic is sqrt(n) (e^{-m_p} n^{1/p} GM - 1), whose limit
    law matches the one in clt_experiment. n = 1 is allowed.
    """
    p, n, reps = _check_clt_args(p, n, reps, "ball", n_min=1)

    def draw(r):
        x = np.abs(sample_ball(n, p, RngState(seed, r)).coords)
        with np.errstate(divide="ignore"):
            return float(np.mean(np.log(x)))

    log_gm = np.array(_run_reps(draw, reps, workers))
    scaled = np.exp(log_gm - ratefn.m_p(p) + math.log(n) / p)
    normalized = math.sqrt(n) * (scaled - 1.0)
    return _summarize(p, n, reps, "ball-reduced", seed, normalized, None, a_grid)


def _check_ldp_args(p, theta, n, reps, side):
    p = as_p(p)
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    if side not in SIDES:
        raise DomainError(f"side must be one of {SIDES}, got {side!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if int(reps) != reps or reps < 1:
        raise DomainError(f"reps must be a positive integer, got {reps!r}")
    center = math.exp(ratefn.m_p(p))
    if (side == "upper" and theta < center * (1 - 1e-12)) or (
        side == "lower" and theta > center * (1 + 1e-12)
    ):
        raise DomainError(
            f"side={side!r} is inconsistent with theta={theta} (concentration point {center:.6g})"
        )
    return p, theta, int(n), int(reps)


def _event(log_ratio, theta, side):
    if side == "upper":
        return log_ratio >= math.log(theta)
    return log_ratio <= math.log(theta)


def default_side(theta, p):
    return "upper" if theta >= math.exp(ratefn.m_p(p)) else "lower"


def ldp_naive(p, theta, n, reps, side=None, seed=0, workers=1):
    """Crude Monte Carlo estimate of (1/n) log P[R_n >= theta] (upper) or <= theta (lower)."""
    side = side or default_side(theta, p)
    p, theta, n, reps = _check_ldp_args(p, theta, n, reps, side)
    j_ref = ratefn.rate_j(theta, p)
    feasible = reps * math.exp(-n * j_ref) >= 50
    if not feasible:
        warnings.warn(
            f"naive LDP estimate is likely unresolved: reps*exp(-n*J)={reps * math.exp(-n * j_ref):.3g} < 50",
            RuntimeWarning,
            stacklevel=2,
        )

    def draw(r):
        log_abs = sample_log_abs_pgauss(p, n, RngState(seed, r))
        log_gm, log_pm = _log_ratio(log_abs, p)
        return bool(_event(log_gm - log_pm, theta, side)[0])

    hits = np.array(_run_reps(draw, reps, workers))
    count = int(hits.sum())
    prob = count / reps
    prob_se = math.sqrt(prob * (1.0 - prob) / reps)
    if count == 0:
        log_prob, se, rel = -math.inf, math.nan, math.nan
    else:
        rel = prob_se / prob
        log_prob, se = math.log(prob) / n, rel / n
    return LdpResult(
        p, n, theta, side, "naive", reps, int(seed), prob, prob_se, log_prob, se, j_ref, rel,
        count, feasible=feasible, zero_count=count == 0,
    )


def optimal_tilt(theta, p):
    """Dominating-point tilt (s*, t*) = (p G_p(theta) - 1, 1/p - G_p(theta))."""
    pt = ratefn.rate_point(theta, p)
    return ratefn.TiltParams(pt.s_star, pt.t_star)


def ldp_tilted(p, theta, n, reps, side=None, seed=0, workers=1, tilt=None):
    """Importance-sampled estimate of (1/n) log P[R_n >= theta] or <= theta.

    Coordinates are drawn from the exponentially tilted law at the optimal
    tilt (or ``tilt`` if given); each replication carries the exact
    likelihood ratio back to the untilted law.
    """
    side = side or default_side(theta, p)
    p, theta, n, reps = _check_ldp_args(p, theta, n, reps, side)
    if tilt is None:
        tilt = optimal_tilt(theta, p)
    if not tilt.in_domain(p):
        raise DomainError(f"tilt {tilt} is outside the cumulant domain for p={p}")
    j_ref = ratefn.rate_j(theta, p)

    def draw(r):
        log_abs, log_w = sample_log_abs_tilted(tilt.s, tilt.t, p, n, RngState(seed, r))
        log_gm, log_pm = _log_ratio(log_abs, p)
        hit = bool(_event(log_gm - log_pm, theta, side)[0])
        return hit, float(log_w.sum())

    out = _run_reps(draw, reps, workers)
    hits = np.array([h for h, _ in out])
    log_w = np.array([lw for _, lw in out])
    count = int(hits.sum())
    if count == 0:
        return LdpResult(
            p, n, theta, side, "tilted", reps, int(seed), 0.0, 0.0, -math.inf, math.nan, j_ref,
            math.nan, 0, zero_count=True,
        )
    # Scale by the largest contributing weight before exponentiating.
    top = log_w[hits].max()
    contrib = np.where(hits, np.exp(log_w - top), 0.0)
    mean = contrib.mean()
    rel = float(contrib.std(ddof=1) / math.sqrt(reps) / mean) if reps > 1 else math.nan
    log_prob = (math.log(mean) + top) / n
    prob = math.exp(n * log_prob)
    return LdpResult(
        p, n, theta, side, "tilted", reps, int(seed), prob, prob * rel, log_prob, rel / n, j_ref,
        rel, count,
    )


def surface_vs_cone(p, n_list, reps, a=0.0, seed=0, workers=1):
    """Paired cone and surface estimates of P(R_n >= e^{m_p}(1 + a/sqrt(n))) per n.

    Both estimates use the same cone draws; the surface one reweights them by
    the surface density, so the gap isolates the change of measure.
    """
    p = as_p(p)
    if p < 1.0:
        raise UnsupportedError(f"surface measure requires p >= 1, got p={p}")
    if int(reps) != reps or reps < SURFACE_MIN_REPS:
        raise DomainError(f"surface experiments need reps >= {SURFACE_MIN_REPS}, got {reps}")
    reps = int(reps)
    rows = []
    for n in n_list:
        ratios, weights = clt_ratio_samples(p, int(n), reps, "surface", seed, workers)
        threshold = math.exp(ratefn.m_p(p)) * (1.0 + a / math.sqrt(n))
        hit = (ratios >= threshold).astype(float)
        cone = float(hit.mean())
        w = weights / weights.mean()
        surface = float(np.mean(w * hit))
        # influence terms of the paired difference
        d = w * (hit - surface) - (hit - cone)
        rows.append(GapRow(int(n), cone, surface, surface - cone, float(d.std(ddof=1) / math.sqrt(reps))))
    return rows
