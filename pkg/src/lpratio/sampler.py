"""Seeded samplers: p-generalized Gaussians, l_p sphere/ball points, tilted variables.

Every draw goes through an :class:`RngState`, a Philox counter-based stream
keyed by ``(seed, stream_id)``. Experiments give each replication its own
``stream_id`` so results do not depend on how replications are scheduled.

Gamma variates are produced in log space, so that |Z| = (p G)^(1/p) stays
representable for large p where G itself underflows.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedError
from .ratefn import as_p, cumulant, in_cumulant_domain

_MASK64 = (1 << 64) - 1


@dataclass
class RngState:
    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        key = np.array([int(self.seed) & _MASK64, int(self.stream_id) & _MASK64], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))


@dataclass
class SphereSample:
    coords: np.ndarray
    weight: float  # nan when p < 1
    norm_check: float


@dataclass
class BallSample:
    coords: np.ndarray


def log_gamma_variates(shape, size, rng):
    """log of ``size`` unit-scale Gamma(shape) variates (Marsaglia-Tsang with squeeze).

    For shape < 1 the variate is drawn at shape + 1 and multiplied by
    U^(1/shape), done here as an additive log U / shape.
    """
    shape = float(shape)
    if not shape > 0.0:
        raise DomainError(f"gamma shape must be positive, got {shape!r}")
    gen = rng.generator
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)

    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = need + need // 16 + 8
        x = gen.standard_normal(batch)
        u = 1.0 - gen.random(batch)  # (0, 1], so log(u) is finite
        v = 1.0 + c * x
        positive = v > 0.0
        log_v = np.log(np.where(positive, v, 1.0))
        v3 = v * v * v
        x2 = x * x
        squeeze = u < 1.0 - 0.0331 * x2 * x2
        full = np.log(u) < 0.5 * x2 + d * (1.0 - v3 + 3.0 * log_v)
        accept = positive & (squeeze | full)
        got = (math.log(d) + 3.0 * log_v[accept])[:need]
        out[filled : filled + got.size] = got
        filled += got.size
    if boost:
        out += np.log1p(-gen.random(size)) / shape
    return out


def _random_signs(size, rng):
    return np.where(rng.generator.random(size) < 0.5, -1.0, 1.0)


def sample_log_abs_pgauss(p, size, rng):
    """log|Z| for ``size`` i.i.d. p-generalized Gaussians, using |Z|^p / p ~ Gamma(1/p)."""
    p = as_p(p)
    return (math.log(p) + log_gamma_variates(1.0 / p, size, rng)) / p


def sample_pgauss(p, rng, size=None):
    """Draw from the density exp(-|x|^p / p) / (2 p^(1/p) Gamma(1 + 1/p))."""
    n = 1 if size is None else size
    log_abs = sample_log_abs_pgauss(p, n, rng)
    values = _random_signs(n, rng) * np.exp(log_abs)
    return float(values[0]) if size is None else values


def lp_norm(x, p):
    p = as_p(p)
    ax = np.abs(np.asarray(x, dtype=float))
    scale = ax.max()
    if scale == 0.0:
        return 0.0
    return float(scale * np.sum((ax / scale) ** p) ** (1.0 / p))


def surface_weight(coords, p):
    """Unnormalized density (sum |x_i|^(2p-2))^(1/2) of surface w.r.t. cone measure."""
    p = as_p(p)
    if p < 1.0:
        raise UnsupportedError(f"surface measure density is only supported for p >= 1, got p={p}")
    x = np.abs(np.asarray(coords, dtype=float))
    if abs(lp_norm(x, p) - 1.0) > 1e-9:
        raise DomainError("coords must lie on the unit l_p sphere")
    if p == 1.0:
        return math.sqrt(x.size)
    return math.sqrt(float(np.sum(x ** (2.0 * p - 2.0))))


def _cone_coords(n, p, rng):
    while True:
        log_abs = sample_log_abs_pgauss(p, n, rng)
        signs = _random_signs(n, rng)
        if np.isfinite(log_abs).any():
            break
    top = log_abs.max()
    log_norm = top + math.log(np.sum(np.exp(p * (log_abs - top)))) / p
    return signs * np.exp(log_abs - log_norm)


def sample_cone(n, p, rng):
    """Z / ||Z||_p for n i.i.d. p-generalized Gaussians: a cone-measure point on the sphere."""
    p = as_p(p)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    coords = _cone_coords(int(n), p, rng)
    weight = surface_weight(coords, p) if p >= 1.0 else math.nan
    return SphereSample(coords=coords, weight=weight, norm_check=lp_norm(coords, p) - 1.0)


def sample_ball(n, p, rng):
    """U^(1/n) Z / ||Z||_p: a uniform point in the l_p unit ball."""
    p = as_p(p)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    coords = _cone_coords(int(n), p, rng)
    radius = (1.0 - rng.generator.random()) ** (1.0 / n)
    return BallSample(coords=radius * coords)


def sample_log_abs_tilted(s, t, p, size, rng):
    """log|X| and per-draw log weights under the density proportional to |x|^s exp(-(1/p - t)|x|^p).

    The log weights sum to the log Radon-Nikodym derivative back to the
    untilted p-generalized Gaussian law.
    """
    p = as_p(p)
    if not in_cumulant_domain(s, t, p):
        raise DomainError(f"tilt ({s}, {t}) is outside (-1, inf) x (-inf, 1/p) for p={p}")
    log_abs = (math.log(p) - math.log1p(-p * t) + log_gamma_variates((s + 1.0) / p, size, rng)) / p
    log_weight = cumulant(s, t, p) - (s * log_abs + t * np.exp(p * log_abs))
    return log_abs, log_weight


def sample_tilted(tilt, p, rng, size=None):
    """Exponentially tilted p-generalized Gaussian draw(s) and log weight increment(s)."""
    n = 1 if size is None else size
    log_abs, log_weight = sample_log_abs_tilted(tilt.s, tilt.t, p, n, rng)
    values = _random_signs(n, rng) * np.exp(log_abs)
    if size is None:
        return float(values[0]), float(log_weight[0])
    return values, log_weight
