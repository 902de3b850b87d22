"""
Generalised Pareto (GP) distribution for threshold excesses.

The two-parameter family is

    H(x; sigma, gamma) = 1 - (1 + gamma * x / sigma) ** (-1 / gamma),   x in S

with S = (0, inf) for gamma >= 0 and S = (0, -sigma / gamma) otherwise. The
gamma -> 0 member is the exponential law with mean sigma.

All public functions accept scalars or arrays for ``x`` / ``q``. The private
``_logpdf``, ``_cdf``, ... helpers additionally broadcast over ``sigma`` and
``gamma`` arrays, which is what the mixture densities of the predictive module
use to evaluate thousands of posterior draws at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

#: below this |gamma| the log1p/expm1 ratios switch to their series expansions
GAMMA_SWITCH = 1e-6
#: lower edge of the admissible shape region Theta = (0, inf) x (-1/2, inf)
GAMMA_MIN = -0.5

_SERIES_ARG = 1e-3


@dataclass(frozen=True)
class GpParams:
    """Scale/shape pair ``(sigma, gamma)`` of a GP law.

    Construction outside ``sigma > 0, gamma > -1/2`` raises ``ValueError``.
    """

    sigma: float
    gamma: float

    def __post_init__(self):
        sigma = float(self.sigma)
        gamma = float(self.gamma)
        if not (math.isfinite(sigma) and sigma > 0):
            raise ValueError(f"sigma must be finite and > 0, got {self.sigma!r}")
        if not (math.isfinite(gamma) and gamma > GAMMA_MIN):
            raise ValueError(f"gamma must be finite and > -1/2, got {self.gamma!r}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "gamma", gamma)

    @property
    def upper(self) -> float:
        """Right end-point of the support (``inf`` when gamma >= 0)."""
        return _upper(self.sigma, self.gamma)

    def support(self) -> "SupportInterval":
        return SupportInterval(0.0, self.upper)


class SupportInterval(NamedTuple):
    lower: float
    upper: float


def _upper(sigma, gamma):
    if gamma < 0:
        return -sigma / gamma
    return math.inf


# ---------------------------------------------------------------------------
# stable primitives


def _log1p_ratio(gamma, z):
    """log1p(gamma * z) / gamma, continuous through gamma = 0."""
    gamma, z = np.broadcast_arrays(np.asarray(gamma, dtype=float), np.asarray(z, dtype=float))
    a = gamma * z
    small = (np.abs(gamma) < GAMMA_SWITCH) & (np.abs(a) < _SERIES_ARG)
    safe = np.where(small, 1.0, gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log1p(safe * z) / safe
    series = z * (1.0 - a / 2.0 + a * a / 3.0 - a ** 3 / 4.0 + a ** 4 / 5.0)
    return np.where(small, series, direct)


def _expm1_ratio(gamma, y):
    """expm1(gamma * y) / gamma, continuous through gamma = 0."""
    gamma, y = np.broadcast_arrays(np.asarray(gamma, dtype=float), np.asarray(y, dtype=float))
    b = gamma * y
    small = (np.abs(gamma) < GAMMA_SWITCH) & (np.abs(b) < _SERIES_ARG)
    safe = np.where(small, 1.0, gamma)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.expm1(safe * y) / safe
    series = y * (1.0 + b / 2.0 + b * b / 6.0 + b ** 3 / 24.0 + b ** 4 / 120.0)
    return np.where(small, series, direct)


def _inside(x, sigma, gamma):
    """Mask of points in the closed-open support [0, upper)."""
    x, sigma, gamma = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(sigma, dtype=float), np.asarray(gamma, dtype=float)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        below_end = np.where(gamma < 0, 1.0 + gamma * x / sigma > 0, True)
    return (x >= 0) & below_end


def _logpdf(x, sigma, gamma):
    x, sigma, gamma = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(sigma, dtype=float), np.asarray(gamma, dtype=float)
    )
    ok = _inside(x, sigma, gamma)
    z = np.where(ok, x / sigma, 0.0)
    val = -np.log(sigma) - (1.0 + gamma) * _log1p_ratio(gamma, z)
    return np.where(ok, val, -np.inf)


def _pdf(x, sigma, gamma):
    return np.exp(_logpdf(x, sigma, gamma))


def _logsf(x, sigma, gamma):
    """log(1 - H); 0 below the support, -inf at or above the end-point."""
    x, sigma, gamma = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(sigma, dtype=float), np.asarray(gamma, dtype=float)
    )
    ok = _inside(x, sigma, gamma)
    z = np.where(ok, np.maximum(x, 0.0) / sigma, 0.0)
    val = -_log1p_ratio(gamma, z)
    return np.where(ok, val, np.where(x < 0, 0.0, -np.inf))


def _sf(x, sigma, gamma):
    return np.exp(_logsf(x, sigma, gamma))


def _cdf(x, sigma, gamma):
    return -np.expm1(_logsf(x, sigma, gamma))


def _ppf(q, sigma, gamma):
    q = np.asarray(q, dtype=float)
    ell = -np.log1p(-q)
    return np.asarray(sigma, dtype=float) * _expm1_ratio(gamma, ell)


def _as_output(arr, like):
    arr = np.asarray(arr, dtype=float)
    if np.ndim(like) == 0:
        return float(arr)
    return arr


# ---------------------------------------------------------------------------
# public API


def gp_density(x, params: GpParams):
    """Density ``h_theta(x)``; exactly zero outside ``[0, upper)``."""
    return _as_output(_pdf(x, params.sigma, params.gamma), x)


def gp_logpdf(x, params: GpParams):
    return _as_output(_logpdf(x, params.sigma, params.gamma), x)


def gp_cdf(x, params: GpParams):
    """Distribution function ``H_theta(x)`` clipped to ``[0, 1]``."""
    return _as_output(_cdf(x, params.sigma, params.gamma), x)


def gp_sf(x, params: GpParams):
    return _as_output(_sf(x, params.sigma, params.gamma), x)


def gp_quantile(q, params: GpParams):
    """Inverse distribution function on ``0 <= q < 1``.

    Raises
    ------
    ValueError
        If any ``q`` lies outside ``[0, 1)``.
    """
    qa = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(qa)) or np.any(qa < 0) or np.any(qa >= 1):
        raise ValueError("quantile level must satisfy 0 <= q < 1")
    return _as_output(_ppf(qa, params.sigma, params.gamma), q)


def gp_sample(params: GpParams, m: int, seed) -> np.ndarray:
    """Draw ``m`` i.i.d. variates by inverse-CDF transform of seeded uniforms.

    ``seed`` may be an integer, a ``SeedSequence`` or a ``Generator``.
    """
    if m < 1:
        raise ValueError("sample size m must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(int(m))
    return _ppf(u, params.sigma, params.gamma)


def gp_loglik(params: GpParams, excesses) -> float:
    """Log-likelihood of ``excesses``; ``-inf`` if any falls outside the support."""
    x = np.asarray(excesses, dtype=float)
    if x.size == 0:
        raise ValueError("gp_loglik needs at least one excess")
    return float(np.sum(_logpdf(x, params.sigma, params.gamma)))


def threshold_stability_transform(params: GpParams, u: float) -> GpParams:
    """Parameters of ``Y - u | Y > u`` for ``Y ~ H_theta``: ``(sigma + gamma*u, gamma)``."""
    if not u >= 0:
        raise ValueError("threshold shift u must be >= 0")
    scale = params.sigma + params.gamma * u
    if scale <= 0 or u >= params.upper:
        raise ValueError(f"u={u!r} lies at or beyond the upper end-point {params.upper!r}")
    return GpParams(scale, params.gamma)


def _loglik_scalar(sigma: float, gamma: float, x: np.ndarray, xmax: float) -> float:
    """Fast log-likelihood for scalar parameters and non-negative ``x`` with max ``xmax``."""
    if gamma < 0 and 1.0 + gamma * xmax / sigma <= 0:
        return -math.inf
    z = x / sigma
    if abs(gamma) < GAMMA_SWITCH and abs(gamma) * xmax / sigma < _SERIES_ARG:
        return -x.size * math.log(sigma) - (1.0 + gamma) * float(np.sum(_log1p_ratio(gamma, z)))
    return -x.size * math.log(sigma) - (1.0 + 1.0 / gamma) * float(np.sum(np.log1p(gamma * z)))
