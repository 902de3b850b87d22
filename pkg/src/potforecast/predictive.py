"""
Predictive densities and intervals for future excesses and peaks.

Given GP parameters ``(sigma, gamma)`` for the excesses over ``t = X_{n-k,n}``,
the excess over the higher level ``Q(p)``, ``p <= k/n``, is modelled as GP with
scale ``(np/k)**(-gamma) * sigma``, and the peak is that excess shifted by

    Q(p) = t + sigma * ((np/k)**(-gamma) - 1) / gamma.

With a posterior chain the predictive law is the equally weighted mixture of
the per-draw laws. A chain may carry one level ``p`` per draw, which is how
scaling-factor levels ``p_i = c**(1/gamma_i) k/n`` propagate through the
posterior.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bayes import PosteriorChain
from .gpd import GpParams, _cdf, _expm1_ratio, _pdf, _ppf

_CHUNK = 2_000_000


class Kind(str, Enum):
    EXCESS = "excess"
    PEAK = "peak"


@dataclass(frozen=True)
class PredictiveSpec:
    """Inputs of a predictive law.

    ``theta`` is a ``GpParams`` (plug-in) or a ``PosteriorChain`` (Bayesian).
    ``p`` is a probability, or for a chain optionally one level per draw.
    """

    theta: object
    threshold: float
    k: int
    n: int
    p: object

    def __post_init__(self):
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        p = np.asarray(self.p, dtype=float)
        if p.ndim > 1 or (p.ndim == 1 and not isinstance(self.theta, PosteriorChain)):
            raise ValueError("per-draw levels need a PosteriorChain")
        if p.ndim == 1 and p.size != len(self.theta):
            raise ValueError("per-draw levels must match the chain length")
        if np.any(~(p > 0)) or np.any(p > self.k / self.n):
            raise ValueError("levels must satisfy 0 < p <= k/n")
        if not isinstance(self.theta, (GpParams, PosteriorChain)):
            raise TypeError("theta must be GpParams or PosteriorChain")

    @property
    def is_chain(self) -> bool:
        return isinstance(self.theta, PosteriorChain)


@dataclass(frozen=True)
class PredictiveInterval:
    lower: float
    upper: float
    level: float
    kind: Kind


# ---------------------------------------------------------------------------
# levels and extreme quantiles


def extreme_level(c: float, gamma: float, k: int, n: int) -> float:
    """Level ``p = c**(1/gamma) k/n`` that divides the gap to the end-point by ``c``.

    Only defined for ``gamma < 0``; with ``gamma >= 0`` pass ``p`` directly.
    """
    if not c >= 1:
        raise ValueError("scaling factor c must be >= 1")
    if not gamma < 0:
        raise ValueError(
            f"scaling-factor levels need a finite end-point (gamma < 0), got gamma={gamma}; "
            "supply the level p directly for gamma >= 0"
        )
    return c ** (1.0 / gamma) * k / n


def chain_levels(chain: PosteriorChain, c: float, k: int, n: int) -> np.ndarray:
    """Per-draw levels ``c**(1/gamma_i) k/n``."""
    if not c >= 1:
        raise ValueError("scaling factor c must be >= 1")
    if np.any(chain.gamma >= 0):
        raise ValueError("scaling-factor levels need gamma < 0 for every posterior draw")
    return c ** (1.0 / chain.gamma) * k / n


def _log_ratio(k, n, p):
    """log(k / (n p)) >= 0."""
    return np.log(k / (n * np.asarray(p, dtype=float)))


def _scale(sigma, gamma, k, n, p):
    return sigma * np.exp(gamma * _log_ratio(k, n, p))


def _shift(sigma, gamma, threshold, k, n, p):
    return threshold + sigma * _expm1_ratio(gamma, _log_ratio(k, n, p))


def extreme_quantile(params: GpParams, threshold: float, k: int, n: int, p: float) -> float:
    """``t + sigma((np/k)**(-gamma) - 1)/gamma``; ``t + sigma log(k/(np))`` at gamma = 0."""
    if not 0 < p <= k / n:
        raise ValueError("level must satisfy 0 < p <= k/n")
    return float(_shift(params.sigma, params.gamma, threshold, k, n, p))


def chain_extreme_quantiles(chain: PosteriorChain, threshold, k, n, p) -> np.ndarray:
    """Per-draw ``Q(p)`` for a chain (``p`` scalar or per draw)."""
    return np.asarray(_shift(chain.sigma, chain.gamma, threshold, k, n, p), dtype=float)


# ---------------------------------------------------------------------------
# densities


def _components(spec: PredictiveSpec, kind: Kind):
    """Arrays ``(location, scale, gamma)`` of the mixture components."""
    if spec.is_chain:
        sigma, gamma = spec.theta.sigma, spec.theta.gamma
    else:
        sigma, gamma = np.array([spec.theta.sigma]), np.array([spec.theta.gamma])
    p = np.broadcast_to(np.asarray(spec.p, dtype=float), sigma.shape)
    scale = _scale(sigma, gamma, spec.k, spec.n, p)
    if Kind(kind) is Kind.PEAK:
        loc = _shift(sigma, gamma, spec.threshold, spec.k, spec.n, p)
    else:
        loc = np.zeros_like(sigma)
    return np.asarray(loc, float), np.asarray(scale, float), np.asarray(gamma, float)


def predictive_params(spec: PredictiveSpec) -> GpParams:
    """GP parameters of the plug-in excess predictive law."""
    if spec.is_chain:
        raise TypeError("predictive_params needs a plug-in spec")
    _, scale, gamma = _components(spec, Kind.EXCESS)
    return GpParams(scale[0], gamma[0])


def _mixture(fun, x, loc, scale, gamma):
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    m = loc.size
    if m == 1:
        out = fun(flat - loc[0], scale[0], gamma[0])
    else:
        out = np.empty(flat.size)
        step = max(1, _CHUNK // m)
        for i in range(0, flat.size, step):
            xi = flat[i:i + step, None]
            out[i:i + step] = np.mean(fun(xi - loc, scale, gamma), axis=1)
    out = np.asarray(out, dtype=float).reshape(np.shape(x))
    return float(out) if out.ndim == 0 else out


def predictive_density(x, spec: PredictiveSpec, kind=Kind.PEAK):
    """Predictive density (plug-in or posterior mixture) of an excess or a peak."""
    return _mixture(_pdf, x, *_components(spec, kind))


def predictive_cdf(x, spec: PredictiveSpec, kind=Kind.PEAK):
    return _mixture(_cdf, x, *_components(spec, kind))


def excess_predictive_density(x, spec: PredictiveSpec):
    """Plug-in density of a future excess over ``Q(p)``."""
    if spec.is_chain:
        raise TypeError("use posterior_predictive_density for chains")
    return predictive_density(x, spec, Kind.EXCESS)


def peak_predictive_density(x, spec: PredictiveSpec):
    """Plug-in density of a future peak over ``Q(p)``; support starts at ``Q(p)``."""
    if spec.is_chain:
        raise TypeError("use posterior_predictive_density for chains")
    return predictive_density(x, spec, Kind.PEAK)


def posterior_predictive_density(x, spec: PredictiveSpec, kind=Kind.PEAK):
    """Monte Carlo posterior predictive density: the average of per-draw densities."""
    if not spec.is_chain:
        raise TypeError("posterior_predictive_density needs a PosteriorChain")
    return predictive_density(x, spec, kind)


# ---------------------------------------------------------------------------
# quantiles and intervals


def predictive_quantile(q: float, spec: PredictiveSpec, kind=Kind.PEAK) -> float:
    """Quantile of the predictive law.

    Plug-in specs invert the GP distribution function analytically. Mixtures
    bisect the averaged distribution function inside the bracket spanned by
    the component quantiles.
    """
    if not 0 <= q < 1:
        raise ValueError("quantile level must satisfy 0 <= q < 1")
    loc, scale, gamma = _components(spec, kind)
    comp = loc + _ppf(q, scale, gamma)
    if comp.size == 1 or np.all(comp == comp[0]):
        return float(comp[0])
    lo, hi = float(comp.min()), float(comp.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if np.mean(_cdf(mid - loc, scale, gamma)) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def predictive_interval(spec: PredictiveSpec, alpha: float = 0.05, kind=Kind.PEAK) -> PredictiveInterval:
    """Equal-tailed ``1 - alpha`` interval of the predictive law."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    kind = Kind(kind)
    lo = predictive_quantile(alpha / 2, spec, kind)
    hi = predictive_quantile(1 - alpha / 2, spec, kind)
    return PredictiveInterval(lo, hi, 1.0 - alpha, kind)


def density_grid(spec: PredictiveSpec, kind=Kind.PEAK, points: int = 512):
    """``points`` equispaced abscissae spanning the 0.1%-99.9% predictive quantiles."""
    if points < 2:
        raise ValueError("need at least two grid points")
    a = predictive_quantile(0.001, spec, kind)
    b = predictive_quantile(0.999, spec, kind)
    x = np.linspace(a, b, int(points))
    return x, np.atleast_1d(predictive_density(x, spec, kind))


def support_breakpoints(spec: PredictiveSpec, kind=Kind.PEAK) -> np.ndarray:
    """Sorted finite support edges of all components (for quadrature)."""
    loc, scale, gamma = _components(spec, kind)
    with np.errstate(divide="ignore"):
        upper = np.where(gamma < 0, loc - scale / np.where(gamma < 0, gamma, -1.0), np.inf)
    edges = np.concatenate([loc, upper[np.isfinite(upper)]])
    return np.unique(edges)


def interval_mass(spec: PredictiveSpec, interval: PredictiveInterval) -> float:
    """Predictive probability of ``interval``, from the distribution function."""
    return float(predictive_cdf(interval.upper, spec, interval.kind) - predictive_cdf(interval.lower, spec, interval.kind))
