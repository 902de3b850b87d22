"""
Synthetic data-generating laws with known tail behaviour.

Each oracle exposes its distribution, tail quantile ``U(v) = F^{-1}(1 - 1/v)``,
scaling function ``s(t) = (1 - F(t)) / F'(t)`` and the second-order function

    A(v) = v U''(v) / U'(v) + 1 - gamma

in closed form. For the Burr-type laws write ``w = v**(1/lam)``:

Burr, ``1 - F(x) = (1 + x**tau)**(-lam)``, ``x > 0``
    ``U(v) = (w - 1)**(1/tau)``, ``gamma = 1/(tau lam)``, ``rho = -1/lam`` and
    ``log U'(v) = const + (1/tau - 1) log(w - 1) + log w - log v``.
    Differentiating in ``log v`` gives ``v U''/U' = (1/tau - 1) w/(lam (w-1)) + 1/lam - 1``,
    hence ``A(v) = (gamma - 1/lam) / (w - 1)``.

Finite end-point power law, ``1 - F(x) = (1 + (x* - x)**(-tau))**(-lam)``, ``x < x*``
    ``U(v) = x* - (w - 1)**(-1/tau)``, ``gamma = -1/(tau lam)``, ``rho = -1/lam``.
    The same steps give ``v U''/U' = -(1/tau + 1) w/(lam (w-1)) + 1/lam - 1``, hence
    ``A(v) = -(1/lam + |gamma|) / (w - 1)``.

Both are parametrised by ``(gamma, rho)``; ``tau = 1/(|gamma| lam)`` with
``lam = -1/rho``. ``A`` vanishes identically for exact GP laws.
"""

from __future__ import annotations

import math

import numpy as np

from ..gpd import _expm1_ratio, _logpdf, _logsf, _ppf


class DistributionOracle:
    """Base class; subclasses supply ``logpdf``, ``logsf``, ``tail_quantile`` and ``A``."""

    name = "oracle"
    gamma: float
    rho: float | None = None
    endpoint: float = math.inf
    lower: float = 0.0

    def logpdf(self, x):
        raise NotImplementedError

    def logsf(self, x):
        raise NotImplementedError

    def tail_quantile(self, p):
        """``Q(p) = F^{-1}(1 - p)``, accurate for tiny ``p``."""
        raise NotImplementedError

    def A(self, v):
        raise NotImplementedError

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def sf(self, x):
        return np.exp(self.logsf(x))

    def cdf(self, x):
        return -np.expm1(self.logsf(x))

    def quantile(self, q):
        """``F^{-1}(q)``."""
        return self.tail_quantile(1.0 - np.asarray(q, dtype=float))

    def s(self, t):
        """Scaling function ``(1 - F(t)) / F'(t)``."""
        return np.exp(self.logsf(t) - self.logpdf(t))

    def sample(self, n: int, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        p = 1.0 - rng.random(int(n))
        return self.tail_quantile(np.clip(p, 1e-300, 1.0 - 2.0 ** -53))

    def describe(self) -> str:
        return self.name


class ExactGP(DistributionOracle):
    """GP law itself: threshold stable, so ``A = 0`` and ``s(t) = sigma + gamma t``."""

    name = "exact-gp"

    def __init__(self, sigma: float = 1.0, gamma: float = 0.2):
        if not sigma > 0:
            raise ValueError("sigma must be > 0")
        self.sigma = float(sigma)
        self.gamma = float(gamma)
        self.endpoint = -self.sigma / self.gamma if self.gamma < 0 else math.inf

    def logpdf(self, x):
        return _logpdf(x, self.sigma, self.gamma)

    def logsf(self, x):
        return _logsf(x, self.sigma, self.gamma)

    def tail_quantile(self, p):
        p = np.asarray(p, dtype=float)
        return self.sigma * _expm1_ratio(self.gamma, -np.log(p))

    def quantile(self, q):
        return _ppf(q, self.sigma, self.gamma)

    def s(self, t):
        return self.sigma + self.gamma * np.asarray(t, dtype=float)

    def A(self, v):
        return np.zeros_like(np.asarray(v, dtype=float))

    def describe(self):
        return f"{self.name}(sigma={self.sigma:g},gamma={self.gamma:g})"


class Exponential(ExactGP):
    name = "exponential"

    def __init__(self, scale: float = 1.0):
        super().__init__(scale, 0.0)

    def describe(self):
        return f"{self.name}(scale={self.sigma:g})"


class Burr(DistributionOracle):
    """Burr XII law with ``gamma > 0`` and second-order index ``rho < 0``."""

    name = "burr"

    def __init__(self, gamma: float = 0.25, rho: float = -0.5):
        if not gamma > 0 or not rho < 0:
            raise ValueError("Burr oracle needs gamma > 0 and rho < 0")
        self.gamma = float(gamma)
        self.rho = float(rho)
        self.lam = -1.0 / self.rho
        self.tau = 1.0 / (self.gamma * self.lam)

    def logsf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            val = -self.lam * np.log1p(np.power(np.maximum(x, 0.0), self.tau))
        return np.where(x > 0, val, 0.0)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.where(x > 0, x, 1.0)
        val = (
            math.log(self.lam * self.tau)
            + (self.tau - 1.0) * np.log(xp)
            - (self.lam + 1.0) * np.log1p(xp ** self.tau)
        )
        return np.where(x > 0, val, -np.inf)

    def tail_quantile(self, p):
        p = np.asarray(p, dtype=float)
        return np.expm1(-np.log(p) / self.lam) ** (1.0 / self.tau)

    def s(self, t):
        t = np.asarray(t, dtype=float)
        return (1.0 + t ** self.tau) / (self.lam * self.tau * t ** (self.tau - 1.0))

    def A(self, v):
        v = np.asarray(v, dtype=float)
        return (self.gamma - 1.0 / self.lam) / np.expm1(np.log(v) / self.lam)

    def describe(self):
        return f"{self.name}(gamma={self.gamma:g},rho={self.rho:g})"


class FiniteEndpointPower(DistributionOracle):
    """Reversed Burr law with ``gamma < 0`` and a finite end-point ``x*``."""

    name = "finite-endpoint"

    def __init__(self, gamma: float = -0.3, rho: float = -0.5, endpoint: float = 0.0):
        if not gamma < 0 or not rho < 0:
            raise ValueError("finite end-point oracle needs gamma < 0 and rho < 0")
        self.gamma = float(gamma)
        self.rho = float(rho)
        self.endpoint = float(endpoint)
        self.lower = -math.inf
        self.lam = -1.0 / self.rho
        self.tau = 1.0 / (-self.gamma * self.lam)

    def _inv_gap(self, x):
        """``1 / (x* - x)`` with zero outside ``x < x*``."""
        d = self.endpoint - np.asarray(x, dtype=float)
        return np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 0.0), d > 0

    def logsf(self, x):
        y, ok = self._inv_gap(x)
        val = -self.lam * np.log1p(y ** self.tau)
        return np.where(ok, val, -np.inf)

    def logpdf(self, x):
        y, ok = self._inv_gap(x)
        yy = np.where(ok & (y > 0), y, 1.0)
        val = (
            math.log(self.lam * self.tau)
            + (self.tau + 1.0) * np.log(yy)
            - (self.lam + 1.0) * np.log1p(yy ** self.tau)
        )
        return np.where(ok & (y > 0), val, -np.inf)

    def tail_quantile(self, p):
        p = np.asarray(p, dtype=float)
        return self.endpoint - np.expm1(-np.log(p) / self.lam) ** (-1.0 / self.tau)

    def s(self, t):
        y, _ = self._inv_gap(t)
        return (1.0 + y ** self.tau) / (self.lam * self.tau * y ** (self.tau + 1.0))

    def A(self, v):
        v = np.asarray(v, dtype=float)
        return -(1.0 / self.lam - self.gamma) / np.expm1(np.log(v) / self.lam)

    def describe(self):
        return f"{self.name}(gamma={self.gamma:g},rho={self.rho:g},endpoint={self.endpoint:g})"


ORACLES = {
    "exact-gp": ExactGP,
    "exponential": Exponential,
    "burr": Burr,
    "finite-endpoint": FiniteEndpointPower,
}


def make_oracle(name: str, **params) -> DistributionOracle:
    try:
        cls = ORACLES[name]
    except KeyError:
        raise ValueError(f"unknown oracle {name!r}; choose from {sorted(ORACLES)}") from None
    return cls(**params)
