"""
Bayesian inference for the GP parameters of threshold excesses.

The prior factorises as ``pi(sigma, gamma) = pi_sh(gamma) * pi_sc(sigma)``.
Shipped shape priors are a Gaussian truncated to ``gamma > -1/2`` and a flat
density on the same half line. Shipped scale priors:

``AnchoredScale(anchor)``
    log-Cauchy centred at ``anchor``::

        pi_sc(sigma) = 1 / (pi * sigma * (1 + log(sigma / anchor)**2))

    so ``sigma * pi_sc(sigma) <= 1/pi`` for every sigma. Anchoring at a point
    estimate of the scale makes it data dependent.
``LogFlatScale(lower, upper)``
    ``1 / (sigma * log(upper / lower))`` on ``[lower, upper]``.

Posterior draws come from a random-walk Metropolis sampler on
``(log sigma, gamma)`` whose Gaussian proposal is tuned during burn-in
(covariance from the burn-in history, global scale driven toward 0.234
acceptance) and frozen afterwards.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from .errors import ChainDegeneracyError, DegenerateDataError, SingularityError, ValidityWarning
from .estimators import GAMMA_FLOOR, ExcessData, _hess_fd, fit_gpwm, fit_mle
from .gpd import GAMMA_MIN, GpParams, _loglik_scalar

TARGET_ACCEPT = 0.234


# ---------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class TruncatedGaussianShape:
    mean: float = 0.0
    sd: float = 10.0

    def logpdf(self, gamma: float) -> float:
        if not gamma > GAMMA_MIN:
            return -math.inf
        z = (gamma - self.mean) / self.sd
        log_mass = log_ndtr((self.mean - GAMMA_MIN) / self.sd)
        return -0.5 * z * z - 0.5 * math.log(2 * math.pi) - math.log(self.sd) - float(log_mass)


@dataclass(frozen=True)
class FlatShape:
    def logpdf(self, gamma: float) -> float:
        return 0.0 if gamma > GAMMA_MIN else -math.inf


@dataclass(frozen=True)
class AnchoredScale:
    anchor: float

    def __post_init__(self):
        if not self.anchor > 0:
            raise ValueError("scale prior anchor must be > 0")

    def logpdf(self, sigma: float) -> float:
        if not sigma > 0:
            return -math.inf
        r = math.log(sigma / self.anchor)
        return -math.log(math.pi) - math.log(sigma) - math.log1p(r * r)


@dataclass(frozen=True)
class LogFlatScale:
    lower: float = 1e-8
    upper: float = 1e8

    def __post_init__(self):
        if not 0 < self.lower < self.upper:
            raise ValueError("need 0 < lower < upper")

    def logpdf(self, sigma: float) -> float:
        if not self.lower <= sigma <= self.upper:
            return -math.inf
        return -math.log(sigma) - math.log(math.log(self.upper / self.lower))


@dataclass(frozen=True)
class PriorSpec:
    shape: object = field(default_factory=TruncatedGaussianShape)
    scale: object = field(default_factory=LogFlatScale)


def default_prior(data: ExcessData) -> PriorSpec:
    """Gaussian(0, 10) shape prior and a log-Cauchy scale prior anchored at the GPWM scale.

    Falls back to the ML scale when GPWM is not usable.
    """
    anchor = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        try:
            pw = fit_gpwm(data)
            if pw.valid:
                anchor = pw.sigma
        except (DegenerateDataError, SingularityError):
            pass
    if anchor is None:
        anchor = fit_mle(data).sigma
    return PriorSpec(TruncatedGaussianShape(0.0, 10.0), AnchoredScale(anchor))


def log_prior(params: GpParams, prior: PriorSpec) -> float:
    return prior.shape.logpdf(params.gamma) + prior.scale.logpdf(params.sigma)


def _log_post(sigma, gamma, x, prior, xmax=None):
    if not (gamma > GAMMA_MIN and sigma > 0):
        return -math.inf
    lp = prior.shape.logpdf(gamma) + prior.scale.logpdf(sigma)
    if lp == -math.inf:
        return lp
    if xmax is None:
        xmax = float(np.max(x))
    return _loglik_scalar(sigma, gamma, x, xmax) + lp


def log_posterior_unnorm(params: GpParams, data: ExcessData, prior: PriorSpec) -> float:
    """GP log-likelihood of the excesses plus the log prior."""
    return _log_post(params.sigma, params.gamma, data.excesses, prior)


# ---------------------------------------------------------------------------
# chain


@dataclass(frozen=True)
class PosteriorChain:
    """Retained posterior draws (burn-in removed) and sampler diagnostics."""

    sigma: np.ndarray
    gamma: np.ndarray
    log_posts: np.ndarray
    acceptance_rate: float
    burn_in: int
    seed: int | None = None

    def __post_init__(self):
        for name in ("sigma", "gamma", "log_posts"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.sigma.shape == self.gamma.shape == self.log_posts.shape) or self.sigma.ndim != 1:
            raise ValueError("sigma, gamma and log_posts must be 1-d and equally long")
        if self.sigma.size == 0:
            raise ValueError("empty chain")
        if np.any(self.sigma <= 0) or np.any(self.gamma <= GAMMA_MIN):
            raise ValueError("chain holds draws outside Theta")

    def __len__(self):
        return self.sigma.size

    @property
    def draws(self) -> list[GpParams]:
        return [GpParams(s, g) for s, g in zip(self.sigma, self.gamma)]

    @classmethod
    def constant(cls, params: GpParams, m: int = 1) -> "PosteriorChain":
        """A degenerate chain repeating ``params``; handy for plug-in comparisons."""
        return cls(np.full(m, params.sigma), np.full(m, params.gamma), np.zeros(m), 0.5, 0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sigma", "gamma", "log_post"])
            for s, g, lp in zip(self.sigma, self.gamma, self.log_posts):
                w.writerow([f"{s:.17g}", f"{g:.17g}", f"{lp:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "PosteriorChain":
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], acceptance_rate=float("nan"), burn_in=0)


def metropolis_step(state, log_p, proposal, log_target, rng):
    """One Metropolis accept/reject move with a symmetric proposal.

    Returns ``(state, log_p, accepted)``.
    """
    log_q = log_target(proposal)
    if log_q > -math.inf and math.log(rng.random()) < log_q - log_p:
        return proposal, log_q, True
    return state, log_p, False


def _start_point(data):
    fit = fit_mle(data)
    if fit.valid:
        return math.log(fit.sigma), max(fit.gamma, GAMMA_FLOOR + 1e-4)
    return math.log(float(np.mean(data.excesses))), 0.1


def _initial_cov(s, g, x):
    k = x.size
    try:
        H = -_hess_fd(s, g, x, x.max())
        cov = np.linalg.inv(H)
        np.linalg.cholesky(cov)
        return cov
    except np.linalg.LinAlgError:
        return np.diag([2.0 / k, 2.0 / k])


def sample_posterior(
    data: ExcessData,
    prior: PriorSpec | None = None,
    M: int = 20000,
    burn_in: int | None = None,
    seed: int = 0,
    thin: int = 1,
) -> PosteriorChain:
    """Adaptive random-walk Metropolis on ``(log sigma, gamma)``.

    ``burn_in`` defaults to ``M // 5``. Adaptation only happens during
    burn-in; the ``M`` retained steps use a fixed kernel. Returns ``M // thin``
    draws.

    Raises
    ------
    ChainDegeneracyError
        If the post-burn-in acceptance rate is below 0.01 or above 0.99.
    """
    if M < 100:
        raise ValueError("chain length M must be >= 100")
    if burn_in is None:
        burn_in = M // 5
    if burn_in < 0 or thin < 1:
        raise ValueError("need burn_in >= 0 and thin >= 1")
    if prior is None:
        prior = default_prior(data)
    x = np.asarray(data.excesses, dtype=float)
    xmax = float(x.max())
    rng = np.random.default_rng(seed)

    def log_target(theta):
        # density of (log sigma, gamma) carries the Jacobian sigma
        return _log_post(math.exp(theta[0]), theta[1], x, prior, xmax) + theta[0]

    s0, g0 = _start_point(data)
    state = np.array([s0, g0])
    log_p = log_target(state)
    if log_p == -math.inf:
        raise DegenerateDataError("start point has zero posterior density")

    cov = _initial_cov(s0, g0, x)
    log_scale = math.log(2.38 / math.sqrt(2.0))
    chol = np.linalg.cholesky(cov)

    # burn-in with adaptation
    hist = []
    for t in range(burn_in):
        prop = state + math.exp(log_scale) * (chol @ rng.standard_normal(2))
        log_q = log_target(prop)
        accept_prob = 0.0 if log_q == -math.inf else min(1.0, math.exp(min(0.0, log_q - log_p)))
        if rng.random() < accept_prob:
            state, log_p = prop, log_q
        log_scale += (accept_prob - TARGET_ACCEPT) / (t + 1) ** 0.6
        hist.append(state)
        if t >= 199 and (t + 1) % 100 == 0:
            emp = np.cov(np.asarray(hist[len(hist) // 2:]).T)
            emp = emp + 1e-12 * np.eye(2)
            try:
                chol = np.linalg.cholesky(emp)
            except np.linalg.LinAlgError:
                pass

    step = math.exp(log_scale) * chol
    n_keep = M // thin
    out = np.empty((n_keep, 3))
    accepted = 0
    j = 0
    for t in range(M):
        prop = state + step @ rng.standard_normal(2)
        state, log_p, acc = metropolis_step(state, log_p, prop, log_target, rng)
        accepted += acc
        if (t + 1) % thin == 0:
            out[j] = (math.exp(state[0]), state[1], log_p - state[0])
            j += 1
    rate = accepted / M
    if rate < 0.01 or rate > 0.99:
        raise ChainDegeneracyError(f"acceptance rate {rate:.4f} outside [0.01, 0.99]", achieved=rate)
    return PosteriorChain(out[:, 0], out[:, 1], out[:, 2], rate, burn_in, seed)


def equal_tailed(values, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed interval from linearly interpolated empirical quantiles."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values")
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(v, [a, 1.0 - a], method="linear")
    return float(lo), float(hi)


def credible_interval(chain: PosteriorChain, transform, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed credible interval of ``transform(theta)`` over the chain.

    ``transform`` maps a ``GpParams`` to a real number.
    """
    values = [transform(p) for p in chain.draws]
    return equal_tailed(values, level)
