"""
Threshold excesses and frequentist GP estimators.

``extract_excesses`` takes the ``(n-k)``-th order statistic as threshold and
returns the ``k`` top values shifted by it. ``fit_mle`` maximises the GP
likelihood over ``Theta = (0, inf) x (-1/2, inf)``; ``fit_gpwm`` is the closed
form generalised probability-weighted moment estimator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, SingularityError, ValidityWarning
from .gpd import GAMMA_MIN, GpParams, _log1p_ratio

ML = "ML"
GPWM = "GPWM"

GRAD_TOL = 1e-8
MAX_ITER = 500
#: hard floor on gamma used by the optimiser (open boundary of Theta)
GAMMA_FLOOR = GAMMA_MIN + 1e-6


@dataclass(frozen=True)
class ExcessData:
    """Top-``k`` excesses of a sample of size ``n`` over ``threshold``."""

    n: int
    k: int
    threshold: float
    excesses: np.ndarray = field(repr=False)

    def __post_init__(self):
        ex = np.array(self.excesses, dtype=float)
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if ex.shape != (self.k,):
            raise ValueError("excesses must hold exactly k values")
        if np.any(ex < 0) or np.any(np.diff(ex) < 0):
            raise ValueError("excesses must be non-negative and sorted ascending")
        ex.setflags(write=False)
        object.__setattr__(self, "excesses", ex)
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def top(self) -> np.ndarray:
        """The top-``k`` order statistics ``X_{n-k+1,n} <= ... <= X_{n,n}``."""
        return self.threshold + self.excesses


@dataclass(frozen=True)
class FitResult:
    """Outcome of a point estimator.

    ``sigma``/``gamma`` are the raw estimates; they can sit outside ``Theta``
    for GPWM, in which case ``flags`` says so and ``params`` raises.
    """

    method: str
    sigma: float
    gamma: float
    loglik: float | None
    converged: bool
    iterations: int
    flags: tuple = ()

    @property
    def params(self) -> GpParams:
        return GpParams(self.sigma, self.gamma)

    @property
    def valid(self) -> bool:
        return self.sigma > 0 and self.gamma > GAMMA_MIN


def extract_excesses(sample, k: int) -> ExcessData:
    """Split ``sample`` at its ``(n-k)``-th order statistic.

    Ties with the threshold give zero excesses and are kept.

    >>> extract_excesses([1, 5, 3, 2, 4], 2).excesses
    array([1., 2.])
    """
    x = np.asarray(sample, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    n = x.size
    k = int(k)
    if k < 1 or k >= n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    xs = np.sort(x, kind="stable")
    threshold = xs[n - k - 1]
    return ExcessData(n=n, k=k, threshold=threshold, excesses=xs[n - k:] - threshold)


def endpoint_estimate(params: GpParams, threshold: float) -> float:
    """Right end-point ``threshold - sigma/gamma`` (``inf`` if gamma >= 0)."""
    if params.gamma < 0:
        return threshold - params.sigma / params.gamma
    return math.inf


# ---------------------------------------------------------------------------
# GPWM


def _pwm_moments(excesses):
    """``(P_n, Q_n)``; ``Q_n`` weights the i-th largest excess by ``i/k``."""
    e = np.asarray(excesses, dtype=float)
    k = e.size
    desc = e[::-1]
    weights = np.arange(1, k + 1) / k
    return float(np.mean(desc)), float(np.mean(weights * desc))


def fit_gpwm(data: ExcessData) -> FitResult:
    """Generalised probability-weighted moment estimator.

    Estimates with ``gamma >= 1/2`` (outside the estimator's asymptotic
    theory) or outside ``Theta`` are returned flagged, with a ``ValidityWarning``.
    """
    if data.k < 2:
        raise ValueError("GPWM needs k >= 2")
    p_n, q_n = _pwm_moments(data.excesses)
    if p_n <= 0:
        raise DegenerateDataError("all excesses are zero")
    ratio = p_n / (2.0 * q_n) - 1.0
    if ratio == 0:
        raise SingularityError("P_n / (2 Q_n) = 1; GPWM undefined")
    gamma = 1.0 - 1.0 / ratio
    sigma = p_n / ratio
    flags = []
    if gamma >= 0.5:
        flags.append("gamma>=1/2: outside GPWM validity region")
    if gamma <= GAMMA_MIN:
        flags.append("gamma<=-1/2: outside Theta")
    if sigma <= 0:
        flags.append("sigma<=0: outside Theta")
    if flags:
        warnings.warn("GPWM estimate flagged: " + "; ".join(flags), ValidityWarning, stacklevel=2)
    return FitResult(GPWM, sigma, gamma, None, True, 0, tuple(flags))


# ---------------------------------------------------------------------------
# ML


def _phi(a):
    """(a/(1+a) - log1p(a)) / a**2, finite at a = 0."""
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < 0.05
    safe = np.where(small, 1.0, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (safe / (1.0 + safe) - np.log1p(safe)) / (safe * safe)
    series = np.zeros_like(a)
    for j in range(13, 1, -1):
        series = series * a + (-1.0) ** (j + 1) * (1.0 - 1.0 / j)
    return np.where(small, series, direct)


def _feasible(s, gamma, xmax):
    if not (gamma >= GAMMA_FLOOR and math.isfinite(s)):
        return False
    return 1.0 + gamma * xmax / math.exp(s) > 0


def _loglik_s(s, gamma, x):
    sigma = math.exp(s)
    z = x / sigma
    return float(-x.size * s - (1.0 + gamma) * np.sum(_log1p_ratio(gamma, z)))


def _grad_s(s, gamma, x):
    """Gradient of the log-likelihood in ``(log sigma, gamma)``."""
    sigma = math.exp(s)
    z = x / sigma
    a = gamma * z
    zu = z / (1.0 + a)
    d_s = -x.size + (1.0 + gamma) * np.sum(zu)
    d_g = -np.sum(z * z * _phi(a)) - np.sum(zu)
    return np.array([d_s, d_g])


def _hess_fd(s, gamma, x, xmax):
    """Central-difference Hessian of the analytic gradient."""
    h = 1e-5
    cols = []
    for e in (np.array([h, 0.0]), np.array([0.0, h])):
        lo = np.array([s, gamma]) - e
        hi = np.array([s, gamma]) + e
        if not (_feasible(*lo, xmax) and _feasible(*hi, xmax)):
            lo = np.array([s, gamma])
            cols.append((_grad_s(*hi, x) - _grad_s(*lo, x)) / h)
        else:
            cols.append((_grad_s(*hi, x) - _grad_s(*lo, x)) / (2 * h))
    H = np.column_stack(cols)
    return 0.5 * (H + H.T)


def _profile_start(x):
    """Best point of the exact profile likelihood over a grid in ``tau = gamma/sigma``.

    For fixed ``tau`` the likelihood is maximised by ``gamma = mean(log1p(tau x))``
    and ``sigma = gamma / tau``.
    """
    k = x.size
    xmax = x.max()
    xbar = x.mean()
    neg = -(1.0 - np.logspace(-8, -0.01, 60)) / xmax
    pos = np.logspace(-4, 4, 60) / xbar
    tau = np.concatenate([neg, pos])
    g = np.mean(np.log1p(np.outer(tau, x)), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = g / tau
    ok = (g > GAMMA_FLOOR) & (sig > 0) & np.isfinite(sig)
    prof = np.where(ok, -k * np.log(np.where(ok, sig, 1.0)) - k * (1.0 + g), -np.inf)
    cands = [(-k * math.log(xbar) - k, math.log(xbar), 0.0)]
    if np.any(ok):
        i = int(np.argmax(prof))
        cands.append((float(prof[i]), math.log(sig[i]), float(g[i])))
    return max(cands)


def fit_mle(data: ExcessData) -> FitResult:
    """Maximum likelihood over ``Theta``.

    A profile-likelihood grid picks the starting point (GPWM is used instead
    when valid and better), BFGS on ``(log sigma, gamma)`` with infeasible trial
    points rejected in the line search does the bulk of the work, and Newton
    steps on a finite-difference Hessian of the analytic gradient polish the
    result until the gradient sup-norm drops below ``GRAD_TOL``. If the
    maximum sits on the ``gamma`` floor, the scale alone is optimised there and
    convergence is judged by the KKT conditions.
    """
    if data.k < 2:
        raise ValueError("ML needs k >= 2")
    x = np.asarray(data.excesses, dtype=float)
    if not np.any(x > 0):
        raise DegenerateDataError("all excesses are zero")
    xmax = float(x.max())

    _, s, g = _profile_start(x)
    start_ll = _loglik_s(s, g, x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        try:
            pw = fit_gpwm(data)
        except (DegenerateDataError, SingularityError):
            pw = None
    if pw is not None and pw.valid and pw.gamma < 0.5:
        s_pw, g_pw = math.log(pw.sigma), max(pw.gamma, GAMMA_FLOOR + 1e-3)
        if _feasible(s_pw, g_pw, xmax):
            ll_pw = _loglik_s(s_pw, g_pw, x)
            if ll_pw > start_ll:
                s, g, start_ll = s_pw, g_pw, ll_pw

    theta = np.array([s, g])
    f = -start_ll
    grad = -_grad_s(s, g, x)
    Hinv = np.eye(2) / x.size
    it = 0
    converged = False
    # BFGS phase
    while it < MAX_ITER:
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        d = -Hinv @ grad
        slope = float(grad @ d)
        if slope >= 0:
            Hinv = np.eye(2) / x.size
            d = -Hinv @ grad
            slope = float(grad @ d)
        step = 1.0
        accepted = False
        for _ in range(60):
            trial = theta + step * d
            if _feasible(trial[0], trial[1], xmax):
                f_new = -_loglik_s(trial[0], trial[1], x)
                if f_new <= f + 1e-4 * step * slope:
                    accepted = True
                    break
            step *= 0.5
        it += 1
        if not accepted:
            break
        g_new = -_grad_s(trial[0], trial[1], x)
        sv = trial - theta
        yv = g_new - grad
        sy = float(sv @ yv)
        if sy > 1e-300:
            rho = 1.0 / sy
            I = np.eye(2)
            Hinv = (I - rho * np.outer(sv, yv)) @ Hinv @ (I - rho * np.outer(yv, sv)) + rho * np.outer(sv, sv)
        if abs(f - f_new) <= 1e-15 * max(1.0, abs(f)) and np.max(np.abs(g_new)) >= np.max(np.abs(grad)):
            theta, f, grad = trial, f_new, g_new
            break
        theta, f, grad = trial, f_new, g_new

    # Newton polish; accept steps that shrink the gradient
    while not converged and it < MAX_ITER:
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        if theta[1] - GAMMA_FLOOR < 1e-4 and grad[1] > 0:
            break
        H = -_hess_fd(theta[0], theta[1], x, xmax)
        try:
            d = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            break
        if float(grad @ d) >= 0:
            break
        step = 1.0
        improved = False
        for _ in range(40):
            trial = theta + step * d
            if _feasible(trial[0], trial[1], xmax):
                g_new = -_grad_s(trial[0], trial[1], x)
                f_new = -_loglik_s(trial[0], trial[1], x)
                if np.max(np.abs(g_new)) < np.max(np.abs(grad)) and f_new <= f + 1e-9 * max(1.0, abs(f)):
                    improved = True
                    break
            step *= 0.5
        it += 1
        if not improved:
            break
        theta, f, grad = trial, f_new, g_new
    if not converged and np.max(np.abs(grad)) < GRAD_TOL:
        converged = True

    flags = []
    if not converged and theta[1] - GAMMA_FLOOR < 1e-3:
        # maximum on the gamma floor: optimise the scale there and check KKT
        theta, f, grad, n_it = _floor_scale(theta[0], x, xmax)
        it += n_it
        converged = abs(grad[0]) < GRAD_TOL and grad[1] >= 0
        flags.append("gamma on lower boundary of Theta")

    return FitResult(ML, math.exp(theta[0]), float(theta[1]), -f, bool(converged), it, tuple(flags))


def _floor_scale(s, x, xmax):
    """Newton on ``d loglik / d log sigma`` at ``gamma = GAMMA_FLOOR``."""
    g = GAMMA_FLOOR
    s_min = math.log(-g * xmax)
    s = max(s, s_min + 1e-6)
    n_it = 0
    for n_it in range(1, 101):
        grad = -_grad_s(s, g, x)
        if abs(grad[0]) < GRAD_TOL:
            break
        h = 1e-6
        d2 = (-_grad_s(s + h, g, x)[0] - grad[0]) / h
        new = s - grad[0] / d2 if d2 > 0 else s + (0.5 if grad[0] < 0 else -0.5)
        if new <= s_min:
            new = 0.5 * (s + s_min)
        s = new
    grad = -_grad_s(s, g, x)
    return np.array([s, g]), -_loglik_s(s, g, x), grad, n_it
