"""
Simulation experiments checking the GP approximation and forecast calibration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..bayes import sample_posterior
from ..errors import ChainDegeneracyError, DegenerateDataError, ExperimentError, SingularityError, ValidityWarning
from ..estimators import GPWM, ML, extract_excesses, fit_gpwm, fit_mle
from ..gpd import _pdf
from ..predictive import (
    Kind,
    PredictiveSpec,
    chain_levels,
    extreme_level,
    predictive_interval,
)
from .hellinger import hellinger
from .oracles import DistributionOracle

BAYES = "Bayes"
METHODS = (ML, GPWM, BAYES)


# ---------------------------------------------------------------------------
# approximation in Hellinger distance


def normalized_excess_density(oracle: DistributionOracle, t: float):
    """Density of ``(X - t) / s(t)`` given ``X > t``, and its upper support edge."""
    if not t < oracle.endpoint:
        raise ValueError("threshold must lie below the end-point")
    log_tail = float(oracle.logsf(t))
    if log_tail < math.log(1e-300):
        raise ArithmeticError(f"1 - F(t) = exp({log_tail:.1f}) underflows")
    s = float(oracle.s(t))
    log_s = math.log(s)

    def density(x):
        if x < 0:
            return 0.0
        return float(np.exp(oracle.logpdf(t + s * x) + log_s - log_tail))

    upper = (oracle.endpoint - t) / s if math.isfinite(oracle.endpoint) else math.inf
    density.upper = upper
    density.scale = s
    return density


def _gp_standard(gamma):
    def h(x):
        return float(_pdf(x, 1.0, gamma))

    h.upper = -1.0 / gamma if gamma < 0 else math.inf
    return h


def _pair_hellinger(f, g, grid_size=64):
    ends = sorted([f.upper, g.upper])
    bps = [ends[0]] if math.isfinite(ends[0]) and ends[0] < ends[1] else []
    return hellinger(f, g, (0.0, ends[1]), grid_size=grid_size, breakpoints=bps)


def excess_hellinger(oracle: DistributionOracle, t: float) -> float:
    """``H(l_t, h_gamma)`` at threshold ``t``."""
    return _pair_hellinger(normalized_excess_density(oracle, t), _gp_standard(oracle.gamma))


@dataclass(frozen=True)
class ContractionRow:
    v: float
    H: float
    absA: float
    ratio: float


@dataclass(frozen=True)
class ContractionTable:
    oracle: str
    rows: tuple

    @property
    def ratio_spread(self) -> float:
        """max/min of ``H/|A(v)|`` over the grid (nan when ``A = 0``)."""
        r = [row.ratio for row in self.rows if math.isfinite(row.ratio)]
        if not r:
            return math.nan
        return max(r) / min(r)


def contraction_experiment(oracle: DistributionOracle, v_grid) -> ContractionTable:
    """``H(l_t, h_gamma)`` and ``H/|A(v)|`` at ``t = U(v)`` for each ``v`` on the grid."""
    v_grid = [float(v) for v in v_grid]
    if any(b <= a for a, b in zip(v_grid, v_grid[1:])):
        raise ValueError("v_grid must be increasing")
    rows = []
    for v in v_grid:
        t = float(oracle.tail_quantile(1.0 / v))
        H = excess_hellinger(oracle, t)
        a = abs(float(oracle.A(v)))
        rows.append(ContractionRow(v, H, a, H / a if a > 0 else math.nan))
    return ContractionTable(oracle.describe(), tuple(rows))


def approximation_distance(oracle: DistributionOracle, n: int, k: int, p: float, kind=Kind.PEAK) -> float:
    """Hellinger distance between the true law above ``Q(p)`` and its GP approximation.

    The approximation is built from the true ``t = Q(k/n)``, ``s(t)`` and
    ``gamma``: scale ``(np/k)**(-gamma) s(t)`` and, for peaks, location
    ``t + s(t)((np/k)**(-gamma) - 1)/gamma``.
    """
    kind = Kind(kind)
    t = float(oracle.tail_quantile(k / n))
    s = float(oracle.s(t))
    tp = float(oracle.tail_quantile(p))
    log_tail = float(oracle.logsf(tp))
    gamma = oracle.gamma
    ratio = math.log(k / (n * p))
    scale = s * math.exp(gamma * ratio)
    if kind is Kind.PEAK:
        loc = t + s * (ratio if gamma == 0 else math.expm1(gamma * ratio) / gamma)
        offset = 0.0
    else:
        loc = 0.0
        offset = tp

    def true_density(y):
        if y + offset <= tp:
            return 0.0
        return float(np.exp(oracle.logpdf(y + offset) - log_tail))

    def approx_density(y):
        return float(_pdf(y - loc, scale, gamma))

    lower = min(loc, tp - offset)
    ends = [oracle.endpoint - offset, loc - scale / gamma if gamma < 0 else math.inf]
    upper = max(ends)
    bps = [b for b in (loc, tp - offset, *ends) if math.isfinite(b) and lower < b < upper]
    return hellinger(true_density, approx_density, (lower, upper), breakpoints=bps, scale=scale)


# ---------------------------------------------------------------------------
# rate functions


def rate_w(gamma: float, x: float) -> float:
    """``log x`` (gamma > 0), ``log(x)**2`` (gamma = 0), ``x**(-gamma)`` (gamma < 0)."""
    if not x > 1:
        raise ValueError("rate functions need x > 1")
    if gamma > 0:
        return math.log(x)
    if gamma == 0:
        return math.log(x) ** 2
    return x ** (-gamma)


def rate_z(gamma: float, x: float) -> float:
    """``rate_w`` for gamma >= 0 and ``log(x) * rate_w`` for gamma < 0."""
    w = rate_w(gamma, x)
    return w if gamma >= 0 else math.log(x) * w


# ---------------------------------------------------------------------------
# coverage


@dataclass(frozen=True)
class CoverageReport:
    replicates: int
    nominal: float
    empirical: float
    mc_stderr: float
    failures: int
    oracle: str
    n: int
    k: int
    level: str
    method: str

    def row(self) -> dict:
        return {
            "oracle": self.oracle,
            "n": self.n,
            "k": self.k,
            "level": self.level,
            "method": self.method,
            "replicates": self.replicates,
            "failures": self.failures,
            "nominal": self.nominal,
            "empirical": self.empirical,
            "mc_stderr": self.mc_stderr,
        }


_FIT_FAILURES = (DegenerateDataError, SingularityError, ChainDegeneracyError, ValueError, ArithmeticError)


def _replicate(oracle, n, k, alpha, method, c, p, rng, chain_length, burn_in):
    sample = oracle.sample(n, rng)
    data = extract_excesses(sample, k)
    if method == BAYES:
        chain = sample_posterior(data, M=chain_length, burn_in=burn_in, seed=int(rng.integers(2 ** 63)))
        level = chain_levels(chain, c, k, n) if c is not None else p
        spec = PredictiveSpec(chain, data.threshold, k, n, level)
    else:
        fit = fit_mle(data) if method == ML else fit_gpwm(data)
        if method == ML and not fit.converged:
            raise ArithmeticError("ML did not converge")
        params = fit.params
        level = extreme_level(c, params.gamma, k, n) if c is not None else p
        spec = PredictiveSpec(params, data.threshold, k, n, level)
    pi = predictive_interval(spec, alpha, Kind.PEAK)
    # the target is the level the scaling factor defines under the true gamma
    p_true = extreme_level(c, oracle.gamma, k, n) if c is not None else p
    q = float(oracle.tail_quantile(p_true))
    log_base = float(oracle.logsf(q))
    lo = max(pi.lower, q)
    s_lo = float(np.exp(oracle.logsf(lo) - log_base))
    s_hi = float(np.exp(oracle.logsf(pi.upper) - log_base))
    return min(max(s_lo - s_hi, 0.0), 1.0)


def simulate_coverage(
    oracle: DistributionOracle,
    n: int,
    k: int,
    alpha: float = 0.05,
    method: str = ML,
    replicates: int = 500,
    seed: int = 0,
    c: float | None = None,
    p: float | None = None,
    chain_length: int = 2000,
    burn_in: int | None = None,
) -> CoverageReport:
    """True conditional coverage of peak predictive intervals, averaged over replicates.

    Each replicate draws ``n`` points, fits ``method`` to the top ``k``
    excesses and forms the equal-tailed ``1 - alpha`` peak interval at level
    ``p`` (default ``k/n``) or at ``p_hat = c**(1/gamma_hat) k/n``. Its coverage
    is ``P(X in interval | X > Q(p))`` under the oracle, using the oracle's own
    ``Q`` at the target level ``p`` (``c**(1/gamma) k/n`` with the true gamma
    when ``c`` is given). For Bayes with ``c`` each draw carries its own level.

    Replicates whose fit fails are dropped and counted; more than 10% failures
    raise ``ExperimentError``.
    """
    if replicates < 100:
        raise ValueError("coverage experiments need at least 100 replicates")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if c is not None and p is not None:
        raise ValueError("give either c or p, not both")
    if c is not None and not oracle.gamma < 0:
        raise ValueError("scaling-factor levels need an oracle with gamma < 0")
    if c is None and p is None:
        p = k / n
    children = np.random.SeedSequence(seed).spawn(replicates)
    values = []
    failures = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for child in children:
            rng = np.random.default_rng(child)
            try:
                values.append(_replicate(oracle, n, k, alpha, method, c, p, rng, chain_length, burn_in))
            except _FIT_FAILURES:
                failures += 1
    if failures > 0.1 * replicates:
        raise ExperimentError(f"{failures} of {replicates} replicates failed")
    used = len(values)
    emp = math.fsum(values) / used
    level = f"c={c:g}" if c is not None else f"p={p:.17g}"
    return CoverageReport(
        replicates=used,
        nominal=1.0 - alpha,
        empirical=emp,
        mc_stderr=math.sqrt(emp * (1.0 - emp) / used),
        failures=failures,
        oracle=oracle.describe(),
        n=n,
        k=k,
        level=level,
        method=method,
    )
