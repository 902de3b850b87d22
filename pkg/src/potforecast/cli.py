"""
Command-line front end.

Subcommands::

    potforecast fit       --data FILE --k K [--methods ML,GPWM,Bayes] --out DIR
    potforecast forecast  --data FILE --k K [--c 2,3,4] --out DIR
    potforecast forecast  --theta [LABEL=]SIGMA,GAMMA --threshold T --k K --n N --out DIR
    potforecast hellinger --data FILE --k K --out DIR
    potforecast simulate contraction --oracle burr --v-grid 1e2,1e3,1e4,1e5 --out DIR
    potforecast simulate coverage --oracle exact-gp --n 5000 --k 500 --out DIR

Every option may also come from ``--config FILE``, a flat ``key = value`` file
whose keys are the long option names (``chain-length`` or ``chain_length``).
Options given on the command line win over the file.

Exit codes: 0 success, 2 usage error, 3 input error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bayes import PosteriorChain, credible_interval, equal_tailed, sample_posterior
from .errors import ExperimentError, NumericalError, ValidityWarning
from .estimators import GPWM, ML, ExcessData, extract_excesses, endpoint_estimate, fit_gpwm, fit_mle
from .gpd import GpParams, _pdf
from .predictive import (
    Kind,
    PredictiveSpec,
    _components,
    chain_extreme_quantiles,
    chain_levels,
    density_grid,
    extreme_level,
    extreme_quantile,
    predictive_interval,
    support_breakpoints,
)
from .validation import hellinger
from .validation.experiments import BAYES, contraction_experiment, simulate_coverage
from .validation.oracles import make_oracle

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4

METHOD_NAMES = {"ml": ML, "gpwm": GPWM, "bayes": BAYES}

DEFAULTS = {
    "c": "2,3,4",
    "alpha": 0.05,
    "methods": "ML,GPWM,Bayes",
    "chain_length": 20000,
    "burn_in": None,
    "seed": 0,
    "grid_points": 512,
    "out": ".",
    "replicates": 500,
    "v_grid": "1e2,1e3,1e4,1e5",
}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    k: int
    c_list: tuple = (2.0, 3.0, 4.0)
    p_list: tuple = ()
    alpha: float = 0.05
    methods: tuple = (ML, GPWM, BAYES)
    chain_length: int = 20000
    burn_in: int | None = None
    seed: int = 0
    grid_points: int = 512
    output_dir: Path = field(default_factory=lambda: Path("."))
    data_path: Path | None = None

    def __post_init__(self):
        if self.k < 2:
            raise UsageError("k must be >= 2")
        if not 0 < self.alpha < 1:
            raise UsageError("alpha must lie in (0, 1)")
        if not self.methods:
            raise UsageError("at least one method is required")
        if any(c < 1 for c in self.c_list):
            raise UsageError("scaling factors c must be >= 1")
        if any(not 0 < p < 1 for p in self.p_list):
            raise UsageError("direct levels p must lie in (0, 1)")
        if self.grid_points < 2:
            raise UsageError("grid-points must be >= 2")


# ---------------------------------------------------------------------------
# serialisation


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _to_json(obj, indent=0) -> str:
    """JSON text with floats at 17 significant digits and non-finite floats as null."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_to_json(obj) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return _fmt(v)
    return v


# ---------------------------------------------------------------------------
# input


def read_series(path) -> tuple[np.ndarray, int]:
    """Numeric values of the first column and the number of rows dropped.

    Empty, non-numeric and non-finite cells are dropped; a header line is
    therefore dropped too.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    values, dropped = [], 0
    with fh:
        for row in csv.reader(fh):
            cell = row[0].strip() if row else ""
            try:
                v = float(cell)
            except ValueError:
                dropped += 1
                continue
            if math.isfinite(v):
                values.append(v)
            else:
                dropped += 1
    return np.asarray(values, dtype=float), dropped


def load_data(config: RunConfig) -> tuple[ExcessData, int]:
    if config.data_path is None:
        raise UsageError("--data is required (or use --theta test mode)")
    x, dropped = read_series(config.data_path)
    if dropped:
        print(f"dropped {dropped} non-numeric or empty rows", file=sys.stderr)
    if x.size < config.k + 1:
        raise InputError(f"need at least k+1 = {config.k + 1} numeric values, found {x.size}")
    return extract_excesses(x, config.k), dropped


# ---------------------------------------------------------------------------
# fitting


@dataclass
class MethodFit:
    method: str
    params: GpParams | None = None
    chain: PosteriorChain | None = None
    error: str | None = None
    report: dict = field(default_factory=dict)


def _point_report(fit, threshold):
    rep = {
        "status": "ok",
        "sigma": fit.sigma,
        "gamma": fit.gamma,
        "loglik": fit.loglik,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "flags": list(fit.flags),
        "endpoint": endpoint_estimate(fit.params, threshold) if fit.valid else None,
    }
    return rep


def _chain_report(chain, threshold, level):
    rep = {
        "status": "ok",
        "sigma_mean": float(np.mean(chain.sigma)),
        "gamma_mean": float(np.mean(chain.gamma)),
        "sigma_ci": list(equal_tailed(chain.sigma, level)),
        "gamma_ci": list(equal_tailed(chain.gamma, level)),
        "endpoint_mean": None,
        "endpoint_ci": None,
        "acceptance_rate": chain.acceptance_rate,
        "draws": len(chain),
        "burn_in": chain.burn_in,
        "seed": chain.seed,
    }
    if np.all(chain.gamma < 0):
        ends = threshold - chain.sigma / chain.gamma
        rep["endpoint_mean"] = float(np.mean(ends))
        rep["endpoint_ci"] = list(credible_interval(chain, lambda p: endpoint_estimate(p, threshold), level))
    return rep


def fit_methods(data: ExcessData, config: RunConfig) -> list[MethodFit]:
    """Fit every requested method; one method failing does not stop the others."""
    out = []
    for method in config.methods:
        mf = MethodFit(method)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ValidityWarning)
                if method == BAYES:
                    mf.chain = sample_posterior(
                        data, M=config.chain_length, burn_in=config.burn_in, seed=config.seed
                    )
                    mf.report = _chain_report(mf.chain, data.threshold, 1 - config.alpha)
                else:
                    fit = fit_mle(data) if method == ML else fit_gpwm(data)
                    mf.report = _point_report(fit, data.threshold)
                    if not fit.valid:
                        raise ValueError("estimate outside Theta: " + "; ".join(fit.flags))
                    mf.params = fit.params
        except (ValueError, ArithmeticError, NumericalError) as exc:
            mf.error = str(exc)
            mf.report = {**mf.report, "status": "error", "error": str(exc)}
        out.append(mf)
    return out


def _data_header(data: ExcessData, dropped: int, config: RunConfig) -> dict:
    return {
        "n": data.n,
        "k": data.k,
        "threshold": data.threshold,
        "dropped_rows": dropped,
        "alpha": config.alpha,
    }


def cmd_fit(config: RunConfig) -> int:
    data, dropped = load_data(config)
    fits = fit_methods(data, config)
    doc = _data_header(data, dropped, config)
    doc["methods"] = {mf.method: mf.report for mf in fits}
    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_json(config.output_dir / "fit.json", doc)
    return EXIT_OK


# ---------------------------------------------------------------------------
# forecasting


def parse_theta(text: str, index: int) -> tuple[str, GpParams]:
    label, _, rest = text.rpartition("=")
    label = label or f"theta{index}"
    try:
        sigma, gamma = (float(v) for v in rest.split(","))
    except ValueError:
        raise UsageError(f"--theta expects [LABEL=]SIGMA,GAMMA, got {text!r}") from None
    try:
        return label, GpParams(sigma, gamma)
    except ValueError as exc:
        raise UsageError(f"--theta {text!r}: {exc}") from None


def _levels(config: RunConfig):
    """``(c, p)`` pairs: the base level ``p = k/n``, each scaling factor, each direct level."""
    return [(None, None)] + [(c, None) for c in config.c_list] + [(None, p) for p in config.p_list]


def _level_label(c, p):
    if c is not None:
        return format(c, "g")
    return "base" if p is None else "p" + format(p, "g")


def forecast_records(fits, threshold, k, n, config: RunConfig, specs: dict | None = None):
    """Forecast rows for every method and level; ``specs`` collects the predictive specs."""
    records = []
    level = 1 - config.alpha
    for mf in fits:
        for c, p_direct in _levels(config):
            rec = {"method": mf.method, "c": c}
            if mf.error is not None:
                rec["error"] = f"fit failed: {mf.error}"
                records.append(rec)
                continue
            try:
                if mf.chain is not None:
                    chain = mf.chain
                    p = chain_levels(chain, c, k, n) if c is not None else (p_direct or k / n)
                    q = chain_extreme_quantiles(chain, threshold, k, n, p)
                    p_arr = np.broadcast_to(np.asarray(p, dtype=float), q.shape)
                    spec = PredictiveSpec(chain, threshold, k, n, p)
                    rec.update(
                        p=float(np.mean(p_arr)),
                        p_percent=100 * float(np.mean(p_arr)),
                        q_level=float(np.mean(q)),
                    )
                else:
                    g = mf.params.gamma
                    p = extreme_level(c, g, k, n) if c is not None else (p_direct or k / n)
                    spec = PredictiveSpec(mf.params, threshold, k, n, p)
                    rec.update(p=p, p_percent=100 * p, q_level=extreme_quantile(mf.params, threshold, k, n, p))
                pi = predictive_interval(spec, config.alpha, Kind.PEAK)
                rec.update(lower=pi.lower, upper=pi.upper)
                if mf.chain is not None:
                    rec.update(p_ci=list(equal_tailed(p_arr, level)), q_ci=list(equal_tailed(q, level)))
                if specs is not None:
                    specs[(mf.method, _level_label(c, p_direct))] = spec
            except ValueError as exc:
                rec = {"method": mf.method, "c": c, "error": str(exc)}
            records.append(rec)
    return records


def _theta_fits(thetas, threshold) -> list[MethodFit]:
    fits = []
    for i, text in enumerate(thetas, start=1):
        label, params = parse_theta(text, i)
        report = {"status": "ok", "sigma": params.sigma, "gamma": params.gamma,
                  "endpoint": endpoint_estimate(params, threshold)}
        fits.append(MethodFit(label, params=params, report=report))
    return fits


def _forecast_inputs(config: RunConfig, args):
    """Fits plus ``(threshold, k, n, header)``, from data or from injected parameters."""
    if args.theta:
        if args.threshold is None or args.n is None:
            raise UsageError("--theta needs --threshold and --n")
        if args.data is not None:
            raise UsageError("--theta and --data are mutually exclusive")
        fits = _theta_fits(args.theta, float(args.threshold))
        n = int(args.n)
        if not config.k < n:
            raise UsageError("need k < n")
        header = {"n": n, "k": config.k, "threshold": float(args.threshold), "dropped_rows": 0, "alpha": config.alpha}
        return fits, float(args.threshold), config.k, n, header
    data, dropped = load_data(config)
    fits = fit_methods(data, config)
    return fits, data.threshold, data.k, data.n, _data_header(data, dropped, config)


def cmd_forecast(config: RunConfig, args) -> int:
    fits, threshold, k, n, header = _forecast_inputs(config, args)
    specs = {}
    records = forecast_records(fits, threshold, k, n, config, specs)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        **header,
        "source": "theta" if args.theta else "data",
        "fits": {mf.method: mf.report for mf in fits},
        "records": records,
    }
    write_json(config.output_dir / "forecast.json", doc)
    for (method, label), spec in specs.items():
        x, y = density_grid(spec, Kind.PEAK, config.grid_points)
        write_csv(config.output_dir / f"density_{method}_{label}.csv", ["x", "density"], zip(x, y))
    return EXIT_OK


def cmd_hellinger(config: RunConfig, args) -> int:
    """Pairwise Hellinger distances between the methods' peak predictive densities."""
    fits, threshold, k, n, _ = _forecast_inputs(config, args)
    specs = {}
    forecast_records(fits, threshold, k, n, config, specs)
    rows = []
    names = [mf.method for mf in fits]
    for c in (_level_label(*lv) for lv in _levels(config)):
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if (a, c) not in specs or (b, c) not in specs:
                    continue
                rows.append((c, a, b, _spec_hellinger(specs[(a, c)], specs[(b, c)])))
    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(config.output_dir / "hellinger.csv", ["c", "method_a", "method_b", "H"], rows)
    return EXIT_OK


#: posterior mixtures are thinned to this many evenly spaced draws before quadrature
HELLINGER_DRAWS = 500


def _thinned(spec: PredictiveSpec) -> PredictiveSpec:
    if not spec.is_chain or len(spec.theta) <= HELLINGER_DRAWS:
        return spec
    idx = np.linspace(0, len(spec.theta) - 1, HELLINGER_DRAWS).round().astype(int)
    ch = spec.theta
    sub = PosteriorChain(ch.sigma[idx], ch.gamma[idx], ch.log_posts[idx], ch.acceptance_rate, ch.burn_in, ch.seed)
    p = np.asarray(spec.p, dtype=float)
    return PredictiveSpec(sub, spec.threshold, spec.k, spec.n, p[idx] if p.ndim else p)


def _spec_hellinger(sa: PredictiveSpec, sb: PredictiveSpec) -> float:
    sa, sb = _thinned(sa), _thinned(sb)
    edges = np.unique(np.concatenate([support_breakpoints(sa), support_breakpoints(sb)]))
    lower = float(edges[0])
    upper = float(edges[-1]) if _upper_finite(sa) and _upper_finite(sb) else math.inf
    _, sc, _ = _components(sb, Kind.PEAK)
    return hellinger(_mixture_pdf(sa), _mixture_pdf(sb), (lower, upper), breakpoints=edges, scale=float(np.median(sc)))


def _mixture_pdf(spec):
    loc, scale, gamma = _components(spec, Kind.PEAK)

    def pdf(x):
        return float(np.mean(_pdf(x - loc, scale, gamma)))

    return pdf


def _upper_finite(spec):
    gam = spec.theta.gamma
    return bool(np.all(np.asarray(gam) < 0))


# ---------------------------------------------------------------------------
# simulation


def _float_list(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} expects a comma-separated list of numbers") from None


def _oracle(args):
    params = {}
    for item in args.oracle_param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--oracle-param expects KEY=VALUE, got {item!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--oracle-param {item!r}: value must be numeric") from None
    try:
        return make_oracle(args.oracle, **params)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def cmd_contraction(args) -> int:
    oracle = _oracle(args)
    grid = _float_list(args.v_grid, "v-grid")
    try:
        table = contraction_experiment(oracle, grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = [(r.v, r.H, r.absA, r.ratio if math.isfinite(r.ratio) else None) for r in table.rows]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "contraction.csv", ["v", "H", "absA", "ratio"], rows)
    return EXIT_OK


def cmd_coverage(config: RunConfig, args) -> int:
    oracle = _oracle(args)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    if args.n is None:
        raise UsageError("simulate coverage needs --n")
    replicates = int(args.replicates)
    if replicates < 100:
        raise UsageError("coverage experiments need --replicates >= 100")
    levels = list(config.c_list) if args.c_given else [None]
    reports = []
    for method in config.methods:
        for c in levels:
            try:
                rep = simulate_coverage(
                    oracle,
                    int(args.n),
                    config.k,
                    alpha=config.alpha,
                    method=method,
                    replicates=replicates,
                    seed=config.seed,
                    c=c,
                    chain_length=config.chain_length,
                    burn_in=config.burn_in,
                )
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            reports.append(rep.row())
    header = list(reports[0])
    write_csv(config.output_dir / "coverage.csv", header, [[r[h] for h in header] for r in reports])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument handling


def read_config_file(path) -> dict:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; command-line flags win")
    common.add_argument("--data", help="single-column CSV of observations")
    common.add_argument("--k", type=int, help="number of top order statistics")
    common.add_argument("--c", help="comma-separated scaling factors (default 2,3,4)")
    common.add_argument("--alpha", type=float, help="1 - level of the intervals (default 0.05)")
    common.add_argument("--methods", help="comma-separated subset of ML,GPWM,Bayes")
    common.add_argument("--chain-length", type=int, help="posterior draws M (default 20000)")
    common.add_argument("--burn-in", type=int, help="burn-in steps (default M/5)")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--grid-points", type=int, help="density grid size (default 512)")
    common.add_argument("--out", help="output directory (default .)")

    injected = argparse.ArgumentParser(add_help=False)
    injected.add_argument("--p", help="comma-separated direct levels p <= k/n (any gamma)")
    injected.add_argument("--theta", action="append", help="test mode: [LABEL=]SIGMA,GAMMA (repeatable)")
    injected.add_argument("--threshold", type=float, help="test mode: threshold t")
    injected.add_argument("--n", type=int, help="test mode: sample size n")

    parser = argparse.ArgumentParser(prog="potforecast", description="Peaks-over-threshold forecasting with GP models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="fit GP models to threshold excesses")
    sub.add_parser("forecast", parents=[common, injected], help="extreme quantiles, intervals and densities")
    sub.add_parser("hellinger", parents=[common, injected], help="distances between predictive densities")

    sim = sub.add_parser("simulate", parents=[common], help="validation experiments")
    sim.add_argument("experiment", choices=["contraction", "coverage"])
    sim.add_argument("--oracle", default="exact-gp", help="exact-gp, exponential, burr or finite-endpoint")
    sim.add_argument("--oracle-param", action="append", help="KEY=VALUE oracle parameter (repeatable)")
    sim.add_argument("--v-grid", help="contraction: comma-separated v values")
    sim.add_argument("--n", type=int, help="coverage: sample size per replicate")
    sim.add_argument("--replicates", type=int, help="coverage: replicates (>= 100)")
    return parser


_CONFIG_TYPES = {"k": int, "alpha": float, "chain_length": int, "burn_in": int, "seed": int,
                 "grid_points": int, "replicates": int, "n": int, "threshold": float}


def _merge(args, parser):
    file_values = read_config_file(args.config) if args.config else {}
    for key, raw in file_values.items():
        if not hasattr(args, key) or key in ("config", "command", "experiment"):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            try:
                value = _CONFIG_TYPES.get(key, str)(raw)
            except ValueError:
                raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
            setattr(args, key, [value] if key == "theta" else value)
    args.c_given = args.c is not None
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _parse_methods(text):
    out = []
    for name in str(text).split(","):
        name = name.strip()
        if not name:
            continue
        try:
            m = METHOD_NAMES[name.lower()]
        except KeyError:
            raise UsageError(f"unknown method {name!r}; choose from ML, GPWM, Bayes") from None
        if m not in out:
            out.append(m)
    return tuple(out)


def make_config(args) -> RunConfig:
    if args.k is None:
        raise UsageError("--k is required")
    return RunConfig(
        k=args.k,
        c_list=tuple(_float_list(args.c, "c")),
        p_list=tuple(_float_list(getattr(args, "p", None) or "", "p")),
        alpha=args.alpha,
        methods=_parse_methods(args.methods),
        chain_length=args.chain_length,
        burn_in=args.burn_in,
        seed=args.seed,
        grid_points=args.grid_points,
        output_dir=Path(args.out),
        data_path=Path(args.data) if args.data else None,
    )


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge(args, parser)
        if args.command == "simulate" and args.experiment == "contraction":
            return cmd_contraction(args)
        config = make_config(args)
        if args.command == "fit":
            return cmd_fit(config)
        if args.command == "forecast":
            return cmd_forecast(config, args)
        if args.command == "hellinger":
            return cmd_hellinger(config, args)
        return cmd_coverage(config, args)
    except UsageError as exc:
        print(f"potforecast: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"potforecast: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, ExperimentError, ArithmeticError) as exc:
        print(f"potforecast: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"potforecast: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
