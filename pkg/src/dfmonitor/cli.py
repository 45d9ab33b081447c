"""
Command-line interface.

Subcommands: ``calibrate``, ``monitor``, ``simulate``, ``reproduce-tables``
and ``validate-kernel``. Every option can also be set in a configuration
file (``--config``) of ``key = value`` lines, optionally under a
``[dfmonitor]`` header; keys use the option names with underscores. A flag
given on the command line beats the file, which beats the built-in default.
"""

import argparse
import configparser
import csv
import json
import math
from pathlib import Path
import sys
import warnings

from .charts import (
    CHART_VARIANTS,
    chart_config,
    get_variant,
    run_chart,
    run_study,
    signal_histogram_export,
)
from .exceptions import ConfigurationError, DFMonitorError
from .innovations import GenSpec, generate, ingest_series
from .kernels import KERNEL_IDS, validate_kernel
from .limits import (
    LIMIT_VARIANTS,
    ClampWarning,
    ControlLimitCurve,
    LimitSimConfig,
    build_curve,
    default_vartheta_grid,
)

__all__ = ["main", "build_parser", "resolve_options", "DEFAULTS", "curve_cache_path"]

CONFIG_SECTION = "dfmonitor"
TABLE1_CHARTS = ("S_hat", "S_hat_t")
TABLE2_CHARTS = ("Z", "Z_t")
FIGURE_RHOS = (0.95, 0.9)


def _alpha(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text}")


def _name_list(choices):
    def parse(text):
        names = [x.strip() for x in str(text).split(",") if x.strip()]
        bad = [n for n in names if n not in choices]
        if bad:
            raise argparse.ArgumentTypeError(
                f"unknown name(s) {', '.join(bad)}; choose from {', '.join(choices)}"
            )
        return names
    return parse


def _flag(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text}")


# option name -> (type used for config values, default)
DEFAULTS = {
    "seed": (_nonneg_int, 0),
    "workers": (_positive_int, 1),
    "alpha": (_alpha, 0.05),
    "T": (_positive_int, 250),
    "kappa": (float, None),
    "h": (float, 25.0),
    "zeta": (float, None),
    "kernel": (str, "gaussian"),
    "reps": (_positive_int, None),
    "calib_reps": (_positive_int, 20000),
    "n_grid": (_positive_int, 1000),
    "grid": (_float_list, None),
    "a": (float, 0.0),
    "ito_limit": (_flag, False),
    "variant": (str, None),
    "chart": (str, "S_hat"),
    "curve": (str, None),
    "limit": (float, None),
    "input": (str, None),
    "format": (str, "csv-single-column"),
    "report": (str, None),
    "out": (str, None),
    "out_dir": (str, "tables"),
    "curve_dir": (str, "curves"),
    "model": (str, "arma11"),
    "rho": (float, 1.0),
    "beta": (float, 0.0),
    "arch_a0": (float, 1.0),
    "arch_b1": (float, 0.3),
    "rho_list": (_float_list, [1.0, 0.98, 0.95, 0.9]),
    "beta_list": (_float_list, [-0.8, -0.5, 0.0, 0.5, 0.8]),
    "charts": (_name_list(tuple(CHART_VARIANTS)), list(TABLE1_CHARTS + TABLE2_CHARTS)),
    "kappa_t": (float, 0.3),
    "lag": (_positive_int, None),
    "nw_squared_gamma": (_flag, False),
    "require_curves": (_flag, False),
    "runs_out": (str, None),
    "quiet": (_flag, False),
}


def _global_options(default):
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("global options")
    g.add_argument("--seed", type=_nonneg_int, default=default, help="master seed (default 0)")
    g.add_argument("--workers", type=_positive_int, default=default,
                   help="worker processes for Monte Carlo work (default 1)")
    g.add_argument("--config", default=default, help="key = value configuration file")
    return parent


def build_parser():
    # global flags are accepted before and after the subcommand; the
    # subcommand copies must not overwrite values given before it
    common = _global_options(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="dfmonitor", parents=[_global_options(None)],
        description="Kernel-weighted Dickey-Fuller control charts for detecting stationarity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def design(p, kappa_help="monitoring start fraction"):
        p.add_argument("--T", type=_positive_int, default=None, help="horizon (default 250)")
        p.add_argument("--kappa", type=float, default=None, help=kappa_help)
        p.add_argument("--h", type=float, default=None, help="bandwidth (default 25)")
        p.add_argument("--kernel", choices=KERNEL_IDS, default=None)
        p.add_argument("--alpha", type=_alpha, default=None, help="level (default 0.05)")

    def nw(p):
        p.add_argument("--lag", type=_positive_int, default=None,
                       help="fixed Newey-West truncation (default: rule of thumb per t)")
        p.add_argument("--nw-squared-gamma", dest="nw_squared_gamma", action="store_const",
                       const=True, default=None,
                       help="square the autocovariances in the Newey-West sum")

    p = sub.add_parser("calibrate", parents=[common],
                       help="simulate the limit law and write a control-limit curve")
    design(p, "monitoring start fraction (default 0.2)")
    p.add_argument("--variant", choices=LIMIT_VARIANTS, default=None,
                   help="limit law: D or D_t_type (default D)")
    p.add_argument("--reps", type=_positive_int, default=None,
                   help="limit replications (default 20000)")
    p.add_argument("--zeta", type=float, default=None, help="T/h (default from --T, --h)")
    p.add_argument("--n-grid", dest="n_grid", type=_positive_int, default=None)
    p.add_argument("--grid", type=_float_list, default=None,
                   help="comma-separated vartheta knots")
    p.add_argument("--a", type=float, default=None, help="local-to-unity parameter")
    p.add_argument("--ito-limit", dest="ito_limit", action="store_const", const=True,
                   default=None,
                   help="drop the -2a term (limit of the statistic as computed)")
    p.add_argument("--out", default=None, help="curve JSON path")

    p = sub.add_parser("monitor", parents=[common], help="run a chart on an observed series")
    design(p, "monitoring start fraction (default per chart)")
    nw(p)
    p.add_argument("--input", default=None, help="series file")
    p.add_argument("--format", choices=("csv-single-column", "ndjson"), default=None)
    p.add_argument("--chart", choices=tuple(CHART_VARIANTS), default=None,
                   help="chart variant (default S_hat)")
    p.add_argument("--curve", default=None, help="control-limit curve JSON")
    p.add_argument("--limit", type=float, default=None, help="constant control limit")
    p.add_argument("--report", default=None, help="also write the JSON report here")
    p.add_argument("--quiet", action="store_const", const=True, default=None,
                   help="omit the per-t rows")

    p = sub.add_parser("simulate", parents=[common], help="generate one synthetic path")
    p.add_argument("--model", choices=("arma11", "local_to_unity", "arch1_innovations"),
                   default=None)
    p.add_argument("--T", type=_positive_int, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--arch-a0", dest="arch_a0", type=float, default=None)
    p.add_argument("--arch-b1", dest="arch_b1", type=float, default=None)
    p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("reproduce-tables", parents=[common],
                       help="run the ARMA(1,1) study and write the result tables")
    design(p, "monitoring start of the non-t-type estimated chart and the Z charts")
    nw(p)
    p.add_argument("--kappa-t", dest="kappa_t", type=float, default=None,
                   help="monitoring start of S_hat_t (default 0.3)")
    p.add_argument("--reps", type=_positive_int, default=None,
                   help="replications per cell (default 2000)")
    p.add_argument("--calib-reps", dest="calib_reps", type=_positive_int, default=None)
    p.add_argument("--n-grid", dest="n_grid", type=_positive_int, default=None)
    p.add_argument("--rho-list", dest="rho_list", type=_float_list, default=None)
    p.add_argument("--beta-list", dest="beta_list", type=_float_list, default=None)
    p.add_argument("--charts", type=DEFAULTS["charts"][0], default=None,
                   help="comma-separated chart variants")
    p.add_argument("--curve-dir", dest="curve_dir", default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--runs-out", dest="runs_out", default=None,
                   help="directory for per-run NDJSON records")
    p.add_argument("--require-curves", dest="require_curves", action="store_const",
                   const=True, default=None,
                   help="fail instead of calibrating missing curves")

    p = sub.add_parser("validate-kernel", parents=[common], help="check K1-K3 for a kernel")
    p.add_argument("--kernel", choices=KERNEL_IDS, default=None)
    return parser


def read_config(path):
    """Flat ``key = value`` mapping from a configuration file."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = f"[{CONFIG_SECTION}]\n" + text
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section != CONFIG_SECTION:
            raise ConfigurationError(f"unknown config section [{section}] in {path}")
        for key, value in parser.items(section):
            values[key.replace("-", "_")] = value
    return values


def resolve_options(args, config=None):
    """Fill unset options from ``config`` and then from :data:`DEFAULTS`."""
    config = dict(config or {})
    unknown = sorted(set(config) - set(DEFAULTS))
    if unknown:
        raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
    for name, (kind, default) in DEFAULTS.items():
        if getattr(args, name, None) is not None:
            continue
        if name in config:
            try:
                value = kind(config[name])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigurationError(f"config key {name}: {exc}") from None
        else:
            value = default
        if hasattr(args, name) or name in ("seed", "workers"):
            setattr(args, name, value)
    return args


def _chart_cfg(args, chart, kappa=None):
    return chart_config(
        chart,
        T=args.T,
        kappa=kappa if kappa is not None else (args.kappa or get_variant(chart).default_kappa),
        h=args.h,
        kernel=args.kernel,
        alpha=args.alpha,
        lag=args.lag,
        nw_squared_gamma=bool(args.nw_squared_gamma),
    )


def _sim_config(args, variant, kappa, reps):
    zeta = getattr(args, "zeta", None) or args.T / args.h
    return LimitSimConfig(n_grid=args.n_grid, reps=reps, kappa=kappa, zeta=zeta,
                          kernel=args.kernel, a=getattr(args, "a", 0.0) or 0.0,
                          a_term=not getattr(args, "ito_limit", False),
                          variant=variant, seed=args.seed)


def cmd_calibrate(args, out):
    variant = args.variant or "D"
    kappa = args.kappa or 0.2
    sim = _sim_config(args, variant, kappa, args.reps or 20000)
    curve = build_curve(args.alpha, variant, args.grid, sim, workers=args.workers)
    print(f"# alpha={curve.alpha} variant={variant} kappa={sim.kappa} zeta={sim.zeta} "
          f"kernel={sim.kernel} reps={sim.reps} seed={sim.seed}", file=out)
    print("vartheta,c,stderr", file=out)
    for v, c, se in curve.knots:
        print(f"{v:.6g},{c:.6g},{se:.3g}", file=out)
    if args.out:
        curve.to_json(args.out)
        print(f"# wrote {args.out}", file=out)
    return 0


def cmd_monitor(args, out):
    if not args.input:
        raise ConfigurationError("monitor needs --input")
    chart = get_variant(args.chart)
    cfg = _chart_cfg(args, chart.id)
    if args.curve:
        limit = ControlLimitCurve.from_json(args.curve)
    elif args.limit is not None:
        limit = args.limit
    else:
        raise ConfigurationError("monitor needs --curve or --limit")
    series = ingest_series(args.input, args.format)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ClampWarning)
        result = run_chart(series, cfg, chart, limit, partial=True)
    traj = result.trajectory
    if not args.quiet:
        print("t,stat,limit,vartheta_hat", file=out)
        for t, s, c, v2 in zip(traj.times, traj.stats, result.limits_used, traj.vartheta2):
            print(f"{int(t)},{s:.6g},{c:.6g},{math.sqrt(v2):.6g}", file=out)
    last_t = int(traj.times[-1])
    if result.signaled:
        print(f"signal at t={result.signal_time} (delay {result.delay})", file=out)
    elif last_t < cfg.T:
        print(f"no signal up to t={last_t} (horizon T={cfg.T})", file=out)
    else:
        print(f"no signal by T={cfg.T}", file=out)
    report = result.report()
    report.update({
        "input": str(args.input),
        "n_observations": len(series),
        "last_t": last_t,
        "kappa": cfg.kappa,
        "h": cfg.h,
        "kernel": cfg.kernel.id,
        "limit_source": "curve" if args.curve else "constant",
        "clamped": sum(1 for w in caught if issubclass(w.category, ClampWarning)),
    })
    text = json.dumps(report)
    print(text, file=out)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_simulate(args, out):
    spec = GenSpec(model=args.model, rho=args.rho, beta=args.beta, a=args.a, T=args.T,
                   seed=args.seed, arch_a0=args.arch_a0, arch_b1=args.arch_b1)
    values = generate(spec).values
    lines = "".join(f"{v!r}\n" for v in values.tolist())
    if args.out:
        Path(args.out).write_text(lines, encoding="utf-8")
        print(f"# wrote {len(values)} values to {args.out}", file=out)
    else:
        out.write(lines)
    return 0


def curve_cache_path(curve_dir, alpha, sim):
    """File name of a cached curve, keyed by everything that determines it."""
    name = (f"curve_{sim.variant}_alpha{alpha:g}_kappa{sim.kappa:g}_zeta{sim.zeta:g}"
            f"_{sim.kernel}_n{sim.n_grid}_reps{sim.reps}_seed{sim.seed}.json")
    return Path(curve_dir) / name


def _cached_curve(args, variant, kappa, out):
    sim = _sim_config(args, variant, kappa, args.calib_reps)
    path = curve_cache_path(args.curve_dir, args.alpha, sim)
    if path.exists():
        return ControlLimitCurve.from_json(path)
    if args.require_curves:
        raise ConfigurationError(
            f"missing curve {path}; run `dfmonitor calibrate --variant {variant} "
            f"--kappa {kappa:g} --alpha {args.alpha:g} --reps {args.calib_reps} "
            f"--seed {args.seed} --out {path}` first"
        )
    print(f"# calibrating {path.name}", file=out)
    curve = build_curve(args.alpha, variant, default_vartheta_grid(), sim,
                        workers=args.workers)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.to_json(path)
    return curve


def _fmt(x, digits=3):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{digits}g}"


_TABLE_FIELDS = (("rate", "rejection_rate"), ("rate_se", "rate_se"), ("carl", "carl"),
                 ("carl_se", "carl_se"), ("arl", "arl"), ("arl_se", "arl_se"))


def _write_table(path, charts, rhos, betas, cells):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["chart", "rho", "quantity"] + [f"beta={b:g}" for b in betas])
        for chart in charts:
            for rho in rhos:
                for label, attr in _TABLE_FIELDS:
                    w.writerow([chart, f"{rho:g}", label]
                               + [_fmt(getattr(cells[chart, rho, b], attr), 4)
                                  for b in betas])


def _print_table(out, title, charts, rhos, betas, cells):
    print(f"\n{title}", file=out)
    print("rho    " + "".join(f"{b:>10g}" for b in betas), file=out)
    for chart in charts:
        print(chart, file=out)
        for rho in rhos:
            ms = [cells[chart, rho, b] for b in betas]
            print(f"{rho:<7g}" + "".join(f"{m.rejection_rate:>10.3f}" for m in ms), file=out)
            if rho != 1:
                print(" " * 7 + "".join(f"{'(' + _fmt(m.carl) + ')':>10}" for m in ms),
                      file=out)
                print(" " * 7 + "".join(f"{'[' + _fmt(m.arl, 4) + ']':>10}" for m in ms),
                      file=out)


def cmd_reproduce_tables(args, out):
    reps = args.reps or 2000
    args.calib_reps = args.calib_reps or 20000
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.runs_out:
        Path(args.runs_out).mkdir(parents=True, exist_ok=True)
    kappa = args.kappa or 0.2
    charts = list(args.charts)
    rhos, betas = list(args.rho_list), list(args.beta_list)
    study_rhos = rhos + [r for r in FIGURE_RHOS if "S_hat" in charts and r not in rhos]

    curves = {}
    cells = {}
    for chart in charts:
        v = get_variant(chart)
        ck = args.kappa_t if chart == "S_hat_t" else kappa
        cfg = _chart_cfg(args, chart, kappa=ck)
        key = (v.limit_variant, ck)
        if key not in curves:
            curves[key] = _cached_curve(args, v.limit_variant, ck, out)
        for rho in (study_rhos if chart == "S_hat" else rhos):
            for beta in betas:
                res = run_study(rho, beta, cfg, v, curves[key], reps, args.seed,
                                workers=args.workers)
                cells[chart, rho, beta] = res.metrics()
                if args.runs_out:
                    name = f"runs_{chart}_rho{rho:g}_beta{beta:g}.ndjson"
                    res.to_ndjson(Path(args.runs_out) / name)

    for name, group, title in (("table1.csv", TABLE1_CHARTS, "estimated control limits"),
                               ("table2.csv", TABLE2_CHARTS, "transformed statistics")):
        chosen = [c for c in group if c in charts]
        if chosen:
            _write_table(out_dir / name, chosen, rhos, betas, cells)
            _print_table(out, f"{title} (rate, (CARL), [ARL]); {reps} reps per cell",
                         chosen, rhos, betas, cells)
            print(f"# wrote {out_dir / name}", file=out)
    if "S_hat" in charts and 0.0 in betas:
        for rho in FIGURE_RHOS:
            m = cells["S_hat", rho, 0.0]
            path = out_dir / f"figure1_rho{rho:g}.csv"
            signal_histogram_export(m, path)
            print(f"# S_hat rho={rho:g}: fraction of delays <= 5: {m.early_fraction(5):.4f}"
                  f"; wrote {path}", file=out)
    return 0


def cmd_validate_kernel(args, out):
    report = validate_kernel(args.kernel)
    for line in report.lines():
        print(line, file=out)
    print("all conditions hold" if report.passed else "kernel violates K1-K3", file=out)
    return 0 if report.passed else 1


COMMANDS = {
    "calibrate": cmd_calibrate,
    "monitor": cmd_monitor,
    "simulate": cmd_simulate,
    "reproduce-tables": cmd_reproduce_tables,
    "validate-kernel": cmd_validate_kernel,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = read_config(args.config) if args.config else {}
        resolve_options(args, config)
        return COMMANDS[args.command](args, out)
    except (DFMonitorError, OSError) as exc:
        print(f"dfmonitor: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
