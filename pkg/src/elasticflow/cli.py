"""Command-line entry point: ``elasticflow {simulate,gap,verify,experiment,fit}``.

Exit codes: 0 success, 1 a checked identity or bound failed, 2 usage or
configuration error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import dumps, plot_data, write_outputs
from .experiments import EXPERIMENTS, BoundViolation, THREADS_ENV, default_workers, fit_decay_rate, run_batch
from .flow import ConfigError, FlowConfig, FlowError, TimeSeries, run
from .geometry import GeometryError, parse_curve_spec
from .spectral_theory import gap_table, lattice_gap
from .verification import INEQUALITIES, check_quadratic_expansion, identity_suite, inequality_probe

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_CURVE = "perturbed:omega=1,m=2,eps=1e-3"


class UsageError(Exception):
    pass


def _read_json(path, what):
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise UsageError(f"{what} file not found: {path}") from None
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {what} file {path}: {exc}") from None


def _parse_json_arg(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON for {what}: {exc}") from None


def _curve(spec, n=None, seed=None):
    if spec.strip().lower() == "random" and seed is not None:
        spec = f"random:{seed}"
    try:
        return parse_curve_spec(spec, n)
    except FileNotFoundError as exc:
        raise UsageError(f"curve file not found: {exc.filename}") from None
    except (GeometryError, ValueError) as exc:
        raise UsageError(f"bad curve spec {spec!r}: {exc}") from None


def _emit(obj):
    sys.stdout.write(dumps(obj))


# -- simulate ------------------------------------------------------------------------


def cmd_simulate(args):
    data = _read_json(args.config, "config") if args.config else {}
    if not isinstance(data, dict):
        raise UsageError(f"config file {args.config} must hold a JSON object")
    try:
        config = FlowConfig.from_dict(data)
    except (ConfigError, TypeError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    curve = _curve(args.curve, args.n or config.n_samples)
    status, error = EXIT_OK, None
    try:
        series = run(curve, config)
    except FlowError as exc:
        series, status, error = exc.series, EXIT_FAIL, str(exc)
    summary = {"curve": args.curve, "config": config.to_dict(), "meta": series.meta, "records": len(series),
               "error": error}
    if len(series):
        summary["final"] = dict(zip(("t", "L", "E", "Kosc", "e"), (float(x) for x in series.records[-1].row()[:5])))
    files = {"series.csv": series.to_csv(), "summary.json": dumps(summary)}
    if series.snapshots:
        files["snapshots.json"] = dumps(series.snapshots)
    if args.out:
        if not args.no_plots and len(series) > 1:
            from .plotting import decay_figure

            files["decay.png"] = decay_figure(series, columns=("e", "Kosc", "ks2"), title=args.curve)
        write_outputs(args.out, files, {"curve": args.curve, "n": args.n, "flow": config.to_dict()})
    _emit(summary)
    return status


# -- gap -----------------------------------------------------------------------------


def _range(text):
    lo, sep, hi = text.partition("..")
    try:
        lo, hi = int(lo), int(hi) if sep else int(lo)
    except ValueError:
        raise UsageError(f"--table expects W1..W2 with integers, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise UsageError(f"--table range must satisfy 1 <= W1 <= W2, got {text!r}")
    return range(lo, hi + 1)


def cmd_gap(args):
    if args.omega is None and args.table is None:
        raise UsageError("gap needs --omega W or --table W1..W2")
    omegas = _range(args.table) if args.table else [args.omega]
    try:
        reports = gap_table(omegas, args.n_max) if args.table else [lattice_gap(args.omega, args.n_max)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "text":
        head = f"{'omega':>6} {'lambda_omega':>22} {'argmin':>7} {'delta':>22} {'mu':>22}"
        print(head)
        for r in reports:
            print(f"{r.omega:>6d} {r.lambda_omega:>22.17g} {r.argmin_n:>7d} {r.delta_omega:>22.17g} {r.mu_omega:>22.17g}")
    else:
        out = [r.to_dict() for r in reports]
        _emit(out if args.table else out[0])
    if args.plot:
        from .artifacts import atomic_write
        from .plotting import gap_figure

        atomic_write(args.plot, gap_figure(reports))
    return EXIT_OK


# -- verify --------------------------------------------------------------------------


def cmd_verify(args):
    if args.suite == "identities":
        curve = _curve(args.curve, args.n, args.seed)
        reports = [r.to_dict() for r in identity_suite(curve, label=args.curve)]
        passed = all(r["passed"] for r in reports)
        out = {"suite": "identities", "curve": args.curve, "reports": reports, "passed": passed}
    elif args.suite == "expansion":
        modes = _parse_json_arg(args.modes, "--modes") if args.modes else None
        if isinstance(modes, dict):
            modes = {int(k): float(v) for k, v in modes.items()}
        probe = check_quadratic_expansion(args.omega, modes, args.eps, n_samples=args.n or 256)
        ok_exp = probe.conclusive and abs(probe.exponent - 3) <= 0.3
        ok_ledger = max(probe.ledger_rel_error) <= 0.01
        passed = bool(ok_ledger and probe.sign_checks_ok and (ok_exp or not args.require_cubic))
        out = {"suite": "expansion", "probe": probe.to_dict(), "cubic_scaling": ok_exp, "passed": passed}
    else:
        seeds = range(args.seed or 0, (args.seed or 0) + args.samples)
        which = INEQUALITIES if args.inequality == "all" else [args.inequality]
        reports = [inequality_probe(w, args.omega, args.n or 64, seeds) for w in which]
        passed = all(r["passed"] for r in reports)
        out = {"suite": "inequalities", "reports": reports, "passed": passed}
    _emit(out)
    return EXIT_OK if out["passed"] else EXIT_FAIL


# -- experiment ----------------------------------------------------------------------


def _experiment_kwargs(name, params):
    if not isinstance(params, dict):
        raise UsageError("--params must be a JSON object (or a list of objects)")
    kwargs = dict(params)
    kwargs.pop("seed", None)
    if "config" in kwargs:
        try:
            kwargs["config"] = FlowConfig.from_dict(kwargs["config"])
        except (ConfigError, TypeError) as exc:
            raise UsageError(f"invalid config in --params: {exc}") from None
    if "offset" in kwargs:
        kwargs["offset"] = tuple(kwargs["offset"])
    if name == "unrescaled":
        kwargs["curve"] = _curve(kwargs.get("curve", "ellipse:1.1,1.0"))
    return kwargs


def _unpack(name, result):
    if name == "main_theorem":
        series, verdict = result
        fits = {k[:-4]: v for k, v in verdict.items() if k.endswith("_fit")}
        return series, verdict, fits
    if name == "unrescaled":
        return result[0], result[1], {}
    series, fit, verdict = result
    return series, verdict, {fit.column: fit.to_dict()}


class _FitView:
    def __init__(self, d):
        self.column, self.rate, self.conclusive, self.window = d["column"], d["rate"], d["conclusive"], d["window"]


def _write_experiment(out, name, params, series, verdict, fits, plots=True):
    files = {"series.csv": series.to_csv(), "verdict.json": dumps(verdict), "plot_data.txt": plot_data(series)}
    if plots:
        from .plotting import decay_figure

        files["decay.png"] = decay_figure(series, fits={k: _FitView(v) for k, v in fits.items()}, title=name)
    write_outputs(out, files, {"experiment": name, "params": params}, seed=params.get("seed"))


def cmd_experiment(args):
    raw = _parse_json_arg(args.params, "--params") if args.params else {}
    jobs_params = raw if isinstance(raw, list) else [raw]
    jobs = [(args.name, _experiment_kwargs(args.name, p)) for p in jobs_params]
    status = EXIT_OK
    verdicts = []
    if len(jobs) > 1:
        try:
            results = run_batch(jobs, args.workers)
        except (BoundViolation, FlowError) as exc:
            _emit({"experiment": args.name, "error": str(exc)})
            return EXIT_FAIL
    else:
        results = [None]
    for i, (job, params) in enumerate(zip(jobs, jobs_params)):
        out = Path(args.out) / f"job{i:03d}" if len(jobs) > 1 else Path(args.out)
        try:
            series, verdict, fits = _unpack(args.name, results[i] if len(jobs) > 1 else EXPERIMENTS[job[0]](**job[1]))
        except BoundViolation as exc:
            verdict = exc.report
            series, fits = None, {}
            status = EXIT_FAIL
        except FlowError as exc:
            series, verdict, fits = exc.series, {"experiment": args.name, "error": str(exc), "passed": False}, {}
            status = EXIT_FAIL
        except (ValueError, GeometryError) as exc:
            raise UsageError(f"experiment {args.name}: {exc}") from None
        if not verdict.get("passed", False):
            status = EXIT_FAIL
        if series is not None:
            _write_experiment(out, args.name, params, series, verdict, fits, not args.no_plots)
        else:
            write_outputs(out, {"verdict.json": dumps(verdict)}, {"experiment": args.name, "params": params})
        verdicts.append(verdict)
    _emit(verdicts if len(jobs) > 1 else verdicts[0])
    return status


# -- fit -----------------------------------------------------------------------------


def cmd_fit(args):
    try:
        text = Path(args.csv).read_text()
    except FileNotFoundError:
        raise UsageError(f"time-series file not found: {args.csv}") from None
    try:
        series = TimeSeries.from_csv(text)
    except (ValueError, StopIteration) as exc:
        raise UsageError(f"cannot parse {args.csv} as a time series: {exc}") from None
    if args.column not in ("a",) + tuple(series.records[0].__dataclass_fields__) + ("lambda",):
        raise UsageError(f"unknown column {args.column!r}")
    window = tuple(args.window) if args.window else None
    fit = fit_decay_rate(series, args.column, window, args.floor)
    _emit(fit.to_dict())
    return EXIT_OK if fit.conclusive else EXIT_FAIL


# -- parser --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="elasticflow", description="Rescaled elastic flow of closed plane curves.", formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a flow and write the diagnostics time series", formatter_class=fmt)
    s.add_argument("--config", help="FlowConfig JSON file (missing keys take their defaults)")
    s.add_argument("--curve", default=DEFAULT_CURVE, help="initial curve spec, e.g. ellipse:2,1 or file:curve.json")
    s.add_argument("--n", type=int, help="number of samples (overrides the config)")
    s.add_argument("--out", help="output directory for series.csv, summary.json, figures and manifest")
    s.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gap", help="lattice spectral gap for given turning numbers", formatter_class=fmt)
    g.add_argument("--omega", type=int, help="turning number")
    g.add_argument("--n-max", type=int, help="largest lattice index scanned (default max(2 omega, 4))")
    g.add_argument("--table", help="range W1..W2 of turning numbers")
    g.add_argument("--format", choices=("json", "text"), default="json", help="output format")
    g.add_argument("--plot", help="write a PNG of the gap against omega to this path")
    g.set_defaults(func=cmd_gap)

    v = sub.add_parser("verify", help="identity, expansion and inequality checks", formatter_class=fmt)
    v.add_argument("--suite", choices=("identities", "expansion", "inequalities"), default="identities",
                   help="which suite to run")
    v.add_argument("--curve", default="ellipse:2,1", help="curve spec for the identity suite")
    v.add_argument("--n", type=int, help="samples (identities: curve default; expansion 256; inequalities 64)")
    v.add_argument("--seed", type=int, default=0, help="seed for random curves and sample families")
    v.add_argument("--omega", type=int, default=1, help="turning number (expansion, inequalities)")
    v.add_argument("--modes", help='expansion modes as JSON, e.g. \'{"2": 1, "4": 0.1}\' or 2 (default: 2 and 4)')
    v.add_argument("--eps", type=float, nargs="+", default=[1e-2, 5e-3, 2.5e-3], help="decreasing amplitude ladder")
    v.add_argument("--require-cubic", action="store_true", help="fail unless the residual exponent is 3 +- 0.3")
    v.add_argument("--inequality", choices=INEQUALITIES + ("all",), default="all", help="inequality to probe")
    v.add_argument("--samples", type=int, default=1000, help="size of the inequality sample family")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="run a decay experiment", formatter_class=fmt)
    e.add_argument("--name", choices=sorted(EXPERIMENTS), required=True, help="experiment")
    e.add_argument("--params", help="JSON object of keyword arguments; a JSON list runs a batch")
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--workers", type=int, default=None,
                   help=f"parallel batch workers (default from ${THREADS_ENV}, else 1)")
    e.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    e.set_defaults(func=cmd_experiment)

    f = sub.add_parser("fit", help="exponential decay rate of a time-series column", formatter_class=fmt)
    f.add_argument("--csv", required=True, help="series.csv written by simulate or experiment")
    f.add_argument("--column", default="e", help="column name (or 'a' for the translation amplitude)")
    f.add_argument("--window", type=float, nargs=2, metavar=("T_A", "T_B"), help="fit window")
    f.add_argument("--floor", type=float, default=1e-12, help="ignore samples at or below this magnitude")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"elasticflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, GeometryError) as exc:
        print(f"elasticflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FlowError as exc:
        print(f"elasticflow {args.command}: flow failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
