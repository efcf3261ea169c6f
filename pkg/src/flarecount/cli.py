"""Command-line interface: ``flarecount {estimate,predict,replay,simulate,check}``.

Exit status: 0 success, 1 usage or parse error, 2 no selected estimator
applies, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

from . import __version__
from .counts import from_events, read_events, read_table, totals, write_events
from .errors import DomainError, InapplicableError, NumericalError, ParseError
from .estimators import ALIASES, ESTIMATORS, estimate_all, resolve
from .predictors import (efron_thisted_new, estimate_curve, mnatsakanian_project,
                         solow_polasky_new, uniform_grid)
from .simulator import (SimConfig, check_holder, parse_mixture, run_experiment,
                        simulate_log)

EXIT_OK, EXIT_USAGE, EXIT_INAPPLICABLE, EXIT_NUMERICAL = 0, 1, 2, 3
HOLDER_FLOOR = -1e-12

MIX_HELP = ("rate mixture: point:V | discrete:V,W;V,W;... (weights sum to 1) | "
            "exp:B | gamma:A,B (shape A, rate B)")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _estimator_list(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    out = []
    for name in names:
        try:
            out.append(resolve(name))
        except KeyError:
            valid = ", ".join(sorted([*ESTIMATORS, *ALIASES]))
            raise argparse.ArgumentTypeError(
                f"unknown estimator {name!r}; valid ids: {valid}") from None
    return out


def _estimator_id(text):
    return _estimator_list(text)[0]


def _mixture(text):
    try:
        return parse_mixture(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(f"{exc}; grammar: {MIX_HELP}") from None


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flarecount", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, default_format="table"):
        p.add_argument("--format", choices=("table", "json", "csv"), default=default_format)
        p.add_argument("-o", "--output", help="write to this file instead of stdout")

    p = sub.add_parser("estimate", help="run the estimator catalogue on a table")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--counts", help="k,count CSV")
    src.add_argument("--events", help="id,time CSV")
    p.add_argument("--T", type=_positive, dest="horizon",
                   help="observation horizon for --events (default: latest event time)")
    p.add_argument("--t", type=_positive, help="truncate --events at this time (default: T)")
    p.add_argument("--estimators", type=_estimator_list,
                   help="comma-separated estimator ids (default: all)")
    p.add_argument("--a", type=int, default=0, help="extra Plackett truncation point")
    p.add_argument("--l", type=int, default=1, help="extra generalized Zelterman limit")
    common(p)

    p = sub.add_parser("predict", help="project a table in time or predict new subjects")
    p.add_argument("--counts", required=True, help="k,count CSV observed at horizon T")
    p.add_argument("--method", required=True,
                   choices=("mnatsakanian", "efron-thisted", "solow-polasky"))
    p.add_argument("--T", type=_positive, dest="horizon", help="horizon of the counts")
    p.add_argument("--t", type=_positive, help="projection time (mnatsakanian)")
    p.add_argument("--tau", type=float, help="further observation time (efron-thisted)")
    p.add_argument("--m", type=int, help="further events (solow-polasky)")
    p.add_argument("--r-max", type=int, help="highest multiplicity to project")
    common(p)

    p = sub.add_parser("replay", help="re-estimate on a growing prefix of an event log")
    p.add_argument("--events", required=True, help="id,time CSV")
    p.add_argument("--T", type=_positive, dest="horizon")
    p.add_argument("--grid", type=int, default=20, help="number of evenly spaced times")
    p.add_argument("--estimator", type=_estimator_id, default="chao-total")
    common(p, "csv")

    p = sub.add_parser("simulate", help="Monte-Carlo experiment under a rate mixture")
    p.add_argument("--n", type=int, required=True, help="population size")
    p.add_argument("--mix", type=_mixture, required=True, help=MIX_HELP)
    p.add_argument("--t", type=_positive, default=1.0, help="observation horizon")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--estimators", type=_estimator_list,
                   default=["ambartsumian", "chao-total", "mle-total", "plackett",
                            "zelterman-total"])
    p.add_argument("--events-out", help="also write replication 0 as an id,time CSV")
    common(p)

    p = sub.add_parser("check", help="verify k p0 pk >= p1 p(k-1) for a mixture")
    p.add_argument("--mix", type=_mixture, required=True, help=MIX_HELP)
    p.add_argument("--t", type=_positive, default=1.0)
    p.add_argument("--kmax", type=int, default=10)
    common(p)
    return parser


def _sig(value):
    return "-" if value is None else f"{value:.4g}"


def _render_rows(header, rows):
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join("" if c is None else (repr(c) if isinstance(c, float) else str(c))
                           for c in r) + "\n")
    return buf.getvalue()


def _json(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_table(args):
    if args.counts is not None:
        table = read_table(args.counts)
        return table, {"kind": "counts", "path": args.counts}
    log = read_events(args.events, args.horizon)
    t = args.t if args.t is not None else log.horizon
    table = from_events(log, t)
    return table, {"kind": "events", "path": args.events, "T": log.horizon, "t": t}


def cmd_estimate(args, out, err):
    table, source = _load_table(args)
    N1, _ = totals(table)
    if N1 == 0:
        err.write("flarecount: empty table\n")
        return EXIT_INAPPLICABLE
    report = estimate_all(table, args.estimators, a=args.a, l=args.l)
    if args.format == "json":
        out.write(_json({"tool": "flarecount", "version": __version__, "command": "estimate",
                         "source": source, "table": {str(k): v for k, v in table.nonzero().items()},
                         **report.to_dict()}))
    else:
        header = ["estimator", "target", "bound", "value", "variance"]
        rows = [[e.estimator, e.target.value, e.bound.value, e.value, e.variance]
                for e in report.estimates]
        if args.format == "csv":
            out.write(_csv(header, rows))
        else:
            out.write(_render_rows(header, [r[:3] + [_sig(r[3]), _sig(r[4])] for r in rows]))
            for name, reason in report.inapplicable.items():
                out.write(f"not applicable: {name} ({reason})\n")
            if report.heterogeneity is not None:
                seq = ", ".join(_sig(v) for v in report.heterogeneity.sequence)
                out.write(f"heterogeneity k*n_k/n_(k-1): [{seq}] "
                          f"trend {_sig(report.heterogeneity.trend)}\n")
    if not report.estimates:
        err.write("flarecount: no selected estimator applies to this table\n")
        return EXIT_INAPPLICABLE
    return EXIT_OK


def cmd_predict(args, out, err):
    table = read_table(args.counts)
    if args.method == "solow-polasky":
        if args.m is None:
            raise UsageError("--m is required for solow-polasky")
        pred = solow_polasky_new(table, args.m)
        return _scalar(args, out, pred, {"m": args.m})
    if args.horizon is None:
        raise UsageError(f"--T (horizon) is required for {args.method}")
    if args.method == "efron-thisted":
        if args.tau is None:
            raise UsageError("--tau is required for efron-thisted")
        pred = efron_thisted_new(table, args.horizon, args.tau)
        return _scalar(args, out, pred, {"T": args.horizon, "tau": args.tau})
    if args.t is None:
        raise UsageError("--t is required for mnatsakanian")
    proj = mnatsakanian_project(table, args.horizon, args.t, args.r_max)
    if proj.unstable:
        err.write("flarecount: warning: extrapolation beyond 2T is unstable\n")
    rows = [[r, v] for r, v in proj.counts.items()]
    if args.format == "json":
        out.write(_json({"tool": "flarecount", "version": __version__, "command": "predict",
                         "method": "mnatsakanian", "T": args.horizon, "t": args.t,
                         "projected": {str(r): v for r, v in proj.counts.items() if r >= 1},
                         "unseen_increment": proj.unseen_increment,
                         "unstable": proj.unstable}))
    elif args.format == "csv":
        out.write(_csv(["r", "value"], rows))
    else:
        out.write(_render_rows(["r", "n_r(t)"], [[r, _sig(v)] for r, v in rows[1:]]))
        out.write(f"unseen increment: {_sig(proj.unseen_increment)}\n")
    return EXIT_OK


def _scalar(args, out, pred, params):
    if args.format == "json":
        out.write(_json({"tool": "flarecount", "version": __version__, "command": "predict",
                         "method": pred.method, "params": params, "value": pred.value,
                         "unstable": pred.unstable, "notes": list(pred.notes)}))
    elif args.format == "csv":
        out.write(_csv(["method", "value"], [[pred.method, pred.value]]))
    else:
        out.write(f"{pred.method}: {_sig(pred.value)}\n")
        for note in pred.notes:
            out.write(f"note: {note}\n")
    return EXIT_OK


def cmd_replay(args, out, err):
    log = read_events(args.events, args.horizon)
    curve = estimate_curve(log, uniform_grid(log.horizon, args.grid), args.estimator)
    if curve.gaps:
        err.write(f"flarecount: warning: {len(curve.gaps)} of {len(curve.points)} grid points "
                  f"have no {args.estimator} estimate\n")
    if args.format == "csv":
        out.write(curve.to_csv())
    elif args.format == "json":
        out.write(_json({"tool": "flarecount", "version": __version__, "command": "replay",
                         "source": {"path": args.events, "T": log.horizon},
                         "estimator": args.estimator, "axis": curve.axis,
                         "points": [{"x": p.x, "value": p.value, "gap_reason": p.reason}
                                    for p in curve.points]}))
    else:
        out.write(_render_rows(["t", args.estimator],
                               [[_sig(p.x), _sig(p.value)] for p in curve.points]))
    return EXIT_OK


def cmd_simulate(args, out, err):
    if args.n < 1 or args.reps < 1:
        raise UsageError("--n and --reps must be positive")
    config = SimConfig(args.n, args.t, args.mix, args.reps, args.seed)
    if args.events_out:
        with open(args.events_out, "w", encoding="utf-8", newline="") as fh:
            write_events(simulate_log(config, 0), fh)
    report = run_experiment(config, args.estimators)
    if args.format == "json":
        out.write(report.to_json())
        return EXIT_OK
    header = ["estimator", "target", "bound", "mean", "sd", "mean_truth", "violation",
              "applicable"]
    rows = [[r.estimator, r.target, r.bound, r.mean, r.sd, r.mean_truth,
             r.violation_fraction, r.applicable] for r in report.rows]
    if args.format == "csv":
        out.write(_csv(header, rows))
    else:
        out.write(f"N={args.n} mix={args.mix.describe()} T={args.t} reps={args.reps} "
                  f"seed={args.seed}\nmean true unseen: {_sig(report.mean_unseen)}\n")
        out.write(_render_rows(header, [r[:3] + [_sig(v) for v in r[3:7]] + [r[7]]
                                        for r in rows]))
    return EXIT_OK


def cmd_check(args, out, err):
    margins = check_holder(args.mix, args.t, args.kmax)
    ok = all(m >= HOLDER_FLOOR for _, m in margins)
    verdict = "PASS" if ok else "FAIL"
    if args.format == "json":
        out.write(_json({"tool": "flarecount", "version": __version__, "command": "check",
                         "mixture": args.mix.describe(), "t": args.t, "floor": HOLDER_FLOOR,
                         "margins": {str(k): m for k, m in margins}, "result": verdict}))
    elif args.format == "csv":
        out.write(_csv(["k", "margin"], margins))
    else:
        out.write(_render_rows(["k", "k*p0*pk - p1*p(k-1)"], [[k, f"{m:.6e}"] for k, m in margins]))
        out.write(f"{verdict} (floor {HOLDER_FLOOR:g})\n")
    return EXIT_OK if ok else EXIT_NUMERICAL


COMMANDS = {"estimate": cmd_estimate, "predict": cmd_predict, "replay": cmd_replay,
            "simulate": cmd_simulate, "check": cmd_check}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf, stderr)
    except UsageError as exc:
        parser.print_usage(stderr)
        stderr.write(f"flarecount: error: {exc}\n")
        return EXIT_USAGE
    except (ParseError, DomainError, OSError) as exc:
        stderr.write(f"flarecount: error: {exc}\n")
        return EXIT_USAGE
    except InapplicableError as exc:
        stderr.write(f"flarecount: not applicable: {exc}\n")
        return EXIT_INAPPLICABLE
    except NumericalError as exc:
        stderr.write(f"flarecount: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
