"""Command line entry point: ``gvoco run|sweep|verify|audit``.

Exit codes: 0 success, 1 a checked bound failed, 2 config error,
3 invariant violation, 4 numerical diagnostic.
"""

import argparse
import json
import sys

from . import harness
from .exceptions import ConfigError, InvariantViolation, NumericalDiagnostic

EXIT_BOUND, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERICAL = 1, 2, 3, 4


def _parser():
    parser = argparse.ArgumentParser(prog="gvoco", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="run only this seed")
        p.add_argument("--out", help=f"output directory (default: ${harness.OUT_ENV} or config)")

    common(sub.add_parser("run", help="run every seed of a config"))
    p = sub.add_parser("sweep", help="repeat a config along one axis")
    common(p)
    p.add_argument("--axis", required=True, choices=harness.AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p = sub.add_parser("verify", help="check a regret bound on every seed")
    common(p)
    p.add_argument("--bound", required=True, choices=("thm1", "thm2", "thm5", "thm6", "cor2"))
    p = sub.add_parser("audit", help="count invariant violations")
    common(p, config_required=False)
    p.add_argument("--trace", help="audit an existing trace CSV instead of running")
    return parser


def _print(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=harness._json_default))


def main(argv=None):
    args = _parser().parse_args(argv)
    seeds = [args.seed] if getattr(args, "seed", None) is not None else None
    try:
        if args.command == "audit" and args.trace:
            report = harness.audit_csv(args.trace)
            _print(report)
            return EXIT_INVARIANT if report["violations"] else 0
        if not args.config:
            raise ConfigError("--config or --trace is required")
        cfg = harness.load_config(args.config)
        if args.command == "run" or args.command == "audit":
            summaries = harness.run(cfg, args.out, seeds)
            bad = [s for s in summaries if s["violation_count"]]
            _print([{k: s[k] for k in ("seed", "final_regret", "V_T", "Lhat_max", "Ghat_max",
                                         "violation_count", "first_violation") if k in s}
                    for s in summaries])
            return EXIT_INVARIANT if bad else 0
        if args.command == "sweep":
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --values: {exc}") from exc
            values = [int(v) if v.is_integer() and args.axis == "horizon" else v for v in values]
            rows = harness.sweep(cfg, args.axis, values, args.out, seeds)
            _print([{"value": v, "mean": m, "stderr": harness._clean(se), "n": n} for v, m, se, n in rows])
            return 0
        reports = harness.verify(cfg, args.bound, args.out, seeds)
        _print(reports)
        return 0 if all(r["holds"] for r in reports) else EXIT_BOUND
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation at round {exc.round}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NumericalDiagnostic as exc:
        print(f"numerical diagnostic: {exc} (residual {exc.residual})", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
