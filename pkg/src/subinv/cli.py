"""Command-line entry point: ``subinv optimize|sweep|validate|simulate``.

Exit codes: 0 success, 1 configuration or usage error, 2 a validation check
failed, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .core import InvalidParameterError, Policy
from .optimizer import optimize_monotone
from .scenarios import SHIPPED, ConfigError, emit_csv, load_config, run_sweep
from .simulator import EventStream, estimate_profit, simulate_cycle

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for validation failures here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--config",
        required=True,
        metavar="PATH",
        help=f"scenario file, or a shipped scenario name ({', '.join(SHIPPED)})",
    )
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--seed", type=int, metavar="N", help="Monte Carlo seed")
    p.add_argument("--reps", type=int, metavar="N", help="Monte Carlo replications")
    p.add_argument("--tol", type=float, metavar="X", help="truncation tolerance for fixed cycles")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subinv", description="Two-product substitutable inventory under a capacity constraint.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="optimal (Q1, Q2) for one capacity")
    _add_common(p)
    p.add_argument("--capacity", type=float, metavar="C", help="capacity (default: the file's C_min)")

    p = sub.add_parser("sweep", help="capacity sweep as CSV")
    _add_common(p)
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")

    p = sub.add_parser("validate", help="run every closed form against its reference")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--reps", type=int, default=100_000, metavar="N", help="Monte Carlo replications (0 skips)")

    p = sub.add_parser("simulate", help="Monte Carlo estimate for one policy (first regime and substitution pair)")
    _add_common(p)
    p.add_argument("--Q1", type=int, required=True)
    p.add_argument("--Q2", type=int, required=True)
    p.add_argument("--capacity", type=float, metavar="C", help="capacity (default: the file's C_min)")
    p.add_argument("--trace", metavar="PATH", help="dump the events of the first replication")
    return parser


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {out}: {exc.strerror}") from exc


def _load(args):
    cfg = load_config(args.config)
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError(f"--tol must be positive, got {args.tol:g}")
        cfg = replace(cfg, tol=args.tol)
    if args.reps is not None and args.reps != 0 and args.reps < 2:
        raise ConfigError(f"--reps must be 0 or at least 2, got {args.reps}")
    return cfg


def _cmd_optimize(args) -> int:
    cfg = _load(args)
    C = cfg.C_min if args.capacity is None else args.capacity
    reps = cfg.mc_reps if args.reps is None else args.reps
    seed = cfg.mc_seed if args.seed is None else args.seed
    lines = ["regime,p12,p21,Q1,Q2,profit,evals" + (",mc_mean,mc_stderr" if reps else "")]
    for regime in cfg.regimes:
        for p12, p21 in cfg.substitutions:
            model = cfg.model(C, regime, p12, p21)
            res = optimize_monotone(model)
            line = f"{regime.tag},{p12:g},{p21:g},{res.best.Q1},{res.best.Q2},{res.best_rate:.10g},{res.evaluations}"
            if reps:
                est = estimate_profit(res.best, model.econ, model.demand, regime, reps, seed)
                line += f",{est.mean:.10g},{est.stderr:.10g}"
            lines.append(line)
    _write(f"# C = {C:g}\n" + "\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    rows = run_sweep(cfg, mc_reps=args.reps, mc_seed=args.seed, jobs=args.jobs)
    if args.out is None:
        sys.stdout.buffer.write(emit_csv(rows))
        sys.stdout.flush()
    else:
        emit_csv(rows, args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .validation import run_all

    if args.reps != 0 and args.reps < 2:
        raise ConfigError(f"--reps must be 0 or at least 2, got {args.reps}")
    results = run_all(mc_reps=args.reps)
    report = "\n".join(r.line() for r in results)
    failed = sum(not r.passed for r in results)
    report += f"\n{len(results) - failed}/{len(results)} checks passed\n"
    _write(report, args.out)
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    C = cfg.C_min if args.capacity is None else args.capacity
    regime = cfg.regimes[0]
    p12, p21 = cfg.substitutions[0]
    model = cfg.model(C, regime, p12, p21)
    policy = Policy(args.Q1, args.Q2)
    if not model.constraint.is_feasible(policy.Q1, policy.Q2):
        raise ConfigError(f"policy ({policy.Q1}, {policy.Q2}) violates capacity C={C:g}")
    reps = args.reps or cfg.mc_reps or 10_000
    seed = cfg.mc_seed if args.seed is None else args.seed
    if args.trace:
        try:
            with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("time,kind,product,outcome\n")
                simulate_cycle(policy, model.demand, regime, EventStream.spawn(seed, 1)[0], trace=fh)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {args.trace}: {exc.strerror}") from exc
    est = estimate_profit(policy, model.econ, model.demand, regime, reps, seed)
    _write(
        "regime,p12,p21,Q1,Q2,mc_mean,mc_stderr,reps\n"
        f"{regime.tag},{p12:g},{p21:g},{policy.Q1},{policy.Q2},{est.mean:.10g},{est.stderr:.10g},{reps}\n",
        args.out,
    )
    return EXIT_OK


COMMANDS = {
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
