"""Command-line entry point: ``blindiqp run|bias|oracle|blindness``.

Exit codes: 0 accept (or success), 1 reject, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .gf2 import BitMatrix, BitVector
from .hypothesis import EXPECTED_BIAS, HypothesisParams, run_hypothesis_test
from .mbqc import ExtendedIqpGraph, IncompatibleProgram
from .protocol import PublicInfo, QDistribution, blindness_harness, make_server
from .xprogram import XProgram, bias_empirical, bias_theoretical, exact_distribution, sample

EXIT_ACCEPT, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_program(path: str) -> XProgram:
    return XProgram.parse(_read(path))


def cmd_run(args) -> int:
    params = HypothesisParams(
        n_a=args.na, reps=args.reps, tolerance=args.tolerance, seed=args.seed, confidence=args.confidence
    )
    server = make_server(args.server)
    result = run_hypothesis_test(params, server, exact=args.exact)

    report_path = Path(args.report)
    csv_path = report_path.with_suffix(".csv")
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "seed", "s", "x_tilde", "outcome"])
        for i, (o, s) in enumerate(zip(result.outcomes, result.directions)):
            t = result.transcripts[i] if result.transcripts else None
            writer.writerow([i, t.seed if t else "", str(s), str(t.x_tilde) if t else "", repr(float(o))])
    if args.transcripts and result.transcripts:
        Path(args.transcripts).write_text("".join(t.to_line() + "\n" for t in result.transcripts))

    lo, hi = params.window()
    report = {
        "n_a": params.n_a,
        "n_p": params.n_p,
        "T": params.reps,
        "server": args.server,
        "exact": args.exact,
        "empirical_bias": result.empirical_bias,
        "expected_bias": result.expected_bias,
        "tolerance": params.tolerance,
        "window": [lo, hi],
        "confidence": params.confidence,
        "ci_halfwidth": result.ci_halfwidth,
        "ci_halfwidth_1e-6": result.ci_halfwidth_strict,
        "accept": result.accept,
        "seed": params.seed,
        "per_run_csv": str(csv_path),
    }
    report_path.write_text(json.dumps(report, indent=2) + "\n")

    print(f"server {args.server}, n_a={params.n_a}, n_p={params.n_p}, T={params.reps}, seed={params.seed}")
    print(f"empirical bias  {result.empirical_bias:.4f}")
    print(f"expected bias   {EXPECTED_BIAS:.4f}  (window [{lo:.4f}, {hi:.4f}])")
    print(
        f"Hoeffding half-width {result.ci_halfwidth:.4f} at {params.confidence:g}, "
        f"{result.ci_halfwidth_strict:.4f} at 1-1e-6"
    )
    print("ACCEPT" if result.accept else "REJECT")
    print(f"report: {report_path}  per-run: {csv_path}")
    return EXIT_ACCEPT if result.accept else EXIT_REJECT


def cmd_bias(args) -> int:
    program = _load_program(args.program)
    s = BitVector.parse(args.s)
    if len(s) != program.n_p:
        raise UsageError(f"--s has length {len(s)} but the program has {program.n_p} output qubits")
    print(f"theoretical bias  {bias_theoretical(program, s):.15g}")
    print(f"exact bias        {exact_distribution(program).orthogonal_mass(s):.15g}")
    if args.samples:
        draws = sample(program, args.seed, size=args.samples)
        print(f"empirical bias    {bias_empirical(draws, s):.15g}  ({args.samples} samples)")
    return EXIT_ACCEPT


def cmd_oracle(args) -> int:
    sys.stdout.write(exact_distribution(_load_program(args.program)).format())
    return EXIT_ACCEPT


def cmd_blindness(args) -> int:
    qt = ExtendedIqpGraph.parse(_read(args.qtilde))
    q1 = BitMatrix.parse(_read(args.q1))
    q2 = BitMatrix.parse(_read(args.q2))
    pub = PublicInfo(qt, QDistribution(), math.pi * args.theta)
    report = blindness_harness(pub, q1, q2)
    sys.stdout.write(report.format())
    blind = report.blind(args.tol)
    print("views agree" if blind else "views DIFFER")
    return EXIT_ACCEPT if blind else EXIT_REJECT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blindiqp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="repeated blind delegation with a bias check")
    run.add_argument("--na", type=int, default=7, help="number of program rows (prime, na+1 divisible by 8)")
    run.add_argument("--reps", type=int, default=2000)
    run.add_argument("--tolerance", type=float, default=0.03, help="acceptance half-width around cos^2(pi/8)")
    run.add_argument("--server", default="honest", help="honest, zeros, uniform or fixed:<bits>")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--confidence", type=float, default=0.95, help="confidence for the reported half-width")
    run.add_argument("--exact", action="store_true", help="use exact per-run orthogonality probabilities")
    run.add_argument("--report", default="blindiqp_report.json", help="JSON report path; the CSV sits beside it")
    run.add_argument("--transcripts", help="optional transcript log path")
    run.set_defaults(func=cmd_run)

    bias = sub.add_parser("bias", help="bias of an X-program in a direction")
    bias.add_argument("--program", required=True)
    bias.add_argument("--s", required=True, help="direction as a bit string")
    bias.add_argument("--samples", type=int, default=0)
    bias.add_argument("--seed", type=int, default=0)
    bias.set_defaults(func=cmd_bias)

    oracle = sub.add_parser("oracle", help="print the exact output distribution")
    oracle.add_argument("--program", required=True)
    oracle.set_defaults(func=cmd_oracle)

    blind = sub.add_parser("blindness", help="compare the server's views for two programs")
    blind.add_argument("--qtilde", required=True)
    blind.add_argument("--q1", required=True)
    blind.add_argument("--q2", required=True)
    blind.add_argument("--theta", type=float, default=0.125, help="angle as a multiple of pi")
    blind.add_argument("--tol", type=float, default=1e-12)
    blind.set_defaults(func=cmd_blindness)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, IncompatibleProgram) as exc:
        print(f"blindiqp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
