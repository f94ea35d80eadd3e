"""Command-line entry point: ``bcd-pep {run,bound,certify,export-sdpa,figure1}``.

Exit codes: 0 success, 1 usage error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _pos_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bcd-pep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run cyclic BCD and write the trace CSV")
    run.add_argument("instance", nargs="?", help="instance file (generated from --n/--p/--seed if omitted)")
    run.add_argument("--N", type=_nonneg_int, required=True, help="last outer index (N+1 cycles)")
    run.add_argument("--n", type=_pos_int, default=100)
    run.add_argument("--p", type=_pos_int, default=2)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", help="trace CSV path (stdout if omitted)")
    run.add_argument("--save-instance", help="also write the instance file here")

    bound = sub.add_parser("bound", help="evaluate the new and the prior bound")
    bound.add_argument("--N", type=_nonneg_int, required=True)
    bound.add_argument("--p", type=_pos_int, required=True)
    bound.add_argument("--Lc", type=_pos_float, default=1.0)
    bound.add_argument("--R", type=float, default=1.0)
    bound.add_argument("--L", type=_pos_float, help="global constant (default p*Lc)")
    bound.add_argument("--Lmax", type=_pos_float, help="default Lc")
    bound.add_argument("--Lmin", type=_pos_float, help="default Lc")

    cert = sub.add_parser("certify", help="verify the dual certificate for (N, p)")
    cert.add_argument("--N", type=_nonneg_int, required=True)
    cert.add_argument("--p", type=_pos_int, required=True)
    cert.add_argument("--tol", type=_pos_float, default=1e-8)
    cert.add_argument("--out", help="write the certificate dump here")

    exp = sub.add_parser("export-sdpa", help="write the certificate SDP in SDPA sparse format")
    exp.add_argument("path", nargs="?")
    exp.add_argument("--N", type=_nonneg_int, required=True)
    exp.add_argument("--p", type=_pos_int, required=True)
    exp.add_argument("--out")

    fig = sub.add_parser("figure1", help="least-squares convergence experiment")
    fig.add_argument("--n", type=_pos_int, default=100)
    fig.add_argument("--p", type=_pos_int, nargs="+", default=[2, 5, 20, 100])
    fig.add_argument("--N", type=_nonneg_int, default=200, help="number of cycles")
    fig.add_argument("--seed", type=int, nargs="+", default=[0])
    fig.add_argument("--tol", type=_pos_float, default=1e-9, help="constraint slack tolerance")
    fig.add_argument("--min-sigma", type=_pos_float, default=1e-3)
    fig.add_argument("--lmin-reading", choices=("min", "max"), default="min")
    fig.add_argument("--gnuplot", action="store_true", help="also write figure1.gp")
    fig.add_argument("--out", default="figure1_out")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    from .bcd import pep_constraint_residuals, run_cyclic_bcd, trace_csv_text, write_trace_csv
    from .problem import load_instance, random_least_squares, save_instance

    if args.instance:
        problem = load_instance(args.instance)
    else:
        if args.n % args.p:
            raise UsageError(f"--p {args.p} does not divide --n {args.n}")
        problem = random_least_squares(args.n, args.p, args.seed)
    if args.save_instance:
        save_instance(problem, args.save_instance)
    trace = run_cyclic_bcd(problem, np.zeros(problem.dim), args.N)
    slacks = pep_constraint_residuals(trace, problem)
    if args.out:
        write_trace_csv(trace, args.out)
    else:
        sys.stdout.write(trace_csv_text(trace))
    print(f"final gap {trace.objective_gaps[-1]:.6e} after {args.N + 1} cycles; "
          f"min constraint slack {slacks.min_full():.3e}", file=sys.stderr)
    return EXIT_OK if slacks.min_full() >= -1e-9 else EXIT_FAILED


def cmd_bound(args: argparse.Namespace) -> int:
    from .bounds import beck_bound, certificate_t, dual_objective, new_bound

    L = args.L if args.L is not None else args.p * args.Lc
    Lmax = args.Lmax if args.Lmax is not None else args.Lc
    Lmin = args.Lmin if args.Lmin is not None else args.Lc
    if args.R < 0:
        raise UsageError("--R must be nonnegative")
    new = new_bound(args.N, args.p, args.Lc, args.R)
    dual = dual_objective(certificate_t(args.N, args.p), args.p, args.Lc, args.R)
    beck = beck_bound(args.N + 1, args.p, Lmax, Lmin, L, args.R)
    print(f"new={new:.17g}")
    print(f"dual(t={certificate_t(args.N, args.p)})={dual:.17g}")
    print(f"beck(k={args.N + 1})={beck:.17g}")
    if new > 0:
        print(f"ratio={beck / new:.17g}")
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    from .certificate import certify, closed_form_diagnostic, write_certificate

    rep = certify(args.N, args.p, args.tol)
    t = rep.schedule.t
    print(f"PSD: {'yes' if rep.verdict.is_psd else 'no'}, "
          f"lambda_min={rep.verdict.min_eigenvalue:.3e} "
          f"(threshold {rep.verdict.threshold:.3e}, margin {rep.verdict.margin:.3e})")
    if rep.t_star is None:
        print(f"t*: infeasible ({rep.infeasible_reason})")
    else:
        approx = Fraction(rep.t_star).limit_denominator(10**6)
        print(f"t*={rep.t_star:.17g} (~{approx}), schedule t={t}, "
              f"t* <= t: {'yes' if rep.t_bound_ok else 'no'}")
    print(f"determinant recursion: max diff {rep.recursion.max_abs_diff:.3e} "
          f"(relative {rep.recursion.max_rel_diff:.3e})")
    diag = closed_form_diagnostic(rep.schedule)
    print(f"candidate closed forms (diagnostic): max relative discrepancy "
          f"{diag.max_relative_discrepancy:.3e}")
    if args.out:
        write_certificate(rep.schedule, rep.matrix.bordered, args.out)
    return EXIT_OK if rep.ok else EXIT_FAILED


def cmd_export_sdpa(args: argparse.Namespace) -> int:
    from .sdpa import build_sdp, write_sdpa

    path = args.out or args.path
    if not path:
        raise UsageError("export-sdpa needs an output path (positional or --out)")
    write_sdpa(build_sdp(args.N, args.p), path)
    return EXIT_OK


def cmd_figure1(args: argparse.Namespace) -> int:
    from .experiment import ExperimentConfig, cmd_figure1 as run_figure

    try:
        config = ExperimentConfig(n=args.n, p_list=tuple(args.p), N=args.N,
                                  seeds=tuple(args.seed), min_sigma=args.min_sigma,
                                  slack_tol=args.tol, l_min_reading=args.lmin_reading,
                                  out_dir=Path(args.out), gnuplot=args.gnuplot)
    except ValueError as exc:
        raise UsageError(f"--p/--n: {exc}") from None
    report = run_figure(config)
    for r in report.results:
        print(f"p={r.p:<4d} seed={r.seed:<4d} final gap={r.gap[-1]:.4e} "
              f"max gap/new={r.summary()['max_gap_over_new']:.3e} "
              f"violations={len(r.violations)} strict={len(r.strict_violations)} "
              f"min slack={r.min_slack_full:.3e}")
    print(f"wrote {len(report.results)} CSV files to {config.out_dir}")
    if not report.ok:
        for p, seed, k in report.violations:
            print(f"VIOLATION p={p} seed={seed} k={k}", file=sys.stderr)
        for p, seed, s in report.slack_failures:
            print(f"SLACK p={p} seed={seed} min={s:.3e}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILED


COMMANDS = {
    "run": cmd_run,
    "bound": cmd_bound,
    "certify": cmd_certify,
    "export-sdpa": cmd_export_sdpa,
    "figure1": cmd_figure1,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bcd-pep {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
