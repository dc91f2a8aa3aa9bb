"""
Command line harness.

Usage:
  aipp-minmax generate qvm --n 200 --l 10 --k 5 --M 10 --m 1 --seed 1 --out qvm.npz
  aipp-minmax generate trr --libsvm heart.txt --out heart.npz
  aipp-minmax generate trr --synthetic 100 20 --seed 1 --out synth.npz
  aipp-minmax generate pc --N 5 --K 5 --seed 1 --out pc.npz
  aipp-minmax solve qvm.npz --method raipp_s --rho-x 1e-2 --rho-y 1e-1 --out-csv runs.csv --certificate cert.npz
  aipp-minmax verify qvm.npz cert.npz
  aipp-minmax bench resources/bench/desk_scale.toml out/ [--threads 4]

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 solver did not converge
(iteration limit, time limit or penalty divergence).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from .bench import BenchConfig, run_bench
from .config import get_settings
from .core.errors import AippError, DimensionError
from .logger import configure_logging
from .problems import pc_generate, qvm_constraint, qvm_generate, synthetic_libsvm, trr_load
from .problems.qvm import QvmInstance
from .runner import (
    CSV_FIELDS,
    DIRECTIONAL_FIELDS,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_FAILED,
    Method,
    SolveRequest,
    run_method,
)
from .storage import load_instance, save_certificate, save_instance
from .verify import verify_files

logger = logging.getLogger(__name__)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aipp-minmax", description="Smoothing AIPP solvers for nonconvex-concave min-max problems")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Generate a problem instance file")
    fam = gen.add_subparsers(dest="family", required=True)
    qvm = fam.add_parser("qvm", help="Quadratic vector min-max")
    qvm.add_argument("--n", type=int, default=200)
    qvm.add_argument("--l", type=int, default=10)
    qvm.add_argument("--k", type=int, default=5)
    qvm.add_argument("--M", type=float, required=True, help="Largest Hessian eigenvalue target")
    qvm.add_argument("--m", type=float, required=True, help="Weak-convexity target")
    qvm.add_argument("--density", type=float, default=0.05)
    trr = fam.add_parser("trr", help="Truncated robust regression")
    src = trr.add_mutually_exclusive_group(required=True)
    src.add_argument("--libsvm", type=str, metavar="PATH", help="LIBSVM data file")
    src.add_argument("--synthetic", type=int, nargs=2, metavar=("SAMPLES", "FEATURES"), help="Write and load seeded synthetic data")
    trr.add_argument("--alpha", type=float, default=10.0)
    pc = fam.add_parser("pc", help="Power control")
    pc.add_argument("--N", type=int, required=True)
    pc.add_argument("--K", type=int, required=True)
    for p in (qvm, trr, pc):
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--out", type=str, required=True, help="Instance file (.npz)")

    solve = sub.add_parser("solve", help="Solve an instance and append a report row")
    solve.add_argument("instance", type=str)
    solve.add_argument("--method", type=Method, choices=list(Method), default=Method.RAIPP_S)
    solve.add_argument("--rho-x", type=float, required=True)
    solve.add_argument("--rho-y", type=float, required=True)
    solve.add_argument("--eta", type=float, default=None, help="Feasibility tolerance (qp_aipp_s)")
    solve.add_argument("--delta", type=float, default=None, help="Directional-stationarity target")
    solve.add_argument("--time-limit", type=float, default=None, help="Seconds (default from settings)")
    solve.add_argument("--absolute", action="store_true", help="Use ||u|| <= rho_x instead of the relative test")
    solve.add_argument("--constraint-rows", type=int, default=2, help="Random equality rows (qp_aipp_s, QVM only)")
    solve.add_argument("--constraint-seed", type=int, default=0)
    solve.add_argument("--hat-c", type=float, default=0.0)
    solve.add_argument("--strict", action="store_true", help="Restart every penalty round from x0")
    solve.add_argument("--out-csv", type=str, default=None)
    solve.add_argument("--certificate", type=str, default=None, help="Write the certificate here (.npz)")

    ver = sub.add_parser("verify", help="Re-verify a stored certificate")
    ver.add_argument("instance", type=str)
    ver.add_argument("certificate", type=str)
    ver.add_argument("--tol", type=float, default=1e-8)

    bench = sub.add_parser("bench", help="Run a benchmark config and write tables")
    bench.add_argument("config", type=str, help="TOML bench config")
    bench.add_argument("out_dir", type=str)
    bench.add_argument("--threads", type=int, default=None, help="Worker threads (default AIPP_MINMAX_BENCH_THREADS)")
    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.family == "qvm":
        instance = qvm_generate(args.n, args.l, args.k, args.M, args.m, args.density, args.seed)
    elif args.family == "trr":
        if args.libsvm:
            instance = trr_load(args.libsvm, args.alpha)
        else:
            samples, features = args.synthetic
            data = Path(args.out).with_suffix(".libsvm")
            synthetic_libsvm(data, samples, features, seed=args.seed)
            instance = trr_load(data, args.alpha, n_features=features)
    else:
        instance = pc_generate(args.N, args.K, args.seed)
    path = save_instance(args.out, instance)
    print(f"wrote {instance.family} instance {path}")
    return EXIT_OK


def _append_csv(path: Path, row: dict[str, object], directional: bool) -> None:
    fields = CSV_FIELDS + (DIRECTIONAL_FIELDS if directional else [])
    new = not path.exists() or path.stat().st_size == 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        if new:
            writer.writeheader()
        writer.writerow(row)


def _cmd_solve(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    request = SolveRequest(
        method=args.method,
        rho_x=args.rho_x,
        rho_y=args.rho_y,
        eta=args.eta,
        delta=args.delta,
        time_limit=args.time_limit if args.time_limit is not None else get_settings().time_limit,
        relative=not args.absolute,
        hat_c=args.hat_c,
        strict=args.strict,
    )
    constraint = None
    if request.method is Method.QP_AIPP_S:
        if not isinstance(instance, QvmInstance):
            raise ValueError("qp_aipp_s builds its random constraint from a QVM instance")
        constraint = qvm_constraint(instance, args.constraint_rows, args.constraint_seed)
    seed = getattr(instance, "seed", None)
    outcome = run_method(instance, request, constraint, seed=seed)
    row = outcome.row
    print(
        f"{row['method']} {row['family']} {row['dims']}: {row['termination']} "
        f"iters={row['iterations']} acg={row['acg_iterations']} runtime={row['runtime_s']}s "
        f"|u|rel={row['norm_u_rel']} |v|={row['norm_v']}"
    )
    if args.out_csv:
        _append_csv(Path(args.out_csv), row, args.delta is not None)
    if args.certificate:
        if outcome.certificate is None or outcome.meta is None:
            logger.warning("no certificate to write: the solve produced no usable point")
        else:
            save_certificate(
                args.certificate,
                outcome.certificate,
                outcome.meta,
                y0=outcome.y0,  # type: ignore[arg-type]
                constraint=outcome.constraint,
            )
            print(f"wrote certificate {args.certificate}")
    return outcome.exit_code


def _cmd_verify(args: argparse.Namespace) -> int:
    report = verify_files(args.instance, args.certificate, tol=args.tol)
    for line in report.lines():
        print(line)
    if report.passed:
        print("certificate verified")
        return EXIT_OK
    print(f"verification failed: {', '.join(report.failed())}", file=sys.stderr)
    return EXIT_VERIFY_FAILED


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.threads is not None and args.threads < 1:
        raise ValueError("--threads must be at least 1")
    config = BenchConfig.from_toml(args.config)
    tables = run_bench(config, args.out_dir, threads=args.threads)
    failed = [
        f"{r['label']}/{r['method']}"
        for rows in tables.values()
        for r in rows
        if r["termination"] not in ("Converged", "Skipped")
    ]
    for family in tables:
        print(f"wrote {Path(args.out_dir) / (family + '.md')}")
    if failed:
        print(f"cells without convergence: {', '.join(failed)}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for failed verification
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    configure_logging("DEBUG" if args.verbose else get_settings().log_level)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ValueError, DimensionError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AippError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
