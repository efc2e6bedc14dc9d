"""Command-line entry point: ``latticejl {gen,embed,certify,search-lambda,bench}``.

Exit codes: 0 certified, 1 certification failed, 2 usage error, 3 internal error.
Artifacts are deterministic; wall-clock timings only go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import product
from pathlib import Path

from . import embedder
from .errors import (
    CertificationFailed,
    DuplicateOutput,
    EpsilonOutOfRange,
    InfeasibleInstance,
    LambdaSearchExhausted,
    LatticeError,
    ProjectionNotFound,
    RotationNotFound,
    SchemaError,
)
from .jl_projection import FAMILIES
from .lattice_core import LatticeParams, LatticePointSet, sample_point_set
from .rotation_search import DEFAULT_GRID_BUDGET

log = logging.getLogger("latticejl")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

BENCH_HEADER = [
    "n", "dim", "lambda0", "epsilon", "k", "seed", "status", "lambda",
    "naive_min_ratio", "naive_max_ratio", "naive_passed", "naive_max_rounding",
    "pipeline_min_ratio", "pipeline_max_ratio", "lower_bound", "upper_bound",
]


class UsageError(Exception):
    pass


def parse_rational(text: str) -> Fraction:
    """Exact rational from ``"1/5"`` or ``"0.2"``; binary floats never enter."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational number") from exc
    return value


def _even_k(text: str) -> int:
    k = int(text)
    if k < 2 or k % 2:
        raise argparse.ArgumentTypeError(f"--k {k} must be a positive even integer (block rotations pair coordinates)")
    return k


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _rational_list(text: str) -> list[Fraction]:
    return [parse_rational(v) for v in text.split(",") if v.strip()]


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc


def _config(args, lambda0: int) -> embedder.EmbedConfig:
    eps = args.epsilon
    try:
        LatticeParams(lambda0, 1, 1, eps)
    except EpsilonOutOfRange as exc:
        raise UsageError(str(exc)) from exc
    return embedder.EmbedConfig(
        epsilon=eps,
        k=args.k,
        c_override=args.c_const,
        seed=args.seed,
        max_attempts=args.max_attempts,
        grid_budget=args.grid_budget,
        max_lambda=args.max_lambda,
        projection=args.projection,
    )


def _summary(result, report) -> str:
    verdict = "PASS" if report.passed else "FAIL"
    return (
        f"{len(result.input)} {result.k} {result.lam} {report.min_ratio:.12f} "
        f"{report.max_ratio:.12f} {report.upper_bound} {verdict}"
    )


def cmd_gen(args) -> int:
    S = sample_point_set(args.n, args.dim, args.lambda0, args.bound, args.seed)
    _write(args.out, _dumps(S.to_dict()))
    return EXIT_OK


def cmd_embed(args) -> int:
    S = LatticePointSet.from_dict(_load(args.inp))
    config = _config(args, S.lambda0)
    started = time.perf_counter()
    if args.lam is not None:
        result = embedder.embed(S, args.lam, config)
    else:
        _, result = embedder.search_lambda(S, config)
    report = embedder.certify(result)
    log.info("embed finished in %.3fs", time.perf_counter() - started)
    _write(args.out, _dumps(result.to_dict()))
    if args.report:
        _write(args.report, _dumps(report.to_dict()))
    print(_summary(result, report))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_certify(args) -> int:
    result = embedder.EmbeddingResult.from_dict(_load(args.inp))
    try:
        report = embedder.certify(result)
    except DuplicateOutput as exc:
        worst = [list(exc.pair)] if exc.pair else []
        _write(args.out, _dumps({"passed": False, "error": "DuplicateOutput", "worst_pairs": worst}))
        return EXIT_FAIL
    _write(args.out, _dumps(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_FAIL


def _bench_cell(cell: tuple) -> dict:
    n, dim, lambda0, eps, k, seed, bound, lam, instance, base = cell
    row = {"n": n, "dim": dim, "lambda0": lambda0, "epsilon": str(eps), "k": k if k else "", "seed": seed}
    timings = {}
    try:
        if instance is None:
            S = sample_point_set(n, dim, lambda0, bound, seed)
        else:
            S = LatticePointSet.from_dict(instance)
        config = embedder.EmbedConfig(eps, k=k or None, seed=seed, **base)
        started = time.perf_counter()
        if lam is None:
            lam, result = embedder.search_lambda(S, config)
        else:
            result = embedder.embed(S, lam, config)
        timings["pipeline"] = time.perf_counter() - started
        report = embedder.certify(result)
        started = time.perf_counter()
        naive = embedder.naive_baseline(S, result.projection, lam, eps)
        timings["naive"] = time.perf_counter() - started
        row.update(
            status="PASS" if report.passed else "FAIL",
            k=result.k,
            **{
                "lambda": lam,
                "naive_min_ratio": f"{naive.min_ratio:.12f}",
                "naive_max_ratio": f"{naive.max_ratio:.12f}",
                "naive_passed": naive.passed,
                "naive_max_rounding": f"{naive.max_rounding:.12f}",
                "pipeline_min_ratio": f"{report.min_ratio:.12f}",
                "pipeline_max_ratio": f"{report.max_ratio:.12f}",
                "lower_bound": str(report.lower_bound),
                "upper_bound": str(report.upper_bound),
            },
        )
    except (LatticeError, ValueError) as exc:
        row["status"] = "ERROR"
        timings["error"] = f"{type(exc).__name__}: {exc}"
    return {"row": row, "timings": timings}


def cmd_bench(args) -> int:
    base = {
        "c_override": args.c_const,
        "max_attempts": args.max_attempts,
        "grid_budget": args.grid_budget,
        "max_lambda": args.max_lambda,
        "projection": args.projection,
    }
    ks = args.ks or [0]
    instance = None
    if args.inp is not None:
        instance = _load(args.inp)
        S = LatticePointSet.from_dict(instance)
        args.ns, args.dims, args.lambda0s = [len(S)], [S.dim], [S.lambda0]
    elif not (args.ns and args.dims and args.lambda0s):
        raise UsageError("bench needs --n, --dim and --lambda0 unless --in is given")
    cells = []
    for n, dim, lambda0, eps, k, seed in product(args.ns, args.dims, args.lambda0s, args.epsilons, ks, args.seeds):
        if not 0 < eps < Fraction(1, lambda0 + 1):
            raise UsageError(f"epsilon={eps} must lie strictly inside (0, 1/{lambda0 + 1}) for lambda0={lambda0}")
        cells.append((n, dim, lambda0, eps, k, seed, args.bound, args.lam, instance, base))
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            outcomes = list(pool.map(_bench_cell, cells))
    else:
        outcomes = [_bench_cell(c) for c in cells]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_HEADER, lineterminator="\n", restval="")
    writer.writeheader()
    failed = False
    for cell, outcome in zip(cells, outcomes):
        writer.writerow(outcome["row"])
        failed |= outcome["row"]["status"] != "PASS"
        if args.timings:
            log.info("cell %s %s", cell[:6], outcome["timings"])
    _write(args.csv, buf.getvalue())
    return EXIT_FAIL if failed else EXIT_OK


def _add_pipeline_flags(p: argparse.ArgumentParser, single_epsilon: bool = True):
    if single_epsilon:
        p.add_argument("--epsilon", type=parse_rational, required=True, help='distortion budget, e.g. "1/5"')
    p.add_argument("--k", type=_even_k, default=None, help="target dimension (even); default from the JL bound")
    p.add_argument("--c-const", type=float, default=None, help="override constant c in k = c ln n / eps^2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-lambda", type=int, default=256)
    p.add_argument("--max-attempts", type=int, default=64)
    p.add_argument("--grid-budget", type=int, default=DEFAULT_GRID_BUDGET)
    p.add_argument("--projection", choices=FAMILIES, default="rademacher")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latticejl", description="Certified lattice-to-lattice JL embeddings.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a random lattice point set")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--lambda0", type=int, required=True)
    g.add_argument("--bound", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    helps = {
        "embed": "embed a point set at a given or searched lambda and certify it",
        "search-lambda": "search the smallest certifiable lambda and embed",
    }
    for name, text in helps.items():
        e = sub.add_parser(name, help=text)
        e.add_argument("--in", dest="inp", required=True)
        e.add_argument("--out", default=None, help="embedding result JSON")
        e.add_argument("--report", default=None, help="distortion report JSON")
        e.add_argument("--lambda0", type=int, default=None, help="must match the input file if given")
        if name == "embed":
            e.add_argument("--lambda", dest="lam", type=int, default=None)
        _add_pipeline_flags(e)
        e.set_defaults(func=cmd_embed, lam=None)

    c = sub.add_parser("certify", help="re-certify a stored embedding result")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_certify)

    b = sub.add_parser("bench", help="sweep a parameter grid, compare naive rounding with the pipeline")
    b.add_argument("--in", dest="inp", default=None, help="fixed point-set file instead of sampled instances")
    b.add_argument("--n", dest="ns", type=_int_list, default=None)
    b.add_argument("--dim", dest="dims", type=_int_list, default=None)
    b.add_argument("--lambda0", dest="lambda0s", type=_int_list, default=None)
    b.add_argument("--lambda", dest="lam", type=int, default=None, help="fixed lambda instead of searching")
    b.add_argument("--epsilon", dest="epsilons", type=_rational_list, required=True)
    b.add_argument("--ks", type=_int_list, default=None, help="comma list of even k; default from the JL bound")
    b.add_argument("--seeds", type=_int_list, default=[0])
    b.add_argument("--bound", type=int, default=4)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--csv", default=None)
    b.add_argument("--timings", action="store_true", help="log per-cell runtimes to stderr")
    _add_pipeline_flags(b, single_epsilon=False)
    b.set_defaults(func=cmd_bench)
    return parser


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose or getattr(args, "timings", False) else logging.WARNING,
                        stream=sys.stderr, format="%(message)s")
    if getattr(args, "ks", None) and any(k < 2 or k % 2 for k in args.ks):
        return _error("UsageError", "every --ks entry must be a positive even integer", EXIT_USAGE)
    try:
        if args.command in ("embed", "search-lambda") and args.lambda0 is not None:
            lambda0 = _load(args.inp).get("lambda0")
            if lambda0 != args.lambda0:
                raise UsageError(f"--lambda0 {args.lambda0} disagrees with the input file ({lambda0})")
        return args.func(args)
    except UsageError as exc:
        return _error("UsageError", str(exc), EXIT_USAGE)
    except CertificationFailed as exc:
        if exc.report is not None:
            sys.stderr.write(_dumps(exc.report.to_dict()))
        return _error("CertificationFailed", str(exc), EXIT_FAIL)
    except (ProjectionNotFound, RotationNotFound, LambdaSearchExhausted) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_FAIL)
    except (SchemaError, InfeasibleInstance, EpsilonOutOfRange, FileNotFoundError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_USAGE)
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        return _error(type(exc).__name__, str(exc), EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
