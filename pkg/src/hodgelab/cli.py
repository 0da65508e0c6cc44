"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input or admissibility
error, 3 numerical failure (solver, Newton, search, clustered eigenvalue).
Eigenpair indices are 0-based labels in the sorted spectrum.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import HodgeLabError, InputError, NumericalError, PreconditionError
from .fields import MetricField, SampleGrid
from .perturbation.classify import classify_metric
from .perturbation.splitting import (
    full_pipeline,
    split_clusters,
    split_exact_coexact,
    split_pm_degeneracy,
)
from .perturbation.variation import derivative_report
from .spectral import ClusterTolerance, assemble_pencil, solve_spectrum, spectrum
from .verify import run_suites
from .zeros import find_zeros

log = logging.getLogger("hodgelab")

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _g(v) -> str:
    return "n/a" if v is None else format(float(v), ".17g")


def _metric(args) -> MetricField:
    return io.load_metric(args.metric) if args.metric else MetricField.flat()


def _tol(args) -> ClusterTolerance:
    return ClusterTolerance(args.cluster_abs, args.cluster_rel)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, name: str, report: dict, csv_text: str | None = None):
    out = _outdir(args)
    if args.format in ("json", "both"):
        io.write_json(io.stamped(report), out / f"{name}.json")
    if csv_text is not None and args.format in ("csv", "both"):
        (out / f"{name}.csv").write_text(csv_text)


def cmd_spectrum(args) -> int:
    metric = _metric(args)
    grid = SampleGrid.for_truncation(args.truncation, args.oversampling)
    pencil = assemble_pencil(metric, args.truncation, args.operator, grid)
    res = solve_spectrum(pencil, args.count, _tol(args))
    _emit(args, "spectrum", res.to_dict(), io.spectrum_csv(res))
    if args.dump_matrices:
        out = _outdir(args)
        io.write_matrix(out / "stiffness.bin", pencil.A)
        io.write_matrix(out / "mass.bin", pencil.M)
        if pencil.Q is not None:
            io.write_matrix(out / "constraint.bin", pencil.Q)
    for c in res.clusters:
        print(f"{_g(res.values[c[0]])}  x{len(c)}")
    return EXIT_OK


def cmd_derivative(args) -> int:
    if not args.direction:
        raise InputError("--direction is required")
    metric = _metric(args)
    h = io.load_direction(args.direction)
    t = args.step
    grid = SampleGrid.for_truncation(args.truncation, args.oversampling)
    rep = derivative_report(metric, args.operator, args.index, h, args.truncation, grid,
                            steps=(t, t / 2, t / 4), tol=_tol(args))
    _emit(args, "derivative", rep.to_dict())
    print(f"analytic {_g(rep.analytic)}  order {_g(rep.order)}  mismatch {_g(rep.mismatch)}")
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_split(args) -> int:
    metric = _metric(args)
    N, k, eps, tol = args.truncation, args.depth, args.epsilon, _tol(args)
    grid = SampleGrid.for_truncation(N, args.oversampling)
    if args.mode == "cluster":
        _, new, rep = split_clusters(metric, k, eps, N, args.seed, tol, grid=grid)
        gamma = classify_metric(new, k, N, tol, grid=grid)
        ok = rep.passed and gamma.passes("gamma1")
    elif args.mode == "pm":
        _, new, rep = split_pm_degeneracy(metric, k, eps, N, tol, grid=grid)
        gamma = classify_metric(new, k, N, tol, grid=grid)
        ok = rep.passed and gamma.passes("gamma4")
    elif args.mode == "exact-coexact":
        n, m = args.index, args.curl_index
        if n is None or m is None:
            w = classify_metric(metric, k, N, tol, grid=grid).conditions["gamma5"].witness
            n = w["scalar_index"] if n is None else n
            m = w["curl_index"] if m is None else m
        _, new, rep = split_exact_coexact(metric, n, m, eps, N, tol, grid=grid)
        gamma = classify_metric(new, k, N, tol, grid=grid)
        ok = rep.passed
    else:
        _, new, rep = full_pipeline(metric, k, eps, N, args.seed, tol, zeros=args.zeros, grid=grid)
        gamma = rep.gamma
        ok = rep.passed
    io.save_metric(new, _outdir(args) / "metric.json")
    report = rep.to_dict()
    report["classification"] = gamma.to_dict()
    _emit(args, "split", report)
    for name, c in gamma.conditions.items():
        print(f"{name}: {c.passed} margin {_g(c.margin)}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_zeros(args) -> int:
    metric = _metric(args)
    if args.field:
        u = io.load_one_form(args.field)
    else:
        res = spectrum(metric, args.truncation, "curl", tol=_tol(args),
                       grid=SampleGrid.for_truncation(args.truncation, args.oversampling))
        u = res.eigenpair(args.index).vector
    rep = find_zeros(metric, u, scan=args.scan)
    _emit(args, "zeros", rep.to_dict(), rep.to_csv())
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{len(rep)} zeros; all hyperbolic: {rep.all_hyperbolic}")
    if rep.seeds and rep.converged == 0:
        raise NumericalError(f"Newton failed from all {rep.seeds} seeds")
    return EXIT_OK


def cmd_verify(args) -> int:
    metric = io.load_metric(args.metric) if args.metric else None
    rep = run_suites(args.level, args.seed, metric)
    _emit(args, "verify", rep)
    failed = [c for c in rep["checks"] if not c["passed"]]
    for c in failed:
        print(f"FAIL {c['name']}: {_g(c['value'])} > {_g(c['tolerance'])}")
    print(f"{len(rep['checks']) - len(failed)}/{len(rep['checks'])} checks passed")
    return EXIT_OK if rep["passed"] else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--metric", help="metric JSON file (flat metric when omitted)")
    common.add_argument("--truncation", type=int, default=2, help="Fourier cutoff N")
    common.add_argument("--oversampling", type=int, default=4)
    common.add_argument("--cluster-abs", type=float, default=1e-6)
    common.add_argument("--cluster-rel", type=float, default=1e-8)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("json", "csv", "both"), default="both")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hodgelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="solve a Galerkin spectrum")
    s.add_argument("--operator", choices=("curl", "laplace0"), default="curl")
    s.add_argument("--count", type=int)
    s.add_argument("--dump-matrices", action="store_true")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("derivative", parents=[common], help="eigenvalue derivative vs differences")
    s.add_argument("--direction", help="direction JSON file")
    s.add_argument("--operator", choices=("curl", "laplace0"), default="curl")
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--step", type=float, default=1e-3, help="largest step t (then t/2, t/4)")
    s.set_defaults(func=cmd_derivative)

    s = sub.add_parser("split", parents=[common], help="perturb the metric to split coincidences")
    s.add_argument("--mode", choices=("cluster", "pm", "exact-coexact", "full-pipeline"),
                   default="full-pipeline")
    s.add_argument("--depth", type=int, default=6)
    s.add_argument("--epsilon", type=float, default=1e-2)
    s.add_argument("--index", type=int, help="scalar index for exact-coexact")
    s.add_argument("--curl-index", type=int, help="curl index for exact-coexact")
    s.add_argument("--zeros", action="store_true", help="also evaluate the zero conditions")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("zeros", parents=[common], help="zeros of a curl eigenfield")
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--scan", type=int, default=32)
    s.add_argument("--field", help="1-form JSON file to analyse instead of an eigenfield")
    s.set_defaults(func=cmd_zeros)

    s = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    s.add_argument("--level", choices=("fast", "full"), default="fast")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "truncation", 1) < 1:
            raise InputError("truncation must be at least 1")
        return args.func(args)
    except (InputError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HodgeLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
