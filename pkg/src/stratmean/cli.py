"""Command-line interface: ``stratmean analyze|estimate|simulate|dataset``.

Exit status is 0 on success, 1 on usage errors and 2 on data or validation
errors. Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as sio
from .errors import StrataError
from .estimators import ALL_ESTIMATORS, EstimatorId, point_estimate
from .moments import opt_a, opt_lambdas, pre_table
from .montecarlo import PopulationSpec, gen_population, simulate

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None


class DataError(Exception):
    pass


def _load_design(args):
    if args.summary is not None:
        design = sio.parse_summary_csv(_read(args.summary), name=Path(args.summary).stem)
    else:
        design = sio.builtin_dataset(args.dataset, f_convention="tabulated")
    return design


def _source_group(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--summary", metavar="PATH", help="summary-statistics CSV")
    g.add_argument("--dataset", metavar="NAME", help="embedded dataset name")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stratmean", description="Stratified-sampling mean estimators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="first-order MSEs and PREs")
    _source_group(p)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--f-convention", choices=("computed", "tabulated"), default="computed")

    p = sub.add_parser("estimate", help="point estimate from sample microdata")
    p.add_argument("--micro", metavar="PATH", required=True)
    _source_group(p)
    p.add_argument("--estimator", required=True, choices=[e.value for e in EstimatorId])
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--a", default="opt", help="'opt' or a constant applied to every stratum")
    p.add_argument("--f-convention", choices=("computed", "tabulated"), default="computed")

    p = sub.add_parser("simulate", help="Monte-Carlo validation on a synthetic population")
    _source_group(p)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--dist", choices=("gaussian", "lognormal"), default="lognormal")
    p.add_argument("--pop-scale", type=int, default=None,
                   help="multiply every N_h by this factor (default: N_h as given)")
    p.add_argument("--estimators", default=",".join(e.value for e in ALL_ESTIMATORS))
    p.add_argument("--format", choices=("json", "table"), default="table")

    p = sub.add_parser("dataset", help="embedded datasets")
    dsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    e = dsub.add_parser("export", help="write a dataset as summary CSV")
    e.add_argument("name")
    e.add_argument("--out", required=True, metavar="PATH", help="output path, '-' for stdout")
    return parser


def _analyze(args, out) -> None:
    design = _load_design(args).with_fpc(args.f_convention)
    report = pre_table(design)
    out.write(sio.write_report(report, args.format))


def _estimate(args, out) -> None:
    design = _load_design(args).with_fpc(args.f_convention)
    sample = sio.parse_micro_csv(_read(args.micro))
    est = EstimatorId(args.estimator)
    kw = {}
    if est is EstimatorId.TP:
        if args.lambda1 is None or args.lambda2 is None:
            l1, l2 = opt_lambdas(design)
            kw["lambda1"] = l1 if args.lambda1 is None else args.lambda1
            kw["lambda2"] = l2 if args.lambda2 is None else args.lambda2
        else:
            kw.update(lambda1=args.lambda1, lambda2=args.lambda2)
    elif est is EstimatorId.TR:
        if args.a == "opt":
            kw["a"] = opt_a(design)
        else:
            try:
                kw["a"] = [float(args.a)] * len(design)
            except ValueError:
                raise UsageError(f"--a expects 'opt' or a number, got {args.a!r}") from None
    value = point_estimate(est, sample, design, **kw)
    out.write(f"{est.value} {value!r}\n")


def _simulate(args, out) -> None:
    if args.reps < 100:
        raise UsageError("--reps must be at least 100")
    if args.pop_scale is not None and args.pop_scale < 1:
        raise UsageError("--pop-scale must be a positive integer")
    try:
        ests = [EstimatorId.parse(s.strip()) for s in args.estimators.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not ests:
        raise UsageError("--estimators is empty")
    design = _load_design(args)
    spec = PopulationSpec.from_design(design, family=args.dist, seed=args.seed,
                                      scale=args.pop_scale or 1)
    pop = gen_population(spec)
    report = simulate(pop, [s.n for s in design.strata], ests, reps=args.reps, seed=args.seed)
    report.label = (f"synthetic-population validation: {args.dist} population "
                    f"matching {design.name or 'summary'}")
    out.write(sio.write_simulation(report, args.format))


def _dataset(args, out) -> None:
    design = sio.parse_summary_csv(sio.dataset_csv(args.name), name=args.name)
    text = sio.write_summary_csv(design)
    if args.out == "-":
        out.write(text)
        return
    try:
        Path(args.out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc.strerror or exc}") from None


COMMANDS = {"analyze": _analyze, "estimate": _estimate, "simulate": _simulate, "dataset": _dataset}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except (DataError, StrataError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DATA
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
