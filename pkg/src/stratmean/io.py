"""CSV parsing, the embedded dataset, and report serialization."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from importlib import resources

from .design import StratifiedDesign, StratumFrame, StratumSample, SurveySample, _check_frame, finalize_design
from .errors import InvariantViolation, MalformedHeader, MalformedRow, SingletonStratum, UnknownDataset
from .moments import AnalysisReport, EstimatorResult
from .montecarlo import FinitePopulation, SimulationReport, population_from_units

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("stratum_id", "N", "n", "mean_x", "mean_y", "sd_x", "sd_y", "rho")
OPTIONAL_COLUMNS = ("cx", "cy", "beta2x", "f_override")
MICRO_COLUMNS = ("stratum_id", "y", "x")
PRE_HEADER = "PRE'S"
DATASETS = {"kadilar-cingi-1999": "kadilar-cingi-1999.csv"}


def _rows(text: str):
    if text.startswith("\ufeff"):
        text = text[1:]
    return list(csv.reader(io.StringIO(text, newline="")))


def _number(value: str, line: int, column: str, integer: bool = False):
    try:
        if integer:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        f = float(value)
    except (ValueError, OverflowError):
        raise MalformedRow(f"not a {'integer' if integer else 'number'}: {value!r}", line, column) from None
    if not math.isfinite(f):
        raise MalformedRow(f"non-finite value {value!r}", line, column)
    return f


def parse_summary_csv(text: str, name: str | None = None) -> StratifiedDesign:
    """Parse per-stratum summaries into a finalized design.

    The header must be the eight base columns, optionally followed by a
    prefix of ``cx,cy,beta2x,f_override``. Empty optional cells mean absent.
    A present ``f_override`` replaces the computed ``f_h``.
    """
    rows = _rows(text)
    if not rows:
        raise MalformedHeader("empty input: missing header")
    header = tuple(c.strip() for c in rows[0])
    extra = header[len(SUMMARY_COLUMNS):]
    if header[: len(SUMMARY_COLUMNS)] != SUMMARY_COLUMNS or extra != OPTIONAL_COLUMNS[: len(extra)]:
        raise MalformedHeader(
            f"expected header {','.join(SUMMARY_COLUMNS)}[,{','.join(OPTIONAL_COLUMNS)}], got {','.join(header)}"
        )
    frames = []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise MalformedRow(f"expected {len(header)} fields, got {len(row)}", line)
        cells = dict(zip(header, (c.strip() for c in row)))
        rec = {"id": cells["stratum_id"]}
        if not rec["id"]:
            raise MalformedRow("empty stratum id", line, "stratum_id")
        for col in SUMMARY_COLUMNS[1:]:
            rec[col] = _number(cells[col], line, col, integer=col in ("N", "n"))
        for col in extra:
            if cells[col]:
                rec[col] = _number(cells[col], line, col)
        if "f_override" in rec:
            log.info("stratum %s: using tabulated f_h=%s", rec["id"], rec["f_override"])
        try:
            frames.append(_check_frame(StratumFrame(**rec)))
        except InvariantViolation as exc:
            raise type(exc)(f"{exc} (line {line})") from None
    if not frames:
        raise MalformedRow("no strata", 2)
    return finalize_design(frames, name=name)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def write_summary_csv(design: StratifiedDesign) -> str:
    """Serialize a design; floats use the shortest exact round-trip form."""
    extra = [c for c in OPTIONAL_COLUMNS if any(getattr(s, c) is not None for s in design.strata)]
    if extra:
        extra = list(OPTIONAL_COLUMNS[: OPTIONAL_COLUMNS.index(extra[-1]) + 1])
    header = list(SUMMARY_COLUMNS) + extra
    lines = [",".join(header)]
    for s in design.strata:
        vals = [s.id, s.N, s.n, s.mean_x, s.mean_y, s.sd_x, s.sd_y, s.rho]
        vals += [getattr(s, c) for c in extra]
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def parse_micro_csv(text: str, census: bool = False) -> SurveySample | FinitePopulation:
    """Parse unit-level ``stratum_id,y,x`` rows.

    Strata keep first-appearance order. With ``census=True`` the rows are the
    whole population and a :class:`FinitePopulation` is returned instead.
    """
    rows = _rows(text)
    if not rows:
        raise MalformedHeader("empty input: missing header")
    header = tuple(c.strip() for c in rows[0])
    if header != MICRO_COLUMNS:
        raise MalformedHeader(f"expected header {','.join(MICRO_COLUMNS)}, got {','.join(header)}")
    groups: dict[str, tuple[list[float], list[float]]] = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise MalformedRow(f"expected 3 fields, got {len(row)}", line)
        sid = row[0].strip()
        if not sid:
            raise MalformedRow("empty stratum id", line, "stratum_id")
        y = _number(row[1].strip(), line, "y")
        x = _number(row[2].strip(), line, "x")
        ys, xs = groups.setdefault(sid, ([], []))
        ys.append(y)
        xs.append(x)
    if not groups:
        raise MalformedRow("no units", 2)
    for sid, (ys, _) in groups.items():
        if len(ys) < 2:
            raise SingletonStratum(f"stratum {sid!r} has a single unit; n-1 moments undefined")
    if census:
        return population_from_units(groups)
    return SurveySample(tuple(StratumSample(sid, ys, xs) for sid, (ys, xs) in groups.items()))


def dataset_csv(name: str) -> str:
    if name not in DATASETS:
        raise UnknownDataset(f"unknown dataset {name!r}; available: {', '.join(sorted(DATASETS))}")
    return resources.files("stratmean").joinpath("data", DATASETS[name]).read_text(encoding="utf-8")


def builtin_dataset(name: str, f_convention: str = "computed") -> StratifiedDesign:
    """Embedded summary dataset.

    ``f_convention="tabulated"`` keeps the printed ``f_h`` values (including
    ``f_6 = 0.006``); ``"computed"`` derives every ``f_h`` from ``N_h, n_h``.
    Covariances are always derived as ``rho * sd_y * sd_x``.
    """
    design = parse_summary_csv(dataset_csv(name), name=name)
    return design.with_fpc(f_convention)


def report_to_dict(report: AnalysisReport) -> dict:
    ests = []
    for r in report.estimators:
        d = {"id": r.id, "mse": r.mse, "pre": r.pre}
        if r.error is not None:
            d["error"] = r.error
        ests.append(d)
    return {
        "dataset": report.dataset,
        "f_convention": report.f_convention,
        "estimators": ests,
        "lambda_opt": {"lambda1": report.lambda1_opt, "lambda2": report.lambda2_opt},
        "a_opt": report.a_opt,
        "bias_tp": report.bias_tp,
    }


def report_from_dict(d: dict) -> AnalysisReport:
    ests = [EstimatorResult(e["id"], e["mse"], e["pre"], e.get("error")) for e in d["estimators"]]
    tp = next((e for e in ests if e.id == "tp"), None)
    return AnalysisReport(
        dataset=d["dataset"],
        f_convention=d["f_convention"],
        estimators=ests,
        lambda1_opt=d["lambda_opt"]["lambda1"],
        lambda2_opt=d["lambda_opt"]["lambda2"],
        a_opt=d["a_opt"],
        bias_tp=d["bias_tp"],
        mse_tp_min=None if tp is None else tp.mse,
    )


def read_report(text: str) -> AnalysisReport:
    return report_from_dict(json.loads(text))


def _num(v, spec: str) -> str:
    return "n/a" if v is None else format(v, spec)


def write_report(report: AnalysisReport, format: str = "table") -> str:
    if format == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if format != "table":
        raise ValueError(f"unknown format {format!r}")
    lines = [
        f"dataset: {report.dataset or '-'}",
        f"f convention: {report.f_convention}",
        "",
        f"{'S.No.':<6}{'ESTIMATORS':<12}{PRE_HEADER:>10}  {'MSE':>16}",
    ]
    for i, r in enumerate(report.estimators, start=1):
        lines.append(f"{i:<6}{r.id:<12}{_num(r.pre, '.2f'):>10}  {_num(r.mse, '.6g'):>16}")
    lines.append("")
    if report.lambda1_opt is not None:
        lines.append(f"lambda1_opt = {report.lambda1_opt:.10g}")
        lines.append(f"lambda2_opt = {report.lambda2_opt:.10g}")
    if report.bias_tp is not None:
        lines.append(f"bias_tp = {report.bias_tp:.10g}")
    if report.a_opt is not None:
        lines.append("a_opt = " + ", ".join(f"{v:.10g}" for v in report.a_opt))
    return "\n".join(lines) + "\n"


def simulation_to_dict(report: SimulationReport) -> dict:
    return {
        "label": report.label,
        "reps": report.reps,
        "seed": report.seed,
        "n": report.n,
        "truth": report.truth,
        "lambda_opt": {"lambda1": report.lambda1, "lambda2": report.lambda2},
        "a_opt": report.a_opt,
        "estimators": [
            {
                "id": r.id,
                "empirical_mse": r.empirical_mse,
                "empirical_bias": r.empirical_bias,
                "mc_standard_error": r.mc_standard_error,
                "replicates": r.replicates,
                "failed": r.failed,
                "flagged": r.flagged,
                "theoretical_mse": r.theoretical_mse,
                "ratio": r.ratio,
            }
            for r in report.rows
        ],
        **report.meta,
    }


def write_simulation(report: SimulationReport, format: str = "table") -> str:
    if format == "json":
        return json.dumps(simulation_to_dict(report), indent=2) + "\n"
    if format != "table":
        raise ValueError(f"unknown format {format!r}")
    lines = []
    if report.label:
        lines.append(report.label)
    lines += [
        f"reps: {report.reps}  seed: {report.seed}  true mean: {report.truth:.10g}",
        "",
        f"{'ESTIMATOR':<10}{'EMP_MSE':>16}{'MC_SE':>14}{'EMP_BIAS':>14}{'THEORY_MSE':>16}{'RATIO':>10}{'FAILED':>8}",
    ]
    for r in report.rows:
        flag = " *" if r.flagged else ""
        lines.append(
            f"{r.id:<10}{_num(r.empirical_mse, '.6g'):>16}{_num(r.mc_standard_error, '.4g'):>14}"
            f"{_num(r.empirical_bias, '.4g'):>14}{_num(r.theoretical_mse, '.6g'):>16}"
            f"{_num(r.ratio, '.4f'):>10}{r.failed:>8}{flag}"
        )
    if any(r.flagged for r in report.rows):
        lines.append("* failure rate above 1%")
    return "\n".join(lines) + "\n"


__all__ = [
    "builtin_dataset",
    "dataset_csv",
    "parse_micro_csv",
    "parse_summary_csv",
    "read_report",
    "write_report",
    "write_simulation",
    "write_summary_csv",
]
