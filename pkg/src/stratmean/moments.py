"""First-order MSE, bias and optimum tuning constants from population summaries.

All formulas are sums over strata of ``W_h^2 f_h`` times a stratum bracket.
The ``tp`` quantities follow the published quadratic form literally,
including the constant ``A = sum_h W_h^2 Ybar_h^2``; the simulation module
measures how well that approximation tracks the empirical MSE.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .design import StratifiedDesign
from .errors import (
    SingularSystem,
    StrataError,
    UncorrelatedStratum,
    UndefinedCorrelation,
    ZeroTuning,
)
from .estimators import ALL_ESTIMATORS, EstimatorId

SINGULAR_RTOL = 1e-12


def _c(design: StratifiedDesign) -> np.ndarray:
    return design.W**2 * design.f


def mse_classical(design: StratifiedDesign, est: EstimatorId | str) -> float:
    """First-order MSE of ``mean``, ``t1``-``t4`` or ``tlr`` (variance for ``mean``).

    >>> from stratmean.design import finalize_design
    >>> d = finalize_design([dict(id="a", N=4, n=2, mean_x=1, mean_y=1, sd_x=1, sd_y=2, rho=0)])
    >>> mse_classical(d, "mean")
    1.0
    """
    est = EstimatorId.parse(est)
    c = _c(design)
    Sy2 = design.Sy**2
    if est is EstimatorId.MEAN:
        bracket = Sy2
    elif est is EstimatorId.TLR:
        rho = design.rho
        bad = np.isnan(rho) & (design.Sy > 0)
        if np.any(bad):
            raise UndefinedCorrelation(
                f"rho undefined in strata {[design.ids[i] for i in np.flatnonzero(bad)]}"
            )
        bracket = Sy2 * (1.0 - np.nan_to_num(rho) ** 2)
    else:
        R, Sx2, Syx = design.R, design.Sx**2, design.Syx
        if est is EstimatorId.T1:
            bracket = Sy2 + R**2 * Sx2 - 2 * R * Syx
        elif est is EstimatorId.T2:
            bracket = Sy2 + R**2 * Sx2 + 2 * R * Syx
        elif est is EstimatorId.T3:
            bracket = Sy2 + R**2 / 4 * Sx2 - R * Syx
        elif est is EstimatorId.T4:
            bracket = Sy2 + R**2 / 4 * Sx2 + R * Syx
        else:
            raise ValueError(f"{est} has no classical MSE formula; see mse_tR / mse_tp")
    return float(np.dot(c, bracket))


def mse_tR(design: StratifiedDesign, a: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    if a.shape != (len(design),):
        raise ValueError(f"expected {len(design)} a values, got shape {a.shape}")
    if np.any(a == 0):
        raise ZeroTuning("every a_h must be non-zero")
    R = design.R
    k = R / a
    bracket = design.Sy**2 + k**2 * design.Sx**2 - 2 * k * design.Syx
    return float(np.dot(_c(design), bracket))


def opt_a(design: StratifiedDesign) -> np.ndarray:
    """Per-stratum ``a_h`` minimising the ``tR`` MSE: ``R_h S_xh^2 / S_yxh``.

    At this choice the ``tR`` MSE equals the regression-estimator MSE.
    """
    Syx = design.Syx
    zero = np.flatnonzero(Syx == 0)
    if zero.size:
        raise UncorrelatedStratum(
            f"S_yx = 0 in strata {[design.ids[i] for i in zero]}: no finite optimum a_h"
        )
    return design.R * design.Sx**2 / Syx


@dataclass(frozen=True)
class MomentBundle:
    P1: float
    P2: float
    P3: float
    P4: float
    A: float

    @property
    def cross(self) -> float:
        """``2 P3 + 3 P4``, the coefficient of ``-lambda1 lambda2``."""
        return 2 * self.P3 + 3 * self.P4

    @property
    def determinant(self) -> float:
        return 4 * self.P1 * self.P2 - self.cross**2


def moment_bundle(design: StratifiedDesign) -> MomentBundle:
    c = _c(design)
    R = design.R
    Sy2, Sx2, Syx = design.Sy**2, design.Sx**2, design.Syx
    A = float(np.dot(design.W**2, design.Ybar**2))
    P1 = float(np.dot(c, Sy2 + 2.25 * R**2 * Sx2 + 3 * R * Syx)) + A
    P2 = float(np.dot(c, Sx2))
    P3 = float(np.dot(c, Syx))
    P4 = float(np.dot(c, R * Sx2))
    return MomentBundle(P1=P1, P2=P2, P3=P3, P4=P4, A=A)


def opt_lambdas(design: StratifiedDesign | MomentBundle) -> tuple[float, float]:
    """Closed-form minimiser ``(lambda1, lambda2)`` of :func:`mse_tp`."""
    mb = design if isinstance(design, MomentBundle) else moment_bundle(design)
    det = mb.determinant
    scale = max(abs(4 * mb.P1 * mb.P2), mb.cross**2)
    if scale == 0 or abs(det) <= SINGULAR_RTOL * scale:
        raise SingularSystem(f"4 P1 P2 - (2 P3 + 3 P4)^2 = {det}; no unique optimum")
    return 4 * mb.P2 * mb.A / det, 2 * mb.cross * mb.A / det


def mse_tp(design: StratifiedDesign | MomentBundle, lambda1, lambda2):
    """First-order MSE of ``tp`` as a quadratic form in the lambdas.

    ``lambda1``/``lambda2`` may be arrays (broadcast), which the grid oracle
    uses; scalars return a float.
    """
    mb = design if isinstance(design, MomentBundle) else moment_bundle(design)
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    out = (
        l1**2 * mb.P1
        + l2**2 * mb.P2
        - 2 * l1 * l2 * mb.P3
        - 3 * l1 * l2 * mb.P4
        - 2 * l1 * mb.A
        + mb.A
    )
    return float(out) if out.ndim == 0 else out


def bias_tp(design: StratifiedDesign, lambda1: float, lambda2: float) -> float:
    """First-order bias of ``tp``.

    The ``-15/8`` term carries ``f_h`` like the other sampling terms, since it
    comes from the expectation of the squared relative error in ``xbar_h``.
    """
    R = design.R
    X, f, Sx2 = design.Xbar, design.f, design.Sx**2
    term = (
        design.Ybar * (lambda1 - 1)
        + 1.5 * lambda1 * f * design.Syx / X
        - 1.5 * lambda2 * f * Sx2 / X
        - 15 / 8 * lambda1 * f * R * Sx2 / X
    )
    return float(np.dot(design.W, term))


@dataclass
class EstimatorResult:
    id: str
    mse: float | None
    pre: float | None
    error: str | None = None

    @property
    def available(self) -> bool:
        return self.mse is not None


@dataclass
class AnalysisReport:
    dataset: str | None
    f_convention: str
    estimators: list[EstimatorResult] = field(default_factory=list)
    lambda1_opt: float | None = None
    lambda2_opt: float | None = None
    a_opt: list[float] | None = None
    bias_tp: float | None = None
    mse_tp_min: float | None = None

    def __getitem__(self, est: str | EstimatorId) -> EstimatorResult:
        key = str(est)
        for r in self.estimators:
            if r.id == key:
                return r
        raise KeyError(key)

    def pre(self, est: str | EstimatorId) -> float | None:
        return self[est].pre


def _pre(mse_mean: float, mse: float) -> float:
    if mse == 0:
        return float("inf") if mse_mean > 0 else float("nan")
    return mse_mean / mse * 100.0


def pre_table(
    design: StratifiedDesign, estimators: Sequence[EstimatorId | str] = ALL_ESTIMATORS
) -> AnalysisReport:
    """MSE and percent relative efficiency versus ``mean`` for each estimator.

    ``tR`` is evaluated at :func:`opt_a` and ``tp`` at :func:`opt_lambdas`.
    An estimator whose preconditions fail is listed with ``mse=None`` and the
    error message instead of aborting the report.
    """
    ests = [EstimatorId.parse(e) for e in estimators]
    if EstimatorId.MEAN not in ests:
        ests.insert(0, EstimatorId.MEAN)
    report = AnalysisReport(dataset=design.name, f_convention=design.f_convention)
    mse_mean = mse_classical(design, EstimatorId.MEAN)

    try:
        a_star = opt_a(design)
        report.a_opt = [float(v) for v in a_star]
    except StrataError as exc:
        a_star, a_err = None, str(exc)
    try:
        l1, l2 = opt_lambdas(design)
        report.lambda1_opt, report.lambda2_opt = l1, l2
        report.mse_tp_min = mse_tp(design, l1, l2)
        report.bias_tp = bias_tp(design, l1, l2)
    except StrataError as exc:
        l1, lp_err = None, str(exc)

    for est in ests:
        try:
            if est is EstimatorId.MEAN:
                report.estimators.append(EstimatorResult(est.value, mse_mean, 100.0))
                continue
            if est is EstimatorId.TR:
                if a_star is None:
                    raise UncorrelatedStratum(a_err)
                mse = mse_tR(design, a_star)
            elif est is EstimatorId.TP:
                if l1 is None:
                    raise SingularSystem(lp_err)
                mse = report.mse_tp_min
            else:
                mse = mse_classical(design, est)
        except StrataError as exc:
            report.estimators.append(EstimatorResult(est.value, None, None, str(exc)))
            continue
        report.estimators.append(EstimatorResult(est.value, mse, _pre(mse_mean, mse)))
    return report
