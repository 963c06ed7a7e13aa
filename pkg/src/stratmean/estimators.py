"""Point estimators of the population mean from a stratified sample.

Each estimator is a weighted sum ``sum_h W_h * g_h`` of a stratum-level value
``g_h``. The stratum kernels in this module broadcast over leading axes, so
the simulation code can evaluate thousands of replicates in one call.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence

import numpy as np

from .design import StratifiedDesign, SurveySample
from .errors import (
    NonFiniteResult,
    StrataMismatch,
    ZeroDenominator,
    ZeroSampleAuxMean,
    ZeroTuning,
)


class EstimatorId(str, enum.Enum):
    MEAN = "mean"
    T1 = "t1"
    T2 = "t2"
    T3 = "t3"
    T4 = "t4"
    TLR = "tlr"
    TR = "tR"
    TP = "tp"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value: str | EstimatorId) -> EstimatorId:
        try:
            return cls(value)
        except ValueError:
            names = ", ".join(e.value for e in cls)
            raise ValueError(f"unknown estimator {value!r}; expected one of {names}") from None


ALL_ESTIMATORS: tuple[EstimatorId, ...] = tuple(EstimatorId)
CLASSICAL: tuple[EstimatorId, ...] = tuple(e for e in EstimatorId if e is not EstimatorId.TP)


def stratum_values(
    est: EstimatorId,
    ybar: np.ndarray,
    xbar: np.ndarray,
    Xbar: np.ndarray,
    *,
    slope: np.ndarray | None = None,
    a: np.ndarray | None = None,
    lambda1: float = 1.0,
    lambda2: float = 0.0,
) -> np.ndarray:
    """Stratum-level estimator values, no precondition checks.

    Arrays broadcast together; the last axis indexes strata. Division by zero
    yields inf/nan here, callers that need errors check beforehand.
    """
    if est is EstimatorId.MEAN:
        return ybar + 0.0 * xbar
    if est is EstimatorId.T1:
        return ybar * (Xbar / xbar)
    if est is EstimatorId.T2:
        return ybar * (xbar / Xbar)
    if est is EstimatorId.T3:
        return ybar * np.exp((Xbar - xbar) / (Xbar + xbar))
    if est is EstimatorId.T4:
        return ybar * np.exp((xbar - Xbar) / (xbar + Xbar))
    if est is EstimatorId.TLR:
        if slope is None:
            raise ValueError("tlr needs per-stratum slopes")
        return ybar + slope * (Xbar - xbar)
    if est is EstimatorId.TR:
        if a is None:
            raise ValueError("tR needs per-stratum a values")
        return ybar * np.exp((Xbar - xbar) / (Xbar + (a - 1.0) * xbar))
    if est is EstimatorId.TP:
        brace = 2.0 - (Xbar / xbar) * np.exp((Xbar - xbar) / (Xbar + xbar))
        return (lambda1 * ybar + lambda2 * (Xbar - xbar)) * brace
    raise ValueError(f"unhandled estimator {est!r}")


def _sample_means(sample: SurveySample, design: StratifiedDesign):
    strata = sample.aligned(design)
    ybar = np.array([s.mean_y for s in strata])
    xbar = np.array([s.mean_x for s in strata])
    return strata, ybar, xbar


def _check_xbar(design: StratifiedDesign, xbar: np.ndarray) -> None:
    zero = np.flatnonzero(xbar == 0)
    if zero.size:
        raise ZeroSampleAuxMean(f"sample mean of x is 0 in strata {[design.ids[i] for i in zero]}")


def point_estimate_classical(
    est: EstimatorId | str,
    sample: SurveySample,
    design: StratifiedDesign,
    a: Sequence[float] | None = None,
) -> float:
    """Estimate the population mean with one of ``mean, t1..t4, tlr, tR``.

    Parameters
    ----------
    est
        Estimator id; ``tp`` is handled by :func:`point_estimate_tp`.
    sample
        Drawn units. Strata are matched to the design by id.
    design
        Supplies the weights ``W_h`` and known auxiliary means ``Xbar_h``.
    a
        Per-stratum constants, required for ``tR``.
    """
    est = EstimatorId.parse(est)
    if est is EstimatorId.TP:
        raise ValueError("use point_estimate_tp for tp")
    strata, ybar, xbar = _sample_means(sample, design)
    Xbar = design.Xbar
    kw = {}
    if est in (EstimatorId.T1, EstimatorId.T3):
        _check_xbar(design, xbar)
    if est in (EstimatorId.T3, EstimatorId.T4) and np.any(Xbar + xbar == 0):
        raise ZeroDenominator("Xbar_h + xbar_h is 0 in some stratum")
    if est is EstimatorId.T2 and np.any(Xbar == 0):
        raise ZeroDenominator("population mean of x is 0 in some stratum")
    if est is EstimatorId.TLR:
        kw["slope"] = np.array([s.slope for s in strata])
    if est is EstimatorId.TR:
        if a is None:
            raise ZeroTuning("tR needs per-stratum a values")
        a_arr = np.asarray(a, dtype=float)
        if a_arr.shape != Xbar.shape:
            raise StrataMismatch(f"expected {Xbar.size} a values, got {a_arr.size}")
        if np.any(a_arr == 0):
            raise ZeroTuning("every a_h must be non-zero")
        if np.any(Xbar + (a_arr - 1.0) * xbar == 0):
            raise ZeroDenominator("Xbar_h + (a_h - 1) xbar_h is 0 in some stratum")
        kw["a"] = a_arr
    g = stratum_values(est, ybar, xbar, Xbar, **kw)
    value = float(np.dot(design.W, g))
    if not np.isfinite(value):
        raise NonFiniteResult(f"{est} evaluated to {value}")
    return value


def point_estimate_tp(
    sample: SurveySample, design: StratifiedDesign, lambda1: float, lambda2: float
) -> float:
    strata, ybar, xbar = _sample_means(sample, design)
    _check_xbar(design, xbar)
    Xbar = design.Xbar
    if np.any(Xbar + xbar == 0):
        raise ZeroDenominator("Xbar_h + xbar_h is 0 in some stratum")
    with np.errstate(over="ignore", invalid="ignore"):
        g = stratum_values(EstimatorId.TP, ybar, xbar, Xbar, lambda1=lambda1, lambda2=lambda2)
        value = float(np.dot(design.W, g))
    if not np.isfinite(value):
        raise NonFiniteResult(f"tp evaluated to {value}")
    return value


def point_estimate(
    est: EstimatorId | str,
    sample: SurveySample,
    design: StratifiedDesign,
    *,
    a: Sequence[float] | None = None,
    lambda1: float | None = None,
    lambda2: float | None = None,
) -> float:
    """Dispatch to the classical or ``tp`` estimator."""
    est = EstimatorId.parse(est)
    if est is EstimatorId.TP:
        if lambda1 is None or lambda2 is None:
            raise ValueError("tp needs lambda1 and lambda2")
        return point_estimate_tp(sample, design, lambda1, lambda2)
    return point_estimate_classical(est, sample, design, a=a)


__all__ = [
    "ALL_ESTIMATORS",
    "CLASSICAL",
    "EstimatorId",
    "point_estimate",
    "point_estimate_classical",
    "point_estimate_tp",
    "stratum_values",
]
