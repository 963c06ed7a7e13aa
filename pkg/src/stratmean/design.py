"""Stratified design data model.

A design is an ordered, immutable collection of :class:`StratumFrame` records
holding population summaries for each stratum (sizes, means, standard
deviations, correlation) together with the derived weight ``W_h = N_h / N``
and finite population correction ``f_h = 1/n_h - 1/N_h``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Any

import numpy as np

from .errors import (
    CorrelationOutOfRange,
    DegenerateSlope,
    DuplicateStratum,
    InconsistentCovariance,
    InvariantViolation,
    NonPositiveCount,
    SampleExceedsStratum,
    StrataMismatch,
    ZeroAuxMean,
    ZeroTuning,
)

COV_RTOL = 1e-6


@dataclass(frozen=True)
class StratumFrame:
    """Population summary of one stratum.

    ``cov_xy``, ``weight`` and ``fpc`` are filled in by :func:`finalize_design`;
    a raw record may leave them as ``None``. ``cx``, ``cy`` and ``beta2x`` are
    carried along as metadata and never enter a formula.
    """

    id: str
    N: int
    n: int
    mean_x: float
    mean_y: float
    sd_x: float
    sd_y: float
    rho: float
    cov_xy: float | None = None
    f_override: float | None = None
    cx: float | None = None
    cy: float | None = None
    beta2x: float | None = None
    weight: float | None = None
    fpc: float | None = None

    @property
    def ratio(self) -> float:
        if self.mean_x == 0:
            raise ZeroAuxMean(f"stratum {self.id!r}: mean_x is 0, ratio undefined")
        return self.mean_y / self.mean_x

    @property
    def computed_fpc(self) -> float:
        return 1.0 / self.n - 1.0 / self.N


def _as_frame(record: StratumFrame | Mapping[str, Any]) -> StratumFrame:
    if isinstance(record, StratumFrame):
        return record
    names = {f.name for f in fields(StratumFrame)}
    unknown = set(record) - names
    if unknown:
        raise InvariantViolation(f"unknown stratum fields: {sorted(unknown)}")
    return StratumFrame(**record)


def _check_frame(fr: StratumFrame) -> StratumFrame:
    label = f"stratum {fr.id!r}"
    if int(fr.N) != fr.N or int(fr.n) != fr.n:
        raise NonPositiveCount(f"{label}: N and n must be integers")
    N, n = int(fr.N), int(fr.n)
    if N < 1 or n < 1:
        raise NonPositiveCount(f"{label}: N={N}, n={n}; counts must be >= 1")
    if N < 2:
        raise NonPositiveCount(f"{label}: N={N}; a stratum needs at least 2 units")
    if n > N:
        raise SampleExceedsStratum(f"{label}: n={n} exceeds N={N}")
    for name in ("mean_x", "mean_y", "sd_x", "sd_y"):
        if not math.isfinite(getattr(fr, name)):
            raise InvariantViolation(f"{label}: {name} must be finite")
    if fr.sd_x < 0 or fr.sd_y < 0:
        raise InvariantViolation(f"{label}: standard deviations must be >= 0")

    rho = float(fr.rho)
    degenerate = fr.sd_x == 0 or fr.sd_y == 0
    if math.isnan(rho) and fr.cov_xy is not None and not degenerate:
        rho = fr.cov_xy / (fr.sd_x * fr.sd_y)
    if not math.isnan(rho) and not -1.0 <= rho <= 1.0:
        raise CorrelationOutOfRange(f"{label}: rho={fr.rho} outside [-1, 1]")

    if degenerate:
        derived = 0.0
    elif math.isnan(rho):
        raise CorrelationOutOfRange(f"{label}: rho undefined but both sds are positive")
    else:
        derived = rho * fr.sd_y * fr.sd_x
    cov = derived
    if fr.cov_xy is not None:
        scale = max(abs(fr.cov_xy), abs(derived))
        if abs(fr.cov_xy - derived) > COV_RTOL * scale:
            raise InconsistentCovariance(
                f"{label}: cov_xy={fr.cov_xy} disagrees with rho*sd_y*sd_x={derived}"
            )
        cov = float(fr.cov_xy)

    if fr.f_override is not None and not (math.isfinite(fr.f_override) and fr.f_override >= 0):
        raise InvariantViolation(f"{label}: f_override must be a finite value >= 0")

    return replace(fr, N=N, n=n, rho=rho, cov_xy=cov)


@dataclass(frozen=True)
class StratifiedDesign:
    """Ordered strata with whole-population totals.

    Per-stratum quantities are also exposed as read-only numpy vectors
    (``W``, ``f``, ``Sy``, ...) in stratum order for the formula modules.
    """

    strata: tuple[StratumFrame, ...]
    name: str | None = field(default=None, compare=True)

    def __len__(self) -> int:
        return len(self.strata)

    def __iter__(self):
        return iter(self.strata)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.strata)

    @property
    def N(self) -> int:
        return sum(s.N for s in self.strata)

    @property
    def n(self) -> int:
        return sum(s.n for s in self.strata)

    @property
    def pop_mean_y(self) -> float:
        return float(np.dot(self.W, self.Ybar))

    @property
    def pop_mean_x(self) -> float:
        return float(np.dot(self.W, self.Xbar))

    @property
    def f_convention(self) -> str:
        return "tabulated" if any(s.f_override is not None for s in self.strata) else "computed"

    def _vec(self, attr: str) -> np.ndarray:
        v = np.array([getattr(s, attr) for s in self.strata], dtype=float)
        v.setflags(write=False)
        return v

    @cached_property
    def W(self) -> np.ndarray:
        return self._vec("weight")

    @cached_property
    def f(self) -> np.ndarray:
        return self._vec("fpc")

    @cached_property
    def Xbar(self) -> np.ndarray:
        return self._vec("mean_x")

    @cached_property
    def Ybar(self) -> np.ndarray:
        return self._vec("mean_y")

    @cached_property
    def Sx(self) -> np.ndarray:
        return self._vec("sd_x")

    @cached_property
    def Sy(self) -> np.ndarray:
        return self._vec("sd_y")

    @cached_property
    def Syx(self) -> np.ndarray:
        return self._vec("cov_xy")

    @cached_property
    def rho(self) -> np.ndarray:
        return self._vec("rho")

    @property
    def R(self) -> np.ndarray:
        """Per-stratum ratios ``Ybar_h / Xbar_h``; raises if any ``Xbar_h`` is 0."""
        for s in self.strata:
            if s.mean_x == 0:
                raise ZeroAuxMean(f"stratum {s.id!r}: mean_x is 0, ratio undefined")
        return self.Ybar / self.Xbar

    def with_fpc(self, convention: str) -> StratifiedDesign:
        """Switch between computed ``f_h`` and the override values.

        ``"computed"`` drops every override. ``"tabulated"`` requires an
        override on every stratum.
        """
        if convention == "computed":
            return finalize_design([replace(s, f_override=None) for s in self.strata], name=self.name)
        if convention == "tabulated":
            missing = [s.id for s in self.strata if s.f_override is None]
            if missing:
                raise InvariantViolation(f"no tabulated f_h for strata {missing}")
            return self
        raise ValueError(f"unknown f convention {convention!r}")


def finalize_design(
    records: Iterable[StratumFrame | Mapping[str, Any]] | StratifiedDesign,
    name: str | None = None,
) -> StratifiedDesign:
    """Validate raw stratum records and derive weights, fpc and covariances.

    Input order is preserved. Applying the function to its own output returns
    an equal design.
    """
    if isinstance(records, StratifiedDesign):
        name = records.name if name is None else name
        records = records.strata
    frames = [_check_frame(_as_frame(r)) for r in records]
    if not frames:
        raise InvariantViolation("a design needs at least one stratum")
    seen: set[str] = set()
    for fr in frames:
        if fr.id in seen:
            raise DuplicateStratum(f"duplicate stratum id {fr.id!r}")
        seen.add(fr.id)

    total = sum(fr.N for fr in frames)
    out = []
    for fr in frames:
        fpc = fr.f_override if fr.f_override is not None else fr.computed_fpc
        out.append(replace(fr, weight=fr.N / total, fpc=float(fpc)))
    return StratifiedDesign(tuple(out), name=name)


@dataclass(frozen=True)
class StratumSample:
    """Drawn units of one stratum and their sample moments (divisor n-1)."""

    id: str
    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1 or y.shape != x.shape or y.size == 0:
            raise StrataMismatch(f"stratum {self.id!r}: y and x must be equal-length 1-d arrays")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def size(self) -> int:
        return self.y.size

    @property
    def mean_y(self) -> float:
        return float(self.y.mean())

    @property
    def mean_x(self) -> float:
        return float(self.x.mean())

    @property
    def var_y(self) -> float:
        return float(np.var(self.y, ddof=1)) if self.size > 1 else math.nan

    @property
    def var_x(self) -> float:
        return float(np.var(self.x, ddof=1)) if self.size > 1 else math.nan

    @property
    def cov(self) -> float:
        if self.size < 2:
            return math.nan
        return float(np.dot(self.x - self.x.mean(), self.y - self.y.mean()) / (self.size - 1))

    @property
    def slope(self) -> float:
        vx = self.var_x
        if not vx > 0:
            raise DegenerateSlope(f"stratum {self.id!r}: sample variance of x is {vx}")
        return self.cov / vx


@dataclass(frozen=True)
class SurveySample:
    strata: tuple[StratumSample, ...]

    @classmethod
    def from_arrays(cls, data: Mapping[str, tuple[Sequence[float], Sequence[float]]]) -> SurveySample:
        """Build from ``{stratum_id: (y_values, x_values)}`` in mapping order."""
        return cls(tuple(StratumSample(str(k), y, x) for k, (y, x) in data.items()))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.strata)

    def aligned(self, design: StratifiedDesign) -> tuple[StratumSample, ...]:
        """Sample strata reordered to design order; ids must match one-to-one."""
        by_id = {s.id: s for s in self.strata}
        if len(by_id) != len(self.strata) or set(by_id) != set(design.ids):
            raise StrataMismatch(
                f"sample strata {list(self.ids)} do not match design strata {list(design.ids)}"
            )
        return tuple(by_id[i] for i in design.ids)


@dataclass(frozen=True)
class TuningParams:
    """Global lambdas for ``tp`` and per-stratum ``a_h`` for ``tR``."""

    lambda1: float = 1.0
    lambda2: float = 0.0
    a: tuple[float, ...] = ()

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if any(v == 0 for v in a):
            raise ZeroTuning("every a_h must be non-zero")
        object.__setattr__(self, "a", a)
