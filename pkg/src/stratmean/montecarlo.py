"""Synthetic finite populations, SRSWOR replicates, exact enumeration and grid search.

Random streams are keyed by ``(seed, replicate, stratum)`` through
``numpy.random.SeedSequence`` spawn keys, so a replicate's sample does not
depend on which worker draws it or in what order. Replicates are processed in
fixed-size chunks and reduced over the full, index-ordered array, which makes
every report independent of the thread count.
"""

from __future__ import annotations

import math
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .design import StratifiedDesign, StratumSample, SurveySample, finalize_design
from .errors import EmptyRange, InvalidSpec, SampleExceedsStratum, StrataError, TooManySamples
from .estimators import ALL_ESTIMATORS, EstimatorId, stratum_values
from .moments import mse_classical, mse_tp, mse_tR, moment_bundle, opt_a, opt_lambdas

FAMILIES = ("gaussian", "lognormal")
CHUNK = 1000
MAX_ENUMERATION = 10**7
FAILURE_FLAG_RATE = 0.01

# stream domains, so population and sampling draws never share a key
_POP_DOMAIN = 1
_SAMPLE_DOMAIN = 2


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class StratumTarget:
    id: str
    N: int
    mean_x: float
    mean_y: float
    sd_x: float
    sd_y: float
    rho: float


@dataclass(frozen=True)
class PopulationSpec:
    strata: tuple[StratumTarget, ...]
    family: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        if not self.strata:
            raise InvalidSpec("no strata")
        for s in self.strata:
            if s.N < 2:
                raise InvalidSpec(f"stratum {s.id!r}: N must be >= 2")
            if s.sd_x < 0 or s.sd_y < 0:
                raise InvalidSpec(f"stratum {s.id!r}: negative standard deviation")
            if not -1 <= s.rho <= 1:
                raise InvalidSpec(f"stratum {s.id!r}: rho={s.rho} outside [-1, 1]")
            if self.family == "lognormal" and (s.mean_x <= 0 or s.mean_y <= 0):
                raise InvalidSpec(f"stratum {s.id!r}: lognormal needs positive means")

    @classmethod
    def from_design(
        cls, design: StratifiedDesign, family: str = "gaussian", seed: int = 0, scale: int = 1
    ) -> PopulationSpec:
        """Targets taken from a design's summaries; ``scale`` multiplies each ``N_h``."""
        strata = tuple(
            StratumTarget(s.id, s.N * scale, s.mean_x, s.mean_y, s.sd_x, s.sd_y,
                          0.0 if math.isnan(s.rho) else s.rho)
            for s in design.strata
        )
        return cls(strata, family=family, seed=seed)


@dataclass(frozen=True)
class PopulationStratum:
    id: str
    y: np.ndarray
    x: np.ndarray

    @property
    def N(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class FinitePopulation:
    """Fixed unit values per stratum; the design-based truth."""

    strata: tuple[PopulationStratum, ...]
    name: str | None = None

    @property
    def mean_y(self) -> float:
        N = sum(s.N for s in self.strata)
        return float(sum(s.y.sum() for s in self.strata) / N)

    def design(self, n: Sequence[int]) -> StratifiedDesign:
        """Realized population summary with sample sizes ``n`` attached."""
        if len(n) != len(self.strata):
            raise ValueError(f"expected {len(self.strata)} sample sizes, got {len(n)}")
        records = []
        for s, n_h in zip(self.strata, n):
            sx = float(np.std(s.x, ddof=1))
            sy = float(np.std(s.y, ddof=1))
            cov = float(np.dot(s.x - s.x.mean(), s.y - s.y.mean()) / (s.N - 1))
            rho = cov / (sx * sy) if sx > 0 and sy > 0 else math.nan
            if not math.isnan(rho):
                rho = min(1.0, max(-1.0, rho))
            records.append(dict(
                id=s.id, N=s.N, n=int(n_h), mean_x=float(s.x.mean()), mean_y=float(s.y.mean()),
                sd_x=sx, sd_y=sy, rho=rho, cov_xy=cov if sx > 0 and sy > 0 else None,
            ))
        return finalize_design(records, name=self.name)


def _lognormal_params(mean: float, sd: float) -> tuple[float, float]:
    sigma2 = math.log1p((sd / mean) ** 2)
    return math.log(mean) - sigma2 / 2, math.sqrt(sigma2)


def gen_population(spec: PopulationSpec) -> FinitePopulation:
    """Draw a finite population from the requested bivariate family.

    Gaussian units are ``x = mx + sx z1``, ``y = my + sy (rho z1 + sqrt(1-rho^2) z2)``.
    Lognormal units exponentiate a correlated normal pair whose parameters
    give the target means and sds; the normal correlation is chosen to hit
    the target correlation, clipped to ``[-1, 1]`` when it is unattainable.
    """
    out = []
    for h, s in enumerate(spec.strata):
        rng = _stream(spec.seed, _POP_DOMAIN, h)
        z1 = rng.standard_normal(s.N)
        z2 = rng.standard_normal(s.N)
        if spec.family == "gaussian":
            x = s.mean_x + s.sd_x * z1
            y = s.mean_y + s.sd_y * (s.rho * z1 + math.sqrt(1 - s.rho**2) * z2)
        else:
            mu_x, sg_x = _lognormal_params(s.mean_x, s.sd_x)
            mu_y, sg_y = _lognormal_params(s.mean_y, s.sd_y)
            if sg_x > 0 and sg_y > 0:
                arg = 1 + s.rho * math.sqrt(math.expm1(sg_x**2) * math.expm1(sg_y**2))
                r = math.log(arg) / (sg_x * sg_y) if arg > 0 else -1.0
                r = min(1.0, max(-1.0, r))
            else:
                r = 0.0
            x = np.exp(mu_x + sg_x * z1)
            y = np.exp(mu_y + sg_y * (r * z1 + math.sqrt(1 - r**2) * z2))
        x.setflags(write=False)
        y.setflags(write=False)
        out.append(PopulationStratum(s.id, y, x))
    return FinitePopulation(tuple(out))


def population_from_units(data: dict[str, tuple[Sequence[float], Sequence[float]]],
                          name: str | None = None) -> FinitePopulation:
    """Wrap known unit values ``{stratum_id: (y, x)}`` as a population."""
    strata = []
    for k, (y, x) in data.items():
        y = np.array(y, dtype=float)
        x = np.array(x, dtype=float)
        if y.shape != x.shape or y.ndim != 1 or y.size < 2:
            raise InvalidSpec(f"stratum {k!r}: need equal-length y and x with at least 2 units")
        y.setflags(write=False)
        x.setflags(write=False)
        strata.append(PopulationStratum(str(k), y, x))
    return FinitePopulation(tuple(strata), name=name)


def _check_n(pop: FinitePopulation, n: Sequence[int]) -> list[int]:
    if len(n) != len(pop.strata):
        raise ValueError(f"expected {len(pop.strata)} sample sizes, got {len(n)}")
    out = []
    for s, n_h in zip(pop.strata, n):
        if n_h < 1:
            raise ValueError(f"stratum {s.id!r}: n must be >= 1")
        if n_h > s.N:
            raise SampleExceedsStratum(f"stratum {s.id!r}: n={n_h} exceeds N={s.N}")
        out.append(int(n_h))
    return out


def _draw_indices(seed: int, rep: int, h: int, N: int, n: int) -> np.ndarray:
    return _stream(seed, _SAMPLE_DOMAIN, rep, h).choice(N, size=n, replace=False)


def draw_srswor(pop: FinitePopulation, n: Sequence[int], replicate_index: int, seed: int) -> SurveySample:
    """One stratified SRSWOR sample, independent across strata."""
    n = _check_n(pop, n)
    strata = []
    for h, (s, n_h) in enumerate(zip(pop.strata, n)):
        idx = _draw_indices(seed, replicate_index, h, s.N, n_h)
        strata.append(StratumSample(s.id, s.y[idx], s.x[idx]))
    return SurveySample(tuple(strata))


@dataclass
class _Params:
    a: np.ndarray | None
    lambda1: float | None
    lambda2: float | None


def _sample_stats(y: np.ndarray, x: np.ndarray):
    """Means, x-variance and slope over the last axis (divisor n-1)."""
    n = y.shape[-1]
    ybar = y.mean(axis=-1)
    xbar = x.mean(axis=-1)
    if n < 2:
        nan = np.full(ybar.shape, np.nan)
        return ybar, xbar, nan, nan
    dx = x - xbar[..., None]
    dy = y - ybar[..., None]
    vx = np.einsum("...i,...i->...", dx, dx) / (n - 1)
    cxy = np.einsum("...i,...i->...", dx, dy) / (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(vx > 0, cxy / np.where(vx > 0, vx, 1.0), np.nan)
    return ybar, xbar, vx, slope


def _evaluate(ests, W, Xbar, ybar, xbar, vx, slope, params: _Params) -> np.ndarray:
    """Estimates for stacked samples; shape (k, len(ests)); nan marks failure."""
    out = np.full((ybar.shape[0], len(ests)), np.nan)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for j, est in enumerate(ests):
            ok = np.ones(ybar.shape[0], dtype=bool)
            kw = {}
            if est in (EstimatorId.T1, EstimatorId.TP):
                ok &= np.all(xbar != 0, axis=-1)
            if est in (EstimatorId.T3, EstimatorId.T4, EstimatorId.TP):
                ok &= np.all(Xbar + xbar != 0, axis=-1)
            if est is EstimatorId.TLR:
                ok &= np.all(vx > 0, axis=-1)
                kw["slope"] = slope
            if est is EstimatorId.TR:
                if params.a is None:
                    continue
                ok &= np.all(Xbar + (params.a - 1.0) * xbar != 0, axis=-1)
                kw["a"] = params.a
            if est is EstimatorId.TP:
                if params.lambda1 is None:
                    continue
                kw.update(lambda1=params.lambda1, lambda2=params.lambda2)
            val = stratum_values(est, ybar, xbar, Xbar, **kw) @ W
            ok &= np.isfinite(val)
            out[ok, j] = val[ok]
    return out


def _tuning(design: StratifiedDesign, ests) -> _Params:
    a = l1 = l2 = None
    if EstimatorId.TR in ests:
        try:
            a = opt_a(design)
        except StrataError:
            pass
    if EstimatorId.TP in ests:
        try:
            l1, l2 = opt_lambdas(design)
        except StrataError:
            pass
    return _Params(a, l1, l2)


def _theoretical(design: StratifiedDesign, est: EstimatorId, params: _Params) -> float | None:
    try:
        if est is EstimatorId.TR:
            return None if params.a is None else mse_tR(design, params.a)
        if est is EstimatorId.TP:
            if params.lambda1 is None:
                return None
            return mse_tp(moment_bundle(design), params.lambda1, params.lambda2)
        return mse_classical(design, est)
    except StrataError:
        return None


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("STRATA_THREADS", "1") or 1)
    return max(1, threads)


@dataclass
class SimulationRow:
    id: str
    empirical_mse: float | None
    empirical_bias: float | None
    mc_standard_error: float | None
    replicates: int
    failed: int
    theoretical_mse: float | None

    @property
    def ratio(self) -> float | None:
        if self.empirical_mse is None or not self.theoretical_mse:
            return None
        return self.empirical_mse / self.theoretical_mse

    @property
    def flagged(self) -> bool:
        total = self.replicates + self.failed
        return total > 0 and self.failed / total > FAILURE_FLAG_RATE


@dataclass
class SimulationReport:
    rows: list[SimulationRow]
    reps: int
    seed: int
    truth: float
    n: list[int]
    lambda1: float | None = None
    lambda2: float | None = None
    a_opt: list[float] | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __getitem__(self, est: str | EstimatorId) -> SimulationRow:
        key = str(est)
        for r in self.rows:
            if r.id == key:
                return r
        raise KeyError(key)


def _summarize(est: EstimatorId, values: np.ndarray, truth: float, theo: float | None) -> SimulationRow:
    ok = ~np.isnan(values)
    k = int(ok.sum())
    if k == 0:
        return SimulationRow(est.value, None, None, None, 0, int(values.size), theo)
    err = values[ok] - truth
    with np.errstate(over="ignore", invalid="ignore"):
        sq = err * err
        se = float(np.std(sq, ddof=1) / math.sqrt(k)) if k > 1 else math.nan
    return SimulationRow(est.value, float(sq.mean()), float(err.mean()), se, k,
                         int(values.size - k), theo)


def simulate(
    pop: FinitePopulation,
    n: Sequence[int],
    estimators: Sequence[EstimatorId | str] = ALL_ESTIMATORS,
    reps: int = 10_000,
    seed: int = 1,
    threads: int | None = None,
) -> SimulationReport:
    """Empirical MSE and bias of each estimator over ``reps`` SRSWOR replicates.

    ``tR`` and ``tp`` use tuning constants computed from the realized
    population summary. Replicates in which an estimator's preconditions fail
    are excluded for that estimator and counted in ``failed``.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    n = _check_n(pop, n)
    ests = [EstimatorId.parse(e) for e in estimators]
    design = pop.design(n)
    params = _tuning(design, ests)
    W, Xbar = np.asarray(design.W), np.asarray(design.Xbar)
    truth = pop.mean_y

    def run(start: int) -> np.ndarray:
        stop = min(start + CHUNK, reps)
        cols = []
        for h, (s, n_h) in enumerate(zip(pop.strata, n)):
            idx = np.stack([_draw_indices(seed, r, h, s.N, n_h) for r in range(start, stop)])
            cols.append(_sample_stats(s.y[idx], s.x[idx]))
        ybar, xbar, vx, slope = (np.stack([c[i] for c in cols], axis=-1) for i in range(4))
        return _evaluate(ests, W, Xbar, ybar, xbar, vx, slope, params)

    starts = range(0, reps, CHUNK)
    workers = _threads(threads)
    if workers == 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    values = np.concatenate(parts, axis=0)

    rows = [_summarize(e, values[:, j], truth, _theoretical(design, e, params))
            for j, e in enumerate(ests)]
    return SimulationReport(
        rows=rows, reps=reps, seed=seed, truth=truth, n=list(n),
        lambda1=params.lambda1, lambda2=params.lambda2,
        a_opt=None if params.a is None else [float(v) for v in params.a],
    )


@dataclass
class ExactMoments:
    id: str
    expectation: float | None
    variance: float | None
    mse: float | None
    samples: int
    failed: int


def _combo_stats(s: PopulationStratum, n_h: int):
    idx = np.array(list(combinations(range(s.N), n_h)), dtype=np.intp)
    return _sample_stats(s.y[idx], s.x[idx])


def enumerate_exact(
    pop: FinitePopulation,
    n: Sequence[int],
    estimators: Sequence[EstimatorId | str] = ALL_ESTIMATORS,
) -> dict[str, ExactMoments]:
    """Exact design expectation, variance and MSE by visiting every stratified sample."""
    n = _check_n(pop, n)
    counts = [math.comb(s.N, n_h) for s, n_h in zip(pop.strata, n)]
    total = math.prod(counts)
    if total > MAX_ENUMERATION:
        raise TooManySamples(f"{total} stratified samples exceed the limit of {MAX_ENUMERATION}")
    ests = [EstimatorId.parse(e) for e in estimators]
    design = pop.design(n)
    params = _tuning(design, ests)
    W, Xbar = np.asarray(design.W), np.asarray(design.Xbar)
    truth = pop.mean_y
    per = [_combo_stats(s, n_h) for s, n_h in zip(pop.strata, n)]

    k = len(ests)
    n_ok = np.zeros(k, dtype=np.int64)
    s_err = np.zeros(k)
    s_sq = np.zeros(k)
    step = 200_000
    for start in range(0, total, step):
        flat = np.arange(start, min(start + step, total))
        which = np.unravel_index(flat, counts)
        ybar, xbar, vx, slope = (
            np.stack([per[h][i][which[h]] for h in range(len(per))], axis=-1) for i in range(4)
        )
        vals = _evaluate(ests, W, Xbar, ybar, xbar, vx, slope, params)
        ok = ~np.isnan(vals)
        err = np.where(ok, vals - truth, 0.0)
        n_ok += ok.sum(axis=0)
        s_err += err.sum(axis=0)
        s_sq += (err * err).sum(axis=0)

    out = {}
    for j, e in enumerate(ests):
        if n_ok[j] != total:
            # expectation over a partial sample space is not a design expectation
            out[e.value] = ExactMoments(e.value, None, None, None, total, int(total - n_ok[j]))
            continue
        bias = s_err[j] / total
        mse = s_sq[j] / total
        out[e.value] = ExactMoments(e.value, truth + bias, mse - bias * bias, mse, total, 0)
    return out


def grid_lambda_oracle(
    design: StratifiedDesign,
    lambda1_range: tuple[float, float],
    lambda2_range: tuple[float, float],
    resolution: int | tuple[int, int] = 400,
) -> tuple[float, float, float]:
    """Brute-force argmin of :func:`~stratmean.moments.mse_tp` over a rectangular grid.

    Ties resolve to the first grid point in row-major order.
    """
    r1, r2 = (resolution, resolution) if isinstance(resolution, int) else resolution
    if r1 < 10 or r2 < 10:
        raise ValueError("resolution must be >= 10 per axis")
    (a1, b1), (a2, b2) = lambda1_range, lambda2_range
    if not (b1 > a1 and b2 > a2):
        raise EmptyRange(f"empty lambda range {lambda1_range} x {lambda2_range}")
    mb = moment_bundle(design)
    g1 = np.linspace(a1, b1, r1)[:, None]
    g2 = np.linspace(a2, b2, r2)[None, :]
    mse = mse_tp(mb, g1, g2)
    i, j = np.unravel_index(int(np.argmin(mse)), mse.shape)
    return float(g1[i, 0]), float(g2[0, j]), float(mse[i, j])
