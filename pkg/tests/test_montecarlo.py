import math
from collections import Counter

import numpy as np
import pytest

from stratmean.errors import EmptyRange, InvalidSpec, SampleExceedsStratum, SingularSystem, TooManySamples
from stratmean.design import finalize_design
from stratmean.moments import bias_tp, mse_classical, mse_tp, opt_lambdas
from stratmean.montecarlo import (
    PopulationSpec,
    StratumTarget,
    draw_srswor,
    enumerate_exact,
    gen_population,
    grid_lambda_oracle,
    population_from_units,
    simulate,
)

from helpers import tiny_population


def target(id="a", N=50, mx=10.0, my=5.0, sx=2.0, sy=1.0, rho=0.5):
    return StratumTarget(id, N, mx, my, sx, sy, rho)


class TestGenPopulation:
    def test_degenerate(self):
        pop = gen_population(PopulationSpec((target(sx=0.0, sy=0.0),), seed=1))
        s = pop.strata[0]
        assert np.all(s.x == 10.0) and np.all(s.y == 5.0)

    def test_perfect_correlation(self):
        pop = gen_population(PopulationSpec((target(N=1000, rho=1.0),), seed=2))
        s = pop.strata[0]
        assert np.corrcoef(s.x, s.y)[0, 1] >= 0.99

    def test_lognormal_moments(self):
        spec = PopulationSpec((target(N=200_000, mx=10, my=5, sx=8, sy=4, rho=0.7),),
                              family="lognormal", seed=3)
        s = gen_population(spec).strata[0]
        assert s.x.min() > 0
        assert s.x.mean() == pytest.approx(10, rel=0.02)
        assert s.y.std(ddof=1) == pytest.approx(4, rel=0.05)
        assert np.corrcoef(s.x, s.y)[0, 1] == pytest.approx(0.7, abs=0.03)

    def test_deterministic(self):
        spec = PopulationSpec((target(), target("b", N=30)), family="lognormal", seed=99)
        a, b = gen_population(spec), gen_population(spec)
        for sa, sb in zip(a.strata, b.strata):
            assert sa.x.tobytes() == sb.x.tobytes() and sa.y.tobytes() == sb.y.tobytes()

    @pytest.mark.parametrize("kw", [
        dict(strata=(target(N=1),)),
        dict(strata=(target(rho=2.0),)),
        dict(strata=(target(mx=-1.0),), family="lognormal"),
        dict(strata=(target(),), family="cauchy"),
        dict(strata=(target(),), seed=-1),
        dict(strata=()),
    ])
    def test_invalid(self, kw):
        with pytest.raises(InvalidSpec):
            PopulationSpec(**kw)


class TestDraw:
    def test_census_draw(self):
        pop = gen_population(PopulationSpec((target(N=20),), seed=1))
        s = draw_srswor(pop, [20], 0, 5).strata[0]
        assert s.mean_y == pytest.approx(pop.strata[0].y.mean(), rel=1e-14)
        assert sorted(s.x) == sorted(pop.strata[0].x)

    def test_inclusion_probabilities(self):
        pop = population_from_units({"a": (np.arange(5.0), np.arange(5.0))})
        reps = 100_000
        counts = Counter()
        subsets = Counter()
        for r in range(reps):
            ys = draw_srswor(pop, [2], r, 123).strata[0].y
            counts.update(ys.tolist())
            subsets[tuple(sorted(ys.tolist()))] += 1
        se = math.sqrt(0.4 * 0.6 / reps)
        for unit in range(5):
            assert abs(counts[float(unit)] / reps - 0.4) <= 3 * se
        # every one of the C(5,2) subsets appears with frequency near 1/10
        assert len(subsets) == 10
        se_sub = math.sqrt(0.1 * 0.9 / reps)
        assert all(abs(c / reps - 0.1) <= 4 * se_sub for c in subsets.values())

    def test_replicate_determinism(self):
        pop = gen_population(PopulationSpec((target(N=100), target("b", N=80)), seed=1))
        a = draw_srswor(pop, [10, 5], 42, 7)
        draw_srswor(pop, [10, 5], 41, 7)
        b = draw_srswor(pop, [10, 5], 42, 7)
        for sa, sb in zip(a.strata, b.strata):
            assert sa.y.tobytes() == sb.y.tobytes()

    def test_too_large(self):
        pop = gen_population(PopulationSpec((target(N=10),), seed=1))
        with pytest.raises(SampleExceedsStratum):
            draw_srswor(pop, [11], 0, 0)


class TestSimulate:
    def test_census_zero_mse(self):
        pop = gen_population(PopulationSpec((target(N=20), target("b", N=30)), seed=4))
        rep = simulate(pop, [20, 30], ["mean", "t1", "t2", "t3", "t4", "tlr"], reps=100, seed=1)
        for row in rep.rows:
            assert row.empirical_mse == pytest.approx(0.0, abs=1e-20)

    def test_report_invariants(self):
        pop = gen_population(PopulationSpec((target(N=200), target("b", N=150)), seed=5))
        rep = simulate(pop, [10, 8], reps=500, seed=2)
        for row in rep.rows:
            assert row.replicates > 0
            assert row.empirical_mse >= row.empirical_bias**2
        assert rep.lambda1 is not None and len(rep.a_opt) == 2

    def test_thread_independence(self):
        pop = gen_population(PopulationSpec((target(N=200), target("b", N=150)), seed=6))
        a = simulate(pop, [10, 8], reps=2500, seed=3, threads=1)
        b = simulate(pop, [10, 8], reps=2500, seed=3, threads=3)
        assert a == b

    def test_failures_counted(self):
        # x values straddle zero so t1 sample means can hit exactly 0
        pop = population_from_units({"a": ([1.0, 2.0, 3.0, 4.0], [-1.0, 1.0, -2.0, 2.0])})
        rep = simulate(pop, [2], ["mean", "t1"], reps=400, seed=1)
        assert rep["mean"].failed == 0
        assert rep["t1"].failed > 0
        assert rep["t1"].flagged

    def test_min_reps(self):
        pop = gen_population(PopulationSpec((target(),), seed=1))
        with pytest.raises(ValueError):
            simulate(pop, [5], reps=50)

    def test_bias_tp_sign_and_magnitude(self):
        spec = PopulationSpec(
            (target("a", 3000, 40, 20, 8, 5, 0.8), target("b", 3000, 60, 35, 12, 8, 0.8)),
            seed=8,
        )
        pop = gen_population(spec)
        n = [300, 300]
        d = pop.design(n)
        l1, l2 = opt_lambdas(d)
        rep = simulate(pop, n, ["tp"], reps=4000, seed=9)
        analytic = bias_tp(d, l1, l2)
        empirical = rep["tp"].empirical_bias
        assert np.sign(analytic) == np.sign(empirical)
        assert 0.1 < empirical / analytic < 10


class TestEnumerate:
    def test_two_strata_exact_variance(self):
        rng = np.random.default_rng(10)
        pop = tiny_population(rng)
        ex = enumerate_exact(pop, [2, 2])
        assert ex["mean"].samples == 100
        d = pop.design([2, 2])
        assert ex["mean"].variance == pytest.approx(mse_classical(d, "mean"), rel=1e-12)
        assert ex["mean"].expectation == pytest.approx(pop.mean_y, rel=1e-12)

    def test_tlr_first_order_band(self):
        # small-n regime: record the ratio, only a loose sanity band
        rng = np.random.default_rng(11)
        pop = tiny_population(rng)
        ex = enumerate_exact(pop, [2, 2], ["tlr"])
        ratio = ex["tlr"].mse / mse_classical(pop.design([2, 2]), "tlr")
        print(f"exact/first-order MSE ratio for tlr at n_h=2: {ratio:.3f}")
        assert ratio > 0

    def test_census_single_sample(self):
        rng = np.random.default_rng(12)
        pop = tiny_population(rng)
        ex = enumerate_exact(pop, [5, 5])
        assert ex["mean"].samples == 1
        for est in ("mean", "t1", "t2", "t3", "t4", "tlr", "tR"):
            assert ex[est].mse == pytest.approx(0.0, abs=1e-20)

    def test_matches_brute_force_loop(self):
        rng = np.random.default_rng(13)
        pop = tiny_population(rng, sizes=(4, 5))
        from itertools import combinations

        d = pop.design([2, 3])
        W = d.W
        vals = []
        for c0 in combinations(range(4), 2):
            for c1 in combinations(range(5), 3):
                s0 = pop.strata[0].y[list(c0)].mean() * pop.strata[0].x.mean() / pop.strata[0].x[list(c0)].mean()
                s1 = pop.strata[1].y[list(c1)].mean() * pop.strata[1].x.mean() / pop.strata[1].x[list(c1)].mean()
                vals.append(W[0] * s0 + W[1] * s1)
        vals = np.array(vals)
        ex = enumerate_exact(pop, [2, 3], ["t1"])
        assert ex["t1"].expectation == pytest.approx(vals.mean(), rel=1e-12)
        assert ex["t1"].mse == pytest.approx(np.mean((vals - pop.mean_y) ** 2), rel=1e-10)

    def test_guard(self):
        pop = gen_population(PopulationSpec((target(N=60), target("b", N=60)), seed=1))
        with pytest.raises(TooManySamples):
            enumerate_exact(pop, [5, 5])


class TestGrid:
    def design(self):
        return finalize_design([
            dict(id="a", N=100, n=10, mean_x=10, mean_y=6, sd_x=3, sd_y=2, rho=0.7),
            dict(id="b", N=80, n=12, mean_x=20, mean_y=9, sd_x=5, sd_y=3, rho=0.6),
        ])

    def test_local_bracketing(self):
        d = self.design()
        l1, l2 = opt_lambdas(d)
        span = 1e-3
        res = 101
        g1, g2, _ = grid_lambda_oracle(d, (l1 - span, l1 + span), (l2 - span, l2 + span), res)
        cell = 2 * span / (res - 1)
        assert abs(g1 - l1) <= cell and abs(g2 - l2) <= cell

    def test_broad(self):
        d = self.design()
        best = mse_tp(d, *opt_lambdas(d))
        _, _, gm = grid_lambda_oracle(d, (0, 2), (-2, 2), 400)
        assert gm >= best * (1 - 1e-9)

    def test_degenerate_design_runs(self):
        d = finalize_design([dict(id="a", N=30, n=30, mean_x=10, mean_y=6, sd_x=3, sd_y=2, rho=0.7)])
        with pytest.raises(SingularSystem):
            opt_lambdas(d)
        g1, g2, gm = grid_lambda_oracle(d, (0, 2), (-1, 1), 50)
        assert g1 == pytest.approx(1.0, abs=2 / 49)

    def test_bad_ranges(self):
        d = self.design()
        with pytest.raises(EmptyRange):
            grid_lambda_oracle(d, (1, 1), (0, 1), 20)
        with pytest.raises(ValueError):
            grid_lambda_oracle(d, (0, 1), (0, 1), 5)
