"""Random input generators shared by the test modules."""

import numpy as np

from stratmean.design import finalize_design
from stratmean.montecarlo import population_from_units


def random_design(rng, n_strata=None, positive_rho=True):
    L = int(rng.integers(1, 9)) if n_strata is None else n_strata
    records = []
    for h in range(L):
        N = int(rng.integers(10, 500))
        mx = float(rng.uniform(5, 500))
        my = float(rng.uniform(5, 500))
        lo = 0.05 if positive_rho else -0.99
        records.append(dict(
            id=f"s{h}", N=N, n=int(rng.integers(2, N + 1)),
            mean_x=mx, mean_y=my,
            sd_x=float(rng.uniform(0.05, 2.0) * mx), sd_y=float(rng.uniform(0.05, 2.0) * my),
            rho=float(rng.uniform(lo, 0.99)),
        ))
    return finalize_design(records)


def random_designs(seed, count, **kw):
    rng = np.random.default_rng(seed)
    return [random_design(rng, **kw) for _ in range(count)]


def tiny_population(rng, sizes=(5, 5)):
    data = {}
    for h, N in enumerate(sizes):
        x = rng.uniform(1, 20, N)
        y = 2 + 0.8 * x + rng.normal(0, 2, N)
        data[f"h{h}"] = (y, x)
    return population_from_units(data)
