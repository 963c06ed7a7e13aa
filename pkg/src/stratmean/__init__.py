"""Estimators of a finite-population mean under stratified SRSWOR.

Covers the stratified mean, separate ratio/product estimators and their
exponential variants, the separate regression estimator, an exponential
ratio-type estimator with per-stratum constants, and a two-parameter
exponential estimator, together with their first-order MSEs and a
simulation harness for checking those approximations.
"""

from .design import (
    StratifiedDesign,
    StratumFrame,
    StratumSample,
    SurveySample,
    TuningParams,
    finalize_design,
)
from .errors import StrataError
from .estimator import StratifiedMeanEstimator, check_stratified_sample
from .estimators import EstimatorId, point_estimate, point_estimate_classical, point_estimate_tp
from .io import builtin_dataset, parse_micro_csv, parse_summary_csv, write_report, write_summary_csv
from .moments import (
    AnalysisReport,
    MomentBundle,
    bias_tp,
    moment_bundle,
    mse_classical,
    mse_tp,
    mse_tR,
    opt_a,
    opt_lambdas,
    pre_table,
)
from .montecarlo import (
    FinitePopulation,
    PopulationSpec,
    SimulationReport,
    draw_srswor,
    enumerate_exact,
    gen_population,
    grid_lambda_oracle,
    simulate,
)

__version__ = "0.1.0"
