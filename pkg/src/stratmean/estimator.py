"""scikit-learn style front end for the point estimators.

``fit`` takes unit-level sample data (``X`` = auxiliary values, ``y`` = study
values, ``strata`` = stratum labels) plus the population design, and stores
the point estimate and its first-order MSE as fitted attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted, column_or_1d

from .design import StratifiedDesign, StratumSample, SurveySample
from .estimators import EstimatorId, point_estimate
from .moments import bias_tp, moment_bundle, mse_classical, mse_tp, mse_tR, opt_a, opt_lambdas


def check_stratified_sample(X, y, strata) -> SurveySample:
    """Validate arrays and group them into a :class:`SurveySample`.

    ``X`` may be 1-d or a single column. Strata keep first-appearance order.
    """
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"X must have one auxiliary column, got {X.shape[1]}")
        X = X[:, 0]
    y = column_or_1d(check_array(y, ensure_2d=False, dtype=np.float64))
    strata = np.asarray(strata)
    check_consistent_length(X, y, strata)
    labels = list(dict.fromkeys(strata.tolist()))
    return SurveySample(tuple(
        StratumSample(str(lab), y[strata == lab], X[strata == lab]) for lab in labels
    ))


class StratifiedMeanEstimator(BaseEstimator):
    """Estimate a finite-population mean from a stratified SRSWOR sample.

    Parameters
    ----------
    method : str, default="tp"
        One of ``mean, t1, t2, t3, t4, tlr, tR, tp``.
    lambda1, lambda2 : float or None
        Constants for ``tp``; ``None`` uses the design optimum.
    a : sequence of float or None
        Per-stratum constants for ``tR``; ``None`` uses the design optimum.

    Attributes
    ----------
    estimate_ : float
    mse_ : float
        First-order MSE of the chosen estimator under the design.
    bias_ : float
        First-order bias (``tp`` only, 0 otherwise at this order).
    lambda1_, lambda2_, a_ :
        Tuning constants actually used.
    """

    def __init__(self, method="tp", lambda1=None, lambda2=None, a=None):
        self.method = method
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.a = a

    def fit(self, X, y, strata, design: StratifiedDesign):
        est = EstimatorId.parse(self.method)
        sample = check_stratified_sample(X, y, strata)
        self.lambda1_ = self.lambda2_ = self.a_ = None
        self.bias_ = 0.0
        if est is EstimatorId.TP:
            if self.lambda1 is None or self.lambda2 is None:
                l1, l2 = opt_lambdas(design)
                self.lambda1_ = l1 if self.lambda1 is None else float(self.lambda1)
                self.lambda2_ = l2 if self.lambda2 is None else float(self.lambda2)
            else:
                self.lambda1_, self.lambda2_ = float(self.lambda1), float(self.lambda2)
            self.mse_ = mse_tp(moment_bundle(design), self.lambda1_, self.lambda2_)
            self.bias_ = bias_tp(design, self.lambda1_, self.lambda2_)
        elif est is EstimatorId.TR:
            self.a_ = opt_a(design) if self.a is None else np.asarray(self.a, dtype=float)
            self.mse_ = mse_tR(design, self.a_)
        else:
            self.mse_ = mse_classical(design, est)
        self.estimate_ = point_estimate(
            est, sample, design, a=self.a_, lambda1=self.lambda1_, lambda2=self.lambda2_
        )
        self.n_strata_ = len(sample.strata)
        return self

    def predict(self, X=None):
        """The fitted population-mean estimate (input is ignored)."""
        check_is_fitted(self, "estimate_")
        return self.estimate_
