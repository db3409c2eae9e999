r"""Jackknife and jackknife+ prediction intervals around a fitted surrogate.

Non-conformity scores are the absolute leave-one-out residuals, optionally
divided by the square root of the output variance ("normalized"); normalized
quantiles are rescaled back to output units before interval construction, so
the two score types produce the same intervals up to roundoff.

The jackknife interval is symmetric about the full-model prediction:

$$[\widehat{\mu}(x^*) - \widehat{q}_{1-s}\{a_m\},\
   \widehat{\mu}(x^*) + \widehat{q}_{1-s}\{a_m\}].$$

The jackknife+ interval is built from order statistics of the shifted
leave-one-out predictions and need not be symmetric:

$$[\widehat{q}_{s}\{\widehat{\mu}_{\sim m}(x^*) - a_m\},\
   \widehat{q}_{1-s}\{\widehat{\mu}_{\sim m}(x^*) + a_m\}],$$

and carries a finite-sample marginal coverage guarantee of $1 - 2s$ under
exchangeability. Empirical quantiles use the conformal finite-sample
convention: the upper quantile is the $\lceil (1-s)(M+1) \rceil$-th smallest
value and the lower the $\lfloor s(M+1) \rfloor$-th, degrading to an
unbounded interval (explicit infinities, never clamped) when the index falls
outside 1..M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ZeroVarianceError
from .pce import (
    VARIANCE_FLOOR,
    PceModel,
    loo_predict,
    output_variance,
    predict,
)

METHODS = ("jackknife", "jackknife_plus")
SCORES = ("absolute", "normalized")


@dataclass(frozen=True)
class ConformalConfig:
    """Interval construction choices.

    Attributes:
        method: "jackknife" or "jackknife_plus".
        score: "absolute" or "normalized" non-conformity scores.
        significance: Target miscoverage s in (0, 1); the nominal coverage
            is 1 - s.
    """

    method: str = "jackknife_plus"
    score: str = "absolute"
    significance: float = 0.05

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.score not in SCORES:
            raise ValueError(f"score must be one of {SCORES}, got {self.score!r}")
        if not 0.0 < self.significance < 1.0:
            raise ValueError(f"significance must lie in (0, 1), got {self.significance!r}")


@dataclass(frozen=True)
class PredictionInterval:
    """Closed interval [lower, upper] around a point prediction `center`.

    Jackknife intervals are symmetric about the center; jackknife+ intervals
    are generally not, the center being recorded for reporting only. Unbounded
    intervals carry explicit infinities.
    """

    lower: float
    upper: float
    center: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower!r} exceeds upper {self.upper!r}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def is_unbounded(self) -> bool:
        return math.isinf(self.lower) or math.isinf(self.upper)


def _upper_index(n: int, significance: float) -> int:
    """1-based order-statistic index ceil((1-s)(n+1)), computed exactly.

    Fractions avoid float boundary accidents such as 0.95 * 20 evaluating
    just above 19 and spuriously overflowing the sample.
    """
    s = Fraction(significance)
    return math.ceil((1 - s) * (n + 1))


def finite_quantile_upper(values: np.ndarray, significance: float) -> float:
    """Finite-sample upper quantile: the ceil((1-s)(M+1))-th smallest value.

    Returns +inf when the index exceeds M, signalling that the sample is too
    small for the requested significance and the interval is unbounded.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot take a quantile of an empty sample")
    k = _upper_index(values.size, significance)
    if k > values.size:
        return float("inf")
    return float(np.partition(values, k - 1)[k - 1])


def finite_quantile_lower(values: np.ndarray, significance: float) -> float:
    """Finite-sample lower quantile: the floor(s(M+1))-th smallest value.

    Returns -inf when the index falls below 1. Identical to
    -finite_quantile_upper(-values, significance).
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot take a quantile of an empty sample")
    j = values.size + 1 - _upper_index(values.size, significance)
    if j < 1:
        return float("-inf")
    return float(np.partition(values, j - 1)[j - 1])


def scores(model: PceModel, cfg: ConformalConfig) -> np.ndarray:
    """Non-conformity scores of the training samples.

    Absolute: |r_m|. Normalized: |r_m| / sqrt(Var(Y)) with the variance per
    the model's selected estimator.

    Raises:
        ZeroVarianceError: For normalized scores on a zero-variance target.
    """
    absolute = np.abs(model.loo_residuals)
    if cfg.score == "absolute":
        return absolute
    variance = output_variance(model)
    if variance <= VARIANCE_FLOOR:
        raise ZeroVarianceError(
            f"output variance {variance!r} too small to normalize scores"
        )
    return absolute / math.sqrt(variance)


def _scores_in_output_units(model: PceModel, cfg: ConformalConfig) -> np.ndarray:
    """Scores rescaled back to output units (quantile rescaling)."""
    a = scores(model, cfg)
    if cfg.score == "normalized":
        a = a * math.sqrt(output_variance(model))
    return a


def jackknife_interval(model: PceModel, x: np.ndarray, cfg: ConformalConfig) -> PredictionInterval:
    """Symmetric interval mu(x) +/- q_{1-s}{a_m} at one point."""
    center, lower, upper = _jackknife_arrays(model, np.atleast_2d(np.asarray(x, dtype=float)), cfg)
    return PredictionInterval(lower=float(lower[0]), upper=float(upper[0]), center=float(center[0]))


def jackknife_plus_interval(
    model: PceModel, x: np.ndarray, cfg: ConformalConfig
) -> PredictionInterval:
    """Asymmetric interval from order statistics of mu_{~m}(x) -/+ a_m."""
    center, lower, upper = _jackknife_plus_arrays(
        model, np.atleast_2d(np.asarray(x, dtype=float)), cfg
    )
    return PredictionInterval(lower=float(lower[0]), upper=float(upper[0]), center=float(center[0]))


def prediction_intervals(
    model: PceModel, points: np.ndarray, cfg: ConformalConfig
) -> list[PredictionInterval]:
    """Intervals for a batch of points, dispatching on cfg.method."""
    centers, lowers, uppers = interval_arrays(model, points, cfg)
    return [
        PredictionInterval(lower=float(lo), upper=float(hi), center=float(c))
        for c, lo, hi in zip(centers, lowers, uppers)
    ]


def interval_arrays(
    model: PceModel, points: np.ndarray, cfg: ConformalConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized interval bounds: (centers, lowers, uppers), each shape (n,)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if cfg.method == "jackknife":
        return _jackknife_arrays(model, points, cfg)
    return _jackknife_plus_arrays(model, points, cfg)


def _jackknife_arrays(model, points, cfg):
    centers = predict(model, points)
    half = finite_quantile_upper(_scores_in_output_units(model, cfg), cfg.significance)
    return centers, centers - half, centers + half


def _jackknife_plus_arrays(model, points, cfg):
    centers = predict(model, points)
    a = _scores_in_output_units(model, cfg)
    m = a.shape[0]
    k = _upper_index(m, cfg.significance)
    if k > m:
        inf = np.full_like(centers, np.inf)
        return centers, -inf, inf
    loo = loo_predict(model, points)
    lowers = np.partition(loo - a, m - k, axis=1)[:, m - k]
    uppers = np.partition(loo + a, k - 1, axis=1)[:, k - 1]
    return centers, lowers, uppers


def empirical_coverage(intervals, truths) -> float:
    """Fraction of truths falling inside their (closed) intervals."""
    intervals = list(intervals)
    truths = np.asarray(truths, dtype=float).ravel()
    if len(intervals) != truths.shape[0]:
        raise ValueError(
            f"{len(intervals)} intervals but {truths.shape[0]} truth values"
        )
    if len(intervals) == 0:
        raise ValueError("coverage of an empty set is undefined")
    lowers = np.array([iv.lower for iv in intervals])
    uppers = np.array([iv.upper for iv in intervals])
    hits = (lowers <= truths) & (truths <= uppers)
    return float(np.mean(hits))
