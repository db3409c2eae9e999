r"""Least-squares polynomial chaos fitting with closed-form leave-one-out.

The surrogate is $\widehat{\mu}(x) = \sum_k c_k \Psi_k(\xi(x))$ with
coefficients solving the least-squares problem $\min_c \|y - Dc\|_2$ over the
design matrix $D_{mk} = \Psi_k(\xi(x^{(m)}))$. Because the model is linear in
its coefficients, the residual and prediction of every leave-one-out refit
follow from a single factorization of $D$ via rank-one update identities:

* leverage $h_{mm} = d_m^\top (D^\top D)^{-1} d_m$ (hat-matrix diagonal),
* LOO residual $r_m = (y^{(m)} - \widehat{\mu}(x^{(m)})) / (1 - h_{mm})$,
* LOO prediction $\widehat{\mu}_{\sim m}(x^*)
  = \widehat{\mu}(x^*) - d_*^\top (D^\top D)^{-1} d_m\, r_m$.

No refit is ever performed; :func:`brute_force_loo` exists purely as an
independent oracle that does refit, for validating the closed forms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .basis import InputSpec, MultiIndexSet, eval_basis_matrix, to_reference
from .errors import (
    LeverageError,
    RankDeficientError,
    UnderdeterminedError,
    ZeroVarianceError,
)

# Condition numbers beyond this make LOO quantities meaningless in doubles.
CONDITION_LIMIT = 1e12

# Minimum allowed 1 - h_mm; smaller means a sample its own refit cannot spare.
LEVERAGE_FLOOR = 1e-10

VARIANCE_FLOOR = 1e-300

VARIANCE_ESTIMATORS = ("coefficients", "empirical")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Training data: input points paired with scalar responses."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float).ravel()
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError(
                f"{inputs.shape[0]} input rows but {outputs.shape[0]} outputs"
            )
        if outputs.shape[0] < 1:
            raise ValueError("dataset must contain at least one sample")
        if not np.all(np.isfinite(inputs)):
            raise ValueError("inputs contain non-finite values")
        if not np.all(np.isfinite(outputs)):
            raise ValueError("outputs contain non-finite values")
        object.__setattr__(self, "inputs", _readonly(inputs))
        object.__setattr__(self, "outputs", _readonly(outputs))

    def __len__(self) -> int:
        return self.outputs.shape[0]


@dataclass(frozen=True)
class PceModel:
    """Fitted surrogate plus everything needed for leave-one-out reuse.

    Attributes:
        index_set: Polynomial basis definition.
        input_spec: Box the inputs live on.
        coefficients: Least-squares coefficients c, shape (K,).
        normal_inverse: (D^T D)^{-1}, shape (K, K); None on deserialized models.
        hat_diag: Leverages h_mm, shape (M,).
        loo_residuals: Closed-form LOO residuals, shape (M,).
        loo_corrections: Matrix G with row m = (A d_m) * r_m, shape (M, K);
            the LOO prediction at x* is mu(x*) - G @ d_*.
        training_snapshot: Dataset used for fitting; None on deserialized
            models (kept for oracles and reporting, not for prediction).
        condition_number: 2-norm condition estimate of the design matrix.
        variance_estimator: Which output-variance estimate normalized scores
            and the relative LOO error use ("coefficients" or "empirical").
    """

    index_set: MultiIndexSet
    input_spec: InputSpec
    coefficients: np.ndarray
    normal_inverse: np.ndarray | None
    hat_diag: np.ndarray
    loo_residuals: np.ndarray
    loo_corrections: np.ndarray
    training_snapshot: Dataset | None = None
    condition_number: float = float("nan")
    variance_estimator: str = "coefficients"

    @property
    def n_train(self) -> int:
        return self.hat_diag.shape[0]

    @property
    def n_basis(self) -> int:
        return self.coefficients.shape[0]


def _design_matrix(inputs: np.ndarray, index_set: MultiIndexSet, spec: InputSpec) -> np.ndarray:
    return eval_basis_matrix(to_reference(inputs, spec), index_set)


def fit(
    data: Dataset,
    index_set: MultiIndexSet,
    spec: InputSpec,
    variance_estimator: str = "coefficients",
) -> PceModel:
    """Fits the surrogate and precomputes all leave-one-out quantities.

    Solves the least-squares problem through a thin QR factorization of the
    design matrix rather than the normal equations (which would square the
    condition number). Leverages are the squared row norms of the thin Q
    factor, and (D^T D)^{-1} is assembled from the triangular factor. Total
    cost is one factorization plus O(MK) postprocessing; no refits.

    Args:
        data: Training dataset with M samples.
        index_set: Basis with K elements.
        spec: Input box; dimensions must agree with data and basis.
        variance_estimator: "coefficients" (sum of squared non-constant
            coefficients) or "empirical" (sample variance of the training
            outputs), consumed by downstream normalized quantities.

    Returns:
        A frozen PceModel.

    Raises:
        UnderdeterminedError: If M < K.
        RankDeficientError: If the design condition number exceeds 1e12.
        LeverageError: If some 1 - h_mm < 1e-10 (e.g. the M = K
            interpolation regime, where the hat matrix is the identity).
    """
    if variance_estimator not in VARIANCE_ESTIMATORS:
        raise ValueError(f"unknown variance estimator {variance_estimator!r}")
    if index_set.input_dim != spec.dim:
        raise ValueError("basis and input spec dimensions disagree")
    m, k = len(data), len(index_set)
    if m < k:
        raise UnderdeterminedError(
            f"underdetermined fit: M={m} training samples < K={k} basis terms"
        )

    design = _design_matrix(data.inputs, index_set, spec)
    q, r = np.linalg.qr(design, mode="reduced")
    condition = float(np.linalg.cond(r))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise RankDeficientError(
            f"design matrix condition number {condition:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )

    coeffs = solve_triangular(r, q.T @ data.outputs)

    # h_mm = ||Q_m||^2 since H = Q Q^T; clip eps-level drift back into [0, 1].
    hat = np.einsum("ij,ij->i", q, q)
    if np.any(hat > 1.0 + 1e-8) or np.any(hat < -1e-8):
        raise RankDeficientError("leverages fall outside [0, 1] beyond roundoff")
    hat = np.clip(hat, 0.0, 1.0)

    one_minus_h = 1.0 - hat
    if np.any(one_minus_h < LEVERAGE_FLOOR):
        worst = int(np.argmin(one_minus_h))
        raise LeverageError(
            f"sample {worst} has leverage {hat[worst]!r}; "
            f"1 - h below {LEVERAGE_FLOOR:.0e} makes LOO residuals undefined"
        )

    residuals = data.outputs - design @ coeffs
    loo_residuals = residuals / one_minus_h

    r_inv = solve_triangular(r, np.eye(k))
    normal_inverse = r_inv @ r_inv.T
    loo_corrections = (design @ normal_inverse) * loo_residuals[:, None]

    return PceModel(
        index_set=index_set,
        input_spec=spec,
        coefficients=_readonly(coeffs),
        normal_inverse=_readonly(normal_inverse),
        hat_diag=_readonly(hat),
        loo_residuals=_readonly(loo_residuals),
        loo_corrections=_readonly(loo_corrections),
        training_snapshot=data,
        condition_number=condition,
        variance_estimator=variance_estimator,
    )


def predict(model: PceModel, x: np.ndarray):
    """Evaluates the surrogate at a point (N,) or batch (n, N).

    Returns a float for a single point, an array of shape (n,) for a batch.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = _design_matrix(np.atleast_2d(x), model.index_set, model.input_spec)
    values = rows @ model.coefficients
    return float(values[0]) if single else values


def loo_residuals(model: PceModel) -> np.ndarray:
    """Returns the stored closed-form LOO residuals, shape (M,)."""
    return model.loo_residuals


def loo_predict(model: PceModel, x: np.ndarray) -> np.ndarray:
    """Evaluates all M leave-one-out surrogates at new points without refits.

    Entry m is the prediction of the model fit without training sample m,
    obtained as mu(x*) - d_*^T (D^T D)^{-1} d_m r_m using the precomputed
    correction matrix, at O(MK) cost per point.

    Args:
        model: Fitted model.
        x: Point (N,) or batch (n, N).

    Returns:
        Array of shape (M,) for a single point, (n, M) for a batch.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = _design_matrix(np.atleast_2d(x), model.index_set, model.input_spec)
    center = rows @ model.coefficients
    values = center[:, None] - rows @ model.loo_corrections.T
    return values[0] if single else values


def brute_force_loo(
    data: Dataset,
    index_set: MultiIndexSet,
    spec: InputSpec,
    x_star: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Leave-one-out by actually refitting M times; the validation oracle.

    Deliberately naive and independent of the closed-form path: each refit
    solves its own least-squares problem with numpy.linalg.lstsq on the
    dataset minus one sample.

    Args:
        data: Training dataset with M samples (M - 1 >= K required).
        index_set: Basis.
        spec: Input box.
        x_star: Optional point (N,) or batch (n, N) at which to also record
            every refit's prediction.

    Returns:
        (residuals, predictions): residuals[m] = y_m - mu_without_m(x_m);
        predictions is None when x_star is None, else shape (M,) for a single
        point or (n, M) for a batch.
    """
    m, k = len(data), len(index_set)
    if m - 1 < k:
        raise UnderdeterminedError(
            f"brute-force LOO needs M - 1 >= K, got M={m}, K={k}"
        )
    design = _design_matrix(data.inputs, index_set, spec)
    star_rows = None
    single = False
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
        single = x_star.ndim == 1
        star_rows = _design_matrix(np.atleast_2d(x_star), index_set, spec)

    residuals = np.empty(m)
    predictions = np.empty((star_rows.shape[0], m)) if star_rows is not None else None
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        keep[i] = False
        coeffs, *_ = np.linalg.lstsq(design[keep], data.outputs[keep], rcond=None)
        keep[i] = True
        residuals[i] = data.outputs[i] - design[i] @ coeffs
        if predictions is not None:
            predictions[:, i] = star_rows @ coeffs
    if predictions is not None and single:
        predictions = predictions[0]
    return residuals, predictions


def pce_variance(model: PceModel) -> float:
    """Output-variance estimate from the coefficients: sum of c_k^2, k != 0.

    Valid because the basis is orthonormal; the zero multi-index carries the
    mean and is excluded.
    """
    nonconstant = [i for i, alpha in enumerate(model.index_set.indices) if any(alpha)]
    return float(np.sum(model.coefficients[nonconstant] ** 2))


def output_variance(model: PceModel, estimator: str | None = None) -> float:
    """Output variance per the model's (or an explicit) estimator choice.

    "coefficients" uses :func:`pce_variance`; "empirical" uses the unbiased
    sample variance of the training outputs (requires the training snapshot).
    """
    estimator = estimator or model.variance_estimator
    if estimator == "coefficients":
        return pce_variance(model)
    if estimator == "empirical":
        if model.training_snapshot is None:
            raise ValueError("empirical variance needs the training snapshot")
        outputs = model.training_snapshot.outputs
        if outputs.shape[0] < 2:
            raise ValueError("empirical variance needs at least two samples")
        return float(np.var(outputs, ddof=1))
    raise ValueError(f"unknown variance estimator {estimator!r}")


def relative_loo_error(model: PceModel, estimator: str | None = None) -> float:
    """Mean squared LOO residual divided by the output variance.

    Scale-free model-quality diagnostic: multiplying all outputs by a constant
    leaves it unchanged.

    Raises:
        ZeroVarianceError: If the variance estimate is below 1e-300 (e.g. a
            constant target).
    """
    variance = output_variance(model, estimator)
    if variance <= VARIANCE_FLOOR:
        raise ZeroVarianceError(
            f"output variance {variance!r} too small for a relative error"
        )
    return float(np.mean(model.loo_residuals**2) / variance)


def to_json(model: PceModel) -> str:
    """Serializes the model to a JSON document.

    All reals render in shortest round-trip decimal. The training snapshot
    and factorization byproducts are not part of the wire schema; a
    deserialized model predicts and conformalizes but cannot re-run the
    brute-force oracle.
    """
    doc = {
        "input_spec": {"ranges": [[lo, hi] for lo, hi in model.input_spec.ranges]},
        "multi_index_set": {
            "input_dim": model.index_set.input_dim,
            "max_degree": model.index_set.max_degree,
            "indices": [list(alpha) for alpha in model.index_set.indices],
        },
        "coefficients": model.coefficients.tolist(),
        "hat_diag": model.hat_diag.tolist(),
        "loo_residuals": model.loo_residuals.tolist(),
        "loo_corrections": model.loo_corrections.tolist(),
    }
    return json.dumps(doc, indent=2)


def from_json(text: str) -> PceModel:
    """Rebuilds a model from :func:`to_json` output."""
    doc = json.loads(text)
    spec = InputSpec(ranges=tuple((float(lo), float(hi)) for lo, hi in doc["input_spec"]["ranges"]))
    mis = doc["multi_index_set"]
    index_set = MultiIndexSet(
        indices=tuple(tuple(int(d) for d in alpha) for alpha in mis["indices"]),
        input_dim=int(mis["input_dim"]),
        max_degree=int(mis["max_degree"]),
    )
    coefficients = np.asarray(doc["coefficients"], dtype=float)
    hat_diag = np.asarray(doc["hat_diag"], dtype=float)
    loo_res = np.asarray(doc["loo_residuals"], dtype=float)
    loo_corr = np.asarray(doc["loo_corrections"], dtype=float)
    if coefficients.shape[0] != len(index_set):
        raise ValueError("coefficient count does not match basis size")
    if loo_corr.shape != (hat_diag.shape[0], len(index_set)):
        raise ValueError("loo_corrections shape does not match (M, K)")
    if loo_res.shape != hat_diag.shape:
        raise ValueError("loo_residuals and hat_diag lengths disagree")
    return PceModel(
        index_set=index_set,
        input_spec=spec,
        coefficients=_readonly(coefficients),
        normal_inverse=None,
        hat_diag=_readonly(hat_diag),
        loo_residuals=_readonly(loo_res),
        loo_corrections=_readonly(loo_corr),
        training_snapshot=None,
    )
