"""The random-feature spectral estimator and its gradient-descent twin.

fit_closed computes theta = phi_lambda(Sigma_hat) S_hat^* v through the
eigendecomposition of the design covariance; fit_gd iterates

    theta_{t+1} = theta_t - alpha (Sigma_hat theta_t - S_hat^* v)

from zero, which is exactly the landweber filter at lambda = 1/(alpha T).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .features import DesignMatrix, FeatureSet
from .spectral import SpectralFilter

__all__ = [
    "RFModel",
    "RiskReport",
    "fit_closed",
    "fit_gd",
    "fit_gd_path",
    "predict",
    "predict_batch",
    "evaluate",
]


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class RFModel:
    """Fitted coefficients plus the design metadata needed to predict."""

    feature_set: FeatureSet
    theta: np.ndarray
    kappa_scale: float
    v_weight: float
    d_v: int
    filter_kind: str
    lam: float
    train_risks: np.ndarray | None = field(default=None, compare=False)

    @property
    def M(self) -> int:
        return self.feature_set.M


@dataclass(frozen=True)
class RiskReport:
    empirical_risk: float
    excess_l2: float | None
    n_test: int


def _stacked_outputs(design: DesignMatrix, outputs: np.ndarray) -> np.ndarray:
    v = np.asarray(outputs, dtype=float)
    if v.ndim == 1 and v.shape[0] == design.n * design.d_v:
        return math.sqrt(design.v_weight) * v
    return design.stack_outputs(v)


def _reject_degenerate(design: DesignMatrix) -> None:
    # all-zero designs indicate a broken feature pipeline, not a model to fit
    if not np.any(design.Z):
        raise EstimatorError("design matrix is identically zero")


def fit_closed(
    design: DesignMatrix,
    outputs: np.ndarray,
    filt: SpectralFilter,
    lam: float,
) -> RFModel:
    """Spectral estimator theta = phi_lambda(Sigma_hat) S_hat^* v."""
    if not 0.0 < lam <= 1.0:
        raise EstimatorError(f"lambda must be in (0, 1], got {lam}")
    _reject_degenerate(design)
    v = _stacked_outputs(design, outputs)
    rhs = design.embed_adjoint(v)
    theta = spectral.apply_filter(filt, lam, design.eigensystem(), rhs)
    return RFModel(
        feature_set=design.feature_set,
        theta=theta,
        kappa_scale=design.kappa_scale,
        v_weight=design.v_weight,
        d_v=design.d_v,
        filter_kind=filt.kind,
        lam=lam,
    )


def fit_gd(
    design: DesignMatrix,
    outputs: np.ndarray,
    alpha: float,
    n_steps: int,
    track_risk: bool = False,
) -> RFModel:
    """Gradient descent from theta = 0 on the empirical least-squares risk.

    Requires alpha in (0, 1] (the design contract keeps ||Sigma_hat|| <= 1).
    The recorded lambda is 1/(alpha * n_steps).
    """
    if not 0.0 < alpha <= 1.0:
        raise EstimatorError(f"step size must be in (0, 1], got {alpha}")
    if n_steps < 1:
        raise EstimatorError(f"n_steps must be >= 1, got {n_steps}")
    _reject_degenerate(design)
    v = _stacked_outputs(design, outputs)
    rhs = design.embed_adjoint(v)
    theta = np.zeros_like(rhs)

    # small coefficient spaces iterate on the cached covariance; large ones
    # avoid forming it and use two Z products per step
    dim = design.Z.shape[1]
    use_cov = design._cov is not None or dim * dim <= design.Z.size
    cov = design.cov() if use_cov else None

    risks = []

    def risk(th: np.ndarray) -> float:
        resid = design.Z @ th - v
        return 0.5 * float(resid @ resid) / design.n

    if track_risk:
        risks.append(risk(theta))
    for _ in range(n_steps):
        if cov is not None:
            grad = cov @ theta - rhs
        else:
            grad = design.Z.T @ (design.Z @ theta) / design.n - rhs
        theta = theta - alpha * grad
        if track_risk:
            risks.append(risk(theta))

    return RFModel(
        feature_set=design.feature_set,
        theta=theta,
        kappa_scale=design.kappa_scale,
        v_weight=design.v_weight,
        d_v=design.d_v,
        filter_kind="landweber",
        lam=1.0 / (alpha * n_steps),
        train_risks=np.asarray(risks) if track_risk else None,
    )


def fit_gd_path(
    design: DesignMatrix,
    outputs: np.ndarray,
    alpha: float,
    checkpoints,
) -> list[RFModel]:
    """One gradient-descent trajectory snapshotted at several stopping times.

    Returns a model per checkpoint (ascending iteration counts); each is
    identical to fit_gd run to that count, since the iterates are nested.
    """
    stops = sorted(int(t) for t in checkpoints)
    if not stops or stops[0] < 1:
        raise EstimatorError("checkpoints must be positive iteration counts")
    if not 0.0 < alpha <= 1.0:
        raise EstimatorError(f"step size must be in (0, 1], got {alpha}")
    _reject_degenerate(design)
    v = _stacked_outputs(design, outputs)
    rhs = design.embed_adjoint(v)
    theta = np.zeros_like(rhs)
    dim = design.Z.shape[1]
    use_cov = design._cov is not None or dim * dim <= design.Z.size
    cov = design.cov() if use_cov else None

    models = []
    next_stop = 0
    for step in range(1, stops[-1] + 1):
        if cov is not None:
            grad = cov @ theta - rhs
        else:
            grad = design.Z.T @ (design.Z @ theta) / design.n - rhs
        theta = theta - alpha * grad
        while next_stop < len(stops) and stops[next_stop] == step:
            models.append(
                RFModel(
                    feature_set=design.feature_set,
                    theta=theta.copy(),
                    kappa_scale=design.kappa_scale,
                    v_weight=design.v_weight,
                    d_v=design.d_v,
                    filter_kind="landweber",
                    lam=1.0 / (alpha * step),
                )
            )
            next_stop += 1
    return models


def _feature_rows(model: RFModel, U: np.ndarray) -> np.ndarray:
    fs = model.feature_set
    phi = fs.map.evaluate(U, fs.samples)  # (n, M, p, d_v)
    scale = 1.0 / (model.kappa_scale * math.sqrt(model.M))
    block = np.transpose(phi, (0, 3, 1, 2))
    return scale * block.reshape(U.shape[0] * model.d_v, -1)


def predict(model: RFModel, u) -> np.ndarray:
    """Prediction (1/sqrt(M)) sum_{m,i} theta_mi phi_i(u, w_m), kappa-consistent."""
    U = np.asarray(u, dtype=float)[None, ...]
    values = _feature_rows(model, U) @ model.theta
    return values.reshape(model.d_v)


def predict_batch(model: RFModel, U, chunk: int = 512) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    out = np.empty((U.shape[0], model.d_v))
    for start in range(0, U.shape[0], chunk):
        stop = min(start + chunk, U.shape[0])
        rows = _feature_rows(model, U[start:stop])
        out[start:stop] = (rows @ model.theta).reshape(stop - start, model.d_v)
    return out


def evaluate(model: RFModel, test_inputs, test_outputs, oracle=None) -> RiskReport:
    """Empirical half-squared risk on a test set, plus the excess L2 distance
    to the regression operator when an oracle evaluator is supplied."""
    U = np.asarray(test_inputs, dtype=float)
    n_test = U.shape[0]
    if n_test == 0:
        raise EstimatorError("test set is empty")
    preds = predict_batch(model, U)
    v = np.asarray(test_outputs, dtype=float).reshape(n_test, model.d_v)
    sq = np.sum((preds - v) ** 2, axis=1) * model.v_weight
    empirical = 0.5 * float(np.mean(sq))
    excess = None
    if oracle is not None:
        target = np.asarray(oracle(U), dtype=float).reshape(n_test, model.d_v)
        sq_exc = np.sum((preds - target) ** 2, axis=1) * model.v_weight
        excess = float(math.sqrt(np.mean(sq_exc)))
    return RiskReport(empirical_risk=empirical, excess_l2=excess, n_test=n_test)
