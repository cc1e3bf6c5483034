"""Shallow neural operator: symmetric initialization, gradient descent
training over first/second-stage samples, empirical NTK extraction, and the
width sweep comparing the trained operator with kernel gradient descent in
its tangent feature space.

The operator is G_theta(u)(x) = (1/sqrt(M)) <a, sigma(B J(u)(x))> with
J(u)(x) = (A(u)(x), u(x), c(x)) shared with `features.OperatorArchitecture`.
Symmetric initialization pairs output weights +tau/-tau with duplicated input
weights so that G_theta0 is identically zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import estimator, features
from .features import FeatureSet, OperatorArchitecture

__all__ = [
    "ShallowNO",
    "TrainRecord",
    "init_symmetric",
    "forward",
    "train_gd",
    "empirical_ntk",
    "tangent_feature_set",
    "compare_to_kernel_gd",
]


class NeuralOpError(ValueError):
    pass


@dataclass(frozen=True)
class ShallowNO:
    arch: OperatorArchitecture
    a: np.ndarray              # (M,) output weights
    B: np.ndarray              # (M, d_tilde) input weights
    tau: float

    @property
    def M(self) -> int:
        return self.a.shape[0]

    def theta_flat(self) -> np.ndarray:
        return np.concatenate([self.a, self.B.reshape(-1)])


@dataclass(frozen=True)
class TrainRecord:
    """Per-iteration empirical risk and parameter drift ||theta_t - theta_0||."""

    risks: np.ndarray          # (T+1,)
    drifts: np.ndarray         # (T+1,)
    model: ShallowNO = field(compare=False)

    @property
    def final_risk(self) -> float:
        return float(self.risks[-1])

    @property
    def drift_budget(self) -> float:
        return float(self.drifts.max())

    def to_manifest(self) -> dict:
        return {
            "risks": self.risks.tolist(),
            "drifts": self.drifts.tolist(),
            "a": self.model.a.tolist(),
            "B": self.model.B.reshape(-1).tolist(),
            "M": self.model.M,
            "tau": self.model.tau,
            "activation": self.model.arch.activation.name,
        }


def init_symmetric(
    arch: OperatorArchitecture, M: int, tau: float, seed: int
) -> ShallowNO:
    """Paired +-tau output weights with duplicated input rows; forward == 0."""
    if M % 2 != 0 or M < 2:
        raise NeuralOpError(f"width must be even and >= 2, got {M}")
    rng = np.random.default_rng(seed)
    half = rng.normal(size=(M // 2, arch.d_tilde))
    B = np.vstack([half, half])
    a = np.concatenate([np.full(M // 2, tau), np.full(M // 2, -tau)])
    return ShallowNO(arch=arch, a=a, B=B, tau=float(tau))


def _preactivations(no: ShallowNO, U) -> tuple[np.ndarray, np.ndarray]:
    """(J, Z1) with J (n, n_X, d_tilde) and Z1 = J B^T (n, n_X, M)."""
    J = no.arch.j_features(U)
    return J, np.einsum("nxd,md->nxm", J, no.B)


def forward(no: ShallowNO, u) -> np.ndarray:
    """G_theta(u) on the grid; single input -> (n_X,), batch -> (n, n_X)."""
    arr = np.asarray(u, dtype=float)
    single = arr.ndim < 2 or (arr.ndim == 2 and arr.shape == (no.arch.n_x, no.arch.d_y))
    U = arr[None, ...] if single else arr
    _, z1 = _preactivations(no, U)
    out = no.arch.activation.f(z1) @ no.a / math.sqrt(no.M)
    return out[0] if single else out


def _risk(no: ShallowNO, U: np.ndarray, V: np.ndarray) -> float:
    resid = forward(no, U) - V
    return 0.5 * float(np.mean(np.mean(resid ** 2, axis=1)))


def _gradients(no: ShallowNO, U: np.ndarray, V: np.ndarray):
    """Full-batch gradients of the empirical risk with the grid-mean inner
    product: dE/da_m and dE/dB_mj."""
    act = no.arch.activation
    J, z1 = _preactivations(no, U)
    s = act.f(z1)
    resid = s @ no.a / math.sqrt(no.M) - V      # (n, n_X)
    n, n_x = resid.shape
    scale = 1.0 / (n * n_x * math.sqrt(no.M))
    grad_a = scale * np.einsum("nx,nxm->m", resid, s)
    ds = act.df(z1)
    grad_b = scale * no.a[:, None] * np.einsum("nx,nxm,nxd->md", resid, ds, J)
    return grad_a, grad_b


def train_gd(
    no: ShallowNO,
    inputs,
    outputs,
    alpha: float,
    n_steps: int,
    train_a: bool = True,
    train_b: bool = True,
) -> TrainRecord:
    """Full-batch gradient descent on the empirical loss over first-stage
    samples evaluated at the second-stage grid points."""
    if alpha <= 0:
        raise NeuralOpError(f"step size must be positive, got {alpha}")
    U = no.arch.coerce_inputs(inputs)
    V = np.asarray(outputs, dtype=float).reshape(U.shape[0], no.arch.n_x)
    if U.shape[0] == 0:
        raise NeuralOpError("dataset is empty")

    a0, b0 = no.a.copy(), no.B.copy()
    cur = no
    risks = [_risk(cur, U, V)]
    drifts = [0.0]
    for _ in range(n_steps):
        grad_a, grad_b = _gradients(cur, U, V)
        new_a = cur.a - alpha * grad_a if train_a else cur.a
        new_b = cur.B - alpha * grad_b if train_b else cur.B
        cur = replace(cur, a=new_a, B=new_b)
        risks.append(_risk(cur, U, V))
        drifts.append(
            math.sqrt(
                float(np.sum((cur.a - a0) ** 2)) + float(np.sum((cur.B - b0) ** 2))
            )
        )
    return TrainRecord(risks=np.asarray(risks), drifts=np.asarray(drifts), model=cur)


def empirical_ntk(no: ShallowNO, u, u2) -> np.ndarray:
    """NTK at initialization-scale weights, evaluated on the grid:
    (1/M) [sum_m psi_m(u) x psi_m(u2) + sum_{m,j} psi'_{m,j}(u) x psi'_{m,j}(u2)]."""
    act = no.arch.activation
    J1, z1 = _preactivations(no, no.arch.coerce_inputs(np.asarray(u)[None, ...]))
    J2, z2 = _preactivations(no, no.arch.coerce_inputs(np.asarray(u2)[None, ...]))
    psi1, psi2 = act.f(z1[0]), act.f(z2[0])          # (n_X, M)
    k = psi1 @ psi2.T
    d1, d2 = act.df(z1[0]), act.df(z2[0])
    # psi' part factorizes over m and j: (sum_m d1 d2) * (sum_j J1 J2)
    k = k + (d1 @ d2.T) * (J1[0] @ J2[0].T)
    return k / no.M


def tangent_feature_set(no: ShallowNO, deriv_scale: float | None = None) -> FeatureSet:
    """The NTK feature map frozen at this model's weights.

    deriv_scale defaults to |tau|, matching the magnitude of the output
    weights that multiply the psi' block of the parameter gradient.
    """
    scale = abs(no.tau) if deriv_scale is None else deriv_scale
    fmap = features.ntk_feature_map(no.arch, deriv_scale=scale)
    return features.feature_set_from_samples(fmap, no.B.copy(), no.M)


def compare_to_kernel_gd(
    arch: OperatorArchitecture,
    train_inputs,
    train_outputs,
    test_inputs,
    widths,
    alpha: float,
    n_steps: int,
    seeds,
    tau: float = 1.0,
    train_a: bool = True,
    train_b: bool = True,
) -> list[dict]:
    """Train the operator and its frozen-tangent kernel twin with identical
    gradient descent, then measure ||G_theta_T - F_T^M|| in the empirical L2
    norm over held-out inputs.  Returns one row per (width, seed)."""
    U_tr = arch.coerce_inputs(train_inputs)
    V_tr = np.asarray(train_outputs, dtype=float).reshape(U_tr.shape[0], arch.n_x)
    U_te = arch.coerce_inputs(test_inputs)
    rows = []
    for m in widths:
        for seed in seeds:
            no0 = init_symmetric(arch, int(m), tau, int(seed))
            record = train_gd(no0, U_tr, V_tr, alpha, n_steps,
                              train_a=train_a, train_b=train_b)
            no_preds = forward(record.model, U_te)

            if not train_a and tau == 0.0:
                # no trainable tangent directions remain; both paths are zero
                rf_preds = np.zeros_like(no_preds)
            else:
                fs = tangent_feature_set(no0)
                design = features.build_design(fs, U_tr, normalize=False)
                if not train_a:
                    design.Z[:, ::fs.map.p] = 0.0  # freeze the psi block
                if not train_b:
                    mask = np.ones(fs.map.p, dtype=bool)
                    mask[0] = False
                    design.Z[:, np.tile(mask, fs.M)] = 0.0
                model = estimator.fit_gd(design, V_tr, alpha, n_steps)
                rf_preds = estimator.predict_batch(model, U_te)

            diff = no_preds - rf_preds
            disc = math.sqrt(float(np.mean(np.mean(diff ** 2, axis=1))))
            rows.append(
                {"M": int(m), "seed": int(seed), "discrepancy": disc,
                 "drift": record.drift_budget}
            )
    return rows


def median_discrepancies(rows: list[dict]) -> dict[int, float]:
    by_width: dict[int, list[float]] = {}
    for row in rows:
        by_width.setdefault(row["M"], []).append(row["discrepancy"])
    return {m: float(np.median(v)) for m, v in sorted(by_width.items())}
