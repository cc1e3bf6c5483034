"""Spectral regularization filters and matrix-function application.

A filter family phi_lambda maps the spectrum of a positive semidefinite
operator to estimator coefficients.  The three classical instances are

  tikhonov:   phi_lambda(t) = 1 / (t + lambda)
  landweber:  phi_lambda(t) = alpha * sum_{i<T} (1 - alpha*t)^i,  lambda = 1/(alpha*T)
  cutoff:     phi_lambda(t) = 1/t if t >= lambda else 0

together with the residual r_lambda(t) = 1 - t*phi_lambda(t).  Every filter
carries certified constants (D, E, c0) and a qualification nu with constants
c_q; `verify_filter_constants` checks all of them empirically on grids.

All filters assume the operator spectrum has been rescaled into [0, 1]
(the design-matrix builder in `features` guarantees this).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SpectralFilter",
    "EigenSystem",
    "FilterReport",
    "tikhonov",
    "landweber",
    "cutoff",
    "filter_value",
    "residual_value",
    "apply_filter",
    "verify_filter_constants",
    "eigensystem",
]

#: eigenvalues below -NEG_EIG_TOL are rejected, above 1 + POS_EIG_TOL likewise
NEG_EIG_TOL = 1e-10
POS_EIG_TOL = 1e-9
#: landweber iteration count 1/(alpha*lambda) must be integral to this tolerance
SCHEDULE_TOL = 1e-9


class FilterDomainError(ValueError):
    """Argument outside the filter's domain (t or lambda nonpositive, bad matrix)."""


class ScheduleError(ValueError):
    """Landweber lambda does not correspond to an integer iteration count."""


@dataclass(frozen=True)
class SpectralFilter:
    """A regularization family with certified constants.

    `kind` is one of "tikhonov", "landweber", "cutoff" or "custom".  The
    custom kind evaluates `custom_phi(lam, t)` and exists so that broken
    filters can be injected into `verify_filter_constants` (the residual is
    always derived as 1 - t*phi, keeping complementarity exact).
    """

    kind: str
    step_size: float = 1.0  # landweber only; alpha in (0, 1]
    D: float = 1.0
    E: float = 1.0
    c0: float = 1.0
    qualification: float = 1.0  # nu; math.inf for landweber and cutoff
    c_q_provider: Callable[[float], float] = field(default=lambda q: 1.0)
    custom_phi: Callable[[float, np.ndarray], np.ndarray] | None = None

    def c_q(self, q: float) -> float:
        return self.c_q_provider(q)


def tikhonov() -> SpectralFilter:
    """Tikhonov filter: qualification 1, all constants equal to 1."""
    return SpectralFilter(kind="tikhonov", qualification=1.0)


def landweber(step_size: float = 1.0) -> SpectralFilter:
    """Landweber (gradient descent) filter with step alpha = `step_size`.

    Unbounded qualification with c_q = (q/alpha)^q, c_0 = 1.  The recorded
    lambda of a T-step run is 1/(alpha*T).
    """
    if not 0.0 < step_size <= 1.0:
        raise FilterDomainError(f"landweber step size must be in (0, 1], got {step_size}")
    alpha = float(step_size)

    def c_q(q: float) -> float:
        return 1.0 if q == 0.0 else (q / alpha) ** q

    return SpectralFilter(
        kind="landweber",
        step_size=alpha,
        qualification=math.inf,
        c_q_provider=c_q,
    )


def cutoff() -> SpectralFilter:
    """Spectral cutoff (truncated inversion): unbounded qualification, c_q = 1."""
    return SpectralFilter(kind="cutoff", qualification=math.inf)


def _landweber_steps(filt: SpectralFilter, lam: float) -> int:
    raw = 1.0 / (filt.step_size * lam)
    steps = round(raw)
    if steps < 1 or abs(raw - steps) > SCHEDULE_TOL * max(1.0, raw):
        raise ScheduleError(
            f"landweber lambda={lam} gives 1/(alpha*lambda)={raw}, not an integer"
        )
    return steps


def _phi_array(filt: SpectralFilter, lam: float, t: np.ndarray) -> np.ndarray:
    """Vectorized phi_lambda over nonnegative t.

    phi at t=0 is the right limit: 1/lambda for tikhonov, alpha*T = 1/lambda
    for landweber (polynomial value at 0), 0 for cutoff.  Values of t above 1
    are evaluated by the same formulas; the filter axioms are only certified
    on (0, 1].
    """
    t = np.asarray(t, dtype=float)
    if filt.kind == "tikhonov":
        return 1.0 / (t + lam)
    if filt.kind == "landweber":
        steps = _landweber_steps(filt, lam)
        alpha = filt.step_size
        out = np.full_like(t, alpha * steps)
        nz = t != 0.0
        # alpha * geometric sum = (1 - (1 - alpha t)^T) / t
        out[nz] = (1.0 - (1.0 - alpha * t[nz]) ** steps) / t[nz]
        return out
    if filt.kind == "cutoff":
        out = np.zeros_like(t)
        keep = t >= lam
        out[keep] = 1.0 / t[keep]
        return out
    if filt.kind == "custom":
        if filt.custom_phi is None:
            raise FilterDomainError("custom filter requires custom_phi")
        return np.asarray(filt.custom_phi(lam, t), dtype=float)
    raise FilterDomainError(f"unknown filter kind {filt.kind!r}")


def _check_scalar_args(lam: float, t: float) -> None:
    if not lam > 0.0:
        raise FilterDomainError(f"lambda must be positive, got {lam}")
    if lam > 1.0:
        raise FilterDomainError(f"lambda must be <= 1, got {lam}")
    if not t > 0.0:
        raise FilterDomainError(f"t must be positive, got {t}")


def filter_value(filt: SpectralFilter, lam: float, t: float) -> float:
    """Evaluate phi_lambda(t) for scalar t in (0, 1]."""
    _check_scalar_args(lam, t)
    return float(_phi_array(filt, lam, np.asarray([t]))[0])


def residual_value(filt: SpectralFilter, lam: float, t: float) -> float:
    """Evaluate r_lambda(t) = 1 - t*phi_lambda(t).

    For landweber the closed form (1 - alpha t)^T is used, which is exact.
    """
    _check_scalar_args(lam, t)
    if filt.kind == "landweber":
        steps = _landweber_steps(filt, lam)
        return float((1.0 - filt.step_size * t) ** steps)
    if filt.kind == "cutoff":
        return 0.0 if t >= lam else 1.0
    return 1.0 - t * filter_value(filt, lam, t)


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition of a symmetric PSD matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def eigensystem(a: np.ndarray, sym_tol: float = 1e-10) -> EigenSystem:
    """Symmetric eigendecomposition with the symmetry precondition enforced."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise FilterDomainError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise FilterDomainError("matrix is not symmetric within tolerance")
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    return EigenSystem(eigenvalues=vals[order], eigenvectors=vecs[:, order])


def _clamped_spectrum(vals: np.ndarray) -> np.ndarray:
    """Clamp round-off eigenvalues into [0, 1]; out-of-contract values raise."""
    if np.any(vals < -NEG_EIG_TOL):
        raise FilterDomainError(
            f"matrix has negative eigenvalue {vals.min():.3e} beyond tolerance"
        )
    if np.any(vals > 1.0 + POS_EIG_TOL):
        raise FilterDomainError(
            f"matrix has eigenvalue {vals.max():.6f} above 1; rescale the design"
        )
    return np.clip(vals, 0.0, 1.0)


def apply_filter(
    filt: SpectralFilter,
    lam: float,
    a: np.ndarray | EigenSystem,
    b: np.ndarray,
) -> np.ndarray:
    """Compute phi_lambda(A) @ b for symmetric PSD A with spectrum in [0, 1].

    `a` may be a precomputed EigenSystem, which lets callers sweep lambda
    without re-decomposing.  `b` may be a vector or a matrix of stacked
    right-hand sides.
    """
    if not 0.0 < lam <= 1.0:
        raise FilterDomainError(f"lambda must be in (0, 1], got {lam}")
    eig = a if isinstance(a, EigenSystem) else eigensystem(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    if b.shape[0] != eig.eigenvectors.shape[0]:
        raise FilterDomainError(
            f"dimension mismatch: A is {eig.eigenvectors.shape[0]}, b has {b.shape[0]} rows"
        )
    vals = _clamped_spectrum(eig.eigenvalues)
    phi = _phi_array(filt, lam, vals)
    v = eig.eigenvectors
    proj = v.T @ b
    if b.ndim == 1:
        return v @ (phi * proj)
    return v @ (phi[:, None] * proj)


@dataclass(frozen=True)
class FilterReport:
    """Empirical suprema of the filter axioms per lambda, with exceedance flags."""

    kind: str
    lambdas: np.ndarray
    sup_t_phi: np.ndarray        # sup_t |t phi_lambda(t)|, bound D
    sup_phi_lam: np.ndarray      # sup_t |phi_lambda(t)| * lambda, bound E
    sup_residual: np.ndarray     # sup_t |r_lambda(t)|, bound c0
    worst_q_ratio: np.ndarray    # max_q sup_t |r(t)| t^q / (c_q lambda^q), bound 1
    d_flag: np.ndarray
    e_flag: np.ndarray
    c0_flag: np.ndarray
    cq_flag: np.ndarray

    @property
    def passed(self) -> bool:
        return not (
            self.d_flag.any() or self.e_flag.any()
            or self.c0_flag.any() or self.cq_flag.any()
        )

    def rows(self) -> list[dict]:
        out = []
        for i, lam in enumerate(self.lambdas):
            out.append(
                {
                    "kind": self.kind,
                    "lambda": float(lam),
                    "sup_t_phi": float(self.sup_t_phi[i]),
                    "sup_phi_lam": float(self.sup_phi_lam[i]),
                    "sup_residual": float(self.sup_residual[i]),
                    "worst_q_ratio": float(self.worst_q_ratio[i]),
                    "d_flag": int(self.d_flag[i]),
                    "e_flag": int(self.e_flag[i]),
                    "c0_flag": int(self.c0_flag[i]),
                    "cq_flag": int(self.cq_flag[i]),
                }
            )
        return out


#: relative slack absorbing float round-off in the empirical suprema
_VERIFY_SLACK = 1e-9


def verify_filter_constants(
    filt: SpectralFilter,
    t_grid: Sequence[float],
    lam_grid: Sequence[float],
    q_grid: Sequence[float],
) -> FilterReport:
    """Check the filter axioms and qualification on finite grids.

    Flags any lambda at which an empirical supremum exceeds the stored
    constant.  Grids must lie in (0, 1]; q_grid must lie in [0, nu].
    """
    t = np.asarray(sorted(t_grid), dtype=float)
    lams = np.asarray(sorted(lam_grid), dtype=float)
    qs = np.asarray(sorted(q_grid), dtype=float)
    for name, grid in (("t_grid", t), ("lambda_grid", lams)):
        if grid.size == 0:
            raise FilterDomainError(f"{name} is empty")
        if grid.min() <= 0.0 or grid.max() > 1.0:
            raise FilterDomainError(f"{name} must lie in (0, 1]")
    if qs.size and (qs.min() < 0.0 or qs.max() > filt.qualification):
        raise FilterDomainError("q_grid must lie in [0, qualification]")

    n_lam = lams.size
    sup_t_phi = np.zeros(n_lam)
    sup_phi_lam = np.zeros(n_lam)
    sup_res = np.zeros(n_lam)
    worst_q = np.zeros(n_lam)
    for i, lam in enumerate(lams):
        phi = _phi_array(filt, float(lam), t)
        res = 1.0 - t * phi
        sup_t_phi[i] = np.max(np.abs(t * phi))
        sup_phi_lam[i] = np.max(np.abs(phi)) * lam
        sup_res[i] = np.max(np.abs(res))
        ratios = []
        for q in qs:
            cq = filt.c_q(float(q))
            ratios.append(np.max(np.abs(res) * t ** q) / (cq * lam ** q))
        worst_q[i] = max(ratios) if ratios else 0.0

    return FilterReport(
        kind=filt.kind,
        lambdas=lams,
        sup_t_phi=sup_t_phi,
        sup_phi_lam=sup_phi_lam,
        sup_residual=sup_res,
        worst_q_ratio=worst_q,
        d_flag=sup_t_phi > filt.D * (1.0 + _VERIFY_SLACK),
        e_flag=sup_phi_lam > filt.E * (1.0 + _VERIFY_SLACK),
        c0_flag=sup_res > filt.c0 * (1.0 + _VERIFY_SLACK),
        cq_flag=worst_q > 1.0 + _VERIFY_SLACK,
    )


def landweber_lambda_grid(step_size: float, max_steps: int) -> np.ndarray:
    """Valid landweber lambdas 1/(alpha*T) for T = T_min..max_steps within (0, 1]."""
    alpha = float(step_size)
    t_min = max(1, math.ceil(1.0 / alpha - SCHEDULE_TOL))
    steps = np.arange(t_min, max(t_min, max_steps) + 1)
    return 1.0 / (alpha * steps)
