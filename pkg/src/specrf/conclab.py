"""Concentration bound formulas and Monte Carlo verification of the events
E1-E9 on the finite-rank synthetic problem, where all population operators
are explicit matrices in the eigenbasis.

The feature map of the synthetic problem samples basis indices, so the
sampled kernel operator L_M is diagonal with entries nu_i = d mu_i c_i / M,
and the covariance operators on the feature coordinates are small dense
matrices.  Each event resamples exactly the randomness it concerns (data for
E1/E3/E7/E8/E9, features for E2/E4/E5/E6) and compares the left-hand norm
against the closed-form right-hand side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import synthetic
from .features import FeatureSet, sample_features
from .synthetic import NoiseModel, SyntheticProblem

__all__ = [
    "EventSpec",
    "TrialReport",
    "bernstein_bound",
    "pinelis_bound",
    "event_rhs",
    "simulate_event",
    "DATA_EVENTS",
    "FEATURE_EVENTS",
    "ALL_EVENTS",
]

DATA_EVENTS = ("E1", "E3", "E7", "E8", "E9")
FEATURE_EVENTS = ("E2", "E4", "E5", "E6")
ALL_EVENTS = ("E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9")


class ConcentrationConfigError(ValueError):
    pass


def bernstein_bound(B: float, v_opnorm: float, v_trace: float, m: int, delta: float) -> float:
    """Operator Bernstein: 2 B beta / (3m) + sqrt(2 ||V|| beta / m) with
    beta = log(4 tr(V) / (||V|| delta))."""
    if min(B, v_opnorm, v_trace, delta) <= 0 or m < 1:
        raise ConcentrationConfigError("bernstein_bound needs positive arguments")
    if v_trace < v_opnorm:
        raise ConcentrationConfigError("trace must dominate the operator norm")
    # the probabilistic statement needs delta < 1; the formula itself is
    # evaluated for any delta keeping beta positive
    beta = math.log(4.0 * v_trace / (v_opnorm * delta))
    if beta <= 0.0:
        raise ConcentrationConfigError("delta too large: beta would be nonpositive")
    return 2.0 * B * beta / (3.0 * m) + math.sqrt(2.0 * v_opnorm * beta / m)


def pinelis_bound(B: float, V: float, n: int, delta: float) -> float:
    """Hilbert-space mean concentration: (2B/n + 2V/sqrt(n)) log(2/delta),
    valid for delta < 1/2."""
    if B < 0 or V < 0 or n < 1:
        raise ConcentrationConfigError("pinelis_bound needs nonnegative B, V and n >= 1")
    if not 0.0 < delta < 0.5:
        raise ConcentrationConfigError("delta must be in (0, 1/2)")
    return (2.0 * B / n + 2.0 * V / math.sqrt(n)) * math.log(2.0 / delta)


@dataclass(frozen=True)
class EventSpec:
    """Parameters of one concentration event.

    Population quantities (effective dimensions, operator norms, the ideal
    estimator error for E9) are filled in by `simulate_event`; construct with
    the experiment-level parameters only.
    """

    event_id: str
    kappa: float
    delta: float
    lam: float | None = None
    n: int | None = None
    M: int | None = None
    p: int = 1
    n_eff_l: float | None = None       # N_L(lambda)
    n_eff_lm: float | None = None      # N_{L_M}(lambda)
    norm_l: float | None = None        # ||L||
    norm_lm: float | None = None       # ||L_M||
    q_bound: float | None = None       # Q of the moment assumption
    z_bound: float | None = None       # Z of the moment assumption
    r: float | None = None
    R: float | None = None
    filter_d: float = 1.0              # D constant of the filter defining F*_lambda
    pop_error: float | None = None     # ||G_rho - S_M F*_lambda||_{L2}

    def require(self, *names: str) -> None:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ConcentrationConfigError(
                f"{self.event_id} needs parameters: {', '.join(missing)}"
            )


@dataclass(frozen=True)
class TrialReport:
    event_id: str
    trials: int
    violations: int
    rhs: float
    lhs_quantiles: dict = field(default_factory=dict)

    @property
    def violation_rate(self) -> float:
        return self.violations / self.trials

    def to_row(self) -> dict:
        return {
            "event": self.event_id,
            "trials": self.trials,
            "violations": self.violations,
            "violation_rate": self.violation_rate,
            "rhs": self.rhs,
            "lhs_q50": self.lhs_quantiles.get("q50"),
            "lhs_q90": self.lhs_quantiles.get("q90"),
            "lhs_max": self.lhs_quantiles.get("max"),
        }


def _log2d(delta: float) -> float:
    return math.log(2.0 / delta)


def event_rhs(spec: EventSpec) -> float:
    """Closed-form right-hand side of the event's bound."""
    k2 = spec.kappa ** 2
    d = spec.delta
    eid = spec.event_id
    if eid == "E1":
        spec.require("lam", "n", "n_eff_lm", "norm_lm")
        beta_m = math.log(4.0 * k2 * (spec.n_eff_lm + 1.0) / (d * spec.norm_lm))
        return (4.0 * k2 * beta_m / (3.0 * spec.n * spec.lam)
                + math.sqrt(2.0 * k2 * beta_m / (spec.n * spec.lam)))
    if eid == "E2":
        spec.require("lam", "M", "n_eff_l", "norm_l")
        beta_inf = math.log(4.0 * k2 * (spec.n_eff_l + 1.0) / (d * spec.norm_l))
        return (4.0 * k2 * beta_inf / (3.0 * spec.M * spec.lam)
                + math.sqrt(2.0 * spec.p * k2 * beta_inf / (spec.M * spec.lam)))
    if eid == "E3":
        spec.require("lam", "n", "n_eff_lm")
        return (2.0 * spec.kappa / (math.sqrt(spec.lam) * spec.n)
                + math.sqrt(4.0 * k2 * spec.n_eff_lm / spec.n)) * _log2d(d)
    if eid == "E4":
        spec.require("lam", "M", "n_eff_l")
        return (4.0 * k2 / (spec.lam * spec.M)
                + math.sqrt(4.0 * k2 * spec.n_eff_l / (spec.lam * spec.M))) * _log2d(d)
    if eid == "E5":
        spec.require("lam", "M", "n_eff_l")
        return (2.0 * spec.kappa / (math.sqrt(spec.lam) * spec.M)
                + math.sqrt(4.0 * k2 * spec.n_eff_l / spec.M)) * _log2d(d)
    if eid == "E6":
        spec.require("M")
        return (2.0 * k2 / spec.M + 2.0 * k2 / math.sqrt(spec.M)) * _log2d(d)
    if eid == "E7":
        spec.require("n")
        return (2.0 * k2 / spec.n + 2.0 * k2 / math.sqrt(spec.n)) * _log2d(d)
    if eid == "E8":
        spec.require("lam", "n", "n_eff_lm", "q_bound", "z_bound")
        return (4.0 * spec.q_bound * spec.z_bound * spec.kappa
                / (math.sqrt(spec.lam) * spec.n)
                + 4.0 * spec.q_bound * math.sqrt(spec.n_eff_lm)
                / math.sqrt(spec.n)) * _log2d(d)
    if eid == "E9":
        spec.require("lam", "n", "r", "R", "pop_error", "q_bound")
        c_krd = 2.0 * spec.kappa ** (2.0 * spec.r + 1.0) * spec.R * spec.filter_d
        mis = max(0.0, 0.5 - spec.r)
        sup_f = c_krd * spec.lam ** (-mis)
        b_lam = 4.0 * (spec.q_bound ** 2 + sup_f ** 2)
        v_lam = math.sqrt(2.0) * (spec.q_bound + sup_f) * spec.pop_error
        return 2.0 * (b_lam / spec.n + v_lam / math.sqrt(spec.n)) * _log2d(d)
    raise ConcentrationConfigError(f"unknown event id {spec.event_id!r}")


# ---------------------------------------------------------------------------
# exact operators of the synthetic problem

def _sigma_pop(problem: SyntheticProblem, fs: FeatureSet) -> np.ndarray:
    """Population covariance Sigma_M on the feature coordinates (M x M):
    (d/M) mu_{i_m} on entries with matching sampled indices."""
    idx = np.asarray(fs.samples, dtype=int)
    mu = problem.spectrum.eigenvalues
    same = idx[:, None] == idx[None, :]
    return (problem.d_max / fs.M) * np.sqrt(np.outer(mu[idx], mu[idx])) * same


def _feature_matrix(problem: SyntheticProblem, fs: FeatureSet, U: np.ndarray) -> np.ndarray:
    """z_j[m] = (1/sqrt(M)) phi(u_j, omega_m), shape (n, M)."""
    phi = fs.map.evaluate(U, fs.samples)[:, :, 0, 0]
    return phi / math.sqrt(fs.M)


def _inv_sqrt(mat: np.ndarray, lam: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs / np.sqrt(vals + lam)) @ vecs.T


def _opnorm_sym(mat: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(mat))))


def _fstar_quantities(problem: SyntheticProblem, nu: np.ndarray, lam: float):
    """Ideal-estimator residual coefficients for the tikhonov F*_lambda =
    S_M^* phi_lambda(L_M) G_rho: residual factor r_lambda(nu_i) per basis
    direction (valid for spectra beyond 1, where t/(t+lam) <= 1 keeps D = 1)."""
    g = problem.source.coefficients
    resid_factor = lam / (nu + lam)
    smoothed = nu / (nu + lam) * g      # coefficients of S_M F*_lambda
    pop_err_sq = float(np.sum((g * resid_factor) ** 2))
    return smoothed, pop_err_sq


def _trial_lhs(
    spec: EventSpec,
    problem: SyntheticProblem,
    noise: NoiseModel,
    fixed: dict,
    rng: np.random.Generator,
) -> float:
    eid = spec.event_id
    mu = problem.spectrum.eigenvalues

    if eid in FEATURE_EVENTS:
        fs = sample_features(problem.feature_map, spec.M,
                             int(rng.integers(0, 2 ** 63 - 1)))
        nu = synthetic.lm_eigenvalues(problem, fs)
        diff = nu - mu
        if eid == "E2":
            return float(np.max(np.abs(diff) / (mu + spec.lam)))
        if eid == "E4":
            return float(np.linalg.norm(diff / (mu + spec.lam)))
        if eid == "E5":
            return float(np.max(np.abs(diff) / np.sqrt(mu + spec.lam)))
        return float(np.linalg.norm(diff))  # E6

    U = rng.uniform(0.0, 1.0, size=spec.n)
    if eid == "E9":
        smoothed = fixed["fstar_smoothed"]
        basis = problem.basis(U)
        resid = basis @ (problem.source.coefficients - smoothed)
        return float(abs(np.mean(resid ** 2) - fixed["pop_err_sq"]))

    fs: FeatureSet = fixed["fs"]
    z = _feature_matrix(problem, fs, U)
    if eid == "E7":
        sigma_hat = z.T @ z / spec.n
        return float(np.linalg.norm(sigma_hat - fixed["sigma_pop"], "fro"))
    if eid == "E8":
        eps = rng.uniform(-noise.half_width, noise.half_width, size=spec.n)
        vec = fixed["w_half"] @ (z.T @ eps / spec.n)
        return float(np.linalg.norm(vec))
    sigma_hat = z.T @ z / spec.n
    delta_m = sigma_hat - fixed["sigma_pop"]
    if eid == "E1":
        return _opnorm_sym(fixed["w_half"] @ delta_m @ fixed["w_half"])
    if eid == "E3":
        return float(np.linalg.norm(fixed["w_half"] @ delta_m, "fro"))
    raise ConcentrationConfigError(f"unknown event id {eid!r}")


def simulate_event(
    spec: EventSpec,
    problem: SyntheticProblem,
    noise: NoiseModel,
    trials: int = 200,
    seed: int = 0,
) -> TrialReport:
    """Monte Carlo check that the event holds with probability >= 1 - delta.

    For data events the feature draw is fixed (from `seed`) and the inputs /
    noise are resampled per trial; for feature events the features are
    resampled.  Population quantities are computed exactly from the
    finite-rank problem.
    """
    if trials < 50:
        raise ConcentrationConfigError("need at least 50 trials")
    if spec.event_id not in ALL_EVENTS:
        raise ConcentrationConfigError(f"unknown event id {spec.event_id!r}")

    mu = problem.spectrum.eigenvalues
    spec = replace(
        spec,
        kappa=problem.kappa,
        n_eff_l=(synthetic.effective_dimension(problem.spectrum, spec.lam)
                 if spec.lam else None),
        norm_l=float(mu[0]),
        q_bound=noise.Q,
        z_bound=noise.Z,
    )

    fixed: dict = {}
    root = np.random.SeedSequence(seed)
    feature_seed, trial_seed = root.spawn(2)
    if spec.event_id in DATA_EVENTS:
        spec.require("n", "M")
        if spec.event_id != "E7":
            spec.require("lam")
        fs = sample_features(
            problem.feature_map, spec.M, int(feature_seed.generate_state(1)[0]))
        nu = synthetic.lm_eigenvalues(problem, fs)
        norm_lm = float(np.max(nu))
        if norm_lm == 0.0:
            raise ConcentrationConfigError("sampled operator is zero; increase M")
        n_eff_lm = float(np.sum(nu / (nu + spec.lam))) if spec.lam else None
        spec = replace(spec, n_eff_lm=n_eff_lm, norm_lm=norm_lm)
        fixed["fs"] = fs
        fixed["sigma_pop"] = _sigma_pop(problem, fs)
        if spec.lam:
            fixed["w_half"] = _inv_sqrt(fixed["sigma_pop"], spec.lam)
        if spec.event_id == "E9":
            spec = replace(spec, r=problem.source.r, R=problem.source.R)
            smoothed, pop_err_sq = _fstar_quantities(problem, nu, spec.lam)
            fixed["fstar_smoothed"] = smoothed
            fixed["pop_err_sq"] = pop_err_sq
            spec = replace(spec, pop_error=math.sqrt(pop_err_sq))
    else:
        spec.require("M")
        if spec.event_id != "E6":
            spec.require("lam")

    rhs = event_rhs(spec)
    rng = np.random.default_rng(trial_seed)
    lhs = np.empty(trials)
    for t in range(trials):
        lhs[t] = _trial_lhs(spec, problem, noise, fixed, rng)
    violations = int(np.sum(lhs > rhs))
    quantiles = {
        "q50": float(np.quantile(lhs, 0.5)),
        "q90": float(np.quantile(lhs, 0.9)),
        "max": float(np.max(lhs)),
    }
    return TrialReport(
        event_id=spec.event_id, trials=trials, violations=violations,
        rhs=rhs, lhs_quantiles=quantiles,
    )
