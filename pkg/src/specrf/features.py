"""Random feature maps, Monte Carlo kernels, and design matrices.

A FeatureMap realizes a kernel integral representation: p feature functions
phi_i(u, omega) into R^{d_v}, with omega drawn from a probability space and a
uniform bound sum_i ||phi_i(u, omega)||^2 <= kappa^2.  Averaging M draws gives
the Monte Carlo kernel

    K_M(u, u') = (1/M) sum_m sum_i phi_i(u, omega_m) phi_i(u', omega_m)^T.

Design matrices carry the empirical operators of a dataset: Sigma_hat =
(1/n) Z^T Z and the embedding adjoint (1/n) Z^T v, with features rescaled so
the spectrum of Sigma_hat lies in [0, 1].

Output spaces are finite dimensional: either plain vectors (Euclidean inner
product) or functions sampled on a grid of n_X points with the empirical
inner product (1/n_X) sum_k f(x_k) g(x_k); `v_weight` holds the 1/n_X.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "Activation",
    "tanh_act",
    "identity_act",
    "FeatureMap",
    "FeatureSet",
    "DesignMatrix",
    "OperatorArchitecture",
    "sample_features",
    "feature_set_from_samples",
    "kernel_approx",
    "kernel_exact",
    "build_design",
    "discrete_map",
    "rff_map",
    "gaussian_kernel",
    "ntk_feature_map",
]


class FeatureError(ValueError):
    pass


class UnsupportedOracleError(FeatureError):
    """Raised when an exact-kernel oracle is requested for infinite support."""


# ---------------------------------------------------------------------------
# activations (shared with the neural-operator module)

@dataclass(frozen=True)
class Activation:
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    sup_abs: float        # sup |sigma|
    sup_abs_deriv: float  # sup |sigma'|


def tanh_act() -> Activation:
    return Activation("tanh", np.tanh, lambda z: 1.0 / np.cosh(z) ** 2, 1.0, 1.0)


def identity_act() -> Activation:
    """Identity activation.  Unbounded, so the feature bound kappa is infinite;
    designs built on it must stay unnormalized."""
    return Activation("identity", lambda z: z, np.ones_like, math.inf, 1.0)


# ---------------------------------------------------------------------------
# feature maps

@dataclass(frozen=True)
class FeatureMap:
    """p feature functions into R^{d_v} plus a sampler for omega.

    draw(rng, M) returns M omega samples with a leading axis (or any sequence
    the evaluator understands).  evaluate(U, omegas) is batched: U has leading
    axis n and the result has shape (n, M, p, d_v).
    """

    p: int
    d_v: int
    kappa: float
    draw: Callable[[np.random.Generator, int], Any]
    evaluate: Callable[[Any, Any], np.ndarray]
    support: tuple[Any, np.ndarray] | None = None  # (omegas, probabilities)
    v_weight: float = 1.0
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FeatureSet:
    """M omega draws from a map, reproducible from (map, seed, M)."""

    map: FeatureMap
    samples: Any
    n_features: int
    seed: int | None

    @property
    def M(self) -> int:
        return self.n_features


def sample_features(fmap: FeatureMap, M: int, seed: int) -> FeatureSet:
    """Draw M i.i.d. features; deterministic given the seed."""
    if M < 1:
        raise FeatureError(f"M must be >= 1, got {M}")
    rng = np.random.default_rng(seed)
    return FeatureSet(map=fmap, samples=fmap.draw(rng, M), n_features=M, seed=seed)


def feature_set_from_samples(fmap: FeatureMap, samples: Any, M: int) -> FeatureSet:
    """Wrap explicit omega samples (e.g. network weights at initialization)."""
    return FeatureSet(map=fmap, samples=samples, n_features=M, seed=None)


def _as_batch(fmap: FeatureMap, u: Any) -> Any:
    """Wrap a single input into a batch of one for the batched evaluator."""
    arr = np.asarray(u, dtype=float)
    return arr[None, ...]


def kernel_approx(fs: FeatureSet, u: Any, u2: Any) -> np.ndarray:
    """Monte Carlo kernel K_M(u, u2) as a d_v x d_v matrix of grid outer products."""
    phi_u = fs.map.evaluate(_as_batch(fs.map, u), fs.samples)[0]    # (M, p, d_v)
    phi_u2 = fs.map.evaluate(_as_batch(fs.map, u2), fs.samples)[0]
    if phi_u.shape != (fs.M, fs.map.p, fs.map.d_v):
        raise FeatureError(
            f"evaluator returned shape {phi_u.shape}, "
            f"expected {(fs.M, fs.map.p, fs.map.d_v)}"
        )
    return np.einsum("mpk,mpl->kl", phi_u, phi_u2) / fs.M


def kernel_exact(fmap: FeatureMap, u: Any, u2: Any) -> np.ndarray:
    """Exact expectation kernel for maps with finite support; oracle for kernel_approx."""
    if fmap.support is None:
        raise UnsupportedOracleError("kernel_exact requires a map with finite support")
    omegas, probs = fmap.support
    phi_u = fmap.evaluate(_as_batch(fmap, u), omegas)[0]
    phi_u2 = fmap.evaluate(_as_batch(fmap, u2), omegas)[0]
    return np.einsum("m,mpk,mpl->kl", np.asarray(probs, float), phi_u, phi_u2)


# ---------------------------------------------------------------------------
# design matrices

class DesignMatrix:
    """Finite-dimensional carrier of the empirical operators for a dataset.

    Z has shape (n*d_v, M*p); row block j holds sqrt(v_weight)-scaled feature
    vectors at input u_j, divided by kappa_scale and sqrt(M).  With that
    scaling cov() = (1/n) Z^T Z has spectral norm at most 1.
    """

    def __init__(self, feature_set: FeatureSet, inputs: Any, normalize: bool = True,
                 chunk: int = 512):
        fmap = feature_set.map
        inputs = np.asarray(inputs, dtype=float)
        n = inputs.shape[0]
        if n == 0:
            raise FeatureError("design requires at least one input")
        if normalize and not math.isfinite(fmap.kappa):
            raise FeatureError("cannot normalize a design for an unbounded feature map")
        self.feature_set = feature_set
        self.inputs = inputs
        self.n = n
        self.d_v = fmap.d_v
        self.M = feature_set.M
        self.p = fmap.p
        self.v_weight = fmap.v_weight
        self.kappa_scale = float(fmap.kappa) if normalize else 1.0
        self.Z = self._assemble(inputs, chunk)
        self._cov: np.ndarray | None = None
        self._eig = None

    def _feature_rows(self, U: np.ndarray) -> np.ndarray:
        """Rows of Z for a batch of inputs, shape (len(U)*d_v, M*p)."""
        fs = self.feature_set
        phi = fs.map.evaluate(U, fs.samples)  # (n, M, p, d_v)
        scale = math.sqrt(self.v_weight) / (self.kappa_scale * math.sqrt(self.M))
        block = np.transpose(phi, (0, 3, 1, 2))  # (n, d_v, M, p)
        return scale * block.reshape(U.shape[0] * self.d_v, self.M * self.p)

    def _assemble(self, inputs: np.ndarray, chunk: int) -> np.ndarray:
        z = np.empty((self.n * self.d_v, self.M * self.p))
        for start in range(0, self.n, chunk):
            stop = min(start + chunk, self.n)
            z[start * self.d_v:stop * self.d_v] = self._feature_rows(inputs[start:stop])
        return z

    def cov(self) -> np.ndarray:
        """Sigma_hat = (1/n) Z^T Z, cached."""
        if self._cov is None:
            self._cov = self.Z.T @ self.Z / self.n
        return self._cov

    def eigensystem(self):
        """Cached eigendecomposition of cov(), shared across lambda sweeps."""
        if self._eig is None:
            from . import spectral

            self._eig = spectral.eigensystem(self.cov())
        return self._eig

    def embed_adjoint(self, v: np.ndarray) -> np.ndarray:
        """S_hat^* v = (1/n) Z^T v for stacked v of length n*d_v."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape[0] != self.n * self.d_v:
            raise FeatureError(
                f"stacked outputs have length {v.shape[0]}, expected {self.n * self.d_v}"
            )
        return self.Z.T @ v / self.n

    def stack_outputs(self, outputs: np.ndarray) -> np.ndarray:
        """Stack raw outputs (n, d_v) into the scaled coordinates Z acts in."""
        outputs = np.asarray(outputs, dtype=float).reshape(self.n, self.d_v)
        return math.sqrt(self.v_weight) * outputs.reshape(-1)

    def predict(self, theta: np.ndarray, u: Any) -> np.ndarray:
        """Raw prediction values (1/(kappa_scale sqrt(M))) sum theta_mi phi_i(u, w_m)."""
        rows = self._feature_rows(_as_batch(self.feature_set.map, u))
        return (rows @ theta) / math.sqrt(self.v_weight)

    def predict_batch(self, theta: np.ndarray, U: Any, chunk: int = 512) -> np.ndarray:
        """Raw predictions for a batch of inputs, shape (len(U), d_v)."""
        U = np.asarray(U, dtype=float)
        out = np.empty((U.shape[0], self.d_v))
        for start in range(0, U.shape[0], chunk):
            stop = min(start + chunk, U.shape[0])
            rows = self._feature_rows(U[start:stop])
            out[start:stop] = (rows @ theta).reshape(stop - start, self.d_v)
        return out / math.sqrt(self.v_weight)


def build_design(fs: FeatureSet, inputs: Any, normalize: bool = True) -> DesignMatrix:
    """Assemble the design matrix for a list of inputs."""
    return DesignMatrix(fs, inputs, normalize=normalize)


# ---------------------------------------------------------------------------
# concrete maps

def discrete_map(
    omegas: Sequence,
    probs: Sequence[float],
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray],
    p: int,
    d_v: int,
    kappa: float,
    v_weight: float = 1.0,
    meta: dict | None = None,
) -> FeatureMap:
    """Finite-support feature map; `evaluate(U, omegas)` must be batched."""
    omegas = np.asarray(omegas)
    probs = np.asarray(probs, dtype=float)
    if omegas.shape[0] != probs.shape[0]:
        raise FeatureError("omegas and probs must align")
    if abs(probs.sum() - 1.0) > 1e-12 or np.any(probs < 0):
        raise FeatureError("probs must be a probability vector")

    def draw(rng: np.random.Generator, M: int):
        idx = rng.choice(omegas.shape[0], size=M, p=probs)
        return omegas[idx]

    return FeatureMap(
        p=p, d_v=d_v, kappa=kappa, draw=draw, evaluate=evaluate,
        support=(omegas, probs), v_weight=v_weight, meta=meta or {},
    )


def rff_map(dim: int, lengthscale: float = 1.0) -> FeatureMap:
    """Random Fourier features phi(u, (w, b)) = sqrt(2) cos(w.u + b).

    With w ~ N(0, I/lengthscale^2) and b ~ Unif[0, 2pi] the expectation kernel
    is the Gaussian kernel exp(-||u - u'||^2 / (2 lengthscale^2)).
    """
    if dim < 1 or lengthscale <= 0:
        raise FeatureError("rff_map needs dim >= 1 and positive lengthscale")

    def draw(rng: np.random.Generator, M: int):
        w = rng.normal(size=(M, dim)) / lengthscale
        b = rng.uniform(0.0, 2.0 * np.pi, size=M)
        return {"w": w, "b": b}

    def evaluate(U: np.ndarray, omegas) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        vals = np.sqrt(2.0) * np.cos(U @ omegas["w"].T + omegas["b"])  # (n, M)
        return vals[:, :, None, None]

    return FeatureMap(
        p=1, d_v=1, kappa=math.sqrt(2.0), draw=draw, evaluate=evaluate,
        meta={"kind": "rff", "dim": dim, "lengthscale": lengthscale},
    )


def gaussian_kernel(u: np.ndarray, u2: np.ndarray, lengthscale: float) -> float:
    """Closed-form limit kernel of rff_map."""
    diff = np.asarray(u, float) - np.asarray(u2, float)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * lengthscale ** 2)))


# ---------------------------------------------------------------------------
# NTK feature map for shallow neural operators

@dataclass(frozen=True)
class OperatorArchitecture:
    """Shared input pipeline of the shallow neural operator and its NTK map.

    Inputs are functions sampled on `grid` (n_X second-stage points) with
    values in R^{d_y}; plain-vector inputs are the n_X = 1 case.  The combined
    representation is J(u)(x) = (A(u)(x), u(x), c(x)) with A the identity lift
    duplicating the input channels (d_k = d_y) when `use_lift` is set, and c
    the bias channel (constant 1 by default).
    """

    activation: Activation
    grid: np.ndarray
    d_y: int = 1
    use_lift: bool = True
    bias: np.ndarray | None = None

    @property
    def n_x(self) -> int:
        return int(np.asarray(self.grid).shape[0])

    @property
    def d_k(self) -> int:
        return self.d_y if self.use_lift else 0

    @property
    def bias_values(self) -> np.ndarray:
        if self.bias is None:
            return np.ones((self.n_x, 1))
        b = np.asarray(self.bias, dtype=float)
        return b.reshape(self.n_x, -1)

    @property
    def d_b(self) -> int:
        return self.bias_values.shape[1]

    @property
    def d_tilde(self) -> int:
        return self.d_k + self.d_y + self.d_b

    def coerce_inputs(self, U: Any) -> np.ndarray:
        """Normalize input batches to shape (n, n_X, d_y)."""
        U = np.asarray(U, dtype=float)
        if U.ndim == 1:
            U = U[:, None] if self.n_x == 1 else U[None, :, None]
        if U.ndim == 2:
            if self.n_x == 1 and U.shape[1] == self.d_y:
                U = U[:, None, :]
            elif U.shape[1] == self.n_x and self.d_y == 1:
                U = U[:, :, None]
            else:
                raise FeatureError(f"cannot coerce inputs of shape {U.shape}")
        if U.shape[1:] != (self.n_x, self.d_y):
            raise FeatureError(
                f"inputs have shape {U.shape}, expected (*, {self.n_x}, {self.d_y})"
            )
        return U

    def j_features(self, U: Any) -> np.ndarray:
        """J(u)(x) for a batch, shape (n, n_X, d_tilde)."""
        U = self.coerce_inputs(U)
        parts = []
        if self.use_lift:
            parts.append(U)
        parts.append(U)
        bias = np.broadcast_to(self.bias_values, (U.shape[0],) + self.bias_values.shape)
        parts.append(bias)
        return np.concatenate(parts, axis=2)


def ntk_feature_map(
    arch: OperatorArchitecture,
    input_bound: float | None = None,
    deriv_scale: float = 1.0,
) -> FeatureMap:
    """Tangent feature map of the width-M shallow operator at initialization.

    omega = b0 ~ N(0, I_{d_tilde}); the p = 1 + d_tilde summands are
    psi(u) = sigma(<b0, J(u)>) and psi'_j(u) = sigma'(<b0, J(u)>) J(u)^(j),
    evaluated pointwise on the grid (d_v = n_X).  `deriv_scale` multiplies the
    psi' block and models the magnitude of the symmetric output weights tau.

    `input_bound` is a declared bound on sup_{u,x} ||J(u)(x)||; with a bounded
    activation it certifies kappa^2 = sup|sigma|^2 + (deriv_scale * sup|sigma'|
    * input_bound)^2.  Without it (or with an unbounded activation) kappa is
    infinite and designs must be built unnormalized.
    """
    act = arch.activation
    if act.df is None:
        raise FeatureError("NTK feature map requires a differentiable activation")
    d_tilde = arch.d_tilde
    if input_bound is not None and math.isfinite(act.sup_abs):
        kappa = math.sqrt(
            act.sup_abs ** 2
            + (deriv_scale * act.sup_abs_deriv * float(input_bound)) ** 2
        )
    else:
        kappa = math.inf

    def draw(rng: np.random.Generator, M: int):
        return rng.normal(size=(M, d_tilde))

    def evaluate(U: np.ndarray, omegas: np.ndarray) -> np.ndarray:
        J = arch.j_features(U)                    # (n, n_X, d_tilde)
        z = np.einsum("nxd,md->nxm", J, omegas)   # (n, n_X, M)
        psi = act.f(z)
        dpsi = act.df(z)
        n, n_x, M = z.shape
        out = np.empty((n, M, 1 + d_tilde, n_x))
        out[:, :, 0, :] = np.transpose(psi, (0, 2, 1))
        # psi'_{m,j}(u)(x) = sigma'(z) * J(u)(x)^(j)
        deriv = np.einsum("nxm,nxj->nmjx", dpsi, J)
        out[:, :, 1:, :] = deriv_scale * deriv
        return out

    return FeatureMap(
        p=1 + d_tilde,
        d_v=arch.n_x,
        kappa=kappa,
        draw=draw,
        evaluate=evaluate,
        v_weight=1.0 / arch.n_x,
        meta={"kind": "ntk", "activation": act.name, "d_tilde": d_tilde,
              "deriv_scale": deriv_scale},
    )
