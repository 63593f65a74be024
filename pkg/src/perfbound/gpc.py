"""Gaussian process binary classifier with a Laplace-approximate posterior.

ARD squared-exponential kernel over inputs normalized to the unit cube,
logistic likelihood on labels in {-1, +1} (+1 = collision), Newton
iteration for the posterior mode with the numerically stable
B = I + W^1/2 K W^1/2 factorization, and Gauss-Hermite quadrature for the
predictive class probability. Hyperparameters are tuned by multi-start
Nelder-Mead on the approximate log marginal likelihood.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.special import expit

from .ioutil import atomic_write_text
from .sampling import ParameterBox
from .scenario import LabeledSample, Outcome

MODEL_FORMAT_VERSION = 1

NEWTON_TOL = 1e-9
NEWTON_MAX_ITER = 100
JITTER_MAX = 1e-4

# Hyperparameter search space (normalized-unit lengthscales).
LENGTHSCALE_BOUNDS = (0.03, 3.0)
SIGNAL_VARIANCE_BOUNDS = (0.01, 900.0)

_GH_NODES, _GH_WEIGHTS = hermgauss(32)
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_PI = 1.0 / np.sqrt(np.pi)


class SingleClassError(ValueError):
    """Training labels contain only one class."""


class NotPositiveDefiniteError(ValueError):
    """Kernel matrix not positive definite even at the maximum jitter."""


class NoConvergenceError(RuntimeError):
    """Newton iteration did not reach the mode tolerance."""


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float
    lengthscales: tuple[float, ...]
    jitter: float = 1e-8

    def __post_init__(self):
        if self.signal_variance <= 0.0:
            raise ValueError("signal_variance must be > 0")
        if any(l <= 0.0 for l in self.lengthscales):
            raise ValueError("lengthscales must be > 0")
        if self.jitter < 0.0:
            raise ValueError("jitter must be >= 0")


@dataclass(frozen=True)
class Prediction:
    latent_mean: float
    latent_var: float
    prob_collision: float


def kernel_eval(a, b, params: KernelParams) -> float:
    """ARD squared-exponential covariance between two points."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ls = np.asarray(params.lengthscales)
    if a.shape != b.shape or a.shape[-1] != ls.shape[0]:
        raise ValueError("dimension mismatch")
    r2 = (((a - b) / ls) ** 2).sum()
    return float(params.signal_variance * np.exp(-0.5 * r2))


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: KernelParams) -> np.ndarray:
    ls = np.asarray(params.lengthscales)
    r2 = np.zeros((A.shape[0], B.shape[0]))
    for j in range(ls.shape[0]):
        r2 += ((A[:, j, None] - B[None, :, j]) / ls[j]) ** 2
    return params.signal_variance * np.exp(-0.5 * r2)


class TrainingSet:
    """Normalized inputs in [0,1]^d with labels in {-1, +1} (+1 = collision)."""

    def __init__(self, X: np.ndarray, y: np.ndarray, box: ParameterBox):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n, d) and y (n,)")
        if X.shape[0] and X.shape[1] != box.ndim:
            raise ValueError("X dimension does not match box")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        self.X = X
        self.y = y
        self.box = box

    @classmethod
    def from_labeled(cls, labeled: list[LabeledSample], box: ParameterBox) -> "TrainingSet":
        pts = np.array([s.params.as_array() for s in labeled]).reshape(len(labeled), 3)
        y = np.array(
            [1.0 if s.outcome is Outcome.COLLISION else -1.0 for s in labeled]
        )
        return cls(box.to_unit(pts), y, box)

    @property
    def n(self) -> int:
        return self.X.shape[0]


def _log_likelihood(y: np.ndarray, f: np.ndarray) -> float:
    # sum log sigma(y_i f_i), stable form
    return float(-np.logaddexp(0.0, -y * f).sum())


def _newton_mode(K: np.ndarray, y: np.ndarray, f0: np.ndarray | None = None,
                 max_iter: int = NEWTON_MAX_ITER):
    """Find the posterior mode of psi(f) = log p(y|f) - f' K^-1 f / 2.

    Standard stable iteration: W = pi(1-pi), B = I + W^1/2 K W^1/2,
    a = b - W^1/2 B^-1 W^1/2 K b with b = W f + grad, f = K a. Returns
    (f_hat, psi, L_B, sqrt_w, grad, a).
    """
    n = y.shape[0]
    t = (y + 1.0) / 2.0
    f = np.zeros(n) if f0 is None else np.array(f0, dtype=np.float64)
    eye = np.eye(n)
    psi_old = -np.inf
    for _ in range(max_iter):
        pi = expit(f)
        w = pi * (1.0 - pi)
        sw = np.sqrt(w)
        B = eye + sw[:, None] * K * sw[None, :]
        L = cholesky(B, lower=True)
        grad = t - pi
        b = w * f + grad
        v = solve_triangular(L, sw * (K @ b), lower=True)
        a = b - sw * solve_triangular(L.T, v, lower=False)
        f = K @ a
        psi = -0.5 * float(a @ f) + _log_likelihood(y, f)
        if abs(psi - psi_old) < NEWTON_TOL:
            pi = expit(f)
            grad = t - pi
            # require true stationarity f = K grad, not just a flat psi step
            if np.max(np.abs(f - K @ grad), initial=0.0) < 1e-7:
                sw = np.sqrt(pi * (1.0 - pi))
                B = eye + sw[:, None] * K * sw[None, :]
                L = cholesky(B, lower=True)
                return f, psi, L, sw, grad, a
        psi_old = psi
    raise NoConvergenceError(
        f"posterior mode not found in {max_iter} Newton iterations"
    )


class GpcModel:
    """Trained classifier state; immutable once built, safe to share."""

    def __init__(self, training: TrainingSet, kernel: KernelParams,
                 f_hat: np.ndarray, log_marginal: float):
        self.training = training
        self.kernel = kernel
        self.f_hat = np.asarray(f_hat, dtype=np.float64)
        self.log_marginal = float(log_marginal)
        self._build_caches()

    def _build_caches(self):
        """Derive W, the Cholesky of B, the likelihood gradient, and the
        quadratic-form matrix W^1/2 B^-1 W^1/2 = (K + W^-1)^-1 from the
        primal state. Both the constructor and deserialization go through
        here, so reloaded models predict identically."""
        n = self.training.n
        y = self.training.y
        pi = expit(self.f_hat)
        self.w = pi * (1.0 - pi)
        self.grad = (y + 1.0) / 2.0 - pi
        if n == 0:
            self.chol_b = np.zeros((0, 0))
            self._qf = np.zeros((0, 0))
            return
        K = kernel_matrix(self.training.X, self.training.X, self.kernel)
        K[np.diag_indices_from(K)] += self.kernel.jitter
        sw = np.sqrt(self.w)
        B = np.eye(n) + sw[:, None] * K * sw[None, :]
        self.chol_b = cholesky(B, lower=True)
        self._qf = sw[:, None] * cho_solve((self.chol_b, True), np.diag(sw))

    def predict_batch(self, X_query: np.ndarray):
        """Latent mean/variance and collision probability for (m, d) inputs
        in normalized coordinates. Extrapolation outside [0,1]^d is allowed
        but flagged with a warning."""
        Xq = np.atleast_2d(np.asarray(X_query, dtype=np.float64))
        if Xq.size and (Xq.min() < -1e-12 or Xq.max() > 1.0 + 1e-12):
            warnings.warn("query outside the normalized parameter box; extrapolating")
        k_ss = self.kernel.signal_variance
        if self.training.n == 0:
            mu = np.zeros(Xq.shape[0])
            var = np.full(Xq.shape[0], k_ss)
        else:
            Kx = kernel_matrix(self.training.X, Xq, self.kernel)
            mu = Kx.T @ self.grad
            var = k_ss - np.einsum("ij,ij->j", Kx, self._qf @ Kx)
            np.maximum(var, 0.0, out=var)
        prob = _gauss_hermite_sigmoid(mu, var)
        return mu, var, prob

    def predict(self, x_query: np.ndarray) -> Prediction:
        mu, var, prob = self.predict_batch(np.asarray(x_query)[None, :])
        return Prediction(float(mu[0]), float(var[0]), float(prob[0]))

    def to_json(self) -> str:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "box": self.training.box.to_dict(),
            "kernel": {
                "signal_variance": self.kernel.signal_variance,
                "lengthscales": list(self.kernel.lengthscales),
                "jitter": self.kernel.jitter,
            },
            "X": self.training.X.tolist(),
            "y": self.training.y.tolist(),
            "f_hat": self.f_hat.tolist(),
            "log_marginal": self.log_marginal,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GpcModel":
        data = json.loads(text)
        version = data.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version: {version}")
        box = ParameterBox.from_dict(data["box"])
        kernel = KernelParams(
            signal_variance=float(data["kernel"]["signal_variance"]),
            lengthscales=tuple(float(v) for v in data["kernel"]["lengthscales"]),
            jitter=float(data["kernel"]["jitter"]),
        )
        n = len(data["y"])
        X = np.array(data["X"], dtype=np.float64).reshape(n, box.ndim)
        training = TrainingSet(X, np.array(data["y"], dtype=np.float64), box)
        return cls(training, kernel, np.array(data["f_hat"], dtype=np.float64),
                   float(data["log_marginal"]))

    def save(self, path) -> None:
        atomic_write_text(path, self.to_json())

    @classmethod
    def load(cls, path) -> "GpcModel":
        return cls.from_json(Path(path).read_text())


def _gauss_hermite_sigmoid(mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """E[sigmoid(f)] for f ~ N(mu, var), by 32-node Gauss-Hermite quadrature."""
    sd = np.sqrt(np.maximum(var, 0.0))
    z = mu[:, None] + _SQRT2 * sd[:, None] * _GH_NODES[None, :]
    p = (expit(z) @ _GH_WEIGHTS) * _INV_SQRT_PI
    # quadrature weights sum to sqrt(pi) only to machine precision
    return np.clip(p, 0.0, 1.0)


def laplace_fit(training: TrainingSet, kernel: KernelParams,
                max_newton_iter: int = NEWTON_MAX_ITER) -> GpcModel:
    """Fit the Laplace posterior mode and cache prediction factors.

    Raises SingleClassError for n >= 2 with one distinct label (n of 0 or 1
    is allowed as a degenerate fit), NotPositiveDefiniteError after jitter
    escalation fails, NoConvergenceError from the Newton loop.
    """
    n = training.n
    if n == 0:
        return GpcModel(training, kernel, np.zeros(0), 0.0)
    if n >= 2 and np.unique(training.y).size < 2:
        raise SingleClassError("training labels contain a single class")
    jitter = kernel.jitter
    while True:
        K = kernel_matrix(training.X, training.X, kernel)
        K[np.diag_indices_from(K)] += jitter
        try:
            f, psi, L, _, _, _ = _newton_mode(K, training.y, max_iter=max_newton_iter)
            break
        except LinAlgError:
            jitter = max(jitter, 1e-12) * 10.0
            if jitter > JITTER_MAX:
                raise NotPositiveDefiniteError(
                    f"kernel matrix not PD at jitter {jitter:.1e}"
                ) from None
    if jitter != kernel.jitter:
        kernel = KernelParams(kernel.signal_variance, kernel.lengthscales, jitter)
    log_marginal = psi - np.log(np.diag(L)).sum()
    return GpcModel(training, kernel, f, log_marginal)


def _log_marginal_for(training: TrainingSet, kernel: KernelParams,
                      f0: np.ndarray | None = None):
    """Approximate log marginal likelihood and the mode, for the optimizer."""
    K = kernel_matrix(training.X, training.X, kernel)
    K[np.diag_indices_from(K)] += kernel.jitter
    f, psi, L, _, _, _ = _newton_mode(K, training.y, f0=f0)
    return psi - np.log(np.diag(L)).sum(), f


def optimize_hyperparams(
    training: TrainingSet,
    restarts: int = 8,
    seed: int = 0,
    max_nm_iter: int = 200,
    jitter: float = 1e-8,
    return_details: bool = False,
):
    """Maximize the Laplace log marginal likelihood over log-space
    (lengthscales, signal variance) with Nelder-Mead from seeded random
    starts. Deterministic given the seed; restart k's trajectory does not
    depend on the other restarts, so adding restarts can only improve the
    returned marginal likelihood.

    With return_details, also returns a per-restart list of
    {theta_start, lml_start, lml_best} for diagnostics.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if training.n < 2 or np.unique(training.y).size < 2:
        raise SingleClassError("hyperparameter search needs both classes")
    d = training.X.shape[1]
    lo = np.log(np.array([LENGTHSCALE_BOUNDS[0]] * d + [SIGNAL_VARIANCE_BOUNDS[0]]))
    hi = np.log(np.array([LENGTHSCALE_BOUNDS[1]] * d + [SIGNAL_VARIANCE_BOUNDS[1]]))
    rng = np.random.default_rng([int(seed), 2])
    starts = [lo + (hi - lo) * rng.random(d + 1) for _ in range(restarts)]

    def params_at(theta):
        return KernelParams(
            signal_variance=float(np.exp(theta[d])),
            lengthscales=tuple(float(v) for v in np.exp(theta[:d])),
            jitter=jitter,
        )

    best_theta = None
    best_lml = -np.inf
    failures = []
    details = []
    for theta0 in starts:
        warm = {"f": None}

        def objective(theta):
            try:
                lml, f = _log_marginal_for(training, params_at(theta), f0=warm["f"])
            except (LinAlgError, NoConvergenceError):
                warm["f"] = None
                return np.inf
            warm["f"] = f
            return -lml

        try:
            res = minimize(
                objective,
                theta0,
                method="Nelder-Mead",
                bounds=list(zip(lo, hi)),
                options={"maxiter": max_nm_iter, "xatol": 1e-3, "fatol": 1e-5},
            )
        except (LinAlgError, NoConvergenceError) as exc:
            failures.append(exc)
            continue
        if return_details:
            try:
                lml_start = _log_marginal_for(training, params_at(theta0))[0]
            except (LinAlgError, NoConvergenceError):
                lml_start = -np.inf
            details.append(
                {"theta_start": params_at(theta0), "lml_start": lml_start,
                 "lml_best": -res.fun}
            )
        if np.isfinite(res.fun) and -res.fun > best_lml:
            best_lml = -res.fun
            best_theta = res.x
    if best_theta is None:
        raise NoConvergenceError(
            f"all {restarts} hyperparameter restarts failed: {failures}"
        )
    result = params_at(best_theta)
    return (result, details) if return_details else result


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    n_misclassified: int
    probabilities: np.ndarray  # collision probability per test point


def evaluate(model: GpcModel, test: list[LabeledSample]) -> EvalMetrics:
    """Accuracy of the p >= 0.5 decision rule on labeled scenarios."""
    if not test:
        raise ValueError("empty test set: accuracy undefined")
    pts = np.array([s.params.as_array() for s in test])
    _, _, prob = model.predict_batch(model.training.box.to_unit(pts))
    predicted = prob >= 0.5
    actual = np.array([s.outcome is Outcome.COLLISION for s in test])
    n_wrong = int((predicted != actual).sum())
    return EvalMetrics(
        accuracy=1.0 - n_wrong / len(test),
        n_misclassified=n_wrong,
        probabilities=prob,
    )
