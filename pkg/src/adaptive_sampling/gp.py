"""Exact Gaussian-process regression over 2-D locations.

Squared-exponential kernel, Gaussian observation noise, hyperparameters
fitted by maximizing the log marginal likelihood in log space.

Repeated samples at the same location are common in the sampling loop (a
robot that keeps returning to the signal peak). The model therefore works on
the distinct locations only: ``m`` replicates with mean ``ybar`` at one
location are exactly equivalent to a single observation ``ybar`` with noise
``noise_variance / m``, plus a within-group term in the likelihood. This keeps
the linear algebra at the number of distinct locations and is exact, not an
approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri, dpotrs
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

NOISE_FLOOR = 1e-6
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Hyperparams:
    """Kernel signal variance, length scale (m) and observation-noise variance."""

    signal_variance: float
    length_scale: float
    noise_variance: float = NOISE_FLOOR

    def __post_init__(self):
        if not self.signal_variance > 0:
            raise ValueError(f"signal_variance must be > 0, got {self.signal_variance}")
        if not self.length_scale > 0:
            raise ValueError(f"length_scale must be > 0, got {self.length_scale}")
        # zero noise is accepted for hand-checkable examples; fit() never returns below the floor
        if not self.noise_variance >= 0:
            raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")

    def to_log(self) -> np.ndarray:
        return np.log([self.signal_variance, self.length_scale, self.noise_variance])

    @classmethod
    def from_log(cls, theta) -> "Hyperparams":
        sf2, ell, sn2 = np.exp(np.asarray(theta, dtype=float))
        return cls(float(sf2), float(ell), float(sn2))


@dataclass(frozen=True)
class TrainingSet:
    """Sample locations ``(n, 2)`` in meters and their observations ``(n,)``."""

    locations: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    observations: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        q = np.asarray(self.locations, dtype=float).reshape(-1, 2)
        z = np.asarray(self.observations, dtype=float).reshape(-1)
        if len(q) != len(z):
            raise ValueError(f"{len(q)} locations but {len(z)} observations")
        object.__setattr__(self, "locations", q)
        object.__setattr__(self, "observations", z)

    def __len__(self) -> int:
        return len(self.observations)

    def extend(self, locations, observations) -> "TrainingSet":
        q = np.asarray(locations, dtype=float).reshape(-1, 2)
        z = np.asarray(observations, dtype=float).reshape(-1)
        return TrainingSet(np.vstack([self.locations, q]), np.concatenate([self.observations, z]))


@dataclass(frozen=True)
class Prediction:
    mean: np.ndarray
    variance: np.ndarray


def kernel_eval(q, q_prime, h: Hyperparams) -> float:
    d2 = (float(q[0]) - float(q_prime[0])) ** 2 + (float(q[1]) - float(q_prime[1])) ** 2
    return h.signal_variance * math.exp(-d2 / (2.0 * h.length_scale**2))


def sq_exp(a, b, h: Hyperparams) -> np.ndarray:
    """Noise-free kernel matrix between point sets ``a`` (n, 2) and ``b`` (m, 2)."""
    d2 = cdist(np.asarray(a, float).reshape(-1, 2), np.asarray(b, float).reshape(-1, 2), "sqeuclidean")
    return h.signal_variance * np.exp(-0.5 * d2 / h.length_scale**2)


def gram(points, h: Hyperparams) -> np.ndarray:
    """``K(points, points) + noise_variance * I``."""
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("gram() needs at least one point")
    K = sq_exp(pts, pts, h)
    K[np.diag_indices_from(K)] += h.noise_variance
    return K


@dataclass(frozen=True)
class _Groups:
    locations: np.ndarray  # distinct locations, lexicographic order
    counts: np.ndarray
    means: np.ndarray
    within_ss: float  # sum of squared deviations from the group means
    n_total: int


def _group(locations: np.ndarray, z: np.ndarray) -> _Groups:
    order = np.lexsort((locations[:, 1], locations[:, 0]))
    srt = locations[order]
    new = np.ones(len(srt), bool)
    new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
    inverse = np.empty(len(srt), np.intp)
    inverse[order] = np.cumsum(new) - 1
    uniq = srt[new]
    counts = np.bincount(inverse, minlength=len(uniq))
    means = np.bincount(inverse, weights=z, minlength=len(uniq)) / counts
    resid = z - means[inverse]
    return _Groups(uniq, counts.astype(float), means, float(resid @ resid), len(z))


class _Likelihood:
    """Log marginal likelihood over grouped data, with the distance matrix cached."""

    def __init__(self, g: _Groups):
        self.g = g
        self.d2 = cdist(g.locations, g.locations, "sqeuclidean")
        self.inv_counts = 1.0 / g.counts
        self.n_rep = g.n_total - len(g.counts)
        self.const = -0.5 * len(g.counts) * _LOG_2PI - 0.5 * np.log(g.counts).sum()

    def __call__(self, h: Hyperparams, with_grad: bool = True):
        g = self.g
        sf2, ell, sn2 = h.signal_variance, h.length_scale, h.noise_variance
        K = sf2 * np.exp(-0.5 * self.d2 / ell**2)
        A = K + np.diag(sn2 * self.inv_counts)
        L, info = dpotrf(A, lower=1, clean=1)
        if info != 0:
            return -np.inf, np.full(3, np.nan)
        a, _ = dpotrs(L, g.means, lower=1)
        lml = -0.5 * g.means @ a - np.log(np.diag(L)).sum() + self.const
        if self.n_rep:
            if sn2 == 0:
                # replicates with zero noise: density is singular unless they agree exactly
                return (np.inf if g.within_ss == 0 else -np.inf), np.full(3, np.nan)
            lml += -0.5 * self.n_rep * (_LOG_2PI + math.log(sn2)) - 0.5 * g.within_ss / sn2
        if not with_grad:
            return float(lml), None
        Ainv, _ = dpotri(L, lower=1)
        Ainv = np.tril(Ainv) + np.tril(Ainv, -1).T
        W = np.outer(a, a) - Ainv
        WK = W * K
        grad = np.empty(3)
        grad[0] = 0.5 * WK.sum()
        grad[1] = 0.5 * np.sum(WK * self.d2) / ell**2
        grad[2] = 0.5 * sn2 * np.sum(np.diag(W) * self.inv_counts)
        if self.n_rep:
            grad[2] += -0.5 * self.n_rep + 0.5 * g.within_ss / sn2
        return float(lml), grad


def log_marginal_likelihood(training: TrainingSet, h: Hyperparams) -> tuple[float, np.ndarray]:
    """Log marginal likelihood of the observations and its gradient.

    The gradient is taken with respect to ``log(signal_variance)``,
    ``log(length_scale)`` and ``log(noise_variance)`` in that order. The
    observations are used as given (no centering). A Gram matrix that is not
    positive definite yields ``-inf`` and a NaN gradient.
    """
    if len(training) == 0:
        return 0.0, np.zeros(3)
    return _Likelihood(_group(training.locations, training.observations))(h)


def _bbox_diagonal(points: np.ndarray) -> float:
    span = points.max(axis=0) - points.min(axis=0)
    return float(math.hypot(*span))


def fit(
    training: TrainingSet,
    init: Hyperparams,
    restarts: int = 3,
    *,
    seed=0,
    max_length_scale: float | None = None,
    min_length_scale: float | None = None,
    maxiter: int = 100,
    gtol: float = 1e-5,
) -> Hyperparams:
    """Maximize the log marginal likelihood of the centered observations.

    L-BFGS-B in log-hyperparameter space, started from ``init`` and from
    ``restarts`` further points drawn log-uniformly over [0.1, 10] times the
    data scale of each hyperparameter. The best optimum is returned, and never
    one with a lower likelihood than ``init``.

    The length scale is capped at ``max_length_scale`` (default: diagonal of
    the bounding box of the sample locations). When all observations are
    identical there is nothing to learn and ``init`` is returned with the
    length scale at the cap and the noise at the floor.
    """
    if len(training) < 2:
        raise ValueError("fit() needs at least 2 training samples")
    q, z = training.locations, training.observations
    zc = z - z.mean()
    lik = _Likelihood(_group(q, zc))

    ell_max = max_length_scale or _bbox_diagonal(q) or 1.0
    ell_min = min_length_scale or 1e-3 * ell_max
    if np.ptp(z) == 0:
        return Hyperparams(init.signal_variance, ell_max, NOISE_FLOOR)

    var = float(zc @ zc / len(zc))
    bounds = np.log([
        (1e-4 * var, 1e4 * var),
        (ell_min, ell_max),
        (NOISE_FLOOR, 10.0 * var),
    ])
    scale = np.log([var, 0.25 * ell_max, 0.01 * var])

    def objective(theta):
        lml, grad = lik(Hyperparams.from_log(theta))
        if not np.isfinite(lml) or not np.all(np.isfinite(grad)):
            return 1e25, np.zeros(3)
        return -lml, -grad

    rng = np.random.default_rng(seed)
    starts = [np.clip(init.to_log(), bounds[:, 0], bounds[:, 1])]
    for _ in range(restarts):
        starts.append(np.clip(scale + rng.uniform(math.log(0.1), math.log(10.0), 3), bounds[:, 0], bounds[:, 1]))

    best_theta, best_val = None, np.inf
    for x0 in starts:
        res = minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": maxiter, "gtol": gtol})
        if res.fun < best_val:
            best_theta, best_val = res.x, float(res.fun)

    init_lml, _ = lik(init, with_grad=False)
    if best_theta is None or -best_val < init_lml:
        return init
    return Hyperparams.from_log(best_theta)


@dataclass(frozen=True, eq=False)
class GpModel:
    """A GP conditioned on a training set with fixed hyperparameters.

    Observations are centered on their mean (``offset``) before conditioning
    and the offset is added back to predictions. ``chol`` is the lower Cholesky
    factor of ``K(U, U) + noise_variance * diag(1 / counts)`` over the distinct
    training locations ``U`` and ``weights`` the matching solved vector.
    """

    training: TrainingSet
    hyper: Hyperparams
    offset: float
    unique_locations: np.ndarray
    counts: np.ndarray
    chol: np.ndarray | None
    weights: np.ndarray

    @classmethod
    def condition(cls, training: TrainingSet, hyper: Hyperparams, center: bool = True) -> "GpModel":
        """Factorize; raises ``numpy.linalg.LinAlgError`` if the Gram matrix is not PD.

        ``center=False`` gives the plain zero-mean-prior GP.
        """
        if len(training) == 0:
            return cls(training, hyper, 0.0, np.empty((0, 2)), np.empty(0), None, np.empty(0))
        offset = float(training.observations.mean()) if center else 0.0
        g = _group(training.locations, training.observations - offset)
        A = sq_exp(g.locations, g.locations, hyper)
        A[np.diag_indices_from(A)] += hyper.noise_variance / g.counts
        L = np.linalg.cholesky(A)
        w = cho_solve((L, True), g.means)
        return cls(training, hyper, offset, g.locations, g.counts, L, w)


def predict(model: GpModel, queries) -> Prediction:
    """Posterior mean and latent-function variance at ``queries`` (m, 2)."""
    Q = np.asarray(queries, float).reshape(-1, 2)
    prior_var = np.full(len(Q), model.hyper.signal_variance)
    if model.chol is None:
        return Prediction(np.zeros(len(Q)), prior_var)
    Ks = sq_exp(Q, model.unique_locations, model.hyper)
    mean = model.offset + Ks @ model.weights
    v = solve_triangular(model.chol, Ks.T, lower=True)
    var = np.clip(prior_var - np.einsum("ij,ij->j", v, v), 0.0, None)
    return Prediction(mean, var)
