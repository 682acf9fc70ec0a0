"""Finite mixtures of rIG distributions: EM fitting, MAP clustering, BIC."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.special import logsumexp

from . import core
from ._numeric import row_logsumexp
from .exceptions import DegenerateComponentError, DomainError, FitError, NonFiniteError

__all__ = [
    "MixtureParams",
    "MixtureFit",
    "ModelSelection",
    "mixture_pdf",
    "mixture_log_pdf",
    "mixture_loglik",
    "kmeans_1d",
    "fit_em",
    "select_k",
    "classify",
    "bic",
]

MIN_EFFECTIVE_COUNT = 3.0
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000


@dataclass(frozen=True, eq=False)
class MixtureParams:
    """Weights, modes and spreads of a k-component rIG mixture.

    Components are stored sorted by ascending ``theta``.
    """

    pi: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float).ravel()
        theta = np.array(self.theta, dtype=float).ravel()
        gamma = np.array(self.gamma, dtype=float).ravel()
        if not (pi.size == theta.size == gamma.size) or pi.size == 0:
            raise DomainError("pi, theta and gamma must be nonempty and of equal length")
        if np.any(~(theta > 0)) or np.any(~(gamma > 0)):
            raise DomainError("component modes and spreads must be positive")
        if np.any(~(pi > 0)) or np.any(pi > 1) or abs(pi.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights must lie in (0, 1] and sum to 1, got {pi.tolist()}")
        order = np.argsort(theta, kind="stable")
        for name, arr in (("pi", pi), ("theta", theta), ("gamma", gamma)):
            arr = arr[order]
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self):
        return self.pi.size

    def __eq__(self, other):
        if not isinstance(other, MixtureParams):
            return NotImplemented
        return (
            np.array_equal(self.pi, other.pi)
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.gamma, other.gamma)
        )

    __hash__ = None


@dataclass(eq=False)
class MixtureFit:
    params: MixtureParams
    loglik: float
    bic: float
    responsibilities: np.ndarray
    labels: np.ndarray
    iterations: int
    converged: bool
    loglik_history: list = field(default_factory=list, repr=False)
    init: str = ""


@dataclass
class ModelSelection:
    fits: dict
    best_k: int
    bic: dict
    failures: dict = field(default_factory=dict)


def bic(loglik, k, n):
    """``2 l - (3k - 1) ln n``; larger is better."""
    return 2.0 * loglik - (3 * k - 1) * math.log(n)


def _log_joint(x, pi, theta, gamma):
    with np.errstate(divide="ignore"):
        return np.log(pi)[None, :] + core._log_pdf(x[:, None], theta[None, :], gamma[None, :])


def mixture_log_pdf(x, p):
    xa = core._check_support(x)
    flat = xa.ravel()
    out = logsumexp(_log_joint(flat, p.pi, p.theta, p.gamma), axis=1).reshape(xa.shape)
    return float(out) if np.ndim(x) == 0 else out


def mixture_pdf(x, p):
    """``sum_j pi_j f(x; theta_j, gamma_j)``."""
    v = mixture_log_pdf(x, p)
    return math.exp(v) if np.ndim(x) == 0 else np.exp(v)


def mixture_loglik(x, p, weights=None):
    x = np.asarray(x, dtype=float)
    lp = mixture_log_pdf(x, p)
    return float(np.sum(lp)) if weights is None else float(np.dot(weights, lp))


def kmeans_1d(x, k, max_iter=100):
    """Lloyd iterations on raw values, centroids started at the k quantile midpoints."""
    x = np.asarray(x, dtype=float)
    centers = np.quantile(x, (np.arange(k) + 0.5) / k)
    labels = np.zeros(x.size, dtype=int)
    for _ in range(max_iter):
        new = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        for j in range(k):
            members = x[new == j]
            if members.size:
                centers[j] = members.mean()
        if np.array_equal(new, labels):
            break
        labels = new
    return labels


def _one_hot(labels, k):
    z = np.zeros((labels.size, k))
    z[np.arange(labels.size), labels] = 1.0
    return z


def _random_labels(n, k, rng, max_tries=1000):
    for _ in range(max_tries):
        labels = rng.integers(k, size=n)
        if np.all(np.bincount(labels, minlength=k) >= MIN_EFFECTIVE_COUNT):
            return labels
    raise DomainError(f"could not draw a random partition with >= 3 points in each of {k} groups")


def _initial_responsibilities(x, k, init, seed):
    if isinstance(init, str):
        if init == "kmeans":
            return _one_hot(kmeans_1d(x, k), k), "kmeans"
        if init == "random":
            return _one_hot(_random_labels(x.size, k, np.random.default_rng(seed)), k), "random"
        raise ValueError(f"unknown init {init!r}; use 'kmeans', 'random' or an n-by-k array")
    z = np.array(init, dtype=float)
    if z.shape != (x.size, k):
        raise ValueError(f"explicit responsibilities must have shape {(x.size, k)}, got {z.shape}")
    if np.any(z < 0) or not np.allclose(z.sum(axis=1), 1.0):
        raise ValueError("explicit responsibilities must be nonnegative with unit row sums")
    return z, "explicit"


def _m_step(x, w, z, iteration):
    """Weights and per-component weighted MLEs, all components at once.

    Each ``(theta_j, gamma_j)`` maximizes the log-likelihood weighted by
    ``w z_j``; in the classical parameterization that maximizer is
    ``mu = sum w z x / W_j``, ``1 / lam = sum w z / x / W_j - 1 / mu``
    (the same estimate as :func:`rigkit.wmle.fit`).
    """
    eff = z.sum(axis=0)
    low = np.flatnonzero(eff < MIN_EFFECTIVE_COUNT)
    if low.size:
        raise DegenerateComponentError(int(low[0]), float(eff[low[0]]), iteration)
    wz = z * w[:, None]
    wsum = wz.sum(axis=0)
    pi = wsum / wsum.sum()
    mu = (x @ wz) / wsum
    inv_lam = ((1.0 / x) @ wz) / wsum - 1.0 / mu
    flat = np.flatnonzero(~(inv_lam > 1e-15 / mu))
    if flat.size or np.any(~(wsum > 0)):
        j = int(flat[0]) if flat.size else int(np.flatnonzero(~(wsum > 0))[0])
        raise DegenerateComponentError(j, float(eff[j]), iteration)
    r = 1.5 * mu * inv_lam
    theta = mu / (np.hypot(1.0, r) + r)
    gamma = mu * mu * inv_lam
    return pi, theta, gamma


def fit_em(
    data,
    k,
    init="kmeans",
    seed=None,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    weights=None,
):
    """Fit a k-component rIG mixture by EM.

    The run starts with an M-step on the initial responsibilities (hard
    labels from 1-D k-means, a random partition, or an explicit n-by-k
    matrix).  Each M-step sets ``pi_j`` to the mean responsibility and fits
    ``(theta_j, gamma_j)`` as the weighted MLE with weights ``z_ij``; each
    E-step recomputes the responsibilities.  Iteration stops when the
    observed-data log-likelihood gains less than ``tol``.

    Optional ``weights`` multiply into the responsibilities in every M-step
    and into the log-likelihood.

    Raises
    ------
    DegenerateComponentError
        When a component's effective count ``sum_i z_ij`` drops below 3.
    NonFiniteError
        When the log-likelihood is not finite.
    """
    x = np.array(data, dtype=float).ravel()
    if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
        raise DomainError("mixture data must be positive and finite")
    k = int(k)
    if k < 1:
        raise DomainError("k must be >= 1")
    if x.size < 3 * k:
        raise DomainError(f"need at least 3k = {3 * k} observations, got {x.size}")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).ravel()
    z, init_name = _initial_responsibilities(x, k, init, seed)

    history = []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        pi, theta, gamma = _m_step(x, w, z, it)
        lj = _log_joint(x, pi, theta, gamma)
        z = lj.copy()
        lse = row_logsumexp(z)
        ll = float(np.dot(w, lse))
        if not math.isfinite(ll):
            raise NonFiniteError(f"log-likelihood is not finite at iteration {it}", iteration=it)
        z = np.exp(lj - lse[:, None])
        history.append(ll)
        if len(history) > 1 and history[-1] - history[-2] < tol:
            converged = True
            break

    order = np.argsort(theta, kind="stable")
    params = MixtureParams(pi / pi.sum(), theta, gamma)
    z = z[:, order]
    return MixtureFit(
        params=params,
        loglik=ll,
        bic=bic(ll, k, x.size),
        responsibilities=z,
        labels=np.argmax(z, axis=1),
        iterations=it,
        converged=converged,
        loglik_history=history,
        init=init_name,
    )


def select_k(
    data,
    k_range=(1, 2, 3, 4),
    n_random_starts=9,
    use_kmeans_start=True,
    seed=20170101,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    weights=None,
):
    """Fit each k from several starts, keep the best run, pick k by BIC.

    For every k the EM is run ``n_random_starts`` times from random
    partitions and once from k-means; the run with the highest
    log-likelihood is kept.  A k whose starts all fail is dropped with a
    warning and recorded in ``failures``.

    Raises
    ------
    FitError
        Every k in ``k_range`` failed.
    """
    x = np.array(data, dtype=float).ravel()
    k_range = [int(k) for k in k_range]
    if not k_range:
        raise ValueError("k_range is empty")
    rng = np.random.default_rng(seed)
    fits = {}
    failures = {}
    for k in k_range:
        starts = []
        if use_kmeans_start:
            starts.append(("kmeans", None))
        starts.extend(("random", int(s)) for s in rng.integers(0, 2**32 - 1, size=n_random_starts))
        best = None
        errors = []
        for init, s in starts:
            try:
                f = fit_em(x, k, init=init, seed=s, tol=tol, max_iter=max_iter, weights=weights)
            except (DegenerateComponentError, NonFiniteError, DomainError) as exc:
                errors.append(f"{init}: {exc}")
                continue
            if best is None or f.loglik > best.loglik:
                best = f
        if best is None:
            failures[k] = errors
            warnings.warn(f"all starts failed for k={k}; excluded from selection", RuntimeWarning)
            continue
        fits[k] = best
        if errors:
            failures[k] = errors
    if not fits:
        raise FitError("every candidate k failed to fit")
    best_k = max(fits, key=lambda k: fits[k].bic)
    return ModelSelection(fits=fits, best_k=best_k, bic={k: f.bic for k, f in fits.items()}, failures=failures)


def classify(fit, x_new):
    """MAP component for a new observation.

    Returns ``(label, posterior)``; ties go to the smaller index.
    """
    p = fit.params if isinstance(fit, MixtureFit) else fit
    x = core._check_support(np.atleast_1d(x_new))
    lj = _log_joint(x, p.pi, p.theta, p.gamma)
    post = np.exp(lj - logsumexp(lj, axis=1)[:, None])
    labels = np.argmax(post, axis=1)
    if np.ndim(x_new) == 0:
        return int(labels[0]), post[0]
    return labels, post
