"""Maximum weighted likelihood estimation for the rIG distribution."""

from dataclasses import dataclass
import math

import numpy as np

from . import core, optim
from .core import ClassicalIgParams, LogPdfGradient, LogPdfHessian, RigParams
from .exceptions import DomainError, SpreadUnidentifiableError

__all__ = [
    "WeightedSample",
    "RigFit",
    "weighted_loglik",
    "weighted_score",
    "weighted_hessian",
    "moment_start",
    "closed_form_mle",
    "fit",
]


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """Positive observations ``x`` with nonnegative weights ``w``.

    ``w`` defaults to all ones.  Arrays are copied and made read-only.
    """

    x: np.ndarray
    w: np.ndarray = None

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        w = np.ones_like(x) if self.w is None else np.array(self.w, dtype=float).ravel()
        if x.size == 0:
            raise DomainError("sample is empty")
        if w.shape != x.shape:
            raise DomainError(f"x has {x.size} entries but w has {w.size}")
        if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
            raise DomainError("all observations must be positive and finite")
        if np.any(~(w >= 0)) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be nonnegative and finite")
        if not w.sum() > 0:
            raise DomainError("weights must not all be zero")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def n(self):
        return self.x.size

    @property
    def total_weight(self):
        return float(self.w.sum())


@dataclass(frozen=True)
class RigFit:
    params: RigParams
    loglik: float
    se_theta: float
    se_gamma: float
    converged: bool
    iterations: int = 0
    gradient_norm: float = float("nan")


def _as_sample(s):
    return s if isinstance(s, WeightedSample) else WeightedSample(s)


def weighted_loglik(s, p):
    """``sum_i w_i log f(x_i; theta, gamma)``."""
    s = _as_sample(s)
    return float(np.dot(s.w, core._log_pdf(s.x, p.theta, p.gamma)))


def weighted_score(s, p):
    s = _as_sample(s)
    d_t, d_g = core._grad(s.x, p.theta, p.gamma)
    return LogPdfGradient(float(np.dot(s.w, d_t)), float(np.dot(s.w, d_g)))


def weighted_hessian(s, p):
    s = _as_sample(s)
    d_tt, d_tg, d_gg = core._hess(s.x, p.theta, p.gamma)
    return LogPdfHessian(
        float(np.dot(s.w, d_tt)), float(np.dot(s.w, d_tg)), float(np.dot(s.w, d_gg))
    )


def moment_start(s):
    """Method-of-moments start: ``mu0 = m``, ``lam0 = m^3 / v``, mapped to rIG."""
    s = _as_sample(s)
    W = s.w.sum()
    m = float(np.dot(s.w, s.x) / W)
    v = float(np.dot(s.w, (s.x - m) ** 2) / W)
    if not v > 0:
        raise SpreadUnidentifiableError("spread unidentifiable: all observations are equal")
    return core.from_classical(ClassicalIgParams(mu=m, lam=m**3 / v))


def closed_form_mle(s):
    """Exact maximizer of the weighted log-likelihood.

    In the classical parameterization the weighted MLE is
    ``mu = sum w x / W`` and ``1 / lam = sum w (1/x - 1/mu) / W``; the
    rIG estimate follows by invariance of the MLE under reparameterization.
    """
    s = _as_sample(s)
    W = s.w.sum()
    mu = float(np.dot(s.w, s.x) / W)
    inv_lam = float(np.dot(s.w, 1.0 / s.x) / W) - 1.0 / mu
    if not inv_lam > 1e-15 * (1.0 / mu):
        raise SpreadUnidentifiableError("spread unidentifiable: all observations are equal")
    return core.from_classical(ClassicalIgParams(mu=mu, lam=1.0 / inv_lam))


def _standard_errors(s, p):
    H = weighted_hessian(s, p).as_matrix()
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        return float("nan"), float("nan")
    d = np.diag(cov)
    if np.any(d < 0):
        return float("nan"), float("nan")
    return math.sqrt(d[0]), math.sqrt(d[1])


def _newton_polish(s, p, max_steps=8):
    """A few damped Newton steps on the full objective using the analytic Hessian."""
    best = weighted_loglik(s, p)
    for _ in range(max_steps):
        g = weighted_score(s, p).as_array()
        H = weighted_hessian(s, p).as_matrix()
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            break
        if np.dot(g, step) <= 0:
            break
        # near the optimum the gain is below the rounding level of the sum
        slack = 1e-13 * (abs(best) + 1.0)
        t = 1.0
        improved = False
        while t > 1e-6:
            th, ga = p.theta + t * step[0], p.gamma + t * step[1]
            if th > 0 and ga > 0:
                cand = RigParams(th, ga)
                val = weighted_loglik(s, cand)
                if val > best + slack or (
                    val >= best - slack
                    and np.linalg.norm(weighted_score(s, cand).as_array()) < np.linalg.norm(g)
                ):
                    p, best, improved = cand, max(val, best), True
                    break
            t *= 0.5
        if not improved:
            break
    return p


def fit(s, x0=None, tol=optim.DEFAULT_TOL, max_iter=optim.DEFAULT_MAX_ITER):
    """Fit (theta, gamma) by maximizing the weighted log-likelihood.

    BFGS runs on ``(log theta, log gamma)`` with the objective divided by the
    total weight (the argmax is unchanged), starting from the moment estimate;
    the analytic Hessian then polishes the optimum with Newton steps and
    provides observed-information standard errors.

    Parameters
    ----------
    s : WeightedSample or array_like
        Data; a plain array means unit weights.
    x0 : RigParams, optional
        Starting point overriding the moment-based one.

    Raises
    ------
    SpreadUnidentifiableError
        If all positively weighted observations are equal.
    """
    s = _as_sample(s)
    active = s.x[s.w > 0]
    if active.size < 2 or np.all(active == active[0]):
        raise SpreadUnidentifiableError("spread unidentifiable: fewer than 2 distinct observations")
    start = moment_start(s) if x0 is None else x0
    W = s.total_weight

    def obj(v):
        return weighted_loglik(s, RigParams(v[0], v[1])) / W

    def grad(v):
        return weighted_score(s, RigParams(v[0], v[1])).as_array() / W

    res = optim.maximize(
        obj,
        [start.theta, start.gamma],
        gradient=grad,
        transforms=[optim.LOG, optim.LOG],
        tol=tol,
        max_iter=max_iter,
    )
    p = _newton_polish(s, RigParams(*res.argmax))
    g = weighted_score(s, p).as_array()
    jac_g = g * np.array([p.theta, p.gamma]) / W
    gnorm = float(np.linalg.norm(jac_g))
    se_t, se_g = _standard_errors(s, p)
    return RigFit(
        params=p,
        loglik=weighted_loglik(s, p),
        se_theta=se_t,
        se_gamma=se_g,
        converged=bool(res.converged or gnorm < tol),
        iterations=res.iterations,
        gradient_norm=gnorm,
    )


def fit_closed_form(s):
    """Same estimate as :func:`fit` from the closed-form classical MLE."""
    s = _as_sample(s)
    p = closed_form_mle(s)
    se_t, se_g = _standard_errors(s, p)
    return RigFit(params=p, loglik=weighted_loglik(s, p), se_theta=se_t, se_gamma=se_g, converged=True)
