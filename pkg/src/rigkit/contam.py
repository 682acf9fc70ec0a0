"""Contaminated inverse Gaussian model for data with mild outliers.

The density is a two-component mixture sharing the mode ``theta``::

    p(x) = alpha f(x; theta, gamma) + (1 - alpha) f(x; theta, eta gamma)

with ``alpha`` in [0.5, 1) the proportion of good points and ``eta > 1`` the
spread inflation of the bad ones.  Fitting is by EM (unit weights) or by
direct maximization of the weighted log-likelihood.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import core, optim, wmle
from .exceptions import DomainError, FitError, NonFiniteError
from .wmle import WeightedSample

__all__ = [
    "ContamParams",
    "ContamFit",
    "LrTestResult",
    "contam_pdf",
    "contam_log_pdf",
    "posterior_good",
    "contam_logpdf_grad",
    "contam_loglik",
    "default_init",
    "near_null_init",
    "fit_em",
    "fit_em_multistart",
    "fit_direct",
    "lr_test",
    "chi2_2_sf",
]

ALPHA_FLOOR = 0.5
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000
# eta - 1 below this is reported as "no contamination detected"
ETA_BOUNDARY = 1e-6


@dataclass(frozen=True)
class ContamParams:
    theta: float
    gamma: float
    alpha: float
    eta: float

    def __post_init__(self):
        for name in ("theta", "gamma", "alpha", "eta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if not (self.theta > 0 and self.gamma > 0):
            raise DomainError("theta and gamma must be positive")
        if not ALPHA_FLOOR <= self.alpha < 1.0:
            raise DomainError(f"alpha must lie in [0.5, 1), got {self.alpha!r}")
        if not self.eta > 1.0:
            raise DomainError(f"eta must exceed 1, got {self.eta!r}")

    @property
    def reference(self):
        return core.RigParams(self.theta, self.gamma)

    @property
    def inflated(self):
        return core.RigParams(self.theta, self.eta * self.gamma)


@dataclass
class ContamFit:
    params: ContamParams
    loglik: float
    posteriors: np.ndarray
    labels: np.ndarray
    iterations: int
    converged: bool
    loglik_history: list = field(default_factory=list, repr=False)
    alpha_at_floor: bool = False
    eta_at_boundary: bool = False
    method: str = "em"

    @property
    def is_good(self):
        return self.posteriors > 0.5

    @property
    def no_contamination_detected(self):
        return self.eta_at_boundary


@dataclass(frozen=True)
class LrTestResult:
    statistic: float
    df: int
    p_value: float


def _components(x, p):
    lf1 = core._log_pdf(x, p.theta, p.gamma)
    lf2 = core._log_pdf(x, p.theta, p.eta * p.gamma)
    a = math.log(p.alpha) + lf1
    b = math.log1p(-p.alpha) + lf2
    return a, b, np.logaddexp(a, b)


def contam_log_pdf(x, p):
    xa = core._check_support(x)
    out = _components(xa, p)[2]
    return float(out) if np.ndim(x) == 0 else out


def contam_pdf(x, p):
    v = contam_log_pdf(x, p)
    return math.exp(v) if np.ndim(x) == 0 else np.exp(v)


def posterior_good(x, p):
    """Posterior probability ``alpha f(x; theta, gamma) / p(x)`` that x is good."""
    xa = core._check_support(x)
    a, _, lp = _components(xa, p)
    out = np.exp(a - lp)
    return float(out) if np.ndim(x) == 0 else out


def contam_loglik(s, p):
    s = s if isinstance(s, WeightedSample) else WeightedSample(s)
    return float(np.dot(s.w, _components(s.x, p)[2]))


def _component_factors(x, theta, g):
    """Per-component theta- and gamma-partials in the grouped closed form.

    For a component with spread ``g`` and ``m2 = theta (3 g + theta)``::

        d/dtheta = (3 g + 2 theta) (x (g + sqrt m2) - m2) / (2 g x m2)
        d/dg     = theta (x^2 (3g+theta) + theta^2 (3g+theta)
                          - x (g theta + 3 g sqrt m2 + 2 theta sqrt m2)) / (2 g^2 x m2)
    """
    m2 = theta * (3.0 * g + theta)
    m = np.sqrt(m2)
    c = 3.0 * g + theta
    d_t = (3.0 * g + 2.0 * theta) * (x * (g + m) - m2) / (2.0 * g * x * m2)
    d_g = theta * (x * x * c + theta * theta * c - x * (g * theta + 3.0 * g * m + 2.0 * theta * m)) / (
        2.0 * g * g * x * m2
    )
    return d_t, d_g


def contam_logpdf_grad(x, p):
    """Partials of ``log p(x)`` w.r.t. (theta, gamma, alpha, eta).

    Each term of the closed-form partials is a component density divided by
    ``p(x)`` times a rational factor; the ratios are evaluated as posterior
    weights ``v`` and ``1 - v`` so nothing under- or overflows for extreme x.

    Returns
    -------
    ndarray
        Shape ``(4,)`` for scalar ``x``, ``(4, n)`` for an array.
    """
    xa = core._check_support(x)
    theta, gamma, alpha, eta = p.theta, p.gamma, p.alpha, p.eta
    a, b, lp = _components(xa, p)
    v = np.exp(a - lp)
    u = np.exp(b - lp)
    eg = eta * gamma
    t1, g1 = _component_factors(xa, theta, gamma)
    t2, g2 = _component_factors(xa, theta, eg)
    d_theta = v * t1 + u * t2
    d_gamma = v * g1 + u * eta * g2
    d_alpha = v / alpha - u / (1.0 - alpha)
    m2 = theta * (3.0 * eg + theta)
    m = np.sqrt(m2)
    bracket = (xa * xa + theta * theta) * m2 * m - xa * theta * theta * (
        9.0 * eg * eg + 2.0 * theta * theta + eg * (9.0 * theta + m)
    )
    d_eta = u * bracket / (2.0 * xa * gamma * eta * eta * m2 * m)
    return np.array([d_theta, d_gamma, d_alpha, d_eta], dtype=float)


def default_init(s):
    """Reference parameters from the plain rIG fit, alpha0 = 0.95, eta0 = 10."""
    rig = wmle.fit_closed_form(s)
    return ContamParams(rig.params.theta, rig.params.gamma, 0.95, 10.0)


def near_null_init(s):
    """Start next to the plain rIG model: its estimates, alpha0 = 0.999, eta0 = 1.001.

    Because EM never lowers the likelihood, a run from here ends at least as
    high as the plain fit, which keeps the LR statistic nonnegative.
    """
    rig = wmle.fit_closed_form(s)
    return ContamParams(rig.params.theta, rig.params.gamma, 0.999, 1.001)


def _q2_objective(x, v, n):
    u = 1.0 - v

    def f(z):
        theta, gamma, eta = z
        lf1 = core._log_pdf(x, theta, gamma)
        lf2 = core._log_pdf(x, theta, eta * gamma)
        return (np.dot(v, lf1) + np.dot(u, lf2)) / n

    def g(z):
        theta, gamma, eta = z
        t1, g1 = core._grad(x, theta, gamma)
        t2, g2 = core._grad(x, theta, eta * gamma)
        ug2 = np.dot(u, g2)
        return np.array(
            [
                np.dot(v, t1) + np.dot(u, t2),
                np.dot(v, g1) + eta * ug2,
                gamma * ug2,
            ]
        ) / n

    return f, g


_Q2_TRANSFORMS = [optim.LOG, optim.LOG, optim.Transform.greater_than(1.0)]


def _finish(x, p, history, iterations, converged, method, weights=None):
    a, _, lp = _components(x, p)
    post = np.exp(a - lp)
    labels = np.where(post > 0.5, "good", "bad")
    ll = float(np.sum(lp)) if weights is None else float(np.dot(weights, lp))
    return ContamFit(
        params=p,
        loglik=ll,
        posteriors=post,
        labels=labels,
        iterations=iterations,
        converged=converged,
        loglik_history=history,
        alpha_at_floor=p.alpha <= ALPHA_FLOOR,
        eta_at_boundary=p.eta - 1.0 < ETA_BOUNDARY,
        method=method,
    )


def fit_em(s, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Fit by EM from a single starting point.

    E-step: ``v_i`` = posterior probability that ``x_i`` is good.
    M-step: ``alpha = max(0.5, mean v)`` in closed form, then BFGS on
    ``Q2(theta, gamma, eta)`` warm-started at the current values (so Q2, and
    hence the observed log-likelihood, never decreases).

    Stops when the log-likelihood gain drops below ``tol`` or after
    ``max_iter`` iterations.  ``loglik_history`` records every iterate.
    """
    s = s if isinstance(s, WeightedSample) else WeightedSample(s)
    if not np.all(s.w == 1.0):
        raise DomainError("fit_em uses unit weights; use fit_direct for weighted data")
    if s.n < 4:
        raise DomainError(f"need at least 4 observations, got {s.n}")
    x = s.x
    n = x.size
    p = default_init(s) if init is None else init
    ll = float(np.sum(_components(x, p)[2]))
    if not math.isfinite(ll):
        raise NonFiniteError("log-likelihood is not finite at the starting point", iteration=0)
    history = [ll]
    converged = False
    h_inv = None
    it = 0
    while it < max_iter:
        it += 1
        a, _, lp = _components(x, p)
        v = np.exp(a - lp)
        alpha = max(ALPHA_FLOOR, float(np.mean(v)))
        alpha = min(alpha, np.nextafter(1.0, 0.0))
        f, g = _q2_objective(x, v, n)
        # successive Q2 surfaces are close, so the curvature estimate carries over
        res = optim.maximize(
            f, [p.theta, p.gamma, p.eta], gradient=g, transforms=_Q2_TRANSFORMS, inv_hessian0=h_inv
        )
        h_inv = res.inv_hessian
        theta, gamma, eta = res.argmax
        if not eta > 1.0:
            eta = np.nextafter(1.0, 2.0)
        p = ContamParams(theta, gamma, alpha, eta)
        ll_new = float(np.sum(_components(x, p)[2]))
        if not math.isfinite(ll_new):
            raise NonFiniteError(f"log-likelihood became non-finite at iteration {it}", iteration=it)
        history.append(ll_new)
        gain = ll_new - ll
        ll = ll_new
        if gain < tol:
            converged = True
            break
    return _finish(x, p, history, it, converged, "em")


def fit_em_multistart(s, n_restarts=10, seed=20170101, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Run :func:`fit_em` from the default start plus jittered restarts.

    The starts are :func:`default_init`, :func:`near_null_init` and
    ``n_restarts`` jittered points that keep the reference (theta, gamma) of
    the plain fit and draw ``alpha0 ~ U(0.6, 0.99)`` and
    ``log eta0 ~ U(log 2, log 50)``.  The run with the largest final
    log-likelihood is returned.
    """
    s = s if isinstance(s, WeightedSample) else WeightedSample(s)
    base = default_init(s)
    rng = np.random.default_rng(seed)
    starts = [base, near_null_init(s)]
    for _ in range(n_restarts):
        starts.append(
            ContamParams(
                base.theta,
                base.gamma,
                float(rng.uniform(0.6, 0.99)),
                float(math.exp(rng.uniform(math.log(2.0), math.log(50.0)))),
            )
        )
    best = None
    for start in starts:
        fitted = fit_em(s, init=start, tol=tol, max_iter=max_iter)
        if best is None or fitted.loglik > best.loglik:
            best = fitted
    return best


def fit_direct(s, init=None, tol=optim.DEFAULT_TOL, max_iter=optim.DEFAULT_MAX_ITER):
    """Maximize the weighted contaminated log-likelihood directly.

    BFGS with the analytic partials of :func:`contam_logpdf_grad`;
    alpha lives on (0.5, 1) through a scaled logit and eta on (1, inf)
    through ``1 + exp``.  Without ``init`` the search runs from
    :func:`default_init` and from :func:`near_null_init` and keeps the
    better result.
    """
    s = s if isinstance(s, WeightedSample) else WeightedSample(s)
    if init is None:
        fits = [fit_direct(s, p0, tol, max_iter) for p0 in (default_init(s), near_null_init(s))]
        return max(fits, key=lambda f: f.loglik)
    p0 = init
    W = s.total_weight
    x, w = s.x, s.w

    def f(z):
        return float(np.dot(w, _components(x, ContamParams(*z))[2])) / W

    def g(z):
        return contam_logpdf_grad(x, ContamParams(*z)) @ w / W

    alpha0 = min(max(p0.alpha, 0.5 + 1e-6), 1.0 - 1e-9)
    res = optim.maximize(
        f,
        [p0.theta, p0.gamma, alpha0, p0.eta],
        gradient=g,
        transforms=[
            optim.LOG,
            optim.LOG,
            optim.Transform.logit_interval(ALPHA_FLOOR, 1.0),
            optim.Transform.greater_than(1.0),
        ],
        tol=tol,
        max_iter=max_iter,
    )
    theta, gamma, alpha, eta = res.argmax
    alpha = min(max(alpha, ALPHA_FLOOR), np.nextafter(1.0, 0.0))
    eta = max(eta, np.nextafter(1.0, 2.0))
    p = ContamParams(theta, gamma, alpha, eta)
    fitted = _finish(x, p, [res.value * W], res.iterations, res.converged, "direct", weights=w)
    return fitted


def chi2_2_sf(stat):
    """Upper tail of the chi-square distribution with 2 degrees of freedom."""
    return math.exp(-0.5 * stat)


def lr_test(s, rig_fit, contam_fit):
    """Likelihood-ratio test of the rIG (null) against the contaminated model.

    ``LR = 2 (l_contaminated - l_rig)`` is referred to chi-square(2).  Both
    log-likelihoods are recomputed on ``s``.
    """
    s = s if isinstance(s, WeightedSample) else WeightedSample(s)
    l_rig = wmle.weighted_loglik(s, rig_fit.params)
    l_con = contam_loglik(s, contam_fit.params)
    stat = 2.0 * (l_con - l_rig)
    if stat < -1e-6:
        raise FitError(
            f"negative LR statistic {stat:.6g}: the contaminated fit is worse than the rIG fit"
        )
    stat = max(stat, 0.0)
    return LrTestResult(statistic=stat, df=2, p_value=chi2_2_sf(stat))
