"""Optimizers shared by the fitting code.

``maximize`` is a BFGS quasi-Newton ascent run in an unconstrained space
obtained through per-coordinate :class:`Transform` objects.  ``minimize_1d``
is a bracketed scalar minimizer (golden section with parabolic steps).
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import NonFiniteError

__all__ = [
    "Transform",
    "OptimResult",
    "ScalarResult",
    "maximize",
    "minimize_1d",
    "LOG",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500

_ARMIJO_C = 1e-4
_CONTRACTION = 0.5
_MAX_BACKTRACK = 60
# iterations without a new smallest gradient norm before giving up
_STALL_ITER = 20


@dataclass(frozen=True)
class Transform:
    """Map between a constrained coordinate and the real line.

    kind
        ``"identity"``, ``"log"`` (x > 0), ``"logit"`` (a < x < b) or
        ``"shifted-log"`` (x > c).
    """

    kind: str = "identity"
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "log", "logit", "shifted-log"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "logit" and not self.a < self.b:
            raise ValueError("logit transform needs a < b")

    @classmethod
    def log_positive(cls):
        return cls("log")

    @classmethod
    def logit_interval(cls, a, b):
        return cls("logit", float(a), float(b))

    @classmethod
    def greater_than(cls, c):
        return cls("shifted-log", float(c))

    def forward(self, x):
        """Constrained value -> unconstrained value."""
        if self.kind == "identity":
            return float(x)
        if self.kind == "log":
            return math.log(x)
        if self.kind == "shifted-log":
            return math.log(x - self.a)
        t = (x - self.a) / (self.b - self.a)
        return math.log(t) - math.log1p(-t)

    def inverse(self, u):
        """Unconstrained value -> constrained value."""
        if self.kind == "identity":
            return float(u)
        if self.kind == "log":
            return math.exp(u)
        if self.kind == "shifted-log":
            return self.a + math.exp(u)
        if u >= 0:
            t = 1.0 / (1.0 + math.exp(-u))
        else:
            e = math.exp(u)
            t = e / (1.0 + e)
        return self.a + (self.b - self.a) * t

    def jacobian(self, u):
        """d(constrained)/d(unconstrained) at ``u``."""
        if self.kind == "identity":
            return 1.0
        if self.kind in ("log", "shifted-log"):
            return math.exp(u)
        t = 1.0 / (1.0 + math.exp(-u)) if u >= 0 else math.exp(u) / (1.0 + math.exp(u))
        return (self.b - self.a) * t * (1.0 - t)


LOG = Transform.log_positive()
IDENTITY = Transform()


@dataclass
class OptimResult:
    argmax: np.ndarray
    value: float
    converged: bool
    iterations: int
    gradient_norm: float
    message: str = ""
    n_evals: int = 0
    inv_hessian: np.ndarray = field(default=None, repr=False)


@dataclass
class ScalarResult:
    x: float
    value: float
    at_boundary: bool
    n_evals: int = 0
    evaluations: list = field(default_factory=list, repr=False)


def _fd_gradient(f, u, f0=None):
    g = np.empty_like(u)
    for i in range(u.size):
        h = max(1e-7, 1e-7 * abs(u[i]))
        up = u.copy()
        dn = u.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (f(up) - f(dn)) / (2.0 * h)
    return g


def maximize(
    objective,
    x0,
    gradient=None,
    transforms=None,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    inv_hessian0=None,
):
    """Maximize ``objective`` with BFGS in the transformed space.

    Parameters
    ----------
    objective : callable
        ``objective(x) -> float`` on the constrained space.
    x0 : array_like
        Starting point, strictly inside the constrained domain.
    gradient : callable, optional
        ``gradient(x) -> array`` of the objective on the constrained space.
        Central finite differences in the unconstrained space are used when
        omitted.
    transforms : sequence of Transform, optional
        One per coordinate; identity when omitted.
    tol : float
        Convergence threshold on the unconstrained gradient norm.
    max_iter : int
        Iteration cap.
    inv_hessian0 : ndarray, optional
        Starting inverse-Hessian approximation in the unconstrained space,
        e.g. ``inv_hessian`` from a previous result on a similar problem.

    Returns
    -------
    OptimResult
        The best point visited; its objective value is never below
        ``objective(x0)``.  ``inv_hessian`` holds the final approximation.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    if transforms is None:
        transforms = [IDENTITY] * n
    transforms = list(transforms)
    if len(transforms) != n:
        raise ValueError("need one transform per coordinate")

    n_evals = 0

    def to_x(u):
        return np.array([t.inverse(ui) for t, ui in zip(transforms, u)])

    def neg_f(u):
        nonlocal n_evals
        n_evals += 1
        with np.errstate(all="ignore"):
            try:
                v = -float(objective(to_x(u)))
            except (ValueError, ArithmeticError):
                return math.inf
        return v if math.isfinite(v) else math.inf

    def neg_g(u, fu):
        if gradient is None:
            return -_fd_gradient(lambda v: -neg_f(v), u)
        jac = np.array([t.jacobian(ui) for t, ui in zip(transforms, u)])
        with np.errstate(all="ignore"):
            return -np.asarray(gradient(to_x(u)), dtype=float) * jac

    try:
        u = np.array([t.forward(xi) for t, xi in zip(transforms, x0)])
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"x0 = {x0} is not inside the constrained domain") from exc
    f = neg_f(u)
    if not math.isfinite(f):
        raise NonFiniteError(f"objective is not finite at x0 = {x0.tolist()}")
    g = neg_g(u, f)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(f"gradient is not finite at x0 = {x0.tolist()}")

    warm = inv_hessian0 is not None
    H = np.array(inv_hessian0, dtype=float) if warm else np.eye(n)
    if H.shape != (n, n) or not np.all(np.isfinite(H)):
        H = np.eye(n)
        warm = False
    gnorm = float(np.linalg.norm(g))
    it = 0
    message = "maximum iterations reached"
    first = not warm
    best_gnorm = gnorm
    since_best = 0
    while gnorm >= tol and it < max_iter:
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0:
            # not a descent direction; restart from steepest descent
            H = np.eye(n)
            p = -g
            slope = float(g @ p)
        step = 1.0
        if first:
            step = min(1.0, 1.0 / max(gnorm, 1e-300))
        accepted = False
        for _ in range(_MAX_BACKTRACK):
            u_new = u + step * p
            f_new = neg_f(u_new)
            if math.isfinite(f_new):
                if f_new <= f + _ARMIJO_C * step * slope:
                    g_new = neg_g(u_new, f_new)
                    if np.all(np.isfinite(g_new)):
                        accepted = True
                        break
                elif f_new <= f:
                    # Armijo undetectable at rounding level; accept only
                    # if the gradient shrinks and the value did not rise.
                    g_new = neg_g(u_new, f_new)
                    if np.all(np.isfinite(g_new)) and np.linalg.norm(g_new) < gnorm:
                        accepted = True
                        break
            step *= _CONTRACTION
        if not accepted:
            message = "line search failed"
            break
        s = u_new - u
        y = g_new - g
        sy = float(s @ y)
        if first and sy > 0:
            H = np.eye(n) * (sy / float(y @ y))
        first = False
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)
        u, f, g = u_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
        it += 1
        if gnorm < best_gnorm:
            best_gnorm, since_best = gnorm, 0
        else:
            since_best += 1
            if since_best >= _STALL_ITER:
                message = "stalled: no gradient progress at rounding level"
                break
    converged = gnorm < tol
    if converged:
        message = "gradient norm below tolerance"
    return OptimResult(
        argmax=to_x(u),
        value=-f,
        converged=converged,
        iterations=it,
        gradient_norm=gnorm,
        message=message,
        n_evals=n_evals,
        inv_hessian=H,
    )


def minimize_1d(objective, bracket, tol=1e-8, max_iter=500):
    """Minimize a scalar function on ``[lo, hi]``.

    Brent's bounded method (golden section accelerated by parabolic
    interpolation) locates a local minimizer; the two bracket ends are also
    evaluated, and the best of the three is returned.  ``at_boundary`` is set
    when the answer sits at either end, which is what a monotone objective
    produces.

    Raises
    ------
    NonFiniteError
        If the objective is non-finite at any evaluated abscissa.
    """
    lo, hi = (float(b) for b in bracket)
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got ({lo}, {hi})")
    evaluations = []

    def f(x):
        v = float(objective(x))
        if not math.isfinite(v):
            raise NonFiniteError(
                f"objective is not finite at x = {x!r} (value {v!r})", abscissa=x
            )
        evaluations.append((float(x), v))
        return v

    res = minimize_scalar(
        f, bounds=(lo, hi), method="bounded", options={"xatol": tol, "maxiter": max_iter}
    )
    candidates = [(float(res.fun), float(res.x)), (f(lo), lo), (f(hi), hi)]
    value, x = min(candidates)
    span = hi - lo
    at_boundary = min(x - lo, hi - x) <= max(10.0 * tol, 1e-9 * span)
    return ScalarResult(x=x, value=value, at_boundary=at_boundary, n_evals=len(evaluations), evaluations=evaluations)
