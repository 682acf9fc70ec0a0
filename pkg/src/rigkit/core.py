"""Mode-parameterized inverse Gaussian (rIG) distribution.

The density with mode ``theta`` and spread ``gamma`` is

.. math::

    f(x; \\theta, \\gamma) = \\sqrt{\\frac{\\theta(3\\gamma + \\theta)}{2\\pi\\gamma x^3}}
    \\exp\\left\\{-\\frac{[x - \\sqrt{\\theta(3\\gamma + \\theta)}]^2}{2\\gamma x}\\right\\},
    \\quad x > 0,

which is the classical IG(mu, lambda) with ``mu = sqrt(theta (3 gamma + theta))``
and ``lambda = theta (3 gamma + theta) / gamma``.

Public functions take a :class:`RigParams` value.  The underscore-prefixed
kernels (``_log_pdf``, ``_grad``, ``_hess``) broadcast over array-valued
parameters and are what the fitting modules call in their inner loops.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import log_ndtr, ndtr

from .exceptions import DomainError

__all__ = [
    "RigParams",
    "ClassicalIgParams",
    "LogPdfGradient",
    "LogPdfHessian",
    "to_classical",
    "from_classical",
    "log_pdf",
    "pdf",
    "cdf",
    "mode",
    "variance",
    "skewness",
    "sample",
    "log_pdf_grad",
    "log_pdf_hess",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _positive(name, value):
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class RigParams:
    """Mode ``theta`` and spread ``gamma`` of an rIG distribution."""

    theta: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _positive("theta", self.theta))
        object.__setattr__(self, "gamma", _positive("gamma", self.gamma))


@dataclass(frozen=True)
class ClassicalIgParams:
    """Mean ``mu`` and shape ``lam`` of the classical inverse Gaussian."""

    mu: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _positive("mu", self.mu))
        object.__setattr__(self, "lam", _positive("lambda", self.lam))


@dataclass(frozen=True)
class LogPdfGradient:
    d_theta: "float | np.ndarray"
    d_gamma: "float | np.ndarray"

    def as_array(self):
        return np.array([self.d_theta, self.d_gamma], dtype=float)


@dataclass(frozen=True)
class LogPdfHessian:
    """Symmetric 2x2 Hessian; the mixed partial is stored once."""

    d_theta_theta: "float | np.ndarray"
    d_theta_gamma: "float | np.ndarray"
    d_gamma_gamma: "float | np.ndarray"

    def as_matrix(self):
        return np.array(
            [
                [self.d_theta_theta, self.d_theta_gamma],
                [self.d_theta_gamma, self.d_gamma_gamma],
            ],
            dtype=float,
        )


# --------------------------------------------------------------------------
# Parameter conversions and moments
# --------------------------------------------------------------------------


def to_classical(p):
    """Convert ``RigParams`` to ``ClassicalIgParams``."""
    m2 = p.theta * (3.0 * p.gamma + p.theta)
    return ClassicalIgParams(mu=math.sqrt(m2), lam=m2 / p.gamma)


def from_classical(p):
    """Convert ``ClassicalIgParams`` to ``RigParams``.

    The mode ``mu (sqrt(1 + 9 mu^2 / (4 lam^2)) - 3 mu / (2 lam))`` is evaluated
    in the algebraically equal form ``mu / (sqrt(1 + r^2) + r)`` with
    ``r = 3 mu / (2 lam)``, which avoids cancellation when ``mu >> lam``.
    """
    r = 1.5 * p.mu / p.lam
    theta = p.mu / (math.hypot(1.0, r) + r)
    return RigParams(theta=theta, gamma=p.mu * p.mu / p.lam)


def mode(p):
    return p.theta


def variance(p):
    return p.gamma * math.sqrt(p.theta) * math.sqrt(3.0 * p.gamma + p.theta)


def skewness(p):
    return 3.0 * math.sqrt(p.gamma / math.sqrt(p.theta * (3.0 * p.gamma + p.theta)))


def mean(p):
    return to_classical(p).mu


# --------------------------------------------------------------------------
# Broadcasting kernels
# --------------------------------------------------------------------------


def _check_support(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0.0)):
        bad = x[~(x > 0.0)].ravel()[0]
        raise DomainError(f"rIG support is x > 0; got x = {bad!r}")
    return x


def _log_pdf(x, theta, gamma):
    m2 = theta * (3.0 * gamma + theta)
    d = x - np.sqrt(m2)
    return 0.5 * (np.log(m2) - _LOG_2PI - np.log(gamma) - 3.0 * np.log(x)) - d * d / (
        2.0 * gamma * x
    )


def _grad(x, theta, gamma):
    """First partials of the log-density w.r.t. (theta, gamma)."""
    s = 3.0 * gamma + theta
    sq_t = np.sqrt(theta)
    sq_s = np.sqrt(s)
    d_theta = (
        -1.5 / x
        - theta / (x * gamma)
        + 1.0 / s
        + 3.0 * gamma / (2.0 * theta * s)
        + sq_t / (2.0 * gamma * sq_s)
        + sq_s / (2.0 * gamma * sq_t)
    )
    d_gamma = (
        x / (2.0 * gamma**2)
        + theta**2 / (2.0 * x * gamma**2)
        - theta / (2.0 * gamma * s)
        + 3.0 * sq_t / (2.0 * gamma * sq_s)
        - sq_t * sq_s / gamma**2
    )
    return d_theta, d_gamma


def _hess(x, theta, gamma):
    """Second partials of the log-density: (tt, tg, gg)."""
    s = 3.0 * gamma + theta
    sq_t = np.sqrt(theta)
    sq_s = np.sqrt(s)
    m = sq_t * sq_s
    d_tt = -0.25 * (
        4.0 / (x * gamma)
        + 2.0 / theta**2
        + 2.0 / s**2
        + 9.0 * gamma / (theta**1.5 * s**1.5)
    )
    d_tg = theta / (x * gamma**2) + (
        -27.0 * gamma**3
        - 30.0 * gamma * theta**2
        - 4.0 * theta**3
        - 3.0 * gamma**2 * (21.0 * theta + 2.0 * m)
    ) / (4.0 * gamma**2 * sq_t * s**2.5)
    d_gg = (
        -x / gamma**3
        - theta**2 / (x * gamma**3)
        + 3.0 * theta / (2.0 * gamma * s**2)
        - 9.0 * sq_t / (4.0 * gamma * s**1.5)
        + theta / (2.0 * gamma**2 * s)
        - 3.0 * sq_t / (gamma**2 * sq_s)
        + 2.0 * m / gamma**3
    )
    return d_tt, d_tg, d_gg


def _scalar_or_array(v, like):
    return float(v) if np.ndim(like) == 0 else v


# --------------------------------------------------------------------------
# Public distribution functions
# --------------------------------------------------------------------------


def log_pdf(x, p):
    """Log-density at ``x`` (scalar or array); raises ``DomainError`` for x <= 0."""
    xa = _check_support(x)
    return _scalar_or_array(_log_pdf(xa, p.theta, p.gamma), x)


def pdf(x, p):
    xa = _check_support(x)
    return _scalar_or_array(np.exp(_log_pdf(xa, p.theta, p.gamma)), x)


def cdf(x, p):
    """Distribution function via the standard normal CDF.

    ``F(x) = Phi(a) + exp(2 lam / mu) Phi(-b)`` with
    ``a = sqrt(lam / x) (x / mu - 1)`` and ``b = sqrt(lam / x) (x / mu + 1)``;
    the second term is formed in log space so ``exp(2 lam / mu)`` never
    overflows on its own.
    """
    xa = _check_support(x)
    c = to_classical(p)
    r = np.sqrt(c.lam / xa)
    a = r * (xa / c.mu - 1.0)
    b = r * (xa / c.mu + 1.0)
    out = ndtr(a) + np.exp(2.0 * c.lam / c.mu + log_ndtr(-b))
    return _scalar_or_array(np.clip(out, 0.0, 1.0), x)


def sample(p, n, seed=None):
    """Draw ``n`` variates by the transformation-with-rejection method.

    A chi-square(1) variate ``y`` is mapped to the smaller root ``x1`` of the
    IG quadratic; ``x1`` is kept with probability ``mu / (mu + x1)`` and
    replaced by ``mu^2 / x1`` otherwise.  ``x1`` is formed as ``mu^2 / x2``
    from the larger root to avoid cancellation.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    c = to_classical(p)
    mu, lam = c.mu, c.lam
    y = rng.standard_normal(n) ** 2
    my = mu * y
    x2 = mu + mu * my / (2.0 * lam) + (mu / (2.0 * lam)) * np.sqrt(4.0 * lam * my + my * my)
    x1 = mu * mu / x2
    u = rng.random(n)
    return np.where(u <= mu / (mu + x1), x1, x2)


def log_pdf_grad(x, p):
    xa = _check_support(x)
    d_t, d_g = _grad(xa, p.theta, p.gamma)
    return LogPdfGradient(_scalar_or_array(d_t, x), _scalar_or_array(d_g, x))


def log_pdf_hess(x, p):
    xa = _check_support(x)
    d_tt, d_tg, d_gg = _hess(xa, p.theta, p.gamma)
    return LogPdfHessian(
        _scalar_or_array(d_tt, x),
        _scalar_or_array(d_tg, x),
        _scalar_or_array(d_gg, x),
    )


def classical_log_pdf(x, c):
    """Log-density in the (mu, lambda) parameterization."""
    xa = _check_support(x)
    out = 0.5 * (np.log(c.lam) - _LOG_2PI - 3.0 * np.log(xa)) - c.lam * (xa - c.mu) ** 2 / (
        2.0 * c.mu**2 * xa
    )
    return _scalar_or_array(out, x)
