"""
Closed-form densities of the one-dimensional Kac equation.

With initial density f0(v) = (2/sqrt(pi)) v^2 exp(-v^2) and collision rate
lambda = sqrt(pi)/2 the Kac equation has the Krook-Wu solution

    f(v, t) = [ 1.5 (1 - C) sqrt(C) + (3C - 1) C^1.5 v^2 ] exp(-C v^2) / sqrt(pi)

with C(t) = 1 / (3 - 2 exp(-sqrt(pi) t / 16)). These curves are the
validation oracle for every sampler in the package. ``t = math.inf`` is
accepted wherever a time is and selects the Gaussian limit.
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

logger = logging.getLogger("kacsim")

SQRT_PI = math.sqrt(math.pi)
CURVES = ("initial", "exact", "limit")


@dataclass(frozen=True)
class DensityCurve:
    """A probability density on the real line together with a label."""
    fn: Callable[[np.ndarray], np.ndarray]
    label: str

    def __call__(self, v):
        values = self.fn(np.asarray(v, dtype=float))
        return float(values) if np.ndim(values) == 0 else values


def _check_velocity(v):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("velocity must be finite")
    return v


def _check_time(t):
    if math.isnan(t) or t < 0:
        raise ValueError(f"time must be non-negative or math.inf, got {t}")


def initial_density(v):
    """f0(v) = (2/sqrt(pi)) v^2 exp(-v^2)."""
    v = _check_velocity(v)
    out = 2.0 / SQRT_PI * v * v * np.exp(-v * v)
    return float(out) if out.ndim == 0 else out


def limit_density(v):
    """The t -> infinity limit, a centred Gaussian with variance 3/2."""
    v = _check_velocity(v)
    out = np.exp(-v * v / 3.0) / math.sqrt(3.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def c_of_t(t: float) -> float:
    _check_time(t)
    if math.isinf(t):
        return 1.0 / 3.0
    return 1.0 / (3.0 - 2.0 * math.exp(-SQRT_PI * t / 16.0))


def exact_density(v, t: float):
    """Krook-Wu solution f(v, t); valid only for lambda = sqrt(pi)/2."""
    _check_time(t)
    if math.isinf(t):
        return limit_density(v)
    v = _check_velocity(v)
    c = c_of_t(t)
    bracket = 1.5 * (1.0 - c) * math.sqrt(c) + (3.0 * c - 1.0) * c ** 1.5 * v * v
    out = bracket * np.exp(-c * v * v) / SQRT_PI
    return float(out) if out.ndim == 0 else out


def density_curve(name: str, t: Optional[float] = None) -> DensityCurve:
    """
    Build one of the named curves ``initial``, ``exact`` or ``limit``.

    Raises:
        ValueError: if the name is unknown, or ``t`` is missing for ``exact``
            or given for another curve.
    """
    if name not in CURVES:
        raise ValueError(f"unknown curve '{name}', expected one of {', '.join(CURVES)}")
    if (name == "exact") != (t is not None):
        raise ValueError("a time t is required for the exact curve and only for it")
    if name == "initial":
        return DensityCurve(initial_density, "f0(v)")
    if name == "limit":
        return DensityCurve(limit_density, "f(v,inf)")
    _check_time(t)
    return DensityCurve(lambda v: exact_density(v, t), f"f(v,{t:g})")


# -- samplers --------------------------------------------------------------

def _random_signs(stream, n):
    return np.where(stream.bernoulli(0.5, n), 1.0, -1.0)


def sample_initial(stream, size=None):
    """
    Draw from f0. |V| = sqrt(G) with G ~ Gamma(3/2, 1) built as an
    Exponential(1) plus half a squared standard normal, then a fair sign.
    """
    n = 1 if size is None else size
    g = stream.exponential(n) + 0.5 * stream.normal(n) ** 2
    draws = np.sqrt(g) * _random_signs(stream, n)
    return float(draws[0]) if size is None else draws


def sample_exact(t: float, stream, size=None):
    """
    Draw from f(., t) directly.

    f(., t) is a mixture: with weight 1.5 (1 - C) a Gaussian of variance
    1 / (2C), otherwise +-sqrt(G / C) with G ~ Gamma(3/2, 1).
    """
    n = 1 if size is None else size
    c = c_of_t(t)
    gaussian = stream.bernoulli(min(1.0, 1.5 * (1.0 - c)), n)
    normals = stream.normal(n) / math.sqrt(2.0 * c)
    speeds = np.sqrt(stream.gamma(1.5, n) / c) * _random_signs(stream, n)
    draws = np.where(gaussian, normals, speeds)
    return float(draws[0]) if size is None else draws


# -- quadrature checks -----------------------------------------------------

def total_mass(curve: DensityCurve, lo: float = -8.0, hi: float = 8.0) -> float:
    mass, _ = integrate.quad(curve, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return mass


def moment(curve: DensityCurve, k: int, lo: float = -8.0, hi: float = 8.0) -> float:
    value, _ = integrate.quad(
        lambda v: v ** k * curve(v), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200
    )
    return value
