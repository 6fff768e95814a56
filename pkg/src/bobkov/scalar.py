"""Scalar Gaussian special functions.

phi is the standard normal density, Phi its distribution function and
Phi_inv the quantile function.  The Gaussian isoperimetric profile is

    I(p) = phi(Phi_inv(p)),      I'(p) = -Phi_inv(p).

All functions accept scalars or numpy arrays and return the same shape
(a Python float for scalar input).
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI
SQRT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Argument outside the domain of a scalar Gaussian function."""


def _out(values: np.ndarray):
    return values[()] if values.ndim == 0 else values


def phi(x):
    """Standard normal density (2 pi)^(-1/2) exp(-x^2 / 2)."""
    x = np.asarray(x, dtype=float)
    return _out(INV_SQRT_2PI * np.exp(-0.5 * x * x))


def Phi(x):
    """Standard normal CDF with relative accuracy ~1e-15 in the lower tail.

    For x < -1 the value is 0.5 * erfcx(-x / sqrt 2) * exp(-x^2 / 2), with x^2
    split as xh^2 + (x - xh)(x + xh) where xh has few significant bits, so
    the exponential sees an exactly representable argument.  Elsewhere
    ``scipy.special.ndtr`` is used directly.
    """
    x = np.asarray(x, dtype=float)
    out = special.ndtr(x)
    low = x < -1.0
    if np.any(low):
        xl = x[low]
        xh = np.round(xl * 16.0) / 16.0
        out = np.array(out, dtype=float)
        out[low] = (0.5 * special.erfcx(-xl / SQRT2) * np.exp(-0.5 * xh * xh)
                    * np.exp(-0.5 * (xl - xh) * (xl + xh)))
    return _out(out)


def _check_open_unit(p: np.ndarray, name: str = "p") -> None:
    bad = ~((p > 0.0) & (p < 1.0))
    if np.any(bad):
        v = p[bad].flat[0] if p.ndim else float(p)
        bound = "p > 0" if not (v > 0.0) else "p < 1"
        raise DomainError(f"{name} must satisfy 0 < {name} < 1 (violated: {bound}); got {v!r}")


def Phi_inv(p):
    """Standard normal quantile, accurate to a round-trip error below 1e-13.

    The rational approximation in ``ndtri`` is polished with two Newton
    steps on the lower half; the upper half uses Phi_inv(p) = -Phi_inv(1 - p),
    where 1 - p is exact for p >= 1/2.
    """
    p = np.asarray(p, dtype=float)
    _check_open_unit(p)
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    x = special.ndtri(q)
    for _ in range(2):
        dens = INV_SQRT_2PI * np.exp(-0.5 * x * x)
        step = np.where(dens > 0.0, (special.ndtr(x) - q) / np.where(dens > 0.0, dens, 1.0), 0.0)
        x = x - step
    x = np.where(upper, -x, x)
    return _out(x)


def iso_I(p):
    """Gaussian isoperimetric profile I(p) = phi(Phi_inv(p)); I(0) = I(1) = 0."""
    p = np.asarray(p, dtype=float)
    bad = ~((p >= 0.0) & (p <= 1.0))
    if np.any(bad):
        raise DomainError(f"p must lie in [0, 1]; got {p[bad].flat[0] if p.ndim else float(p)!r}")
    interior = (p > 0.0) & (p < 1.0)
    safe = np.where(interior, p, 0.5)
    out = np.where(interior, phi(Phi_inv(safe)), 0.0)
    return _out(np.asarray(out, dtype=float))


def iso_I_prime(p):
    """Derivative of the isoperimetric profile, I'(p) = -Phi_inv(p), for 0 < p < 1."""
    p = np.asarray(p, dtype=float)
    _check_open_unit(p)
    return _out(-np.asarray(Phi_inv(p)))

