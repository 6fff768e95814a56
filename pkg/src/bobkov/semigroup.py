"""Pointwise Ornstein-Uhlenbeck evolution of black-box functions.

    f_t(x) = P_t f(x) = E f(e^{-t} x + sqrt(1 - e^{-2t}) Y),  Y ~ N(0, I_n)

Derivatives are Gaussian integration-by-parts representations, so only
values of f are needed:

    grad f_t(x) = k_t E[f(.) Y],                       k_t = e^{-t} / sqrt(1 - e^{-2t})
    Hess f_t(x) = e^{-2t} / (1 - e^{-2t}) E[f(.) (Y Y^T - I)]

The y-integral is done by one of three inner methods:

``quadrature``  a Gauss-Hermite or Monte Carlo rule (smooth f);
``rays``        ray casting (planar indicators, membership only);
``exact``       the handle's closed-form ``smoothing`` hook.

The h-chain is h_t = Phi_inv(f_t) with grad h_t = grad f_t / I(f_t) and
Hess h_t = Hess f_t / I(f_t) + Phi_inv(f_t) / I(f_t)^2 grad f_t grad f_t^T.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import rays as _rays
from .handles import FunctionHandle, as_points
from .quadrature import QuadratureRule, gauss_hermite_rule, mc_rule
from .scalar import Phi_inv, phi

CLIP = 1e-12
CHUNK = 2_000_000


class SemigroupError(ValueError):
    pass


def k_t(t):
    """e^{-t} / sqrt(1 - e^{-2t})."""
    return np.exp(-t) / np.sqrt(-np.expm1(-2.0 * np.asarray(t, dtype=float)))


def hess_factor(t):
    """e^{-2t} / (1 - e^{-2t})."""
    return np.exp(-2.0 * t) / -np.expm1(-2.0 * t)


@dataclass(frozen=True, eq=False)
class SemigroupState:
    source: FunctionHandle
    t: float
    inner: object = None  # QuadratureRule | RayRule | None (exact)
    clip: float = CLIP
    max_clip_fraction: float = 0.5

    @property
    def method(self) -> str:
        if self.inner is None:
            return "exact"
        if isinstance(self.inner, _rays.RayRule):
            return "rays"
        return "quadrature"

    @property
    def scale(self) -> float:
        return math.sqrt(-math.expm1(-2.0 * self.t))

    def describe(self) -> dict:
        d = {"t": self.t, "method": self.method, "clip": self.clip, "source": self.source.name}
        if self.inner is not None:
            d["inner"] = self.inner.describe()
        return d


def default_inner(f: FunctionHandle, points_per_axis: int | None = None, seed: int = 0):
    if f.smoothing is not None:
        return None
    if f.is_indicator and f.n == 2:
        return _rays.RayRule(angles=1024, radial_samples=256)
    if f.n <= 3:
        m = points_per_axis or {1: 60, 2: 40, 3: 16}[f.n]
        return gauss_hermite_rule(f.n, m)
    return mc_rule(f.n, 20_000, seed, antithetic=True)


def evolve(f: FunctionHandle, t: float, inner=None, clip: float = CLIP, method: str = "auto") -> SemigroupState:
    """Build a SemigroupState, picking an inner method when not given."""
    if t < 0:
        raise SemigroupError(f"t must be >= 0, got {t}")
    if inner is None and method != "exact":
        if method == "auto":
            inner = default_inner(f)
        elif method == "rays":
            inner = _rays.RayRule(angles=1024, radial_samples=256)
        elif method == "quadrature":
            if f.n <= 3:
                inner = gauss_hermite_rule(f.n, {1: 60, 2: 40, 3: 16}[f.n])
            else:
                inner = mc_rule(f.n, 20_000, 0, antithetic=True)
    if inner is None and f.smoothing is None:
        raise SemigroupError(f"{f.name} has no exact smoothing hook")
    return SemigroupState(f, float(t), inner, clip)


def _time_zero(state, pts, order):
    f = state.source
    out = [f(pts)]
    if order >= 1:
        if f.is_indicator or f.gradient is None:
            raise SemigroupError(f"derivatives of {f.name} at t = 0 are not available"
                                 + (" (indicator: they diverge as t -> 0)" if f.is_indicator else ""))
        out.append(f.grad(pts))
    if order >= 2:
        if f.hessian is None:
            raise SemigroupError(f"{f.name} has no closed-form Hessian for t = 0")
        out.append(np.asarray(f.hessian(pts), dtype=float))
    return tuple(out)


def _by_quadrature(state, pts, order):
    f, rule, t = state.source, state.inner, state.t
    n, s, e = f.n, state.scale, math.exp(-state.t)
    Y, W = rule.nodes, rule.weights
    m = pts.shape[0]
    step = max(1, CHUNK // max(rule.size, 1))
    vals = np.empty(m)
    grads = np.empty((m, n)) if order >= 1 else None
    hess = np.empty((m, n, n)) if order >= 2 else None
    for lo in range(0, m, step):
        X = pts[lo:lo + step]
        Z = e * X[:, None, :] + s * Y[None, :, :]
        F = f(Z.reshape(-1, n), check=f.bounded).reshape(X.shape[0], -1)
        FW = F * W[None, :]
        vals[lo:lo + step] = FW.sum(axis=1)
        if order >= 1:
            grads[lo:lo + step] = float(k_t(t)) * (FW @ Y)
        if order >= 2:
            mom = np.einsum("mk,ki,kj->mij", FW, Y, Y)
            hess[lo:lo + step] = float(hess_factor(t)) * (mom - vals[lo:lo + step, None, None] * np.eye(n))
    return tuple(o for o in (vals, grads, hess) if o is not None)


def _by_rays(state, pts, order):
    f, rule, t = state.source, state.inner, state.t
    if f.n != 2:
        raise SemigroupError("ray casting is implemented for n = 2 only")
    s, e = state.scale, math.exp(-t)
    m = pts.shape[0]
    vals = np.empty(m)
    grads = np.empty((m, 2))
    hess = np.empty((m, 2, 2))
    for i, x in enumerate(pts):
        def member(y, x=x):
            return f.evaluator(e * x[None, :] + s * y) > 0.5
        c = _rays.clean_centres(member, rule)[0]
        mom = _rays.cast(member, rule, c).moments(max(order, 0))
        vals[i] = mom[0]
        if order >= 1:
            grads[i] = float(k_t(t)) * mom[1]
        if order >= 2:
            hess[i] = float(hess_factor(t)) * (mom[2] - mom[0] * np.eye(2))
    return tuple(o for o, k in ((vals, 0), (grads, 1), (hess, 2)) if k <= order)


def pt_all(state: SemigroupState, x, order: int = 2):
    """(f_t, grad f_t, Hess f_t) at the points x, truncated to ``order`` + 1 entries."""
    f = state.source
    pts = as_points(x, f.n)
    if state.t == 0.0:
        return _time_zero(state, pts, order)
    if state.method == "exact":
        out = f.smoothing(state.t, pts, order)
    elif state.method == "rays":
        out = _by_rays(state, pts, order)
    else:
        out = _by_quadrature(state, pts, order)
    out = tuple(np.asarray(o, dtype=float) for o in out[:order + 1])
    if f.bounded:
        out = (np.clip(out[0], 0.0, 1.0),) + out[1:]
    return out


def pt_eval(state: SemigroupState, x) -> np.ndarray:
    return pt_all(state, x, 0)[0]


def pt_gradient(state: SemigroupState, x) -> np.ndarray:
    return pt_all(state, x, 1)[1]


def pt_hessian(state: SemigroupState, x) -> np.ndarray:
    return pt_all(state, x, 2)[2]


@dataclass(frozen=True, eq=False)
class HChain:
    f: np.ndarray
    h: np.ndarray
    grad: np.ndarray | None
    hess: np.ndarray | None
    iso: np.ndarray  # I(f_t) = phi(h_t)
    clipped_fraction: float
    f_grad: np.ndarray | None = None
    f_hess: np.ndarray | None = None


def h_chain_from(fv, fg, fh, clip: float = CLIP, max_clip_fraction: float = 0.5, name: str = "f") -> HChain:
    """Compose Phi_inv with f_t given its value, gradient and Hessian arrays."""
    clipped = (fv < clip) | (fv > 1.0 - clip)
    frac = float(clipped.mean()) if fv.size else 0.0
    if frac > max_clip_fraction:
        warnings.warn(f"{name}: Phi_inv clipping engaged on {frac:.1%} of points", RuntimeWarning,
                      stacklevel=3)
    fc = np.clip(fv, clip, 1.0 - clip)
    h = np.asarray(Phi_inv(fc))
    iso = np.asarray(phi(h))
    grad = hess = None
    if fg is not None:
        grad = fg / iso[:, None]
    if fh is not None:
        hess = fh / iso[:, None, None] + (h / iso ** 2)[:, None, None] * np.einsum("mi,mj->mij", fg, fg)
    return HChain(fv, h, grad, hess, iso, frac, fg, fh)


def h_chain(state: SemigroupState, x, order: int = 2) -> HChain:
    out = pt_all(state, x, order)
    fg = out[1] if order >= 1 else None
    fh = out[2] if order >= 2 else None
    return h_chain_from(out[0], fg, fh, state.clip, state.max_clip_fraction, state.source.name)


def h_eval(state, x) -> np.ndarray:
    return h_chain(state, x, 0).h


def h_gradient(state, x) -> np.ndarray:
    return h_chain(state, x, 1).grad


def h_hessian(state, x) -> np.ndarray:
    return h_chain(state, x, 2).hess


def t_grid(t_min: float = 1e-3, t_max: float = 8.0, ratio: float = math.sqrt(2.0)) -> np.ndarray:
    """Geometric time grid t_min * ratio^k up to t_max."""
    k = int(math.floor(math.log(t_max / t_min) / math.log(ratio) + 1e-9))
    return t_min * ratio ** np.arange(k + 1)


def central_difference(fn, x, step: float = 1e-3, tol: float = 1e-4, richardson: bool = True):
    """Central differences of ``fn`` (points -> (m, ...) array) along every axis.

    Returns an array with a trailing axis of length n.  When the step-h and
    step-h/2 estimates disagree by more than ``tol`` (relative), the
    Richardson combination (4 D(h/2) - D(h)) / 3 is returned instead.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]

    def D(h):
        cols = []
        for i in range(n):
            e = np.zeros(n); e[i] = h
            cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
        return np.stack(cols, axis=-1)

    d1 = D(step)
    if not richardson:
        return d1
    d2 = D(step / 2)
    scale = np.maximum(np.abs(d2), 1e-8)
    if np.max(np.abs(d1 - d2) / scale) > tol:
        return (4 * d2 - d1) / 3
    return d1
