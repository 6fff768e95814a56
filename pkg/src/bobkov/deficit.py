"""Bobkov functional, deficit, Carlen-Kerce integrand and Gaussian boundary measure.

    B(f)      = E sqrt(I(f)^2 + |grad f|^2)
    delta(f)  = B(f) - I(E f)                       (>= 0, zero on Phi(a.x + b))
    ck(t)     = E phi(h_t) |Hess h_t|_F^2 / (1 + |grad h_t|^2)^{3/2},  delta >= int ck(t) dt

For sets, delta(A) = gamma^+(A) - I(gamma(A)) with gamma^+ estimated either
from Minkowski shells (gamma(A_r) - gamma(A)) / r or from B(P_t 1_A), both
extrapolated to zero.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rays as _rays
from .handles import FunctionHandle, SetHandle
from .hermite import project
from .quadrature import QuadratureRule, gauss_hermite_rule, grid_rule, mc_rule
from .scalar import iso_I
from .semigroup import CLIP, SemigroupError, SemigroupState, evolve, h_chain, t_grid

SCHEMA_VERSION = 1
SPECTRAL_DEGREE = 12
R_LIST = (0.1, 0.05, 0.025)
T_LIST = (0.01, 0.005, 0.0025)


class NoGradientError(ValueError):
    """No gradient path: pre-smooth f with the semigroup (f -> P_t f) first."""


def default_rule(n: int) -> QuadratureRule:
    if n <= 3:
        return gauss_hermite_rule(n, 40)
    return mc_rule(n, 200_000, 0, antithetic=True)


def _gradient_on(f: FunctionHandle, rule: QuadratureRule):
    """Gradient values on the rule's nodes and a label for the path used."""
    if f.gradient is not None:
        return f.grad(rule.nodes), "closed-form"
    if f.is_indicator or not f.is_smooth:
        raise NoGradientError(
            f"{f.name} has no gradient; smooth it first, e.g. with bobkov.semigroup.evolve(f, t)")
    if rule.kind != "gauss-hermite" or rule.exactness_degree < 2 * SPECTRAL_DEGREE:
        raise NoGradientError(
            f"{f.name} has no closed-form gradient and the rule cannot project it spectrally; "
            "pass a Gauss-Hermite rule or smooth f with the semigroup first")
    return project(f, SPECTRAL_DEGREE, rule).gradient(rule.nodes), "spectral"


def _functional_terms(f: FunctionHandle, rule: QuadratureRule):
    vals = f(rule.nodes)
    grads, path = _gradient_on(f, rule)
    integrand = np.sqrt(iso_I(vals) ** 2 + np.sum(grads * grads, axis=1))
    return vals, integrand, path


def _moments_on(rule, vals, integrand):
    mean = float(rule.weights @ vals)
    func = float(rule.weights @ integrand)
    se = 0.0
    if rule.kind == "monte-carlo":
        d = integrand - iso_I(np.clip(mean, 0.0, 1.0))
        se = float(np.std(d, ddof=1) / math.sqrt(rule.size))
    return mean, func, se


def bobkov_functional(f: FunctionHandle, rule: QuadratureRule | None = None) -> tuple[float, float]:
    """(E sqrt(I(f)^2 + |grad f|^2), error estimate)."""
    rule = rule or default_rule(f.n)
    vals, integrand, _ = _functional_terms(f, rule)
    _, value, se = _moments_on(rule, vals, integrand)
    comp = rule.companion()
    if comp is not None:
        _, integ_c, _ = _functional_terms(f, comp)
        se = max(se, abs(value - float(comp.weights @ integ_c)))
    return value, se


@dataclass(frozen=True)
class DeficitReport:
    name: str
    mean: float
    functional: float
    iso_of_mean: float
    delta: float
    error: float
    error_budget: dict
    complemented: bool
    gradient_path: str
    rule: dict
    ck_lower_bound: float | None = None
    ck_error: float | None = None
    ck_samples: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    clipped_fraction: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _delta_on(f, rule):
    vals, integrand, path = _functional_terms(f, rule)
    mean, func, se = _moments_on(rule, vals, integrand)
    iso = float(iso_I(min(max(mean, 0.0), 1.0)))
    return mean, func, iso, func - iso, se, path


def deficit(f: FunctionHandle, rule: QuadratureRule | None = None, ck_grid=None) -> DeficitReport:
    """delta(f) with a decomposed error budget.

    When E f > 1/2, f is replaced by 1 - f (delta is symmetric under this
    swap).  ``ck_grid`` optionally adds the Carlen-Kerce lower bound over
    that t-grid.
    """
    rule = rule or default_rule(f.n)
    mean0 = float(rule.weights @ f(rule.nodes))
    swapped = mean0 > 0.5
    g = f.complement() if swapped else f
    mean, func, iso, delta, se, path = _delta_on(g, rule)
    budget = {"outer": se, "companion": 0.0}
    comp = rule.companion()
    if comp is not None:
        budget["companion"] = abs(delta - _delta_on(g, comp)[3])
    error = max(budget.values())
    ck = ck_err = None
    samples = []
    clipped = 0.0
    if ck_grid is not None:
        ck, ck_err, samples, clipped = ck_lower_bound(g, ck_grid, rule, return_details=True)
    seeds = [rule.seed] if rule.seed is not None else []
    return DeficitReport(f.name, mean, func, iso, delta, error, budget, swapped, path, rule.describe(),
                         ck, ck_err, samples, seeds, clipped)


def _ck_on(state: SemigroupState, rule: QuadratureRule):
    hc = h_chain(state, rule.nodes, 2)
    num = hc.iso * np.einsum("mij,mij->m", hc.hess, hc.hess)
    den = (1.0 + np.sum(hc.grad * hc.grad, axis=1)) ** 1.5
    clipped = (hc.f < state.clip) | (hc.f > 1.0 - state.clip)
    # discarding clipped nodes only removes non-negative mass
    integrand = np.where(clipped, 0.0, num / den)
    return float(rule.weights @ integrand), float(rule.weights @ clipped), integrand


def ck_integrand(state: SemigroupState, rule: QuadratureRule | None = None) -> tuple[float, float]:
    """(E phi(h_t) |H(h_t)|_F^2 / (1 + |grad h_t|^2)^{3/2}, error estimate) at the state's t."""
    if state.t <= 0:
        raise SemigroupError("the Carlen-Kerce integrand needs t > 0")
    rule = rule or default_rule(state.source.n)
    value, _, integrand = _ck_on(state, rule)
    err = 0.0
    if rule.kind == "monte-carlo":
        err = float(np.std(integrand, ddof=1) / math.sqrt(rule.size))
    comp = rule.companion()
    if comp is not None:
        err = max(err, abs(value - _ck_on(state, comp)[0]))
    return value, err


def ck_lower_bound(f: FunctionHandle, grid=None, rule: QuadratureRule | None = None,
                   return_details: bool = False):
    """Trapezoidal-in-log-t integral of the Carlen-Kerce integrand over the grid.

    Truncating to [t_min, t_max] only discards non-negative mass, so the
    result estimates a lower bound of the full integral (and hence of delta).
    """
    ts = np.asarray(t_grid() if grid is None else grid, dtype=float)
    if ts.size < 2 or np.any(np.diff(ts) <= 0) or ts[0] <= 0:
        raise ValueError("t-grid must be increasing, positive and have at least two points")
    rule = rule or default_rule(f.n)
    vals, errs, clip = [], [], []
    for t in ts:
        st = evolve(f, float(t))
        v, e = ck_integrand(st, rule)
        vals.append(v); errs.append(e)
        clip.append(_ck_on(st, rule)[1] if return_details else 0.0)
    vals, errs = np.array(vals), np.array(errs)
    logt = np.log(ts)
    wts = np.zeros_like(ts)
    dl = np.diff(logt)
    wts[:-1] += 0.5 * dl
    wts[1:] += 0.5 * dl
    wts *= ts  # dt = t d(log t)
    value = float(wts @ vals)
    err = float(wts @ errs)
    if return_details:
        samples = [[float(t), float(v), float(e)] for t, v, e in zip(ts, vals, errs)]
        return value, err, samples, float(max(clip))
    return value, err


# ---------------------------------------------------------------- sets


@dataclass(frozen=True)
class BoundaryEstimate:
    value: float
    error: float
    method: str
    grid: list
    raw: list
    extrapolated: list

    def to_dict(self) -> dict:
        return asdict(self)


def _richardson(hs, vals, order: int = 1):
    """Neville table for vals(h) = v0 + c1 h + c2 h^2 + ...; returns (estimate, error)."""
    hs = np.asarray(hs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if hs.size == 1:
        return float(vals[0]), math.inf, [float(vals[0])]
    order = min(order, hs.size - 1)
    table = [vals.copy()]
    for k in range(1, order + 1):
        prev = table[-1]
        nxt = (hs[:-k] * prev[1:] - hs[k:] * prev[:-1]) / (hs[:-k] - hs[k:])
        table.append(nxt)
    last = table[-1]
    est = float(last[-1])
    if last.size >= 2:
        err = float(abs(last[-1] - last[-2]))
    else:
        err = float(abs(last[-1] - table[-2][-1]))
    return est, err, [float(v) for v in last]


def set_measure(A: SetHandle, ray_rule: _rays.RayRule | None = None) -> float:
    if A.measure is not None:
        return float(A.measure)
    if A.n != 2:
        rule = mc_rule(A.n, 400_000, 0)
        return float(rule.weights @ A.contains(rule.nodes))
    return _rays.set_measure(A.membership, ray_rule)


def _shell_gains(A, r_list, ray_rule):
    """gamma(A_r) - gamma(A) for each r, plus a noise level for the quotients."""
    if A.n == 2:
        ray_rule = ray_rule or _rays.RayRule()
        shells = [A.neighbourhood(r) for r in r_list]
        extra = tuple(s.membership for s in shells)
        c = _rays.clean_centres(A.membership, ray_rule, extra=extra)[0]
        base = _rays.cast(A.membership, ray_rule, c).measure()
        return [_rays.cast(s.membership, ray_rule, c).measure() - base for s in shells], 0.0
    rule = mc_rule(A.n, 1_000_000, 0, antithetic=True)
    inside = A.contains(rule.nodes)
    vals = []
    se = 0.0
    for r in r_list:
        ring = A.neighbourhood(r).contains(rule.nodes) & ~inside
        vals.append(float(rule.weights @ ring))
        se = max(se, math.sqrt(vals[-1] / rule.size) / r)
    return vals, se


def boundary_measure_minkowski(A: SetHandle, r_list=R_LIST, ray_rule: _rays.RayRule | None = None,
                               order: int = 1) -> BoundaryEstimate:
    """gamma^+(A) from (gamma(A_r) - gamma(A)) / r, Richardson-extrapolated to r = 0.

    ``order`` = 1 removes the linear bias using the two smallest radii;
    higher orders use more of the table.  The error is the spread between
    the last two extrapolants.
    """
    r = np.asarray(r_list, dtype=float)
    if r.size < 2 or np.any(np.diff(r) >= 0):
        raise ValueError("r_list must be strictly decreasing with at least two radii")
    gains, noise = _shell_gains(A, r, ray_rule)
    D = np.asarray(gains) / r
    diffs = np.diff(D)
    jump = np.max(np.abs(diffs)) if diffs.size else 0.0
    if diffs.size >= 2 and np.any(np.sign(diffs) != np.sign(diffs[0])) \
            and jump > 1e-2 * abs(float(np.mean(D))) + 10 * noise:
        warnings.warn(f"{A.name}: shell quotients are not monotone in r; the set may be unstable "
                      "for Minkowski estimation", RuntimeWarning, stacklevel=2)
    est, err, ext = _richardson(r, D, order)
    return BoundaryEstimate(est, max(err, noise), "minkowski", r.tolist(), D.tolist(), ext)


def _set_functional(A: SetHandle, t: float, rule: QuadratureRule | None):
    e_s = math.sqrt(-math.expm1(-2.0 * t))
    if rule is None:
        if A.n > 2:
            raise ValueError("pass an outer rule for n > 2")
        rule = grid_rule(A.n, min(0.05, e_s / 5.0))
    v, g = A.smoothing(t, rule.nodes, 1)
    v = np.clip(v, 0.0, 1.0)
    return float(rule.weights @ np.sqrt(iso_I(v) ** 2 + np.sum(g * g, axis=1)))


def boundary_measure_semigroup(A: SetHandle, t_list=T_LIST, rule: QuadratureRule | None = None,
                               order: int = 2) -> BoundaryEstimate:
    """gamma^+(A) as the t -> 0 limit of E sqrt(I(P_t 1_A)^2 + |grad P_t 1_A|^2).

    Uses the set's exact smoothing hook; the default outer rule is a
    trapezoidal grid with spacing at most s_t / 5.  The bias behaves like
    sqrt(t) near corners and like t along smooth curved boundaries, so the
    default extrapolation is quadratic in sqrt(t).
    """
    ts = np.asarray(t_list, dtype=float)
    if ts.size < 2 or np.any(np.diff(ts) >= 0):
        raise ValueError("t_list must be strictly decreasing with at least two times")
    if ts[-1] < 1e-3:
        raise ValueError("t_list values must be >= 1e-3")
    if A.smoothing is None:
        raise SemigroupError(f"{A.name} has no exact smoothing hook; use the Minkowski estimator")
    F = np.array([_set_functional(A, float(t), rule) for t in ts])
    est, err, ext = _richardson(np.sqrt(ts), F, order)
    return BoundaryEstimate(est, err, "semigroup", ts.tolist(), F.tolist(), ext)


@dataclass(frozen=True)
class SetDeficit:
    name: str
    measure: float
    perimeter: float
    iso_of_measure: float
    delta: float
    error: float
    method: str
    estimate: dict
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def set_deficit(A: SetHandle, method: str = "minkowski", ray_rule: _rays.RayRule | None = None,
                r_list=R_LIST, t_list=T_LIST, order: int = 1) -> SetDeficit:
    """gamma^+(A) - I(gamma(A)), non-negative up to the reported error."""
    m = set_measure(A, ray_rule)
    if method == "minkowski":
        est = boundary_measure_minkowski(A, r_list, ray_rule, order)
    elif method == "semigroup":
        est = boundary_measure_semigroup(A, t_list)
    else:
        raise ValueError(f"unknown method {method!r}")
    iso = float(iso_I(min(max(m, 0.0), 1.0)))
    return SetDeficit(A.name, m, est.value, iso, est.value - iso, est.error, method, est.to_dict())


__all__ = ["CLIP", "DeficitReport", "BoundaryEstimate", "SetDeficit", "NoGradientError",
           "bobkov_functional", "deficit", "ck_integrand", "ck_lower_bound",
           "boundary_measure_minkowski", "boundary_measure_semigroup", "set_measure", "set_deficit"]
