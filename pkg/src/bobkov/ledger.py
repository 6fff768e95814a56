"""Registry of numerical checks for the inequalities used in the stability argument.

Assert-mode checks have explicit constants and must hold up to tolerance
``max(1e-8, 5 * propagated error)``.  Report-mode checks have unnamed
constants; they always pass and record the empirical constant.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import linregress

from . import rays as _rays
from . import zoo as Z
from .deficit import boundary_measure_minkowski, boundary_measure_semigroup, deficit, set_measure
from .fitting import rounding_gap
from .handles import FunctionHandle, SetHandle
from .hermite import SpectralFunction, project, semigroup_spectral, tail_weight
from .quadrature import QuadratureRule, gauss_hermite_rule, grid_rule
from .scalar import iso_I
from .semigroup import CLIP, evolve, h_chain_from, hess_factor, k_t, pt_all

ASSERT, REPORT = "assert", "report"

ANCHORS = {
    "bobkov": ("Bobkov's functional inequality I(E f) <= E sqrt(I(f)^2 + |grad f|^2)", ASSERT),
    "isoperimetric": ("Gaussian isoperimetric inequality I(gamma(A)) <= gamma^+(A)", ASSERT),
    "poincare_hessian": ("second-order Poincare inequality: affine residual <= E |Hess f|_F^2", ASSERT),
    "grad_bound": ("reverse log-Sobolev gradient bound |grad f_t| <= sqrt2 k_t f_t sqrt(log 1/f_t)", ASSERT),
    "grad_bound_iso": ("gradient bound |grad f_t| <= c k_t I(f_t)", REPORT),
    "grad_bound_h": ("gradient bound |grad h_t| <= c k_t", REPORT),
    "reverse_holder": ("reverse Hoelder inequality with p = 1/2", ASSERT),
    "reverse_hyper": ("Borell's reverse hypercontractive inequality", ASSERT),
    "median_mean": ("median-mean comparison E f_t <= 2 M^{(1/(1+k_t))^2}", ASSERT),
    "f_fs_identity": ("spectral identity E(f - f_s)^2 = sum b^2 (1 - e^{-s|alpha|})^2", ASSERT),
    "f_fs": ("closeness of f and f_s: E(f - f_s)^2 <= c s^{2/5} K^{4/5} E f^2", REPORT),
    "post_reverse": ("lower bound E phi(h_t)|H(h_t)|_F^2 >= c I(E f)^2 (E|H(h_t)|_F)^2", REPORT),
    "chaos_moments": ("moment growth of order-2 Gaussian chaos (E|Y'AY|^p)^{1/p} <= c p |A|_F", REPORT),
    "hess_moment": ("L^p bound on |H(h_t)|_F", REPORT),
    "hess_bound": ("pointwise bound |H(h_t)|_F <= c e^{-2t}/(1-e^{-2t}) sqrt(log 1/(f_t(1-f_t)))", REPORT),
    "ledoux": ("Ledoux's inequality E f(f - P_t f) <= c sqrt(t) E|grad f|", REPORT),
    "high_weights": ("high-degree Hermite weight sum_{|alpha|>=N} b^2 <= c N^{-1/2} E|grad f|", REPORT),
    "pull_back": ("pull-back bound E f^2 <= c max(1, K) sqrt(t / log(1/eps))", REPORT),
    "s_small": ("E(f_s - 1_B)^2 >= c min((E f_s)^2, sqrt s) E f_s", REPORT),
    "rounding": ("rounding Phi(a.x + b) to its half-space: gamma(A sym-diff B) <= 4 E(1_A - g)^2", ASSERT),
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    input: str
    lhs: float
    rhs: float
    margin: float
    mode: str
    constant: float | None
    tolerance: float
    seed: int
    passed: bool
    anchor: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def tolerance(err: float) -> float:
    return max(1e-8, 5.0 * float(err))


def _result(name, inp, lhs, rhs, err=0.0, seed=0, constant=None, details=None, tol=None) -> CheckResult:
    anchor, mode = ANCHORS[name]
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    tol = tolerance(err) if tol is None else tol
    if mode == ASSERT:
        passed = bool(margin >= -tol)
    else:
        passed = True
    c = None if constant is None else float(constant)
    return CheckResult(name, inp, lhs, rhs, margin, mode, c, tol, seed, passed, anchor, details or {})


def expect(rule: QuadratureRule, fn) -> tuple[float, float]:
    """(E fn, error) using the rule and, when available, its coarser companion."""
    v = np.asarray(fn(rule.nodes), dtype=float)
    val = float(rule.weights @ v)
    if rule.kind == "monte-carlo":
        return val, float(np.std(v, ddof=1) / math.sqrt(rule.size))
    comp = rule.companion()
    if comp is None:
        return val, 0.0
    return val, abs(val - float(comp.weights @ np.asarray(fn(comp.nodes), dtype=float)))


def _smooth(f: FunctionHandle, t: float, x, order: int):
    return pt_all(evolve(f, t), x, order)


def _weighted_median(values, weights) -> float:
    order = np.argsort(values)
    cw = np.cumsum(weights[order])
    return float(values[order][np.searchsorted(cw, 0.5 * cw[-1])])


# ---------------------------------------------------------------- asserts


def check_bobkov(f: FunctionHandle, rule: QuadratureRule, seed: int = 0) -> CheckResult:
    rep = deficit(f, rule)
    return _result("bobkov", f.name, rep.iso_of_mean, rep.functional, rep.error, seed,
                   details={"delta": rep.delta, "complemented": rep.complemented})


def check_isoperimetric(A: SetHandle, method: str = "minkowski", seed: int = 0) -> CheckResult:
    m = set_measure(A)
    est = boundary_measure_minkowski(A) if method == "minkowski" else boundary_measure_semigroup(A)
    iso = float(iso_I(min(max(m, 0.0), 1.0)))
    return _result("isoperimetric", f"{A.name} [{method}]", iso, est.value, est.error, seed,
                   details={"measure": m, "perimeter": est.value, "method": method})


def check_poincare_hessian(f, degree: int = 8, rule: QuadratureRule | None = None,
                           name: str | None = None) -> CheckResult:
    """Both sides spectrally: affine residual = sum_{|alpha|>=2} b^2; RHS = E |Hess|_F^2."""
    if not isinstance(f, SpectralFunction):
        rule = rule or gauss_hermite_rule(f.n, max(degree + 1, 20))
        label = name or f.name
        f = project(f, degree, rule)
    else:
        label = name or "spectral"
    lhs, rhs = f.affine_residual(), f.hessian_frobenius_sq()
    return _result("poincare_hessian", label, lhs, rhs, tol=1e-8 * max(1.0, rhs))


def _random_xt(n, samples, seed, t_range=(0.01, 4.0), spread=1.5):
    rng = np.random.Generator(np.random.Philox(seed))
    x = spread * rng.standard_normal((samples, n))
    t = np.exp(rng.uniform(math.log(t_range[0]), math.log(t_range[1]), samples))
    return x, t


def check_grad_bound(f: FunctionHandle, samples: int = 1000, seed: int = 0) -> list[CheckResult]:
    """Pointwise sweep over random (x, t).  f_t is replaced by 1 - f_t where f_t > 1/2."""
    x, ts = _random_xt(f.n, samples, seed)
    worst, ratio_iso = math.inf, 0.0
    lhs_w = rhs_w = 0.0
    for t in np.unique(np.round(ts, 12)):
        sel = np.isclose(ts, t)
        v, g = _smooth(f, float(t), x[sel], 1)
        gn = np.linalg.norm(g, axis=1)
        q = np.where(v <= 0.5, v, 1.0 - v)
        qs = np.clip(q, 1e-300, 0.5)
        rhs = np.where(q > 0, math.sqrt(2.0) * float(k_t(t)) * qs * np.sqrt(np.log(1.0 / qs)), 0.0)
        m = rhs - gn
        i = int(np.argmin(m))
        if m[i] < worst:
            worst, lhs_w, rhs_w = float(m[i]), float(gn[i]), float(rhs[i])
        ok = (v > CLIP) & (v < 1.0 - CLIP)
        if ok.any():
            ratio_iso = max(ratio_iso, float(np.max(gn[ok] / (float(k_t(t)) * iso_I(v[ok])))))
    details = {"samples": samples, "worst_margin": worst}
    return [
        _result("grad_bound", f.name, lhs_w, rhs_w, 0.0, seed, details=details),
        _result("grad_bound_iso", f.name, ratio_iso, ratio_iso, seed=seed, constant=ratio_iso),
        # grad h_t = grad f_t / I(f_t), so the same ratio bounds |grad h_t| / k_t
        _result("grad_bound_h", f.name, ratio_iso, ratio_iso, seed=seed, constant=ratio_iso),
    ]


def check_reverse_holder(f: FunctionHandle, g: FunctionHandle, rule: QuadratureRule, seed: int = 0) -> CheckResult:
    """E fg >= (E sqrt f)^2 / E(1/g) for f >= 0 and g bounded away from 0."""
    fv, gv = f(rule.nodes, check=False), g(rule.nodes, check=False)
    if np.any(fv < 0) or np.any(gv <= 0):
        raise ValueError("reverse Hoelder needs f >= 0 and g > 0 on the rule's nodes")
    efg, e1 = expect(rule, lambda x: f(x, check=False) * g(x, check=False))
    esq, e2 = expect(rule, lambda x: np.sqrt(f(x, check=False)))
    einv, e3 = expect(rule, lambda x: 1.0 / g(x, check=False))
    lhs = esq ** 2 / einv
    err = e1 + 2 * esq * e2 / einv + lhs * e3 / einv
    return _result("reverse_holder", f"{f.name} | {g.name}", lhs, efg, err, seed)


def check_reverse_hyper(f: FunctionHandle, t: float, p: float, rule: QuadratureRule, seed: int = 0) -> CheckResult:
    """(E (P_t f)^p)^{1/p} >= (E f^q)^{1/q}, q = 1 + e^{-2t}(p - 1)."""
    q = 1.0 + math.exp(-2.0 * t) * (p - 1.0)
    ev_q, e1 = expect(rule, lambda x: f(x, check=False) ** q)
    ev_p, e2 = expect(rule, lambda x: _smooth(f, t, x, 0)[0] ** p)
    lhs = ev_q ** (1.0 / q)
    rhs = ev_p ** (1.0 / p)
    err = abs(lhs / (q * ev_q)) * e1 + abs(rhs / (p * ev_p)) * e2
    return _result("reverse_hyper", f"{f.name} t={t:g} p={p:g}", lhs, rhs, err, seed,
                   details={"q": q, "t": t, "p": p})


def check_median_mean(f: FunctionHandle, rule: QuadratureRule, t_list=(0.05, 0.2, 1.0, 4.0),
                      seed: int = 0) -> CheckResult:
    """E f_t <= 2 M^{(1/(1+k_t))^2}, with f replaced by 1 - f when E f > 1/2."""
    mean = float(rule.weights @ _smooth(f, 1.0, rule.nodes, 0)[0])
    g = f.complement() if mean > 0.5 else f
    worst = None
    rows = []
    for t in t_list:
        vals = np.clip(_smooth(g, t, rule.nodes, 0)[0], 0.0, 1.0)
        lhs, err = expect(rule, lambda x, t=t: _smooth(g, t, x, 0)[0])
        M = _weighted_median(vals, rule.weights)
        rhs = 2.0 * M ** ((1.0 / (1.0 + float(k_t(t)))) ** 2)
        rows.append([t, lhs, M, rhs])
        if worst is None or rhs - lhs < worst[1] - worst[0]:
            worst = (lhs, rhs, err, t)
    return _result("median_mean", f"{f.name}", worst[0], worst[1], worst[2], seed,
                   details={"worst_t": worst[3], "rows": rows})


def _inner_semigroup(fs: SpectralFunction, s: float, x: np.ndarray) -> np.ndarray:
    """P_s fs(x) by Gauss-Hermite in y (exact for polynomials of degree <= max_degree)."""
    inner = gauss_hermite_rule(fs.n, fs.max_degree // 2 + 2)
    e, sc = math.exp(-s), math.sqrt(-math.expm1(-2.0 * s))
    out = np.empty(x.shape[0])
    for lo in range(0, x.shape[0], 2000):
        X = x[lo:lo + 2000]
        Zp = e * X[:, None, :] + sc * inner.nodes[None, :, :]
        out[lo:lo + 2000] = fs(Zp.reshape(-1, fs.n)).reshape(X.shape[0], -1) @ inner.weights
    return out


def check_f_fs(f: FunctionHandle, s_list=(0.01, 0.05, 0.2, 1.0), degree: int = 8,
               rule: QuadratureRule | None = None, seed: int = 0, spectral: SpectralFunction | None = None
               ) -> list[CheckResult]:
    """Spectral identity (assert, pointwise quadrature vs coefficients) and the s^{2/5} bound (report)."""
    proj_rule = gauss_hermite_rule(f.n, max(degree + 1, 20))
    fs = spectral if spectral is not None else project(f, degree, proj_rule)
    outer = gauss_hermite_rule(f.n, fs.max_degree + 1)
    out = []
    worst = 0.0
    for s in s_list:
        pointwise = float(outer.weights @ (fs(outer.nodes) - _inner_semigroup(fs, s, outer.nodes)) ** 2)
        coeff = float(sum(b * b * (1.0 - math.exp(-s * a.order)) ** 2 for a, b in fs.items()))
        worst = max(worst, abs(pointwise - coeff))
    out.append(_result("f_fs_identity", f.name, worst, 0.0, tol=1e-12,
                       details={"max_abs_difference": worst, "degree": fs.max_degree}))
    rule = rule or Z.outer_rule(f.n)
    K, _ = expect(rule, lambda x: np.linalg.norm(f.grad(x), axis=1))
    Ef2, _ = expect(rule, lambda x: f(x, check=False) ** 2)
    c = 0.0
    for s in s_list:
        d, _ = expect(rule, lambda x, s=s: (f(x, check=False) - _smooth(f, s, x, 0)[0]) ** 2)
        if K > 0 and Ef2 > 0:
            c = max(c, d / (s ** 0.4 * K ** 0.8 * Ef2))
    out.append(_result("f_fs", f.name, c, c, seed=seed, constant=c, details={"K": K, "E_f2": Ef2}))
    return out


def check_rounding(A: SetHandle, a, b: float, seed: int = 0) -> CheckResult:
    r = rounding_gap(A, a, b)
    ratio = r["symmetric_difference"] / r["l2_distance_sq"] if r["l2_distance_sq"] > 0 else 0.0
    return _result("rounding", f"{A.name} | Phi({list(np.round(a, 4))}.x{b:+g})", r["symmetric_difference"],
                   4.0 * r["l2_distance_sq"], 1e-9, seed, constant=ratio, details=r)


# ---------------------------------------------------------------- reports


def _h_terms(f: FunctionHandle, t: float, x):
    v, g, H = _smooth(f, t, x, 2)
    hc = h_chain_from(np.clip(v, 0.0, 1.0), g, H, max_clip_fraction=1.0)
    ok = (v > CLIP) & (v < 1.0 - CLIP)
    hf = np.sqrt(np.einsum("mij,mij->m", hc.hess, hc.hess))
    return v, hc, np.where(ok, hf, 0.0), ok


def check_post_reverse(f: FunctionHandle, rule: QuadratureRule, t_list=(1.0, 2.0, 4.0), seed: int = 0) -> CheckResult:
    mean = float(rule.weights @ f(rule.nodes, check=False))
    c = math.inf
    rows = []
    for t in t_list:
        v, hc, hf, ok = _h_terms(f, t, rule.nodes)
        lhs = float(rule.weights @ (hc.iso * hf ** 2))
        rhs = float(iso_I(mean)) ** 2 * float(rule.weights @ hf) ** 2
        rows.append([t, lhs, rhs])
        if rhs > 0:
            c = min(c, lhs / rhs)
    c = c if math.isfinite(c) else 0.0
    return _result("post_reverse", f.name, c, c, seed=seed, constant=c, details={"rows": rows})


def check_chaos_moments(seed: int = 0, dim: int = 4, p_list=(1, 2, 3, 4), samples: int = 200_000,
                        matrices: int = 3) -> list[CheckResult]:
    rng = np.random.Generator(np.random.Philox(seed))
    out = []
    for k in range(matrices):
        A = rng.standard_normal((dim, dim))
        Y = rng.standard_normal((samples, dim))
        Zs = rng.standard_normal((samples, dim))
        quad = np.einsum("mi,ij,mj->m", Y, A, Y)
        bil = np.einsum("mi,ij,mj->m", Y, A, Zs)
        fro = float(np.linalg.norm(A))
        c = max(max(np.mean(np.abs(quad) ** p) ** (1 / p), np.mean(np.abs(bil) ** p) ** (1 / p)) / (p * fro)
                for p in p_list)
        out.append(_result("chaos_moments", f"random {dim}x{dim} matrix #{k}", c, c, seed=seed, constant=c))
    return out


def check_hess_moment(f: FunctionHandle, rule: QuadratureRule, t_list=(0.1, 0.5, 1.0, 2.0),
                      p_list=(1, 2, 4), seed: int = 0) -> list[CheckResult]:
    mean = float(rule.weights @ f(rule.nodes, check=False))
    g = f.complement() if mean > 0.5 else f
    m = min(mean, 1.0 - mean)
    c_mom = c_pt = 0.0
    for t in t_list:
        v, hc, hf, ok = _h_terms(g, t, rule.nodes)
        kt = float(k_t(t))
        for p in p_list:
            mom = float(rule.weights @ hf ** p) ** (1.0 / p)
            bound = kt ** 2 * ((1 + kt) * math.sqrt(math.log(1.0 / m)) + math.sqrt(p) * kt)
            c_mom = max(c_mom, mom / bound)
        vv = np.clip(v[ok], CLIP, 1 - CLIP)
        if ok.any():
            shape = float(hess_factor(t)) * np.sqrt(np.log(1.0 / (vv * (1 - vv))))
            c_pt = max(c_pt, float(np.max(hf[ok] / shape)))
    return [_result("hess_moment", f.name, c_mom, c_mom, seed=seed, constant=c_mom),
            _result("hess_bound", f.name, c_pt, c_pt, seed=seed, constant=c_pt)]


def _projection(f: FunctionHandle, n: int) -> SpectralFunction:
    deg = 20 if n <= 2 else 12
    return project(f, deg, gauss_hermite_rule(n, 40))


def check_ledoux(f: FunctionHandle, rule: QuadratureRule, t_list=(0.01, 0.03, 0.1, 0.3, 1.0),
                 seed: int = 0, spectral: SpectralFunction | None = None) -> CheckResult:
    fs = spectral or _projection(f, f.n)
    K, _ = expect(rule, lambda x: np.linalg.norm(f.grad(x), axis=1))
    c = 0.0
    for t in t_list:
        lhs = sum((1 - math.exp(-a.order * t)) * b * b for a, b in fs.items())
        if K > 0:
            c = max(c, lhs / (math.sqrt(t) * K))
    return _result("ledoux", f.name, c, c, seed=seed, constant=c, details={"K": K})


def high_weight_profile(fs: SpectralFunction):
    """(N, tail weight) for N = 1..max_degree and the log-log regression slope."""
    Ns = np.arange(1, fs.max_degree + 1)
    tails = np.array([tail_weight(fs, int(N)) for N in Ns])
    keep = tails > 1e-14
    slope = float(linregress(np.log(Ns[keep]), np.log(tails[keep])).slope) if keep.sum() >= 3 else -math.inf
    return Ns, tails, slope


def check_high_weights(f: FunctionHandle, rule: QuadratureRule, seed: int = 0,
                       spectral: SpectralFunction | None = None) -> CheckResult:
    fs = spectral or _projection(f, f.n)
    Ns, tails, slope = high_weight_profile(fs)
    K, _ = expect(rule, lambda x: np.linalg.norm(f.grad(x), axis=1))
    c = float(np.max(tails * np.sqrt(Ns))) / K if K > 0 else 0.0
    return _result("high_weights", f.name, c, c, seed=seed, constant=c,
                   details={"slope": slope, "tails": tails.tolist()})


def check_pull_back(f: FunctionHandle, rule: QuadratureRule, eps_list=(1e-2, 1e-3, 1e-4), seed: int = 0,
                    spectral: SpectralFunction | None = None) -> CheckResult:
    """Mean-zero g = f - E f; t solves E(P_t g)^2 = eps (taken >= 1)."""
    fs = spectral or _projection(f, f.n)
    g = SpectralFunction(fs.n, fs.max_degree, {a: b for a, b in fs.items() if a.order > 0})
    Eg2 = g.second_moment()
    if Eg2 <= 0:
        return _result("pull_back", f.name, 0.0, 0.0, seed=seed, constant=0.0)
    K, _ = expect(rule, lambda x: np.linalg.norm(f.grad(x), axis=1))
    c = 0.0
    rows = []
    for eps in eps_list:
        target = eps * Eg2
        fn = lambda t: semigroup_spectral(g, t).second_moment() - target  # noqa: E731
        t = brentq(fn, 0.0, 60.0) if fn(60.0) < 0 else 60.0
        t = max(t, 1.0)
        e_t = semigroup_spectral(g, t).second_moment()
        if not 0 < e_t < 1:
            continue
        val = Eg2 / (max(1.0, K) * math.sqrt(t / math.log(1.0 / e_t)))
        rows.append([eps, t, e_t, val])
        c = max(c, val)
    return _result("pull_back", f.name, c, c, seed=seed, constant=c, details={"rows": rows})


def check_s_small(A: SetHandle, B: SetHandle, s_list=(0.01, 0.05, 0.2, 1.0), seed: int = 0) -> CheckResult:
    """E(f_s - 1_B)^2 / (min((E f_s)^2, sqrt s) E f_s) for f = 1_A (complemented if gamma(A) > 1/2)."""
    m = set_measure(A)
    A2 = A.complement() if m > 0.5 else A
    grid = grid_rule(2, 0.05)
    c = math.inf
    rows = []
    for s in s_list:
        hook = A2.smoothing
        Ef, _ = expect(grid, lambda x: hook(s, x, 0)[0])
        Ef2, _ = expect(grid, lambda x: hook(s, x, 0)[0] ** 2)
        cross = _rays.integrate_over(B.membership, lambda x: hook(s, x, 0)[0])
        gB = B.measure if B.measure is not None else set_measure(B)
        lhs = Ef2 - 2.0 * cross + gB
        denom = min(Ef ** 2, math.sqrt(s)) * Ef
        rows.append([s, lhs, denom])
        if denom > 0:
            c = min(c, lhs / denom)
    c = c if math.isfinite(c) else 0.0
    return _result("s_small", f"{A.name} | {B.name}", c, c, seed=seed, constant=c, details={"rows": rows})


# ---------------------------------------------------------------- runner


def _sharp_rule(n: int) -> QuadratureRule:
    return grid_rule(n, 0.05) if n <= 2 else gauss_hermite_rule(n, 40)


def run_ledger(seed: int = 0, quick: bool = False, progress=None, workers: int = 1) -> list[CheckResult]:
    """Run every registered check on the zoo; results keep registration order."""
    funcs = Z.function_zoo(seed)
    zsets = Z.set_zoo()
    jobs = []

    def job(fn, *args, **kw):
        jobs.append((fn, args, kw))

    samples = 200 if quick else 1000
    bounded = [z for z in funcs if "unbounded" not in z.tags]
    for z in bounded:
        job(check_bobkov, z.handle, z.rule, seed)
        job(check_grad_bound, z.handle, samples, seed)
        job(check_median_mean, z.handle, z.rule, seed=seed)
    for z in zsets:
        job(check_isoperimetric, z.set, "minkowski", seed)
        job(check_isoperimetric, z.set, "semigroup", seed)
        ind = z.set.indicator()
        job(check_grad_bound, ind, samples, seed)
        job(check_median_mean, ind, _sharp_rule(2), seed=seed)

    # second-order Poincare: x1 x2, random polynomials, projected smooth members
    job(check_poincare_hessian, SpectralFunction(2, 2, {(1, 1): 1.0}), name="x1*x2")
    for k in range(20 if quick else 100):
        job(check_poincare_hessian, Z.random_polynomial(seed * 1000 + k), name=f"random_poly_{k}")
    for z in funcs:
        if z.spectral is None and "smoothed" not in z.tags:
            job(check_poincare_hessian, z.handle, 8)

    positive = [z for z in funcs if "positive" in z.tags]
    # E(1/g) is infinite for Phi-affine members with |a| >= 1, so g ranges over
    # members bounded away from zero
    floor = [z for z in positive if z.handle.meta.get("kind") in ("constant", "spectral")]
    for zf in positive:
        for zg in floor:
            if zf.handle.n != zg.handle.n:
                continue
            sharp = "smoothed" in zf.tags or "smoothed" in zg.tags
            rule = _sharp_rule(zf.handle.n) if sharp else Z.outer_rule(zf.handle.n)
            job(check_reverse_holder, zf.handle, zg.handle, rule, seed)
        for t in (0.5, 1.0, 2.0):
            for p in (-1.0, 0.5):
                job(check_reverse_hyper, zf.handle, t, p, zf.rule, seed)

    smooth = [z for z in bounded if "smoothed" not in z.tags or "0.2" in z.key] + \
        [z for z in funcs if z.spectral is not None]
    for z in smooth:
        job(check_f_fs, z.handle, rule=z.rule, seed=seed, spectral=z.spectral)
        job(check_ledoux, z.handle, z.rule, seed=seed, spectral=z.spectral)
        job(check_high_weights, z.handle, z.rule, seed=seed, spectral=z.spectral)
        job(check_pull_back, z.handle, z.rule, seed=seed, spectral=z.spectral)

    curved = [(z.key, z.handle, z.rule) for z in bounded if "curved" in z.tags]
    curved += [(z.key, z.set.indicator(), _sharp_rule(2)) for z in zsets if "halfspace" not in z.tags]
    for key, f, rule in curved:
        job(check_post_reverse, f, rule, seed=seed)
        job(check_hess_moment, f, rule, seed=seed)
    job(check_chaos_moments, seed, samples=50_000 if quick else 200_000)

    halfspaces = [z.set for z in zsets if "halfspace" in z.tags]
    for z in zsets:
        if "halfspace" in z.tags:
            continue
        for B in halfspaces:
            job(check_s_small, z.set, B, seed=seed)
        for a, b in (([1.0, 0.0], 0.0), ([-3.0, 0.0], 0.0), ([1.2, -0.9], 0.5)):
            job(check_rounding, z.set, a, b, seed)

    def run(j):
        fn, args, kw = j
        out = fn(*args, **kw)
        return out if isinstance(out, list) else [out]

    results: list[CheckResult] = []
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            batches = list(pool.map(run, jobs))
    else:
        batches = map(run, jobs)
    for batch in batches:
        results.extend(batch)
        if progress:
            for r in batch:
                progress(r)
    return results


def traceability_table() -> list[list[str]]:
    return [[name, mode, anchor] for name, (anchor, mode) in ANCHORS.items()]


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def write_ledger(results: list[CheckResult], out_dir: str) -> dict:
    """JSON lines, CSV summary and traceability table; returns the paths."""
    jsonl = os.path.join(out_dir, "ledger.jsonl")
    summary = os.path.join(out_dir, "ledger_summary.csv")
    trace = os.path.join(out_dir, "traceability.csv")
    _atomic_write(jsonl, "".join(json.dumps(r.to_dict(), default=_json_default) + "\n" for r in results))
    rows = [["name", "input", "mode", "pass", "margin", "constant"]]
    rows += [[r.name, r.input, r.mode, r.passed, repr(r.margin), "" if r.constant is None else repr(r.constant)]
             for r in results]
    _atomic_write(summary, _csv_text(rows))
    _atomic_write(trace, _csv_text([["check", "mode", "statement"]] + traceability_table()))
    return {"jsonl": jsonl, "summary": summary, "traceability": trace}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def failures(results: list[CheckResult]) -> list[CheckResult]:
    return [r for r in results if r.mode == ASSERT and not r.passed]
