"""Nearest Phi-affine functions and nearest half-spaces.

``fit_phi_affine`` minimises E(f - Phi(a.x + b))^2 over (a, b) with a free
magnitude |a| (it encodes a smoothing time).  ``fit_halfspace_set``
minimises gamma(A sym-diff B) over unit a and offset b, with a in spherical
coordinates.  Both use multi-start Nelder-Mead.

In the plane the symmetric difference is evaluated from cached ray
intervals of A:

    gamma(A sym-diff B) = gamma(A) + Phi(b) - 2 gamma(A intersect B),

where gamma(A intersect B) cuts each interval analytically at the line
a.x + b = 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import rays as _rays
from .handles import FunctionHandle, SetHandle
from .quadrature import QuadratureRule, gauss_hermite_rule, mc_rule
from .scalar import Phi, Phi_inv

RESTARTS = 8
MAX_EVALS = 2000
XATOL = 1e-6
TIE = 1e-9


@dataclass(frozen=True)
class HalfSpace:
    """{x : a.x + b >= 0}.  a = 0 encodes the whole space (b >= 0) or the empty set."""
    a: tuple
    b: float

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def degenerate(self) -> bool:
        return not any(self.a)

    @property
    def measure(self) -> float:
        if self.degenerate:
            return 1.0 if self.b >= 0 else 0.0
        return float(Phi(self.b / float(np.linalg.norm(self.a))))

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x @ np.asarray(self.a) + self.b >= 0

    def to_set(self) -> SetHandle:
        from .sets import halfspace

        if self.degenerate:
            full = self.b >= 0
            return SetHandle(n=self.n, membership=lambda x: np.full(x.shape[0], full),
                             name="whole space" if full else "empty", measure=1.0 if full else 0.0)
        return halfspace(self.a, self.b)

    def to_dict(self) -> dict:
        return {"a": list(self.a), "b": self.b}


@dataclass(frozen=True)
class FitResult:
    kind: str  # "phi_affine" | "halfspace"
    a: list
    b: float
    norm_a: float
    objective: float
    restarts: int
    converged: bool
    trace: list = field(default_factory=list)
    sentinel: str | None = None  # "zero" / "one" for constant limits
    seed: int = 0

    @property
    def halfspace(self) -> HalfSpace:
        return round_to_halfspace(self.a, self.b)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["b"] = _json_float(self.b)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def round_to_halfspace(a, b: float) -> HalfSpace:
    """Round Phi(a.x + b) to {0, 1}: B = {a.x + b >= 0}, normalised to |a| = 1."""
    a = np.asarray(a, dtype=float)
    nrm = float(np.linalg.norm(a))
    if nrm == 0.0 or not math.isfinite(b):
        return HalfSpace(tuple(0.0 for _ in a), 1.0 if b >= 0 else -1.0)
    return HalfSpace(tuple((a / nrm).tolist()), float(b) / nrm)


def _start_directions(n: int, restarts: int, seed: int) -> list:
    """+-e_i, then seeded random unit directions up to max(restarts, 2n + 2) starts."""
    dirs = []
    for i in range(n):
        for sgn in (1.0, -1.0):
            e = np.zeros(n); e[i] = sgn
            dirs.append(e)
    rng = np.random.Generator(np.random.Philox(seed))
    while len(dirs) < max(restarts, 2 * n + 2):
        v = rng.standard_normal(n)
        dirs.append(v / np.linalg.norm(v))
    return dirs


def _nelder_mead(obj, x0, max_evals):
    x0 = np.asarray(x0, dtype=float)
    f0 = float(obj(x0))
    res = minimize(obj, x0, method="Nelder-Mead",
                   options={"xatol": XATOL, "fatol": 1e-14, "maxfev": max_evals, "adaptive": x0.size > 2})
    return res, f0


def _pick(cands):
    """Best objective; among ties within TIE the lexicographically largest a."""
    best = min(c["objective"] for c in cands)
    close = [c for c in cands if c["objective"] <= best + TIE]
    return max(close, key=lambda c: tuple(c["a"]))


# ------------------------------------------------------------ Phi-affine


def fit_phi_affine(f: FunctionHandle, rule: QuadratureRule | None = None, restarts: int = RESTARTS,
                   seed: int = 0, max_evals: int = MAX_EVALS) -> FitResult:
    """Minimise E(f - Phi(a.x + b))^2 over (a, b) in R^n x R.

    If a constant limit g = 0 or g = 1 (b -> -inf / +inf) is at least as good
    as every finite optimum, the constant-limit sentinel is returned.
    """
    n = f.n
    if rule is None:
        rule = gauss_hermite_rule(n, 40) if n <= 3 else mc_rule(n, 100_000, seed)
    X, W = rule.nodes, rule.weights
    fv = f(X, check=f.bounded)
    mean = float(W @ fv)

    def obj(p):
        r = fv - Phi(X @ p[:n] + p[n])
        return float(W @ (r * r))

    m0 = float(Phi_inv(min(max(mean, 1e-6), 1 - 1e-6)))
    cands = []
    for d in _start_directions(n, restarts, seed):
        x0 = np.append(d, m0 * math.sqrt(2.0))  # Phi(d.x + b) has mean Phi(b / sqrt(2))
        res, f0 = _nelder_mead(obj, x0, max_evals)
        cands.append({"start": x0.tolist(), "start_objective": f0, "a": res.x[:n].tolist(),
                      "b": float(res.x[n]), "objective": float(res.fun), "nfev": int(res.nfev),
                      "converged": bool(res.success)})
    best = _pick(cands)
    zero, one = float(W @ (fv * fv)), float(W @ ((1 - fv) ** 2))
    sentinel = None
    if min(zero, one) <= best["objective"] + 1e-12:
        sentinel = "zero" if zero <= one else "one"
        a = [0.0] * n
        b = -math.inf if sentinel == "zero" else math.inf
        objective = min(zero, one)
        converged = True
    else:
        a, b, objective, converged = best["a"], best["b"], best["objective"], best["converged"]
    return FitResult("phi_affine", a, b, float(np.linalg.norm(a)), objective, len(cands), converged,
                     cands, sentinel, seed)


# ------------------------------------------------------------ half-spaces


def _unit_from_angles(ang: np.ndarray) -> np.ndarray:
    """Spherical coordinates (n - 1 angles) to a unit vector in R^n."""
    n = ang.size + 1
    v = np.empty(n)
    s = 1.0
    for i, t in enumerate(ang):
        v[i] = s * math.cos(t)
        s *= math.sin(t)
    v[n - 1] = s
    return v


def _angles_from_unit(v: np.ndarray) -> np.ndarray:
    n = v.size
    ang = np.empty(n - 1)
    for i in range(n - 2):
        ang[i] = math.atan2(float(np.linalg.norm(v[i + 1:])), float(v[i]))
    ang[n - 2] = math.atan2(float(v[n - 1]), float(v[n - 2]))
    return ang


class SymDiff:
    """gamma(A sym-diff B) for half-spaces B, evaluated repeatedly for one set A."""

    def __init__(self, A: SetHandle, ray_rule: _rays.RayRule | None = None, samples: int = 400_000,
                 seed: int = 0):
        self.A = A
        self.n = A.n
        if A.n == 2:
            rule = ray_rule or _rays.RayRule()
            centres = _rays.clean_centres(A.membership, rule, count=len(rule.centres))
            # rays from outside centres can miss short chords near corners
            inside = [c for c in centres if A.contains(c[None, :])[0]]
            centres = inside or centres
            self.intervals = [_rays.cast(A.membership, rule, c) for c in centres]
            self.centres = np.array([iv.centre for iv in self.intervals])
            self.measure = float(np.mean([iv.measure() for iv in self.intervals]))
        else:
            self.mc = mc_rule(A.n, samples, seed)
            self.inside = A.contains(self.mc.nodes)
            self.measure = float(self.mc.weights @ self.inside)

    def __call__(self, a, b: float) -> float:
        a = np.asarray(a, dtype=float)
        if self.n == 2:
            # the centre farthest from the line keeps the angular integrand smooth
            k = int(np.argmax(np.abs(self.centres @ a + b)))
            inter = self.intervals[k].measure_with_halfspace(a, b)
            return float(self.measure + Phi(b) - 2.0 * inter)
        inB = self.mc.nodes @ a + b >= 0
        return float(self.mc.weights @ (inB != self.inside))


def fit_halfspace_set(A: SetHandle, ray_rule: _rays.RayRule | None = None, restarts: int = RESTARTS,
                      seed: int = 0, max_evals: int = MAX_EVALS, symdiff: SymDiff | None = None) -> FitResult:
    """Minimise gamma(A sym-diff {a.x + b >= 0}) over unit a and b."""
    sd = symdiff or SymDiff(A, ray_rule, seed=seed)
    n = A.n
    b0 = float(Phi_inv(min(max(sd.measure, 1e-9), 1 - 1e-9)))

    if n == 1:
        cands = []
        for sgn in (1.0, -1.0):
            res, f0 = _nelder_mead(lambda p, s=sgn: sd([s], p[0]), [sgn * b0], max_evals)
            cands.append({"start": [sgn, sgn * b0], "start_objective": f0, "a": [sgn], "b": float(res.x[0]),
                          "objective": float(res.fun), "nfev": int(res.nfev), "converged": bool(res.success)})
    else:
        def obj(p):
            return sd(_unit_from_angles(p[:-1]), p[-1])

        cands = []
        for d in _start_directions(n, restarts, seed):
            x0 = np.append(_angles_from_unit(d), b0)
            res, f0 = _nelder_mead(obj, x0, max_evals)
            a = _unit_from_angles(res.x[:-1])
            cands.append({"start": d.tolist() + [b0], "start_objective": f0, "a": a.tolist(),
                          "b": float(res.x[-1]), "objective": float(res.fun), "nfev": int(res.nfev),
                          "converged": bool(res.success)})
    best = _pick(cands)
    return FitResult("halfspace", best["a"], best["b"], 1.0, best["objective"], len(cands),
                     best["converged"], cands, None, seed)


def symmetric_difference(A: SetHandle, B: HalfSpace, ray_rule: _rays.RayRule | None = None) -> float:
    if B.degenerate:
        m = SymDiff(A, ray_rule).measure
        return 1.0 - m if B.b >= 0 else m
    return SymDiff(A, ray_rule)(np.asarray(B.a), B.b)


def rounding_gap(A: SetHandle, a, b: float, ray_rule: _rays.RayRule | None = None) -> dict:
    """Compare gamma(A sym-diff B) with E(1_A - g)^2 for g = Phi(a.x + b) and B its rounding.

    Rounding gives |1_A - 1_B| <= 2 |1_A - g| pointwise, hence
    gamma(A sym-diff B) <= 4 E(1_A - g)^2; the factor 4 cannot be dropped
    for the rounded B (A empty, g = Phi(x1): 1/2 > 1/3).  Both margins are
    returned.

    E(1_A - g)^2 = gamma(A) - 2 E[1_A g] + E g^2 with E g^2 = P(Z1 <= b', Z2 <= b')
    for correlation |a|^2 / (1 + |a|^2) and b' = b / sqrt(1 + |a|^2).
    """
    from .sets import bvn_cdf

    if A.n != 2:
        raise ValueError("rounding_gap is implemented for planar sets")
    a = np.asarray(a, dtype=float)
    B = round_to_halfspace(a, b)
    sd = symmetric_difference(A, B, ray_rule)
    rule = ray_rule or _rays.RayRule()
    c = _rays.clean_centres(A.membership, rule)[0]
    iv = _rays.cast(A.membership, rule, c)
    aa = float(a @ a)
    bb = b / math.sqrt(1 + aa)
    Eg2 = float(bvn_cdf(bb, bb, aa / (1 + aa))) if aa > 0 else float(Phi(b)) ** 2
    l2 = iv.measure() - 2.0 * iv.integrate(lambda x: Phi(x @ a + b)) + Eg2
    return {"symmetric_difference": sd, "l2_distance_sq": l2, "margin": 4.0 * l2 - sd,
            "margin_factor_one": l2 - sd, "halfspace": B.to_dict()}
