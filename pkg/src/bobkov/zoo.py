"""The fixed, versioned collection of test functions and sets.

Functions carry a preferred outer rule: tensor Gauss-Hermite for globally
smooth members and a trapezoidal grid for smoothed indicators, whose
transition layers are too thin for Gauss-Hermite node spacing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sets as S
from .handles import FunctionHandle, SetHandle
from .hermite import SpectralFunction, multi_indices, project
from .quadrature import QuadratureRule, gauss_hermite_rule, grid_rule
from .scalar import Phi, phi

ZOO_VERSION = 1
OUTER_POINTS = 40


@dataclass(frozen=True, eq=False)
class ZooFunction:
    key: str
    handle: FunctionHandle
    rule: QuadratureRule
    tags: frozenset = frozenset()
    spectral: SpectralFunction | None = None


@dataclass(frozen=True, eq=False)
class ZooSet:
    key: str
    set: SetHandle
    tags: frozenset = frozenset()
    params: dict = field(default_factory=dict)


def constant(c: float, n: int = 2) -> FunctionHandle:
    c = float(c)

    def smoothing(t, x, order=2):
        m = x.shape[0]
        return (np.full(m, c), np.zeros((m, n)), np.zeros((m, n, n)))[:order + 1]

    return FunctionHandle(
        n=n, evaluator=lambda x: np.full(x.shape[0], c), name=f"const({c:g})", known_mean=c,
        gradient=lambda x: np.zeros(x.shape), hessian=lambda x: np.zeros(x.shape + (n,)),
        smoothing=smoothing, meta={"kind": "constant", "c": c},
    )


def _phi_affine_parts(a, b, x, order):
    u = x @ a + b
    out = [Phi(u)]
    if order >= 1:
        out.append(phi(u)[:, None] * a[None, :])
    if order >= 2:
        out.append((-u * phi(u))[:, None, None] * np.outer(a, a)[None])
    return tuple(out)


def phi_affine(a, b: float = 0.0, name: str | None = None) -> FunctionHandle:
    """f(x) = Phi(a.x + b).  P_t f is again of this form:

    P_t f = Phi((e^{-t} a.x + b) / sqrt(1 + |a|^2 (1 - e^{-2t}))).
    """
    a = np.asarray(a, dtype=float)
    b = float(b)
    aa = float(a @ a)

    def smoothing(t, x, order=2):
        sig = math.sqrt(1.0 - aa * math.expm1(-2.0 * t))
        return _phi_affine_parts(math.exp(-t) * a / sig, b / sig, x, order)

    return FunctionHandle(
        n=a.size,
        evaluator=lambda x: Phi(x @ a + b),
        name=name or f"Phi({np.round(a, 6).tolist()}.x{b:+g})",
        known_mean=float(Phi(b / math.sqrt(1.0 + aa))),
        gradient=lambda x: _phi_affine_parts(a, b, x, 1)[1],
        hessian=lambda x: _phi_affine_parts(a, b, x, 2)[2],
        smoothing=smoothing,
        meta={"kind": "phi_affine", "a": a.tolist(), "b": b},
    )


def phi_product(n: int = 2) -> FunctionHandle:
    """f(x) = prod_i Phi(x_i); each factor smooths independently."""

    def parts(x, scale, order):
        u = scale * x
        F, D = Phi(u), scale * phi(u)
        D2 = -scale * scale * u * phi(u)
        val = np.prod(F, axis=1)
        out = [val]
        if order >= 1:
            g = np.empty_like(x)
            for i in range(n):
                g[:, i] = D[:, i] * np.prod(np.delete(F, i, axis=1), axis=1)
            out.append(g)
        if order >= 2:
            H = np.empty(x.shape + (n,))
            for i in range(n):
                for j in range(n):
                    if i == j:
                        H[:, i, i] = D2[:, i] * np.prod(np.delete(F, i, axis=1), axis=1)
                    else:
                        rest = np.prod(np.delete(F, [i, j], axis=1), axis=1)
                        H[:, i, j] = D[:, i] * D[:, j] * rest
            out.append(H)
        return tuple(out)

    def smoothing(t, x, order=2):
        sig = math.sqrt(1.0 - math.expm1(-2.0 * t))
        return parts(x, math.exp(-t) / sig, order)

    return FunctionHandle(
        n=n, evaluator=lambda x: np.prod(Phi(x), axis=1), name=f"prod Phi(x_i), n={n}",
        known_mean=0.5 ** n, gradient=lambda x: parts(x, 1.0, 1)[1],
        hessian=lambda x: parts(x, 1.0, 2)[2], smoothing=smoothing, meta={"kind": "phi_product"},
    )


def random_polynomial(seed: int, n: int = 2, degree: int = 4) -> SpectralFunction:
    """Random Hermite expansion of degree <= ``degree`` with N(0, 1) / (1 + |alpha|) coefficients."""
    rng = np.random.Generator(np.random.Philox(seed))
    idx = multi_indices(n, degree)
    b = rng.standard_normal(len(idx)) / (1.0 + np.array([a.order for a in idx]))
    return SpectralFunction(n, degree, dict(zip(idx, b)))


def positive_polynomial(seed: int, n: int = 2) -> SpectralFunction:
    """0.05 + 0.9 q^2 / max q^2 for a random quadratic q.

    The maximum is taken over the default outer Gauss-Hermite nodes, so the
    result lies in [0.05, 0.95] on those nodes and is >= 0.05 everywhere.
    """
    q = random_polynomial(seed, n, 2)
    nodes = gauss_hermite_rule(n, OUTER_POINTS).nodes
    top = float(np.max(q(nodes) ** 2))
    return project(lambda x: 0.05 + 0.9 * q(x) ** 2 / top, 4, gauss_hermite_rule(n, 10))


def outer_rule(n: int, sharp: bool = False) -> QuadratureRule:
    if sharp and n <= 2:
        return grid_rule(n, 0.05)
    return gauss_hermite_rule(n, OUTER_POINTS if n <= 3 else 6)


def quadrant() -> SetHandle:
    return S.intersection([[-1.0, 0.0], [0.0, -1.0]], [0.0, 0.0], name="quadrant {x1<=0, x2<=0}")


def function_zoo(seed: int = 0) -> list[ZooFunction]:
    out = [
        ZooFunction("const_0.1", constant(0.1, 1), outer_rule(1), frozenset({"equality", "positive"})),
        ZooFunction("const_0.5", constant(0.5, 3), outer_rule(3), frozenset({"equality", "positive"})),
        ZooFunction("phi_x1", phi_affine([1.0, 0.0], 0.0), outer_rule(2),
                    frozenset({"equality", "positive"})),
        ZooFunction("phi_tilted", phi_affine([1.2, -0.9], 0.5), outer_rule(2),
                    frozenset({"equality", "positive"})),
        ZooFunction("phi_3d", phi_affine([0.6, -0.8, 0.5], -0.3), outer_rule(3),
                    frozenset({"equality", "positive"})),
        ZooFunction("phi_product", phi_product(2), outer_rule(2), frozenset({"positive", "curved"})),
    ]
    for tau in (0.05, 0.2):
        hs = S.halfspace([-1.0, 0.0], 0.0, name="{x1<=0}")
        out.append(ZooFunction(f"smoothed_halfspace_{tau:g}", S.smoothed_indicator(hs, tau),
                               outer_rule(2, sharp=True), frozenset({"equality", "positive", "smoothed"})))
        out.append(ZooFunction(f"smoothed_quadrant_{tau:g}", S.smoothed_indicator(quadrant(), tau),
                               outer_rule(2, sharp=True), frozenset({"positive", "curved", "smoothed"})))
    for k in range(2):
        p = positive_polynomial(seed * 100 + k)
        out.append(ZooFunction(f"positive_poly_{k}", p.as_handle(f"positive_poly_{k}"), outer_rule(2),
                               frozenset({"polynomial", "positive", "unbounded"}), spectral=p))
    return out


def set_zoo() -> list[ZooSet]:
    out = [ZooSet(f"halfspace_{b:g}", S.halfspace([-1.0, 0.0], b, name=f"{{x1<={b:g}}}"),
                  frozenset({"halfspace", "equality"}), {"b": b})
           for b in (0.0, 0.5, 1.0)]
    out += [
        ZooSet("ball_1", S.ball(1.0), frozenset({"closed_form"})),
        ZooSet("slab_0.5", S.slab(0.5), frozenset({"closed_form"})),
        ZooSet("quadrant", quadrant(), frozenset({"intersection"})),
        ZooSet("wedge_0.5", S.wedge(0.5), frozenset({"intersection"}), {"theta": 0.5}),
        ZooSet("union_0.4", S.halfspace_union(0.4), frozenset({"union"}), {"theta": 0.4}),
    ]
    return out


def get_function(key: str, seed: int = 0) -> ZooFunction:
    for z in function_zoo(seed):
        if z.key == key:
            return z
    raise KeyError(f"unknown zoo function {key!r}")


def get_set(key: str) -> ZooSet:
    for z in set_zoo():
        if z.key == key:
            return z
    raise KeyError(f"unknown zoo set {key!r}")


def describe() -> dict:
    return {"version": ZOO_VERSION,
            "functions": [z.key for z in function_zoo()],
            "sets": [z.key for z in set_zoo()]}
