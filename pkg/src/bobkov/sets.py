"""Parametric sets with exact distance functions and exact OU smoothing.

Half-spaces are written {x : a.x + b >= 0} with a unit vector a, so
gamma_n = Phi(b) and

    P_t 1_B(x) = Phi((e^{-t} a.x + b) / s),   s = sqrt(1 - e^{-2t}).

Intersections of two half-spaces smooth to a bivariate normal CDF, slabs to
a difference of two Phi's and centred balls to a non-central chi-square
CDF.  Each ``smoothing`` hook returns (value, gradient, Hessian) in x.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import special, stats

from .handles import FunctionHandle, SetHandle
from .scalar import Phi, phi

INV_2PI = 1.0 / (2.0 * math.pi)


def _ts(t):
    e = math.exp(-t)
    s = math.sqrt(-math.expm1(-2.0 * t))
    return e, s


def _unit(a):
    a = np.asarray(a, dtype=float)
    nrm = np.linalg.norm(a)
    if nrm == 0:
        raise ValueError("half-space normal must be non-zero")
    return a / nrm


def bvn_cdf(h, k, rho):
    """P(Z1 <= h, Z2 <= k) for standard normals with correlation |rho| < 1 (Owen's T form)."""
    # + 0.0 turns -0.0 into +0.0, which fixes the sign of the infinite Owen's T arguments
    h = np.asarray(h, dtype=float) + 0.0
    k = np.asarray(k, dtype=float) + 0.0
    r = math.sqrt(1.0 - rho * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = (k - rho * h) / (h * r)
        ak = (h - rho * k) / (k * r)
    both0 = (h == 0) & (k == 0)
    ah = np.where(both0, 0.0, ah)
    ak = np.where(both0, 0.0, ak)
    # sign test rather than h * k, which underflows for tiny arguments
    beta = np.where((h < 0) ^ (k < 0), 0.5, 0.0)
    val = 0.5 * special.ndtr(h) + 0.5 * special.ndtr(k) - special.owens_t(h, ah) \
        - special.owens_t(k, ak) - beta
    val = np.where(both0, 0.25 + math.asin(rho) * INV_2PI, val)
    return np.clip(val, 0.0, 1.0)


def bvn_derivatives(h, k, rho):
    """Gradient and Hessian of bvn_cdf with respect to (h, k)."""
    r = math.sqrt(1.0 - rho * rho)
    zh = (k - rho * h) / r
    zk = (h - rho * k) / r
    dh = phi(h) * special.ndtr(zh)
    dk = phi(k) * special.ndtr(zk)
    dens = phi(h) * phi(zh) / r
    dhh = -h * dh - rho * dens
    dkk = -k * dk - rho * dens
    return (dh, dk), (dhh, dens, dkk)


def halfspace(a, b: float = 0.0, name: str | None = None) -> SetHandle:
    """{x : a.x + b >= 0}; a and b are rescaled together so that |a| = 1."""
    nrm = float(np.linalg.norm(a))
    a = _unit(a)
    b = float(b) / nrm
    n = a.size

    def smoothing(t, x, order=2):
        e, s = _ts(t)
        u = (e * (x @ a) + b) / s
        out = [Phi(u)]
        if order >= 1:
            out.append((phi(u) * e / s)[:, None] * a[None, :])
        if order >= 2:
            out.append((-u * phi(u) * (e / s) ** 2)[:, None, None] * np.outer(a, a)[None])
        return tuple(out)

    return SetHandle(
        n=n,
        membership=lambda x: x @ a + b >= 0,
        name=name or f"halfspace(a={a.round(6).tolist()}, b={b:g})",
        measure=float(Phi(b)),
        perimeter=float(phi(b)),
        distance=lambda x: np.maximum(0.0, -(x @ a + b)),
        smoothing=smoothing,
        meta={"kind": "halfspace", "a": a.tolist(), "b": b},
    )


def slab(half_width: float, n: int = 2, axis: int = 0, name: str | None = None) -> SetHandle:
    w = float(half_width)
    a = np.zeros(n); a[axis] = 1.0

    def smoothing(t, x, order=2):
        e, s = _ts(t)
        m = e * (x @ a)
        up, lo = (w - m) / s, (-w - m) / s
        out = [Phi(up) - Phi(lo)]
        if order >= 1:
            out.append(((phi(lo) - phi(up)) * e / s)[:, None] * a[None, :])
        if order >= 2:
            out.append(((lo * phi(lo) - up * phi(up)) * (e / s) ** 2)[:, None, None] * np.outer(a, a)[None])
        return tuple(out)

    return SetHandle(
        n=n,
        membership=lambda x: np.abs(x @ a) <= w,
        name=name or f"slab(|x{axis + 1}| <= {w:g})",
        measure=float(Phi(w) - Phi(-w)),
        perimeter=float(2 * phi(w)),
        distance=lambda x: np.maximum(0.0, np.abs(x @ a) - w),
        smoothing=smoothing,
        meta={"kind": "slab", "half_width": w, "axis": axis},
    )


def ball(radius: float = 1.0, n: int = 2, name: str | None = None) -> SetHandle:
    """Centred Euclidean ball; P_t 1_ball is a non-central chi-square CDF."""
    R = float(radius)

    def smoothing(t, x, order=2):
        e, s = _ts(t)
        mu = e * x
        lam = np.sum(mu * mu, axis=1) / (s * s)
        q = R * R / (s * s)
        pos = lam > 0
        lam_s = np.where(pos, lam, 1.0)

        def pdf(df):
            return np.where(pos, stats.ncx2.pdf(q, df, lam_s), stats.chi2.pdf(q, df))

        cdf = np.where(pos, stats.ncx2.cdf(q, n, lam_s), stats.chi2.cdf(q, n))
        out = [cdf]
        if order >= 1:
            d1 = -pdf(n + 2)  # dF/dlambda
            out.append(e * (d1 * 2.0 / (s * s))[:, None] * mu)
        if order >= 2:
            d2 = 0.5 * (pdf(n + 2) - pdf(n + 4))
            H = (d1 * 2.0 / (s * s))[:, None, None] * np.eye(n)[None] \
                + (d2 * 4.0 / s ** 4)[:, None, None] * np.einsum("mi,mj->mij", mu, mu)
            out.append(e * e * H)
        return tuple(out)

    return SetHandle(
        n=n,
        membership=lambda x: np.sum(x * x, axis=1) <= R * R,
        name=name or f"ball(r={R:g})",
        measure=float(stats.chi2.cdf(R * R, n)),
        perimeter=float(R ** (n - 1) * math.exp(-R * R / 2) / (2 ** (n / 2 - 1) * math.gamma(n / 2))),
        distance=lambda x: np.maximum(0.0, np.linalg.norm(x, axis=1) - R),
        smoothing=smoothing,
        meta={"kind": "ball", "radius": R},
    )


def _polygon_distance(A: np.ndarray, b: np.ndarray):
    """Exact Euclidean distance to the planar polygon {x : A x + b >= 0} (rows of A unit)."""
    k = A.shape[0]
    verts = []
    for i, j in itertools.combinations(range(k), 2):
        M = A[[i, j]]
        if abs(np.linalg.det(M)) > 1e-14:
            verts.append(np.linalg.solve(M, -b[[i, j]]))
    verts = np.array(verts) if verts else np.zeros((0, 2))
    if len(verts):
        ok = np.all(verts @ A.T + b >= -1e-10, axis=1)
        verts = verts[ok]

    def dist(x):
        g = x @ A.T + b  # (m, k)
        inside = np.all(g >= 0, axis=1)
        best = np.full(x.shape[0], np.inf)
        for i in range(k):
            p = x - g[:, i][:, None] * A[i][None, :]  # foot of perpendicular on line i
            feas = np.all(p @ A.T + b >= -1e-12, axis=1)
            d = np.abs(g[:, i])
            best = np.where(feas, np.minimum(best, d), best)
        for v in verts:
            best = np.minimum(best, np.linalg.norm(x - v[None, :], axis=1))
        return np.where(inside, 0.0, best)

    return dist


def intersection(normals, offsets, name: str | None = None) -> SetHandle:
    """Intersection of half-spaces {a_i.x + b_i >= 0}.

    Exact distance is provided in the plane; the exact smoothing hook exists
    for two non-parallel half-spaces (bivariate normal CDF).
    """
    raw = np.atleast_2d(np.asarray(normals, dtype=float))
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms == 0):
        raise ValueError("half-space normals must be non-zero")
    A = raw / norms[:, None]
    b = np.asarray(offsets, dtype=float) / norms
    n = A.shape[1]
    smoothing = None
    measure = None
    if A.shape[0] == 2:
        rho = float(A[0] @ A[1])
        if abs(rho) < 1 - 1e-12:
            measure = float(bvn_cdf(b[0], b[1], rho))

            def smoothing(t, x, order=2):
                e, s = _ts(t)
                h = (e * (x @ A[0]) + b[0]) / s
                k = (e * (x @ A[1]) + b[1]) / s
                out = [bvn_cdf(h, k, rho)]
                if order >= 1:
                    (dh, dk), (dhh, dhk, dkk) = bvn_derivatives(h, k, rho)
                    c = e / s
                    out.append(c * (dh[:, None] * A[0] + dk[:, None] * A[1]))
                    if order >= 2:
                        aa = np.outer(A[0], A[0]); bb = np.outer(A[1], A[1])
                        ab = np.outer(A[0], A[1]) + np.outer(A[1], A[0])
                        out.append(c * c * (dhh[:, None, None] * aa + dkk[:, None, None] * bb
                                            + dhk[:, None, None] * ab))
                return tuple(out)

    return SetHandle(
        n=n,
        membership=lambda x: np.all(x @ A.T + b >= 0, axis=1),
        name=name or f"intersection({A.shape[0]} half-spaces)",
        measure=measure,
        distance=_polygon_distance(A, b) if n == 2 else None,
        smoothing=smoothing,
        meta={"kind": "intersection", "normals": A.tolist(), "offsets": b.tolist()},
    )


def wedge(theta: float, name: str | None = None) -> SetHandle:
    """Planar cone with vertex 0 and opening angle pi - theta, bisected by -e1.

    theta = 0 is the half-plane {x1 <= 0}.  Gaussian perimeter is phi(0) for
    every theta (two rays from the origin) and the measure is (pi - theta) / (2 pi).
    """
    th = float(theta)
    # inward normals at angle +-theta/2 around -e1
    n1 = np.array([-math.cos(th / 2), math.sin(th / 2)])
    n2 = np.array([-math.cos(th / 2), -math.sin(th / 2)])
    if th == 0.0:
        S = halfspace([-1.0, 0.0], 0.0, name=name or "wedge(theta=0)")
        return SetHandle(**{**S.__dict__, "meta": {**S.meta, "kind": "wedge", "theta": 0.0}})
    S = intersection([n1, n2], [0.0, 0.0], name=name or f"wedge(theta={th:g})")
    return SetHandle(**{**S.__dict__, "measure": (math.pi - th) / (2 * math.pi),
                        "perimeter": float(phi(0.0)),
                        "meta": {"kind": "wedge", "theta": th, "normals": [n1.tolist(), n2.tolist()]}})


def halfspace_union(theta: float, offset: float = 0.3, name: str | None = None) -> SetHandle:
    """{x1 <= offset} union {u_theta . x <= offset}: a perturbed-offset pair of half-planes."""
    th = float(theta)
    u = np.array([math.cos(th), math.sin(th)])
    comp = intersection([[1.0, 0.0], u], [-offset, -offset]) if th != 0.0 else None
    base = halfspace([-1.0, 0.0], offset)
    if comp is None:
        return SetHandle(**{**base.__dict__, "name": name or "union(theta=0)",
                            "meta": {"kind": "union", "theta": 0.0, "offset": offset}})
    A = comp.complement()
    d1 = halfspace([-1.0, 0.0], offset).distance
    d2 = halfspace(-u, offset).distance
    return SetHandle(
        n=2, membership=A.membership, name=name or f"union(theta={th:g}, offset={offset:g})",
        measure=A.measure, distance=lambda x: np.minimum(d1(x), d2(x)), smoothing=A.smoothing,
        meta={"kind": "union", "theta": th, "offset": offset},
    )


def empty_set(n: int = 2) -> SetHandle:
    return SetHandle(n=n, membership=lambda x: np.zeros(x.shape[0], dtype=bool), name="empty",
                     measure=0.0, perimeter=0.0, distance=lambda x: np.full(x.shape[0], np.inf),
                     smoothing=lambda t, x, order=2: (np.zeros(x.shape[0]), np.zeros(x.shape),
                                                      np.zeros(x.shape + (n,)))[:order + 1],
                     meta={"kind": "empty"})


def smoothed_indicator(A: SetHandle, tau: float) -> FunctionHandle:
    """The smooth function P_tau 1_A, exact through A's smoothing hook."""
    if A.smoothing is None:
        raise ValueError(f"{A.name} has no exact smoothing hook")
    hook = A.smoothing
    return FunctionHandle(
        n=A.n,
        evaluator=lambda x: hook(tau, x, 0)[0],
        name=f"P_{tau:g} 1[{A.name}]",
        known_mean=A.measure,
        gradient=lambda x: hook(tau, x, 1)[1],
        hessian=lambda x: hook(tau, x, 2)[2],
        smoothing=lambda t, x, order=2: hook(tau + t, x, order),
        meta={"kind": "smoothed", "set": A.name, "tau": tau},
    )
