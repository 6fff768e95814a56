"""Black-box function and set representations.

A :class:`FunctionHandle` wraps a vectorised evaluator ``(m, n) -> (m,)``.
Optional hooks carry closed forms when they are known:

``gradient`` / ``hessian``
    derivatives of f itself;
``smoothing``
    ``smoothing(t, x, order)`` returning ``(P_t f, grad P_t f, Hess P_t f)``
    truncated to ``order + 1`` entries.  Parametric indicator sets use it to
    avoid integrating discontinuous integrands.

Evaluators must be safe to call concurrently (no hidden mutable state).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

RANGE_SLACK = 1e-12

Array = np.ndarray


class RangeError(ValueError):
    """Function value outside [0, 1]."""


def as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1) if x.shape[0] == n else x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != n:
        raise ValueError(f"expected points of dimension {n}, got array of shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class FunctionHandle:
    n: int
    evaluator: Callable[[Array], Array]
    name: str = "f"
    is_indicator: bool = False
    is_smooth: bool = True
    known_mean: float | None = None
    gradient: Callable[[Array], Array] | None = None
    hessian: Callable[[Array], Array] | None = None
    smoothing: Callable | None = None
    bounded: bool = True  # values in [0, 1]
    meta: dict = field(default_factory=dict)

    def __call__(self, x, check: bool = True) -> Array:
        pts = as_points(x, self.n)
        vals = np.asarray(self.evaluator(pts), dtype=float).reshape(pts.shape[0])
        if check and self.bounded:
            bad = (vals < -RANGE_SLACK) | (vals > 1.0 + RANGE_SLACK) | ~np.isfinite(vals)
            if bad.any():
                i = int(np.argmax(bad))
                raise RangeError(f"{self.name} = {vals[i]!r} outside [0, 1] at {pts[i].tolist()}")
            vals = np.clip(vals, 0.0, 1.0)
        return vals

    def grad(self, x) -> Array:
        if self.gradient is None:
            raise NotImplementedError(f"{self.name} has no closed-form gradient")
        pts = as_points(x, self.n)
        return np.asarray(self.gradient(pts), dtype=float).reshape(pts.shape[0], self.n)

    def complement(self) -> FunctionHandle:
        """The function 1 - f, with hooks transformed accordingly."""
        ev = self.evaluator
        gr = None if self.gradient is None else (lambda x, g=self.gradient: -g(x))
        he = None if self.hessian is None else (lambda x, h=self.hessian: -h(x))
        sm = None
        if self.smoothing is not None:
            def sm(t, x, order=2, s=self.smoothing):
                out = s(t, x, order)
                return (1.0 - out[0],) + tuple(-o for o in out[1:])
        return replace(
            self,
            evaluator=lambda x: 1.0 - ev(x),
            name=f"1-{self.name}",
            known_mean=None if self.known_mean is None else 1.0 - self.known_mean,
            gradient=gr, hessian=he, smoothing=sm,
        )


@dataclass(frozen=True, eq=False)
class SetHandle:
    """Measurable set A in R^n given by a deterministic membership oracle.

    ``distance`` (exact d(x, A)), ``measure`` (gamma_n(A)), ``perimeter``
    (gamma_n^+(A)) and ``smoothing`` (exact P_t 1_A with derivatives) are
    optional closed forms.
    """
    n: int
    membership: Callable[[Array], Array]
    name: str = "A"
    measure: float | None = None
    perimeter: float | None = None
    distance: Callable[[Array], Array] | None = None
    smoothing: Callable | None = None
    meta: dict = field(default_factory=dict)

    def contains(self, x) -> Array:
        pts = as_points(x, self.n)
        return np.asarray(self.membership(pts), dtype=bool).reshape(pts.shape[0])

    def indicator(self) -> FunctionHandle:
        mem = self.membership
        return FunctionHandle(
            n=self.n,
            evaluator=lambda x: np.asarray(mem(x), dtype=float),
            name=f"1[{self.name}]",
            is_indicator=True,
            is_smooth=False,
            known_mean=self.measure,
            smoothing=self.smoothing,
            meta={"set": self.name, **self.meta},
        )

    def complement(self) -> SetHandle:
        mem = self.membership
        sm = None
        if self.smoothing is not None:
            def sm(t, x, order=2, s=self.smoothing):
                out = s(t, x, order)
                return (1.0 - out[0],) + tuple(-o for o in out[1:])
        return SetHandle(
            n=self.n,
            membership=lambda x: ~np.asarray(mem(x), dtype=bool),
            name=f"complement({self.name})",
            measure=None if self.measure is None else 1.0 - self.measure,
            perimeter=self.perimeter,
            distance=None,
            smoothing=sm,
        )

    def neighbourhood(self, r: float, directions: int = 64) -> SetHandle:
        """The closed r-neighbourhood A_r = {x : d(x, A) <= r}.

        Uses the exact distance when available; otherwise x is accepted when
        x or one of ``directions`` points on the sphere of radius r around it
        lies in A (projected-sampling fallback, exact only in the limit).
        """
        if self.distance is not None:
            dist = self.distance
            mem = lambda x: np.asarray(dist(x)) <= r  # noqa: E731
        else:
            dirs = _sphere_directions(self.n, directions)
            base = self.membership

            def mem(x):
                inside = np.asarray(base(x), dtype=bool)
                for u in dirs:
                    inside |= np.asarray(base(x + r * u), dtype=bool)
                return inside
        return SetHandle(n=self.n, membership=mem, name=f"{self.name}_r{r:g}")


def _sphere_directions(n: int, k: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = 2 * np.pi * np.arange(k) / k
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.Generator(np.random.Philox(12345))
    u = rng.standard_normal((k, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)
