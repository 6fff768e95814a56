"""Tensor Hermite basis on (R^n, gamma_n).

Convention: probabilists' Hermite polynomials with positive leading
coefficient, He_0 = 1, He_1 = x, He_{k+1} = x He_k - k He_{k-1}, so
E He_j He_k = k! delta_jk.  G_alpha = He_alpha / sqrt(alpha!) is the
orthonormal basis and the OU semigroup acts diagonally,
P_t G_alpha = exp(-|alpha| t) G_alpha.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .handles import FunctionHandle, as_points
from .quadrature import QuadratureError, QuadratureRule

DROP_BELOW = 1e-15


class MultiIndex(tuple):
    """Exponent vector alpha in N^n (an immutable, hashable tuple)."""

    def __new__(cls, exponents):
        exps = tuple(int(a) for a in exponents)
        if any(a < 0 for a in exps):
            raise ValueError(f"multi-index entries must be >= 0, got {exps}")
        return super().__new__(cls, exps)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(a) for a in self)

    @property
    def log_factorial(self) -> float:
        return sum(math.lgamma(a + 1) for a in self)

    def lower(self, i: int) -> MultiIndex:
        """S_i alpha: decrement coordinate i (which must be positive)."""
        if self[i] == 0:
            raise ValueError(f"cannot lower coordinate {i} of {tuple(self)}")
        return MultiIndex(self[:i] + (self[i] - 1,) + self[i + 1:])

    def sort_key(self):
        return (self.order, tuple(self))


def multi_indices(n: int, max_degree: int) -> list[MultiIndex]:
    """All alpha with |alpha| <= max_degree in graded lexicographic order."""
    out = [MultiIndex(a) for a in itertools.product(range(max_degree + 1), repeat=n)
           if sum(a) <= max_degree]
    out.sort(key=MultiIndex.sort_key)
    return out


def hermite_table(x: np.ndarray, k: int, normalized: bool = False) -> np.ndarray:
    """He_0(x), ..., He_k(x) stacked on a new last axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (k + 1,))
    out[..., 0] = 1.0
    if k >= 1:
        out[..., 1] = x
    for j in range(1, k):
        out[..., j + 1] = x * out[..., j] - j * out[..., j - 1]
    if normalized:
        out /= np.sqrt([math.factorial(j) for j in range(k + 1)])
    return out


def hermite_eval(alpha, x, normalized: bool = False):
    """H_alpha(x) = prod_i He_{alpha_i}(x_i) (or the orthonormal G_alpha)."""
    alpha = MultiIndex(alpha)
    scalar = np.ndim(x) == 1
    pts = as_points(x, len(alpha))
    if scalar and pts.shape[0] != 1:
        raise ValueError(f"point of dimension {np.shape(x)[0]} does not match multi-index {tuple(alpha)}")
    val = np.ones(pts.shape[0])
    for i, a in enumerate(alpha):
        val *= hermite_table(pts[:, i], a, normalized)[:, a]
    return float(val[0]) if scalar else val


def hermite_partial(alpha, i: int) -> tuple[int, MultiIndex | None]:
    """d/dx_i H_alpha = alpha_i H_{S_i alpha}; returns (alpha_i, S_i alpha) or (0, None)."""
    alpha = MultiIndex(alpha)
    if not 0 <= i < len(alpha):
        raise IndexError(f"axis {i} out of range for dimension {len(alpha)}")
    if alpha[i] == 0:
        return 0, None
    return alpha[i], alpha.lower(i)


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Finite expansion f = sum_alpha b_alpha G_alpha in the orthonormal basis."""
    n: int
    max_degree: int
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        coeffs = {}
        for a, b in self.coefficients.items():
            a = MultiIndex(a)
            if len(a) != self.n:
                raise ValueError(f"multi-index {tuple(a)} has wrong dimension for n={self.n}")
            if a.order > self.max_degree:
                raise ValueError(f"multi-index {tuple(a)} exceeds max degree {self.max_degree}")
            if abs(b) >= DROP_BELOW:
                coeffs[a] = float(b)
        object.__setattr__(self, "coefficients",
                           dict(sorted(coeffs.items(), key=lambda kv: kv[0].sort_key())))

    def __getitem__(self, alpha) -> float:
        return self.coefficients.get(MultiIndex(alpha), 0.0)

    def items(self):
        return self.coefficients.items()

    @property
    def mean(self) -> float:
        return self[(0,) * self.n]

    def second_moment(self) -> float:
        """E f^2 by Parseval."""
        return float(sum(b * b for b in self.coefficients.values()))

    def scaled(self, factors) -> SpectralFunction:
        """Multiply b_alpha by factors(|alpha|)."""
        return SpectralFunction(self.n, self.max_degree,
                                {a: b * factors(a.order) for a, b in self.items()})

    def __call__(self, x) -> np.ndarray:
        pts = as_points(x, self.n)
        tables = [hermite_table(pts[:, i], self.max_degree, normalized=True) for i in range(self.n)]
        out = np.zeros(pts.shape[0])
        for a, b in self.items():
            term = np.full(pts.shape[0], b)
            for i, ai in enumerate(a):
                term *= tables[i][:, ai]
            out += term
        return out

    def partial(self, i: int) -> SpectralFunction:
        """d f / d x_i, using d G_alpha / d x_i = sqrt(alpha_i) G_{S_i alpha}."""
        out: dict = {}
        for a, b in self.items():
            c, low = hermite_partial(a, i)
            if c:
                out[low] = out.get(low, 0.0) + b * math.sqrt(c)
        return SpectralFunction(self.n, max(self.max_degree - 1, 0), out)

    def gradient(self, x) -> np.ndarray:
        pts = as_points(x, self.n)
        return np.stack([self.partial(i)(pts) for i in range(self.n)], axis=1)

    def hessian(self, x) -> np.ndarray:
        pts = as_points(x, self.n)
        H = np.empty((pts.shape[0], self.n, self.n))
        for i in range(self.n):
            di = self.partial(i)
            for j in range(i, self.n):
                H[:, i, j] = H[:, j, i] = di.partial(j)(pts)
        return H

    def hessian_frobenius_sq(self) -> float:
        """E ||Hess f||_F^2, from two spectral differentiations and Parseval."""
        total = 0.0
        for i in range(self.n):
            di = self.partial(i)
            for j in range(self.n):
                total += di.partial(j).second_moment()
        return total

    def affine_residual(self) -> float:
        """min_{a,b} E (f - a.x - b)^2 = sum_{|alpha| >= 2} b_alpha^2."""
        return tail_weight(self, 2)

    def as_handle(self, name: str = "spectral", bounded: bool = False) -> FunctionHandle:
        """FunctionHandle whose OU smoothing is exact (diagonal action on the basis)."""
        def smoothing(t, x, order=2):
            g = semigroup_spectral(self, t)
            out = [g(x)]
            if order >= 1:
                out.append(g.gradient(x))
            if order >= 2:
                out.append(g.hessian(x))
            return tuple(out)

        return FunctionHandle(n=self.n, evaluator=self.__call__, name=name,
                              gradient=self.gradient, hessian=self.hessian, smoothing=smoothing,
                              bounded=bounded, known_mean=self.mean, meta={"kind": "spectral"})

    def to_json(self) -> str:
        entries = [{"alpha": list(a), "b": b} for a, b in self.items()]
        return json.dumps({"n": self.n, "max_degree": self.max_degree, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> SpectralFunction:
        d = json.loads(text)
        return cls(d["n"], d["max_degree"], {tuple(e["alpha"]): e["b"] for e in d["entries"]})


def project(f, max_degree: int, rule: QuadratureRule) -> SpectralFunction:
    """Hermite coefficients b_alpha = E[f G_alpha] for |alpha| <= max_degree.

    The rule must integrate polynomials of degree 2 * max_degree exactly;
    Monte Carlo rules (exactness 0) are refused for any positive degree.
    """
    if rule.exactness_degree < 2 * max_degree:
        raise QuadratureError(
            f"rule exactness {rule.exactness_degree} is too coarse for degree {max_degree} "
            f"(needs >= {2 * max_degree})")
    if isinstance(f, FunctionHandle):
        vals = f(rule.nodes, check=False)
    else:
        vals = np.asarray(f(rule.nodes), dtype=float)
    wf = rule.weights * vals
    tables = [hermite_table(rule.nodes[:, i], max_degree, normalized=True) for i in range(rule.n)]
    coeffs = {}
    for a in multi_indices(rule.n, max_degree):
        g = np.ones(rule.size)
        for i, ai in enumerate(a):
            if ai:
                g = g * tables[i][:, ai]
        coeffs[a] = float(wf @ g)
    return SpectralFunction(rule.n, max_degree, coeffs)


def semigroup_spectral(f: SpectralFunction, t: float) -> SpectralFunction:
    """P_t f: b_alpha -> exp(-|alpha| t) b_alpha."""
    if t < 0:
        raise ValueError("negative time: use inverse_semigroup_spectral")
    return f.scaled(lambda k: math.exp(-k * t))


class UnboundedInverseError(ArithmeticError):
    """Inverse semigroup amplification exceeds the allowed guard."""


def inverse_semigroup_spectral(f: SpectralFunction, t: float, guard: float = math.exp(10.0)) -> SpectralFunction:
    """P_t^{-1} f: b_alpha -> exp(+|alpha| t) b_alpha, refused above ``guard``.

    P_t^{-1} is unbounded on L^2, so the amplification exp(|alpha| t) of the
    highest supported degree must not exceed ``guard``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    top = max((a.order for a in f.coefficients), default=0)
    if top * t > math.log(guard):
        raise UnboundedInverseError(
            f"amplification exp({top}*{t}) = {math.exp(min(top * t, 700)):.3g} exceeds guard {guard:.3g}")
    return f.scaled(lambda k: math.exp(k * t))


def tail_weight(f: SpectralFunction, N: int) -> float:
    """sum_{|alpha| >= N} b_alpha^2."""
    return float(sum(b * b for a, b in f.items() if a.order >= N))
