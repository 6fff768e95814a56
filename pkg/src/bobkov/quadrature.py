"""Integration against the standard Gaussian measure on R^n.

Every rule stores nodes and *probability* weights (summing to one), so an
expectation E g(X), X ~ N(0, I_n), is just ``weights @ g(nodes)``.

Three rule families are provided:

* tensor Gauss-Hermite (probabilists' weight, Golub-Welsch nodes),
* seeded Monte Carlo using the counter-based Philox generator,
* a truncated trapezoidal grid, for integrands with sharp but smooth
  transition layers (smoothed indicators at small times).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

MAX_NODES = 10_000_000


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    n: int
    nodes: np.ndarray  # (N, n)
    weights: np.ndarray  # (N,)
    exactness_degree: int
    kind: str
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def describe(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "size": self.size,
             "exactness_degree": self.exactness_degree}
        if self.seed is not None:
            d["seed"] = self.seed
        d.update(self.params)
        return d

    def max_abs_node(self) -> float:
        return float(np.max(np.abs(self.nodes))) if self.size else 0.0

    def companion(self) -> QuadratureRule | None:
        """A coarser rule of the same family, used for refinement error estimates.

        Returns None for Monte Carlo rules, whose error is the sample
        standard error instead.
        """
        if self.kind == "gauss-hermite":
            m = self.params["points_per_axis"]
            return gauss_hermite_rule(self.n, max(2, (3 * m) // 4))
        if self.kind == "grid":
            return grid_rule(self.n, self.params["spacing"] * 1.5, self.params["half_width"])
        return None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i + 1}" for i in range(self.n)] + ["weight"])
            for x, wt in zip(self.nodes, self.weights):
                w.writerow([repr(float(v)) for v in x] + [repr(float(wt))])


def gauss_hermite_1d(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and probability weights of the m-point rule for N(0, 1).

    Golub-Welsch: the nodes are the eigenvalues of the Jacobi matrix of the
    monic probabilists' Hermite recurrence He_{k+1} = x He_k - k He_{k-1};
    the weights are the squared first components of the eigenvectors.
    """
    if m < 1:
        raise QuadratureError(f"points_per_axis must be >= 1, got {m}")
    if m == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, m, dtype=float))
    x, v = eigh_tridiagonal(np.zeros(m), off)
    w = v[0, :] ** 2
    # symmetrise away eigensolver round-off
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w / w.sum()


def _tensor(n: int, x1: np.ndarray, w1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    count = x1.size ** n
    if count > MAX_NODES:
        raise QuadratureError(f"tensor rule would need {count} nodes (limit {MAX_NODES})")
    grids = np.meshgrid(*([x1] * n), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([w1] * n), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


def gauss_hermite_rule(n: int, points_per_axis: int) -> QuadratureRule:
    """Tensor Gauss-Hermite rule, exact for polynomials of degree <= 2m - 1 per axis."""
    if n < 1:
        raise QuadratureError(f"dimension must be >= 1, got {n}")
    count = points_per_axis ** n
    if count > MAX_NODES:
        raise QuadratureError(f"tensor rule would need {count} nodes (limit {MAX_NODES})")
    x1, w1 = gauss_hermite_1d(points_per_axis)
    nodes, weights = _tensor(n, x1, w1)
    return QuadratureRule(n, nodes, weights, 2 * points_per_axis - 1, "gauss-hermite",
                          params={"points_per_axis": points_per_axis})


def mc_rule(n: int, samples: int, seed: int, antithetic: bool = False) -> QuadratureRule:
    """Equal-weight Monte Carlo rule from a Philox stream; bit-reproducible per seed."""
    if samples < 1:
        raise QuadratureError(f"samples must be >= 1, got {samples}")
    rng = np.random.Generator(np.random.Philox(seed))
    if antithetic:
        half = rng.standard_normal(((samples + 1) // 2, n))
        nodes = np.concatenate([half, -half])[:samples]
    else:
        nodes = rng.standard_normal((samples, n))
    weights = np.full(samples, 1.0 / samples)
    return QuadratureRule(n, nodes, weights, 0, "monte-carlo", seed=seed,
                          params={"samples": samples, "antithetic": antithetic})


def grid_rule(n: int, spacing: float, half_width: float = 8.0) -> QuadratureRule:
    """Trapezoidal grid on [-L, L]^n with Gaussian density folded into the weights.

    For smooth, rapidly decaying integrands the trapezoidal rule on the line
    converges geometrically in 1/spacing; the truncation at L = 8 discards
    mass below 1e-15.
    """
    k = int(math.floor(half_width / spacing))
    x1 = spacing * np.arange(-k, k + 1, dtype=float)
    w1 = np.exp(-0.5 * x1 * x1)
    w1 /= w1.sum()
    nodes, weights = _tensor(n, x1, w1)
    return QuadratureRule(n, nodes, weights, 0, "grid",
                          params={"spacing": spacing, "half_width": half_width})


def integrate(rule: QuadratureRule, g: Callable[[np.ndarray], np.ndarray]) -> tuple:
    """Return (value, error_estimate) for E g(X).

    ``g`` maps an (N, n) array of points to an (N,) or (N, ...) array.
    The error estimate is the sample standard error for Monte Carlo rules
    and 0 for deterministic rules (exact for polynomials up to the rule's
    exactness degree; use ``QuadratureRule.companion`` for a refinement
    estimate otherwise).
    """
    vals = np.asarray(g(rule.nodes), dtype=float)
    if vals.shape[0] != rule.size:
        raise QuadratureError(f"integrand returned {vals.shape[0]} values for {rule.size} nodes")
    finite = np.isfinite(vals.reshape(rule.size, -1)).all(axis=1)
    if not finite.all():
        i = int(np.argmin(finite))
        raise FloatingPointError(f"integrand is not finite at node {i}: {rule.nodes[i].tolist()}")
    if rule.kind == "monte-carlo":
        # the plain mean keeps E 1 = 1 exact
        value = vals.mean(axis=0)
    else:
        value = np.tensordot(rule.weights, vals, axes=(0, 0))
    if rule.kind == "monte-carlo":
        if rule.size > 1:
            err = np.std(vals, axis=0, ddof=1) / math.sqrt(rule.size)
        else:
            err = np.full_like(value, np.inf)
    else:
        err = np.zeros_like(value)
    if np.ndim(value) == 0:
        return float(value), float(err)
    return value, err
