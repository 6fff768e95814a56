from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bobkov import zoo as Z
from bobkov.quadrature import QuadratureError, gauss_hermite_rule, grid_rule, integrate, mc_rule


def test_two_point_rule():
    r = gauss_hermite_rule(1, 2)
    assert np.allclose(np.sort(r.nodes[:, 0]), [-1.0, 1.0], atol=1e-15)
    assert np.allclose(r.weights, 0.5, atol=1e-15)


@given(st.integers(1, 3), st.integers(2, 12))
def test_weights_sum_to_one(n, m):
    r = gauss_hermite_rule(n, m)
    assert abs(r.weights.sum() - 1.0) < 1e-13
    assert np.all(r.weights > 0)


@pytest.mark.parametrize("m", [2, 3, 5, 10, 40])
def test_gaussian_moments(m):
    r = gauss_hermite_rule(1, m)
    x = r.nodes[:, 0]
    for k in range(0, r.exactness_degree + 1, 2):
        double_fact = math.prod(range(k - 1, 0, -2)) if k else 1
        assert r.weights @ x ** k == pytest.approx(double_fact, rel=1e-10)
    assert abs(r.weights @ x) < 1e-14


def test_mixed_monomials_exact_2d():
    r = gauss_hermite_rule(2, 5)
    x, y = r.nodes.T
    assert r.weights @ (x ** 2 * y ** 4) == pytest.approx(3.0, rel=1e-12)
    assert abs(r.weights @ (x ** 3 * y ** 2)) < 1e-13


def test_node_overflow_refused():
    with pytest.raises(QuadratureError, match="nodes"):
        gauss_hermite_rule(8, 10)


def test_mc_examples():
    r = mc_rule(1, 10 ** 6, seed=3)
    assert integrate(r, lambda x: np.ones(len(x)))[0] == 1.0
    assert abs(integrate(r, lambda x: x[:, 0])[0]) < 5e-3
    v, se = integrate(mc_rule(2, 100_000, seed=1), lambda x: (x[:, 0] <= 0).astype(float))
    assert abs(v - 0.5) <= 3 * se
    assert se <= 1 / math.sqrt(100_000)


def test_mc_deterministic():
    a, b = mc_rule(3, 1000, seed=11), mc_rule(3, 1000, seed=11)
    assert np.array_equal(a.nodes, b.nodes)
    assert not np.array_equal(a.nodes, mc_rule(3, 1000, seed=12).nodes)


def test_integrate_polynomial_error_zero_and_nonfinite_named():
    r = gauss_hermite_rule(1, 3)
    assert integrate(r, lambda x: x[:, 0] ** 4) == (pytest.approx(3.0), 0.0)
    with pytest.raises(FloatingPointError, match="node"):
        with np.errstate(divide="ignore"):
            integrate(r, lambda x: 1.0 / x[:, 0])


def test_grid_rule_moments():
    r = grid_rule(1, 0.05)
    x = r.nodes[:, 0]
    assert r.weights @ x ** 2 == pytest.approx(1.0, abs=1e-13)
    assert r.weights @ x ** 4 == pytest.approx(3.0, abs=1e-11)


def test_companion_is_coarser():
    r = gauss_hermite_rule(2, 40)
    assert r.companion().params["points_per_axis"] == 30
    assert mc_rule(1, 10, 0).companion() is None


def test_gauss_hermite_and_mc_agree_on_zoo():
    for z in Z.function_zoo():
        n = z.handle.n
        gh, _ = integrate(gauss_hermite_rule(n, 40 if n < 3 else 20), lambda x: z.handle(x, check=False))
        mc, se = integrate(mc_rule(n, 200_000, seed=5), lambda x: z.handle(x, check=False))
        assert abs(gh - mc) <= 4 * se + 1e-12, z.key


def test_csv_dump(tmp_path):
    p = tmp_path / "nodes.csv"
    gauss_hermite_rule(2, 3).to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x1,x2,weight" and len(lines) == 10
