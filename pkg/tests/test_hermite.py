from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bobkov import zoo as Z
from bobkov.hermite import (MultiIndex, SpectralFunction, UnboundedInverseError, hermite_eval, hermite_partial,
                            inverse_semigroup_spectral, multi_indices, project, semigroup_spectral, tail_weight)
from bobkov.quadrature import QuadratureError, gauss_hermite_rule, mc_rule
from bobkov.scalar import Phi

coeffs = st.lists(st.floats(-2, 2, allow_nan=False), min_size=15, max_size=15)


def poly2(values) -> SpectralFunction:
    return SpectralFunction(2, 4, dict(zip(multi_indices(2, 4), values)))


def test_hermite_eval_examples():
    assert hermite_eval((0,), [[3.7]]) == pytest.approx(1.0)
    assert hermite_eval((2,), [[0.0]]) == pytest.approx(-1.0)
    assert hermite_eval((1, 1), [[2.0, 3.0]]) == pytest.approx(6.0)


def test_hermite_partial_examples():
    assert hermite_partial((3,), 0) == (3, MultiIndex((2,)))
    assert hermite_partial((0, 2), 0)[0] == 0
    with pytest.raises(IndexError):
        hermite_partial((1, 1), 5)


def test_multi_index_factorial_large():
    a = MultiIndex((20, 20))
    assert a.factorial == math.factorial(20) ** 2
    assert a.log_factorial == pytest.approx(2 * math.lgamma(21))


def test_derivative_second_moment():
    # d_i H_alpha = alpha_i H_{S_i alpha}, so E (d_i H_alpha)^2 = alpha_i^2 (alpha - e_i)! = alpha_i alpha!
    r = gauss_hermite_rule(2, 12)
    for a in multi_indices(2, 5):
        for i in range(2):
            c, low = hermite_partial(a, i)
            lhs = r.weights @ (c * hermite_eval(low, r.nodes)) ** 2 if c else 0.0
            assert lhs == pytest.approx(a[i] * a.factorial, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_orthonormality(n):
    r = gauss_hermite_rule(n, 8)
    idx = multi_indices(n, 6)
    G = np.stack([hermite_eval(a, r.nodes, normalized=True) for a in idx], axis=1)
    gram = (G * r.weights[:, None]).T @ G
    assert np.max(np.abs(gram - np.eye(len(idx)))) < 1e-10


def test_project_examples():
    r = gauss_hermite_rule(2, 8)
    f = project(lambda x: x[:, 0], 2, r)
    assert abs(f[(1, 0)]) == pytest.approx(1.0, abs=1e-12)
    assert sum(b * b for a, b in f.items()) == pytest.approx(1.0, abs=1e-12)
    g = project(lambda x: x[:, 0] * x[:, 1], 2, r)
    assert list(g.coefficients) == [(1, 1)] and abs(g[(1, 1)]) == pytest.approx(1.0)
    h = project(lambda x: Phi(x[:, 0]), 0, gauss_hermite_rule(1, 20))
    assert h.mean == pytest.approx(0.5, abs=1e-14)


def test_project_refuses_coarse_rule():
    with pytest.raises(QuadratureError, match="too coarse"):
        project(lambda x: x[:, 0], 5, gauss_hermite_rule(1, 4))
    with pytest.raises(QuadratureError):
        project(lambda x: x[:, 0], 1, mc_rule(1, 100, 0))


@settings(max_examples=30, deadline=None)
@given(coeffs)
def test_polynomial_round_trip_and_parseval(values):
    f = poly2(values)
    r = gauss_hermite_rule(2, 10)
    g = project(f, 4, r)
    diff = sum((f[a] - g[a]) ** 2 for a in multi_indices(2, 4))
    assert diff < 1e-20 + 1e-20 * f.second_moment()
    assert abs(r.weights @ f(r.nodes) ** 2 - f.second_moment()) < 1e-10 * max(1.0, f.second_moment())


@settings(max_examples=30, deadline=None)
@given(coeffs, st.floats(0, 3), st.floats(0, 3))
def test_semigroup_property(values, s, t):
    f = poly2(values)
    a = semigroup_spectral(semigroup_spectral(f, s), t)
    b = semigroup_spectral(f, s + t)
    for k in multi_indices(2, 4):
        assert a[k] == pytest.approx(b[k], rel=1e-12, abs=1e-15)


def test_semigroup_examples():
    f = SpectralFunction(2, 2, {(0, 0): 0.3, (1, 0): 1.0})
    assert semigroup_spectral(f, 0.0).coefficients == f.coefficients
    g = semigroup_spectral(f, 0.7)
    assert g[(1, 0)] == pytest.approx(math.exp(-0.7)) and g[(0, 0)] == 0.3
    with pytest.raises(ValueError):
        semigroup_spectral(f, -1.0)


def test_inverse_round_trip_and_guard():
    f = poly2(np.linspace(-1, 1, 15))
    back = inverse_semigroup_spectral(semigroup_spectral(f, 0.4), 0.4)
    for a in multi_indices(2, 4):
        assert back[a] == pytest.approx(f[a], abs=1e-12)
    high = SpectralFunction(1, 20, {(20,): 1.0})
    with pytest.raises(UnboundedInverseError):
        inverse_semigroup_spectral(high, 1.0)
    const = SpectralFunction(1, 0, {(0,): 0.4})
    assert inverse_semigroup_spectral(const, 50.0)[(0,)] == 0.4


def test_eigenrelation_pointwise():
    # P_t G_alpha evaluated by inner Gauss-Hermite equals e^{-|alpha| t} G_alpha
    outer = gauss_hermite_rule(2, 10)
    inner = gauss_hermite_rule(2, 10)
    for t in (0.1, 1.0):
        e, s = math.exp(-t), math.sqrt(1 - math.exp(-2 * t))
        for a in multi_indices(2, 6):
            Zp = e * outer.nodes[:, None, :] + s * inner.nodes[None, :, :]
            pt = hermite_eval(a, Zp.reshape(-1, 2), normalized=True).reshape(outer.size, -1) @ inner.weights
            resid = pt - math.exp(-a.order * t) * hermite_eval(a, outer.nodes, normalized=True)
            assert math.sqrt(outer.weights @ resid ** 2) < 1e-8


def test_tail_weight_examples():
    f = poly2(np.linspace(-1, 1, 15))
    assert tail_weight(f, 0) == pytest.approx(f.second_moment())
    assert tail_weight(f, 5) == 0.0
    tails = [tail_weight(f, N) for N in range(6)]
    assert all(a >= b for a, b in zip(tails, tails[1:]))


def test_tail_weight_phi_bound_shape():
    f = project(lambda x: Phi(x[:, 0]), 12, gauss_hermite_rule(1, 40))
    K = 1 / (2 * math.sqrt(math.pi))
    c = max(tail_weight(f, N) * math.sqrt(N) / K for N in range(1, 13))
    assert 0 < c < 1


def test_json_round_trip_bit_exact():
    f = Z.random_polynomial(3)
    g = SpectralFunction.from_json(f.to_json())
    assert g.coefficients == f.coefficients and g.to_json() == f.to_json()
    orders = [a.order for a in g.coefficients]
    assert orders == sorted(orders)


def test_spectral_derivatives_match_finite_differences():
    f = Z.random_polynomial(8)
    x = np.array([[0.3, -0.7], [1.1, 0.4]])
    h = 1e-5
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (f(x + e) - f(x - e)) / (2 * h)
        assert np.allclose(f.gradient(x)[:, i], fd, rtol=1e-7, atol=1e-8)
        fdg = (f.gradient(x + e) - f.gradient(x - e)) / (2 * h)
        assert np.allclose(f.hessian(x)[:, :, i], fdg, rtol=1e-6, atol=1e-7)
