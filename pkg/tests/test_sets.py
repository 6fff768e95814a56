from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from bobkov import rays as R
from bobkov import sets as S
from bobkov import zoo as Z
from bobkov.quadrature import mc_rule
from bobkov.scalar import Phi, phi
from bobkov.semigroup import central_difference


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-0.95, 0.95))
def test_bvn_against_scipy(h, k, rho):
    ref = multivariate_normal([0, 0], [[1, rho], [rho, 1]]).cdf([h, k])
    assert S.bvn_cdf(h, k, rho) == pytest.approx(ref, abs=1e-7)


def test_bvn_negative_zero():
    assert S.bvn_cdf(1.0, -0.0, 0.0) == pytest.approx(0.5 * Phi(1.0), abs=1e-15)
    assert S.bvn_cdf(-0.0, -1.0, 0.3) == pytest.approx(S.bvn_cdf(0.0, -1.0, 0.3), abs=1e-15)


def test_bvn_special_values():
    assert S.bvn_cdf(0.0, 0.0, 0.0) == pytest.approx(0.25, abs=1e-16)
    assert S.bvn_cdf(0.0, 0.0, 0.5) == pytest.approx(0.25 + math.asin(0.5) / (2 * math.pi), abs=1e-15)
    assert S.bvn_cdf(0.3, 1.1, 0.0) == pytest.approx(Phi(0.3) * Phi(1.1), abs=1e-15)


def test_closed_form_measures_and_perimeters():
    assert S.halfspace([-1.0, 0.0], 0.5).measure == pytest.approx(Phi(0.5))
    assert S.halfspace([-1.0, 0.0], 0.5).perimeter == pytest.approx(phi(0.5))
    ball = S.ball(1.0)
    assert ball.measure == pytest.approx(1 - math.exp(-0.5), abs=1e-15)
    assert ball.perimeter == pytest.approx(math.exp(-0.5), abs=1e-15)
    slab = S.slab(0.5)
    assert slab.measure == pytest.approx(Phi(0.5) - Phi(-0.5))
    assert slab.perimeter == pytest.approx(2 * phi(0.5))
    w = S.wedge(0.5)
    assert w.measure == pytest.approx((math.pi - 0.5) / (2 * math.pi), abs=1e-14)


@pytest.mark.parametrize("key", ["ball_1", "slab_0.5", "quadrant", "wedge_0.5", "union_0.4", "halfspace_0.5"])
def test_ray_measure_matches_closed_form(key):
    A = Z.get_set(key).set
    assert R.set_measure(A.membership) == pytest.approx(A.measure, abs=1e-8)


@pytest.mark.parametrize("key", ["ball_1", "slab_0.5", "quadrant", "wedge_0.5", "union_0.4"])
def test_membership_matches_mc(key):
    A = Z.get_set(key).set
    r = mc_rule(2, 100_000, seed=2)
    p = A.contains(r.nodes).mean()
    assert abs(p - A.measure) < 4 * math.sqrt(p * (1 - p) / r.size)


@pytest.mark.parametrize("key", ["ball_1", "slab_0.5", "quadrant", "wedge_0.5", "union_0.4"])
def test_smoothing_hooks_differentiate_consistently(key):
    A = Z.get_set(key).set
    x = np.array([[0.2, -0.5], [-0.9, 0.4], [1.3, 1.1]])
    t = 0.3
    v = lambda p: A.smoothing(t, p, 0)[0]  # noqa: E731
    g = lambda p: A.smoothing(t, p, 1)[1]  # noqa: E731
    assert np.allclose(central_difference(v, x), A.smoothing(t, x, 1)[1], rtol=1e-5, atol=1e-8)
    assert np.allclose(central_difference(g, x), A.smoothing(t, x, 2)[2], rtol=1e-5, atol=1e-8)


def test_smoothing_hook_against_brute_force():
    A = S.ball(1.0)
    t, x = 0.4, np.array([0.7, -0.2])
    e, s = math.exp(-t), math.sqrt(1 - math.exp(-2 * t))
    oracle = R.set_measure(lambda y: np.linalg.norm(e * x + s * y, axis=1) <= 1.0)
    assert A.smoothing(t, x[None], 0)[0][0] == pytest.approx(oracle, abs=1e-8)


def test_polygon_distance_exact():
    Q = Z.quadrant()
    pts = np.array([[1.0, 2.0], [-1.0, 3.0], [2.0, -5.0], [-1.0, -1.0]])
    assert np.allclose(Q.distance(pts), [math.sqrt(5), 3.0, 2.0, 0.0])


def test_integrate_over_oracle():
    mp.mp.dps = 20
    val = R.integrate_over(lambda y: y[:, 0] >= -0.3, lambda y: Phi(y[:, 1]))
    assert val == pytest.approx(float(mp.ncdf(0.3)) * 0.5, abs=1e-13)


def test_complement_and_empty():
    A = S.ball(1.0)
    assert A.complement().measure == pytest.approx(math.exp(-0.5))
    E = S.empty_set(2)
    assert R.set_measure(E.membership) == 0.0


def test_wedge_degenerates_to_halfspace():
    w = S.wedge(0.0)
    assert w.measure == pytest.approx(0.5)
    assert w.contains(np.array([[-1.0, 5.0], [1.0, 0.0]])).tolist() == [True, False]
