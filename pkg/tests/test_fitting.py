from __future__ import annotations

import json
import math

import numpy as np
import pytest

from bobkov import fitting as F
from bobkov import sets as S
from bobkov import zoo as Z
from bobkov.quadrature import mc_rule
from bobkov.semigroup import k_t


def rotation(t: float) -> np.ndarray:
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


QUADRANT_NORMALS = np.array([[-1.0, 0.0], [0.0, -1.0]])


def test_recovers_phi_affine():
    r = F.fit_phi_affine(Z.phi_affine([2.0, 0.0], -1.0))
    assert np.allclose(r.a, [2.0, 0.0], atol=1e-3) and r.b == pytest.approx(-1.0, abs=1e-3)
    assert r.objective < 1e-10 and r.sentinel is None


def test_zero_function_returns_sentinel():
    r = F.fit_phi_affine(Z.constant(0.0, 2))
    assert r.sentinel == "zero" and r.b == -math.inf and r.norm_a == 0.0
    assert json.loads(r.to_json())["b"] == "-inf"
    assert r.halfspace.measure == 0.0


def test_smoothed_halfspace_recovers_scaled_normal():
    # P_t 1{x1 <= 0} = Phi(-k_t x1)
    t = 0.1
    f = S.smoothed_indicator(S.halfspace([-1.0, 0.0], 0.0), t)
    r = F.fit_phi_affine(f)
    assert np.allclose(r.a, [-float(k_t(t)), 0.0], rtol=1e-3, atol=1e-3)
    assert r.objective < 1e-10


def test_fit_records_all_restarts():
    r = F.fit_phi_affine(Z.get_function("phi_product").handle, restarts=6)
    assert r.restarts == len(r.trace) == 6
    assert r.objective <= min(c["objective"] for c in r.trace) + F.TIE


@pytest.mark.parametrize("theta", [0.3, 1.1, 2.5])
def test_rotated_halfspace_recovery(theta):
    a = rotation(theta) @ np.array([-1.0, 0.0])
    A = S.halfspace(a, 0.0)
    r = F.fit_halfspace_set(A)
    assert F.symmetric_difference(A, r.halfspace) < 1e-3
    assert np.allclose(r.a, a, atol=1e-3)


def test_origin_halfspace_symmetric_difference_is_angle_over_pi():
    theta = 0.6
    A = S.halfspace(rotation(theta) @ np.array([-1.0, 0.0]), 0.0)
    B = F.HalfSpace((-1.0, 0.0), 0.0)
    assert F.symmetric_difference(A, B) == pytest.approx(theta / math.pi, abs=1e-8)
    r = mc_rule(2, 400_000, 9)
    mc = np.mean(A.contains(r.nodes) != B.contains(r.nodes))
    assert abs(mc - theta / math.pi) < 4 * math.sqrt(0.2 / r.size)


def test_rotation_equivariance():
    offsets = [0.3, -0.2]
    base = F.fit_halfspace_set(S.intersection(QUADRANT_NORMALS.tolist(), offsets))
    for t in (0.4, 1.3, 2.9):
        R = rotation(t)
        r = F.fit_halfspace_set(S.intersection((QUADRANT_NORMALS @ R.T).tolist(), offsets))
        assert abs(r.objective - base.objective) < 1e-6
        assert np.allclose(R.T @ np.array(r.a), base.a, atol=1e-3)
        assert r.b == pytest.approx(base.b, abs=1e-3)


def test_ball_baseline_frozen():
    assert F.fit_halfspace_set(S.ball(2.0)).objective == pytest.approx(0.11048737168095513, abs=1e-9)


def test_wedge_fit_is_an_edge_halfspace():
    r = F.fit_halfspace_set(S.wedge(0.5))
    assert r.objective == pytest.approx(0.046583, abs=1e-5)
    assert r.objective < F.symmetric_difference(S.wedge(0.5), F.HalfSpace((-1.0, 0.0), 0.0))


def test_round_to_halfspace_examples():
    assert F.round_to_halfspace([3.0, 4.0], 10.0) == F.HalfSpace((0.6, 0.8), 2.0)
    empty = F.round_to_halfspace([0.0, 0.0], -2.0)
    assert empty.degenerate and empty.measure == 0.0
    assert F.round_to_halfspace([0.0, 0.0], math.inf).measure == 1.0
    assert F.round_to_halfspace([2.0, 0.0], 0.0).contains([[1.0, 0.0], [-1.0, 0.0]]).tolist() == [True, False]


def test_rounding_needs_factor_four():
    # A empty, g = Phi(x1): rounding gives B = {x1 >= 0} with gamma(B) = 1/2 > 1/3 = E g^2
    gap = F.rounding_gap(S.empty_set(2), [1.0, 0.0], 0.0)
    assert gap["symmetric_difference"] == pytest.approx(0.5, abs=1e-12)
    assert gap["l2_distance_sq"] == pytest.approx(1 / 3, abs=1e-12)
    assert gap["margin"] > 0 > gap["margin_factor_one"]


def test_halfspace_to_set_measure():
    B = F.HalfSpace((0.0, 1.0), 0.5)
    assert B.to_set().measure == pytest.approx(B.measure)
    assert F.HalfSpace((0.0, 0.0), 1.0).to_set().contains([[5.0, 5.0]]).all()
