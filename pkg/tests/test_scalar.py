from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bobkov.scalar import DomainError, Phi, Phi_inv, iso_I, iso_I_prime, phi

mp.mp.dps = 40


def mp_Phi(x: float) -> float:
    return float(mp.ncdf(mp.mpf(x)))


def test_phi_values():
    assert phi(0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert phi(1.0) == pytest.approx(0.24197072451914337, rel=1e-15)
    assert phi(-1.0) == phi(1.0)


def test_Phi_values():
    assert Phi(0.0) == 0.5
    assert Phi(np.inf) == 1.0
    assert Phi(1.959963984540054) == pytest.approx(0.975, abs=1e-15)


@pytest.mark.parametrize("x", [-30.0, -12.0, -5.0, -1.5, -0.3, 0.7, 2.0, 6.0])
def test_Phi_relative_error_against_high_precision(x):
    assert abs(Phi(x) - mp_Phi(x)) <= 1e-14 * mp_Phi(x)


def test_Phi_inv_values():
    assert Phi_inv(0.5) == 0.0
    assert Phi_inv(0.975) == pytest.approx(1.959963984540054, abs=1e-14)
    assert Phi_inv(0.2) == pytest.approx(-Phi_inv(0.8), abs=1e-15)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_Phi_inv_domain_error_names_bound(p):
    with pytest.raises(DomainError, match="p > 0" if p <= 0 else "p < 1"):
        Phi_inv(p)


def test_round_trip_log_grid():
    p = np.concatenate([np.logspace(-12, math.log10(0.5), 400), 1 - np.logspace(-12, math.log10(0.5), 400)])
    assert np.max(np.abs(Phi(Phi_inv(p)) - p)) < 1e-13


def test_iso_values_and_endpoints():
    assert iso_I(0.5) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert iso_I_prime(0.5) == 0.0
    assert iso_I(0.0) == 0.0 and iso_I(1.0) == 0.0
    for p in (0.0, 1.0):
        with pytest.raises(DomainError):
            iso_I_prime(p)


def test_iso_asymptotic_ratio_bounded():
    p = 1e-3
    assert 0.9 <= iso_I(p) / (p * math.sqrt(2 * math.log(1 / p))) <= 1.3


def test_iso_prime_is_minus_quantile():
    p = np.linspace(0.01, 0.99, 99)
    assert np.max(np.abs(iso_I_prime(p) + Phi_inv(p))) < 1e-12


def test_iso_prime_matches_derivative():
    p = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (iso_I(p + h) - iso_I(p - h)) / (2 * h)
    assert np.max(np.abs(fd - iso_I_prime(p))) < 1e-7


@given(st.floats(min_value=1e-300, max_value=1 - 1e-16))
def test_iso_symmetric(p):
    assert abs(iso_I(p) - iso_I(1 - p)) < 1e-14 or abs(p - 0.5) > 0.5 - 1e-16


@given(st.floats(min_value=-37.0, max_value=37.0))
def test_phi_Phi_symmetries(x):
    assert phi(x) == phi(-x)
    assert abs(Phi(x) + Phi(-x) - 1.0) < 1e-15


def test_iso_concave_chord():
    rng = np.random.default_rng(7)
    p = np.sort(rng.uniform(0, 1, (10_000, 3)), axis=1)
    p1, p2, p3 = p.T
    lam = np.where(p3 > p1, (p2 - p1) / np.where(p3 > p1, p3 - p1, 1.0), 0.0)
    chord = (1 - lam) * iso_I(p1) + lam * iso_I(p3)
    assert np.all(iso_I(p2) >= chord - 1e-12)


@settings(max_examples=200)
@given(st.floats(min_value=1e-12, max_value=1 - 1e-12))
def test_quantile_monotone_and_round_trip(p):
    assert abs(Phi(Phi_inv(p)) - p) < 1e-13
    assert Phi_inv(min(p * 1.0001, 1 - 1e-13)) >= Phi_inv(p)
