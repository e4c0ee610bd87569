from __future__ import annotations

import numpy as np
import pytest

from src.bergman_geometry.elliptic import (
    axis_symmetry_residual,
    lattice_distance,
    make_lattice,
    ode_residual,
    w_zeta,
    wp,
    wp_jet,
    wp_lattice_sum,
    wp_prime,
)
from src.bergman_geometry.errors import DomainError, PoleProximityError, SeriesNotConverged
from src.bergman_geometry.parameters import Tolerances

RADII = (0.05, 0.1, 0.3, 0.5)
SAMPLE_U = (0.3 + 0.7j, -0.8 + 2.1j, 0.45 - 1.3j, 0.1 + 0.2j)


def test_half_periods_for_r_tenth() -> None:
    lat = make_lattice(0.1)
    assert lat.omega1 == pytest.approx(np.log(10.0), rel=1e-15)
    assert lat.omega2 == pytest.approx(np.pi * 1j)
    assert lat.nome_q == pytest.approx(np.exp(-np.pi**2 / np.log(10.0)), rel=1e-12)
    assert lat.nome_q == pytest.approx(0.013756, rel=1e-3)


@pytest.mark.parametrize("r", RADII)
def test_legendre_relation(r: float) -> None:
    assert make_lattice(r).legendre_residual < 1e-10


@pytest.mark.parametrize("r", RADII)
def test_differential_equation(r: float) -> None:
    lat = make_lattice(r)
    for u in SAMPLE_U:
        assert ode_residual(lat, u) < 1e-9


@pytest.mark.parametrize("r", RADII)
def test_matches_lattice_sum(r: float, rng: np.random.Generator) -> None:
    lat = make_lattice(r)
    checked = 0
    while checked < 10:
        u = complex(rng.uniform(-0.95, 0.95) * lat.omega1, rng.uniform(-0.95, 0.95) * np.pi)
        if lattice_distance(lat, u) <= 0.1:
            continue
        exact = wp(lat, u)
        if abs(exact) <= 0.5:
            continue
        assert abs(exact - wp_lattice_sum(lat, u)) / abs(exact) < 1e-8
        checked += 1


def test_even_and_periodic() -> None:
    lat = make_lattice(0.3)
    u = 0.37 + 0.91j
    assert wp(lat, -u) == pytest.approx(wp(lat, u), rel=1e-12)
    assert wp(lat, u + 2 * lat.omega1) == pytest.approx(wp(lat, u), rel=1e-10)
    assert wp(lat, u + 2 * lat.omega2) == pytest.approx(wp(lat, u), rel=1e-10)
    assert wp_prime(lat, -u) == pytest.approx(-wp_prime(lat, u), rel=1e-12)


def test_laurent_expansion_at_origin() -> None:
    lat = make_lattice(0.3)
    u = 1e-2 * (1 + 1j)
    expected = 1.0 / u**2 + lat.g2 * u**2 / 20.0
    assert abs(wp(lat, u) - expected) < 1e-8 * abs(expected)


def test_derivatives_agree_with_differences() -> None:
    lat = make_lattice(0.5)
    u, h = 0.21 + 0.63j, 1e-5
    fd_prime = (wp(lat, u + h) - wp(lat, u - h)) / (2 * h)
    assert wp_prime(lat, u) == pytest.approx(fd_prime, rel=1e-7)
    fd_zeta = (w_zeta(lat, u + h) - w_zeta(lat, u - h)) / (2 * h)
    assert -fd_zeta == pytest.approx(wp(lat, u), rel=1e-7)
    p0, p1, p2, p3 = wp_jet(lat, u)
    fd_second = (wp_prime(lat, u + h) - wp_prime(lat, u - h)) / (2 * h)
    assert p2 == pytest.approx(fd_second, rel=1e-7)
    assert p3 == pytest.approx(12 * p0 * p1)


def test_zeta_quasi_periodicity() -> None:
    lat = make_lattice(0.3)
    u = 0.2 + 0.4j
    assert w_zeta(lat, u + 2 * lat.omega1) == pytest.approx(w_zeta(lat, u) + 2 * lat.eta1, rel=1e-12)
    assert w_zeta(lat, u + 2 * lat.omega2) == pytest.approx(w_zeta(lat, u) + 2 * lat.eta2, rel=1e-12)


@pytest.mark.parametrize("r", RADII)
def test_real_on_rectangle_edges(r: float) -> None:
    assert axis_symmetry_residual(make_lattice(r), samples=12) < 1e-9


def test_pole_guard() -> None:
    lat = make_lattice(0.3)
    tol = Tolerances(pole_guard=1e-6)
    with pytest.raises(PoleProximityError):
        wp(lat, 2 * lat.omega1 + 1e-8, tol)
    with pytest.raises(PoleProximityError):
        w_zeta(lat, 2 * lat.omega2 - 1e-9j, tol)
    assert lattice_distance(lat, 2 * lat.omega1 + 0.01) == pytest.approx(0.01)


def test_radius_out_of_range() -> None:
    with pytest.raises(DomainError):
        make_lattice(1.2)
    with pytest.raises(DomainError):
        make_lattice(0.0)


def test_series_cap_too_small() -> None:
    with pytest.raises(SeriesNotConverged):
        make_lattice(0.05, Tolerances(series_cap=3))
