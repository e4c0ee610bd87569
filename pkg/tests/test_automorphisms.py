from __future__ import annotations

import numpy as np
import pytest

from src.bergman_geometry.automorphisms import (
    Automorphism,
    annulus_inversion,
    annulus_rotation,
    ball_unitary,
    disk_mobius,
    identity,
)
from src.bergman_geometry.domains import DomainDescriptor
from src.bergman_geometry.errors import ConfigError

_U = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]]) * np.exp(0.3j)


def _cases() -> list:
    return [
        (disk_mobius(0.3 - 0.2j, 0.7), np.array([0.1 + 0.5j])),
        (annulus_rotation(0.3, 1.1), np.array([0.5 - 0.2j])),
        (annulus_inversion(0.3), np.array([0.45 + 0.3j])),
        (ball_unitary(_U), np.array([0.2 + 0.1j, -0.3j])),
        (identity(DomainDescriptor.polydisc(2)), np.array([0.4, 0.2j])),
    ]


@pytest.mark.parametrize("f,z", _cases())
def test_inverse_undoes_map(f: Automorphism, z: np.ndarray) -> None:
    back = f.inverse()(f(z))
    assert np.allclose(back, z, atol=1e-13)


@pytest.mark.parametrize("f,z", _cases())
def test_image_stays_in_domain(f: Automorphism, z: np.ndarray) -> None:
    assert f.target.contains(f(z))


@pytest.mark.parametrize("f,z", _cases())
def test_jacobian_matches_difference_quotient(f: Automorphism, z: np.ndarray) -> None:
    h = 1e-6
    jac = f.jacobian(z)
    for k in range(z.size):
        e = np.zeros(z.size, dtype=complex)
        e[k] = h
        column = (f(z + e) - f(z - e)) / (2.0 * h)
        assert np.allclose(jac[:, k], column, atol=1e-8)


@pytest.mark.parametrize("f,z", _cases())
def test_second_derivative_matches_jacobian_slope(f: Automorphism, z: np.ndarray) -> None:
    v = np.full(z.size, 0.6 - 0.3j)
    h = 1e-5
    slope = (f.jacobian(z + h * v) - f.jacobian(z - h * v)) @ v / (2.0 * h)
    assert np.allclose(f.second(z, v), slope, atol=1e-7)


def test_conj_map_is_conjugate_image() -> None:
    f = disk_mobius(0.25j, 0.2)
    w = np.array([0.3 - 0.4j])
    assert np.allclose(f.conj_map(np.conj(w)), np.conj(f(w)))


def test_rejects_bad_parameters() -> None:
    with pytest.raises(ConfigError):
        disk_mobius(1.2)
    with pytest.raises(ConfigError):
        ball_unitary(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_missing_inverse_raises() -> None:
    d = DomainDescriptor.disk()
    f = Automorphism("bare", d, d, fmap=lambda z: z, jac=lambda z: np.eye(1), hess=lambda z, v: 0 * v)
    with pytest.raises(ValueError):
        f.inverse()
