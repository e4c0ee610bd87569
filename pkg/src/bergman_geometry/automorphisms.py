from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domains import DomainDescriptor
from .errors import ConfigError
from .points import as_vector

VecMap = Callable[[np.ndarray], np.ndarray]
MatMap = Callable[[np.ndarray], np.ndarray]
HessMap = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Automorphism:
    """
    A built-in biholomorphism f: Ω_src → Ω_dst with its Jacobian
    and the second-derivative contraction D²f(z)[v, v].
    """

    name: str
    source: DomainDescriptor
    target: DomainDescriptor
    fmap: VecMap
    jac: MatMap
    hess: HessMap
    invert: Optional[Callable[[], "Automorphism"]] = None

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.fmap(as_vector(z))

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        return np.atleast_2d(self.jac(as_vector(z)))

    def jacobian_det(self, z: np.ndarray) -> complex:
        return complex(np.linalg.det(self.jacobian(z)))

    def second(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        return as_vector(self.hess(as_vector(z), as_vector(v)))

    def conj_map(self, wbar: np.ndarray) -> np.ndarray:
        """w̄ ↦ f(w)‾, the map induced on the second polarized argument."""
        return np.conj(self(np.conj(as_vector(wbar))))

    def inverse(self) -> "Automorphism":
        if self.invert is None:
            raise ValueError(f"{self.name} has no inverse registered")
        return self.invert()


def identity(domain: DomainDescriptor) -> Automorphism:
    n = domain.dim
    return Automorphism(
        name="identity",
        source=domain,
        target=domain,
        fmap=lambda z: z.copy(),
        jac=lambda z: np.eye(n, dtype=complex),
        hess=lambda z, v: np.zeros(n, dtype=complex),
        invert=lambda: identity(domain),
    )


def disk_mobius(a: complex, theta: float = 0.0) -> Automorphism:
    """φ(z) = e^{iθ}(z − a)/(1 − āz)."""
    a = complex(a)
    if abs(a) >= 1.0:
        raise ConfigError(f"Möbius parameter must satisfy |a| < 1, got {a}")
    u = np.exp(1j * theta)
    s = 1.0 - abs(a) ** 2
    d = DomainDescriptor.disk()
    return Automorphism(
        name=f"mobius(a={a}, theta={theta})",
        source=d,
        target=d,
        fmap=lambda z: u * (z - a) / (1.0 - np.conj(a) * z),
        jac=lambda z: np.array([[u * s / (1.0 - np.conj(a) * z[0]) ** 2]]),
        hess=lambda z, v: np.array([2.0 * np.conj(a) * u * s / (1.0 - np.conj(a) * z[0]) ** 3 * v[0] ** 2]),
        invert=lambda: disk_mobius(-a * u, -theta),
    )


def disk_rotation(theta: float) -> Automorphism:
    return disk_mobius(0.0, theta)


def annulus_rotation(r: float, theta: float) -> Automorphism:
    u = np.exp(1j * theta)
    d = DomainDescriptor.annulus(r)
    return Automorphism(
        name=f"annulus_rotation(theta={theta})",
        source=d,
        target=d,
        fmap=lambda z: u * z,
        jac=lambda z: np.array([[u]]),
        hess=lambda z, v: np.zeros(1, dtype=complex),
        invert=lambda: annulus_rotation(r, -theta),
    )


def annulus_inversion(r: float) -> Automorphism:
    """z ↦ r/z, swapping the two boundary circles."""
    d = DomainDescriptor.annulus(r)
    return Automorphism(
        name="annulus_inversion",
        source=d,
        target=d,
        fmap=lambda z: r / z,
        jac=lambda z: np.array([[-r / z[0] ** 2]]),
        hess=lambda z, v: np.array([2.0 * r / z[0] ** 3 * v[0] ** 2]),
        invert=lambda: annulus_inversion(r),
    )


def ball_unitary(unitary: np.ndarray) -> Automorphism:
    m = np.asarray(unitary, dtype=complex)
    n = m.shape[0]
    if not np.allclose(m.conj().T @ m, np.eye(n), atol=1e-12):
        raise ConfigError("ball automorphism matrix is not unitary")
    d = DomainDescriptor.ball(n)
    return Automorphism(
        name="ball_unitary",
        source=d,
        target=d,
        fmap=lambda z: m @ z,
        jac=lambda z: m,
        hess=lambda z, v: np.zeros(n, dtype=complex),
        invert=lambda: ball_unitary(m.conj().T),
    )

