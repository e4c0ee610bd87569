from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from .errors import DomainError, PoleProximityError, SeriesNotConverged
from .parameters import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

# Series are cut once n³·qⁿ drops below this; every reduced term is bounded by it.
_SERIES_EPS = 1e-17


@dataclass(frozen=True)
class LatticeParams:
    """
    Rectangular lattice with half-periods ω₁ = log(1/r) (real) and ω₂ = πi.

    eta1/eta2 are the increments of the Weierstrass ζ over 2ω₁ and 2ω₂ divided by two
    (ζ(u + 2ωᵢ) = ζ(u) + 2ηᵢ). nome_q = exp(-π²/ω₁); log_q is kept separately
    so that very thin annuli do not underflow.
    """

    r: float
    omega1: float
    omega2: complex
    eta1: float
    eta2: complex
    log_q: float
    nome_q: float
    g2: float
    g3: float
    terms: int

    @property
    def legendre_residual(self) -> float:
        return float(abs(self.eta1 * self.omega2 - self.eta2 * self.omega1 - 0.5j * np.pi))

    @property
    def c(self) -> float:
        """η₁/ω₁, the constant shift in the annulus kernel."""
        return self.eta1 / self.omega1

    @property
    def k(self) -> float:
        return np.pi / (2.0 * self.omega1)


def _term_count(log_q: float, cap: int) -> int:
    for n in range(2, cap + 1):
        if 3.0 * np.log(n) + n * log_q < np.log(_SERIES_EPS):
            return n
    raise SeriesNotConverged(f"nome series needs more than {cap} terms (log q = {log_q:.6g})")


def _lambert(log_q: float, power: int, terms: int) -> float:
    n = np.arange(1, terms + 1, dtype=float)
    q2n = np.exp(2.0 * n * log_q)
    return float(np.sum(n**power * q2n / (1.0 - q2n)))


def make_lattice(r: float, tol: Tolerances = DEFAULT_TOLERANCES) -> LatticeParams:
    if not (0.0 < r < 1.0):
        raise DomainError(f"annulus radius must satisfy 0 < r < 1, got {r}")
    return _make_lattice_cached(float(r), tol.series_cap)


@lru_cache(maxsize=64)
def _make_lattice_cached(r: float, series_cap: int) -> LatticeParams:
    omega1 = float(np.log(1.0 / r))
    omega2 = complex(0.0, np.pi)
    log_q = -np.pi**2 / omega1
    terms = _term_count(log_q, series_cap)

    k = np.pi / (2.0 * omega1)
    eta1 = np.pi**2 / (12.0 * omega1) * (1.0 - 24.0 * _lambert(log_q, 1, terms))
    g2 = (4.0 / 3.0) * k**4 * (1.0 + 240.0 * _lambert(log_q, 3, terms))
    g3 = (8.0 / 27.0) * k**6 * (1.0 - 504.0 * _lambert(log_q, 5, terms))

    # η₂ = ζ(ω₂), evaluated by the same series so the Legendre relation is a genuine check
    eta2 = _zeta_reduced(omega2, omega1, eta1, log_q, terms)

    lat = LatticeParams(
        r=r,
        omega1=omega1,
        omega2=omega2,
        eta1=float(eta1),
        eta2=complex(eta2),
        log_q=float(log_q),
        nome_q=float(np.exp(log_q)),
        g2=float(g2),
        g3=float(g3),
        terms=terms,
    )
    logger.debug("lattice r=%s omega1=%.15g q=%.6g terms=%d legendre=%.3g", r, omega1, lat.nome_q, terms, lat.legendre_residual)
    return lat


# -- Series evaluation on the centered fundamental cell

def _trig_parts(v: complex) -> Tuple[complex, complex]:
    """(cot v, csc² v) without overflow for large |Im v|."""
    if v.imag >= 0.0:
        x = np.exp(2j * v)
        return 1j * (x + 1.0) / (x - 1.0), -4.0 * x / (x - 1.0) ** 2
    y = np.exp(-2j * v)
    return 1j * (1.0 + y) / (1.0 - y), -4.0 * y / (1.0 - y) ** 2


def _series_waves(v: complex, log_q: float, terms: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """n, b_n·(e^{2inv}q^{2n} + e^{-2inv}q^{2n})/2 and the matching sine combination."""
    n = np.arange(1, terms + 1, dtype=float)
    b = 1.0 / (1.0 - np.exp(2.0 * n * log_q))
    e_plus = np.exp(2.0 * n * log_q + 2j * n * v)
    e_minus = np.exp(2.0 * n * log_q - 2j * n * v)
    cos_part = b * (e_plus + e_minus) / 2.0
    sin_part = b * (e_plus - e_minus) / 2j
    return n, cos_part, sin_part


def _zeta_reduced(u: complex, omega1: float, eta1: float, log_q: float, terms: int) -> complex:
    k = np.pi / (2.0 * omega1)
    v = k * u
    cot, _ = _trig_parts(v)
    _, _, s = _series_waves(v, log_q, terms)
    return complex(eta1 * u / omega1 + k * cot + 4.0 * k * np.sum(s))


def _reduce(lat: LatticeParams, u: complex) -> Tuple[complex, int, int]:
    m = int(np.round(u.real / (2.0 * lat.omega1)))
    j = int(np.round(u.imag / (2.0 * np.pi)))
    u0 = u - 2.0 * m * lat.omega1 - 2.0 * j * lat.omega2
    return complex(u0), m, j


def lattice_distance(lat: LatticeParams, u: complex) -> float:
    u0, _, _ = _reduce(lat, complex(u))
    best = np.inf
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            best = min(best, abs(u0 - 2.0 * a * lat.omega1 - 2.0 * b * lat.omega2))
    return float(best)


def _guard(lat: LatticeParams, u: complex, tol: Tolerances) -> complex:
    u0, _, _ = _reduce(lat, u)
    d = lattice_distance(lat, u)
    if d < tol.pole_guard:
        raise PoleProximityError(f"u={u} is within {d:.3g} of a lattice point (pole_guard={tol.pole_guard})")
    return u0


def wp(lat: LatticeParams, u: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> complex:
    u0 = _guard(lat, complex(u), tol)
    k = lat.k
    _, csc2 = _trig_parts(k * u0)
    n, c, _ = _series_waves(k * u0, lat.log_q, lat.terms)
    return complex(-lat.c + k**2 * csc2 - 8.0 * k**2 * np.sum(n * c))


def wp_prime(lat: LatticeParams, u: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> complex:
    u0 = _guard(lat, complex(u), tol)
    k = lat.k
    cot, csc2 = _trig_parts(k * u0)
    n, _, s = _series_waves(k * u0, lat.log_q, lat.terms)
    return complex(-2.0 * k**3 * cot * csc2 + 16.0 * k**3 * np.sum(n**2 * s))


def w_zeta(lat: LatticeParams, u: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> complex:
    u = complex(u)
    _guard(lat, u, tol)
    u0, m, j = _reduce(lat, u)
    base = _zeta_reduced(u0, lat.omega1, lat.eta1, lat.log_q, lat.terms)
    return complex(base + 2.0 * m * lat.eta1 + 2.0 * j * lat.eta2)


def wp_jet(lat: LatticeParams, u: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[complex, complex, complex, complex]:
    """(℘, ℘′, ℘″, ℘‴) using ℘″ = 6℘² − g₂/2 and ℘‴ = 12℘℘′."""
    p0 = wp(lat, u, tol)
    p1 = wp_prime(lat, u, tol)
    p2 = 6.0 * p0 * p0 - 0.5 * lat.g2
    p3 = 12.0 * p0 * p1
    return p0, p1, p2, p3


def ode_residual(lat: LatticeParams, u: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Relative residual of ℘′² = 4℘³ − g₂℘ − g₃."""
    p0 = wp(lat, u, tol)
    p1 = wp_prime(lat, u, tol)
    rhs = 4.0 * p0**3 - lat.g2 * p0 - lat.g3
    scale = max(abs(p1) ** 2, abs(4.0 * p0**3), 1.0)
    return float(abs(p1 * p1 - rhs) / scale)


# -- Brute-force oracle

def _box_tail(u: complex, half_x: float, half_y: float, area: float) -> complex:
    """
    Integral estimate of Σ over lattice points outside the summation box of
    1/(u-ω)² - 1/ω² = Σ_k (k+1) u^k ω^-(k+2); only even k survive the symmetric box.
    ∂x∂y [w^-k / (k(k+1)i)] = w^-(k+2).
    """
    total = 0j
    for kk in (2, 4):
        def prim(x: float, y: float) -> complex:
            return complex(x, y) ** (-kk) / (kk * (kk + 1) * 1j)

        inside = prim(half_x, half_y) - prim(-half_x, half_y) - prim(half_x, -half_y) + prim(-half_x, -half_y)
        total += (kk + 1) * u**kk * (-inside)
    return total / area


def wp_lattice_sum(lat: LatticeParams, u: complex, m_max: int = 40) -> complex:
    """Truncated lattice sum |m|,|n| <= m_max plus a continuum tail estimate; test oracle only."""
    u = complex(u)
    m = np.arange(-m_max, m_max + 1)
    mm, nn = np.meshgrid(m, m, indexing="ij")
    omega = 2.0 * mm * lat.omega1 + 2.0 * nn * lat.omega2
    mask = (mm != 0) | (nn != 0)
    w = omega[mask]
    s = complex(np.sum(1.0 / (u - w) ** 2 - 1.0 / w**2))
    half_x = (2 * m_max + 1) * lat.omega1
    half_y = (2 * m_max + 1) * abs(lat.omega2)
    area = 4.0 * lat.omega1 * abs(lat.omega2)
    return 1.0 / u**2 + s + _box_tail(u, half_x, half_y, area)


def axis_symmetry_residual(lat: LatticeParams, samples: int = 40) -> float:
    """
    For f = ℘′/(℘ + η₁/ω₁): max of |Im f| on ℝ and ℝ + ω₂, and of |Re f| on iℝ and ω₁ + iℝ,
    each relative to |f|.
    """
    t = np.linspace(0.05, 0.95, samples)
    worst = 0.0

    def f(u: complex) -> complex:
        return wp_prime(lat, u) / (wp(lat, u) + lat.c)

    for s in t:
        real_pts = [complex(2.0 * lat.omega1 * s, 0.0), complex(2.0 * lat.omega1 * s, np.pi)]
        imag_pts = [complex(0.0, 2.0 * np.pi * s), complex(lat.omega1, 2.0 * np.pi * s)]
        for u in real_pts:
            val = f(u)
            worst = max(worst, abs(val.imag) / max(abs(val), 1.0))
        for u in imag_pts:
            val = f(u)
            worst = max(worst, abs(val.real) / max(abs(val), 1.0))
    return float(worst)
