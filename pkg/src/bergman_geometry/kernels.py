from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from . import finite_diff as fd
from .domains import DomainDescriptor
from .elliptic import LatticeParams, make_lattice, wp_jet
from .errors import ConfigError, DomainError, NearZeroKernel
from .parameters import DEFAULT_TOLERANCES, Tolerances
from .points import PolarizedPoint

if TYPE_CHECKING:
    from .automorphisms import Automorphism

logger = logging.getLogger(__name__)

DERIVATIVE_MODES = ("closed_form", "finite_difference")
EVAL_MODES = ("closed", "weierstrass", "series")


@dataclass(frozen=True)
class KernelJet:
    """
    Raw polarized derivatives of K at (z, w̄):

      k           K
      kz[j]       ∂K/∂zⱼ
      kw[k]       ∂K/∂w̄ₖ
      kzz[j,l]    ∂²K/∂zⱼ∂zₗ
      kzw[j,k]    ∂²K/∂zⱼ∂w̄ₖ
      kzzw[l,j,k] ∂³K/∂zₗ∂zⱼ∂w̄ₖ   (None when only finite differences are available)
    """

    k: complex
    kz: np.ndarray
    kw: np.ndarray
    kzz: np.ndarray
    kzw: np.ndarray
    kzzw: Optional[np.ndarray] = None

    def numerator(self) -> np.ndarray:
        """K·∂²K − ∂K·∂K, the polynomial matrix whose determinant cuts out Ẑ₁."""
        return self.k * self.kzw - np.outer(self.kz, self.kw)


# -- Closed forms

def _ball_profile(n: int, s: complex) -> Tuple[complex, complex, complex, complex]:
    c = math.factorial(n) / np.pi**n
    t = 1.0 - s
    return (
        c * t ** (-(n + 1)),
        c * (n + 1) * t ** (-(n + 2)),
        c * (n + 1) * (n + 2) * t ** (-(n + 3)),
        c * (n + 1) * (n + 2) * (n + 3) * t ** (-(n + 4)),
    )


def _annulus_profile(lat: LatticeParams, lam: complex, tol: Tolerances) -> Tuple[complex, complex, complex, complex]:
    # K(λ) = h(λ)/(πλ), h(λ) = ℘(log λ) + η₁/ω₁; derivatives in λ by the chain rule
    p0, p1, p2, p3 = wp_jet(lat, complex(np.log(lam)), tol)
    h0 = p0 + lat.c
    h1 = p1 / lam
    h2 = (p2 - p1) / lam**2
    h3 = (p3 - 3.0 * p2 + 2.0 * p1) / lam**3
    return (
        h0 / (np.pi * lam),
        (h1 / lam - h0 / lam**2) / np.pi,
        (h2 / lam - 2.0 * h1 / lam**2 + 2.0 * h0 / lam**3) / np.pi,
        (h3 / lam - 3.0 * h2 / lam**2 + 6.0 * h1 / lam**3 - 6.0 * h0 / lam**4) / np.pi,
    )


def _inner_product_jet(prof: Tuple[complex, complex, complex, complex], z: np.ndarray, wbar: np.ndarray) -> KernelJet:
    """Jet of K = κ(Σ zⱼw̄ⱼ) from κ and its first three derivatives."""
    k0, k1, k2, k3 = prof
    n = z.shape[0]
    eye = np.eye(n)
    kzzw = (
        k2 * np.einsum("jk,l->ljk", eye, wbar)
        + k2 * np.einsum("lk,j->ljk", eye, wbar)
        + k3 * np.einsum("l,j,k->ljk", wbar, wbar, z)
    )
    return KernelJet(
        k=complex(k0),
        kz=k1 * wbar,
        kw=k1 * z,
        kzz=k2 * np.outer(wbar, wbar),
        kzw=k1 * eye + k2 * np.outer(wbar, z),
        kzzw=kzzw,
    )


def _leaf_partial(jet: KernelJet, zloc: Sequence[int], wloc: Sequence[int]) -> complex:
    key = (len(zloc), len(wloc))
    if key == (0, 0):
        return jet.k
    if key == (1, 0):
        return complex(jet.kz[zloc[0]])
    if key == (0, 1):
        return complex(jet.kw[wloc[0]])
    if key == (2, 0):
        return complex(jet.kzz[zloc[0], zloc[1]])
    if key == (1, 1):
        return complex(jet.kzw[zloc[0], wloc[0]])
    if key == (2, 1):
        assert jet.kzzw is not None
        return complex(jet.kzzw[zloc[0], zloc[1], wloc[0]])
    raise ValueError(f"unsupported partial order {key}")


def _product_jet(leaf_jets: List[Tuple[KernelJet, slice]], n: int) -> KernelJet:
    owner = np.empty(n, dtype=int)
    for a, (_, sl) in enumerate(leaf_jets):
        owner[sl] = a

    def entry(zs: Sequence[int], ws: Sequence[int]) -> complex:
        val = 1.0 + 0j
        for a, (jet, sl) in enumerate(leaf_jets):
            zl = [i - sl.start for i in zs if owner[i] == a]
            wl = [i - sl.start for i in ws if owner[i] == a]
            val *= _leaf_partial(jet, zl, wl)
        return val

    idx = range(n)
    return KernelJet(
        k=entry([], []),
        kz=np.array([entry([i], []) for i in idx]),
        kw=np.array([entry([], [i]) for i in idx]),
        kzz=np.array([[entry([i, j], []) for j in idx] for i in idx]),
        kzw=np.array([[entry([i], [j]) for j in idx] for i in idx]),
        kzzw=np.array([[[entry([l, i], [j]) for j in idx] for i in idx] for l in idx]),
    )


# -- Series forms (used as oracles)

def _series_terms(ratio: float, cap: int = 200_000) -> int:
    if ratio <= 0.0:
        return 1
    if ratio >= 1.0:
        raise DomainError(f"series ratio {ratio} is not < 1")
    return min(cap, int(np.ceil(np.log(1e-19) / np.log(ratio))) + 16)


def annulus_laurent(r: float, lam: complex) -> complex:
    """
    Σ_{n≠-1} (n+1)λⁿ / (π(1 − r^{2n+2})) + λ⁻¹ / (2π log(1/r)).
    Negative powers are summed in the stable form (m−1)(r²/λ)^{m−1} / (πλ(1 − r^{2m−2})).
    """
    lam = complex(lam)
    a = abs(lam)
    if not (r * r < a < 1.0):
        raise DomainError(f"annulus polarized argument |λ|={a} outside ({r * r}, 1)")
    n_pos = _series_terms(a)
    n = np.arange(0, n_pos)
    pos = np.sum((n + 1.0) * np.power(lam, n) / (1.0 - np.power(r, 2.0 * n + 2.0)))
    rho = r * r / lam
    n_neg = _series_terms(abs(rho))
    m = np.arange(2, n_neg + 2)
    neg = np.sum((m - 1.0) * np.power(rho, m - 1) / (1.0 - np.power(r, 2.0 * m - 2.0))) / lam
    return complex((pos + neg) / np.pi + 1.0 / (2.0 * np.pi * np.log(1.0 / r) * lam))


def ball_series(n: int, s: complex) -> complex:
    """n!/πⁿ Σ C(k+n, n) sᵏ, the orthonormal-monomial expansion."""
    if abs(s) >= 1.0:
        raise DomainError(f"|⟨z,w̄⟩| = {abs(s)} >= 1")
    terms = _series_terms(abs(s))
    k = np.arange(0, terms)
    coeff = np.array([math.comb(int(j) + n, n) for j in k], dtype=float)
    return complex(math.factorial(n) / np.pi**n * np.sum(coeff * complex(s) ** k))


# -- Model

@dataclass(frozen=True)
class KernelModel:
    """
    Oracle for the polarized Bergman kernel of a catalog domain.
    Derivatives come from closed forms or from the fourth-order stencil in finite_diff.
    """

    domain: DomainDescriptor
    derivative_mode: str = "closed_form"
    tol: Tolerances = DEFAULT_TOLERANCES
    _lattices: Tuple[Optional[LatticeParams], ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.derivative_mode not in DERIVATIVE_MODES:
            raise ConfigError(f"derivative_mode must be one of {DERIVATIVE_MODES}, got {self.derivative_mode}")
        lats = tuple(make_lattice(leaf.r, self.tol) if leaf.kind == "annulus" else None for leaf, _ in self.domain.leaves())
        object.__setattr__(self, "_lattices", lats)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def with_mode(self, mode: str) -> "KernelModel":
        return KernelModel(self.domain, mode, self.tol)

    # -- Membership

    def check_point(self, pt: PolarizedPoint) -> None:
        if pt.dim != self.dim:
            raise DomainError(f"point has dimension {pt.dim}, domain {self.domain.kind} has {self.dim}")
        for leaf, sl in self.domain.leaves():
            z, wbar = pt.z[sl], pt.wbar[sl]
            if leaf.kind == "annulus":
                lam = abs(z[0] * wbar[0])
                if not (leaf.r**2 < lam < 1.0) or not (leaf.r < abs(z[0]) < 1.0):
                    raise DomainError(f"annulus point z={z[0]}, w̄={wbar[0]} outside r²<|zw̄|<1 (r={leaf.r})")
            elif np.linalg.norm(z) >= 1.0 or np.linalg.norm(wbar) >= 1.0:
                raise DomainError(f"{leaf.kind} point outside the unit ball: |z|={np.linalg.norm(z):.6g}, |w̄|={np.linalg.norm(wbar):.6g}")

    # -- Evaluation

    def _leaf_jet(self, a: int, leaf: DomainDescriptor, z: np.ndarray, wbar: np.ndarray) -> KernelJet:
        if leaf.kind == "annulus":
            lat = self._lattices[a]
            assert lat is not None
            prof = _annulus_profile(lat, complex(z[0] * wbar[0]), self.tol)
        else:
            n = leaf.dim
            prof = _ball_profile(n, complex(np.dot(z, wbar)))
        return _inner_product_jet(prof, z, wbar)

    def closed_jet(self, pt: PolarizedPoint) -> KernelJet:
        leaves = self.domain.leaves()
        jets = [(self._leaf_jet(a, leaf, pt.z[sl], pt.wbar[sl]), sl) for a, (leaf, sl) in enumerate(leaves)]
        if len(jets) == 1:
            return jets[0][0]
        return _product_jet(jets, self.dim)

    def eval(self, pt: PolarizedPoint, mode: str = "closed", check: bool = True) -> complex:
        if check:
            self.check_point(pt)
        if mode in ("closed", "weierstrass"):
            val = 1.0 + 0j
            for a, (leaf, sl) in enumerate(self.domain.leaves()):
                z, wbar = pt.z[sl], pt.wbar[sl]
                if leaf.kind == "annulus":
                    lat = self._lattices[a]
                    assert lat is not None
                    val *= _annulus_profile(lat, complex(z[0] * wbar[0]), self.tol)[0]
                else:
                    val *= _ball_profile(leaf.dim, complex(np.dot(z, wbar)))[0]
            return complex(val)
        if mode == "series":
            val = 1.0 + 0j
            for leaf, sl in self.domain.leaves():
                z, wbar = pt.z[sl], pt.wbar[sl]
                if leaf.kind == "annulus":
                    val *= annulus_laurent(leaf.r, complex(z[0] * wbar[0]))
                else:
                    val *= ball_series(leaf.dim, complex(np.dot(z, wbar)))
            return complex(val)
        raise ConfigError(f"Unknown kernel evaluation mode: {mode}")

    def _fd_jet(self, pt: PolarizedPoint) -> KernelJet:
        n = self.dim
        zw = np.concatenate([pt.z, pt.wbar])

        def f(x: np.ndarray) -> complex:
            return self.eval(PolarizedPoint(x[:n], x[n:]), check=False)

        h1 = fd.step_for(zw, self.tol.fd_step)
        h2 = fd.step_for(zw, self.tol.fd_step_mixed)
        e = [fd.unit(2 * n, j) for j in range(2 * n)]
        kz = np.array([fd.derivative(f, zw, e[j], h1) for j in range(n)], dtype=complex)
        kw = np.array([fd.derivative(f, zw, e[n + j], h1) for j in range(n)], dtype=complex)
        kzz = np.array([[fd.mixed(f, zw, e[i], e[j], h2) for j in range(n)] for i in range(n)], dtype=complex)
        kzw = np.array([[fd.mixed(f, zw, e[i], e[n + j], h2) for j in range(n)] for i in range(n)], dtype=complex)
        return KernelJet(k=f(zw), kz=kz, kw=kw, kzz=kzz, kzw=kzw, kzzw=None)

    def jet(self, pt: PolarizedPoint, check: bool = True) -> KernelJet:
        if check:
            self.check_point(pt)
        if self.derivative_mode == "closed_form":
            return self.closed_jet(pt)
        return self._fd_jet(pt)

    def scale(self, pt: PolarizedPoint) -> float:
        """K(p,p̄) for the basepoint p = conj(w̄)."""
        p = pt.w
        return float(self.eval(PolarizedPoint.diag(p), check=False).real)


def guard_kernel(model: KernelModel, jet: KernelJet, pt: PolarizedPoint, scale: Optional[float] = None) -> None:
    ref = model.scale(pt) if scale is None else scale
    if abs(jet.k) < model.tol.kernel_floor * ref:
        raise NearZeroKernel(f"|K(z,w̄)| = {abs(jet.k):.3g} below floor at z={np.round(pt.z, 12).tolist()}", value=jet.k)


def kernel_eval(model: KernelModel, pt: PolarizedPoint, mode: str = "closed") -> complex:
    return model.eval(pt, mode=mode)


def annulus_cross_check(model: KernelModel, pt: PolarizedPoint) -> float:
    """Relative gap between the ℘ formula and the Laurent series at pt."""
    closed = model.eval(pt, mode="weierstrass")
    series = model.eval(pt, mode="series")
    return float(abs(closed - series) / abs(closed))


def kernel_derivatives(model: KernelModel, pt: PolarizedPoint, scale: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(∂/∂w̄ log K, ∂²log K/∂z∂w̄) as ∂K/K and (K·∂²K − ∂K·∂K)/K²."""
    jet = model.jet(pt)
    guard_kernel(model, jet, pt, scale)
    grad = jet.kw / jet.k
    hess = jet.numerator() / jet.k**2
    return grad, hess


def transformation_check(f: "Automorphism", model_src: KernelModel, model_dst: KernelModel, pt: PolarizedPoint) -> float:
    """
    |K_src(z,w̄) − K_dst(f(z), f(w)‾)·det f′(z)·det f′(w)‾| / |K_src(z,w̄)|
    """
    k_src = model_src.eval(pt)
    w = pt.w
    image = PolarizedPoint(f(pt.z), f.conj_map(pt.wbar))
    k_dst = model_dst.eval(image)
    pulled = k_dst * f.jacobian_det(pt.z) * np.conj(f.jacobian_det(w))
    return float(abs(k_src - pulled) / abs(k_src))
