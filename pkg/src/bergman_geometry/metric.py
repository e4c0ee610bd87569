from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from . import finite_diff as fd
from .errors import NotPositiveDefinite, SingularMetric
from .kernels import KernelJet, KernelModel, guard_kernel
from .points import PolarizedPoint, as_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MetricTensor:
    g: np.ndarray
    at_point: PolarizedPoint
    det_g: complex

    @property
    def positive_definite(self) -> bool:
        return is_positive_definite(self.g)


@dataclass(frozen=True, eq=False)
class ChristoffelTensor:
    # gamma[j, k, l] = Γʲₖₗ
    gamma: np.ndarray
    at_point: PolarizedPoint

    def contract(self, v: np.ndarray) -> np.ndarray:
        """Γ(v, v)ʲ = Σ Γʲₖₗ vᵏ vˡ."""
        return np.einsum("jkl,k,l->j", self.gamma, v, v)


@dataclass(frozen=True, eq=False)
class NormalizationMatrix:
    # G(p) = A·Aᴴ with A lower-triangular, positive diagonal
    chol: np.ndarray
    sqrt_g_inv: np.ndarray


@dataclass(frozen=True)
class Scales:
    """K(p,p̄) and |det G(p,p̄)| at the basepoint p = conj(w̄); thresholds are relative to these."""

    k_scale: float
    g_scale: float


def is_positive_definite(g: np.ndarray) -> bool:
    h = 0.5 * (g + g.conj().T)
    if not np.allclose(h, g, rtol=1e-9, atol=1e-12 * max(1.0, float(np.max(np.abs(g))))):
        return False
    try:
        linalg.cholesky(h, lower=True)
    except linalg.LinAlgError:
        return False
    return True


def lu_det(g: np.ndarray) -> complex:
    lu, piv = linalg.lu_factor(g, check_finite=False)
    swaps = int(np.sum(piv != np.arange(piv.shape[0])))
    return complex(np.prod(np.diag(lu)) * (-1.0) ** swaps)


def _metric_from_jet(jet: KernelJet) -> np.ndarray:
    return jet.numerator() / jet.k**2


def basepoint_scales(model: KernelModel, pt: PolarizedPoint) -> Scales:
    p = PolarizedPoint.diag(pt.w)
    jet = model.jet(p, check=False)
    return Scales(k_scale=float(abs(jet.k)), g_scale=float(abs(lu_det(_metric_from_jet(jet)))))


def metric_matrix(model: KernelModel, pt: PolarizedPoint, check: bool = True) -> np.ndarray:
    """Unguarded g_{jk̄}(z,w̄); callers that need guarantees go through metric_at."""
    return _metric_from_jet(model.jet(pt, check=check))


def metric_at(model: KernelModel, pt: PolarizedPoint, scales: Optional[Scales] = None) -> MetricTensor:
    sc = basepoint_scales(model, pt) if scales is None else scales
    jet = model.jet(pt)
    guard_kernel(model, jet, pt, sc.k_scale)
    g = _metric_from_jet(jet)
    det = lu_det(g)
    if abs(det) < model.tol.singular_floor * sc.g_scale:
        raise SingularMetric(f"|det G| = {abs(det):.3g} at z={np.round(pt.z, 12).tolist()}", det=det)
    return MetricTensor(g=g, at_point=pt, det_g=det)


def metric_derivative(model: KernelModel, pt: PolarizedPoint, check: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    (g, dg) with dg[l, k, m] = ∂g_{km̄}/∂zₗ at (z, w̄).
    Closed-form models use third-order kernel data; finite-difference models
    differentiate the metric itself with the nested step.
    """
    jet = model.jet(pt, check=check)
    g = _metric_from_jet(jet)
    n = pt.dim
    if jet.kzzw is not None:
        nmat = jet.numerator()
        dn = (
            np.einsum("l,jk->ljk", jet.kz, jet.kzw)
            + jet.k * jet.kzzw
            - np.einsum("lj,k->ljk", jet.kzz, jet.kw)
            - np.einsum("j,lk->ljk", jet.kz, jet.kzw)
        )
        dg = dn / jet.k**2 - 2.0 * np.einsum("l,jk->ljk", jet.kz, nmat) / jet.k**3
        return g, dg

    h = fd.step_for(pt.z, model.tol.fd_step_nested)

    def g_at(z: np.ndarray) -> np.ndarray:
        return metric_matrix(model, PolarizedPoint(z, pt.wbar), check=False)

    dg = np.array([fd.derivative(g_at, pt.z, fd.unit(n, l), h) for l in range(n)], dtype=complex)
    return g, dg


def _gamma(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    ginv = linalg.inv(g)
    return np.einsum("lkm,mj->jkl", dg, ginv)


def christoffel_at(model: KernelModel, pt: PolarizedPoint, scales: Optional[Scales] = None, check: bool = True) -> ChristoffelTensor:
    """Γʲₖₗ(z,w̄) = ∂g_{km̄}/∂zₗ · g^{m̄j}."""
    if check:
        sc = basepoint_scales(model, pt) if scales is None else scales
        metric_at(model, pt, sc)
    g, dg = metric_derivative(model, pt, check=check)
    return ChristoffelTensor(gamma=_gamma(g, dg), at_point=pt)


def connection_form(model: KernelModel, z: np.ndarray, p: np.ndarray) -> np.ndarray:
    """omega[l] = ∂ₗG·G⁻¹ at (z, p̄), so omega[l][k, j] = Γʲₖₗ."""
    g, dg = metric_derivative(model, PolarizedPoint.based(z, p), check=False)
    ginv = linalg.inv(g)
    return np.einsum("lkm,mj->lkj", dg, ginv)


def curvature_residual(model: KernelModel, p: np.ndarray, z: np.ndarray, probe_scale: float) -> float:
    """
    Max-norm of dω − ω∧ω for ω = ∂G·G⁻¹ with w̄ frozen at p̄, over both kinds of components.

    The dzₗ∧dzₘ part uses second-order central differences of step probe_scale, so it
    shrinks like probe_scale². The dz̄ₘ∧dzₗ part is ∂ω/∂z̄ₘ, which vanishes because Γ is
    holomorphic in z; it is taken with the fourth-order stencil and is the only part
    present in one variable.
    """
    p = as_vector(p)
    z = as_vector(z)
    pt = PolarizedPoint.based(z, p)
    metric_at(model, pt)
    n = z.shape[0]

    def omega_at(x: np.ndarray) -> np.ndarray:
        return connection_form(model, x, p)

    worst = 0.0
    for m in range(n):
        e = fd.unit(n, m)
        dx = np.asarray(fd.derivative(omega_at, z, e, probe_scale))
        dy = np.asarray(fd.derivative(omega_at, z, 1j * e, probe_scale))
        worst = max(worst, float(np.max(np.abs(0.5 * (dx + 1j * dy)))))
    if n == 1:
        return worst

    omega = omega_at(z)
    # d_omega[l] = ∂ₗ ω (all components)
    d_omega = np.array([fd.central2(omega_at, z, fd.unit(n, l), probe_scale) for l in range(n)])
    for l in range(n):
        for m in range(l + 1, n):
            curv = d_omega[l][m] - d_omega[m][l] - (omega[l] @ omega[m] - omega[m] @ omega[l])
            worst = max(worst, float(np.max(np.abs(curv))))
    return worst


def curvature_convergence_ratio(model: KernelModel, p: np.ndarray, z: np.ndarray, probe_scale: float) -> float:
    """residual(h)/residual(h/2); about 4 wherever the O(h²) difference error dominates roundoff."""
    coarse = curvature_residual(model, p, z, probe_scale)
    fine = curvature_residual(model, p, z, 0.5 * probe_scale)
    if fine == 0.0:
        raise ValueError("curvature residual vanished at the finer step")
    return coarse / fine


def normalization_at(model: KernelModel, p: np.ndarray) -> NormalizationMatrix:
    """Cholesky factor of the diagonal metric G(p) and its inverse."""
    pt = PolarizedPoint.diag(p)
    g = metric_at(model, pt).g
    h = 0.5 * (g + g.conj().T)
    try:
        a = linalg.cholesky(h, lower=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"metric at p={np.round(pt.z, 12).tolist()} is not positive-definite") from e
    inv = linalg.solve_triangular(a, np.eye(a.shape[0], dtype=complex), lower=True)
    return NormalizationMatrix(chol=a, sqrt_g_inv=inv)
