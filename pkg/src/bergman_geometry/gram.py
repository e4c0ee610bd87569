from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg
from scipy.special import roots_legendre

from .domains import DomainDescriptor
from .errors import ConfigError, IllConditionedGram
from .parameters import GramParams
from .points import PolarizedPoint

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GramKernel:
    """
    Truncated Bergman kernel built from Cholesky-orthonormalized monomials.

    basis        multi-indices α (monomial z^α)
    gram_chol    lower-triangular L with Gram = L·Lᴴ
    nodes/weights  planar quadrature table for one coordinate
    """

    domain: DomainDescriptor
    basis: Tuple[Tuple[int, ...], ...]
    gram_chol: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    condition: float

    def monomials(self, x: np.ndarray) -> np.ndarray:
        exps = np.array(self.basis)
        return np.prod(np.power(x[None, :], exps), axis=1)


def _planar_quadrature(leaf: DomainDescriptor, quad_resolution: int, span: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre in the radius times the trapezoid rule in the angle; weights include ρ dρ dθ."""
    r_in = leaf.r if leaf.kind == "annulus" else 0.0
    x, w = roots_legendre(quad_resolution)
    half = (1.0 - r_in) / 2.0
    rho = half * x + (1.0 + r_in) / 2.0
    w_rho = half * w * rho
    n_theta = max(2 * quad_resolution, 2 * span + 2)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    nodes = (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = (w_rho[:, None] * np.full(n_theta, 2.0 * np.pi / n_theta)[None, :]).ravel()
    return nodes, weights


def _exponents(leaf: DomainDescriptor, degree_cap: int) -> List[int]:
    if leaf.kind == "annulus":
        return list(range(-degree_cap, degree_cap + 1))
    return list(range(0, degree_cap + 1))


def _gram_1d(exps: List[int], nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    v = np.power(nodes[None, :], np.array(exps)[:, None])
    return (v * weights[None, :]) @ v.conj().T


def build_gram_kernel(domain: DomainDescriptor, degree_cap: int, quad_resolution: int, params: GramParams = GramParams()) -> GramKernel:
    leaves = domain.leaves()
    if any(leaf.kind not in ("disk", "annulus") for leaf, _ in leaves):
        raise ConfigError(f"Gram kernels need a disk, annulus or polydisc domain, got {domain.kind}")
    if degree_cap < 0:
        raise ConfigError(f"degree_cap must be >= 0, got {degree_cap}")

    per_leaf_exps: List[List[int]] = []
    gram = np.ones((1, 1), dtype=complex)
    nodes = weights = np.empty(0)
    for leaf, _ in leaves:
        exps = _exponents(leaf, degree_cap)
        span = exps[-1] - exps[0]
        nodes, weights = _planar_quadrature(leaf, quad_resolution, span)
        gram = np.kron(gram, _gram_1d(exps, nodes, weights))
        per_leaf_exps.append(exps)

    basis = tuple(itertools.product(*per_leaf_exps))
    gram = 0.5 * (gram + gram.conj().T)

    d = np.sqrt(np.real(np.diag(gram)))
    scaled = gram / np.outer(d, d)
    cond = float(np.linalg.cond(scaled))
    if not np.isfinite(cond) or cond > params.max_condition:
        raise IllConditionedGram(f"scaled Gram matrix condition {cond:.3g} exceeds {params.max_condition:.3g}", cond)
    try:
        chol = linalg.cholesky(gram, lower=True)
    except linalg.LinAlgError as e:
        raise IllConditionedGram(f"Gram matrix is not positive-definite: {e}", cond) from e

    logger.debug("gram kernel %s: %d basis functions, scaled condition %.3g", domain.kind, len(basis), cond)
    return GramKernel(domain=domain, basis=basis, gram_chol=chol, nodes=nodes, weights=weights, condition=cond)


def gram_kernel_eval(gk: GramKernel, pt: PolarizedPoint) -> complex:
    """Σⱼ φⱼ(z)·φⱼ(w)‾ with φ = L⁻¹·(monomials)."""
    x = linalg.solve_triangular(gk.gram_chol, gk.monomials(pt.z), lower=True)
    y = linalg.solve_triangular(gk.gram_chol.conj(), gk.monomials(pt.wbar), lower=True)
    return complex(np.sum(x * y))
