from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from . import finite_diff as fd
from .automorphisms import Automorphism
from .domains import DomainDescriptor
from .elliptic import make_lattice, wp
from .errors import BergmanError, DomainError, SignPatternError
from .kernels import KernelModel
from .metric import basepoint_scales, lu_det, metric_matrix
from .parameters import DEFAULT_TOLERANCES, Tolerances, parallel_map
from .points import PolarizedPoint, as_vector
from .representative import rep_coordinates

logger = logging.getLogger(__name__)

VARIETY_KINDS = ("z0", "z1", "zhat1")


# -- Annulus root structure

@dataclass(frozen=True)
class AnnulusRoots:
    r: float
    lambda1: float  # in (−r, −r²)
    lambda2: float  # in (−1, −r)
    residuals: Tuple[float, float]
    h_minus_one: float
    h_minus_r: float
    h_minus_r2: float

    @property
    def roots(self) -> Tuple[float, float]:
        return self.lambda2, self.lambda1


def annulus_h(r: float, lam: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> complex:
    """h(λ) = ℘(log λ) + η₁/ω₁ on r² ≤ |λ| ≤ 1, so that K(z,w̄) = h(zw̄)/(π·zw̄)."""
    lam = complex(lam)
    a = abs(lam)
    if not (r * r * (1.0 - 1e-12) <= a <= 1.0 + 1e-12):
        raise DomainError(f"h is evaluated on r² ≤ |λ| ≤ 1, got |λ|={a:.6g} for r={r}")
    lat = make_lattice(r, tol)
    return wp(lat, complex(np.log(lam)), tol) + lat.c


def _h_real(r: float, x: float, tol: Tolerances) -> float:
    return annulus_h(r, complex(x, 0.0), tol).real


def annulus_roots(r: float, tol: Tolerances = DEFAULT_TOLERANCES, scan_step: float = 1e-3) -> AnnulusRoots:
    """
    The two zeros of h on (−1, −r²). The sign pattern h(−1) < 0 < h(−r), h(−r²) < 0 is checked,
    the segment is scanned in log|λ| and each sign change is refined with brentq.
    """
    if not (0.0 < r < 1.0):
        raise DomainError(f"annulus radius must satisfy 0 < r < 1, got {r}")
    h1, hr, hr2 = _h_real(r, -1.0, tol), _h_real(r, -r, tol), _h_real(r, -r * r, tol)
    if not (h1 < 0.0 < hr and hr2 < 0.0):
        raise SignPatternError(f"h(-1)={h1:.6g}, h(-r)={hr:.6g}, h(-r²)={hr2:.6g} for r={r}")

    lo = 2.0 * np.log(r)
    count = max(3, int(np.ceil(-lo / scan_step)) + 1)
    xs = -np.exp(np.linspace(lo, 0.0, count))
    vals = np.array([_h_real(r, x, tol) for x in xs])
    flips = [i for i in range(len(xs) - 1) if np.sign(vals[i]) != np.sign(vals[i + 1])]
    if len(flips) != 2:
        raise SignPatternError(f"expected 2 sign changes of h on (-1, -r²) for r={r}, found {len(flips)}")

    roots = []
    for i in flips:
        a, b = xs[i], xs[i + 1]
        if vals[i] == 0.0:
            roots.append(float(a))
            continue
        roots.append(float(brentq(lambda x: _h_real(r, x, tol), b, a, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)))
    lam1, lam2 = max(roots), min(roots)
    if not (-r < lam1 < -r * r and -1.0 < lam2 < -r):
        raise SignPatternError(f"roots {lam2:.12g}, {lam1:.12g} fall outside (-1,-r) and (-r,-r²) for r={r}")
    res = (abs(annulus_h(r, lam1, tol)), abs(annulus_h(r, lam2, tol)))
    logger.debug("annulus r=%s roots lambda2=%.15g lambda1=%.15g", r, lam2, lam1)
    return AnnulusRoots(r=r, lambda1=lam1, lambda2=lam2, residuals=res, h_minus_one=h1, h_minus_r=hr, h_minus_r2=hr2)


def annulus_zero_points(r: float, p: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Zeros of K(·, p̄) in the annulus: the points λᵢ/p̄ with r < |λᵢ/p̄| < 1."""
    roots = annulus_roots(r, tol)
    pc = np.conj(complex(p))
    pts = [lam / pc for lam in (roots.lambda2, roots.lambda1)]
    return np.array([z for z in pts if r < abs(z) < 1.0], dtype=complex)


def annulus_zero_count(r: float, p: complex, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    return int(annulus_zero_points(r, p, tol).shape[0])


# -- Variety probes

@dataclass(frozen=True, eq=False)
class VarietyProbe:
    p: np.ndarray
    kind: str
    hits: np.ndarray  # (k, n)
    defining_values: np.ndarray  # |F(hit)| / scale
    resolution: int = 0

    @property
    def empty(self) -> bool:
        return self.hits.shape[0] == 0


def zhat1_det(model: KernelModel, p: np.ndarray, z: np.ndarray) -> complex:
    """det[K·∂²K/∂z∂w̄ − ∂K/∂z ⊗ ∂K/∂w̄] at (z, p̄); defined on Z₀ᵖ as well."""
    jet = model.jet(PolarizedPoint.based(z, p))
    return lu_det(jet.numerator())


def zhat1_identity_residual(model: KernelModel, p: np.ndarray, z: np.ndarray) -> float:
    """|zhat1_det/K^{2n} − det G| / |det G| at (z, p̄)."""
    pt = PolarizedPoint.based(z, p)
    jet = model.jet(pt)
    n = pt.dim
    det_g = lu_det(jet.numerator() / jet.k**2)
    return float(abs(lu_det(jet.numerator()) / jet.k ** (2 * n) - det_g) / abs(det_g))


def _defining_function(model: KernelModel, p: np.ndarray, kind: str) -> Tuple[Callable[[np.ndarray], complex], float]:
    """The holomorphic function of z cutting out the variety, and the scale its values are compared to."""
    pt0 = PolarizedPoint.diag(p)
    scales = basepoint_scales(model, pt0)
    if kind == "z0":
        return (lambda z: model.eval(PolarizedPoint.based(z, p), check=False)), scales.k_scale
    if kind == "z1":
        return (lambda z: lu_det(metric_matrix(model, PolarizedPoint.based(z, p), check=False))), scales.g_scale
    if kind == "zhat1":
        n = p.shape[0]
        scale = scales.g_scale * scales.k_scale ** (2 * n)
        return (lambda z: lu_det(model.jet(PolarizedPoint.based(z, p), check=False).numerator())), scale
    raise ValueError(f"Unknown variety kind: {kind}")


def _grid_spacing(domain: DomainDescriptor, resolution: int) -> float:
    per = resolution if domain.dim == 1 else max(5, resolution // 8)
    return 2.0 / (per - 1)


def _real_coords(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag], axis=1)


def _local_minima(points: np.ndarray, values: np.ndarray, radius: float) -> List[int]:
    """Indices whose value is ≤ every neighbor within radius and < at least one of them."""
    tree = cKDTree(_real_coords(points))
    out = []
    for i, nbrs in enumerate(tree.query_ball_point(_real_coords(points), radius)):
        others = [j for j in nbrs if j != i and np.isfinite(values[j])]
        if not others or not np.isfinite(values[i]):
            continue
        vals = values[others]
        if values[i] <= vals.min() and values[i] < vals.max():
            out.append(i)
    return out


def _newton_on_variety(fn: Callable[[np.ndarray], complex], z0: np.ndarray, domain: DomainDescriptor, tol: Tolerances, scale: float, hit_tol: float) -> Optional[np.ndarray]:
    """Minimal-norm Newton steps z ← z − F·∇F‾/|∇F|² on a holomorphic F; None unless it lands on F = 0 inside the domain."""
    z = z0.astype(complex)
    n = z.shape[0]
    for _ in range(tol.newton_max_iter):
        try:
            f = fn(z)
        except BergmanError:
            return None
        if not np.isfinite(f):
            return None
        if abs(f) < hit_tol * scale:
            return z if domain.contains(z) else None
        h = fd.step_for(z, tol.fd_step)
        try:
            grad = np.array([fd.derivative(fn, z, fd.unit(n, j), h) for j in range(n)], dtype=complex)
        except BergmanError:
            return None
        norm2 = float(np.sum(np.abs(grad) ** 2))
        if norm2 == 0.0 or not np.isfinite(norm2):
            return None
        z = z - f * np.conj(grad) / norm2
        if not domain.contains(z):
            return None
    return None


def _dedupe(points: List[np.ndarray], radius: float = 1e-6) -> List[np.ndarray]:
    out: List[np.ndarray] = []
    for z in points:
        if all(np.linalg.norm(z - w) > radius for w in out):
            out.append(z)
    return out


def probe_variety(model: KernelModel, p: np.ndarray, kind: str, resolution: int = 41, hit_tol: float = 1e-10) -> VarietyProbe:
    """
    Grid scan of |F| for the defining function of the chosen variety, local minima refined by Newton.
    An empty result is a valid outcome.
    """
    p = as_vector(p)
    model.domain.require(p, "basepoint")
    fn, scale = _defining_function(model, p, kind)
    grid = model.domain.grid(resolution)

    def magnitude(z: np.ndarray) -> float:
        try:
            return float(abs(fn(z)))
        except BergmanError:
            return np.inf

    values = np.array(parallel_map(magnitude, list(grid)))
    starts = _local_minima(grid, values, 1.5 * _grid_spacing(model.domain, resolution))
    refined = parallel_map(lambda i: _newton_on_variety(fn, grid[i], model.domain, model.tol, scale, hit_tol), starts)
    hits = [z for z in refined if z is not None]

    if kind == "z1":
        # Z₁ᵖ lives off Z₀ᵖ
        k_scale = basepoint_scales(model, PolarizedPoint.diag(p)).k_scale
        hits = [z for z in hits if abs(model.eval(PolarizedPoint.based(z, p), check=False)) >= hit_tol * k_scale]

    hits = _dedupe(hits)
    dvals = np.array([abs(fn(z)) / scale for z in hits], dtype=float)
    logger.debug("%s probe at p=%s: %d candidates, %d hits", kind, p, len(starts), len(hits))
    arr = np.array(hits, dtype=complex).reshape(-1, model.dim)
    return VarietyProbe(p=p, kind=kind, hits=arr, defining_values=dvals, resolution=resolution)


def z0_locus(model: KernelModel, p: np.ndarray, resolution: int = 41) -> VarietyProbe:
    return probe_variety(model, p, "z0", resolution)


def z1_locus(model: KernelModel, p: np.ndarray, resolution: int = 41) -> VarietyProbe:
    return probe_variety(model, p, "z1", resolution)


def zhat1_locus(model: KernelModel, p: np.ndarray, resolution: int = 41) -> VarietyProbe:
    return probe_variety(model, p, "zhat1", resolution)


def variety_image_gap(model: KernelModel, f: Automorphism, p: np.ndarray, kind: str = "z0", resolution: int = 41) -> float:
    """
    Hausdorff distance between f(locus at p) and the locus at f(p).
    0 when both are empty, inf when exactly one is.
    """
    p = as_vector(p)
    here = probe_variety(model, p, kind, resolution)
    there = probe_variety(model, f(p), kind, resolution)
    if here.empty and there.empty:
        return 0.0
    if here.empty or there.empty:
        return float("inf")
    mapped = np.array([f(z) for z in here.hits])
    d = np.linalg.norm(mapped[:, None, :] - there.hits[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# -- Product domain A_r × D

@dataclass(frozen=True)
class ProductGapWitness:
    z: complex          # point of A_r with g_A(z, p̄) = 0
    kernel_ratio: float  # |K_A(z,p̄)| / K_A(p,p̄)
    metric_abs: float    # |g_A(z,p̄)|

    def product_point(self, z2: complex = 0.0) -> np.ndarray:
        """A point of Ẑ₁ᵖ ∖ Z₀ᵖ in A_r × D (any second coordinate works)."""
        return np.array([self.z, z2], dtype=complex)


@dataclass(frozen=True, eq=False)
class ProductGapResult:
    r: float
    p: complex
    witnesses: List[ProductGapWitness] = field(default_factory=list)
    disk_factor_min: float = 0.0

    @property
    def found(self) -> bool:
        return bool(self.witnesses)


def product_factorization_residual(r: float, z: np.ndarray, wbar: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """
    Relative gap in F_{A×D} = K_A²·K_D²·F_A·F_D at the polarized point (z, w̄),
    F being the determinant of K·∂²K − ∂K·∂K.
    """
    z, wbar = as_vector(z), as_vector(wbar)
    ann = KernelModel(DomainDescriptor.annulus(r), tol=tol)
    disk = KernelModel(DomainDescriptor.disk(), tol=tol)
    prod = KernelModel(DomainDescriptor.product(DomainDescriptor.annulus(r), DomainDescriptor.disk()), tol=tol)
    ja = ann.jet(PolarizedPoint(z[:1], wbar[:1]))
    jd = disk.jet(PolarizedPoint(z[1:], wbar[1:]))
    jp = prod.jet(PolarizedPoint(z, wbar))
    lhs = lu_det(jp.numerator())
    rhs = ja.k**2 * jd.k**2 * lu_det(ja.numerator()) * lu_det(jd.numerator())
    return float(abs(lhs - rhs) / abs(rhs))


def product_gap_search(
    r: float,
    p: float,
    resolution: int = 60,
    band: float = np.pi / 3,
    kernel_floor: float = 0.1,
    metric_tol: float = 1e-10,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ProductGapResult:
    """
    Zeros of the polarized annulus metric g_A(z, p̄) with |K_A(z,p̄)| > kernel_floor·K_A(p,p̄),
    searched in sectors of half-width band around the imaginary axis.
    Each zero gives a point of Ẑ₁ᵖ ∖ Z₀ᵖ on A_r × D. Not finding one is reported, not raised.
    """
    domain = DomainDescriptor.annulus(r)
    model = KernelModel(domain, tol=tol)
    pv = as_vector(complex(p))
    domain.require(pv, "basepoint")
    k_scale = basepoint_scales(model, PolarizedPoint.diag(pv)).k_scale

    def numerator(z: np.ndarray) -> complex:
        return complex(model.jet(PolarizedPoint.based(z, pv), check=False).numerator()[0, 0])

    radii = np.linspace(r, 1.0, resolution + 2)[1:-1]
    angles = np.concatenate([np.linspace(np.pi / 2 - band, np.pi / 2 + band, resolution), np.linspace(-np.pi / 2 - band, -np.pi / 2 + band, resolution)])
    grid = np.array([[rho * np.exp(1j * th)] for th in angles for rho in radii], dtype=complex)

    def magnitude(z: np.ndarray) -> float:
        try:
            jet = model.jet(PolarizedPoint.based(z, pv), check=False)
            return float(abs(jet.numerator()[0, 0] / jet.k**2))
        except BergmanError:
            return np.inf

    values = np.array(parallel_map(magnitude, list(grid)))
    step = max((1.0 - r) / (resolution + 1), 2.0 * band / (resolution - 1))
    starts = _local_minima(grid, values, 1.5 * step)

    witnesses: List[ProductGapWitness] = []
    found: List[np.ndarray] = []
    for i in starts:
        z = _newton_on_variety(numerator, grid[i], domain, tol, k_scale**2, 1e-13)
        if z is None or any(np.linalg.norm(z - w) < 1e-6 for w in found):
            continue
        jet = model.jet(PolarizedPoint.based(z, pv))
        ratio = float(abs(jet.k) / k_scale)
        g_abs = float(abs(jet.numerator()[0, 0] / jet.k**2))
        if ratio > kernel_floor and g_abs < metric_tol:
            found.append(z)
            witnesses.append(ProductGapWitness(z=complex(z[0]), kernel_ratio=ratio, metric_abs=g_abs))

    disk = KernelModel(DomainDescriptor.disk(), tol=tol)
    disk_vals = []
    for z2 in DomainDescriptor.disk().grid(21):
        jd = disk.jet(PolarizedPoint.based(z2, np.zeros(1)))
        disk_vals.append(abs(jd.k**2 * jd.numerator()[0, 0]))
    logger.info("product gap r=%s p=%s: %d witness(es)", r, p, len(witnesses))
    return ProductGapResult(r=r, p=complex(p), witnesses=witnesses, disk_factor_min=float(min(disk_vals)))


# -- Injectivity probe

@dataclass(frozen=True, eq=False)
class PoleProbeReport:
    injective_on_sample: bool
    collisions: List[Tuple[np.ndarray, np.ndarray]]
    resolution: int
    evaluated: int

    @property
    def summary(self) -> str:
        if self.injective_on_sample:
            return f"no collision found at resolution {self.resolution}"
        return f"{len(self.collisions)} collision pair(s) found at resolution {self.resolution}"


def pole_probe(model: KernelModel, p: np.ndarray, resolution: int = 61, max_pairs: int = 100) -> PoleProbeReport:
    """
    Evaluates rep_p on a grid and reports pairs with |ζᵢ − ζⱼ| < ½·min(sᵢ, sⱼ) and |zᵢ − zⱼ| > 5h,
    s being the smallest ζ-distance from a point to its grid neighbors and h the grid spacing.
    Sampled evidence only.
    """
    p = as_vector(p)
    rep = rep_coordinates(model, p)
    grid = model.domain.grid(resolution)

    def image(z: np.ndarray) -> Optional[np.ndarray]:
        try:
            val = rep(z)
        except BergmanError:
            return None
        return val if np.all(np.isfinite(val)) else None

    imgs = parallel_map(image, list(grid))
    keep = [i for i, v in enumerate(imgs) if v is not None]
    zs = grid[keep]
    zetas = np.array([imgs[i] for i in keep]).reshape(-1, model.dim)
    h = _grid_spacing(model.domain, resolution)

    ztree = cKDTree(_real_coords(zs))
    spacing = np.full(len(zs), np.inf)
    for i, nbrs in enumerate(ztree.query_ball_point(_real_coords(zs), 1.5 * h)):
        others = [j for j in nbrs if j != i]
        if others:
            spacing[i] = float(np.min(np.linalg.norm(zetas[others] - zetas[i], axis=1)))

    ctree = cKDTree(_real_coords(zetas))
    collisions: List[Tuple[np.ndarray, np.ndarray]] = []
    seen = set()
    for i in range(len(zs)):
        if not np.isfinite(spacing[i]):
            continue
        for j in ctree.query_ball_point(_real_coords(zetas[i : i + 1])[0], 0.5 * spacing[i]):
            if j == i or (min(i, j), max(i, j)) in seen:
                continue
            if np.linalg.norm(zetas[i] - zetas[j]) >= 0.5 * min(spacing[i], spacing[j]):
                continue
            if np.linalg.norm(zs[i] - zs[j]) <= 5.0 * h:
                continue
            seen.add((min(i, j), max(i, j)))
            collisions.append((zs[i], zs[j]))
            if len(collisions) >= max_pairs:
                break
        if len(collisions) >= max_pairs:
            break

    report = PoleProbeReport(injective_on_sample=not collisions, collisions=collisions, resolution=resolution, evaluated=len(zs))
    logger.info("pole probe at p=%s: %s", p, report.summary)
    return report
