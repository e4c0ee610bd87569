from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import linalg

from . import finite_diff as fd
from .automorphisms import Automorphism
from .errors import BergmanError, DomainError, ExphFailure, SingularMetric
from .kernels import KernelModel, kernel_derivatives
from .metric import Scales, basepoint_scales, metric_at, normalization_at
from .points import PolarizedPoint, as_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RepCoordinates:
    """
    rep_p with its fixed prefactor.

    The bracket b(z) = ∂/∂w̄ log K(z,w̄)|_{w=p} has Jacobian ∂bₖ/∂zₗ = g_{lk̄}(z,p̄),
    i.e. G(z,p̄)ᵀ. Raw mode multiplies by G(p)⁻ᵀ so that ∂ζ/∂z = I at p;
    normalized mode multiplies by conj(A⁻¹) (G(p) = A·Aᴴ) so that the
    pulled-back metric is the identity at p.
    """

    model: KernelModel
    p: np.ndarray
    normalized: bool
    factor: np.ndarray
    b_p: np.ndarray
    scales: Scales

    def bracket(self, z: np.ndarray) -> np.ndarray:
        grad, _ = kernel_derivatives(self.model, PolarizedPoint.based(z, self.p), self.scales.k_scale)
        return grad - self.b_p

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.factor @ self.bracket(as_vector(z))

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """∂ζ/∂z = factor · G(z,p̄)ᵀ."""
        g = metric_at(self.model, PolarizedPoint.based(z, self.p), self.scales).g
        return self.factor @ g.T


def rep_coordinates(model: KernelModel, p: np.ndarray, normalized: bool = False) -> RepCoordinates:
    p = as_vector(p)
    model.domain.require(p, "basepoint")
    pt = PolarizedPoint.diag(p)
    scales = basepoint_scales(model, pt)
    b_p, _ = kernel_derivatives(model, pt, scales.k_scale)
    if normalized:
        factor = np.conj(normalization_at(model, p).sqrt_g_inv)
    else:
        g = metric_at(model, pt, scales).g
        factor = linalg.inv(g.T)
    return RepCoordinates(model=model, p=p, normalized=normalized, factor=factor, b_p=b_p, scales=scales)


def rep_map(model: KernelModel, p: np.ndarray, z: np.ndarray, normalized: bool = False) -> np.ndarray:
    return rep_coordinates(model, p, normalized)(as_vector(z))


# -- Inverse (holomorphic exponential)

@dataclass(frozen=True, eq=False)
class ExphResult:
    z: np.ndarray
    converged: bool
    iterations: int
    residual: float
    method: str = "newton"


def _newton(rep: RepCoordinates, zeta: np.ndarray, z0: np.ndarray) -> ExphResult:
    tol = rep.model.tol
    target_tol = tol.newton_tol * (1.0 + float(np.linalg.norm(zeta)))
    domain = rep.model.domain

    def residual_at(z: np.ndarray) -> Optional[np.ndarray]:
        if not domain.contains(z):
            return None
        try:
            return rep(z) - zeta
        except (DomainError, BergmanError):
            return None

    z = z0.copy()
    f = residual_at(z)
    if f is None:
        return ExphResult(z=z, converged=False, iterations=0, residual=np.inf)
    res = float(np.linalg.norm(f))
    best = (z.copy(), res)
    it = 0
    for it in range(1, tol.newton_max_iter + 1):
        if res < target_tol:
            return ExphResult(z=z, converged=True, iterations=it - 1, residual=res)
        try:
            jac = rep.jacobian(z)
            step = linalg.solve(jac, -f)
        except (SingularMetric, linalg.LinAlgError) as e:
            raise SingularMetric(f"Jacobian of rep_p is singular at z={np.round(z, 12).tolist()}") from e
        t = 1.0
        accepted = False
        for _ in range(tol.newton_halvings + 1):
            trial = z + t * step
            f_trial = residual_at(trial)
            if f_trial is not None and float(np.linalg.norm(f_trial)) < res:
                z, f, res = trial, f_trial, float(np.linalg.norm(f_trial))
                accepted = True
                break
            t *= 0.5
        if res < best[1]:
            best = (z.copy(), res)
        if not accepted:
            break
    converged = best[1] < target_tol
    return ExphResult(z=best[0], converged=converged, iterations=it, residual=best[1])


def _newton_continuation(rep: RepCoordinates, zeta: np.ndarray, z0: np.ndarray, steps: int = 8) -> ExphResult:
    """Solve for t·ζ, t = 1/steps … 1, warm-starting each stage."""
    z = rep.p.copy()
    total = 0
    result = ExphResult(z=z, converged=False, iterations=0, residual=np.inf)
    for s in range(1, steps + 1):
        target = zeta * (s / steps)
        guess = z + np.linalg.solve(rep.jacobian(z), target - rep(z))
        result = _newton(rep, target, guess if rep.model.domain.contains(guess) else z)
        total += result.iterations
        if not result.converged:
            return ExphResult(z=result.z, converged=False, iterations=total, residual=result.residual)
        z = result.z
    return ExphResult(z=result.z, converged=True, iterations=total, residual=result.residual)


def exph_newton(rep: RepCoordinates, zeta: np.ndarray) -> ExphResult:
    zeta = as_vector(zeta)
    # first-order guess: p + (∂ζ/∂z at p)⁻¹ ζ
    z0 = rep.p + linalg.solve(rep.jacobian(rep.p), zeta)
    if rep.model.domain.contains(z0):
        result = _newton(rep, zeta, z0)
        if result.converged:
            return result
    logger.debug("exph: direct Newton failed for zeta=%s, continuing along t·zeta", zeta)
    return _newton_continuation(rep, zeta, z0)


def exph(model: KernelModel, p: np.ndarray, zeta: np.ndarray, method: str = "newton", normalized: bool = False) -> ExphResult:
    """
    Point z with rep_p(z) = ζ. newton solves the equation directly; ode integrates
    the geodesic from p with initial velocity (∂ζ/∂z at p)⁻¹ζ up to t = 1.
    """
    rep = rep_coordinates(model, p, normalized)
    zeta = as_vector(zeta)
    if method == "newton":
        return exph_newton(rep, zeta)
    if method == "ode":
        from .connection import integrate_geodesic

        v0 = linalg.solve(rep.jacobian(rep.p), zeta)
        trace = integrate_geodesic(model, rep.p, rep.p, v0, 1.0)
        z_end = trace.z[-1]
        ok = trace.terminal == "completed"
        res = float(np.linalg.norm(rep(z_end) - zeta)) if ok else np.inf
        return ExphResult(z=z_end, converged=ok, iterations=len(trace.t) - 1, residual=res, method="ode")
    raise ValueError(f"Unknown exph method: {method}")


def exph_q_inverse(model: KernelModel, p: np.ndarray, q: np.ndarray, z: np.ndarray, factor: str = "raw") -> np.ndarray:
    """
    Affine coordinate of z in the ∇ᵖ-chart centered at q:
    M·[b(z) − b(q)] with b = ∂/∂w̄ log K(·, w̄)|_{w=p}.
    factor="raw" uses M = G(q,p̄)⁻ᵀ (identity Jacobian at q);
    factor="sqrtm" uses the inverse principal square root of G(q,p̄)ᵀ.
    """
    p, q, z = as_vector(p), as_vector(q), as_vector(z)
    scales = basepoint_scales(model, PolarizedPoint.diag(p))
    qpt = PolarizedPoint.based(q, p)
    g = metric_at(model, qpt, scales).g
    if factor == "raw":
        m = linalg.inv(g.T)
    elif factor == "sqrtm":
        m = linalg.inv(linalg.sqrtm(g.T))
    else:
        raise ValueError(f"Unknown chart factor: {factor}")
    b_q, _ = kernel_derivatives(model, qpt, scales.k_scale)
    b_z, _ = kernel_derivatives(model, PolarizedPoint.based(z, p), scales.k_scale)
    return m @ (b_z - b_q)


def affinity_residual(chart: Callable[[np.ndarray], np.ndarray], triples: List[Tuple[np.ndarray, np.ndarray, complex]]) -> float:
    """
    For ζ_c = ζ_a + t(ζ_b − ζ_a), max |A(ζ_c) − A(ζ_a) − t(A(ζ_b) − A(ζ_a))| over the triples.
    """
    worst = 0.0
    for za, zb, t in triples:
        zc = za + t * (zb - za)
        fa, fb, fc = chart(za), chart(zb), chart(zc)
        worst = max(worst, float(np.linalg.norm(fc - fa - t * (fb - fa))))
    return worst


def collinear_triples(rng: np.random.Generator, count: int, dim: int, radius: float) -> List[Tuple[np.ndarray, np.ndarray, complex]]:
    out: List[Tuple[np.ndarray, np.ndarray, complex]] = []
    for _ in range(count):
        a = radius * (rng.uniform(-1, 1, dim) + 1j * rng.uniform(-1, 1, dim)) / np.sqrt(2 * dim)
        b = radius * (rng.uniform(-1, 1, dim) + 1j * rng.uniform(-1, 1, dim)) / np.sqrt(2 * dim)
        t = complex(rng.uniform(0.1, 0.9), rng.uniform(-0.2, 0.2))
        out.append((a, b, t))
    return out


def chart_transition(model: KernelModel, p: np.ndarray, q: np.ndarray, factor: str = "raw") -> Callable[[np.ndarray], np.ndarray]:
    """ζ ↦ exph_q⁻¹(exph_p(ζ)), the transition between the charts at p and q."""
    rep = rep_coordinates(model, p)

    def transition(zeta: np.ndarray) -> np.ndarray:
        res = exph_newton(rep, zeta)
        if not res.converged:
            raise ExphFailure(f"exph_p did not converge for zeta={zeta} (residual {res.residual:.3g})")
        return exph_q_inverse(model, p, q, res.z, factor)

    return transition


def chart_pair_transition(model: KernelModel, p: np.ndarray, x: np.ndarray, y: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """ζ ↦ exph_y⁻¹(exph_x(ζ)) for two ∇ᵖ-charts centered at x and y."""
    x, y = as_vector(x), as_vector(y)

    def transition(zeta: np.ndarray) -> np.ndarray:
        z = _exph_at(model, p, x, zeta)
        return exph_q_inverse(model, p, y, z)

    return transition


def _exph_at(model: KernelModel, p: np.ndarray, q: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Invert exph_q⁻¹ (raw chart at q for ∇ᵖ) by Newton."""
    scales = basepoint_scales(model, PolarizedPoint.diag(p))
    z = q + zeta
    for _ in range(model.tol.newton_max_iter):
        f = exph_q_inverse(model, p, q, z) - zeta
        if float(np.linalg.norm(f)) < model.tol.newton_tol * (1.0 + float(np.linalg.norm(zeta))):
            return z
        g_q = metric_at(model, PolarizedPoint.based(q, p), scales).g
        g_z = metric_at(model, PolarizedPoint.based(z, p), scales).g
        jac = linalg.inv(g_q.T) @ g_z.T
        z = z - linalg.solve(jac, f)
    raise ExphFailure(f"chart at q={q} did not converge for zeta={zeta}")


# -- Verification

@dataclass(frozen=True, eq=False)
class LinearityReport:
    residual: float
    conj_residual: float
    matrix: np.ndarray
    samples: int
    failures: int = 0


def _lstsq_fit(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, float]:
    """Best M with y ≈ x·Mᵀ row-wise; returns (M, max row deviation)."""
    m, *_ = linalg.lstsq(x, y)
    dev = y - x @ m
    return m.T, float(np.max(np.linalg.norm(dev, axis=1)))


def verify_linearity(model: KernelModel, f: Automorphism, p: np.ndarray, samples: int, rng: Optional[np.random.Generator] = None, radius: float = 0.1, model_dst: Optional[KernelModel] = None) -> LinearityReport:
    """
    Fits ζ ↦ rep_{f(p)}(f(rep_p⁻¹(ζ))) by a ℂ-linear map and by a conjugate-linear map;
    the first should be exact, the second clearly worse.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    dst = model if model_dst is None else model_dst
    p = as_vector(p)
    n = p.shape[0]
    rep_src = rep_coordinates(model, p)
    rep_dst = rep_coordinates(dst, f(p))

    xs: List[np.ndarray] = []
    ys: List[np.ndarray] = []
    failures = 0
    attempts = 0
    while len(xs) < samples:
        attempts += 1
        zeta = radius * (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)) / np.sqrt(2 * n)
        try:
            res = exph_newton(rep_src, zeta)
            if not res.converged:
                raise ExphFailure("not converged")
            ys.append(rep_dst(f(res.z)))
            xs.append(zeta)
        except BergmanError:
            failures += 1
            if failures > max(1, attempts // 2) and attempts >= 4:
                raise ExphFailure(f"more than half of the linearity samples failed ({failures}/{attempts})")

    x = np.array(xs)
    y = np.array(ys)
    mat, resid = _lstsq_fit(x, y)
    _, conj_resid = _lstsq_fit(np.conj(x), y)
    return LinearityReport(residual=resid, conj_residual=conj_resid, matrix=mat, samples=samples, failures=failures)


@dataclass(frozen=True, eq=False)
class NormalCoordinateReport:
    identity: float      # |g̃(0) − I|
    first: float         # max |∂g̃| at 0
    pure_second: float   # max |∂²g̃/∂ζᵣ∂ζₛ| at 0
    mixed_second: float  # max |∂²g̃/∂ζᵣ∂ζ̄ₛ| at 0 (curvature, not expected to vanish)


def pulled_back_metric(rep: RepCoordinates, zeta: np.ndarray) -> np.ndarray:
    """Diagonal Bergman metric expressed in the coordinates ζ: J⁻ᵀ·G(z,z̄)·J̄⁻¹ at z = exph(ζ)."""
    res = exph_newton(rep, zeta)
    if not res.converged:
        raise ExphFailure(f"exph failed at zeta={zeta} (residual {res.residual:.3g})")
    z = res.z
    g = metric_at(rep.model, PolarizedPoint.diag(z)).g
    jinv = linalg.inv(rep.jacobian(z))
    return jinv.T @ g @ np.conj(jinv)


def verify_normal_coordinates(model: KernelModel, p: np.ndarray, order: int = 2, step: float = 1e-3) -> NormalCoordinateReport:
    if order > 2:
        raise ValueError("normal-coordinate checks go up to order 2")
    rep = rep_coordinates(model, p, normalized=True)
    n = rep.p.shape[0]
    zero = np.zeros(n, dtype=complex)

    def gt(zeta: np.ndarray) -> np.ndarray:
        return pulled_back_metric(rep, zeta)

    g0 = gt(zero)
    identity_res = float(np.max(np.abs(g0 - np.eye(n))))

    # real directions: x_r then y_r
    dirs = [fd.unit(n, r) for r in range(n)] + [1j * fd.unit(n, r) for r in range(n)]
    h = step
    first = np.array([fd.central2(gt, zero, d, h) for d in dirs])
    first_res = float(np.max(np.abs(first))) if order >= 1 else 0.0

    pure = 0.0
    mixed = 0.0
    if order >= 2:
        second = {}
        for a in range(2 * n):
            for b in range(a, 2 * n):
                if a == b:
                    val = (gt(zero + h * dirs[a]) - 2.0 * g0 + gt(zero - h * dirs[a])) / h**2
                else:
                    val = (
                        gt(zero + h * dirs[a] + h * dirs[b])
                        - gt(zero + h * dirs[a] - h * dirs[b])
                        - gt(zero - h * dirs[a] + h * dirs[b])
                        + gt(zero - h * dirs[a] - h * dirs[b])
                    ) / (4.0 * h * h)
                second[(a, b)] = second[(b, a)] = val
        for r in range(n):
            for s in range(n):
                xx, yy = second[(r, s)], second[(n + r, n + s)]
                xy, yx = second[(r, n + s)], second[(n + r, s)]
                # ∂ζ = (∂x − i∂y)/2, ∂ζ̄ = (∂x + i∂y)/2
                d_zz = 0.25 * (xx - 1j * xy - 1j * yx - yy)
                d_zzbar = 0.25 * (xx + 1j * xy - 1j * yx + yy)
                pure = max(pure, float(np.max(np.abs(d_zz))))
                mixed = max(mixed, float(np.max(np.abs(d_zzbar))))
    return NormalCoordinateReport(identity=identity_res, first=first_res, pure_second=pure, mixed_second=mixed)


def annulus_elliptic_form_residual(model: KernelModel, p: np.ndarray, zs: np.ndarray) -> float:
    """
    Fits rep_p(z) = C₁·℘′(log zp̄)/(℘(log zp̄) + η₁/ω₁) + C₂ from the first two points
    and returns the max relative deviation over the rest.
    """
    from .elliptic import wp, wp_prime

    if model.domain.kind != "annulus":
        raise ValueError("elliptic form only applies to the annulus")
    lat = model._lattices[0]
    assert lat is not None
    rep = rep_coordinates(model, p)
    pc = np.conj(as_vector(p)[0])

    def ell(z: complex) -> complex:
        u = complex(np.log(z * pc))
        return wp_prime(lat, u) / (wp(lat, u) + lat.c)

    vals = [complex(rep(np.array([z]))[0]) for z in zs]
    e = [ell(complex(z)) for z in zs]
    c1 = (vals[0] - vals[1]) / (e[0] - e[1])
    c2 = vals[0] - c1 * e[0]
    worst = 0.0
    for v, ev in zip(vals[2:], e[2:]):
        worst = max(worst, abs(v - (c1 * ev + c2)) / max(abs(v), 1.0))
    return float(worst)
