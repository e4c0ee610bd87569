from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.integrate import RK45
from scipy.optimize import brentq

from .automorphisms import Automorphism
from .errors import BergmanError, ExphFailure
from .kernels import KernelModel, kernel_derivatives
from .metric import Scales, basepoint_scales, christoffel_at, lu_det, metric_matrix
from .points import PolarizedPoint, as_vector
from .representative import exph_newton, rep_coordinates

logger = logging.getLogger(__name__)

TERMINALS = ("completed", "hit_variety", "left_domain", "step_underflow")

# Failures inside the right-hand side mean the trajectory ran into a pole of Γ
_RHS_FAILURES = (BergmanError, linalg.LinAlgError, ZeroDivisionError, FloatingPointError)


@dataclass(frozen=True)
class GeodesicState:
    t: float
    z: np.ndarray
    v: np.ndarray


@dataclass(frozen=True, eq=False)
class GeodesicTrace:
    """Samples of a ∇ᵖ-geodesic: t (k,), z (k, n), v (k, n) and the reason integration stopped."""

    t: np.ndarray
    z: np.ndarray
    v: np.ndarray
    terminal: str
    message: str = ""

    @property
    def end(self) -> GeodesicState:
        return GeodesicState(float(self.t[-1]), self.z[-1], self.v[-1])


def geodesic_rhs(model: KernelModel, p: np.ndarray) -> Callable[[float, np.ndarray], np.ndarray]:
    """(z, v)' = (v, −Γ(z,p̄)(v,v))."""
    n = p.shape[0]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        z, v = y[:n], y[n:]
        gamma = christoffel_at(model, PolarizedPoint.based(z, p), check=False)
        return np.concatenate([v, -gamma.contract(v)])

    return rhs


def variety_monitor(model: KernelModel, p: np.ndarray, z: np.ndarray, scales: Scales) -> float:
    """min(|K(z,p̄)|/K_scale, |det G(z,p̄)|/G_scale); Z₀ᵖ ∪ Z₁ᵖ is where this vanishes."""
    pt = PolarizedPoint.based(z, p)
    try:
        k = model.eval(pt, check=False)
        det = lu_det(metric_matrix(model, pt, check=False))
    except _RHS_FAILURES:
        return 0.0
    val = min(abs(k) / scales.k_scale, abs(det) / scales.g_scale)
    return float(val) if np.isfinite(val) else 0.0


def integrate_geodesic(
    model: KernelModel,
    p: np.ndarray,
    q0: np.ndarray,
    v0: np.ndarray,
    t_max: float,
    t_eval: Optional[Sequence[float]] = None,
) -> GeodesicTrace:
    """
    Integrates z'' + Γ(z,p̄)(z', z') = 0 from z(0) = q0, z'(0) = v0 with RK45.

    Without t_eval every accepted step is recorded; with t_eval the dense output is sampled
    at those times and, if integration stops early, the stopping point is appended.
    Stopping rules: variety monitor below event_threshold (hit_variety), boundary distance
    below event_threshold (left_domain), accepted step shorter than min_step or solver
    failure (step_underflow).
    """
    p, q0, v0 = as_vector(p), as_vector(q0), as_vector(v0)
    n = p.shape[0]
    tol = model.tol
    domain = model.domain
    scales = basepoint_scales(model, PolarizedPoint.diag(p))
    threshold = tol.event_threshold

    def monitors(y: np.ndarray) -> Tuple[float, float]:
        z = y[:n]
        return variety_monitor(model, p, z, scales) - threshold, domain.boundary_distance(z) - threshold

    y0 = np.concatenate([q0, v0]).astype(complex)
    if monitors(y0)[1] <= 0.0:
        return GeodesicTrace(t=np.array([0.0]), z=q0[None, :], v=v0[None, :], terminal="left_domain", message="start point on the boundary")
    if monitors(y0)[0] <= 0.0:
        return GeodesicTrace(t=np.array([0.0]), z=q0[None, :], v=v0[None, :], terminal="hit_variety", message="start point on Z0 or Z1")

    wanted = None if t_eval is None else np.asarray(t_eval, dtype=float)
    ts: List[float] = []
    ys: List[np.ndarray] = []
    if wanted is None or (wanted.size and wanted[0] == 0.0):
        ts.append(0.0)
        ys.append(y0)
    next_idx = 1 if wanted is not None and wanted.size and wanted[0] == 0.0 else 0

    solver = RK45(geodesic_rhs(model, p), 0.0, y0, t_max, rtol=tol.ode_tol, atol=tol.ode_tol)
    terminal = "completed"
    message = ""
    while solver.status == "running":
        try:
            msg = solver.step()
        except _RHS_FAILURES as e:
            terminal, message = "hit_variety", str(e)
            break
        if solver.status == "failed":
            terminal, message = "step_underflow", str(msg)
            break
        if not np.all(np.isfinite(solver.y)):
            terminal, message = "hit_variety", "non-finite state"
            break

        t_old, t_new = float(solver.t_old), float(solver.t)
        m_var, m_bdy = monitors(solver.y)
        hit = None
        if m_var <= 0.0 or m_bdy <= 0.0:
            sol = solver.dense_output()
            which = 0 if m_var <= 0.0 else 1
            terminal = "hit_variety" if which == 0 else "left_domain"
            try:
                hit = brentq(lambda s: monitors(sol(s))[which], t_old, t_new, xtol=1e-14)
            except ValueError:
                hit = t_new
            t_new = hit

        if wanted is not None:
            sol = solver.dense_output()
            while next_idx < wanted.size and wanted[next_idx] <= t_new:
                ts.append(float(wanted[next_idx]))
                ys.append(sol(wanted[next_idx]))
                next_idx += 1
            if hit is not None:
                ts.append(t_new)
                ys.append(sol(t_new))
        elif hit is not None:
            ts.append(t_new)
            ys.append(solver.dense_output()(t_new))
        else:
            ts.append(t_new)
            ys.append(solver.y.copy())

        if hit is not None:
            message = f"event at t={t_new:.6g}"
            break
        if solver.status == "running" and solver.step_size is not None and solver.step_size < tol.min_step:
            terminal, message = "step_underflow", f"step {solver.step_size:.3g} below {tol.min_step:.3g}"
            break

    if not ys:
        ts.append(0.0)
        ys.append(y0)
    arr = np.array(ys)
    if terminal != "completed":
        logger.debug("geodesic from %s stopped: %s (%s)", q0, terminal, message)
    return GeodesicTrace(t=np.array(ts), z=arr[:, :n], v=arr[:, n:], terminal=terminal, message=message)


# -- Checks on the connection

def straightening_residual(model: KernelModel, p: np.ndarray, zeta: np.ndarray, samples: int = 11) -> float:
    """
    max over t ∈ [0,1] of |rep_p(γ(t)) − tζ| / (1 + |ζ|) for the geodesic γ with γ(0) = p, γ'(0) = ζ.
    """
    p, zeta = as_vector(p), as_vector(zeta)
    rep = rep_coordinates(model, p)
    ts = np.linspace(0.0, 1.0, samples)
    trace = integrate_geodesic(model, p, p, zeta, 1.0, t_eval=ts)
    if trace.terminal != "completed":
        raise ExphFailure(f"geodesic stopped early ({trace.terminal}) for zeta={zeta}")
    worst = 0.0
    for t, z in zip(trace.t, trace.z):
        worst = max(worst, float(np.linalg.norm(rep(z) - t * zeta)))
    return worst / (1.0 + float(np.linalg.norm(zeta)))


def verify_straight_lines(model: KernelModel, p: np.ndarray, zeta0: np.ndarray, direction: np.ndarray, samples: int = 11) -> float:
    """
    Maps the segment ζ₀ + s·d, s ∈ [0,1], through exph_p and compares it with the geodesic
    re-integrated from the image of ζ₀ with the velocity that corresponds to d.
    """
    p, zeta0, direction = as_vector(p), as_vector(zeta0), as_vector(direction)
    rep = rep_coordinates(model, p)
    ss = np.linspace(0.0, 1.0, samples)
    chart_pts = []
    for s in ss:
        res = exph_newton(rep, zeta0 + s * direction)
        if not res.converged:
            raise ExphFailure(f"segment point s={s:.3g} left the chart (residual {res.residual:.3g})")
        chart_pts.append(res.z)
    z0 = chart_pts[0]
    v0 = linalg.solve(rep.jacobian(z0), direction)
    trace = integrate_geodesic(model, p, z0, v0, 1.0, t_eval=ss)
    if trace.terminal != "completed":
        raise ExphFailure(f"re-integrated geodesic stopped early: {trace.terminal}")
    return float(np.max(np.linalg.norm(trace.z - np.array(chart_pts), axis=1)))


@dataclass(frozen=True)
class NaturalityReport:
    ode_residual: float
    pointwise_gap: float


def verify_naturality(
    model_src: KernelModel,
    model_dst: KernelModel,
    f: Automorphism,
    p: np.ndarray,
    q0: np.ndarray,
    v0: np.ndarray,
    t_max: float = 1.0,
    samples: int = 21,
) -> NaturalityReport:
    """
    Pushes a ∇ᵖ-geodesic γ through f. With w = f∘γ,
    w' = Df·γ' and w'' = D²f[γ',γ'] − Df·Γᵖ(γ',γ'),
    and ode_residual is max |w'' + Γ^{f(p)}(w)(w', w')|.
    pointwise_gap compares f∘γ with the ∇^{f(p)}-geodesic integrated from f(q0).
    """
    p, q0, v0 = as_vector(p), as_vector(q0), as_vector(v0)
    q = f(p)
    ts = np.linspace(0.0, t_max, samples)
    src = integrate_geodesic(model_src, p, q0, v0, t_max, t_eval=ts)
    if src.terminal != "completed":
        raise ExphFailure(f"source geodesic stopped early: {src.terminal}")

    worst = 0.0
    for z, v in zip(src.z, src.v):
        accel = -christoffel_at(model_src, PolarizedPoint.based(z, p), check=False).contract(v)
        jac = f.jacobian(z)
        w = f(z)
        w1 = jac @ v
        w2 = f.second(z, v) + jac @ accel
        gamma_q = christoffel_at(model_dst, PolarizedPoint.based(w, q), check=False)
        worst = max(worst, float(np.linalg.norm(w2 + gamma_q.contract(w1))))

    dst = integrate_geodesic(model_dst, q, f(q0), f.jacobian(q0) @ v0, t_max, t_eval=ts)
    if dst.terminal != "completed":
        raise ExphFailure(f"image geodesic stopped early: {dst.terminal}")
    pushed = np.array([f(z) for z in src.z])
    gap = float(np.max(np.linalg.norm(pushed - dst.z, axis=1)))
    return NaturalityReport(ode_residual=worst, pointwise_gap=gap)


def intrinsic_delta(model: KernelModel, p: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """|b(x) − b(y)| with b(z) = ∂/∂w̄ log K(z, w̄)|_{w=p}, no normalization factor."""
    p = as_vector(p)
    k_scale = model.scale(PolarizedPoint.diag(p))
    bx, _ = kernel_derivatives(model, PolarizedPoint.based(x, p), k_scale)
    by, _ = kernel_derivatives(model, PolarizedPoint.based(y, p), k_scale)
    return float(np.linalg.norm(bx - by))
