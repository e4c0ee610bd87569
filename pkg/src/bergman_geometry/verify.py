from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import automorphisms as auto
from . import finite_diff as fd
from .connection import (
    integrate_geodesic,
    intrinsic_delta,
    straightening_residual,
    verify_naturality,
    verify_straight_lines,
)
from .distance import intrinsic_distance
from .domains import DomainDescriptor
from .elliptic import axis_symmetry_residual, lattice_distance, make_lattice, ode_residual, wp, wp_lattice_sum
from .errors import BergmanError, ConfigError
from .gram import build_gram_kernel, gram_kernel_eval
from .kernels import KernelModel, annulus_cross_check, transformation_check
from .metric import basepoint_scales, christoffel_at, curvature_convergence_ratio, curvature_residual, lu_det, metric_at, metric_matrix
from .parameters import DEFAULT_TOLERANCES, GramParams, Tolerances
from .points import PolarizedPoint
from .representative import (
    affinity_residual,
    annulus_elliptic_form_residual,
    chart_pair_transition,
    chart_transition,
    collinear_triples,
    exph_newton,
    exph_q_inverse,
    rep_coordinates,
    rep_map,
    verify_linearity,
    verify_normal_coordinates,
)
from .zeros import (
    annulus_h,
    annulus_roots,
    annulus_zero_count,
    annulus_zero_points,
    pole_probe,
    product_factorization_residual,
    product_gap_search,
    probe_variety,
    variety_image_gap,
    zhat1_det,
    zhat1_identity_residual,
)

logger = logging.getLogger(__name__)

SUITES = (
    "elliptic",
    "kernels",
    "gram",
    "flatness",
    "rep",
    "normal",
    "linearity",
    "geodesics",
    "charts",
    "annulus",
    "zeros",
    "distance",
    "product-gap",
)

DEFAULT_ANNULUS_RADII = (0.05, 0.1, 0.3, 0.5, 0.7)
ELLIPTIC_RADII = (0.05, 0.1, 0.3, 0.5)
PRODUCT_GAP_RADII = (0.01, 0.02, 0.05)

# Errors a measurement may raise; each one turns into a failed check
_MEASURE_ERRORS = (BergmanError, np.linalg.LinAlgError, ValueError, ArithmeticError, IndexError)


def default_catalog(r: float = 0.3) -> Tuple[DomainDescriptor, ...]:
    return (
        DomainDescriptor.disk(),
        DomainDescriptor.ball(2),
        DomainDescriptor.polydisc(2),
        DomainDescriptor.annulus(r),
        DomainDescriptor.product(DomainDescriptor.annulus(r), DomainDescriptor.disk()),
    )


def domain_label(d: DomainDescriptor) -> str:
    if d.kind == "disk":
        return "disk"
    if d.kind in ("ball", "polydisc"):
        return f"{d.kind}({d.n})"
    if d.kind == "annulus":
        return f"annulus({d.r:g})"
    return "product(" + ",".join(domain_label(f) for f in d.factors) + ")"


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    domain: str
    measured: float
    threshold: float
    comparison: str
    passed: bool
    detail: str = ""


def _compare(measured: float, threshold: float, comparison: str) -> bool:
    if comparison == "info":
        return True
    if not np.isfinite(measured):
        return False
    if comparison == "<":
        return measured < threshold
    if comparison == ">":
        return measured > threshold
    if comparison == ">=":
        return measured >= threshold
    raise ValueError(f"Unknown comparison: {comparison}")


@dataclass
class SuiteContext:
    tol: Tolerances = DEFAULT_TOLERANCES
    seed: int = 7
    catalog: Tuple[DomainDescriptor, ...] = field(default_factory=default_catalog)
    annulus_radii: Tuple[float, ...] = DEFAULT_ANNULUS_RADII
    gram: GramParams = GramParams()
    checks: List[Check] = field(default_factory=list)
    _models: Dict[Tuple[str, str], KernelModel] = field(default_factory=dict)

    def rng(self, suite: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, SUITES.index(suite)])

    def model(self, d: DomainDescriptor) -> KernelModel:
        key = (repr(d), "closed_form")
        if key not in self._models:
            self._models[key] = KernelModel(d, tol=self.tol)
        return self._models[key]

    @property
    def annulus_r(self) -> float:
        for d in self.catalog:
            if d.kind == "annulus":
                return d.r
        return self.annulus_radii[0]

    def record(self, suite: str, name: str, domain: str, threshold: float, comparison: str, measure: Callable[[], float], detail: str = "") -> Check:
        """Runs measure(); an exception counts as a failed check with the error as detail."""
        try:
            measured = float(measure())
        except _MEASURE_ERRORS as e:
            chk = Check(suite, name, domain, float("nan"), threshold, comparison, comparison == "info", f"{type(e).__name__}: {e}")
        else:
            chk = Check(suite, name, domain, measured, threshold, comparison, _compare(measured, threshold, comparison), detail)
        if not chk.passed:
            logger.warning("FAIL %s/%s [%s]: measured=%s threshold=%s %s", suite, name, domain, chk.measured, threshold, chk.detail)
        self.checks.append(chk)
        return chk


# -- Sampling helpers

def _polarized_samples(d: DomainDescriptor, rng: np.random.Generator, count: int, margin: float = 0.1) -> List[PolarizedPoint]:
    zs = d.sample(rng, count, margin)
    ws = d.sample(rng, count, margin)
    return [PolarizedPoint(z, np.conj(w)) for z, w in zip(zs, ws)]


def _based_pairs(model: KernelModel, rng: np.random.Generator, count: int, margin: float = 0.15, floor: float = 0.05) -> List[Tuple[np.ndarray, np.ndarray]]:
    """(p, z) pairs with K(z,p̄) and det G(z,p̄) at least floor times their basepoint values."""
    out: List[Tuple[np.ndarray, np.ndarray]] = []
    d = model.domain
    for _ in range(50 * count):
        if len(out) >= count:
            break
        p = d.sample(rng, 1, margin)[0]
        z = d.sample(rng, 1, margin)[0]
        sc = basepoint_scales(model, PolarizedPoint.diag(p))
        pt = PolarizedPoint.based(z, p)
        k = model.eval(pt, check=False)
        det = lu_det(metric_matrix(model, pt, check=False))
        if abs(k) >= floor * sc.k_scale and abs(det) >= floor * sc.g_scale:
            out.append((p, z))
    return out


def _small_vector(rng: np.random.Generator, n: int, norm: float) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return norm * v / np.linalg.norm(v)


# -- Suites

def suite_elliptic(ctx: SuiteContext) -> None:
    rng = ctx.rng("elliptic")
    for r in ELLIPTIC_RADII:
        lat = make_lattice(r, ctx.tol)
        label = f"annulus({r:g})"
        us = []
        while len(us) < 20:
            u = complex(rng.uniform(-0.95, 0.95) * lat.omega1, rng.uniform(-0.95, 0.95) * np.pi)
            if lattice_distance(lat, u) > 0.1:
                us.append(u)
        ctx.record("elliptic", "legendre_relation", label, 1e-10, "<", lambda: lat.legendre_residual)
        ctx.record("elliptic", "weierstrass_ode", label, 1e-9, "<", lambda: max(ode_residual(lat, u, ctx.tol) for u in us))
        ctx.record("elliptic", "axis_symmetry", label, 1e-9, "<", lambda: axis_symmetry_residual(lat, 20))
        # relative error is meaningless next to the two zeros of ℘ in each cell
        oracle_us = [u for u in us if abs(wp(lat, u, ctx.tol)) > 0.5]
        while len(oracle_us) < 10:
            u = complex(rng.uniform(-0.95, 0.95) * lat.omega1, rng.uniform(-0.95, 0.95) * np.pi)
            if lattice_distance(lat, u) > 0.1 and abs(wp(lat, u, ctx.tol)) > 0.5:
                oracle_us.append(u)
        oracle_us = oracle_us[:10]
        ctx.record(
            "elliptic",
            "lattice_sum_oracle",
            label,
            1e-8,
            "<",
            lambda: max(abs(wp(lat, u, ctx.tol) - wp_lattice_sum(lat, u)) / abs(wp(lat, u, ctx.tol)) for u in oracle_us),
            detail=f"{len(oracle_us)} points",
        )


def suite_kernels(ctx: SuiteContext) -> None:
    rng = ctx.rng("kernels")
    for r in ELLIPTIC_RADII:
        d = DomainDescriptor.annulus(r)
        model = ctx.model(d)
        pts = _polarized_samples(d, rng, 100)
        ctx.record("kernels", "weierstrass_vs_laurent", domain_label(d), 1e-8, "<", lambda: max(annulus_cross_check(model, pt) for pt in pts))

    for d in ctx.catalog:
        model = ctx.model(d)
        pts = _polarized_samples(d, rng, 100)

        def hermitian() -> float:
            worst = 0.0
            for pt in pts:
                a = model.eval(pt)
                b = np.conj(model.eval(pt.swapped()))
                worst = max(worst, abs(a - b) / abs(a))
            return worst

        ctx.record("kernels", "hermitian_symmetry", domain_label(d), 1e-12, "<", hermitian, detail=f"{len(pts)} pairs")

        grid = d.grid(50, 0.01)
        ctx.record(
            "kernels",
            "diagonal_positive",
            domain_label(d),
            0.0,
            ">",
            lambda: min(model.eval(PolarizedPoint.diag(z)).real for z in grid),
            detail=f"{len(grid)} grid points",
        )

    r = ctx.annulus_r
    maps = [
        (auto.disk_mobius(0.3 + 0.2j, 0.7), DomainDescriptor.disk()),
        (auto.disk_rotation(1.3), DomainDescriptor.disk()),
        (auto.annulus_rotation(r, 0.9), DomainDescriptor.annulus(r)),
        (auto.annulus_inversion(r), DomainDescriptor.annulus(r)),
        (auto.ball_unitary(np.array([[0.6, 0.8j], [0.8j, 0.6]])), DomainDescriptor.ball(2)),
    ]
    for f, d in maps:
        model = ctx.model(d)
        pts = _polarized_samples(d, rng, 10)
        ctx.record("kernels", f"transformation_rule[{f.name}]", domain_label(d), 1e-10, "<", lambda: max(transformation_check(f, model, model, pt) for pt in pts))


def suite_gram(ctx: SuiteContext) -> None:
    disk = DomainDescriptor.disk()
    rng = ctx.rng("gram")
    rad = 0.7 * np.sqrt(rng.uniform(0.0, 1.0, 30))
    pts = [PolarizedPoint.diag(x * np.exp(1j * t)) for x, t in zip(rad, rng.uniform(0, 2 * np.pi, 30))]

    def error_at(domain: DomainDescriptor, cap: int, points: Sequence[PolarizedPoint]) -> float:
        gk = build_gram_kernel(domain, cap, ctx.gram.quad_resolution, ctx.gram)
        m = ctx.model(domain)
        return max(abs(gram_kernel_eval(gk, pt) - m.eval(pt)) / abs(m.eval(pt)) for pt in points)

    errors: Dict[int, float] = {}

    def cap_error(cap: int) -> float:
        errors[cap] = error_at(disk, cap, pts)
        return errors[cap]

    for cap in (5, 10, 20):
        ctx.record("gram", f"disk_cap_{cap}", "disk", np.inf, "info", lambda: cap_error(cap))
    ctx.record("gram", "disk_cap_30", "disk", 1e-6, "<", lambda: cap_error(30))

    def monotone() -> float:
        caps = sorted(errors)
        if len(caps) < 4:
            raise ValueError("missing Gram errors")
        return max(errors[b] / errors[a] for a, b in zip(caps, caps[1:]))

    ctx.record("gram", "disk_error_monotone", "disk", 1.0, "<", monotone)

    # Laurent tails at |z|² = 0.49 against r²/|z|² = 0.51 stay below 1e-8 at cap 30
    ann = DomainDescriptor.annulus(0.5)
    ann_pts = [PolarizedPoint.diag(0.7 * np.exp(1j * t)) for t in rng.uniform(0, 2 * np.pi, 20)]
    ctx.record("gram", "annulus_circle_0.7", domain_label(ann), 1e-6, "<", lambda: error_at(ann, ctx.gram.degree_cap, ann_pts))


def suite_flatness(ctx: SuiteContext) -> None:
    rng = ctx.rng("flatness")
    for d in ctx.catalog:
        model = ctx.model(d)
        label = domain_label(d)
        pairs = _based_pairs(model, rng, 50)

        ctx.record("flatness", "curvature", label, 1e-6, "<", lambda: max(curvature_residual(model, p, z, 1e-4) for p, z in pairs))

        def symmetry() -> float:
            worst = 0.0
            for p, z in pairs:
                gam = christoffel_at(model, PolarizedPoint.based(z, p)).gamma
                worst = max(worst, float(np.max(np.abs(gam - np.transpose(gam, (0, 2, 1))))) / max(1.0, float(np.max(np.abs(gam)))))
            return worst

        ctx.record("flatness", "christoffel_symmetry", label, 1e-10, "<", symmetry)
        ctx.record(
            "flatness",
            "metric_positive_definite",
            label,
            0.5,
            "<",
            lambda: float(sum(not metric_at(model, PolarizedPoint.diag(z)).positive_definite for z in d.sample(rng, 20, 0.05))),
        )
        if d.kind == "ball":
            zero = np.zeros(d.dim, dtype=complex)

            def frozen_origin() -> float:
                g0 = metric_at(model, PolarizedPoint.diag(zero)).g
                return max(float(np.max(np.abs(metric_at(model, PolarizedPoint.based(z, zero)).g - g0))) for z in d.sample(rng, 10, 0.1))

            ctx.record("flatness", "ball_metric_at_origin_constant", label, 1e-12, "<", frozen_origin)
            if d.dim == 2:
                # off the origin the difference error of the ball block is O(h²) and nonzero
                pc, zc = np.array([0.3, -0.2j]), np.array([0.1 + 0.2j, 0.25])
                ctx.record("flatness", "curvature_second_order", label, 0.5, "<", lambda: abs(curvature_convergence_ratio(model, pc, zc, 2e-3) - 4.0))
                with_disk = DomainDescriptor.product(d, DomainDescriptor.disk())
                wm = ctx.model(with_disk)
                ctx.record(
                    "flatness",
                    "curvature_second_order",
                    domain_label(with_disk),
                    0.5,
                    "<",
                    lambda: abs(curvature_convergence_ratio(wm, np.append(pc, 0.4), np.append(zc, -0.3j), 2e-3) - 4.0),
                )


def suite_rep(ctx: SuiteContext) -> None:
    rng = ctx.rng("rep")
    disk = DomainDescriptor.disk()
    dm = ctx.model(disk)

    def disk_identity() -> float:
        rep = rep_coordinates(dm, np.zeros(1))
        axis = np.linspace(-0.95, 0.95, 51)
        worst = 0.0
        for y in axis:
            for x in axis:
                z = complex(x, y)
                if abs(z) < 0.95:
                    worst = max(worst, abs(rep(np.array([z]))[0] - z))
        return worst

    ctx.record("rep", "disk_rep_at_origin_is_identity", "disk", 1e-10, "<", disk_identity)

    def disk_closed_form() -> float:
        worst = 0.0
        for p in (0.1, -0.3 + 0.2j, 0.5j, 0.7, -0.45 - 0.45j):
            rep = rep_coordinates(dm, np.array([p]))
            for z in disk.sample(rng, 50, 0.05)[:, 0]:
                if abs(z - p) < 1e-3:
                    continue
                want = (1 - abs(p) ** 2) * (z - p) / (1 - z * np.conj(p))
                got = rep(np.array([z]))[0]
                worst = max(worst, abs(got - want) / abs(want))
        return worst

    ctx.record("rep", "disk_closed_form", "disk", 1e-8, "<", disk_closed_form)

    for d in ctx.catalog:
        model = ctx.model(d)
        label = domain_label(d)
        n = d.dim
        ps = d.sample(rng, 5, 0.2)

        ctx.record("rep", "vanishes_at_basepoint", label, 1e-14, "<", lambda: max(float(np.linalg.norm(rep_map(model, p, p))) for p in ps))

        def jacobian_at_p() -> float:
            worst = 0.0
            for p in ps:
                rep = rep_coordinates(model, p)
                h = fd.step_for(p, ctx.tol.fd_step)
                jac = np.array([fd.derivative(rep, p, fd.unit(n, l), h) for l in range(n)]).T
                worst = max(worst, float(np.max(np.abs(jac - np.eye(n)))))
            return worst

        ctx.record("rep", "jacobian_identity_at_basepoint", label, 1e-7, "<", jacobian_at_p)

        def round_trip() -> float:
            worst = 0.0
            for p in ps:
                rep = rep_coordinates(model, p)
                for _ in range(4):
                    z = p + _small_vector(rng, n, 0.05)
                    res = exph_newton(rep, rep(z))
                    worst = max(worst, float(np.linalg.norm(res.z - z)) if res.converged else np.inf)
            return worst

        ctx.record("rep", "exph_rep_round_trip", label, 1e-9, "<", round_trip)

        def cauchy_riemann() -> float:
            worst = 0.0
            for p in ps:
                rep = rep_coordinates(model, p)
                z = p + _small_vector(rng, n, 0.1)
                for j in range(n):
                    worst = max(worst, float(np.max(np.abs(fd.dbar(rep, z, j, 1e-5)))))
            return worst

        ctx.record("rep", "holomorphic", label, 1e-7, "<", cauchy_riemann)


def suite_normal(ctx: SuiteContext) -> None:
    rng = ctx.rng("normal")
    for d in (DomainDescriptor.disk(), DomainDescriptor.ball(2)):
        model = ctx.model(d)
        label = domain_label(d)
        ps = [np.zeros(d.dim, dtype=complex)] + list(d.sample(rng, 4, 0.4))
        reports = []

        def run() -> float:
            reports.extend(verify_normal_coordinates(model, p, 2, 1e-3) for p in ps)
            return max(r.identity for r in reports)

        ctx.record("normal", "metric_identity_at_center", label, 1e-5, "<", run)
        ctx.record("normal", "first_derivatives_vanish", label, 1e-5, "<", lambda: max(r.first for r in reports))
        ctx.record("normal", "pure_second_derivatives_vanish", label, 1e-5, "<", lambda: max(r.pure_second for r in reports))
        if d.kind == "disk":
            ctx.record("normal", "mixed_second_derivative_nonzero", label, 0.1, ">", lambda: min(r.mixed_second for r in reports))


def suite_linearity(ctx: SuiteContext) -> None:
    rng = ctx.rng("linearity")
    disk = DomainDescriptor.disk()
    dm = ctx.model(disk)
    for k in range(10):
        a = complex(*rng.uniform(-0.4, 0.4, 2))
        f = auto.disk_mobius(a, float(rng.uniform(0, 2 * np.pi)))
        p = disk.sample(rng, 1, 0.5)[0]
        reports: List = []

        def fit() -> float:
            reports.append(verify_linearity(dm, f, p, 12, rng))
            return reports[0].residual

        ctx.record("linearity", f"mobius_{k}", "disk", 1e-8, "<", fit, detail=f.name)
        ctx.record("linearity", f"mobius_{k}_conjugate_fit_worse", "disk", 10.0, ">=", lambda: reports[0].conj_residual / max(reports[0].residual, 1e-300))

    ctx.record(
        "linearity",
        "identity_matrix",
        "disk",
        1e-10,
        "<",
        lambda: float(np.max(np.abs(verify_linearity(dm, auto.identity(disk), np.array([0.2]), 8, rng).matrix - np.eye(1)))),
    )

    r = ctx.annulus_r
    ann = DomainDescriptor.annulus(r)
    am = ctx.model(ann)
    p = np.array([0.5 * (1 + r) + 0.02])
    for f in (auto.annulus_rotation(r, 0.9), auto.annulus_inversion(r)):
        fits: List = []

        def annulus_fit() -> float:
            fits.append(verify_linearity(am, f, p, 12, rng, radius=0.05))
            return fits[0].residual

        ctx.record("linearity", f.name, domain_label(ann), 1e-7, "<", annulus_fit)
        ctx.record("linearity", f"{f.name}_conjugate_fit_worse", domain_label(ann), 10.0, ">=", lambda: fits[0].conj_residual / max(fits[0].residual, 1e-300))


def suite_geodesics(ctx: SuiteContext) -> None:
    rng = ctx.rng("geodesics")
    for d in ctx.catalog:
        model = ctx.model(d)
        label = domain_label(d)
        n = d.dim
        cases = [(p, _small_vector(rng, n, 0.05)) for p in d.sample(rng, 20, 0.15)]
        ctx.record("geodesics", "rep_straightening", label, 1e-7, "<", lambda: max(straightening_residual(model, p, zeta) for p, zeta in cases))

        def affine_parameter() -> float:
            worst = 0.0
            for p, zeta in cases[:5]:
                a = integrate_geodesic(model, p, p, zeta, 1.0)
                b = integrate_geodesic(model, p, p, 2.0 * zeta, 0.5)
                if a.terminal != "completed" or b.terminal != "completed":
                    return np.inf
                worst = max(worst, float(np.linalg.norm(a.z[-1] - b.z[-1])))
            return worst

        ctx.record("geodesics", "affine_parameter", label, 1e-9, "<", affine_parameter)

    disk = DomainDescriptor.disk()
    dm = ctx.model(disk)
    ctx.record(
        "geodesics",
        "naturality_mobius",
        "disk",
        1e-7,
        "<",
        lambda: verify_naturality(dm, dm, auto.disk_mobius(0.3), np.array([0.1]), np.array([0.1]), np.array([0.2 + 0.1j])).ode_residual,
    )
    ctx.record(
        "geodesics",
        "naturality_rotation_pointwise",
        "disk",
        1e-9,
        "<",
        lambda: verify_naturality(dm, dm, auto.disk_rotation(0.8), np.array([0.3]), np.array([0.2j]), np.array([0.15])).pointwise_gap,
    )
    ctx.record("geodesics", "straight_line_through_center", "disk", 1e-8, "<", lambda: verify_straight_lines(dm, np.array([0.4]), np.zeros(1), np.array([0.2 - 0.1j])))
    ctx.record("geodesics", "straight_line_offset", "disk", 1e-7, "<", lambda: verify_straight_lines(dm, np.array([0.4]), np.array([0.1]), np.array([0.15j])))

    ball = DomainDescriptor.ball(2)
    bm = ctx.model(ball)
    pb = np.array([0.2, -0.1j])
    unitary = auto.ball_unitary(np.array([[0.6, 0.8j], [0.8j, 0.6]]))
    ctx.record("geodesics", "naturality_ball_unitary", domain_label(ball), 1e-7, "<", lambda: verify_naturality(bm, bm, unitary, pb, pb, np.array([0.05, 0.03j])).ode_residual)

    r = ctx.annulus_r
    ann = DomainDescriptor.annulus(r)
    am = ctx.model(ann)
    pa = np.array([0.5 * (1 + r)])
    ctx.record("geodesics", "naturality_annulus_rotation", domain_label(ann), 1e-7, "<", lambda: verify_naturality(am, am, auto.annulus_rotation(r, 0.7), pa, pa, np.array([0.03j])).ode_residual)
    ctx.record("geodesics", "naturality_annulus_inversion", domain_label(ann), 1e-7, "<", lambda: verify_naturality(am, am, auto.annulus_inversion(r), pa, pa, np.array([0.03j])).ode_residual)
    ctx.record("geodesics", "straight_line_offset", domain_label(ann), 1e-6, "<", lambda: verify_straight_lines(am, pa, np.array([0.03]), np.array([0.04j])))


def suite_charts(ctx: SuiteContext) -> None:
    rng = ctx.rng("charts")
    disk = DomainDescriptor.disk()
    dm = ctx.model(disk)
    triples = collinear_triples(rng, 20, 1, 0.1)
    ctx.record("charts", "transition_affine", "disk", 1e-7, "<", lambda: affinity_residual(chart_transition(dm, np.array([0.2]), np.array([-0.1 + 0.3j])), triples))

    def center_reduces() -> float:
        p = np.array([0.3 - 0.2j])
        return max(float(np.linalg.norm(exph_q_inverse(dm, p, p, z) - rep_map(dm, p, z))) for z in disk.sample(rng, 10, 0.1))

    ctx.record("charts", "chart_at_basepoint_is_rep", "disk", 1e-12, "<", center_reduces)

    r = ctx.annulus_r
    ann = DomainDescriptor.annulus(r)
    am = ctx.model(ann)
    mid = 0.5 * (1 + r)
    small = collinear_triples(rng, 20, 1, 0.04)
    ctx.record("charts", "transition_affine", domain_label(ann), 1e-7, "<", lambda: affinity_residual(chart_transition(am, np.array([mid]), np.array([mid * np.exp(0.2j)])), small))
    ctx.record(
        "charts",
        "two_center_transition_affine",
        domain_label(ann),
        1e-7,
        "<",
        lambda: affinity_residual(chart_pair_transition(am, np.array([mid]), np.array([mid + 0.03]), np.array([mid * np.exp(-0.15j)])), small),
    )


def suite_annulus(ctx: SuiteContext) -> None:
    rng = ctx.rng("annulus")
    for r in ctx.annulus_radii:
        label = f"annulus({r:g})"
        roots: List = []

        def locate() -> float:
            roots.append(annulus_roots(r, ctx.tol))
            return 1.0

        ctx.record("annulus", "sign_pattern", label, 0.5, ">", locate)
        if not roots:
            continue
        ar = roots[0]
        ctx.record("annulus", "lambda2_in_(-1,-r)", label, 0.5, ">", lambda: float(-1.0 < ar.lambda2 < -r))
        ctx.record("annulus", "lambda1_in_(-r,-r2)", label, 0.5, ">", lambda: float(-r < ar.lambda1 < -r * r))
        ctx.record("annulus", "root_residuals", label, 1e-12, "<", lambda: max(ar.residuals))
        ctx.record("annulus", "h(-1)=h(-r2)", label, 1e-10, "<", lambda: abs(ar.h_minus_one - ar.h_minus_r2))

        def real_on_axis() -> float:
            worst = 0.0
            for x in np.concatenate([-np.linspace(r * r * 1.01, 0.99, 25), np.linspace(r * r * 1.2, 0.9, 25)]):
                h = annulus_h(r, complex(x), ctx.tol)
                worst = max(worst, abs(h.imag) / max(1.0, abs(h)))
            return worst

        ctx.record("annulus", "h_real_on_real_axis", label, 1e-10, "<", real_on_axis)

        d = DomainDescriptor.annulus(r)
        model = ctx.model(d)

        def kernel_identity() -> float:
            worst = 0.0
            for pt in _polarized_samples(d, rng, 20):
                lam = complex(pt.z[0] * pt.wbar[0])
                k = model.eval(pt)
                worst = max(worst, abs(annulus_h(r, lam, ctx.tol) - np.pi * lam * k) / abs(annulus_h(r, lam, ctx.tol)))
            return worst

        ctx.record("annulus", "h_equals_pi_lambda_K", label, 1e-10, "<", kernel_identity)
        ctx.record("annulus", "one_zero_for_p_near_1", label, 1.0, ">=", lambda: float(annulus_zero_count(r, 1.0 - 1e-3, ctx.tol) == 1))

        p = np.array([0.5 * (1 + r) + 0.01])

        def elliptic_form() -> float:
            zs = [z for z in d.sample(rng, 60, 0.1)[:, 0] if abs(z - p[0]) > 0.05]
            return annulus_elliptic_form_residual(model, p, np.array(zs[:52]))

        ctx.record("annulus", "rep_elliptic_form", label, 1e-8, "<", elliptic_form)

        def real_trace() -> float:
            rep = rep_coordinates(model, p)
            worst = 0.0
            for x in np.concatenate([np.linspace(r + 0.05 * (1 - r), 1 - 0.05 * (1 - r), 15), -np.linspace(r + 0.05 * (1 - r), 1 - 0.05 * (1 - r), 15)]):
                try:
                    val = complex(rep(np.array([x]))[0])
                except BergmanError:
                    continue
                worst = max(worst, abs(val.imag) / max(1.0, abs(val)))
            return worst

        ctx.record("annulus", "rep_real_on_real_trace", label, 1e-10, "<", real_trace)


def suite_zeros(ctx: SuiteContext) -> None:
    rng = ctx.rng("zeros")
    for d in ctx.catalog:
        model = ctx.model(d)
        label = domain_label(d)

        def identity() -> float:
            worst = 0.0
            for p, z in _based_pairs(model, rng, 100, 0.1, 0.01):
                worst = max(worst, zhat1_identity_residual(model, p, z))
            return worst

        ctx.record("zeros", "zhat1_identity", label, 1e-9, "<", identity)

    for d, p in ((DomainDescriptor.disk(), np.array([0.4 - 0.2j])), (DomainDescriptor.ball(2), np.zeros(2))):
        model = ctx.model(d)
        for kind in ("z0", "z1", "zhat1"):
            ctx.record("zeros", f"{kind}_empty", domain_label(d), 0.5, "<", lambda: float(probe_variety(model, p, kind, 41).hits.shape[0]))

    ann = DomainDescriptor.annulus(0.1)
    am = ctx.model(ann)
    p_ann = np.array([0.5])

    def z0_matches() -> float:
        hits = probe_variety(am, p_ann, "z0", 41).hits[:, 0]
        want = annulus_zero_points(0.1, 0.5, ctx.tol)
        if len(hits) != len(want):
            return np.inf
        if not len(want):
            return 0.0
        return float(max(np.min(np.abs(hits - w)) for w in want))

    ctx.record("zeros", "z0_matches_annulus_roots", domain_label(ann), 1e-8, "<", z0_matches)

    r = ctx.annulus_r
    ar = DomainDescriptor.annulus(r)
    arm = ctx.model(ar)
    p_r = np.array([0.5 * (1 + r)])
    ctx.record("zeros", "z0_rotation_invariance", domain_label(ar), 1e-6, "<", lambda: variety_image_gap(arm, auto.annulus_rotation(r, 1.1), p_r, "z0", 41))
    ctx.record("zeros", "z0_inversion_invariance", domain_label(ar), 1e-6, "<", lambda: variety_image_gap(arm, auto.annulus_inversion(r), p_r, "z0", 41))

    prod = DomainDescriptor.product(DomainDescriptor.annulus(0.1), DomainDescriptor.disk())
    pm = ctx.model(prod)
    pp = np.array([0.5, 0.2j])

    def inclusion() -> float:
        qs = annulus_zero_points(0.1, 0.5, ctx.tol)
        if not len(qs):
            raise ValueError("no annulus zero for the inclusion check")
        sc = basepoint_scales(pm, PolarizedPoint.diag(pp))
        scale = sc.g_scale * sc.k_scale**4
        return max(abs(zhat1_det(pm, pp, np.array([q, 0.1]))) / scale for q in qs)

    ctx.record("zeros", "z0_inside_zhat1_for_products", domain_label(prod), 1e-10, "<", inclusion)

    ctx.record("zeros", "pole_probe_disk_injective", "disk", 0.5, "<", lambda: float(len(pole_probe(ctx.model(DomainDescriptor.disk()), np.array([0.3 + 0.1j]), 61).collisions)))
    ctx.record("zeros", "pole_probe_ball_injective", "ball(2)", 0.5, "<", lambda: float(len(pole_probe(ctx.model(DomainDescriptor.ball(2)), np.zeros(2), 41).collisions)))
    ctx.record("zeros", "pole_probe_annulus_collides", domain_label(ann), 1.0, ">=", lambda: float(len(pole_probe(am, np.array([0.9]), 61).collisions)))


def suite_distance(ctx: SuiteContext) -> None:
    rng = ctx.rng("distance")
    dm = ctx.model(DomainDescriptor.disk())
    x, y = np.array([0.3 + 0.1j]), np.array([-0.2 - 0.4j])
    ctx.record("distance", "disk_distance_at_origin", "disk", 1e-12, "<", lambda: abs(intrinsic_distance(dm, np.zeros(1), x, y, 21) - abs(2 * x[0] - 2 * y[0])))

    r = ctx.annulus_r
    ann = DomainDescriptor.annulus(r)
    am = ctx.model(ann)
    pa = np.array([0.5 * (1 + r)])
    pts = ann.sample(rng, 6, 0.1)

    def upper_bound() -> float:
        worst = -np.inf
        for a, b in zip(pts[:3], pts[3:]):
            worst = max(worst, intrinsic_distance(am, pa, a, b, 21) - intrinsic_delta(am, pa, a, b))
        return worst

    ctx.record("distance", "distance_below_delta", domain_label(ann), 1e-12, "<", upper_bound)
    ctx.record(
        "distance",
        "refinement_monotone",
        domain_label(ann),
        1e-12,
        "<",
        lambda: intrinsic_distance(am, pa, pts[0], pts[1], 41) - intrinsic_distance(am, pa, pts[0], pts[1], 21),
    )

    deltas: List[float] = []

    def divergence() -> float:
        roots = annulus_roots(r, ctx.tol)
        p_div = np.array([0.5 * (abs(roots.lambda2) + 1.0)])
        qs = annulus_zero_points(r, complex(p_div[0]), ctx.tol)
        if not len(qs):
            raise ValueError("no point of Z0 inside the annulus")
        q = complex(qs[0])
        # same modulus as q, so every point stays inside the annulus
        y0 = np.array([q * np.exp(0.5j)])
        for k in range(1, 21):
            xk = np.array([q * np.exp(0.5j * 2.0**-k)])
            deltas.append(intrinsic_delta(am, p_div, xk, y0))
        return max(deltas)

    ctx.record("distance", "delta_diverges_at_z0", domain_label(ann), 1e3, ">", divergence)
    ctx.record("distance", "delta_monotone_tail", domain_label(ann), 0.5, ">", lambda: float(len(deltas) == 20 and all(b > a for a, b in zip(deltas[-6:], deltas[-5:]))))


def suite_product_gap(ctx: SuiteContext) -> None:
    rng = ctx.rng("product-gap")
    found = 0
    for r in PRODUCT_GAP_RADII:
        label = f"annulus({r:g})xdisk"
        res = product_gap_search(r, 0.5, tol=ctx.tol)
        found += int(res.found)
        detail = ", ".join(f"{w.z:.10g} (|g|={w.metric_abs:.2g}, K ratio={w.kernel_ratio:.3g})" for w in res.witnesses) or "not found"
        ctx.record("product-gap", "witness_search", label, np.inf, "info", lambda: float(len(res.witnesses)), detail=detail)
        ctx.record("product-gap", "disk_factor_nonvanishing", label, 0.0, ">", lambda: res.disk_factor_min)

        d = DomainDescriptor.product(DomainDescriptor.annulus(r), DomainDescriptor.disk())
        pts = _polarized_samples(d, rng, 20)
        ctx.record("product-gap", "determinant_factorization", label, 1e-9, "<", lambda: max(product_factorization_residual(r, pt.z, pt.wbar, ctx.tol) for pt in pts))
    ctx.record("product-gap", "witness_found_for_some_r", "annulus x disk", 1.0, ">=", lambda: float(found))


_SUITE_FUNCS: Dict[str, Callable[[SuiteContext], None]] = {
    "elliptic": suite_elliptic,
    "kernels": suite_kernels,
    "gram": suite_gram,
    "flatness": suite_flatness,
    "rep": suite_rep,
    "normal": suite_normal,
    "linearity": suite_linearity,
    "geodesics": suite_geodesics,
    "charts": suite_charts,
    "annulus": suite_annulus,
    "zeros": suite_zeros,
    "distance": suite_distance,
    "product-gap": suite_product_gap,
}


@dataclass(frozen=True, eq=False)
class VerifyReport:
    seed: int
    suites: Tuple[str, ...]
    checks: pd.DataFrame

    @property
    def passed(self) -> bool:
        return bool(self.checks["passed"].all()) if not self.checks.empty else True

    @property
    def failed(self) -> pd.DataFrame:
        return self.checks.loc[~self.checks["passed"]] if not self.checks.empty else self.checks

    def to_obj(self) -> Dict[str, object]:
        records = self.checks.replace({np.inf: None, -np.inf: None}).astype(object).where(self.checks.notna(), None).to_dict(orient="records")
        return {
            "tool": "bgeo",
            "seed": self.seed,
            "suites": list(self.suites),
            "passed": self.passed,
            "n_checks": int(len(self.checks)),
            "n_failed": int(len(self.failed)),
            "checks": records,
        }


def resolve_suites(name: str) -> Tuple[str, ...]:
    if name == "all":
        return SUITES
    names = tuple(s.strip() for s in name.split(",") if s.strip())
    unknown = [s for s in names if s not in _SUITE_FUNCS]
    if unknown or not names:
        raise ConfigError(f"Unknown suite(s): {', '.join(unknown) or name}; choose from all, {', '.join(SUITES)}")
    return names


def run_verify_suite(
    suite: str = "all",
    seed: int = 7,
    tol: Tolerances = DEFAULT_TOLERANCES,
    domain: Optional[DomainDescriptor] = None,
    r: Optional[float] = None,
    gram: GramParams = GramParams(),
) -> VerifyReport:
    """
    Runs the named suites (comma-separated or "all") with seeded sampling.
    domain restricts the per-domain checks to one catalog entry; r fixes the annulus radius.
    """
    names = resolve_suites(suite)
    catalog = default_catalog(r if r is not None else 0.3)
    if domain is not None:
        catalog = (domain,)
    radii = (r,) if r is not None else DEFAULT_ANNULUS_RADII
    ctx = SuiteContext(tol=tol, seed=seed, catalog=catalog, annulus_radii=radii, gram=gram)
    logger.info("verify: suites=%s seed=%d", ",".join(names), seed)
    for name in names:
        before = len(ctx.checks)
        try:
            _SUITE_FUNCS[name](ctx)
        except _MEASURE_ERRORS as e:
            logger.warning("suite %s aborted: %s: %s", name, type(e).__name__, e)
            ctx.checks.append(Check(name, "suite_aborted", "", float("nan"), 0.0, "<", False, f"{type(e).__name__}: {e}"))
        done = ctx.checks[before:]
        logger.info("suite %s: %d/%d passed", name, sum(c.passed for c in done), len(done))
    df = pd.DataFrame([asdict(c) for c in ctx.checks], columns=[f for f in Check.__dataclass_fields__])
    return VerifyReport(seed=seed, suites=names, checks=df)
