from __future__ import annotations

import numpy as np
import pytest

from src.bergman_geometry.automorphisms import annulus_inversion, annulus_rotation, ball_unitary, disk_mobius, disk_rotation
from src.bergman_geometry.connection import (
    TERMINALS,
    integrate_geodesic,
    intrinsic_delta,
    straightening_residual,
    verify_naturality,
    verify_straight_lines,
)
from src.bergman_geometry.kernels import KernelModel
from src.bergman_geometry.zeros import annulus_roots, annulus_zero_points


def test_disk_geodesics_from_origin_are_lines(disk: KernelModel) -> None:
    ts = np.linspace(0.0, 1.0, 6)
    trace = integrate_geodesic(disk, np.zeros(1), np.array([0.1]), np.array([0.3 + 0.2j]), 1.0, t_eval=ts)
    assert trace.terminal == "completed"
    assert np.allclose(trace.t, ts)
    assert np.allclose(trace.z[:, 0], 0.1 + (0.3 + 0.2j) * ts, atol=1e-12)
    assert np.allclose(trace.v[:, 0], 0.3 + 0.2j, atol=1e-12)


@pytest.mark.parametrize("fixture", ["disk", "ball2", "annulus", "product"])
def test_rep_straightens_geodesics(fixture: str, request: pytest.FixtureRequest, rng: np.random.Generator) -> None:
    model: KernelModel = request.getfixturevalue(fixture)
    p = model.domain.sample(rng, 1, margin=0.2)[0]
    zeta = 0.05 * (rng.normal(size=model.dim) + 1j * rng.normal(size=model.dim)) / np.sqrt(model.dim)
    assert straightening_residual(model, p, zeta) < 1e-7


def test_disk_rep_is_linear_along_trace(disk: KernelModel) -> None:
    assert straightening_residual(disk, np.array([0.5]), np.array([0.1 - 0.05j]), samples=21) < 1e-7


def test_affine_reparametrization(ball2: KernelModel) -> None:
    p = np.array([0.2, -0.1j])
    zeta = np.array([0.05, 0.03 + 0.02j])
    a = integrate_geodesic(ball2, p, p, zeta, 1.0)
    b = integrate_geodesic(ball2, p, p, 2.0 * zeta, 0.5)
    assert a.terminal == b.terminal == "completed"
    assert np.linalg.norm(a.end.z - b.end.z) < 1e-9
    assert a.end.t == pytest.approx(1.0)


def test_chart_lines_are_geodesics(disk: KernelModel, annulus: KernelModel) -> None:
    assert verify_straight_lines(disk, np.array([0.4]), np.array([0.1]), np.array([0.15j])) < 1e-7
    assert verify_straight_lines(annulus, np.array([0.65]), np.array([0.03]), np.array([0.04j])) < 1e-6


def test_naturality(disk: KernelModel, annulus: KernelModel) -> None:
    report = verify_naturality(disk, disk, disk_mobius(0.3), np.array([0.1]), np.array([0.1]), np.array([0.2 + 0.1j]))
    assert report.ode_residual < 1e-7
    assert report.pointwise_gap < 1e-7
    rot = verify_naturality(disk, disk, disk_rotation(0.8), np.array([0.3]), np.array([0.2j]), np.array([0.15]))
    assert rot.pointwise_gap < 1e-9
    pa = np.array([0.65])
    ann = verify_naturality(annulus, annulus, annulus_rotation(0.3, 0.7), pa, pa, np.array([0.03j]))
    assert ann.ode_residual < 1e-7


def test_naturality_for_inversion_and_unitary(annulus: KernelModel, ball2: KernelModel) -> None:
    pa = np.array([0.65])
    inv = verify_naturality(annulus, annulus, annulus_inversion(0.3), pa, pa, np.array([0.03j]))
    assert inv.ode_residual < 1e-7
    u = np.array([[0.6, 0.8j], [0.8j, 0.6]])
    pb = np.array([0.2, -0.1j])
    uni = verify_naturality(ball2, ball2, ball_unitary(u), pb, pb, np.array([0.05, 0.03j]))
    assert uni.ode_residual < 1e-7
    assert uni.pointwise_gap < 1e-7


def test_leaves_domain(disk: KernelModel) -> None:
    trace = integrate_geodesic(disk, np.zeros(1), np.zeros(1), np.array([2.0]), 1.0)
    assert trace.terminal == "left_domain"
    assert trace.end.t == pytest.approx(0.5, abs=1e-6)
    assert trace.terminal in TERMINALS


def test_start_on_boundary(disk: KernelModel) -> None:
    trace = integrate_geodesic(disk, np.zeros(1), np.array([1.0]), np.array([0.1]), 1.0)
    assert trace.terminal == "left_domain"
    assert trace.t.shape == (1,)


def test_runs_into_kernel_zero(annulus: KernelModel) -> None:
    r = annulus.domain.r
    roots = annulus_roots(r)
    p = np.array([0.5 * (abs(roots.lambda2) + 1.0)])
    zeros = annulus_zero_points(r, complex(p[0]))
    assert zeros.shape[0] >= 1
    q = complex(zeros[0])
    start = q * np.exp(0.05j)
    trace = integrate_geodesic(annulus, p, np.array([start]), np.array([q - start]), 1e12)
    assert trace.terminal == "hit_variety"
    assert abs(trace.end.z[0] - q) < 1e-4
    assert trace.end.t > 10.0


def test_intrinsic_delta(disk: KernelModel, annulus: KernelModel) -> None:
    x, y = np.array([0.3 + 0.1j]), np.array([-0.2 - 0.4j])
    assert intrinsic_delta(disk, np.zeros(1), x, y) == pytest.approx(abs(2 * x[0] - 2 * y[0]), rel=1e-13)
    pa = np.array([0.65])
    a, b = np.array([0.5 + 0.2j]), np.array([-0.4 + 0.5j])
    assert intrinsic_delta(annulus, pa, a, b) == pytest.approx(intrinsic_delta(annulus, pa, b, a))
    assert intrinsic_delta(annulus, pa, a, a) == 0.0
