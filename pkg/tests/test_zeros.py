from __future__ import annotations

from typing import Callable

import numpy as np
import pytest

from src.bergman_geometry.automorphisms import annulus_inversion, annulus_rotation
from src.bergman_geometry.domains import DomainDescriptor
from src.bergman_geometry.errors import DomainError
from src.bergman_geometry.kernels import KernelModel
from src.bergman_geometry.metric import basepoint_scales
from src.bergman_geometry.points import PolarizedPoint
from src.bergman_geometry.verify import PRODUCT_GAP_RADII
from src.bergman_geometry.zeros import (
    VarietyProbe,
    annulus_h,
    annulus_roots,
    annulus_zero_count,
    annulus_zero_points,
    pole_probe,
    probe_variety,
    product_factorization_residual,
    product_gap_search,
    variety_image_gap,
    z0_locus,
    z1_locus,
    zhat1_det,
    zhat1_identity_residual,
    zhat1_locus,
)


@pytest.mark.parametrize("r", [0.05, 0.1, 0.3, 0.5, 0.7])
def test_root_structure(r: float) -> None:
    roots = annulus_roots(r)
    assert -1.0 < roots.lambda2 < -r < roots.lambda1 < -r * r
    assert max(roots.residuals) < 1e-12
    assert roots.h_minus_one < 0.0 < roots.h_minus_r
    assert roots.h_minus_r2 < 0.0
    assert abs(roots.h_minus_one - roots.h_minus_r2) < 1e-10
    assert roots.roots == (roots.lambda2, roots.lambda1)


def test_roots_for_r_tenth() -> None:
    roots = annulus_roots(0.1)
    assert -1.0 < roots.lambda2 < -0.1
    assert -0.1 < roots.lambda1 < -0.01


def test_h_is_real_on_real_axis() -> None:
    for x in np.concatenate([-np.linspace(0.0901, 0.99, 9), np.linspace(0.11, 0.9, 9)]):
        h = annulus_h(0.3, complex(x))
        assert abs(h.imag) < 1e-10 * max(1.0, abs(h))


def test_h_matches_kernel(annulus: KernelModel) -> None:
    for z, w in ((0.5 + 0.2j, 0.7), (-0.6j, 0.4 - 0.3j), (0.9, 0.35j)):
        pt = PolarizedPoint.based(z, w)
        lam = z * np.conj(w)
        h = annulus_h(0.3, lam)
        assert abs(h - np.pi * lam * annulus.eval(pt)) < 1e-10 * abs(h)
    with pytest.raises(DomainError):
        annulus_h(0.3, 0.01)


def test_zero_points_follow_roots() -> None:
    roots = annulus_roots(0.1)
    pts = annulus_zero_points(0.1, 0.5)
    for z in pts:
        assert 0.1 < abs(z) < 1.0
        assert min(abs(z * 0.5 - roots.lambda1), abs(z * 0.5 - roots.lambda2)) < 1e-14
    assert annulus_zero_count(0.3, 1.0 - 1e-3) == 1
    assert annulus_zero_count(0.1, 1.0 - 1e-3) == 1


def test_kernel_vanishes_at_zero_points(annulus: KernelModel) -> None:
    p = 0.95
    for z in annulus_zero_points(0.3, p):
        pt = PolarizedPoint.based(z, p)
        assert abs(annulus.eval(pt)) < 1e-10 * annulus.scale(pt)


def test_probe_finds_annulus_zeros() -> None:
    model = KernelModel(DomainDescriptor.annulus(0.1))
    probe = z0_locus(model, np.array([0.5]), 41)
    want = annulus_zero_points(0.1, 0.5)
    assert probe.hits.shape[0] == want.shape[0]
    for w in want:
        assert np.min(np.abs(probe.hits[:, 0] - w)) < 1e-8
    assert np.all(probe.defining_values < 1e-9)


@pytest.mark.parametrize("locus", [z0_locus, z1_locus, zhat1_locus])
def test_disk_and_ball_varieties_are_empty(locus: Callable[..., VarietyProbe], disk: KernelModel, ball2: KernelModel) -> None:
    assert locus(disk, np.array([0.4 - 0.2j]), 41).empty
    assert locus(ball2, np.zeros(2), 41).empty


def test_unknown_variety(disk: KernelModel) -> None:
    with pytest.raises(ValueError):
        probe_variety(disk, np.array([0.1]), "z2")


def test_zero_locus_moves_with_automorphisms(annulus: KernelModel) -> None:
    p = np.array([0.65])
    assert variety_image_gap(annulus, annulus_rotation(0.3, 1.1), p, "z0", 41) < 1e-6
    assert variety_image_gap(annulus, annulus_inversion(0.3), p, "z0", 41) < 1e-6


@pytest.mark.parametrize("fixture", ["disk", "ball2", "annulus", "product"])
def test_zhat1_determinant_identity(fixture: str, request: pytest.FixtureRequest, rng: np.random.Generator) -> None:
    model: KernelModel = request.getfixturevalue(fixture)
    p, z = model.domain.sample(rng, 2, margin=0.15)
    assert zhat1_identity_residual(model, p, z) < 1e-9


def test_kernel_zeros_lie_in_zhat1_for_products() -> None:
    model = KernelModel(DomainDescriptor.product(DomainDescriptor.annulus(0.1), DomainDescriptor.disk()))
    p = np.array([0.5, 0.2j])
    sc = basepoint_scales(model, PolarizedPoint.diag(p))
    for q in annulus_zero_points(0.1, 0.5):
        assert abs(zhat1_det(model, p, np.array([q, 0.1]))) < 1e-10 * sc.g_scale * sc.k_scale**4


def test_product_determinant_factorizes(rng: np.random.Generator) -> None:
    domain = DomainDescriptor.product(DomainDescriptor.annulus(0.05), DomainDescriptor.disk())
    for _ in range(5):
        z, w = domain.sample(rng, 2, margin=0.1)
        assert product_factorization_residual(0.05, z, np.conj(w)) < 1e-9


def test_product_gap_search_finds_witnesses() -> None:
    results = [product_gap_search(r, 0.5) for r in PRODUCT_GAP_RADII]
    for res in results:
        assert res.disk_factor_min > 0.0
        assert res.found == bool(res.witnesses)
    found = [res for res in results if res.found]
    assert found
    for res in found:
        assert res.r in PRODUCT_GAP_RADII
        assert len(res.witnesses) >= 1
        for w in res.witnesses:
            assert w.metric_abs < 1e-10
            assert w.kernel_ratio > 0.1
            assert w.product_point().shape == (2,)


def test_pole_probe(disk: KernelModel) -> None:
    report = pole_probe(disk, np.array([0.3 + 0.1j]), 41)
    assert report.injective_on_sample
    assert "no collision" in report.summary
    annulus = KernelModel(DomainDescriptor.annulus(0.1))
    collided = pole_probe(annulus, np.array([0.9]), 61)
    assert not collided.injective_on_sample
    assert collided.collisions
    assert collided.evaluated > 0
