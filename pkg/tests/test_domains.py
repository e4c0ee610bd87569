from __future__ import annotations

import numpy as np
import pytest

from src.bergman_geometry.domains import DomainDescriptor
from src.bergman_geometry.errors import ConfigError, DomainError


def test_descriptor_json_round_trip() -> None:
    d = DomainDescriptor.product(DomainDescriptor.annulus(0.1), DomainDescriptor.disk())
    assert DomainDescriptor.from_obj(d.to_obj()) == d
    assert DomainDescriptor.from_json('{"type":"ball","n":2}') == DomainDescriptor.ball(2)


@pytest.mark.parametrize(
    "obj",
    [
        {"type": "sphere"},
        {"type": "annulus"},
        {"type": "annulus", "r": 1.5},
        {"type": "ball", "n": 0},
        {"type": "product", "factors": []},
        [1, 2],
    ],
)
def test_bad_descriptors(obj: object) -> None:
    with pytest.raises(ConfigError):
        DomainDescriptor.from_obj(obj)


def test_bad_json() -> None:
    with pytest.raises(ConfigError):
        DomainDescriptor.from_json("{type: disk}")


def test_dimensions_and_leaves() -> None:
    prod = DomainDescriptor.product(DomainDescriptor.ball(2), DomainDescriptor.annulus(0.3))
    assert prod.dim == 3
    leaves = prod.leaves()
    assert [leaf.kind for leaf, _ in leaves] == ["ball", "annulus"]
    assert leaves[1][1] == slice(2, 3)
    assert len(DomainDescriptor.polydisc(3).leaves()) == 3
    assert not DomainDescriptor.disk().is_product


def test_membership() -> None:
    ann = DomainDescriptor.annulus(0.3)
    assert ann.contains([0.5j])
    assert not ann.contains([0.2])
    assert not ann.contains([1.0])
    assert ann.boundary_distance([0.5]) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        ann.require(np.array([0.1]))
    with pytest.raises(DomainError):
        ann.boundary_distance([0.5, 0.5])


@pytest.mark.parametrize(
    "domain",
    [
        DomainDescriptor.disk(),
        DomainDescriptor.ball(2),
        DomainDescriptor.polydisc(2),
        DomainDescriptor.annulus(0.3),
        DomainDescriptor.product(DomainDescriptor.annulus(0.3), DomainDescriptor.disk()),
    ],
)
def test_samples_respect_margin(domain: DomainDescriptor, rng: np.random.Generator) -> None:
    pts = domain.sample(rng, 200, margin=0.1)
    assert pts.shape == (200, domain.dim)
    assert min(domain.boundary_distance(z) for z in pts) >= 0.1 - 1e-12


def test_grid_is_interior_and_row_major() -> None:
    g = DomainDescriptor.disk().grid(21)
    assert g.shape[1] == 1
    assert all(abs(z[0]) < 1.0 for z in g)
    # rows sweep x fastest
    assert g[1, 0].imag == g[0, 0].imag and g[1, 0].real > g[0, 0].real
    g2 = DomainDescriptor.ball(2).grid(41)
    assert g2.shape[1] == 2
    assert all(np.linalg.norm(z) < 1.0 for z in g2)
