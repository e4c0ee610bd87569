from __future__ import annotations

import numpy as np
import pytest

from src.bergman_geometry.connection import intrinsic_delta
from src.bergman_geometry.distance import DistanceGraph, build_distance_graph, intrinsic_distance, shortest_path_length
from src.bergman_geometry.errors import DomainError, Unreachable
from src.bergman_geometry.kernels import KernelModel
from src.bergman_geometry.zeros import annulus_roots, annulus_zero_points

PA = np.array([0.65])


def test_disk_distance_at_origin_is_euclidean(disk: KernelModel) -> None:
    x, y = np.array([0.3 + 0.1j]), np.array([-0.2 - 0.4j])
    assert intrinsic_distance(disk, np.zeros(1), x, y, 21) == pytest.approx(abs(2 * x[0] - 2 * y[0]), abs=1e-12)


def test_distance_bounded_by_delta(annulus: KernelModel) -> None:
    pairs = [(np.array([0.5 + 0.2j]), np.array([-0.4 + 0.5j])), (np.array([0.7j]), np.array([0.8]))]
    for a, b in pairs:
        assert intrinsic_distance(annulus, PA, a, b, 21) <= intrinsic_delta(annulus, PA, a, b) + 1e-12


def test_refinement_never_increases(annulus: KernelModel) -> None:
    a, b = np.array([0.5 + 0.2j]), np.array([-0.4 + 0.5j])
    coarse = intrinsic_distance(annulus, PA, a, b, 21)
    fine = intrinsic_distance(annulus, PA, a, b, 41)
    assert fine <= coarse + 1e-12


def test_graph_layout(disk: KernelModel) -> None:
    x, y = np.array([0.1]), np.array([0.2j])
    graph = build_distance_graph(disk, np.zeros(1), x, y, 21, 0.15)
    assert np.array_equal(graph.nodes[0], x)
    assert np.array_equal(graph.nodes[1], y)
    assert 1 in graph.adjacency[0]
    assert graph.weight(0, 1) == pytest.approx(abs(2 * x[0] - 2 * y[0]))


def test_endpoint_on_kernel_zero(annulus: KernelModel) -> None:
    r = annulus.domain.r
    roots = annulus_roots(r)
    p = np.array([0.5 * (abs(roots.lambda2) + 1.0)])
    q = annulus_zero_points(r, complex(p[0]))[:1]
    with pytest.raises(Unreachable):
        intrinsic_distance(annulus, p, q, q * np.exp(0.3j), 21)


def test_disconnected_graph() -> None:
    graph = DistanceGraph(
        nodes=np.array([[0.0], [0.5], [0.9]], dtype=complex),
        bracket=np.array([[0.0], [1.0], [1.8]], dtype=complex),
        chart_radius=0.1,
        adjacency=[[2], [], [0]],
    )
    with pytest.raises(Unreachable):
        shortest_path_length(graph, 0, 1)
    assert shortest_path_length(graph, 0, 2) == pytest.approx(1.8)


def test_endpoints_must_be_inside(disk: KernelModel) -> None:
    with pytest.raises(DomainError):
        intrinsic_distance(disk, np.zeros(1), np.array([1.5]), np.array([0.0]), 21)


def test_distance_grows_toward_kernel_zero(annulus: KernelModel) -> None:
    roots = annulus_roots(0.3)
    p = np.array([0.5 * (abs(roots.lambda2) + 1.0)])
    q = complex(annulus_zero_points(0.3, complex(p[0]))[0])
    y = np.array([q * np.exp(0.5j)])
    dists = []
    for k in range(6, 13):
        x = np.array([q * np.exp(0.5j * 2.0**-k)])
        d = intrinsic_distance(annulus, p, x, y, 21)
        assert d <= intrinsic_delta(annulus, p, x, y) + 1e-12
        dists.append(d)
    assert all(b > a for a, b in zip(dists, dists[1:]))
    assert dists[-1] > 10.0 * dists[0]
