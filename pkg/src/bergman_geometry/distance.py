from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import BergmanError, Unreachable
from .kernels import KernelModel, kernel_derivatives
from .metric import basepoint_scales
from .parameters import parallel_map
from .points import PolarizedPoint, as_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DistanceGraph:
    """
    Nodes are grid points off Z₀ᵖ (plus the two endpoints at index 0 and 1);
    bracket[i] = ∂/∂w̄ log K(nodes[i], w̄)|_{w=p}. Edges join nodes within chart_radius.
    """

    nodes: np.ndarray
    bracket: np.ndarray
    chart_radius: float
    adjacency: List[List[int]]

    def weight(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.bracket[i] - self.bracket[j]))


def _real_coords(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag], axis=1)


def bracket_values(model: KernelModel, p: np.ndarray, points: np.ndarray) -> List[Optional[np.ndarray]]:
    """b(z) for each row, None where the kernel is too close to Z₀ᵖ. Rows keep their order."""
    k_scale = basepoint_scales(model, PolarizedPoint.diag(p)).k_scale

    def one(z: np.ndarray) -> Optional[np.ndarray]:
        try:
            return kernel_derivatives(model, PolarizedPoint.based(z, p), k_scale)[0]
        except BergmanError:
            return None

    return parallel_map(one, list(points))


def build_distance_graph(model: KernelModel, p: np.ndarray, x: np.ndarray, y: np.ndarray, resolution: int, chart_radius: float, margin: float = 1e-3) -> DistanceGraph:
    grid = model.domain.grid(resolution, margin)
    pts = np.vstack([x[None, :], y[None, :], grid])
    values = bracket_values(model, p, pts)
    if values[0] is None or values[1] is None:
        raise Unreachable("an endpoint lies on Z0 of the basepoint")
    keep = [i for i, b in enumerate(values) if b is not None]
    nodes = pts[keep]
    bracket = np.array([values[i] for i in keep])

    tree = cKDTree(_real_coords(nodes))
    adjacency: List[List[int]] = [[] for _ in range(len(nodes))]
    for i, j in tree.query_pairs(chart_radius):
        adjacency[i].append(j)
        adjacency[j].append(i)
    # the one-segment partition is always admissible
    if 1 not in adjacency[0]:
        adjacency[0].append(1)
        adjacency[1].append(0)
    logger.debug("distance graph: %d nodes, chart radius %.3g", len(nodes), chart_radius)
    return DistanceGraph(nodes=nodes, bracket=bracket, chart_radius=chart_radius, adjacency=adjacency)


def shortest_path_length(graph: DistanceGraph, source: int, target: int) -> float:
    heap = [(0.0, source)]
    visited = set()
    best: Dict[int, float] = {source: 0.0}

    while heap:
        dist_u, u = heapq.heappop(heap)
        if u in visited:
            continue
        if u == target:
            return dist_u
        visited.add(u)

        for v in graph.adjacency[u]:
            if v in visited:
                continue
            cand = dist_u + graph.weight(u, v)
            if cand < best.get(v, np.inf):
                best[v] = cand
                heapq.heappush(heap, (cand, v))

    raise Unreachable(f"no path between node {source} and node {target}")


def intrinsic_distance(
    model: KernelModel,
    p: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    graph_resolution: int = 41,
    chart_radius: float = 0.15,
) -> float:
    """
    Upper bound for dᵖ(x, y): shortest broken path on a grid graph whose segments have
    length δᵖ and join points at most chart_radius apart. Grids whose resolution − 1
    divides the finer one's are nested, so refining cannot increase the value.
    """
    p, x, y = as_vector(p), as_vector(x), as_vector(y)
    model.domain.require(x, "x")
    model.domain.require(y, "y")
    graph = build_distance_graph(model, p, x, y, graph_resolution, chart_radius)
    return shortest_path_length(graph, 0, 1)
