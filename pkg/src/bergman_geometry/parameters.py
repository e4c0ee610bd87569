from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Any, Callable, Dict, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class Tolerances:
    # |K(z,w̄)| below kernel_floor * K(p,p̄) is treated as a kernel zero
    kernel_floor: float = 1e-12

    # Minimum distance from the period lattice before ℘ refuses to evaluate
    pole_guard: float = 1e-8

    # RK45 absolute + relative tolerance for geodesic integration
    ode_tol: float = 1e-10

    # Newton inversion of the representative map
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    newton_halvings: int = 10

    # Finite-difference steps (scaled by max(1, |z|))
    fd_step: float = 1e-5         # first derivatives
    fd_step_mixed: float = 1e-3   # second derivatives of K
    fd_step_nested: float = 1e-2  # differentiating the metric itself

    # Nome/Lambert series truncation cap
    series_cap: int = 64

    # Variety monitor threshold for geodesic events
    event_threshold: float = 1e-8

    # Accepted RK steps shorter than this end the trace with step_underflow
    min_step: float = 1e-14

    # |det G| below singular_floor * |det G(p,p̄)| means the metric is singular
    singular_floor: float = 1e-12

    def with_overrides(self, overrides: Dict[str, Any]) -> "Tolerances":
        known = {f.name: f.type for f in fields(self)}
        clean: Dict[str, Any] = {}
        for key, value in overrides.items():
            if key not in known:
                raise KeyError(key)
            clean[key] = int(value) if isinstance(getattr(self, key), int) else float(value)
        return replace(self, **clean)


@dataclass(frozen=True)
class GramParams:
    # Monomial degree cap (annulus uses exponents in [-cap, cap])
    degree_cap: int = 30

    # Gauss–Legendre nodes in the radial direction
    quad_resolution: int = 64

    # Scaled Gram matrices with a larger condition number are rejected
    max_condition: float = 1e12


@dataclass(frozen=True)
class GridParams:
    # Points per real axis for planar scans
    resolution: int = 81

    # Keep grid points this far from the boundary
    margin: float = 1e-3


@dataclass(frozen=True)
class OutputParams:
    # Where emitted CSV/JSON files land
    output_dir: str = "bgeo_out"
    float_format: str = "%.17g"


DEFAULT_TOLERANCES = Tolerances()


def worker_count() -> int:
    """Thread cap for grid scans, read from BGEO_THREADS (defaults to 1)."""
    raw = os.environ.get("BGEO_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """fn over items on up to worker_count() threads; results keep the input order."""
    workers = worker_count()
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
