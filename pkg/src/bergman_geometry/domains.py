from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from .errors import ConfigError, DomainError

SIMPLE_KINDS = ("disk", "ball", "annulus")
KINDS = SIMPLE_KINDS + ("polydisc", "product")


@dataclass(frozen=True)
class DomainDescriptor:
    """
    One of the catalog domains:

      disk          unit disk in ℂ
      ball(n)       unit ball in ℂⁿ
      polydisc(n)   product of n unit disks
      annulus(r)    {r < |z| < 1}, 0 < r < 1
      product(...)  cartesian product of descriptors
    """

    kind: str
    n: int = 1
    r: float = 0.0
    factors: Tuple["DomainDescriptor", ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"Unknown domain type: {self.kind}")
        if self.kind in ("ball", "polydisc") and self.n < 1:
            raise ConfigError(f"{self.kind} needs n >= 1, got {self.n}")
        if self.kind == "annulus" and not (0.0 < self.r < 1.0):
            raise ConfigError(f"annulus needs 0 < r < 1, got {self.r}")
        if self.kind == "product" and not self.factors:
            raise ConfigError("product needs at least one factor")

    # -- Construction

    @classmethod
    def disk(cls) -> "DomainDescriptor":
        return cls("disk")

    @classmethod
    def ball(cls, n: int) -> "DomainDescriptor":
        return cls("ball", n=n)

    @classmethod
    def polydisc(cls, n: int) -> "DomainDescriptor":
        return cls("polydisc", n=n)

    @classmethod
    def annulus(cls, r: float) -> "DomainDescriptor":
        return cls("annulus", r=float(r))

    @classmethod
    def product(cls, *factors: "DomainDescriptor") -> "DomainDescriptor":
        return cls("product", factors=tuple(factors))

    @classmethod
    def from_obj(cls, obj: Any) -> "DomainDescriptor":
        if not isinstance(obj, dict) or "type" not in obj:
            raise ConfigError(f"Domain descriptor must be an object with a 'type' key: {obj!r}")
        kind = str(obj["type"])
        try:
            if kind == "disk":
                return cls.disk()
            if kind == "ball":
                return cls.ball(int(obj["n"]))
            if kind == "polydisc":
                return cls.polydisc(int(obj["n"]))
            if kind == "annulus":
                return cls.annulus(float(obj["r"]))
            if kind == "product":
                return cls.product(*(cls.from_obj(f) for f in obj["factors"]))
        except KeyError as e:
            raise ConfigError(f"Domain '{kind}' missing required key: {e.args[0]}") from e
        raise ConfigError(f"Unknown domain type: {kind}")

    @classmethod
    def from_json(cls, text: str) -> "DomainDescriptor":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Domain descriptor is not valid JSON: {e}") from e
        return cls.from_obj(obj)

    def to_obj(self) -> Dict[str, Any]:
        if self.kind == "disk":
            return {"type": "disk"}
        if self.kind in ("ball", "polydisc"):
            return {"type": self.kind, "n": self.n}
        if self.kind == "annulus":
            return {"type": "annulus", "r": self.r}
        return {"type": "product", "factors": [f.to_obj() for f in self.factors]}

    # -- Structure

    @property
    def dim(self) -> int:
        if self.kind == "disk" or self.kind == "annulus":
            return 1
        if self.kind in ("ball", "polydisc"):
            return self.n
        return sum(f.dim for f in self.factors)

    def leaves(self) -> List[Tuple["DomainDescriptor", slice]]:
        """Simple factors (disk, ball, annulus) with their coordinate slices."""
        out: List[Tuple[DomainDescriptor, slice]] = []
        self._collect(0, out)
        return out

    def _collect(self, offset: int, out: List[Tuple["DomainDescriptor", slice]]) -> int:
        if self.kind in SIMPLE_KINDS:
            out.append((self, slice(offset, offset + self.dim)))
            return offset + self.dim
        if self.kind == "polydisc":
            for j in range(self.n):
                out.append((DomainDescriptor.disk(), slice(offset + j, offset + j + 1)))
            return offset + self.n
        for f in self.factors:
            offset = f._collect(offset, out)
        return offset

    @property
    def is_product(self) -> bool:
        return len(self.leaves()) > 1

    # -- Membership

    def boundary_distance(self, z: Union[np.ndarray, List[complex]]) -> float:
        """Positive inside the domain; distance to the boundary of the nearest factor."""
        zv = np.atleast_1d(np.asarray(z, dtype=complex))
        if zv.shape[0] != self.dim:
            raise DomainError(f"Point has dimension {zv.shape[0]}, domain has {self.dim}")
        best = np.inf
        for leaf, sl in self.leaves():
            rho = float(np.linalg.norm(zv[sl]))
            if leaf.kind == "annulus":
                d = min(1.0 - rho, rho - leaf.r)
            else:
                d = 1.0 - rho
            best = min(best, d)
        return float(best)

    def contains(self, z: Union[np.ndarray, List[complex]]) -> bool:
        return self.boundary_distance(z) > 0.0

    def require(self, z: np.ndarray, what: str = "point") -> None:
        if not self.contains(z):
            raise DomainError(f"{what} {np.round(z, 12).tolist()} is outside the {self.kind} domain")

    # -- Sampling

    def sample(self, rng: np.random.Generator, count: int, margin: float = 0.1) -> np.ndarray:
        """count points with boundary distance >= margin, shape (count, dim)."""
        pts = np.empty((count, self.dim), dtype=complex)
        for leaf, sl in self.leaves():
            m = leaf.dim
            if leaf.kind == "annulus":
                lo, hi = leaf.r + margin, 1.0 - margin
                if lo >= hi:
                    raise DomainError(f"margin {margin} leaves no room in annulus r={leaf.r}")
                rad = np.sqrt(rng.uniform(lo * lo, hi * hi, size=count))
                ang = rng.uniform(0.0, 2.0 * np.pi, size=count)
                pts[:, sl] = (rad * np.exp(1j * ang))[:, None]
            else:
                g = rng.normal(size=(count, m)) + 1j * rng.normal(size=(count, m))
                g /= np.linalg.norm(g, axis=1, keepdims=True)
                rad = (1.0 - margin) * rng.uniform(0.0, 1.0, size=count) ** (1.0 / (2 * m))
                pts[:, sl] = g * rad[:, None]
        return pts

    def grid(self, resolution: int, margin: float = 1e-3) -> np.ndarray:
        """
        Row-major grid of interior points, shape (k, dim).
        Planar domains use resolution points per real axis over [-1, 1]².
        Higher-dimensional domains take the product of per-coordinate grids
        with resolution // 8 points per axis (at least 5).
        """
        if self.dim == 1:
            axis = np.linspace(-1.0, 1.0, resolution)
            zs = [complex(x, y) for y in axis for x in axis]
            keep = [z for z in zs if self.boundary_distance([z]) > margin]
            return np.array(keep, dtype=complex).reshape(-1, 1)
        per = max(5, resolution // 8)
        axis = np.linspace(-1.0, 1.0, per)
        plane = [complex(x, y) for y in axis for x in axis]
        out: List[List[complex]] = []
        for combo in itertools.product(plane, repeat=self.dim):
            if self.boundary_distance(list(combo)) > margin:
                out.append(list(combo))
        return np.array(out, dtype=complex).reshape(-1, self.dim)
