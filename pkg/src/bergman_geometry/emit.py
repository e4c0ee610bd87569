from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .connection import GeodesicTrace
from .errors import BergmanError, ConfigError
from .kernels import KernelModel
from .metric import metric_at
from .parameters import OutputParams, parallel_map
from .points import PolarizedPoint, as_vector
from .representative import rep_coordinates

logger = logging.getLogger(__name__)

EMIT_KINDS = ("kernel", "metric", "rep", "geodesic")


def _ensure_dir(p: Path) -> None:
    p.mkdir(parents=True, exist_ok=True)


def write_frame(df: pd.DataFrame, path: Union[str, Path], storage: OutputParams = OutputParams()) -> Path:
    """
    Writes df as CSV (header row, 17 significant digits) or, for a .json suffix,
    as a list of records. Row order is kept as given.
    """
    path = Path(path)
    _ensure_dir(path.parent)
    try:
        if path.suffix.lower() == ".json":
            df.to_json(path, orient="records", indent=2, double_precision=15)
        else:
            df.to_csv(path, index=False, float_format=storage.float_format)
    except OSError as e:
        raise ConfigError(f"Cannot write {path}: {e}") from e
    logger.info("Exported: %s", path)
    return path


def _coord_columns(prefix: str, n: int) -> List[str]:
    if n == 1:
        return [f"re_{prefix}", f"im_{prefix}"]
    return [f"re_{prefix}{j + 1}" for j in range(n)] + [f"im_{prefix}{j + 1}" for j in range(n)]


def _split(v: np.ndarray) -> List[float]:
    v = as_vector(v)
    return [float(x) for x in v.real] + [float(x) for x in v.imag]


def _grid_frame(model: KernelModel, resolution: int, columns: List[str], row: Callable[[np.ndarray], List[float]]) -> pd.DataFrame:
    """Row-major grid over the domain; rows whose evaluation fails are NaN."""
    grid = model.domain.grid(resolution)
    width = len(columns)

    def safe(z: np.ndarray) -> List[float]:
        try:
            return row(z)
        except BergmanError:
            return [float("nan")] * width

    pos = _split_columns(model.dim)
    rows = parallel_map(safe, list(grid))
    coords = np.array([_split(z) for z in grid]).reshape(-1, 2 * model.dim)
    df = pd.DataFrame(coords, columns=pos)
    values = pd.DataFrame(rows, columns=columns)
    return pd.concat([df, values], axis=1)


def _split_columns(n: int) -> List[str]:
    if n == 1:
        return ["x", "y"]
    return [f"x{j + 1}" for j in range(n)] + [f"y{j + 1}" for j in range(n)]


def kernel_grid(model: KernelModel, p: np.ndarray, resolution: int) -> pd.DataFrame:
    """|K(z,p̄)| heat grid; dark spots sit on Z₀ᵖ."""
    p = as_vector(p)

    def row(z: np.ndarray) -> List[float]:
        k = model.eval(PolarizedPoint.based(z, p))
        return [abs(k), k.real, k.imag]

    return _grid_frame(model, resolution, ["abs_k", "re_k", "im_k"], row)


def metric_grid(model: KernelModel, p: np.ndarray, resolution: int) -> pd.DataFrame:
    """det G(z,p̄) over the grid."""
    p = as_vector(p)

    def row(z: np.ndarray) -> List[float]:
        det = metric_at(model, PolarizedPoint.based(z, p)).det_g
        return [abs(det), det.real, det.imag]

    return _grid_frame(model, resolution, ["abs_det_g", "re_det_g", "im_det_g"], row)


def rep_grid(model: KernelModel, p: np.ndarray, resolution: int, normalized: bool = False) -> pd.DataFrame:
    rep = rep_coordinates(model, as_vector(p), normalized)
    return _grid_frame(model, resolution, _coord_columns("zeta", model.dim), lambda z: _split(rep(z)))


def geodesic_frame(trace: GeodesicTrace) -> pd.DataFrame:
    n = trace.z.shape[1]
    data: Dict[str, Any] = {"t": trace.t}
    for j, name in enumerate(_coord_columns("z", n)):
        data[name] = trace.z.real[:, j] if j < n else trace.z.imag[:, j - n]
    for j, name in enumerate(_coord_columns("v", n)):
        data[name] = trace.v.real[:, j] if j < n else trace.v.imag[:, j - n]
    return pd.DataFrame(data)


def load_geodesic_csv(path: Union[str, Path], terminal: Optional[str] = None) -> GeodesicTrace:
    df = pd.read_csv(path, float_precision="round_trip")
    z_cols = [c for c in df.columns if c.startswith("re_z")] + [c for c in df.columns if c.startswith("im_z")]
    v_cols = [c for c in df.columns if c.startswith("re_v")] + [c for c in df.columns if c.startswith("im_v")]
    n = len(z_cols) // 2
    zr = df.loc[:, z_cols].to_numpy(dtype=float)
    vr = df.loc[:, v_cols].to_numpy(dtype=float)
    z = zr[:, :n] + 1j * zr[:, n:]
    v = vr[:, :n] + 1j * vr[:, n:]
    return GeodesicTrace(t=df["t"].to_numpy(dtype=float), z=z, v=v, terminal=terminal or "completed")


def emit_grid(kind: str, model: KernelModel, p: np.ndarray, resolution: int, path: Union[str, Path], normalized: bool = False, storage: OutputParams = OutputParams()) -> Path:
    if kind == "kernel":
        df = kernel_grid(model, p, resolution)
    elif kind == "metric":
        df = metric_grid(model, p, resolution)
    elif kind == "rep":
        df = rep_grid(model, p, resolution, normalized)
    else:
        raise ConfigError(f"Grid emission supports kernel, metric and rep, got {kind}")
    return write_frame(df, path, storage)
