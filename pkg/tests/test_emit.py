from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.bergman_geometry.connection import integrate_geodesic
from src.bergman_geometry.emit import emit_grid, geodesic_frame, kernel_grid, load_geodesic_csv, metric_grid, rep_grid, write_frame
from src.bergman_geometry.errors import ConfigError
from src.bergman_geometry.kernels import KernelModel


def test_kernel_grid_columns(disk: KernelModel) -> None:
    df = kernel_grid(disk, np.array([0.3]), 11)
    assert list(df.columns) == ["x", "y", "abs_k", "re_k", "im_k"]
    assert len(df) == len(disk.domain.grid(11))
    row = df.iloc[len(df) // 2]
    z = complex(row["x"], row["y"])
    assert row["abs_k"] == pytest.approx(abs(1.0 / (np.pi * (1.0 - 0.3 * z) ** 2)))


def test_metric_grid_marks_failures_as_nan(annulus: KernelModel) -> None:
    df = metric_grid(annulus, np.array([0.95]), 21)
    assert list(df.columns) == ["x", "y", "abs_det_g", "re_det_g", "im_det_g"]
    assert df["abs_det_g"].notna().any()


def test_rep_grid_multidimensional(ball2: KernelModel) -> None:
    df = rep_grid(ball2, np.zeros(2), 41)
    assert list(df.columns) == ["x1", "x2", "y1", "y2", "re_zeta1", "re_zeta2", "im_zeta1", "im_zeta2"]
    assert np.allclose(df["re_zeta1"], df["x1"], atol=1e-10)


def test_geodesic_csv_is_exact(tmp_path: Path, ball2: KernelModel) -> None:
    p = np.array([0.1, -0.2j])
    trace = integrate_geodesic(ball2, p, p, np.array([0.05 + 0.01j, 0.02]), 1.0)
    path = write_frame(geodesic_frame(trace), tmp_path / "geo.csv")
    back = load_geodesic_csv(path, trace.terminal)
    assert np.array_equal(back.t, trace.t)
    assert np.array_equal(back.z, trace.z)
    assert np.array_equal(back.v, trace.v)
    assert back.terminal == "completed"


def test_json_records(tmp_path: Path) -> None:
    df = pd.DataFrame({"x": [0.1, 0.2], "abs_k": [1.5, 2.5]})
    path = write_frame(df, tmp_path / "sub" / "grid.json")
    records = json.loads(path.read_text(encoding="utf-8"))
    assert records == [{"x": 0.1, "abs_k": 1.5}, {"x": 0.2, "abs_k": 2.5}]


def test_emit_grid_dispatch(tmp_path: Path, disk: KernelModel) -> None:
    path = emit_grid("kernel", disk, np.zeros(1), 9, tmp_path / "k.csv")
    assert path.exists()
    with pytest.raises(ConfigError):
        emit_grid("geodesic", disk, np.zeros(1), 9, tmp_path / "g.csv")
