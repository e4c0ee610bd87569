from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.bergman_geometry.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, build_parser, main


def _run(capsys: pytest.CaptureFixture, *argv: str) -> tuple:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_elliptic_json(capsys: pytest.CaptureFixture) -> None:
    code, out = _run(capsys, "elliptic", "--r", "0.1", "--u", "0.3+0.2i")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["omega1"] == pytest.approx(np.log(10.0))
    assert payload["u"] == [0.3, 0.2]
    assert payload["legendre_residual"] < 1e-10


def test_kernel_on_disk_and_ball(capsys: pytest.CaptureFixture) -> None:
    code, out = _run(capsys, "kernel", "--z", "0.3", "--wbar", "0")
    assert code == EXIT_OK
    re_k, im_k = json.loads(out)["value"]
    assert re_k == pytest.approx(1.0 / np.pi)
    assert im_k == 0.0

    code, out = _run(capsys, "kernel", "--domain", '{"type":"ball","n":2}', "--z", "0,0", "--wbar", "0,0", "--mode", "series")
    assert code == EXIT_OK
    assert json.loads(out)["abs"] == pytest.approx(2.0 / np.pi**2)


def test_christoffel_value(capsys: pytest.CaptureFixture) -> None:
    code, out = _run(capsys, "christoffel", "--z", "0.2", "--p", "0.5")
    assert code == EXIT_OK
    gamma = json.loads(out)["gamma"]
    assert gamma[0][0][0][0] == pytest.approx(1.0 / 0.9)


@pytest.mark.parametrize(
    "argv",
    [
        ["kernel", "--domain", '{"type":"sphere"}', "--z", "0.1", "--wbar", "0.1"],
        ["kernel", "--z", "0.3+i2", "--wbar", "0"],
        ["kernel", "--z", "0.1,0.2", "--wbar", "0.1,0.2"],
        ["kernel", "--z", "0.1"],
        ["kernel", "--z", "1.5", "--wbar", "0"],
        ["metric", "--z", "0.1", "--wbar", "0", "--tol", "ode_tol=-1"],
        ["metric", "--z", "0.1", "--wbar", "0", "--tol", "no_such_tolerance=1"],
        ["verify", "--suite", "nonsense"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(argv: list, capsys: pytest.CaptureFixture) -> None:
    code, out = _run(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""


def test_numerical_failure_exits_1(capsys: pytest.CaptureFixture) -> None:
    code, _ = _run(capsys, "elliptic", "--r", "0.05", "--tol", "series_cap=3")
    assert code == EXIT_FAILED


def test_rep_emits_grid(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    target = tmp_path / "rep.csv"
    code, out = _run(capsys, "rep", "--p", "0", "--z", "0.2", "--emit", "csv", "--emit-path", str(target), "--grid", "11")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["emitted"] == str(target)
    assert payload["value"][0] == pytest.approx([0.2, 0.0])
    df = pd.read_csv(target)
    assert list(df.columns) == ["x", "y", "re_zeta", "im_zeta"]
    assert np.allclose(df["re_zeta"], df["x"], atol=1e-10)


def test_geodesic_csv_output(capsys: pytest.CaptureFixture) -> None:
    code, out = _run(capsys, "geodesic", "--p", "0", "--q0", "0", "--v0", "0.5i", "--samples", "5", "--output", "csv")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "t,re_z,im_z,re_v,im_v"
    assert len(lines) == 6
    assert [float(x) for x in lines[-1].split(",")][:3] == pytest.approx([1.0, 0.0, 0.5])


def test_exph_round_trip(capsys: pytest.CaptureFixture) -> None:
    code, out = _run(capsys, "exph", "--p", "0.5", "--zeta", "-0.25")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["converged"]
    assert payload["value"][0] == pytest.approx([0.2, 0.0], abs=1e-10)


def test_annulus_roots_with_basepoint(capsys: pytest.CaptureFixture) -> None:
    code, out = _run(capsys, "annulus-roots", "--r", "0.1", "--p", "0.5")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert -1.0 < payload["lambda2"] < -0.1 < payload["lambda1"] < -0.01
    for re_z, im_z in payload["z0_points"]:
        assert 0.1 < abs(complex(re_z, im_z)) < 1.0


def test_verify_writes_markdown(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    md = tmp_path / "report.md"
    code, out = _run(capsys, "verify", "--suite", "elliptic", "--report-md", str(md))
    payload = json.loads(out)
    assert code == (EXIT_OK if payload["passed"] else EXIT_FAILED)
    assert payload["tool"] == "bgeo"
    assert payload["suites"] == ["elliptic"]
    assert payload["n_checks"] == len(payload["checks"]) > 0
    assert md.read_text(encoding="utf-8").startswith("# bgeo verify (seed 7)")


def test_config_file_feeds_options(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"domain": {"type": "annulus", "r": 0.3}, "z": "0.5", "wbar": "0.6"}), encoding="utf-8")
    code, out = _run(capsys, "kernel", "--config", str(cfg))
    assert code == EXIT_OK
    assert json.loads(out)["domain"] == {"type": "annulus", "r": 0.3}


def test_parser_lists_every_command() -> None:
    parser = build_parser()
    args = parser.parse_args(["zeros", "--p", "0.1", "--grid", "21"])
    assert args.grid_resolution == 21
    assert args.command == "zeros"
