from __future__ import annotations

import argparse
import json
from pathlib import Path

import pytest

from src.bergman_geometry.domains import DomainDescriptor
from src.bergman_geometry.errors import ConfigError
from src.bergman_geometry.io_config import DEFAULT_SEED, load_config_file, load_run_config


def _args(**kw: object) -> argparse.Namespace:
    base = {"command": "kernel", "config": None, "domain": None, "seed": None, "tol": None, "output": None, "emit": None}
    base.update(kw)
    return argparse.Namespace(**base)


def test_defaults() -> None:
    cfg = load_run_config(_args())
    assert cfg.domain == DomainDescriptor.disk()
    assert not cfg.domain_explicit
    assert cfg.seed == DEFAULT_SEED
    assert cfg.output == "json"
    assert cfg.emit is None


def test_flags_override_file(tmp_path: Path) -> None:
    path = tmp_path / "cfg.json"
    path.write_text(
        json.dumps({"domain": {"type": "annulus", "r": 0.2}, "seed": 3, "tolerances": {"ode_tol": 1e-8, "newton_tol": 1e-11}, "z": "0.5"}),
        encoding="utf-8",
    )
    cfg = load_run_config(_args(config=str(path), seed=11, tol=["ode_tol=1e-9"], z=None), ["z", "wbar"])
    assert cfg.domain == DomainDescriptor.annulus(0.2)
    assert cfg.domain_explicit
    assert cfg.seed == 11
    assert cfg.tolerances.ode_tol == 1e-9
    assert cfg.tolerances.newton_tol == 1e-11
    assert cfg.opt("z") == "0.5"
    assert cfg.opt("wbar", "0") == "0"


def test_domain_flag_is_json() -> None:
    cfg = load_run_config(_args(domain='{"type":"polydisc","n":3}'))
    assert cfg.domain.dim == 3
    assert cfg.domain_explicit


def test_gram_and_grid_sections(tmp_path: Path) -> None:
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"gram": {"degree_cap": 12}, "grid": {"resolution": 21}, "output_dir": "out"}), encoding="utf-8")
    cfg = load_run_config(_args(config=str(path)))
    assert cfg.gram.degree_cap == 12
    assert cfg.grid.resolution == 21
    assert cfg.storage.output_dir == "out"


@pytest.mark.parametrize(
    "file_obj, kw",
    [
        ({"colour": "blue"}, {}),
        ({"gram": {"degree": 3}}, {}),
        ({}, {"tol": ["ode_tol"]}),
        ({}, {"tol": ["ode_tol=abc"]}),
        ({}, {"tol": ["ode_tol=0"]}),
        ({}, {"tol": ["spline_tol=1e-3"]}),
        ({}, {"seed": "x"}),
        ({}, {"output": "xml"}),
        ({}, {"domain": '{"type":"annulus","r":2}'}),
    ],
)
def test_rejections(tmp_path: Path, file_obj: dict, kw: dict) -> None:
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(file_obj), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(_args(config=str(path), **kw))


def test_config_file_errors(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(arr)
