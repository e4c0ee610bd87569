from __future__ import annotations

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from .domains import DomainDescriptor
from .errors import BergmanError, ConfigError
from .parameters import DEFAULT_TOLERANCES, GramParams, GridParams, OutputParams, Tolerances

DEFAULT_SEED = 7
OUTPUT_FORMATS = ("json", "csv")

# Top-level keys every config file may carry, on top of the subcommand's own options
_BASE_KEYS = {"domain", "tolerances", "seed", "output", "emit", "gram", "grid", "output_dir"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    domain: DomainDescriptor
    tolerances: Tolerances = DEFAULT_TOLERANCES
    seed: int = DEFAULT_SEED
    output: str = "json"
    emit: Optional[str] = None
    gram: GramParams = GramParams()
    grid: GridParams = GridParams()
    storage: OutputParams = OutputParams()
    options: Dict[str, Any] = field(default_factory=dict)
    # True when the domain came from --domain or the config file rather than the default
    domain_explicit: bool = False

    def opt(self, key: str, default: Any = None) -> Any:
        val = self.options.get(key)
        return default if val is None else val


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Reads a JSON object of run settings, e.g.
      {"domain": {"type": "annulus", "r": 0.3}, "tolerances": {"ode_tol": 1e-9}, "seed": 3}
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            obj: Any = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return obj


def _tolerances(base: Tolerances, overrides: Dict[str, Any]) -> Tolerances:
    for key, value in overrides.items():
        try:
            num = float(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"tolerance {key} must be numeric, got {value!r}") from e
        if not num > 0.0:
            raise ConfigError(f"tolerance {key} must be positive, got {value!r}")
    try:
        return base.with_overrides(overrides)
    except KeyError as e:
        raise ConfigError(f"Unknown tolerance: {e.args[0]}") from e


def _domain(raw: Any) -> DomainDescriptor:
    try:
        if isinstance(raw, str):
            return DomainDescriptor.from_json(raw)
        return DomainDescriptor.from_obj(raw)
    except BergmanError as e:
        raise ConfigError(f"Invalid domain: {e}") from e


def load_run_config(args: argparse.Namespace, option_names: Iterable[str] = ()) -> RunConfig:
    """
    Merges command-line flags over a JSON --config file over defaults.
    Flags left at None count as unset.
    """
    names = set(option_names)
    file_obj: Dict[str, Any] = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        file_obj = load_config_file(cfg_path)
        unknown = sorted(set(file_obj) - _BASE_KEYS - names)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

    def pick(key: str, default: Any = None) -> Any:
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        return file_obj.get(key, default)

    domain_raw = pick("domain")
    domain_explicit = domain_raw is not None
    if domain_raw is None:
        domain_raw = {"type": "disk"}
    domain = _domain(domain_raw)

    tol_over: Dict[str, Any] = dict(file_obj.get("tolerances", {}) or {})
    for item in getattr(args, "tol", None) or []:
        key, sep, value = str(item).partition("=")
        if not sep:
            raise ConfigError(f"--tol expects key=value, got {item!r}")
        tol_over[key.strip()] = value.strip()
    tolerances = _tolerances(DEFAULT_TOLERANCES, tol_over)

    seed_raw = pick("seed", DEFAULT_SEED)
    try:
        seed = int(seed_raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"seed must be an integer, got {seed_raw!r}") from e

    output = str(pick("output", "json"))
    if output not in OUTPUT_FORMATS:
        raise ConfigError(f"output must be one of {OUTPUT_FORMATS}, got {output}")

    try:
        gram = GramParams(**(file_obj.get("gram") or {}))
        grid = GridParams(**(file_obj.get("grid") or {}))
    except TypeError as e:
        raise ConfigError(f"Invalid gram/grid settings: {e}") from e
    storage = OutputParams(output_dir=str(file_obj.get("output_dir", OutputParams().output_dir)))

    options = {name: pick(name) for name in names}
    return RunConfig(
        command=str(getattr(args, "command", "") or ""),
        domain=domain,
        tolerances=tolerances,
        seed=seed,
        output=output,
        emit=pick("emit"),
        gram=gram,
        grid=grid,
        storage=storage,
        options=options,
        domain_explicit=domain_explicit,
    )
