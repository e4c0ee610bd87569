from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .connection import integrate_geodesic, intrinsic_delta
from .distance import intrinsic_distance
from .elliptic import make_lattice, w_zeta, wp, wp_prime
from .emit import emit_grid, geodesic_frame, write_frame
from .errors import BergmanError, ConfigError, DomainError
from .gram import build_gram_kernel, gram_kernel_eval
from .io_config import OUTPUT_FORMATS, RunConfig, load_run_config
from .kernels import KernelModel
from .metric import christoffel_at, metric_at
from .points import PolarizedPoint, complex_pair, matrix_pairs, parse_complex, parse_vector, vector_pairs
from .report import write_verify_report
from .representative import exph, rep_coordinates
from .verify import run_verify_suite
from .zeros import VARIETY_KINDS, annulus_roots, annulus_zero_points, pole_probe, probe_variety, product_gap_search

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# (payload for JSON output, optional table for CSV output, exit code)
Outcome = Tuple[Dict[str, Any], Optional[pd.DataFrame], int]


def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _vec(cfg: RunConfig, key: str) -> np.ndarray:
    raw = cfg.opt(key)
    if raw is None:
        raise ConfigError(f"--{key.replace('_', '-')} is required for {cfg.command}")
    v = parse_vector(str(raw))
    if v.shape[0] != cfg.domain.dim:
        raise ConfigError(f"--{key} has {v.shape[0]} coordinates, domain dimension is {cfg.domain.dim}")
    return v


def _num(cfg: RunConfig, key: str, default: Optional[float] = None) -> float:
    raw = cfg.opt(key, default)
    if raw is None:
        raise ConfigError(f"--{key.replace('_', '-')} is required for {cfg.command}")
    try:
        return float(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"--{key} must be a real number, got {raw!r}") from e


def _int(cfg: RunConfig, key: str, default: int) -> int:
    raw = cfg.opt(key, default)
    try:
        return int(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"--{key} must be an integer, got {raw!r}") from e


def _model(cfg: RunConfig) -> KernelModel:
    return KernelModel(cfg.domain, tol=cfg.tolerances)


def _emit_path(cfg: RunConfig, stem: str) -> Path:
    explicit = cfg.opt("emit_path")
    if explicit:
        return Path(str(explicit))
    suffix = ".json" if cfg.emit == "json" else ".csv"
    return Path(cfg.storage.output_dir) / f"{stem}{suffix}"


def _maybe_emit_grid(cfg: RunConfig, kind: str, model: KernelModel, p: np.ndarray, payload: Dict[str, Any], normalized: bool = False) -> None:
    if cfg.emit is None:
        return
    resolution = _int(cfg, "grid_resolution", cfg.grid.resolution)
    path = emit_grid(kind, model, p, resolution, _emit_path(cfg, f"{kind}_grid"), normalized, cfg.storage)
    payload["emitted"] = str(path)


# -- Subcommands

def cmd_elliptic(cfg: RunConfig) -> Outcome:
    r = _num(cfg, "r")
    u = parse_complex(str(cfg.opt("u", "0.5")))
    lat = make_lattice(r, cfg.tolerances)
    payload = {
        "r": r,
        "u": complex_pair(u),
        "wp": complex_pair(wp(lat, u, cfg.tolerances)),
        "wp_prime": complex_pair(wp_prime(lat, u, cfg.tolerances)),
        "zeta": complex_pair(w_zeta(lat, u, cfg.tolerances)),
        "omega1": lat.omega1,
        "eta1": lat.eta1,
        "eta2": complex_pair(lat.eta2),
        "g2": lat.g2,
        "g3": lat.g3,
        "legendre_residual": lat.legendre_residual,
    }
    return payload, None, EXIT_OK


def cmd_kernel(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    z, wbar = _vec(cfg, "z"), _vec(cfg, "wbar")
    pt = PolarizedPoint(z, wbar)
    mode = str(cfg.opt("mode", "closed"))
    if mode == "gram":
        gk = build_gram_kernel(cfg.domain, cfg.gram.degree_cap, cfg.gram.quad_resolution, cfg.gram)
        model.check_point(pt)
        value = gram_kernel_eval(gk, pt)
    else:
        value = model.eval(pt, mode=mode)
    payload: Dict[str, Any] = {"domain": cfg.domain.to_obj(), "mode": mode, "value": complex_pair(value), "abs": abs(value)}
    _maybe_emit_grid(cfg, "kernel", model, np.conj(wbar), payload)
    return payload, None, EXIT_OK


def cmd_metric(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    z, wbar = _vec(cfg, "z"), _vec(cfg, "wbar")
    met = metric_at(model, PolarizedPoint(z, wbar))
    payload: Dict[str, Any] = {
        "domain": cfg.domain.to_obj(),
        "g": matrix_pairs(met.g),
        "det": complex_pair(met.det_g),
        "positive_definite": met.positive_definite,
    }
    _maybe_emit_grid(cfg, "metric", model, np.conj(wbar), payload)
    return payload, None, EXIT_OK


def cmd_christoffel(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    z, p = _vec(cfg, "z"), _vec(cfg, "p")
    gam = christoffel_at(model, PolarizedPoint.based(z, p)).gamma
    payload = {"domain": cfg.domain.to_obj(), "gamma": [matrix_pairs(gam[j]) for j in range(gam.shape[0])]}
    return payload, None, EXIT_OK


def cmd_rep(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    p, z = _vec(cfg, "p"), _vec(cfg, "z")
    normalized = bool(cfg.opt("normalized", False))
    rep = rep_coordinates(model, p, normalized)
    payload: Dict[str, Any] = {
        "domain": cfg.domain.to_obj(),
        "normalized": normalized,
        "value": vector_pairs(rep(z)),
        "jacobian": matrix_pairs(rep.jacobian(z)),
    }
    _maybe_emit_grid(cfg, "rep", model, p, payload, normalized)
    return payload, None, EXIT_OK


def cmd_exph(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    p, zeta = _vec(cfg, "p"), _vec(cfg, "zeta")
    method = str(cfg.opt("method", "newton"))
    res = exph(model, p, zeta, method=method, normalized=bool(cfg.opt("normalized", False)))
    payload = {
        "method": res.method,
        "value": vector_pairs(res.z),
        "converged": res.converged,
        "iterations": res.iterations,
        "residual": res.residual,
    }
    return payload, None, EXIT_OK if res.converged else EXIT_FAILED


def cmd_geodesic(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    p, q0, v0 = _vec(cfg, "p"), _vec(cfg, "q0"), _vec(cfg, "v0")
    t_max = _num(cfg, "tmax", 1.0)
    samples = cfg.opt("samples")
    t_eval = np.linspace(0.0, t_max, int(samples)) if samples else None
    trace = integrate_geodesic(model, p, q0, v0, t_max, t_eval=t_eval)
    end = trace.end
    payload: Dict[str, Any] = {
        "terminal": trace.terminal,
        "message": trace.message,
        "t_end": end.t,
        "z_end": vector_pairs(end.z),
        "v_end": vector_pairs(end.v),
        "samples": int(len(trace.t)),
    }
    frame = geodesic_frame(trace)
    if cfg.emit is not None:
        payload["emitted"] = str(write_frame(frame, _emit_path(cfg, "geodesic"), cfg.storage))
    return payload, frame, EXIT_OK


def cmd_distance(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    p, x, y = _vec(cfg, "p"), _vec(cfg, "x"), _vec(cfg, "y")
    resolution = _int(cfg, "resolution", 41)
    chart_radius = _num(cfg, "chart_radius", 0.15)
    d = intrinsic_distance(model, p, x, y, resolution, chart_radius)
    payload = {"distance": d, "delta": intrinsic_delta(model, p, x, y), "resolution": resolution, "chart_radius": chart_radius}
    return payload, None, EXIT_OK


def cmd_zeros(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    p = _vec(cfg, "p")
    kind = str(cfg.opt("kind", "z0"))
    if kind not in VARIETY_KINDS:
        raise ConfigError(f"--kind must be one of {VARIETY_KINDS}, got {kind}")
    probe = probe_variety(model, p, kind, _int(cfg, "grid_resolution", 41))
    hits = [vector_pairs(h) for h in probe.hits]
    payload = {"kind": kind, "p": vector_pairs(p), "resolution": probe.resolution, "empty": probe.empty, "hits": hits, "defining_values": list(probe.defining_values)}
    frame = pd.DataFrame(
        {**{f"re_z{j + 1}": probe.hits.real[:, j] for j in range(model.dim)}, **{f"im_z{j + 1}": probe.hits.imag[:, j] for j in range(model.dim)}, "defining_value": probe.defining_values}
    )
    return payload, frame, EXIT_OK


def cmd_annulus_roots(cfg: RunConfig) -> Outcome:
    r = _num(cfg, "r")
    roots = annulus_roots(r, cfg.tolerances)
    payload: Dict[str, Any] = {
        "r": r,
        "lambda1": roots.lambda1,
        "lambda2": roots.lambda2,
        "residuals": list(roots.residuals),
        "h_minus_one": roots.h_minus_one,
        "h_minus_r": roots.h_minus_r,
        "h_minus_r2": roots.h_minus_r2,
    }
    if cfg.opt("p") is not None:
        p = parse_complex(str(cfg.opt("p")))
        payload["z0_points"] = [complex_pair(q) for q in annulus_zero_points(r, p, cfg.tolerances)]
    return payload, None, EXIT_OK


def cmd_product_gap(cfg: RunConfig) -> Outcome:
    r = _num(cfg, "r")
    p = _num(cfg, "p", 0.5)
    res = product_gap_search(r, p, resolution=_int(cfg, "grid_resolution", 60), tol=cfg.tolerances)
    rows = [{"re_z": w.z.real, "im_z": w.z.imag, "kernel_ratio": w.kernel_ratio, "metric_abs": w.metric_abs} for w in res.witnesses]
    payload = {"r": r, "p": p, "found": res.found, "witnesses": rows, "disk_factor_min": res.disk_factor_min}
    return payload, pd.DataFrame(rows, columns=["re_z", "im_z", "kernel_ratio", "metric_abs"]), EXIT_OK


def cmd_pole_probe(cfg: RunConfig) -> Outcome:
    model = _model(cfg)
    p = _vec(cfg, "p")
    rep = pole_probe(model, p, _int(cfg, "grid_resolution", 61))
    payload = {
        "injective_on_sample": rep.injective_on_sample,
        "summary": rep.summary,
        "resolution": rep.resolution,
        "evaluated": rep.evaluated,
        "collisions": [[vector_pairs(a), vector_pairs(b)] for a, b in rep.collisions],
    }
    return payload, None, EXIT_OK


def cmd_verify(cfg: RunConfig) -> Outcome:
    r = cfg.opt("r")
    report = run_verify_suite(
        suite=str(cfg.opt("suite", "all")),
        seed=cfg.seed,
        tol=cfg.tolerances,
        domain=cfg.domain if cfg.domain_explicit else None,
        r=float(r) if r is not None else None,
        gram=cfg.gram,
    )
    md = cfg.opt("report_md")
    if md:
        path = write_verify_report(report, str(md))
        logger.info("Exported: %s", path)
    return report.to_obj(), report.checks, EXIT_OK if report.passed else EXIT_FAILED


# -- Parser

_COMMANDS: Dict[str, Tuple[Callable[[RunConfig], Outcome], List[str]]] = {
    "elliptic": (cmd_elliptic, ["r", "u"]),
    "kernel": (cmd_kernel, ["z", "wbar", "mode", "grid_resolution", "emit_path"]),
    "metric": (cmd_metric, ["z", "wbar", "grid_resolution", "emit_path"]),
    "christoffel": (cmd_christoffel, ["z", "p"]),
    "rep": (cmd_rep, ["p", "z", "normalized", "grid_resolution", "emit_path"]),
    "exph": (cmd_exph, ["p", "zeta", "method", "normalized"]),
    "geodesic": (cmd_geodesic, ["p", "q0", "v0", "tmax", "samples", "emit_path"]),
    "distance": (cmd_distance, ["p", "x", "y", "resolution", "chart_radius"]),
    "zeros": (cmd_zeros, ["p", "kind", "grid_resolution"]),
    "annulus-roots": (cmd_annulus_roots, ["r", "p"]),
    "product-gap": (cmd_product_gap, ["r", "p", "grid_resolution"]),
    "pole-probe": (cmd_pole_probe, ["p", "grid_resolution"]),
    "verify": (cmd_verify, ["suite", "r", "report_md"]),
}


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="JSON file with run settings (flags override it)")
    sub.add_argument("--domain", default=None, help='Domain descriptor as JSON, e.g. \'{"type":"annulus","r":0.3}\'')
    sub.add_argument("--seed", type=int, default=None, help="Seed for randomized sampling (default: 7)")
    sub.add_argument("--tol", action="append", default=None, metavar="KEY=VALUE", help="Override one tolerance (repeatable)")
    sub.add_argument("--output", choices=OUTPUT_FORMATS, default=None, help="stdout format (default: json)")
    sub.add_argument("--verbose", action="store_true", help="Debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bgeo", description="Bergman kernel geometry: kernels, representative coordinates, geodesics and checks.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("elliptic", help="Weierstrass functions of the annulus lattice")
    p.add_argument("--r", type=float, default=None, help="Annulus inner radius, 0 < r < 1")
    p.add_argument("--u", default=None, help="Complex argument, e.g. 0.3+0.2i")

    for name, helptext in (("kernel", "Polarized kernel K(z, w̄)"), ("metric", "Polarized metric G(z, w̄)")):
        p = subs.add_parser(name, help=helptext)
        p.add_argument("--z", default=None, help="Comma-separated complex vector")
        p.add_argument("--wbar", default=None, help="Comma-separated complex vector")
        if name == "kernel":
            p.add_argument("--mode", choices=("closed", "weierstrass", "series", "gram"), default=None)

    p = subs.add_parser("christoffel", help="Christoffel symbols of the frozen connection")
    p.add_argument("--z", default=None)
    p.add_argument("--p", default=None)

    p = subs.add_parser("rep", help="Representative coordinates rep_p(z)")
    p.add_argument("--p", default=None)
    p.add_argument("--z", default=None)
    p.add_argument("--normalized", action="store_true", default=None)

    p = subs.add_parser("exph", help="Holomorphic exponential (inverse of rep_p)")
    p.add_argument("--p", default=None)
    p.add_argument("--zeta", default=None)
    p.add_argument("--method", choices=("newton", "ode"), default=None)
    p.add_argument("--normalized", action="store_true", default=None)

    p = subs.add_parser("geodesic", help="Integrate a geodesic of the frozen connection")
    p.add_argument("--p", default=None)
    p.add_argument("--q0", default=None)
    p.add_argument("--v0", default=None)
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--samples", type=int, default=None, help="Sample at this many equally spaced times instead of every step")

    p = subs.add_parser("distance", help="Intrinsic distance upper bound on a grid graph")
    p.add_argument("--p", default=None)
    p.add_argument("--x", default=None)
    p.add_argument("--y", default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--chart-radius", dest="chart_radius", type=float, default=None)

    p = subs.add_parser("zeros", help="Probe Z0, Z1 or Zhat1 at a basepoint")
    p.add_argument("--p", default=None)
    p.add_argument("--kind", choices=VARIETY_KINDS, default=None)

    p = subs.add_parser("annulus-roots", help="Real zeros of the annulus kernel profile")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--p", default=None, help="Also list the points of Z0 in the annulus for this basepoint")

    p = subs.add_parser("product-gap", help="Search annulus x disk for points of Zhat1 off Z0")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--p", type=float, default=None)

    p = subs.add_parser("pole-probe", help="Sampled injectivity check of rep_p")
    p.add_argument("--p", default=None)

    p = subs.add_parser("verify", help="Run verification suites")
    p.add_argument("--suite", default=None, help="all, or a comma-separated list of suites")
    p.add_argument("--r", type=float, default=None, help="Fix the annulus radius")
    p.add_argument("--report-md", dest="report_md", default=None, help="Also write a markdown summary here")

    for name, sub in subs.choices.items():
        _common(sub)
        if name in ("zeros", "product-gap", "pole-probe", "kernel", "metric", "rep"):
            sub.add_argument("--grid", dest="grid_resolution", type=int, default=None, help="Grid resolution per real axis")
        if name in ("kernel", "metric", "rep", "geodesic"):
            sub.add_argument("--emit", choices=OUTPUT_FORMATS, default=None, help="Write a data file (csv or json)")
            sub.add_argument("--emit-path", dest="emit_path", default=None, help="Path of the emitted file")
    return parser


def _print(payload: Dict[str, Any], frame: Optional[pd.DataFrame], output: str) -> None:
    if output == "csv" and frame is not None:
        sys.stdout.write(frame.to_csv(index=False, float_format="%.17g"))
        return
    sys.stdout.write(json.dumps(_clean(payload), indent=2) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[bgeo] %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handler, names = _COMMANDS[args.command]
    try:
        cfg = load_run_config(args, names)
        payload, frame, code = handler(cfg)
    except (ConfigError, DomainError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except BergmanError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILED

    _print(payload, frame, cfg.output)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
