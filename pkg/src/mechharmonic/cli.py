"""Command-line front end.

    mechharmonic run <config.json> [--seed N] [--out DIR]
    mechharmonic spectrum <signal.csv> --orders N [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 infeasible or not converged.
Log verbosity comes from the MECHHARMONIC_LOG environment variable.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from dataclasses import asdict, fields, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .dynamics import InertiaModel, hybrid_quality, inverse_dynamics
from .fivebar import FiveBarGeometry, PathSpec, analyse
from .harmonics import AliasingError, HarmonicSpectrum, compute_spectrum, max_resolvable_order
from .objectives import ObjectiveWeights, breakdown_from_report
from .optimize import Bounds, GAConfig, PowellConfig, SynthesisProblem, ga_run
from .planar import Point2
from .singledof import (NEEDLE_POWELL, PARAMETER_NAMES as NEEDLE_NAMES, REFERENCE_START,
                        REFERENCE_STROKE, NeedleMechanism, StrokeSpec, optimize_needle)

logger = logging.getLogger("mechharmonic")

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 2, 3
LOG_ENV = "MECHHARMONIC_LOG"
REFERENCE_PATH = "reference"

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_FIVEBAR_NAMES = ("p", "q", "r", "s", "cv_x", "cv_y", "servo_x", "servo_y")


def _object(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


def _config_fields(cls) -> dict:
    kinds = {"int": "integer", "float": "number"}
    props = {}
    for f in fields(cls):
        parts = [t.strip() for t in str(f.type).split("|")]
        if parts[0] in kinds:
            types = [kinds[parts[0]]] + (["null"] if "None" in parts else [])
            props[f.name] = {"type": types if len(types) > 1 else types[0]}
    return _object(props)


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "problem": {"enum": ["fivebar-synthesis", "fivebar-analysis",
                             "singledof-optimize", "spectrum"]},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
        "path": _object({"file": {"type": "string"},
                         "points": {"type": "array", "minItems": 4,
                                    "items": {"type": "array", "items": _NUM,
                                              "minItems": 2, "maxItems": 2}},
                         "theta0": _NUM}),
        "geometry": _object({n: _NUM for n in _FIVEBAR_NAMES}, _FIVEBAR_NAMES),
        "bounds": _object({n: {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
                           for n in _FIVEBAR_NAMES}, _FIVEBAR_NAMES),
        "inject": {"type": "array",
                   "items": _object({n: _NUM for n in _FIVEBAR_NAMES}, _FIVEBAR_NAMES)},
        "weights": _object({n: {"type": "number", "minimum": 0}
                            for n in ("w_err", "w_mob", "w_harm", "w_swept")}),
        "err_mode": {"enum": ["sum-squared", "sum-of-squares"]},
        "max_order": {"type": "integer", "minimum": 1},
        "ga": _config_fields(GAConfig),
        "powell": _config_fields(PowellConfig),
        "inertia": _object({"density": _POS,
                            "gravity": {"type": "array", "items": _NUM,
                                        "minItems": 2, "maxItems": 2},
                            "link_density": _object({n: {"type": "number", "minimum": 0}
                                                     for n in "pqrs"})}),
        "cv_speed": _POS,
        "stroke": _object({"upper": _NUM, "lower": _NUM, "min_transmission": _POS},
                          ("upper", "lower")),
        "start": _object({n: _NUM for n in NEEDLE_NAMES}, NEEDLE_NAMES),
        "n_samples": {"type": "integer", "minimum": 12},
        "signal": _object({"file": {"type": "string"}, "column": {"type": "integer", "minimum": 0}},
                          ("file",)),
        "orders": {"type": "integer", "minimum": 1},
    },
    "required": ["problem"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"problem": {"const": "fivebar-synthesis"}}},
         "then": {"required": ["path", "bounds"]}},
        {"if": {"properties": {"problem": {"const": "fivebar-analysis"}}},
         "then": {"required": ["path", "geometry"]}},
        {"if": {"properties": {"problem": {"const": "spectrum"}}},
         "then": {"required": ["signal"]}},
    ],
}


class ConfigError(ValueError):
    """Configuration problem, reported with exit code 2."""


def _line_of(text: str, path) -> int:
    """Best-effort source line for a JSON pointer, found by walking key names."""
    pos, line = 0, 1
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(key))).search(text, pos)
        if m is None:
            break
        pos = m.start()
        line = text.count("\n", 0, pos) + 1
    return line


def load_config(path: Path) -> dict:
    """Parse and schema-check a run configuration; raise ConfigError with a line number."""
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: (_line_of(text, e.absolute_path), e.message))
    if errors:
        err = errors[0]
        where = "/".join(map(str, err.absolute_path)) or "<root>"
        raise ConfigError(f"{path}:{_line_of(text, err.absolute_path)}: {where}: {err.message}")
    return cfg


# --- input resolution -------------------------------------------------------

def read_points(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    try:
        return np.array([[float(r[0]), float(r[1])] for r in rows if r])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: expected two numeric columns") from exc


def read_signal(path: Path, column: int = 0) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_number(rows[0][column] if len(rows[0]) > column else "0"):
        rows = rows[1:]
    try:
        return np.array([float(r[column]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: column {column} is not numeric") from exc


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def reference_path_file():
    return resources.files("mechharmonic").joinpath("data", "reference_path.csv")


def _resolve(base: Path, name: str) -> Path:
    p = Path(name)
    p = p if p.is_absolute() else base / p
    if not p.is_file():
        raise ConfigError(f"referenced file not found: {p}")
    return p


def build_path(cfg: dict, base: Path) -> PathSpec:
    spec = cfg["path"]
    if "points" in spec:
        pts = np.array(spec["points"], dtype=float)
    elif spec.get("file", REFERENCE_PATH) == REFERENCE_PATH:
        with resources.as_file(reference_path_file()) as p:
            pts = read_points(p)
    else:
        pts = read_points(_resolve(base, spec["file"]))
    try:
        return PathSpec(pts, spec.get("theta0", 0.0))
    except ValueError as exc:
        raise ConfigError(f"path: {exc}") from exc


def _geometry(d: dict) -> FiveBarGeometry:
    return FiveBarGeometry.from_vector([d[n] for n in _FIVEBAR_NAMES])


# --- report writers ---------------------------------------------------------

def fmt(x) -> str:
    return repr(round(float(x), 10))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite numbers to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n")


def write_spectrum(path: Path, spectrum: HarmonicSpectrum) -> None:
    write_csv(path, ["order", "magnitude", "phase"],
              [(n, float(m), float(ph)) for n, m, ph in spectrum.table()])


def _spectrum_dict(spectrum: HarmonicSpectrum) -> dict:
    return {"a0": spectrum.a0, "a": list(spectrum.a), "b": list(spectrum.b),
            "magnitude": list(spectrum.magnitudes()), "phase": list(spectrum.phases())}


# --- pipelines --------------------------------------------------------------

def _fivebar_reports(geom, path, cfg, out: Path, result: dict) -> int:
    """Analyse one geometry and emit the five-bar report set; return the exit code."""
    weights = ObjectiveWeights(**cfg.get("weights", {}))
    report = analyse(geom, path)
    breakdown = breakdown_from_report(report, weights, cfg.get("max_order", 5),
                                      cfg.get("err_mode", "sum-squared"))
    result.update(parameters=geom.to_dict(), objective=breakdown.to_dict(),
                  max_link_ratio=geom.max_link_ratio())

    rows = []
    for i, (target, sol) in enumerate(zip(path.points, report.solutions)):
        end = sol.actual_end if sol is not None else (math.nan, math.nan)
        rows.append((i, float(path.cv_angles[i]), float(target[0]), float(target[1]),
                     float(end[0]), float(end[1]), float(report.errors[i])))
    write_csv(out / "path.csv",
              ["index", "theta_cv", "desired_x", "desired_y", "actual_x", "actual_y", "error"], rows)

    trace = report.trace
    if not trace.feasible:
        result["status"] = "infeasible"
        result["diagnostics"] = [f"closing dyad fails to assemble at {trace.mobility} "
                                 "position(s); theta5, torque and spectrum reports skipped"]
        return EXIT_FAILED

    write_csv(out / "theta5.csv", ["index", "theta_cv", "theta5", "branch"],
              [(i, float(c), float(t), b.name) for i, (c, t, b)
               in enumerate(zip(trace.theta_cv, trace.theta5, trace.branches))])
    spectrum = compute_spectrum(trace.theta5, cfg.get("max_order", 5))
    write_spectrum(out / "spectrum.csv", spectrum)
    result["spectrum"] = _spectrum_dict(spectrum)

    inertia = cfg.get("inertia", {})
    model = InertiaModel(inertia.get("density", 1.0), tuple(inertia.get("gravity", (0.0, 0.0))),
                         dict(inertia.get("link_density", {})))
    cv_speed = cfg.get("cv_speed", 1.0)
    profile = inverse_dynamics(geom, trace, cv_speed, model,
                               [s.actual_end for s in report.solutions])
    write_csv(out / "torque.csv",
              ["index", "theta_cv", "tau_cv", "tau_servo", "theta5_rate", "power"],
              [(i, float(c), float(a), float(b), float(w), float(p)) for i, (c, a, b, w, p)
               in enumerate(zip(profile.theta_cv, profile.tau_cv, profile.tau_servo,
                                profile.theta5_rate, profile.power))])
    torque = {"cv_speed": cv_speed, "peak_cv": profile.peak_cv, "peak_servo": profile.peak_servo,
              "rms_cv": profile.rms_cv, "rms_servo": profile.rms_servo,
              "energy_residual": profile.energy_residual(), "flagged": list(profile.flagged)}
    try:
        torque.update(hybrid_quality(profile).to_dict())
    except ValueError as exc:
        torque["hybrid_error"] = str(exc)
    result["torque"] = torque
    return EXIT_OK


def run_fivebar_analysis(cfg: dict, base: Path, out: Path, seed: int | None) -> tuple[int, dict]:
    path = build_path(cfg, base)
    result = {"problem": "fivebar-analysis", "status": "ok", "termination": "analysis"}
    return _fivebar_reports(_geometry(cfg["geometry"]), path, cfg, out, result), result


def run_fivebar_synthesis(cfg: dict, base: Path, out: Path, seed: int | None) -> tuple[int, dict]:
    path = build_path(cfg, base)
    ga_cfg = GAConfig(**{**cfg.get("ga", {}), **({"seed": seed} if seed is not None else {})})
    problem = SynthesisProblem(path, Bounds.from_dict(cfg["bounds"]),
                               ObjectiveWeights(**cfg.get("weights", {})),
                               cfg.get("max_order", 5), cfg.get("err_mode", "sum-squared"))
    injected = [[d[n] for n in _FIVEBAR_NAMES] for d in cfg.get("inject", [])]
    res = ga_run(problem, ga_cfg, seeds=injected)
    write_csv(out / "history.csv",
              ["generation", "composite", "err", "mob", "harm", "swept", "structural_error",
               "mobility"],
              [(r.generation, r.best.composite, r.best.err, r.best.mob, r.best.harm,
                r.best.swept, r.best.structural_error, r.best.mobility) for r in res.history])
    result = {"problem": "fivebar-synthesis", "status": "ok", "seed": ga_cfg.seed,
              "termination": res.termination, "generations": res.generations,
              "error_threshold": res.error_threshold, "ga": asdict(ga_cfg)}
    code = _fivebar_reports(res.best_geometry, path, cfg, out, result)
    if code == EXIT_OK and res.termination != "threshold":
        result["status"] = "not-converged"
        result["diagnostics"] = ["generation cap reached before the termination rule was met"]
        code = EXIT_FAILED
    return code, result


def run_singledof(cfg: dict, base: Path, out: Path, seed: int | None) -> tuple[int, dict]:
    stroke = StrokeSpec(**cfg["stroke"]) if "stroke" in cfg else REFERENCE_STROKE
    start = REFERENCE_START
    if "start" in cfg:
        d = cfg["start"]
        start = NeedleMechanism(d["a"], d["b"], d["c"], Point2(d["pivot2_x"], d["pivot2_y"]),
                                d["e"], d["L"], d["slider_x"], d["beta"])
    res = optimize_needle(stroke, start, replace(NEEDLE_POWELL, **cfg.get("powell", {})),
                          cfg.get("n_samples", 24))
    ev = res.evaluation
    result = {"problem": "singledof-optimize", "status": "ok",
              "termination": "converged" if res.penalty.converged else "penalty-rounds",
              "parameters": res.mechanism.to_dict(),
              "objective": {"value": ev.objective, "harmonic_penalty": ev.harmonic_penalty,
                            "transmission_penalty": ev.transmission_penalty},
              "stroke": asdict(stroke), "h_upper": ev.h_upper, "h_lower": ev.h_lower,
              "stroke_residual": res.stroke_residual, "min_transmission": ev.min_transmission,
              "evaluations": res.penalty.evaluations}
    angles = 2.0 * np.pi * np.arange(len(ev.displacement)) / max(len(ev.displacement), 1)
    write_csv(out / "displacement.csv", ["index", "crank_angle", "slider"],
              [(i, float(a), float(y)) for i, (a, y) in enumerate(zip(angles, ev.displacement))])
    if ev.spectrum is None:
        result["status"] = "infeasible"
        result["diagnostics"] = [f"chain fails to close at {ev.infeasible_samples} sample(s)"]
        return EXIT_FAILED, result
    write_spectrum(out / "spectrum.csv", ev.spectrum)
    result["spectrum"] = _spectrum_dict(ev.spectrum)
    if not res.penalty.converged:
        result["status"] = "not-converged"
        result["diagnostics"] = ["constraint residual still above tolerance after the last round"]
        return EXIT_FAILED, result
    return EXIT_OK, result


def run_spectrum_config(cfg: dict, base: Path, out: Path, seed: int | None) -> tuple[int, dict]:
    signal = read_signal(_resolve(base, cfg["signal"]["file"]), cfg["signal"].get("column", 0))
    return spectrum_pipeline(signal, cfg.get("orders", 5), out)


def spectrum_pipeline(signal: np.ndarray, orders: int, out: Path) -> tuple[int, dict]:
    try:
        spectrum = compute_spectrum(signal, orders)
    except AliasingError as exc:
        raise ConfigError(f"{exc} (at most {max_resolvable_order(len(signal))} orders "
                          f"for {len(signal)} samples)") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_spectrum(out / "spectrum.csv", spectrum)
    return EXIT_OK, {"problem": "spectrum", "status": "ok", "samples": len(signal),
                     "spectrum": _spectrum_dict(spectrum)}


PIPELINES = {
    "fivebar-analysis": run_fivebar_analysis,
    "fivebar-synthesis": run_fivebar_synthesis,
    "singledof-optimize": run_singledof,
    "spectrum": run_spectrum_config,
}


def run(config_path: Path, seed: int | None = None, out: Path | None = None) -> int:
    cfg = load_config(config_path)
    base = config_path.resolve().parent
    out = out or (base / cfg["output"] if "output" in cfg else Path.cwd())
    out.mkdir(parents=True, exist_ok=True)
    if seed is None and "seed" in cfg:
        seed = cfg["seed"]
    try:
        code, result = PIPELINES[cfg["problem"]](cfg, base, out, seed)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{config_path}: {exc}") from exc
    write_json(out / "result.json", result)
    for note in result.get("diagnostics", []):
        logger.warning(note)
    logger.info("%s finished with status %s", cfg["problem"], result["status"])
    return code


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mechharmonic",
                                 description="Harmonic-aware linkage synthesis and analysis.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="execute a JSON run configuration")
    r.add_argument("config", type=Path)
    r.add_argument("--seed", type=int, help="override the configured RNG seed")
    r.add_argument("--out", type=Path, help="output directory")
    s = sub.add_parser("spectrum", help="harmonic table of one cycle of samples")
    s.add_argument("signal", type=Path, help="CSV with one sample per row")
    s.add_argument("--orders", type=int, default=5)
    s.add_argument("--column", type=int, default=0)
    s.add_argument("--out", type=Path, default=Path.cwd())
    return ap


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get(LOG_ENV, "WARNING").upper(), None)
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return run(args.config, args.seed, args.out)
        if not args.signal.is_file():
            raise ConfigError(f"{args.signal}: file not found")
        args.out.mkdir(parents=True, exist_ok=True)
        code, result = spectrum_pipeline(read_signal(args.signal, args.column), args.orders, args.out)
        write_json(args.out / "result.json", result)
        return code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
