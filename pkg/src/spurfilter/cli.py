"""
Command-line front end.

Every command writes ``report.json`` into ``--out`` next to its outputs.
Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from . import fem, tmm
from .acoustics import mic_impedance
from .config import MM, RunConfig, apply_overrides
from .curves import curve_to_csv
from .errors import (ConfigurationError, DomainError, GeometryError, MeasurementError, MeshError,
                     ObjectiveError, ResolutionError, SolverError, SpurFilterError)
from .geometry import validate_geometry
from .measurements import aggregate_tl, load_spectrum, pair_spectra, tl_from_pair
from .optimize import Engine, design_filter
from .stl import export_stl, read_stl, signed_volume

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
COMPARE_TL_LIMIT = 30.0


class NotConverged(SpurFilterError):
    """The optimizer ran out of budget."""


def _versions() -> dict:
    def ver(name):
        try:
            return metadata.version(name)
        except metadata.PackageNotFoundError:
            return None

    return {"spurfilter": ver("artifact"), "python": platform.python_version(),
            "numpy": np.__version__, "scipy": ver("scipy")}


def _decisions(cfg: RunConfig | None) -> dict:
    out = {
        "fem_tl_definition": fem.TL_DEFINITION,
        "tmm_tl_definition": tmm.TL_DEFINITION,
        "tmm_junction": "closed radial side branch at mid-height of the expansion",
        "nodal_plane": "bottom face under the primary duct, r <= a0",
        "fem_mesh": "quadratic triangles, power-law grading toward the re-entrant corner",
        "wall_admittance": "(1+j)/2 k (delta_v + (gamma-1) delta_t), exp(+j omega t)",
        "optimizer": "16-point scan then Brent refinement, point-frequency objective",
        "measured_tl_averaging": "arithmetic mean of dB values, population std",
    }
    if cfg is not None:
        sc = cfg.solve_config()
        out["loss_mode"] = sc.loss_mode.value
        out["termination"] = sc.nodal_plane_termination.value
        out["elements_per_wavelength"] = sc.elements_per_wavelength
    return out


def _write_text(path: Path, text: str):
    path.write_text(text, newline="")
    return path.name


def _write_report(out: Path, command: str, cfg: RunConfig | None, summary: dict, outputs) -> Path:
    report = {
        "command": command,
        "config_hash": None if cfg is None else cfg.hash,
        "config": None if cfg is None else cfg.raw,
        "versions": _versions(),
        "decisions": _decisions(cfg),
        "summary": summary,
        "outputs": list(outputs),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _finite_or_str(x: float):
    return x if math.isfinite(x) else repr(x)


def cmd_design(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    # the expansion radius is the design variable; any value in the config is ignored
    geom = validate_geometry(cfg.geometry(require_a1=False).with_a1(None), require_a1=False)
    target = cfg.target()
    air, sc, mic = cfg.air(), cfg.solve_config(), cfg.mic_if_needed()
    try:
        res = design_filter(target.f0, geom, target.a1_bounds, air, mic, sc, engine=target.engine,
                            rel_tol=target.rel_tol, scan_points=target.scan_points,
                            budget=target.budget, jobs=jobs)
    except (SolverError, ObjectiveError) as exc:
        history = getattr(exc, "history", [])
        lines = ["a1_m,tl_db"] + [f"{a!r},{t!r}" for a, t in history]
        name = _write_text(out / "design_history.csv", "\n".join(lines) + "\n")
        _write_report(out, "design", cfg, {"error": str(exc), "evaluations": len(history)}, [name])
        raise
    hist = _write_text(out / "design_history.csv", res.history_csv())
    summary = {
        "engine": res.engine.value, "f0_hz": res.f0,
        "a1_star_m": res.a1_star, "a1_star_mm": res.a1_star / MM,
        "tl_star_db": _finite_or_str(res.tl_star), "evaluations": res.evaluations,
        "converged": res.converged, "flat_objective": res.flat,
        "rel_tol": target.rel_tol, "a1_bounds_m": list(res.bounds),
        "scan_points": target.scan_points, "budget": target.budget, "notes": res.notes,
    }
    _write_report(out, "design", cfg, summary, [hist])
    print(f"a1* = {res.a1_star / MM:.4f} mm, TL(f0) = {res.tl_star:.2f} dB "
          f"({res.evaluations} evaluations, engine {res.engine.value})")
    if not res.converged:
        raise NotConverged(f"optimizer did not converge within {target.budget} evaluations")
    return EXIT_OK


def _sweep_curve(cfg: RunConfig, engine: Engine, freqs, jobs: int):
    geom = validate_geometry(cfg.geometry())
    air, sc, mic = cfg.air(), cfg.solve_config(), cfg.mic_if_needed()
    if engine is Engine.FEM:
        return fem.tl_spectrum(geom, air, mic, sc, freqs, jobs=jobs, on_error="record")
    loss = tmm.DuctLoss.ZWIKKER_KOSTEN if sc.loss_mode is fem.LossMode.BOUNDARY_LAYER else tmm.DuctLoss.NONE
    return tmm.tl_tmm(geom, air, mic, loss, freqs)


def cmd_sweep(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    sweep = cfg.sweep()
    curve = _sweep_curve(cfg, sweep.engine, sweep.frequencies(), jobs)
    name = _write_text(out / "sweep.csv", curve_to_csv(curve))
    f_peak, tl_peak = curve.peak()
    failed = [float(f) for f, t in zip(curve.frequencies, curve.tl) if math.isnan(t)]
    summary = {"engine": sweep.engine.value, "provenance": curve.provenance.value, "points": len(curve),
               "peak_frequency_hz": f_peak, "peak_tl_db": _finite_or_str(tl_peak),
               "failed_points_hz": failed,
               "metadata": {k: v for k, v in curve.metadata.items() if k != "tl_definition"}}
    _write_report(out, "sweep", cfg, summary, [name])
    print(f"{len(curve)} points, peak {tl_peak:.2f} dB at {f_peak:.6g} Hz ({sweep.engine.value})")
    return EXIT_OK


def compare_curves(a, b, limit: float = COMPARE_TL_LIMIT):
    """Per-frequency ``a - b`` and the largest ``|a - b|`` where ``a < limit``."""
    delta = a.tl - b.tl
    mask = a.tl < limit
    finite = mask & np.isfinite(delta)
    max_dev = float(np.max(np.abs(delta[finite]))) if finite.any() else 0.0
    return delta, max_dev


def cmd_compare(cfg: RunConfig, out: Path, jobs: int = 1, engines=("FEM", "TMM")) -> int:
    sweep = cfg.sweep()
    freqs = sweep.frequencies()
    first, second = (Engine(e.upper()) for e in engines)
    a = _sweep_curve(cfg, first, freqs, jobs)
    b = _sweep_curve(cfg, second, freqs, jobs)
    delta, max_dev = compare_curves(a, b)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", f"tl_{first.value.lower()}_db", f"tl_{second.value.lower()}_db", "delta_db"])
    for row in zip(freqs, a.tl, b.tl, delta):
        w.writerow([repr(float(x)) for x in row])
    name = _write_text(out / "compare.csv", buf.getvalue())
    fa, _ = a.peak()
    fb, _ = b.peak()
    summary = {"engines": [first.value, second.value], "points": len(freqs),
               "max_abs_delta_db_below_30db": max_dev, "tl_limit_db": COMPARE_TL_LIMIT,
               "peak_frequency_hz": [fa, fb], "peak_frequency_rel_diff": abs(fb - fa) / fa}
    _write_report(out, "compare", cfg, summary, [name])
    print(f"max |dTL| = {max_dev:.3f} dB where TL_{first.value} < {COMPARE_TL_LIMIT:g} dB; "
          f"peaks {fa:.6g} Hz vs {fb:.6g} Hz")
    return EXIT_OK


def cmd_export_stl(cfg: RunConfig, out: Path, filename: str = "filter.stl") -> int:
    geom = validate_geometry(cfg.geometry())
    data = export_stl(geom, cfg.stl())
    path = out / filename
    path.write_bytes(data)
    _, _, tri = read_stl(data)
    volume = signed_volume(tri)
    summary = {"triangles": len(tri), "signed_volume_mm3": volume, "units": "mm"}
    _write_report(out, "export-stl", cfg, summary, [path.name])
    print(f"{len(tri)} triangles, signed volume {volume:.4f} mm^3 -> {path}")
    return EXIT_OK


def cmd_mic_z(cfg: RunConfig, out: Path) -> int:
    mic = cfg.mic()
    freqs = cfg.sweep().frequencies()
    z = mic_impedance(mic, freqs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "re_z", "im_z"])
    for f, zz in zip(freqs, np.atleast_1d(z)):
        w.writerow([repr(float(f)), repr(float(zz.real)), repr(float(zz.imag))])
    name = _write_text(out / "mic_z.csv", buf.getvalue())
    summary = {"points": len(freqs), "resonance_frequency_hz": mic.resonance_frequency}
    _write_report(out, "mic-z", cfg, summary, [name])
    print(f"{len(freqs)} points, diaphragm resonance {mic.resonance_frequency:.6g} Hz")
    return EXIT_OK


def _pair_name(s) -> str:
    return f"tl_d{s.distance:g}m_a{s.angle:g}deg.csv"


def cmd_measure_tl(cfg: RunConfig | None, out: Path, without, with_, domain: str = "db") -> int:
    if not without or not with_:
        raise ConfigurationError("measure-tl needs at least one --without and one --with file")
    lefts = [_load_group_member(p, False) for p in without]
    rights = [_load_group_member(p, True) for p in with_]
    pairs = pair_spectra(lefts, rights)
    outputs = []
    curves = []
    for a, b in pairs:
        c = tl_from_pair(a, b)
        curves.append(c)
        outputs.append(_write_text(out / _pair_name(a), curve_to_csv(c)))
    final = aggregate_tl(curves, domain=domain) if len(curves) >= 2 else curves[0]
    outputs.append(_write_text(out / "tl_measured.csv", curve_to_csv(final)))
    summary = {"pairs": len(pairs), "averaging": domain if len(curves) >= 2 else None,
               "distances_m": [a.distance for a, _ in pairs], "angles_deg": [a.angle for a, _ in pairs],
               "inputs_without": [str(p) for p in without], "inputs_with": [str(p) for p in with_]}
    _write_report(out, "measure-tl", cfg, summary, outputs)
    print(f"{len(pairs)} pair(s) -> tl_measured.csv" + (" with std" if len(curves) >= 2 else ""))
    return EXIT_OK


def _load_group_member(path, installed: bool):
    spec = load_spectrum(path)
    if spec.filter_installed is not None and spec.filter_installed != installed:
        raise MeasurementError(
            f"{path}: metadata field 'filter' is {'with' if spec.filter_installed else 'without'}, "
            f"but the file was passed as --{'with' if installed else 'without'}"
        )
    return spec


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for sweeps and scans")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="BLOCK.KEY=VALUE",
                        help="override one configuration value (repeatable)")
    parser = argparse.ArgumentParser(prog="spurfilter",
                                     description="Design and evaluate half-wavelength microphone filters.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common], help="optimize a1 for the target frequency")
    sub.add_parser("sweep", parents=[common], help="TL spectrum of a fully specified geometry")
    p = sub.add_parser("compare", parents=[common], help="FEM against TMM on the sweep grid")
    p.add_argument("--engines", default="FEM,TMM", help="two engines separated by a comma")
    p = sub.add_parser("export-stl", parents=[common], help="binary STL of the printable body")
    p.add_argument("--name", default="filter.stl", help="STL file name inside --out")
    sub.add_parser("mic-z", parents=[common], help="microphone impedance over the sweep grid")
    p = sub.add_parser("measure-tl", parents=[common], help="TL from measured with/without spectra")
    p.add_argument("--without", nargs="+", type=Path, default=[], help="spectra measured without the filter")
    p.add_argument("--with", dest="with_", nargs="+", type=Path, default=[], help="spectra measured with the filter")
    p.add_argument("--domain", choices=("db", "pressure"), default="db", help="averaging domain")
    return parser


def _load_config(args, required=True) -> RunConfig | None:
    if args.config is None:
        if required:
            raise ConfigurationError("--config is required for this command")
        return RunConfig(apply_overrides({}, args.overrides))
    return RunConfig.load(args.config, args.overrides)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigurationError("--jobs must be >= 1")
        cfg = _load_config(args, required=args.command != "measure-tl")
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "design":
            return cmd_design(cfg, args.out, args.jobs)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.jobs)
        if args.command == "compare":
            engines = [e.strip() for e in args.engines.split(",")]
            if len(engines) != 2:
                raise ConfigurationError("--engines takes exactly two names, e.g. FEM,TMM")
            try:
                engines = [Engine(e.upper()).value for e in engines]
            except ValueError:
                raise ConfigurationError(f"unknown engine in {args.engines!r}") from None
            return cmd_compare(cfg, args.out, args.jobs, engines)
        if args.command == "export-stl":
            return cmd_export_stl(cfg, args.out, args.name)
        if args.command == "mic-z":
            return cmd_mic_z(cfg, args.out)
        return cmd_measure_tl(cfg, args.out, args.without, args.with_, args.domain)
    except (SolverError, ObjectiveError, NotConverged) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (MeasurementError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigurationError, GeometryError, DomainError, MeshError, ResolutionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None):
    sys.exit(run(argv))
