"""
Measured spectra and the experimental transmission loss derived from them.

Spectrum files are CSV with a block of ``# key=value`` comment lines on
top (``distance_m``, ``angle_deg``, ``filter``) followed by the header
``freq_hz,spl_db``::

    # distance_m=0.5
    # angle_deg=90
    # filter=with
    freq_hz,spl_db
    1000.0,72.5
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import Provenance, TLCurve
from .errors import MeasurementError

_TRUE = {"with", "true", "yes", "1", "installed"}
_FALSE = {"without", "false", "no", "0", "none"}


@dataclass(eq=False)
class Spectrum:
    """Sound pressure levels (dB re 20 uPa) against strictly increasing frequency."""

    frequencies: np.ndarray
    level: np.ndarray
    distance: float
    angle: float
    filter_installed: bool | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.level = np.asarray(self.level, dtype=float)
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.level.shape:
            raise MeasurementError("frequencies and levels must be 1-D arrays of equal length")
        if np.any(np.diff(self.frequencies) <= 0):
            i = int(np.argmax(np.diff(self.frequencies) <= 0)) + 1
            raise MeasurementError(f"frequencies not strictly increasing at index {i}")
        if not np.all(np.isfinite(self.level)):
            raise MeasurementError("levels must be finite")
        if not (math.isfinite(self.distance) and self.distance > 0):
            raise MeasurementError(f"distance_m must be positive, got {self.distance!r}")
        if not 0.0 <= self.angle <= 180.0:
            raise MeasurementError(f"angle_deg must lie in [0, 180], got {self.angle!r}")

    def __len__(self):
        return len(self.frequencies)


def _parse_filter(value: str, where: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise MeasurementError(f"{where}: filter must be one of with/without, got {value!r}")


def _parse_float(value: str, what: str, where: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise MeasurementError(f"{where}: {what} is not a number: {value!r}") from None


def parse_spectrum(text: str, source: str = "<string>") -> Spectrum:
    """Parse spectrum CSV text; errors cite ``source`` and the line number."""
    meta = {}
    freqs, levels = [], []
    header_seen = False
    meta_lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        where = f"{source}: line {lineno}"
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header_seen:
                continue
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, value = (s.strip() for s in body.split("=", 1))
            meta[key] = value
            meta_lines[key] = lineno
            continue
        if not header_seen:
            cols = [c.strip() for c in next(csv.reader([line]))]
            if cols != ["freq_hz", "spl_db"]:
                raise MeasurementError(f"{where}: expected header 'freq_hz,spl_db', got {line!r}")
            header_seen = True
            continue
        cols = next(csv.reader([line]))
        if len(cols) != 2:
            raise MeasurementError(f"{where}: expected 2 fields, got {len(cols)}")
        f = _parse_float(cols[0], "freq_hz", where)
        level = _parse_float(cols[1], "spl_db", where)
        if not (math.isfinite(f) and f > 0):
            raise MeasurementError(f"{where}: frequency must be positive and finite")
        if not math.isfinite(level):
            raise MeasurementError(f"{where}: level must be finite")
        if freqs and f <= freqs[-1]:
            raise MeasurementError(f"{where}: frequency {f:g} Hz does not increase (previous {freqs[-1]:g} Hz)")
        freqs.append(f)
        levels.append(level)
    if not header_seen:
        raise MeasurementError(f"{source}: missing header 'freq_hz,spl_db'")
    for key in ("distance_m", "angle_deg"):
        if key not in meta:
            raise MeasurementError(f"{source}: missing metadata '{key}'")
    distance = _parse_float(meta["distance_m"], "distance_m", f"{source}: line {meta_lines['distance_m']}")
    angle = _parse_float(meta["angle_deg"], "angle_deg", f"{source}: line {meta_lines['angle_deg']}")
    installed = None
    if "filter" in meta:
        installed = _parse_filter(meta["filter"], f"{source}: line {meta_lines['filter']}")
    extra = {k: v for k, v in meta.items() if k not in ("distance_m", "angle_deg", "filter")}
    return Spectrum(np.array(freqs), np.array(levels), distance, angle, installed, extra)


def _expected_matches(spec: Spectrum, expected: dict, source: str):
    for key, want in expected.items():
        if key == "distance_m":
            ok = math.isclose(spec.distance, float(want), rel_tol=1e-12)
            got = spec.distance
        elif key == "angle_deg":
            ok = math.isclose(spec.angle, float(want), rel_tol=1e-12, abs_tol=1e-12)
            got = spec.angle
        elif key == "filter":
            want = want if isinstance(want, bool) else _parse_filter(str(want), source)
            ok = spec.filter_installed == want
            got = spec.filter_installed
        else:
            got = spec.metadata.get(key)
            ok = got == str(want)
        if not ok:
            raise MeasurementError(f"{source}: metadata field '{key}' is {got!r}, expected {want!r}")


def load_spectrum(path, expected_metadata: dict | None = None) -> Spectrum:
    """
    Read and validate a spectrum file.

    ``expected_metadata`` maps metadata keys (``distance_m``, ``angle_deg``,
    ``filter`` or any extra key) to required values.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeasurementError(f"{path}: {exc.strerror or exc}") from exc
    spec = parse_spectrum(text, str(path))
    if expected_metadata:
        _expected_matches(spec, expected_metadata, str(path))
    return spec


def spectrum_to_csv(spec: Spectrum) -> str:
    buf = io.StringIO()
    buf.write(f"# distance_m={spec.distance!r}\n")
    buf.write(f"# angle_deg={spec.angle!r}\n")
    if spec.filter_installed is not None:
        buf.write(f"# filter={'with' if spec.filter_installed else 'without'}\n")
    for key, value in spec.metadata.items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "spl_db"])
    for f, level in zip(spec.frequencies, spec.level):
        w.writerow([repr(float(f)), repr(float(level))])
    return buf.getvalue()


def write_spectrum(spec: Spectrum, path) -> None:
    Path(path).write_text(spectrum_to_csv(spec), newline="")


def _check_grids(grids, what="grid"):
    ref = grids[0]
    for g in grids[1:]:
        if len(g) != len(ref):
            raise MeasurementError(f"{what} mismatch: {len(ref)} vs {len(g)} points")
        diff = np.nonzero(g != ref)[0]
        if len(diff):
            i = int(diff[0])
            raise MeasurementError(f"{what} mismatch: first differing frequency {float(ref[i])!r} Hz vs {float(g[i])!r} Hz")


def tl_from_pair(without: Spectrum, with_: Spectrum) -> TLCurve:
    """Experimental TL, ``level_without - level_with`` in dB, on a shared grid."""
    _check_grids([without.frequencies, with_.frequencies], "frequency grid")
    if not math.isclose(without.distance, with_.distance, rel_tol=1e-12):
        raise MeasurementError(f"metadata field 'distance_m' differs: {without.distance!r} vs {with_.distance!r}")
    if not math.isclose(without.angle, with_.angle, rel_tol=1e-12, abs_tol=1e-12):
        raise MeasurementError(f"metadata field 'angle_deg' differs: {without.angle!r} vs {with_.angle!r}")
    if without.filter_installed is not None and without.filter_installed == with_.filter_installed:
        raise MeasurementError("metadata field 'filter' must differ between the two spectra of a pair")
    return TLCurve(without.frequencies.copy(), without.level - with_.level, Provenance.MEASURED,
                   metadata={"distance_m": without.distance, "angle_deg": without.angle})


def aggregate_tl(curves, domain: str = "db") -> TLCurve:
    """
    Pointwise mean and population standard deviation of TL curves.

    ``domain="db"`` averages the dB values; ``"pressure"`` averages the
    linear pressure ratios and converts the mean back to dB. The standard
    deviation is always taken over the dB values. Values are sorted per
    frequency before summation so the result does not depend on the order
    of ``curves``.
    """
    curves = list(curves)
    if len(curves) < 2:
        raise MeasurementError("aggregation needs at least two curves")
    if domain not in ("db", "pressure"):
        raise MeasurementError(f"unknown averaging domain {domain!r}")
    _check_grids([c.frequencies for c in curves], "frequency grid")
    stack = np.sort(np.vstack([c.tl for c in curves]), axis=0)
    std = np.std(stack, axis=0)
    if domain == "db":
        mean = np.mean(stack, axis=0)
    else:
        mean = 20.0 * np.log10(np.mean(10.0 ** (stack / 20.0), axis=0))
    meta = {"curves": len(curves), "averaging": domain,
            "distances_m": sorted(c.metadata.get("distance_m") for c in curves
                                  if c.metadata.get("distance_m") is not None)}
    return TLCurve(curves[0].frequencies.copy(), mean, Provenance.MEASURED, std=std, metadata=meta)


def pair_spectra(without, with_):
    """
    Match without/with spectra by ``(distance_m, angle_deg)``.

    Returns ``[(without, with_), ...]`` ordered by distance then angle.
    Unmatched spectra raise MeasurementError listing their metadata.
    """
    def key(s):
        return (float(s.distance), float(s.angle))

    left = {}
    for s in without:
        if key(s) in left:
            raise MeasurementError(f"duplicate without-filter spectrum at distance_m={s.distance!r}, angle_deg={s.angle!r}")
        left[key(s)] = s
    right = {}
    for s in with_:
        if key(s) in right:
            raise MeasurementError(f"duplicate with-filter spectrum at distance_m={s.distance!r}, angle_deg={s.angle!r}")
        right[key(s)] = s
    unmatched = sorted(set(left) ^ set(right))
    if unmatched:
        listing = ", ".join(
            f"{'without' if k in left else 'with'}(distance_m={k[0]!r}, angle_deg={k[1]!r})" for k in unmatched
        )
        raise MeasurementError(f"unpaired spectra: {listing}")
    return [(left[k], right[k]) for k in sorted(left)]
