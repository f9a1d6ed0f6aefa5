"""Transmission-loss curves and their CSV representation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import MeasurementError


class Provenance(str, Enum):
    SIM_FEM = "SIM_FEM"
    SIM_TMM = "SIM_TMM"
    MEASURED = "MEASURED"


@dataclass(eq=False)
class TLCurve:
    """
    TL in dB against strictly increasing frequency.

    ``errors`` carries a per-point failure note (empty string when the
    point solved cleanly) and is only populated by sweep drivers.
    """

    frequencies: np.ndarray
    tl: np.ndarray
    provenance: Provenance
    std: np.ndarray | None = None
    errors: list | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.tl = np.asarray(self.tl, dtype=float)
        self.provenance = Provenance(self.provenance)
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.tl.shape:
            raise ValueError("frequencies and tl must be 1-D arrays of equal length")
        if self.std is not None:
            self.std = np.asarray(self.std, dtype=float)
            if self.std.shape != self.tl.shape:
                raise ValueError("std must match tl in length")
        if self.errors is not None and len(self.errors) != len(self.tl):
            raise ValueError("errors must match tl in length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly increasing")

    def __len__(self):
        return len(self.frequencies)

    def peak(self):
        """``(frequency, tl)`` of the largest finite TL value."""
        finite = np.where(np.isfinite(self.tl), self.tl, -np.inf)
        i = int(np.argmax(finite))
        return float(self.frequencies[i]), float(self.tl[i])

    def band_above(self, level_db: float, around: float | None = None):
        """
        Contiguous frequency interval where TL >= ``level_db`` containing the
        sample nearest ``around`` (default: the peak). Returns ``(f_lo, f_hi)``
        using linear interpolation of the crossings, or ``None``.
        """
        f, y = self.frequencies, self.tl
        i = int(np.argmin(np.abs(f - around))) if around is not None else int(np.argmax(np.nan_to_num(y, nan=-np.inf)))
        if not y[i] >= level_db:
            return None
        lo = i
        while lo > 0 and y[lo - 1] >= level_db:
            lo -= 1
        hi = i
        while hi < len(y) - 1 and y[hi + 1] >= level_db:
            hi += 1

        def cross(j, k):
            if not (np.isfinite(y[j]) and np.isfinite(y[k])):
                return f[j]
            return f[j] + (level_db - y[j]) * (f[k] - f[j]) / (y[k] - y[j])

        f_lo = cross(lo - 1, lo) if lo > 0 else f[0]
        f_hi = cross(hi, hi + 1) if hi < len(y) - 1 else f[-1]
        return float(f_lo), float(f_hi)


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def curve_to_csv(curve: TLCurve) -> str:
    """``freq_hz,tl_db[,std_db][,error]`` with LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["freq_hz", "tl_db"]
    if curve.std is not None:
        header.append("std_db")
    with_errors = curve.errors is not None and any(curve.errors)
    if with_errors:
        header.append("error")
    w.writerow(header)
    for i, (f, t) in enumerate(zip(curve.frequencies, curve.tl)):
        row = [_fmt(f), _fmt(t)]
        if curve.std is not None:
            row.append(_fmt(curve.std[i]))
        if with_errors:
            row.append(curve.errors[i])
        w.writerow(row)
    return buf.getvalue()


def write_curve(curve: TLCurve, path) -> None:
    Path(path).write_text(curve_to_csv(curve), newline="")


def read_curve(path, provenance=Provenance.MEASURED) -> TLCurve:
    """Read a TLCurve CSV; the provenance is not stored in the file."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:2] != ["freq_hz", "tl_db"]:
        raise MeasurementError(f"{path}: line 1: expected header freq_hz,tl_db[,std_db]")
    header = rows[0]
    has_std = "std_db" in header
    has_err = "error" in header
    freqs, tl, std, errs = [], [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            freqs.append(float(row[0]))
            tl.append(float(row[1]))
            if has_std:
                std.append(float(row[header.index("std_db")]))
        except (ValueError, IndexError) as exc:
            raise MeasurementError(f"{path}: line {lineno}: {exc}") from None
        if has_err:
            errs.append(row[header.index("error")] if len(row) > header.index("error") else "")
    return TLCurve(np.array(freqs), np.array(tl), provenance,
                   std=np.array(std) if has_std else None, errors=errs if has_err else None)
