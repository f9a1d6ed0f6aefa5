import math

import numpy as np
import pytest

from spurfilter.curves import Provenance, TLCurve, curve_to_csv, read_curve, write_curve
from spurfilter.errors import MeasurementError


def test_csv_format():
    c = TLCurve([1000.0, 2000.0], [0.5, math.inf], Provenance.SIM_FEM)
    assert curve_to_csv(c) == "freq_hz,tl_db\n1000.0,0.5\n2000.0,inf\n"


def test_csv_with_std_and_errors():
    c = TLCurve([1.0, 2.0], [3.0, 4.0], Provenance.MEASURED, std=[0.25, 0.5], errors=["", "perturbed"])
    lines = curve_to_csv(c).splitlines()
    assert lines[0] == "freq_hz,tl_db,std_db,error"
    assert lines[2] == "2.0,4.0,0.5,perturbed"


def test_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    f = np.sort(rng.uniform(1e3, 1e5, 30))
    c = TLCurve(f, rng.normal(0, 20, 30), Provenance.MEASURED, std=rng.uniform(0, 2, 30))
    path = tmp_path / "c.csv"
    write_curve(c, path)
    assert b"\r" not in path.read_bytes()
    back = read_curve(path)
    assert np.array_equal(back.frequencies, c.frequencies)
    assert np.array_equal(back.tl, c.tl)
    assert np.array_equal(back.std, c.std)


def test_infinite_values_round_trip(tmp_path):
    path = tmp_path / "c.csv"
    write_curve(TLCurve([1.0, 2.0], [math.inf, -math.inf], Provenance.SIM_TMM), path)
    assert read_curve(path).tl.tolist() == [math.inf, -math.inf]


def test_bad_header(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("f,tl\n1,2\n")
    with pytest.raises(MeasurementError, match="line 1"):
        read_curve(path)


def test_invariants():
    with pytest.raises(ValueError):
        TLCurve([2.0, 1.0], [0.0, 0.0], Provenance.SIM_FEM)
    with pytest.raises(ValueError):
        TLCurve([1.0, 2.0], [0.0], Provenance.SIM_FEM)
    with pytest.raises(ValueError):
        TLCurve([1.0, 2.0], [0.0, 1.0], "SIMULATED")


def test_peak_and_band():
    f = np.arange(30e3, 51e3, 1e3)
    tl = 50.0 - np.abs(f - 40e3) / 1e3 * 3.0  # 3 dB per kHz either side of 40 kHz
    c = TLCurve(f, tl, Provenance.SIM_FEM)
    assert c.peak() == (40e3, 50.0)
    lo, hi = c.band_above(41.0)
    assert lo == pytest.approx(37e3) and hi == pytest.approx(43e3)
    lo, hi = c.band_above(39.5)
    assert lo == pytest.approx(36.5e3) and hi == pytest.approx(43.5e3)
    assert c.band_above(60.0) is None


def test_band_clipped_at_grid_edges():
    c = TLCurve([1.0, 2.0, 3.0], [10.0, 10.0, 10.0], Provenance.SIM_FEM)
    assert c.band_above(5.0) == (1.0, 3.0)
