"""
Acceptance criteria C1-C10, each printing one PASS/FAIL line with the measured values.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed even
when output capture is on.
"""
import math
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from spurfilter.acoustics import half_wavelength
from spurfilter.cli import compare_curves
from spurfilter.config import RunConfig
from spurfilter.curves import Provenance, TLCurve
from spurfilter.fem import LossMode, SolveConfig, Termination, assemble_system, filter_mesh, tl_spectrum
from spurfilter.geometry import FilterGeometry
from spurfilter.measurements import Spectrum, aggregate_tl, tl_from_pair
from spurfilter.optimize import design_filter
from spurfilter.stl import (StlParams, cylinder_profile, export_stl, is_watertight, read_stl, revolve,
                            signed_volume)
from spurfilter.tmm import (DuctLoss, Topology, axial_segment, cascade, closed_branch_admittance,
                            filter_two_port, radial_segment, shunt, tl_tmm)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
LOSSLESS_RIGID = SolveConfig(loss_mode=LossMode.LOSSLESS, nodal_plane_termination=Termination.RIGID)


def verdict(capsys, tag, ok, detail):
    with capsys.disabled():
        print(f"\n{tag} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _local_extrema(f, y):
    inner = ((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])) | ((y[1:-1] < y[:-2]) & (y[1:-1] < y[2:]))
    return f[1:-1][inner]


@pytest.fixture(scope="module")
def cfg40():
    return RunConfig.load(CONFIGS / "filter_40khz.json")


def _design(cfg, l1):
    target = cfg.target()
    template = cfg.geometry(require_a1=False)
    template = FilterGeometry(a0=template.a0, l0=template.l0, a1=None, l1=l1, d_ch=template.d_ch)
    return design_filter(target.f0, template, target.a1_bounds, cfg.air(), cfg.mic(), cfg.solve_config(),
                         rel_tol=target.rel_tol, scan_points=target.scan_points, budget=target.budget, jobs=4)


def test_c1_straight_pipe_resonance(capsys):
    t0 = time.perf_counter()
    cfg = RunConfig.load(CONFIGS / "straight_pipe.json")
    geom, air = cfg.geometry(), cfg.air()
    curve = tl_spectrum(geom, air, None, cfg.solve_config(), cfg.sweep().frequencies(), jobs=4)
    f_peak, tl_peak = curve.peak()
    elapsed = time.perf_counter() - t0
    ok = abs(f_peak / 60e3 - 1) <= 5e-3 and tl_peak >= 60.0 and elapsed <= 60
    verdict(capsys, "C1", ok, f"straight pipe peak {f_peak:.0f} Hz ({(f_peak / 60e3 - 1) * 100:+.3f}% of 60 kHz), "
            f"peak TL {tl_peak:.2f} dB (need >= 60), {elapsed:.1f} s")


def test_c2_designed_40khz_filter(capsys, cfg40):
    t0 = time.perf_counter()
    res = _design(cfg40, cfg40.geometry(require_a1=False).l1)
    sweep = cfg40.sweep()
    curve = tl_spectrum(res.geometry, cfg40.air(), cfg40.mic(), cfg40.solve_config(), sweep.frequencies(), jobs=4)
    band = curve.band_above(40.0, around=res.f0)
    width = 0.0 if band is None else band[1] - band[0]
    elapsed = time.perf_counter() - t0
    ok = res.tl_star >= 50.0 and 5e3 <= width <= 15e3 and elapsed <= 900
    verdict(capsys, "C2", ok, f"a1* {res.a1_star * 1e3:.4f} mm, TL(f0) {res.tl_star:.2f} dB (need >= 50), "
            f"TL >= 40 dB band {width / 1e3:.2f} kHz (need 10 +- 5), {sweep.points}-point sweep, {elapsed:.1f} s")


def test_c3_dimensional_sensitivity(capsys, cfg40):
    t0 = time.perf_counter()
    a12 = _design(cfg40, 1.2e-3).a1_star
    a14 = _design(cfg40, 1.4e-3).a1_star
    elapsed = time.perf_counter() - t0
    ok = abs(a12 - 3.21e-3) <= 0.2e-3 and abs(a14 - 3.26e-3) <= 0.2e-3 and a14 > a12 and elapsed <= 1800
    verdict(capsys, "C3", ok, f"a1*(l1=1.2 mm) {a12 * 1e3:.4f} mm (3.21 +- 0.2), a1*(l1=1.4 mm) {a14 * 1e3:.4f} mm "
            f"(3.26 +- 0.2), increasing: {a14 > a12}, {elapsed:.1f} s")


def test_c4_low_frequency_dip(capsys, cfg40):
    geom, air, mic = cfg40.geometry(), cfg40.air(), cfg40.mic()
    f_r = mic.resonance_frequency
    freqs = np.geomspace(1e3, 10e3, 300)
    with_mic = tl_spectrum(geom, air, mic, SolveConfig(), freqs)
    rigid = tl_spectrum(geom, air, None, SolveConfig(nodal_plane_termination=Termination.RIGID), freqs)
    ext_mic = _local_extrema(freqs, with_mic.tl)
    ext_rigid = _local_extrema(freqs, rigid.tl)
    near = ext_mic[np.abs(ext_mic / f_r - 1) <= 0.1]
    ok = len(near) > 0 and len(ext_rigid) == 0
    verdict(capsys, "C4", ok, f"f_r {f_r:.0f} Hz; MIC extrema {[round(x) for x in ext_mic]} Hz "
            f"(within 10%: {[round(x) for x in near]}); RIGID extrema below 10 kHz: {len(ext_rigid)}")


def test_c5_plane_wave_cross_model(capsys):
    cfg = RunConfig.load(CONFIGS / "scaled_x10_compare.json")
    geom, air, sc = cfg.geometry(), cfg.air(), cfg.solve_config()
    freqs = cfg.sweep().frequencies()
    fem_curve = tl_spectrum(geom, air, None, sc, freqs, jobs=4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tmm_curve = tl_tmm(geom, air, None, DuctLoss.NONE, freqs)
    delta, max_dev = compare_curves(fem_curve, tmm_curve)
    mask = fem_curve.tl < 30.0
    worst = freqs[mask][np.nanargmax(np.abs(delta[mask]))]
    ok = max_dev <= 1.0
    verdict(capsys, "C5", ok, f"x10 geometry, {freqs[0]:g}-{freqs[-1]:g} Hz: max |TL_FEM - TL_TMM| = {max_dev:.2f} dB "
            f"where TL_FEM < 30 dB (need <= 1), worst at {worst:.0f} Hz")


def test_c6_scale_invariance(capsys, cfg40):
    geom, air = cfg40.geometry(), cfg40.air()
    freqs = np.geomspace(1e3, 80e3, 20)
    ref = tl_spectrum(geom, air, None, LOSSLESS_RIGID, freqs)
    worst = {}
    for s in (0.5, 2.0):
        scaled = tl_spectrum(geom.scaled(s), air, None, LOSSLESS_RIGID, freqs / s)
        worst[s] = float(np.max(np.abs(scaled.tl - ref.tl)))
    ok = max(worst.values()) <= 0.1
    verdict(capsys, "C6", ok, f"20 frequencies, max |dTL| s=0.5: {worst[0.5]:.2e} dB, s=2: {worst[2.0]:.2e} dB (need <= 0.1)")


def test_c7_reciprocity(capsys, cfg40):
    geom, air, mic = cfg40.geometry(), cfg40.air(), cfg40.mic()
    det_err = 0.0
    for f in np.geomspace(1e3, 100e3, 25):
        for loss in DuctLoss:
            branch = radial_segment(geom.a0, geom.a1, geom.l1, f, air)
            parts = [axial_segment(geom.a0, geom.l0, f, air, loss), branch,
                     shunt(closed_branch_admittance(branch))]
            ports = parts + [cascade(parts)] + [filter_two_port(geom, air, f, loss, t) for t in Topology]
            det_err = max(det_err, max(abs(p.det - 1) for p in ports))
    mesh = filter_mesh(geom, air, SolveConfig(), 100e3)
    sym_err = 0.0
    for f in (1e3, 3e3, 20e3, 40e3, 60e3, 100e3):
        for cfg in (SolveConfig(), LOSSLESS_RIGID):
            a = assemble_system(mesh, air, mic, f, cfg).matrix
            sym_err = max(sym_err, abs(a - a.T).max() / np.max(np.abs(a.data)))
    ok = det_err <= 1e-10 and sym_err <= 1e-12
    verdict(capsys, "C7", ok, f"max |det T - 1| = {det_err:.2e} (need <= 1e-10), "
            f"max FEM asymmetry {sym_err:.2e} (need <= 1e-12)")


def test_c8_half_wavelength_helpers(capsys):
    got = {f: round(half_wavelength(f, 343.0) * 1e3, 1) for f in (40e3, 60e3)}
    ok = got[40e3] == 4.3 and got[60e3] == 2.9
    verdict(capsys, "C8", ok, f"c/2f at 40 kHz {got[40e3]} mm (4.3), at 60 kHz {got[60e3]} mm (2.9)")


def test_c9_measured_tl_processing(capsys):
    freqs = np.geomspace(1e3, 100e3, 64)
    ratio = 1.0 + 30.0 * np.exp(-((freqs - 40e3) / 5e3) ** 2)
    p_with = 2e-5 * 10 ** (52 / 20) * (1 + 0.1 * np.sin(freqs / 7e3))
    level = lambda p: 20 * np.log10(p / 2e-5)  # noqa: E731
    tl = tl_from_pair(Spectrum(freqs, level(p_with * ratio), 0.5, 0.0, False),
                      Spectrum(freqs, level(p_with), 0.5, 0.0, True))
    pair_err = float(np.max(np.abs(tl.tl - 20 * np.log10(ratio))))
    x = np.array([-3.0, 0.0, 12.5, 41.25])
    f4 = np.array([1e3, 2e3, 3e3, 4e3])
    agg = aggregate_tl([TLCurve(f4, x, Provenance.MEASURED), TLCurve(f4, x + 2.0, Provenance.MEASURED)])
    exact = np.array_equal(agg.tl, x + 1.0) and np.array_equal(agg.std, np.ones(4))
    ok = pair_err <= 1e-12 and exact
    verdict(capsys, "C9", ok, f"pair TL error {pair_err:.1e} dB (need <= 1e-12); two-curve mean/std exact: {exact}")


def test_c10_stl_validity(capsys, cfg40):
    details = []
    ok = True
    for name, params in (("plain", cfg40.stl()),
                         ("ungrooved", StlParams(outer_radius=8e-3, mount_bore_radius=6.7e-3, mount_bore_depth=3e-3))):
        _, _, tri = read_stl(export_stl(cfg40.geometry(), params))
        tight, vol = is_watertight(tri), signed_volume(tri)
        ok &= tight and vol > 0
        details.append(f"{name}: watertight {tight}, volume {vol:.2f} mm^3")
    v, f = revolve(cylinder_profile(5.0, 7.0), 256)
    cyl = signed_volume(v[f])
    rel = cyl / (math.pi * 25.0 * 7.0) - 1
    ok &= abs(rel) <= 5e-3 and is_watertight(v[f])
    verdict(capsys, "C10", ok, "; ".join(details) + f"; 256-segment cylinder volume error {rel * 100:+.3f}% (need within 0.5%)")
