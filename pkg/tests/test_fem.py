import math

import numpy as np
import pytest
import scipy.linalg as sla

from spurfilter import fem
from spurfilter.errors import ConfigurationError, ResolutionError, SolverError
from spurfilter.fem import (LossMode, PressureField, SolveConfig, Termination, assemble_system,
                            boundary_average_pressure, filter_mesh, relative_residual, solve_field,
                            tl_at, tl_spectrum)
from spurfilter.geometry import Tag

LOSSLESS_RIGID = SolveConfig(loss_mode=LossMode.LOSSLESS, nodal_plane_termination=Termination.RIGID)
DEFAULT = SolveConfig()


def _local_maxima(f, y):
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])
    return f[1:-1][inner]


@pytest.fixture(scope="module")
def mesh_40k(design_40k, air):
    return filter_mesh(design_40k, air, DEFAULT, 100e3)


def test_lossless_rigid_system_is_real_with_imaginary_load(design_40k, air, mesh_40k):
    sys = assemble_system(mesh_40k, air, None, 30e3, LOSSLESS_RIGID)
    assert np.max(np.abs(sys.matrix.imag)) == 0.0
    assert np.max(np.abs(sys.rhs.real)) == 0.0
    assert np.max(np.abs(sys.rhs.imag)) > 0


@pytest.mark.parametrize("freq", [1e3, 3e3, 40e3, 95e3])
def test_matrix_complex_symmetric(air, mic, mesh_40k, freq):
    a = assemble_system(mesh_40k, air, mic, freq, DEFAULT).matrix
    scale = np.max(np.abs(a.data))
    assert abs(a - a.T).max() < 1e-12 * scale


def test_unknowns_match_node_count(air, mic, mesh_40k):
    sys = assemble_system(mesh_40k, air, mic, 40e3, DEFAULT)
    assert sys.matrix.shape == (mesh_40k.n_nodes, mesh_40k.n_nodes)
    assert solve_field(sys).values.shape == (mesh_40k.n_nodes,)


@pytest.mark.parametrize("freq", [1e3, 3e3, 16e3, 40e3, 100e3])
def test_residual_bound(air, mic, mesh_40k, freq):
    sys = assemble_system(mesh_40k, air, mic, freq, DEFAULT)
    field = solve_field(sys)
    assert relative_residual(sys, field.values) <= 1e-10
    assert np.all(np.isfinite(field.values))


def test_straight_duct_standing_wave(air, straight_pipe):
    # rigid bottom at z = 0, velocity v0 into the port at z = L
    f = 5e3
    cfg = LOSSLESS_RIGID
    mesh = filter_mesh(straight_pipe, air, cfg, f)
    field = solve_field(assemble_system(mesh, air, None, f, cfg))
    k = 2 * math.pi * f / air.sound_speed
    length = straight_pipe.total_length
    z = mesh.nodes[:, 1]
    exact = -1j * air.impedance * cfg.inlet_velocity * np.cos(k * z) / math.sin(k * length)
    err = np.max(np.abs(field.values.astype(complex) - exact)) / np.max(np.abs(exact))
    assert err < 5e-3


def test_zero_inlet_gives_zero_field(air, mic, mesh_40k):
    cfg = SolveConfig(inlet_velocity=0.0)
    field = solve_field(assemble_system(mesh_40k, air, mic, 40e3, cfg))
    assert np.all(field.values == 0)


def test_exact_interior_resonance_is_reported(air, straight_pipe):
    # lowest nonzero eigenfrequency of the discrete rigid-walled pipe
    mesh = filter_mesh(straight_pipe, air, LOSSLESS_RIGID, 80e3)
    ops = fem._mesh_operators(mesh)
    lam = sla.eigh(ops["K"].toarray(), ops["M"].toarray(), eigvals_only=True)
    k = math.sqrt(lam[1])
    f_res = k * air.sound_speed / (2 * math.pi)
    assert f_res == pytest.approx(air.sound_speed / (2 * straight_pipe.total_length), rel=1e-3)
    with pytest.raises(SolverError, match=f"{f_res:.10g}"[:6]):
        solve_field(assemble_system(mesh, air, None, f_res, LOSSLESS_RIGID))


@pytest.mark.parametrize("tag", [Tag.PORT, Tag.WALL, Tag.NODAL_PLANE])
def test_constant_field_average(mesh_40k, tag):
    field = PressureField(np.full(mesh_40k.n_nodes, 2.5 - 1.0j), 1e3, mesh_40k)
    assert boundary_average_pressure(field, tag) == pytest.approx(2.5 - 1.0j, rel=1e-13)


def test_linear_field_average_on_nodal_plane(design_40k, mesh_40k):
    field = PressureField(mesh_40k.nodes[:, 0].astype(complex), 1e3, mesh_40k)
    assert boundary_average_pressure(field, Tag.NODAL_PLANE).real == pytest.approx(2 * design_40k.a0 / 3, rel=1e-12)


def test_conjugate_average(air, mic, mesh_40k):
    field = solve_field(assemble_system(mesh_40k, air, mic, 40e3, DEFAULT))
    conj = PressureField(np.conj(field.values), field.frequency, mesh_40k)
    for tag in (Tag.PORT, Tag.NODAL_PLANE):
        assert boundary_average_pressure(conj, tag) == pytest.approx(
            np.conj(boundary_average_pressure(field, tag)), rel=1e-13)


def test_unknown_tag(mesh_40k):
    field = PressureField(np.ones(mesh_40k.n_nodes, dtype=complex), 1e3, mesh_40k)
    with pytest.raises(ConfigurationError, match="unknown boundary tag"):
        boundary_average_pressure(field, "INLET")


def test_axis_has_no_area(mesh_40k):
    field = PressureField(np.ones(mesh_40k.n_nodes, dtype=complex), 1e3, mesh_40k)
    with pytest.raises(ConfigurationError, match="no surface area"):
        boundary_average_pressure(field, Tag.AXIS)


def test_field_length_checked(mesh_40k):
    with pytest.raises(ValueError):
        PressureField(np.ones(3, dtype=complex), 1e3, mesh_40k)


@pytest.mark.parametrize("cfg", [DEFAULT, LOSSLESS_RIGID], ids=["losses-mic", "lossless-rigid"])
def test_quasi_static_limit(design_40k, air, mic, cfg):
    assert abs(tl_at(design_40k, air, mic, cfg, 50.0)) < 0.1


def test_single_point_spectrum_matches_tl_at(design_40k, air, mic):
    curve = tl_spectrum(design_40k, air, mic, DEFAULT, [37e3])
    assert curve.tl[0] == tl_at(design_40k, air, mic, DEFAULT, 37e3)
    assert curve.provenance.value == "SIM_FEM"
    assert "tl_definition" in curve.metadata


def test_spectrum_independent_of_jobs(design_40k, air, mic):
    freqs = np.linspace(20e3, 60e3, 9)
    a = tl_spectrum(design_40k, air, mic, DEFAULT, freqs, jobs=1)
    b = tl_spectrum(design_40k, air, mic, DEFAULT, freqs, jobs=4)
    assert np.array_equal(a.tl, b.tl)


def test_doubling_inlet_velocity_keeps_tl(design_40k, air, mic, mesh_40k):
    base = tl_at(design_40k, air, mic, DEFAULT, 40e3, mesh=mesh_40k)
    doubled = tl_at(design_40k, air, mic, SolveConfig(inlet_velocity=2.0), 40e3, mesh=mesh_40k)
    assert doubled == pytest.approx(base, abs=1e-9)


def test_under_resolved_mesh_refused(design_40k, air, mic):
    mesh = filter_mesh(design_40k, air, DEFAULT, 20e3)
    with pytest.raises(ResolutionError, match="required"):
        assemble_system(mesh, air, mic, 40e3, DEFAULT)


def test_mic_termination_needs_mic(design_40k, air, mesh_40k):
    with pytest.raises(ConfigurationError, match="microphone"):
        assemble_system(mesh_40k, air, None, 40e3, DEFAULT)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SolveConfig(elements_per_wavelength=5)
    with pytest.raises(ConfigurationError):
        SolveConfig(inlet_velocity=-1.0)
    with pytest.raises(ConfigurationError):
        tl_spectrum(None, None, None, DEFAULT, [2e3, 1e3])


def test_failed_factorization_is_perturbed_and_flagged(design_40k, air, mic, monkeypatch):
    real = fem.solve_field
    bad = 30e3

    def flaky(system):
        if system.frequency == bad:
            raise SolverError("synthetic failure")
        return real(system)

    monkeypatch.setattr(fem, "solve_field", flaky)
    curve = tl_spectrum(design_40k, air, mic, DEFAULT, [20e3, bad, 40e3])
    assert curve.errors[0] == "" and curve.errors[2] == ""
    assert "perturbed" in curve.errors[1]
    assert curve.metadata["flagged"] == [bad]
    nudged = tl_at(design_40k, air, mic, DEFAULT, bad * (1 + 1e-9),
                   mesh=filter_mesh(design_40k, air, DEFAULT, 40e3 * (1 + 1e-9)))
    assert curve.tl[1] == pytest.approx(nudged, abs=1e-12)


def test_unrecoverable_point_recorded_or_raised(design_40k, air, mic, monkeypatch):
    def broken(system):
        raise SolverError("synthetic failure")

    monkeypatch.setattr(fem, "solve_field", broken)
    curve = tl_spectrum(design_40k, air, mic, DEFAULT, [20e3, 30e3], on_error="record")
    assert np.all(np.isnan(curve.tl))
    with pytest.raises(SolverError, match="20000 Hz"):
        tl_spectrum(design_40k, air, mic, DEFAULT, [20e3, 30e3])


def test_mesh_convergence_8_vs_16(design_40k, air, mic):
    freqs = np.geomspace(1e3, 100e3, 120)
    curves = {}
    for n in (8, 16):
        cfg = SolveConfig(elements_per_wavelength=n)
        curves[n] = tl_spectrum(design_40k, air, mic, cfg, freqs,
                                mesh=filter_mesh(design_40k, air, cfg, 100e3), jobs=4).tl
    peaks = _local_maxima(freqs, curves[16])
    away = np.array([np.all(np.abs(f - peaks) >= 0.02 * peaks) for f in freqs])
    diff = np.abs(curves[8] - curves[16])[away]
    assert diff.max() < 0.5, f"max change {diff.max():.3f} dB at {freqs[away][np.argmax(diff)]:.0f} Hz"


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_lossless_scale_invariance(design_40k, air, s):
    freqs = np.geomspace(1e3, 80e3, 20)
    big = design_40k.scaled(s)
    ref = tl_spectrum(design_40k, air, None, LOSSLESS_RIGID, freqs)
    scaled = tl_spectrum(big, air, None, LOSSLESS_RIGID, freqs / s)
    assert np.max(np.abs(ref.tl - scaled.tl)) < 0.1
