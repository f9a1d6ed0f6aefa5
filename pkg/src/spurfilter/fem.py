"""
Axisymmetric frequency-domain Helmholtz solver.

Weak form, with cylindrical measure ``r dr dz`` and ``exp(+j omega t)``::

    int (grad p . grad q - k^2 p q) r dA
        + j k sum_walls beta int p q r ds  =  j omega rho v0 int_PORT q r ds

where ``beta`` is the normalized specific admittance of each boundary:
the boundary-layer wall admittance on WALL edges (when losses are on) and
``rho c / (Z S)`` on the nodal plane, with ``Z`` the microphone acoustic
impedance and ``S`` the nodal-plane area. The simulated transmission loss
is ``20 log10 |<p>_PORT / <p>_NODAL_PLANE|`` with area-weighted averages.
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .acoustics import AirProperties, MicrophoneModel, mic_impedance, wall_admittance
from .curves import Provenance, TLCurve
from .errors import ConfigurationError, ResolutionError, SolverError
from .geometry import FilterGeometry, Mesh, Tag, build_profile, generate_mesh

TL_DEFINITION = "TL_sim = 20*log10(|<p>_PORT / <p>_NODAL_PLANE|), area-weighted boundary averages"
RESIDUAL_TOL = 1e-10
PERTURBATION = 1e-9


class LossMode(str, Enum):
    LOSSLESS = "LOSSLESS"
    BOUNDARY_LAYER = "BOUNDARY_LAYER"


class Termination(str, Enum):
    MIC_IMPEDANCE = "MIC_IMPEDANCE"
    RIGID = "RIGID"


@dataclass(frozen=True)
class SolveConfig:
    loss_mode: LossMode = LossMode.BOUNDARY_LAYER
    nodal_plane_termination: Termination = Termination.MIC_IMPEDANCE
    inlet_velocity: float = 1.0
    elements_per_wavelength: float = 12.0

    def __post_init__(self):
        object.__setattr__(self, "loss_mode", LossMode(self.loss_mode))
        object.__setattr__(self, "nodal_plane_termination", Termination(self.nodal_plane_termination))
        if not self.inlet_velocity >= 0:
            raise ConfigurationError("inlet_velocity must be non-negative")
        if not self.elements_per_wavelength >= 6:
            raise ConfigurationError("elements_per_wavelength must be >= 6")


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: sp.csc_matrix
    rhs: np.ndarray
    mesh: Mesh
    frequency: float


@dataclass(frozen=True, eq=False)
class PressureField:
    values: np.ndarray
    frequency: float
    mesh: Mesh
    residual: float = 0.0

    def __post_init__(self):
        if len(self.values) != self.mesh.n_nodes:
            raise ValueError("field length must equal the mesh node count")


# Dunavant degree-5 rule on the reference triangle (weights sum to 1/2)
_QA, _QB = 0.0597158717897698, 0.4701420641051151
_QC, _QD = 0.7974269853530873, 0.1012865073234563
_QUAD_PTS = np.array([
    [1 / 3, 1 / 3], [_QA, _QB], [_QB, _QA], [_QB, _QB], [_QC, _QD], [_QD, _QC], [_QD, _QD],
])
_QUAD_W = 0.5 * np.array([0.225] + [0.1323941527885062] * 3 + [0.1259391805448271] * 3)
_GAUSS_S, _GAUSS_W = np.polynomial.legendre.leggauss(5)
_GAUSS_S = 0.5 * (_GAUSS_S + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W


def _p2_reference():
    x, y = _QUAD_PTS[:, 0], _QUAD_PTS[:, 1]
    l1, l2, l3 = 1.0 - x - y, x, y
    n = np.stack([l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
                  4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1], axis=1)
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    L = (l1, l2, l3)
    dn = np.empty((len(x), 6, 2))
    for i in range(3):
        dn[:, i] = (4 * L[i] - 1)[:, None] * dl[i]
    for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
        dn[:, 3 + k] = 4 * (L[i][:, None] * dl[j] + L[j][:, None] * dl[i])
    return n, dn


_N_REF, _DN_REF = _p2_reference()


def _line_shapes():
    s = _GAUSS_S
    return np.stack([(1 - s) * (1 - 2 * s), 4 * s * (1 - s), s * (2 * s - 1)], axis=1)


_N_LINE = _line_shapes()


@functools.lru_cache(maxsize=16)
def _mesh_operators(mesh: Mesh) -> dict:
    """Frequency-independent matrices and load vectors of one mesh."""
    conn = mesh.p2_connectivity()
    x = mesh.nodes[mesh.triangles]
    jac = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=2)  # (T, 2, 2), columns
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv = np.linalg.inv(jac)
    r_q = x[:, 0, 0][:, None] + np.einsum("tj,qj->tq", jac[:, 0, :], _QUAD_PTS)
    grad = np.einsum("qia,tab->tqib", _DN_REF, inv)
    wr = _QUAD_W[None, :] * det[:, None] * r_q
    ke = np.einsum("tq,tqia,tqja->tij", wr, grad, grad)
    me = np.einsum("tq,qi,qj->tij", wr, _N_REF, _N_REF)
    rows = np.repeat(conn, 6, axis=1).ravel()
    cols = np.tile(conn, (1, 6)).ravel()
    n = mesh.n_nodes
    ops = {
        "K": sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n)),
        "M": sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n)),
    }
    for tag in Tag:
        ops[tag] = _boundary_operators(mesh, mesh.edges_with_tag(tag))
    return ops


def _boundary_operators(mesh: Mesh, edges: np.ndarray):
    """r-weighted boundary mass matrix and load vector ``int N r ds``."""
    n = mesh.n_nodes
    load = np.zeros(n)
    if len(edges) == 0:
        return sp.csr_matrix((n, n)), load
    p = mesh.nodes[edges]  # (E, 3, 2) start, mid, end
    length = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    r_q = p[:, 0, 0][:, None] + (p[:, 2, 0] - p[:, 0, 0])[:, None] * _GAUSS_S[None, :]
    w = _GAUSS_W[None, :] * length[:, None] * r_q
    me = np.einsum("eq,qi,qj->eij", w, _N_LINE, _N_LINE)
    fe = np.einsum("eq,qi->ei", w, _N_LINE)
    rows = np.repeat(edges, 3, axis=1).ravel()
    cols = np.tile(edges, (1, 3)).ravel()
    np.add.at(load, edges.ravel(), fe.ravel())
    return sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n)), load


def boundary_area(mesh: Mesh, tag: Tag) -> float:
    """Area of the axisymmetric surface swept by the tagged edges (m^2)."""
    return 2.0 * math.pi * float(_mesh_operators(mesh)[Tag(tag)][1].sum())


def required_element_size(air: AirProperties, frequency: float, cfg: SolveConfig) -> float:
    return air.sound_speed / (frequency * cfg.elements_per_wavelength)


def filter_mesh(geom: FilterGeometry, air: AirProperties, cfg: SolveConfig, f_max: float,
                divisions=None, **mesh_options) -> Mesh:
    """Mesh of the filter's acoustic domain resolving frequencies up to ``f_max``."""
    return generate_mesh(build_profile(geom), f_max, cfg.elements_per_wavelength,
                         sound_speed=air.sound_speed, divisions=divisions, **mesh_options)


def assemble_system(mesh: Mesh, air: AirProperties, mic: MicrophoneModel | None,
                    frequency: float, cfg: SolveConfig) -> LinearSystem:
    """Complex-symmetric sparse system ``A p = b`` at one frequency."""
    if not frequency > 0:
        raise ConfigurationError("frequency must be positive")
    h_req = required_element_size(air, frequency, cfg)
    if mesh.max_edge() > h_req * (1 + 1e-9):
        raise ResolutionError(
            f"mesh edge {mesh.max_edge():.4g} m exceeds the {h_req:.4g} m required at "
            f"{frequency:g} Hz with {cfg.elements_per_wavelength:g} elements per wavelength"
        )
    ops = _mesh_operators(mesh)
    omega = 2.0 * math.pi * frequency
    k = omega / air.sound_speed
    a = ops["K"] - (k * k) * ops["M"]
    a = a.astype(complex)
    if cfg.loss_mode is LossMode.BOUNDARY_LAYER:
        a = a + (1j * k * wall_admittance(frequency, air)) * ops[Tag.WALL][0]
    if cfg.nodal_plane_termination is Termination.MIC_IMPEDANCE:
        if mic is None:
            raise ConfigurationError("MIC_IMPEDANCE termination requires a microphone model")
        z_spec = mic_impedance(mic, frequency) * boundary_area(mesh, Tag.NODAL_PLANE)
        a = a + (1j * k * air.impedance / z_spec) * ops[Tag.NODAL_PLANE][0]
    b = (1j * omega * air.density * cfg.inlet_velocity) * ops[Tag.PORT][1]
    return LinearSystem(matrix=sp.csc_matrix(a), rhs=b.astype(complex), mesh=mesh, frequency=frequency)


def relative_residual(system: LinearSystem, values) -> float:
    """``||A x - b|| / ||b||`` accumulated in extended precision."""
    a = system.matrix.tocoo()
    x = np.asarray(values, dtype=np.clongdouble)
    ax = np.zeros(a.shape[0], dtype=np.clongdouble)
    np.add.at(ax, a.row, a.data.astype(np.clongdouble) * x[a.col])
    res = system.rhs.astype(np.clongdouble) - ax
    b = system.rhs.astype(np.clongdouble)
    return float(np.sqrt(np.sum(np.abs(res) ** 2)) / np.sqrt(np.sum(np.abs(b) ** 2)))


def _extended_residual(a_coo, data_ld, x, b):
    ax = np.zeros(a_coo.shape[0], dtype=np.clongdouble)
    np.add.at(ax, a_coo.row, data_ld * x[a_coo.col])
    return b - ax


def solve_field(system: LinearSystem) -> PressureField:
    """
    Direct sparse LU solve followed by iterative refinement.

    At low frequencies the near-uniform field makes ``A x`` a cancellation
    of large terms, so the double-precision residual stalls above the
    tolerance. The residual and the accumulated solution are therefore
    kept in extended precision; ``PressureField.values`` is ``clongdouble``.
    """
    a, b = system.matrix, system.rhs
    b_norm = np.linalg.norm(b)
    if b_norm == 0:
        return PressureField(np.zeros(len(b), dtype=np.clongdouble), system.frequency, system.mesh)
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise SolverError(f"factorization failed at {system.frequency:.10g} Hz: {exc}") from None
    coo = a.tocoo()
    data_ld = coo.data.astype(np.clongdouble)
    b_ld = b.astype(np.clongdouble)
    x = lu.solve(b).astype(np.clongdouble)
    rel = math.inf
    for _ in range(4):
        res = _extended_residual(coo, data_ld, x, b_ld)
        rel = float(np.sqrt(np.sum(np.abs(res) ** 2))) / b_norm
        if not np.all(np.isfinite(x)) or rel <= RESIDUAL_TOL:
            break
        x = x + lu.solve(res.astype(complex))
    if not (np.all(np.isfinite(x)) and rel <= RESIDUAL_TOL):
        raise SolverError(
            f"ill-conditioned system at {system.frequency:.10g} Hz (relative residual {rel:.3g}); "
            "likely an undamped interior resonance"
        )
    return PressureField(x, system.frequency, system.mesh, residual=rel)


def boundary_average_pressure(field: PressureField, tag) -> complex:
    """Area-weighted average of the pressure over a tagged surface of revolution."""
    try:
        tag = Tag(tag)
    except ValueError:
        raise ConfigurationError(f"unknown boundary tag {tag!r}") from None
    load = _mesh_operators(field.mesh)[tag][1]
    total = load.sum()
    if total <= 0:
        raise ConfigurationError(f"tag {tag.value} has no surface area on this mesh")
    return complex(load @ field.values / total)


def tl_from_field(field: PressureField) -> float:
    p_port = boundary_average_pressure(field, Tag.PORT)
    p_np = boundary_average_pressure(field, Tag.NODAL_PLANE)
    if p_np == 0:
        return math.inf
    return 20.0 * math.log10(abs(p_port / p_np))


def tl_at(geom: FilterGeometry, air: AirProperties, mic: MicrophoneModel | None,
          cfg: SolveConfig, frequency: float, mesh: Mesh | None = None) -> float:
    """Simulated TL (dB) at one frequency; ``+inf`` when the nodal-plane average vanishes."""
    if mesh is None:
        mesh = filter_mesh(geom, air, cfg, frequency)
    field = solve_field(assemble_system(mesh, air, mic, frequency, cfg))
    return tl_from_field(field)


def _point(mesh, air, mic, cfg, f):
    try:
        return tl_from_field(solve_field(assemble_system(mesh, air, mic, f, cfg))), ""
    except SolverError as first:
        f2 = f * (1.0 + PERTURBATION)
        try:
            value = tl_from_field(solve_field(assemble_system(mesh, air, mic, f2, cfg)))
        except SolverError as second:
            return math.nan, f"{second}"
        return value, f"perturbed to {f2:.12g} Hz after: {first}"


def tl_spectrum(geom: FilterGeometry, air: AirProperties, mic: MicrophoneModel | None,
                cfg: SolveConfig, freqs, jobs: int = 1, on_error: str = "raise",
                mesh: Mesh | None = None) -> TLCurve:
    """
    TL at each frequency of a strictly increasing list against one mesh
    resolved for the highest frequency.

    Points whose factorization fails are retried once with the frequency
    nudged by 1e-9 relative; such points are flagged in ``errors``. With
    ``on_error="raise"`` an unrecoverable point raises SolverError, with
    ``"record"`` it becomes NaN and the sweep continues.
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 1 or len(freqs) == 0 or np.any(np.diff(freqs) <= 0):
        raise ConfigurationError("frequencies must be a non-empty strictly increasing list")
    if mesh is None:
        mesh = filter_mesh(geom, air, cfg, float(freqs[-1]) * (1.0 + PERTURBATION))
    _mesh_operators(mesh)

    def run(f):
        return _point(mesh, air, mic, cfg, float(f))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, freqs))
    else:
        results = [run(f) for f in freqs]
    tl = np.array([r[0] for r in results])
    errors = [r[1] for r in results]
    bad = [(f, e) for f, (v, e) in zip(freqs, results) if math.isnan(v)]
    if bad and on_error == "raise":
        f, e = bad[0]
        raise SolverError(f"sweep point {f:g} Hz failed: {e}")
    return TLCurve(freqs, tl, Provenance.SIM_FEM, errors=errors, metadata={
        "tl_definition": TL_DEFINITION,
        "loss_mode": cfg.loss_mode.value,
        "termination": cfg.nodal_plane_termination.value,
        "elements_per_wavelength": cfg.elements_per_wavelength,
        "mesh_nodes": mesh.n_nodes,
        "flagged": [float(f) for f, e in zip(freqs, errors) if e],
    })
