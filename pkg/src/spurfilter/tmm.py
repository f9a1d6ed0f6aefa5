"""
Two-port transfer-matrix model of the filter.

A state is ``(p, U)``: pressure and volume velocity along the direction of
propagation. ``T`` maps the output state to the input state, so a cascade
is the ordered product of its elements from input to output.

The default topology treats the expansion as a side branch hung off the
middle of the bottom duct section::

    PORT -- axial(a0, l0) -- axial(a0, l1/2) -+- axial(a0, l1/2) -- load
                                              |
                                  radial(a0 -> a1, height l1), rigid rim

The alternative ``RADIAL_LOAD`` topology feeds a radial line from an
equivalent radius ``a0/2`` and puts the load on the rim.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .acoustics import AirProperties, MicrophoneModel, mic_impedance
from .bessel import bessel, j1_over_j0
from .curves import Provenance, TLCurve
from .errors import ConfigurationError, DomainError
from .geometry import FilterGeometry, validate_geometry

TL_DEFINITION = "TL_tmm = 20*log10(|p_in / p_load|)"


class DuctLoss(str, Enum):
    NONE = "NONE"
    ZWIKKER_KOSTEN = "ZWIKKER_KOSTEN"


class Topology(str, Enum):
    FOLDED = "FOLDED"
    RADIAL_LOAD = "RADIAL_LOAD"


@dataclass(frozen=True, eq=False)
class TwoPort:
    """2x2 complex transfer matrix from output ``(p, U)`` to input ``(p, U)``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("a two-port matrix must be 2x2")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "TwoPort":
        return cls(np.eye(2))

    @property
    def det(self) -> complex:
        m = self.matrix
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def __matmul__(self, other: "TwoPort") -> "TwoPort":
        return TwoPort(self.matrix @ other.matrix)

    def __getitem__(self, idx):
        return self.matrix[idx]

    def input_pressure_ratio(self, load_impedance=None) -> complex:
        """``p_in / p_out`` when the output is loaded by ``load_impedance`` (``None``: rigid)."""
        m = self.matrix
        if load_impedance is None:
            return complex(m[0, 0])
        return complex(m[0, 0] + m[0, 1] / load_impedance)


def _check_positive(**values):
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be positive, got {value!r}")


def zwikker_kosten(radius: float, frequency: float, air: AirProperties):
    """
    Propagation constant and characteristic acoustic impedance of a narrow
    circular tube.

    Returns ``(gamma, z_c)`` with ``gamma`` in rad/m (positive real part)
    and ``z_c`` in Pa s/m^3. Effective density and compressibility use
    ``F(xi) = 2 J1(xi) / (xi J0(xi))`` at ``xi = a sqrt(-j w rho / mu)``
    for viscous and ``xi sqrt(Pr)`` for thermal effects.
    """
    omega = 2.0 * math.pi * frequency
    rho, c, mu = air.density, air.sound_speed, air.dynamic_viscosity
    xi_v = radius * np.sqrt(-1j * omega * rho / mu)
    xi_t = xi_v * math.sqrt(air.prandtl)

    def shape(xi):
        return 2.0 * j1_over_j0(xi) / xi

    rho_eff = rho / (1.0 - shape(xi_v))
    comp_eff = (1.0 + (air.heat_capacity_ratio - 1.0) * shape(xi_t)) / (rho * c * c)
    gamma = omega * np.sqrt(rho_eff * comp_eff)
    if gamma.real < 0:
        gamma = -gamma
    z_c = np.sqrt(rho_eff / comp_eff) / (math.pi * radius * radius)
    return complex(gamma), complex(z_c)


def axial_segment(radius: float, length: float, frequency: float, air: AirProperties,
                  loss: DuctLoss = DuctLoss.NONE) -> TwoPort:
    """Plane-wave duct of the given radius and length (``length = 0`` is the identity)."""
    _check_positive(radius=radius, frequency=frequency)
    if not (length >= 0 and math.isfinite(length)):
        raise DomainError(f"length must be non-negative, got {length!r}")
    loss = DuctLoss(loss)
    if loss is DuctLoss.NONE:
        gamma = 2.0 * math.pi * frequency / air.sound_speed
        z_c = air.impedance / (math.pi * radius * radius)
    else:
        gamma, z_c = zwikker_kosten(radius, frequency, air)
    cs, sn = np.cos(gamma * length), np.sin(gamma * length)
    return TwoPort(np.array([[cs, 1j * z_c * sn], [1j * sn / z_c, cs]]))


def radial_segment(r_in: float, r_out: float, height: float, frequency: float,
                   air: AirProperties) -> TwoPort:
    """
    Lossless radial line between two coaxial cylinders in a disk of
    height ``height``.

    With ``p = A J0(kr) + B Y0(kr)`` and ``U = g(r) (A J1 + B Y1)``,
    ``g = 2 pi r h k / (j w rho)``, the basis matrix ``F(r)`` has the
    constant determinant ``-4h/(j w rho)`` from the Wronskian, so
    ``T = F(r_in) F(r_out)^-1`` is written in closed form.
    """
    _check_positive(height=height, frequency=frequency)
    if not r_in > 0:
        raise DomainError("radial line needs r_in > 0; feed it from a duct stub")
    if not r_out >= r_in:
        raise DomainError(f"r_out={r_out!r} must be >= r_in={r_in!r}")
    if r_out == r_in:
        return TwoPort.identity()
    omega = 2.0 * math.pi * frequency
    k = omega / air.sound_speed
    jwr = 1j * omega * air.density
    xi, xo = k * r_in, k * r_out
    j0i, j1i, y0i, y1i = (bessel(n, kind, xi) for n, kind in ((0, "J"), (1, "J"), (0, "Y"), (1, "Y")))
    j0o, j1o, y0o, y1o = (bessel(n, kind, xo) for n, kind in ((0, "J"), (1, "J"), (0, "Y"), (1, "Y")))
    gi = 2.0 * math.pi * r_in * height * k / jwr
    go = 2.0 * math.pi * r_out * height * k / jwr
    d = -4.0 * height / jwr
    t = np.array([
        [go * (j0i * y1o - y0i * j1o), y0i * j0o - j0i * y0o],
        [gi * go * (j1i * y1o - y1i * j1o), gi * (y1i * j0o - j1i * y0o)],
    ]) / d
    # exact zeros for the parts that vanish without losses
    t = np.array([[t[0, 0].real, 1j * t[0, 1].imag], [1j * t[1, 0].imag, t[1, 1].real]])
    return TwoPort(t)


def shunt(admittance: complex) -> TwoPort:
    """Side branch of acoustic admittance ``admittance`` (m^3/(Pa s)) at one plane."""
    return TwoPort(np.array([[1.0, 0.0], [admittance, 1.0]]))


def closed_branch_admittance(branch: TwoPort) -> complex:
    """Input admittance of a two-port whose far end is rigid."""
    return complex(branch[1, 0] / branch[0, 0])


def cascade(ports) -> TwoPort:
    """Ordered product of two-ports from input to output."""
    ports = list(ports)
    if not ports:
        raise ValueError("cascade needs at least one two-port")
    m = ports[0].matrix
    for p in ports[1:]:
        m = m @ p.matrix
    return TwoPort(m)


def filter_two_port(geom: FilterGeometry, air: AirProperties, frequency: float,
                    loss: DuctLoss = DuctLoss.NONE, topology: Topology = Topology.FOLDED) -> TwoPort:
    """Two-port from the port plane to the load plane."""
    validate_geometry(geom)
    a0, l0, a1, l1 = geom.a0, geom.l0, geom.a1, geom.l1
    topology = Topology(topology)
    if topology is Topology.RADIAL_LOAD:
        return cascade([
            axial_segment(a0, l0, frequency, air, loss),
            radial_segment(a0 / 2.0, a1, l1, frequency, air),
        ])
    if a1 == a0:
        return axial_segment(a0, l0 + l1, frequency, air, loss)
    half = axial_segment(a0, l1 / 2.0, frequency, air, loss)
    branch = radial_segment(a0, a1, l1, frequency, air)
    return cascade([
        axial_segment(a0, l0, frequency, air, loss),
        half,
        shunt(closed_branch_admittance(branch)),
        half,
    ])


def tl_tmm(geom: FilterGeometry, air: AirProperties, mic: MicrophoneModel | None,
           loss: DuctLoss, freqs, topology: Topology = Topology.FOLDED) -> TLCurve:
    """
    TL spectrum, ``20 log10 |p_in / p_load|``, with the load given by the
    microphone impedance (rigid when ``mic`` is ``None``).

    Frequencies where the expansion diameter exceeds half a wavelength are
    outside the plane-wave regime; they are listed under
    ``metadata["plane_wave_advisory"]`` and reported with a warning.
    """
    validate_geometry(geom)
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 1 or len(freqs) == 0 or np.any(np.diff(freqs) <= 0) or np.any(freqs <= 0):
        raise ConfigurationError("frequencies must be a non-empty, positive, strictly increasing list")
    loss, topology = DuctLoss(loss), Topology(topology)
    tl = np.array([tl_tmm_at(geom, air, mic, float(f), loss, topology) for f in freqs])
    wavelength = air.sound_speed / freqs
    advisory = [float(f) for f, lam in zip(freqs, wavelength) if 2.0 * geom.a1 > 0.5 * lam]
    if advisory:
        warnings.warn(
            f"plane-wave model used above {advisory[0]:g} Hz where 2*a1 exceeds half a wavelength",
            stacklevel=2,
        )
    return TLCurve(freqs, tl, Provenance.SIM_TMM, metadata={
        "tl_definition": TL_DEFINITION,
        "loss": loss.value,
        "topology": topology.value,
        "junction": "radial line fed at a0/2" if topology is Topology.RADIAL_LOAD
        else "closed radial side branch at mid-height of the expansion",
        "termination": "RIGID" if mic is None else "MIC_IMPEDANCE",
        "plane_wave_advisory": advisory,
    })


def tl_tmm_at(geom: FilterGeometry, air: AirProperties, mic: MicrophoneModel | None,
              frequency: float, loss: DuctLoss = DuctLoss.NONE,
              topology: Topology = Topology.FOLDED) -> float:
    """Single-frequency TL of the transfer-matrix model, without advisories."""
    t = filter_two_port(geom, air, frequency, loss, topology)
    z = None if mic is None else mic_impedance(mic, frequency)
    ratio = t.input_pressure_ratio(z)
    return -math.inf if ratio == 0 else 20.0 * math.log10(abs(ratio))
