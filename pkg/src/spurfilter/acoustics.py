"""
Fluid properties, wavelength and boundary-layer helpers, and the lumped
microphone impedance used as the nodal-plane termination.

Time convention throughout the package is ``exp(+j omega t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

#: Reference static pressure (Pa).
P_ATM = 101_325.0
#: Specific gas constant of dry air (J/(kg K)).
R_AIR = 287.058
#: Ratio of specific heats, held constant.
GAMMA_AIR = 1.4
#: Prandtl number, held constant.
PRANDTL_AIR = 0.71
#: Sutherland's law constants for air.
SUTHERLAND_MU0 = 1.716e-5
SUTHERLAND_T0 = 273.15
SUTHERLAND_S = 110.4

_T_RANGE = (-20.0, 60.0)


@dataclass(frozen=True)
class AirProperties:
    """Thermodynamic and transport constants of air at one temperature."""

    temperature: float
    density: float
    sound_speed: float
    dynamic_viscosity: float
    heat_capacity_ratio: float = GAMMA_AIR
    prandtl: float = PRANDTL_AIR

    def __post_init__(self):
        for name in ("density", "sound_speed", "dynamic_viscosity", "prandtl"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.heat_capacity_ratio >= 1.0:
            raise DomainError("heat_capacity_ratio must be >= 1")

    @property
    def impedance(self) -> float:
        """Characteristic specific impedance rho*c (Pa s/m)."""
        return self.density * self.sound_speed


def air_properties(temperature: float = 20.0) -> AirProperties:
    """
    Air properties at ``temperature`` (degrees Celsius) and 101.325 kPa.

    Sound speed follows ``331.3*sqrt(1 + T/273.15)``, density the ideal-gas
    law for dry air, viscosity Sutherland's law. Humidity is ignored.
    """
    lo, hi = _T_RANGE
    if not lo <= temperature <= hi:
        raise DomainError(f"temperature {temperature} degC outside [{lo}, {hi}]")
    t_k = temperature + 273.15
    c = 331.3 * math.sqrt(1.0 + temperature / 273.15)
    rho = P_ATM / (R_AIR * t_k)
    mu = SUTHERLAND_MU0 * (t_k / SUTHERLAND_T0) ** 1.5 * (SUTHERLAND_T0 + SUTHERLAND_S) / (t_k + SUTHERLAND_S)
    return AirProperties(temperature=temperature, density=rho, sound_speed=c, dynamic_viscosity=mu)


def half_wavelength(frequency: float, c: float = 343.0) -> float:
    """
    Half the acoustic wavelength, ``c / (2 f)``.

    The same expression gives the Bragg lattice constant of a phononic
    crystal with its first band gap at ``frequency``.
    """
    if not (frequency > 0 and c > 0):
        raise DomainError("frequency and sound speed must be positive")
    return c / (2.0 * frequency)


def boundary_layer_thicknesses(frequency, air: AirProperties):
    """
    Viscous and thermal boundary-layer thicknesses ``(delta_v, delta_t)`` in m.

    ``delta_v = sqrt(2 mu / (rho omega))`` and ``delta_t = delta_v / sqrt(Pr)``.
    Accepts scalars or arrays.
    """
    f = np.asarray(frequency, dtype=float)
    if np.any(f <= 0):
        raise DomainError("frequency must be positive")
    omega = 2.0 * np.pi * f
    dv = np.sqrt(2.0 * air.dynamic_viscosity / (air.density * omega))
    dt = dv / np.sqrt(air.prandtl)
    if dv.ndim == 0:
        return float(dv), float(dt)
    return dv, dt


def wall_admittance(frequency, air: AirProperties):
    """
    Normalized specific admittance ``rho*c * u_n / p`` of a wall with
    thermoviscous boundary layers, grazing-incidence approximation.

    ``y = (1 + j)/2 * k * (delta_v + (gamma - 1) delta_t)``. With the
    ``exp(+j omega t)`` convention the positive imaginary part slows the
    wave and the positive real part absorbs.
    """
    dv, dt = boundary_layer_thicknesses(frequency, air)
    k = 2.0 * np.pi * np.asarray(frequency, dtype=float) / air.sound_speed
    y = 0.5 * (1.0 + 1.0j) * k * (dv + (air.heat_capacity_ratio - 1.0) * dt)
    return complex(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class MicrophoneModel:
    """
    Lumped diaphragm model of a pressure microphone.

    Attributes
    ----------
    c_ds : float
        Acoustic compliance of the diaphragm system (m^3/Pa).
    l_ds : float
        Acoustic mass (kg/m^4).
    r_ds : float
        Acoustic damping resistance (Pa s/m^3).
    v_cal : float
        Calibrator load volume (m^3).
    v_lf : float
        Low-frequency volume (m^3).
    d_ch : float
        Protection-grid center-hole diameter (m).
    t_pg : float
        Protection-grid thickness (m).
    """

    c_ds: float
    l_ds: float
    r_ds: float
    v_cal: float
    v_lf: float
    d_ch: float
    t_pg: float

    def __post_init__(self):
        for name in ("c_ds", "l_ds", "r_ds", "v_cal", "v_lf", "d_ch", "t_pg"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"microphone field {name} must be positive and finite, got {value!r}")
        if self.v_cal <= center_hole_volume(self):
            raise ConfigurationError(
                f"v_cal={self.v_cal:g} m^3 must exceed the center-hole volume "
                f"{center_hole_volume(self):g} m^3"
            )

    @property
    def resonance_frequency(self) -> float:
        """Diaphragm series resonance ``1/(2 pi sqrt(L C))`` in Hz."""
        return 1.0 / (2.0 * math.pi * math.sqrt(self.l_ds * self.c_ds))


def center_hole_volume(mic) -> float:
    """Volume of the protection-grid center hole, ``pi d^2/4 * t``."""
    return math.pi * mic.d_ch**2 / 4.0 * mic.t_pg


def mic_impedance(mic: MicrophoneModel, frequency):
    """
    Acoustic impedance (Pa s/m^3) presented by the microphone at the
    nodal plane::

        Z = V_lf / (V_cal - V_ch) * (j w L_ds + R_ds + 1/(j w C_ds))
    """
    f = np.asarray(frequency, dtype=float)
    if np.any(f <= 0):
        raise DomainError("frequency must be positive")
    denom = mic.v_cal - center_hole_volume(mic)
    if denom <= 0:
        raise ConfigurationError("calibrator load volume must exceed the center-hole volume")
    w = 2.0 * np.pi * f
    z = mic.v_lf / denom * (1j * w * mic.l_ds + mic.r_ds + 1.0 / (1j * w * mic.c_ds))
    return complex(z) if np.ndim(z) == 0 else z
