"""Design and analysis of half-wavelength spurious-sound filters for ultrasonic microphones."""
from .acoustics import (AirProperties, MicrophoneModel, air_properties, boundary_layer_thicknesses,
                        center_hole_volume, half_wavelength, mic_impedance, wall_admittance)
from .bessel import bessel
from .curves import Provenance, TLCurve, read_curve, write_curve
from .errors import (ConfigurationError, DomainError, GeometryError, MeasurementError, MeshError,
                     ObjectiveError, ResolutionError, SolverError, SpurFilterError)
from .fem import LossMode, SolveConfig, Termination, assemble_system, solve_field, tl_at, tl_spectrum
from .geometry import FilterGeometry, Tag, build_profile, generate_mesh, validate_geometry
from .measurements import Spectrum, aggregate_tl, load_spectrum, tl_from_pair, write_spectrum
from .optimize import DesignResult, Engine, design_filter, maximize_scalar
from .stl import StlParams, export_stl
from .tmm import DuctLoss, TwoPort, axial_segment, cascade, radial_segment, tl_tmm

__all__ = [
    "AirProperties", "MicrophoneModel", "air_properties", "boundary_layer_thicknesses",
    "center_hole_volume", "half_wavelength", "mic_impedance", "wall_admittance",
    "bessel", "Provenance", "TLCurve", "read_curve", "write_curve",
    "ConfigurationError", "DomainError", "GeometryError", "MeasurementError", "MeshError",
    "ObjectiveError", "ResolutionError", "SolverError", "SpurFilterError",
    "LossMode", "SolveConfig", "Termination", "assemble_system", "solve_field", "tl_at", "tl_spectrum",
    "FilterGeometry", "Tag", "build_profile", "generate_mesh", "validate_geometry",
    "Spectrum", "aggregate_tl", "load_spectrum", "tl_from_pair", "write_spectrum",
    "DesignResult", "Engine", "design_filter", "maximize_scalar",
    "StlParams", "export_stl",
    "DuctLoss", "TwoPort", "axial_segment", "cascade", "radial_segment", "tl_tmm",
]
