"""Rescaled elastic flow of closed plane curves: geometry, spectral gap, simulation and checks."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    ClosedCurve,
    GeometricData,
    GeometryError,
    compute_geometry,
    ellipse,
    omega_circle,
    parse_curve_spec,
    perturbed_omega_circle,
    random_convex_curve,
    turning_number,
)
from .support import SupportDecomposition, distance_to_omega_circle, support_decomposition  # noqa: E402
from .spectral_theory import SpectralReport, lattice_gap, p_poly, predicted_rate  # noqa: E402
from .flow import FlowConfig, FlowError, FlowState, TimeSeries, run, step  # noqa: E402
from .experiments import fit_decay_rate  # noqa: E402

__all__ = [
    "ClosedCurve", "GeometricData", "GeometryError", "compute_geometry", "ellipse", "omega_circle",
    "parse_curve_spec", "perturbed_omega_circle", "random_convex_curve", "turning_number",
    "SupportDecomposition", "distance_to_omega_circle", "support_decomposition",
    "SpectralReport", "lattice_gap", "p_poly", "predicted_rate",
    "FlowConfig", "FlowError", "FlowState", "TimeSeries", "run", "step", "fit_decay_rate",
]
