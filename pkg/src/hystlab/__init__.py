"""Relay hysteresis, rattling on lattices and transverse free boundaries."""

__version__ = "0.1.0"

from .coeff import RattlingCoefficient, integral_If, solve_a, verify_hypothesis
from .errors import (
    BoundaryContamination,
    HystlabError,
    NumericalError,
    ValidationError,
)
from .green import f_profile, green_asymptotic, green_y, heat_kernel
from .lattice1d import LatticeConfig, SwitchRecord, simulate, superpose_solution
from .lattice2d import render_switch_map, simulate2d
from .relay import RelayParams, Signal, alt_relay_trace, completed_relay_admissible, relay_init, relay_trace
from .slowfast import SlowFastConfig, branch_classify, simulate_slowfast
from .transverse import TransverseProblem, fixed_point_solve

__all__ = [
    "BoundaryContamination", "HystlabError", "LatticeConfig", "NumericalError", "RattlingCoefficient",
    "RelayParams", "Signal", "SlowFastConfig", "SwitchRecord", "TransverseProblem", "ValidationError",
    "alt_relay_trace", "branch_classify", "completed_relay_admissible", "f_profile", "fixed_point_solve",
    "green_asymptotic", "green_y", "heat_kernel", "integral_If", "relay_init", "relay_trace",
    "render_switch_map", "simulate", "simulate2d", "simulate_slowfast", "solve_a", "superpose_solution",
    "verify_hypothesis",
]
