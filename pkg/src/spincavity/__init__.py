"""Mn12-type molecular magnet in a swept field coupled to a microwave cavity.

Spin Hamiltonian and avoided crossings, two-level reduction, Landau-Zener
staircases, cavity Bloch and maser dynamics, and the derived observables.
"""

__version__ = "0.1.0"

from .crossings import (CrossingRecord, crossing_catalog, crossing_field_h0, level_diagram,
                        scan_avoided_crossing)
from .dynamics import (DynamicsConfig, PhysicalContext, Trajectory, derive_dimensionless,
                       integrate_bloch_cavity, integrate_rate_equations, pendulum_solution)
from .errors import NumericalError, SpinCavityError, ValidationError
from .hysteresis import (FitConfig, HysteresisResult, fit_anisotropy_params, lzs_probability,
                         simulate_hysteresis, thermal_populations)
from .linalg import EigenDecomposition, eigh
from .observables import PeakReport, T0ScanRow, dM_dB0_curve, emitted_energy, t0_scan
from .reduction import EffectiveTwoLevel, effective_coupling, effective_two_level, vanvleck_unitary
from .spin_model import SpinOperators, SpinSystemParams, build_hamiltonian, build_spin_operators

__all__ = [
    "CrossingRecord", "DynamicsConfig", "EffectiveTwoLevel", "EigenDecomposition", "FitConfig",
    "HysteresisResult", "NumericalError", "PeakReport", "PhysicalContext", "SpinCavityError",
    "SpinOperators", "SpinSystemParams", "T0ScanRow", "Trajectory", "ValidationError",
    "build_hamiltonian", "build_spin_operators", "crossing_catalog", "crossing_field_h0",
    "dM_dB0_curve", "derive_dimensionless", "effective_coupling", "effective_two_level", "eigh",
    "emitted_energy", "fit_anisotropy_params", "integrate_bloch_cavity", "integrate_rate_equations",
    "level_diagram", "lzs_probability", "pendulum_solution", "scan_avoided_crossing",
    "simulate_hysteresis", "t0_scan", "thermal_populations", "vanvleck_unitary",
]
