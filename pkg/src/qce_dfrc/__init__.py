"""Quantized constant-envelope waveform design for dual-function radar-communication.

Exact-penalty ALM with a BSUM inner solver, plus evaluation metrics, a
brute-force oracle for tiny instances and a command-line experiment runner.
"""
from .alm import SolveReport, alm_solve, check_feasibility, homotopy_solve
from .config import AlmParams, ConfigError, HomotopyParams, SystemConfig
from .metrics import (beampattern, beampattern_mse, evaluate_beampattern, safety_margins,
                      sep_bounds, simulate_ser)
from .oracle import BudgetExceeded, EnumerationBudget, exhaustive_solve, projection_oracle
from .problem import Instance, QceSet, RealWaveform, assemble_instance, make_instance

__all__ = [
    "AlmParams", "BudgetExceeded", "ConfigError", "EnumerationBudget", "HomotopyParams",
    "Instance", "QceSet", "RealWaveform", "SolveReport", "SystemConfig", "alm_solve",
    "assemble_instance", "beampattern", "beampattern_mse", "check_feasibility",
    "evaluate_beampattern", "exhaustive_solve", "homotopy_solve", "make_instance",
    "projection_oracle", "safety_margins", "sep_bounds", "simulate_ser",
]
__version__ = "0.1.0"
