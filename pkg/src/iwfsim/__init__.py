"""Iterative water-filling for multi-user, multi-carrier power control games."""

from .model import (Scenario, NormalizedView, normalize, rate, rates, sinr,
                    symmetric_two_user, validate_scenario)
from .waterfill import Floor, WaterfillResult, best_response, compose_floor, solve_water_level
from .engine import RunTrace, ScheduleSpec, StopSpec, Verdict, run
from .analysis import (AnalysisReport, analyze, build_hmax, diagonal_dominance,
                       empirical_beta, numerical_jacobian, spectral_radius)

__version__ = "0.1.0"
