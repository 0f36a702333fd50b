"""Rate-distortion solvers for hidden Gauss-Markov sources observed through noise.

The package computes the causal (nonanticipative) rate-distortion tradeoff of
a hidden linear state observed through a noisy linear map, under mean squared
error distortion: forward filter statistics, steady-state Riccati limits,
finite-horizon and stationary reverse waterfilling, the optimal linear
test-channel realization, and a seeded Monte-Carlo validation harness.
"""

from .channel import (SimulationReport, TestChannel, build_test_channel,
                      reduce_rank, reduced_rate, simulate,
                      stationary_test_channel)
from .config import RunConfig, config_hash, parse_config, serialize_config
from .errors import (BracketFailure, BudgetInfeasible, DimensionMismatch,
                     HashMismatch, InfeasibleStage, MissingRows, NrdfError,
                     NoConvergence, NotDetectable, NotStabilizable,
                     ParseError, ScalingNotPSD, SingularA,
                     SingularInnovation, SingularPosterior,
                     StructureNotSatisfied, ValidationError, ZeroMatrix)
from .finite import (FiniteHorizonProblem, WaterfillSolution,
                     pointwise_closed_form, reverse_waterfill_finite,
                     waterfill_stage)
from .kalman import KfStep, d_min_finite, kf_forward, scalar_filter_variances
from .model import SystemModel, TimeVaryingSystemModel
from .riccati import (SteadyState, check_detectable, check_stabilizable,
                      dare_scalar_closed_form, dare_solve)
from .stationary import (EigenWaterfill, StationaryProblem,
                         StationaryTestChannelSpec, StructuralClass,
                         StructureTag, classify_structure, kh_bound,
                         reverse_waterfill_stationary, scalar_closed_form,
                         stationary_rate)

__version__ = "0.1.0"
