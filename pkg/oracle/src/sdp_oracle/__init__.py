"""SDP reference solver for causal rate-distortion of hidden Gauss-Markov sources."""

from .errors import (Infeasible, IoError, OracleError, ParseError,
                     SolverFailure, ValidationError)
from .io import config_hash, emit_result, load_config, read_result
from .solver import SdpInstance, sdp_finite, sdp_stationary, solve_config

__version__ = "0.1.0"
