"""Classical correlation, quantum discord and mutual information of two-qubit
states, with the classical correlation optimized over rank-one POVMs."""

from .correlation import (
    CorrelationResult,
    OptimizerConfig,
    classical_correlation,
    conditional_state,
    monte_carlo,
    mutual_information,
    objective,
    optimize_n2,
    optimize_n3plus,
    quantum_discord_min,
    residual_entropy,
    stationarity_residual,
)
from .paperstate import build_state, mutual_info_closed, sweep
from .povm import PovmElement, RankOnePovm, random_povm, validate, weights_from_directions
from .qmath import QubitState, TwoQubitState, binary_entropy, von_neumann_entropy

__version__ = "0.1.0"
