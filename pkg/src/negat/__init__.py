"""Noisy random-circuit density-matrix simulator and negativity scaling analysis."""

__version__ = "0.1.0"

from .qstate import DensityMatrix, init_product_state, diag_probabilities, state_diagnostics
from .negativity import Bipartition, negativity_measures, partial_transpose
from .circuit import CircuitSpec, layer_pairs, run_circuit

__all__ = [
    "DensityMatrix",
    "init_product_state",
    "diag_probabilities",
    "state_diagnostics",
    "Bipartition",
    "negativity_measures",
    "partial_transpose",
    "CircuitSpec",
    "layer_pairs",
    "run_circuit",
]
