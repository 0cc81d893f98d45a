"""puriflow: purity-constrained nonlinear dynamics of coarse-grained
quantum pure states, with open-system validation tools."""

from .core import (DensityMatrix, DistinguishedAlgebra, HermitianOperator,
                   PureState, expectation, g_reduced_state, generalized_purity,
                   hs_distance, invariant_fluctuation, purity_bounds, variance)
from .constrained import (ConstrainedFlowSpec, InconsistentConstraintError,
                          IntegrationError, MultiplierSingularError, Trajectory,
                          constrained_field, integrate_flow, lagrange_multiplier,
                          simplified_field, wca_check)
from .opensystem import (Ensemble, LindbladSpec, integrate_lindblad,
                         lindblad_rhs, qsd_step, run_qsd_ensemble, run_qsd_path,
                         sample_wiener)

__version__ = "0.1.0"

__all__ = [
    "ConstrainedFlowSpec", "DensityMatrix", "DistinguishedAlgebra", "Ensemble",
    "HermitianOperator", "InconsistentConstraintError", "IntegrationError",
    "LindbladSpec", "MultiplierSingularError", "PureState", "Trajectory",
    "constrained_field", "expectation", "g_reduced_state", "generalized_purity",
    "hs_distance", "integrate_flow", "integrate_lindblad", "invariant_fluctuation",
    "lagrange_multiplier", "lindblad_rhs", "purity_bounds", "qsd_step",
    "run_qsd_ensemble", "run_qsd_path", "sample_wiener", "simplified_field",
    "variance", "wca_check",
]
