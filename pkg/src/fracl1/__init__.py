"""L1 schemes for time-fractional parabolic problems on graded temporal meshes.

The package provides the L1 discretization of the Caputo derivative,
finite-difference and lumped-mass P1 finite-element spatial operators, a
time stepper coupling the two, numerical stability certificates and a
convergence-study harness.
"""

from fracl1.caputo_l1 import L1Operator, caputo_power_oracle, rl_integral
from fracl1.exceptions import (
    AdmissibilityError,
    ConfigError,
    DomainError,
    Fracl1Error,
    IndexRangeError,
    InvalidParameterError,
    MeshError,
    SolverError,
)
from fracl1.special_fn import gamma, pow_diff
from fracl1.temporal_mesh import TemporalMesh, graded, quasi_graded, uniform

__version__ = "0.1.0"

__all__ = [
    "L1Operator",
    "TemporalMesh",
    "graded",
    "uniform",
    "quasi_graded",
    "gamma",
    "pow_diff",
    "caputo_power_oracle",
    "rl_integral",
    "Fracl1Error",
    "DomainError",
    "InvalidParameterError",
    "IndexRangeError",
    "AdmissibilityError",
    "MeshError",
    "SolverError",
    "ConfigError",
]
