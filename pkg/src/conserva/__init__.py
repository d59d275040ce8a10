"""Finite difference schemes that preserve local conservation laws.

Schemes for the Korteweg-de Vries equation (EC/MC families, multisymplectic
and narrow box) and for the nonlinear heat equation u_t = (u u_x)_x
(CS(alpha, beta) and the ML/IM baseline), a frozen-Jacobian Newton marcher
with cyclic banded solves, error diagnostics, parameter sweeps and a
benchmark harness.
"""

from .errors import (ConfigError, DegenerateParametersError, DivisionGuardError, DomainError,
                     InsufficientHistoryError, MarchFailure, NotApplicableError,
                     OutOfRangeError, PreconditionError, SingularMatrixError,
                     UnsupportedWordError)
from .grid import Boundary, GridSpec, OperatorWord, apply_spatial, apply_temporal, telescoping_sum
from .heat import (BoundaryData, HeatFamily, HeatScheme, explicit_cs00_step, heat_exact,
                   heat_jacobian, heat_laws, heat_problem, heat_residual)
from .kdv import Exact, Family, KdvScheme, kdv_exact, kdv_jacobian, kdv_laws, kdv_residual
from .solver import (BandedMatrix, FieldHistory, NewtonConfig, Refreeze, banded_solve,
                     march_explicit, newton_march)
from .diagnostics import (ErrorReport, conservation_error_nonpreserved,
                          conservation_error_preserved, hamiltonian_series, phase_error,
                          solution_error)
from .calculus import (StencilFunction, discrete_euler, divergence_identity_check,
                       theorem1_check)
from .experiments import make_problem, run_case
from .sweep import Objective, SweepSpec, optimize

__version__ = "0.1.0"
