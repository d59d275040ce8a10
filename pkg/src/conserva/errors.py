"""Exception types raised by conserva."""

import numpy as np


class OutOfRangeError(IndexError):
    """A stencil reached outside a Dirichlet grid or outside the stored time levels."""


class UnsupportedWordError(ValueError):
    """An operator word needs more time levels than are available."""


class InsufficientHistoryError(ValueError):
    """A stencil window does not fit in the supplied field history."""


class PreconditionError(ValueError):
    pass


class DegenerateParametersError(ValueError):
    pass


class DomainError(ValueError):
    pass


class NotApplicableError(ValueError):
    """The requested quantity is not defined for this scheme."""


class DivisionGuardError(ZeroDivisionError):
    pass


class ConfigError(ValueError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class MarchFailure(RuntimeError):
    """Newton iteration failed to converge during a time march."""

    def __init__(self, message, step, residual_norm):
        super().__init__(f"{message} (step {step}, residual {residual_norm:.3e})")
        self.step = step
        self.residual_norm = residual_norm
