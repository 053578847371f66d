"""Exception hierarchy.

Domain errors are caller mistakes (bad geometry, bad config, out-of-range
parameters); numerical errors are failures of a computation on valid input.
The CLI maps the two families to exit codes 1 and 2.
"""


class DomainError(ValueError):
    pass


class ConfigError(DomainError):
    pass


class NumericalError(RuntimeError):
    pass


class GrazingError(NumericalError):
    """A collision with ``cos(phi)`` below the grazing threshold."""

    def __init__(self, message, *, bounce=None, record=None):
        super().__init__(message if bounce is None else f"{message} (bounce {bounce})")
        self.bounce = bounce
        self.record = record


class EscapeError(NumericalError):
    """The trajectory left the scene before the requested number of bounces."""

    def __init__(self, message, *, bounce=None):
        super().__init__(message if bounce is None else f"{message} (bounce {bounce})")
        self.bounce = bounce


class SolverError(NumericalError):
    def __init__(self, message, *, residual=None):
        super().__init__(message)
        self.residual = residual


class OracleError(NumericalError):
    def __init__(self, message, *, bounce=None):
        super().__init__(message if bounce is None else f"{message} (bounce {bounce})")
        self.bounce = bounce
