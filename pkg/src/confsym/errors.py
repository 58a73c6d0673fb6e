"""Exception hierarchy shared by all modules."""


class ConfsymError(Exception):
    """Base class for library errors."""


class ArgumentError(ConfsymError, ValueError):
    """Invalid argument or precondition violation."""


class SchemaError(ConfsymError):
    """Configuration file or command line does not match the schema."""


class ContractViolation(ConfsymError):
    """A numerical contract (tolerance, rate bound, certificate) failed."""


class DivergenceError(ContractViolation):
    """An orbit left the representable range."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConvergenceError(ContractViolation):
    """An iterative procedure did not converge."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class NoIntersectionError(ConvergenceError):
    """Newton search for a homoclinic point failed."""


class TangencyError(ContractViolation):
    """Transversality certificate below the configured floor."""


class DomainError(ContractViolation):
    """A query point lies outside the domain of a computed object."""


class NumericalDifferentiationError(ConfsymError):
    """Finite-difference evaluation failed at a point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConstructionError(ConfsymError, ValueError):
    """A requested object cannot be built from the given data."""


class TwistError(ConfsymError):
    """The map fails the twist condition needed for a generating function."""


class ConfigurationError(ConfsymError):
    """Inconsistent geometric configuration, such as a gauge tube meeting a channel."""
