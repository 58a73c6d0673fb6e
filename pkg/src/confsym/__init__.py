"""Numerical verification of conformally symplectic dynamics."""
from . import actions, geometry, manifolds, rates, scattering, topology
from .config import FORMAT_VERSION, RunConfig
from .dynamics import MapSystem, NHIMModel, iterate, registry_get, registry_names
from .errors import (ArgumentError, ConfigurationError, ConfsymError, ContractViolation, ConvergenceError,
                     DivergenceError, DomainError, NoIntersectionError, SchemaError, TangencyError, TwistError)

__version__ = "0.1.0"

__all__ = [
    "actions", "geometry", "manifolds", "rates", "scattering", "topology",
    "FORMAT_VERSION", "RunConfig", "MapSystem", "NHIMModel", "iterate", "registry_get", "registry_names",
    "ArgumentError", "ConfigurationError", "ConfsymError", "ContractViolation", "ConvergenceError",
    "DivergenceError", "DomainError", "NoIntersectionError", "SchemaError", "TangencyError", "TwistError",
]
