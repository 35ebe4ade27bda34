"""Two-phase Stefan problem with temperature-dependent surface tension: stability analysis and radial dynamics."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DomainError,
    GeometryError,
    MeltingPointError,
    NoEquilibriumError,
    PoleError,
    QuadratureError,
    SchemaError,
    SolverError,
    StefanLabError,
    WellPosednessError,
)
