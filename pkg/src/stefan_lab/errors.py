"""Exception hierarchy shared by all modules."""


class StefanLabError(Exception):
    """Base class for all library errors."""


class DomainError(StefanLabError, ValueError):
    """Argument outside the admissible temperature range or geometry."""


class SchemaError(StefanLabError, ValueError):
    """Malformed model/geometry/config JSON.  ``path`` names the offending key."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class MeltingPointError(StefanLabError):
    """phi has no bracketable simple zero (none, or several) in (0, u_c)."""


class QuadratureError(StefanLabError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class PoleError(StefanLabError, ZeroDivisionError):
    """Equilibrium radius evaluated at a zero of phi."""


class NoEquilibriumError(StefanLabError):
    """sigma/phi <= 0: no sphere of positive radius satisfies Gibbs-Thomson."""


class SolverError(StefanLabError):
    """Linear/nonlinear solver did not converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")


class WellPosednessError(StefanLabError):
    """Run aborted: temperature left (0, u_c) or T_Gamma became (nearly) singular."""


class GeometryError(StefanLabError):
    """Run aborted: interface radius left (0, R_Omega)."""
