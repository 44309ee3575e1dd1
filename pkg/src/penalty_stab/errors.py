"""Exception types shared across the package."""


class PenaltyStabError(Exception):
    """Base class for all errors raised by this package."""


class ParameterDomainError(PenaltyStabError, ValueError):
    """A model coefficient is outside its admissible domain (e.g. nu <= 0)."""


class AdmissibilityError(PenaltyStabError, ValueError):
    """Parameters admit no positive decay rate, or a gain bound is violated."""


class MeshError(PenaltyStabError, ValueError):
    """Invalid partition, mismatched mesh sizes, or non-nested refinement."""


class SingularCoreError(PenaltyStabError, ArithmeticError):
    """The tridiagonal core of a structured solve is singular (zero pivot)."""


class SingularUpdateError(PenaltyStabError, ArithmeticError):
    """The rank-one correction of a structured solve is singular."""


class AnalysisError(PenaltyStabError, ValueError):
    """Post-processing failed (too few samples, incompatible inputs)."""


class ConfigError(PenaltyStabError, ValueError):
    """An experiment configuration failed validation."""
