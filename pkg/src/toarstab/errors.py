"""Exception and warning types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible shapes."""


class RankMismatchError(ValueError):
    """Two subspaces being compared have different dimensions."""


class BreakdownError(RuntimeError):
    """An iteration was asked to continue past a hard breakdown."""


class AuditError(RuntimeError):
    """A stability-audit hypothesis or self-check failed."""


class MatrixMarketError(ValueError):
    """A Matrix Market file could not be parsed."""


class RankDeficiencyWarning(UserWarning):
    """A pseudoinverse dropped singular values below the cutoff."""
