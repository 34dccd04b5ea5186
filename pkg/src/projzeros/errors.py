"""Exception types shared across the package."""


class ProjZerosError(Exception):
    """Base class for package errors."""


class DomainError(ProjZerosError, ValueError):
    """Argument outside the mathematical domain of a special function."""


class SingularArgument(ProjZerosError, ValueError):
    """Evaluation requested at a singular point (e.g. v = 0 scaling limits)."""


class ChartSingular(ProjZerosError, ValueError):
    """Affine chart is singular (near-zero pivot coordinate) at this point."""


class UnsupportedDimension(ProjZerosError, ValueError):
    """Complex dimension m outside the supported range {1, 2, 3}."""


class UnsupportedGridKind(ProjZerosError, ValueError):
    """Requested quadrature grid kind is not available for this dimension."""


class DegreeTooLarge(ProjZerosError, ValueError):
    """Degree N exceeds the per-dimension stability cap."""


class ConvergenceFailure(ProjZerosError, RuntimeError):
    """Iterative solver failed to reach its stopping criterion."""


class IntegrationUnstable(ProjZerosError, RuntimeError):
    """Radial/angular quadrature refinement disagreed beyond tolerance."""


class QuadratureSuspect(ProjZerosError, RuntimeError):
    """A quadrature-route statistic failed its refinement consistency check."""


class TooFewSamples(ProjZerosError, ValueError):
    """Sample count below the minimum for the requested estimate."""


class SchemaMismatch(ProjZerosError, ValueError):
    """Result files have incompatible schemas and cannot be compared."""
