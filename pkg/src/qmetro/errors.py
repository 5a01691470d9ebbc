"""Exception hierarchy shared by all qmetro modules."""

from __future__ import annotations


class QmetroError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(QmetroError, ValueError):
    pass


class NotHermitian(QmetroError, ValueError):
    pass


class NegativeEigenvalue(QmetroError, ValueError):
    pass


class ConvergenceFailure(QmetroError, RuntimeError):
    """An iterative solver stopped without meeting its criteria.

    ``best`` carries whatever partial result the solver had, if any.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class DegenerateSample(QmetroError, RuntimeError):
    pass


class RangeViolation(QmetroError, ValueError):
    pass


class BlochNormViolation(QmetroError, ValueError):
    pass


class SpectrumError(QmetroError, ValueError):
    pass


class NotConverged(ConvergenceFailure):
    pass


class NonUnitNormGenerator(QmetroError, ValueError):
    pass


class DegenerateData(QmetroError, ValueError):
    pass


class SingularDesign(QmetroError, ValueError):
    pass


class ResumeConflict(QmetroError, RuntimeError):
    """An output directory holds results from a different configuration."""


class PipelineFailure(QmetroError, RuntimeError):
    pass
