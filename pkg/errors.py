class FracWaveError(Exception):
    """Base class for every error raised by the solver toolkit."""


class DomainError(FracWaveError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class ConfigurationError(FracWaveError, ValueError):
    """Inconsistent solver inputs or study configuration."""


class NumericalError(FracWaveError, ArithmeticError):
    """Loss of positivity, overflow or a non-converging iteration."""


class AccuracyError(FracWaveError):
    """A quadrature or series could not reach its tolerance."""

    def __init__(self, message, estimate=None, tolerance=None):
        super().__init__(message)
        self.estimate = estimate
        self.tolerance = tolerance


class CertificateError(FracWaveError):
    """The denominator of a contour representation is not certified nonzero."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate
