"""Exception hierarchy shared by every latentfire module."""


class LatentFireError(Exception):
    """Base class for domain errors raised by latentfire."""


class DimensionError(LatentFireError, ValueError):
    """Shapes, modes or ranks are inconsistent."""


class DomainError(LatentFireError, ValueError):
    """Input values fall outside the domain of an operation (e.g. negative entries)."""


class UndefinedInputError(DomainError):
    """The operation is undefined for this input (e.g. a zero-norm reference)."""


class DegenerateFactorError(DomainError):
    """A factor column or feature is identically zero."""


class ParameterError(LatentFireError, ValueError):
    """A configuration value is out of range."""


class RankSelectionError(LatentFireError):
    """Automatic rank selection found no admissible latent dimension."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class FormatError(LatentFireError):
    """A file could not be decoded."""
