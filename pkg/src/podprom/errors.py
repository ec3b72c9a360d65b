"""Exception hierarchy.

Every error raised by the package derives from :class:`PromError`. Errors that
signal bad input or configuration also derive from :class:`ValidationError`,
numerical breakdowns from :class:`NumericalError`; the CLI maps the two
families onto exit codes 2 and 3.
"""

from __future__ import annotations


class PromError(Exception):
    """Base class for all package errors."""


class ValidationError(PromError, ValueError):
    """Invalid input, shape, or configuration (CLI exit code 2)."""


class NumericalError(PromError, ArithmeticError):
    """A computation broke down numerically (CLI exit code 3)."""


# --- snapshot store -----------------------------------------------------------


class DimensionError(ValidationError):
    """Array lengths or shapes do not agree."""


class StorageError(PromError, OSError):
    """Writing a file failed."""

    def __init__(self, message: str, path=None):
        super().__init__(message)
        self.path = path


class FormatError(ValidationError):
    """A PSNAP file could not be decoded."""

    def __init__(self, message: str, path=None, offset: int | None = None):
        super().__init__(message)
        self.path = path
        self.offset = offset


class MissingFileError(FormatError, FileNotFoundError):
    pass


class BadMagicError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class NonPositiveWeightError(FormatError):
    pass


class HeaderError(FormatError):
    pass


# --- POD / Galerkin ------------------------------------------------------------


class RankError(ValidationError):
    """Requested rank is not supported by the data."""


class DataError(ValidationError):
    """Snapshot data contain non-finite values."""


class PairingError(ValidationError):
    """A basis was combined with weights, a model, or a reference it does not belong to."""


class MassMatrixError(NumericalError):
    """The reduced mass matrix is singular or badly conditioned."""


class DivergenceError(NumericalError):
    """A time integration produced non-finite values."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class StabilityError(ValidationError):
    """A full-order time step violates its CFL bound."""


# --- interpolation ---------------------------------------------------------------


class GeodesicDomainError(NumericalError):
    """The logarithmic map is undefined (near-orthogonal subspaces)."""

    def __init__(self, message: str, singular_value: float | None = None, case: int | None = None):
        super().__init__(message)
        self.singular_value = singular_value
        self.case = case


class ParityError(ValidationError):
    """Mode-pair packing needs an odd number of modes."""


class UndefinedAngleError(NumericalError):
    """The complex inner product is too small to define a phase."""

    def __init__(self, message: str, column: int | None = None, case: int | None = None):
        super().__init__(message)
        self.column = column
        self.case = case


class WeightError(ValidationError):
    """Interpolation nodes are not pairwise distinct."""


class CatalogError(ValidationError):
    """Not enough eligible cases, or an invalid case catalog."""


class DegenerateTruthError(ValidationError):
    """The reference data have zero norm."""


class ConfigError(ValidationError):
    """Malformed key=value configuration or plan file."""
