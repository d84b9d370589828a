"""Exception types shared across the package.

Every operation that can fail in a physics-meaningful way raises one of
these instead of leaking backend exceptions. Conditions that are reported
but not fatal (near-defective decompositions, ambiguous mode counts) are
flags on result objects, not exceptions.
"""
from __future__ import annotations

__all__ = [
    "NHFloqError",
    "NonConvergence",
    "OverflowRisk",
    "ZeroEigenvalue",
    "NotTwoPart",
    "TruncationTooSmall",
    "Underflow",
    "Overflow",
    "InvalidParams",
    "UnsupportedCombination",
    "DimensionMismatch",
    "GBZIllDefined",
    "NoRootInBracket",
    "BaseEnergyOnSpectrum",
    "NonConvergent",
    "GaplessAtSample",
    "GaplessAtZero",
    "EdgeWindowTooSmall",
    "EPOnGBZ",
    "GapClosureOnTorus",
    "BadInitialState",
    "VanishingTexture",
    "NormCollapse",
    "GapClosure",
    "ComplexGapViolation",
    "UnnormalizedState",
    "ParseError",
    "SchemaError",
]


class NHFloqError(Exception):
    """Base class for all package errors."""


# -- linear algebra ---------------------------------------------------------

class NonConvergence(NHFloqError):
    """The underlying eigensolver failed to converge."""


class OverflowRisk(NHFloqError):
    """Matrix exponential argument is large enough to overflow."""


class ZeroEigenvalue(NHFloqError):
    """Logarithm of a zero Floquet eigenvalue requested."""


# -- Floquet engine ---------------------------------------------------------

class NotTwoPart(NHFloqError):
    """Symmetric time frames need a protocol with exactly two segments."""


class TruncationTooSmall(NHFloqError):
    """Extended-zone truncation failed its self-consistency check."""


class Underflow(NHFloqError):
    """Evolved state norm fell below the representable floor."""


class Overflow(NHFloqError):
    """Evolved state norm grew beyond the representable ceiling."""


# -- models -----------------------------------------------------------------

class InvalidParams(NHFloqError):
    """Model parameters outside their documented domain."""


class UnsupportedCombination(NHFloqError):
    """Requested option combination is not implemented for this model."""


class DimensionMismatch(NHFloqError):
    """Operator/state dimensions are inconsistent."""


class GBZIllDefined(NHFloqError):
    """Generalized Brillouin zone radius degenerates at these parameters."""


class NoRootInBracket(NHFloqError):
    """Root bracketing failed for the requested analytic boundary."""


# -- topology ---------------------------------------------------------------

class BaseEnergyOnSpectrum(NHFloqError):
    """Spectral winding base point sits on the spectrum."""


class NonConvergent(NHFloqError):
    """Winding integral did not converge under grid refinement."""


class GaplessAtSample(NHFloqError):
    """A sampled quasienergy sits on the projector's branch line."""


class GaplessAtZero(NHFloqError):
    """Open-bulk winding found a bulk state on the reference line."""


class EdgeWindowTooSmall(NHFloqError):
    """Open-bulk truncation window contains too few cells."""


class EPOnGBZ(NHFloqError):
    """Band gap closes on the generalized Brillouin zone."""


class GapClosureOnTorus(NHFloqError):
    """Band separation vanished somewhere on the parameter torus."""


# -- dynamics ---------------------------------------------------------------

class BadInitialState(NHFloqError):
    """Initial amplitudes violate the probe's requirements."""


class VanishingTexture(NHFloqError):
    """Averaged texture too small to define a winding angle."""


class NormCollapse(NHFloqError):
    """Biorthogonal normalization denominator collapsed to zero."""


class GapClosure(NHFloqError):
    """Instantaneous spectrum became degenerate along the ramp."""


class ComplexGapViolation(NHFloqError):
    """Adiabatic theory invoked where level gaps are complex."""


# -- localization -----------------------------------------------------------

class UnnormalizedState(NHFloqError):
    """State passed to participation measures is not normalized."""


# -- configuration / CLI ----------------------------------------------------

class ParseError(NHFloqError):
    """Config file is not syntactically valid."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: int | None = None,
    ):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class SchemaError(NHFloqError):
    """Config file is well-formed but violates the schema.

    `key` names the offending key (or section) when one is identifiable.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
