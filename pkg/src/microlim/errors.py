"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code taxonomy: parse diagnostics and
usage problems exit 1, reduction failures exit 2, numeric failures
exit 3.
"""

from __future__ import annotations


class MicrolimError(Exception):
    """Base class for every error raised by this package."""


class Diagnostic(MicrolimError):
    """A positioned parse-time diagnostic (1-based line and column)."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class SchemeSyntaxError(Diagnostic):
    """Malformed scheme or expression text."""


class UnknownSymbolError(Diagnostic):
    """An identifier that is not D, tau, dt or dx where a symbol is required."""


class NonIntegerExponentError(Diagnostic):
    """An exponent that does not evaluate to an integer constant."""


class UnresolvedTemplateError(Diagnostic):
    """A scheme term references a template that is neither local nor built in."""


class NonInvertibleSubstitution(MicrolimError):
    """A substitution required a negative power of a non-monomial replacement."""


class UnknownTemplateError(MicrolimError):
    """Requested built-in template name is not in the catalog."""


class ReductionError(MicrolimError):
    """Base class for failures of the stencil -> random-walk reduction."""


class UnsolvableConstraint(ReductionError):
    """A coefficient outside the walk support cannot be zeroed by any
    step-size binding the engine knows how to solve for."""


class PositivityViolation(ReductionError):
    """Solved weights fall outside the band 0 < p <= 1/2, p0 >= 0."""


class OddSpaceExponent(ReductionError):
    """A constraint would require solving for an odd power of dx."""


class FreeParameterRequired(ReductionError):
    """The scheme leaves a weight ratio free; the caller must supply p."""


class FreeParameterForbidden(ReductionError):
    """A free parameter p was supplied to a scheme that admits none."""


class UnderConstrained(ReductionError):
    """Scale identities were requested from a reduction that does not fix
    both dt and dx^2 in terms of the PDE parameters."""


class NumericError(MicrolimError):
    """Base class for failures of the numerical validators."""


class NonConvergent(NumericError):
    """The refinement study failed to decrease the error monotonically."""


class UnstableStep(NumericError):
    """Requested oscillator time step is at or beyond the stability bound."""
