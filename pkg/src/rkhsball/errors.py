"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: input errors exit 2, constraint
violations exit 3 and numerical failures exit 4.
"""


class RkhsBallError(Exception):
    """Base class for all package errors."""


class InputError(RkhsBallError):
    """Malformed or out-of-domain input (bad shapes, non-positive widths, ...)."""


class ConstraintError(RkhsBallError):
    """A configuration violates a hard constraint (e.g. tau below the
    theoretical minimum while theory mode is on)."""


class NumericalError(RkhsBallError):
    """A numerical routine failed (non-PSD Gram matrix, root solve divergence)."""
