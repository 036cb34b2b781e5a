"""Exception hierarchy.

``DesignError`` marks bad user input (unknown columns, invalid responses,
degenerate designs); ``NumericalError`` marks failures of the numerics
(non-convergence, singular information blocks).  The CLI maps them to
exit codes 2 and 3 respectively.
"""


class SignFlipError(Exception):
    """Base class for all errors raised by this package."""


class DesignError(SignFlipError, ValueError):
    """Invalid user input: columns, responses, model specification."""


class NumericalError(SignFlipError, RuntimeError):
    """Numerical failure: non-convergence or a singular/indefinite matrix."""
