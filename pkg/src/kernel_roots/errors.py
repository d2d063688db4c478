"""Exception types shared across the package.

Two user-facing categories: bad input data (ValidationError) and requests
that are well formed but outside the supported configuration space
(UnsupportedError, e.g. hulls above dimension 3). The CLI maps them to
exit codes 2 and 3 respectively. InternalError marks a broken internal
invariant (verification of an exact-geometry step failed) and is never
expected to surface in normal use.
"""


class ValidationError(ValueError):
    """Input data violates a documented precondition."""


class UnsupportedError(Exception):
    """Well-formed request outside the supported configuration space."""


class InternalError(AssertionError):
    """An internal exact-arithmetic verification failed."""
