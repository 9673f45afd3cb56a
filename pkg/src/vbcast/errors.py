"""Exception hierarchy shared by every module."""

from __future__ import annotations


class VbcastError(Exception):
    """Base class for all library errors."""


class ArgumentError(VbcastError, ValueError):
    """Invalid parameters, indices or dimensions."""


class SizeError(VbcastError, ValueError):
    """Matrix dimension above the configured cap."""


class NumericError(VbcastError, ArithmeticError):
    """Numerical failure: non-Hermitian input, non-convergence."""


class DependencyError(VbcastError, RuntimeError):
    """A required numeric input (for example a solved v_N) was not supplied."""


class InvariantViolation(VbcastError, RuntimeError):
    """A structural property assumed by the algorithm does not hold."""
