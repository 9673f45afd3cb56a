"""Sampling-cost analysis of virtual quantum broadcasting."""

from __future__ import annotations

from .analytic import (
    min_n_for_se,
    n_prob,
    rate_abc,
    s_n_closed,
    se_abc,
    se_pbc,
    u2_closed,
    v_n_exact,
)
from .errors import (
    ArgumentError,
    DependencyError,
    InvariantViolation,
    NumericError,
    SizeError,
    VbcastError,
)
from .tensor import ChoiOperator, MultipartiteOperator

__version__ = "0.1.0"
