"""Tolerances and size caps."""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_MAX_DIM = 4096
BASIS_CAP = 120  # k! for k <= 5


def max_dim() -> int:
    """Total matrix dimension cap, overridable through ``VBCAST_MAX_DIM``."""
    raw = os.environ.get("VBCAST_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError:
        return DEFAULT_MAX_DIM
    return value if value > 0 else DEFAULT_MAX_DIM


@dataclass(frozen=True)
class Tolerances:
    hermitian_tol: float = 1e-10
    psd_tol: float = 1e-9
    sdp_tol: float = 1e-6


TOL = Tolerances()
