"""Closed-form overheads, rates, sample-efficiency predicates and sample counts.

Sample counts are in units of n_Q, the single-copy requirement. Functions of
the exact and probabilistic families return ``Fraction`` when every input is
an ``int`` or ``Fraction``, and ``float`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, Literal, Sequence

import numpy as np

from .errors import ArgumentError, DependencyError

Number = float | Fraction
Method = Literal["closed_form", "theta_search", "lp_corner", "sdp_oracle"]
MIN_N_CAP = 10 ** 6


@dataclass(frozen=True)
class AbcProblem:
    d: int
    errors: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "errors", tuple(float(e) for e in self.errors))
        _check_d(self.d)
        if len(self.errors) < 2:
            raise ArgumentError("broadcasting needs at least two receivers")
        for e in self.errors:
            _check_eps(self.d, e)

    @property
    def n_receivers(self) -> int:
        return len(self.errors)


@dataclass(frozen=True)
class PbcProblem:
    d: int
    n_receivers: int
    p: Number

    def __post_init__(self) -> None:
        _check_d(self.d)
        _check_n(self.n_receivers)
        _check_p(self.p)


@dataclass(frozen=True)
class OverheadResult:
    value: float
    method: Method
    certificate: Any = None
    details: dict = field(default_factory=dict)


def _check_d(d: int) -> None:
    if int(d) != d or d < 2:
        raise ArgumentError(f"d must be an integer >= 2, got {d}")


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise ArgumentError(f"N must be an integer >= 2, got {n}")


def _check_p(p: Number) -> None:
    if not (0 < p <= 1):
        raise ArgumentError(f"success probability must lie in (0, 1], got {p}")


def eps_max(d: int) -> float:
    return 1.0 - 1.0 / (d * d)


def _check_eps(d: int, eps: float) -> None:
    # the boundary 1 - 1/d^2 itself is accepted
    if not (0.0 <= eps <= eps_max(d) + 1e-15) or math.isnan(eps):
        raise ArgumentError(f"error {eps} outside [0, {eps_max(d)}] for d={d}")


def _exact(*values: Any) -> bool:
    return all(isinstance(v, Rational) for v in values)


def eps_to_p(d: int, eps: float) -> float:
    """p = d^2 eps / (d^2 - 1)."""
    _check_d(d)
    _check_eps(d, eps)
    return d * d * eps / (d * d - 1)


def p_to_eps(d: int, p: float) -> float:
    _check_d(d)
    if not (0.0 <= p <= 1.0 + 1e-15):
        raise ArgumentError(f"depolarizing parameter {p} outside [0, 1]")
    return (d * d - 1) * p / (d * d)


def u2_closed(d: int, eps1: float, eps2: float) -> float:
    """Minimal overhead of approximate 1-to-2 broadcasting."""
    _check_d(d)
    _check_eps(d, eps1)
    _check_eps(d, eps2)
    t1, t2 = 1.0 - eps1, 1.0 - eps2
    first = (d * d * (3 - 2 * (eps1 + eps2)) - 4 * d * math.sqrt(t1 * t2) + 1) / (d * d - 1)
    return max(first, 1.0)


def u2_alternate(d: int, eps1: float, eps2: float) -> float:
    """Same optimum written as a symmetric part plus an asymmetry penalty."""
    _check_d(d)
    _check_eps(d, eps1)
    _check_eps(d, eps2)
    sym = (d * (3 - 2 * (eps1 + eps2)) - 1) / (d + 1)
    gap = 2 * d * (math.sqrt(1 - eps1) - math.sqrt(1 - eps2)) ** 2 / (d * d - 1)
    return max(sym + gap, 1.0)


def v2_exact(d: int) -> Fraction:
    """(3d - 1)/(d + 1), overhead of exact 1-to-2 broadcasting."""
    _check_d(d)
    return Fraction(3 * d - 1, d + 1)


def v_n_exact(d: int, n: int) -> Fraction:
    """2dN/(N + d - 1) - 1, overhead of exact 1-to-N broadcasting."""
    _check_d(d)
    _check_n(n)
    return Fraction(2 * d * n, n + d - 1) - 1


def s_n_closed(d: int, n: int, p: Number) -> Number:
    """Minimal overhead of probabilistic 1-to-N broadcasting with success probability p."""
    _check_p(p)
    base = v_n_exact(d, n)
    if _exact(p):
        return Fraction(p) * base
    return float(p) * float(base)


def no_go_dimension_bound() -> float:
    """Exact 1-to-2 broadcasting could only be sample efficient for d below this value."""
    return (1 + math.sqrt(2)) / (3 - math.sqrt(2))


def socp_coeffs(d: int, eps1: float, eps2: float) -> tuple[float, float, float]:
    """(g, h, k) of the cone program."""
    _check_d(d)
    _check_eps(d, eps1)
    _check_eps(d, eps2)
    k = math.sqrt(d * d - 1)
    g = d * (2 - (eps1 + eps2))
    h = d / k * (eps1 - eps2)
    return g, h, k


def f_theta(theta: float, d: int, eps1: float, eps2: float) -> float:
    g, h, _ = socp_coeffs(d, eps1, eps2)
    return (g + h * math.sinh(theta)) / (d + math.cosh(theta))


def f_theta_derivative(theta: float, d: int, eps1: float, eps2: float) -> float:
    g, h, _ = socp_coeffs(d, eps1, eps2)
    ch, sh = math.cosh(theta), math.sinh(theta)
    return (h * d * ch + h - g * sh) / (d + ch) ** 2


def theta_star(d: int, eps1: float, eps2: float) -> float:
    """Unique maximizer of f: e^theta = (h + sqrt(g^2 - k^2 h^2)) / (g - d h)."""
    g, h, k = socp_coeffs(d, eps1, eps2)
    num = h + math.sqrt(g * g - k * k * h * h)
    den = g - d * h
    return math.log(num / den)


def f_max_closed(d: int, eps1: float, eps2: float) -> float:
    _check_d(d)
    _check_eps(d, eps1)
    _check_eps(d, eps2)
    t1, t2 = 1.0 - eps1, 1.0 - eps2
    return (d * d * (t1 + t2) - 2 * d * math.sqrt(t1 * t2)) / (d * d - 1)


def hyperbolic_star(d: int, eps1: float, eps2: float) -> tuple[float, float]:
    """(sinh theta*, cosh theta*) from the error parameters directly."""
    _check_d(d)
    t1, t2 = 1.0 - eps1, 1.0 - eps2
    k = math.sqrt(d * d - 1)
    r = math.sqrt(t1 * t2)
    sinh = k * (t2 - t1) / (2 * d * r - (t1 + t2))
    cosh = (d * (t2 - t1) ** 2 + 2 * k * k * (t1 + t2) * r) / (4 * d * d * t1 * t2 - (t1 + t2) ** 2)
    return sinh, cosh


def rate_naive(n: int) -> Fraction:
    _check_n(n)
    return Fraction(1, n)


def _abc_overhead(d: int, eps_list: Sequence[float], v_n: float | None) -> float:
    problem = AbcProblem(d, tuple(eps_list))
    if problem.n_receivers == 2 and v_n is None:
        return u2_closed(d, *problem.errors)
    if v_n is None:
        raise DependencyError("N >= 3 needs a numerically solved overhead v_N")
    return float(v_n)


def rate_abc(d: int, eps_list: Sequence[float], v_n: float | None = None) -> float:
    """Average marginal fidelity per consumed copy: (1 - mean eps) / v_N^2."""
    v = _abc_overhead(d, eps_list, v_n)
    return (1.0 - float(np.mean(eps_list))) / (v * v)


def se_abc(d: int, eps_list: Sequence[float], v_n: float | None = None) -> bool:
    """Sample efficiency of approximate broadcasting, inclusive: v_N <= sqrt(N - sum eps)."""
    v = _abc_overhead(d, eps_list, v_n)
    bound = len(eps_list) - float(sum(eps_list))
    return v * v <= bound + 1e-12


def n_prob(d: int, n: int, p: Number) -> Number:
    """s_N(p)^2 / p^4, sample cost of probabilistic broadcasting in units of n_Q."""
    s = s_n_closed(d, n, p)
    if _exact(p):
        return s * s / Fraction(p) ** 4
    return float(s) ** 2 / float(p) ** 4


def se_pbc(d: int, n: int, p: Number) -> bool:
    """Strict: n_prob < N."""
    return n_prob(d, n, p) < n


def _se_pbc_float(d: int, ns: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    ns = ns.astype(float)
    v = ((2 * ns - 1) * d - (ns - 1)) / (ns + d - 1)
    gap = p * p * ns - v * v  # SE iff gap > 0
    return gap > 0, np.abs(gap)


def min_n_for_se(d: int, p: Number = 1, cap: int = MIN_N_CAP) -> int | None:
    """Smallest N >= 2 with n_prob(d, N, p) < N, or None when no N <= cap qualifies."""
    _check_d(d)
    _check_p(p)
    if p == 1:
        # N > ((d-1) + sqrt(d(d-1)))^2, confirmed exactly on neighbours
        guess = int(math.floor(((d - 1) + math.sqrt(d * (d - 1))) ** 2)) + 1
        lo = max(2, guess - 2)
        for n in range(lo, guess + 3):
            if se_pbc(d, n, 1):
                return n if n <= cap else None
        raise ArithmeticError("closed-form threshold disagrees with the exact predicate")
    ns = np.arange(2, cap + 1)
    ok, margin = _se_pbc_float(d, ns, float(p))
    # ambiguous cells near equality are decided with the exact predicate
    for i in np.nonzero(margin < 1e-9)[0]:
        ok[i] = se_pbc(d, int(ns[i]), p)
    hits = np.nonzero(ok)[0]
    return int(ns[hits[0]]) if hits.size else None


def exact_se_dimension_bound(n: int) -> float:
    """d must stay below (sqrt N + 1)^2 / (2 sqrt N + 1) for exact broadcasting to be SE."""
    r = math.sqrt(n)
    return (r + 1) ** 2 / (2 * r + 1)


def prob_se_dimension_bound(n: int, p: float) -> float:
    r = math.sqrt(n)
    return (n - 1) * (p * r + 1) / (2 * n - p * r - 1)


def hoeffding_samples(c: float, eps: float, delta: float) -> int:
    """ceil(c^2 ln(2/delta) / (2 eps^2))."""
    return virtual_samples(1.0, c, eps, delta)


def virtual_samples(overhead: float, c: float, eps: float, delta: float) -> int:
    """ceil(overhead^2 c^2 ln(2/delta) / (2 eps^2))."""
    if c <= 0 or eps <= 0:
        raise ArgumentError("range c and accuracy eps must be positive")
    if not 0 < delta < 1:
        raise ArgumentError("delta must lie in (0, 1)")
    if overhead < 1 - 1e-12:
        raise ArgumentError("overhead is at least 1")
    return int(math.ceil(overhead ** 2 * c * c * math.log(2 / delta) / (2 * eps * eps)))


def probabilistic_samples(overhead: float, p: float, c: float, eps: float, delta: float) -> int:
    """Virtual sample count inflated by 1/p^4 for a success probability p."""
    _check_p(p)
    if c <= 0 or eps <= 0:
        raise ArgumentError("range c and accuracy eps must be positive")
    if not 0 < delta < 1:
        raise ArgumentError("delta must lie in (0, 1)")
    base = overhead ** 2 * c * c * math.log(2 / delta) / (2 * eps * eps)
    return int(math.ceil(base / float(p) ** 4))


def statistical_bias_bound(d: int, eps1: float, o_max: float) -> float:
    """Extra bias d^2 eps1 o_max / (d^2 - 1) from approximating the identity marginal."""
    if o_max < 0:
        raise ArgumentError("o_max must be nonnegative")
    return d * d * eps1 * o_max / (d * d - 1)
