"""Numerical solution paths checked against the closed forms.

* a golden-section search of the hyperbolic dual objective (ABC, N = 2),
* feasibility checks of dual points for the spectral form of the dual,
* corner evaluation of the probabilistic broadcasting LP,
* commutant-reduced primal SDPs solved with the barrier oracle in ``sdp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from . import analytic
from .analytic import AbcProblem, OverheadResult, PbcProblem
from .config import TOL
from .errors import ArgumentError, NumericError, SizeError
from .permutations import hermitian_commutant_basis, m_xy, m_xy_spectrum, z_lambda_max
from .sdp import SdpResult, SdpStandardForm, hermitian_matrix_basis, sdp_barrier_solve
from .tensor import ChoiOperator, MultipartiteOperator, _check_size, depolarizing_choi, embed, umes

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class DualCertificateAbc:
    """Dual point (z, x, y) of the spectral form; theta and c are provenance.

    c is the multiplier of a - b = 1, equal to 1 - d z when the identity
    parts of the receiver multipliers vanish.
    """

    theta: float
    x: float
    y: float
    z: float
    c: float

    def to_json(self) -> dict:
        return {"theta": self.theta, "x": self.x, "y": self.y, "z": self.z, "c": self.c}


def dual_objective(d: int, eps1: float, eps2: float, x: float, y: float, z: float) -> float:
    """1 - d z + e x + f y with e = d^2 (1 - eps2), f = d^2 (1 - eps1)."""
    e = d * d * (1 - eps2)
    f = d * d * (1 - eps1)
    return 1 - d * z + e * x + f * y


def certificate_from_theta(d: int, eps1: float, eps2: float, theta: float) -> DualCertificateAbc:
    """Undo the hyperbolic substitution at angle theta.

    The hyperbolic point is z' = 1, x' = 2/(d + cosh theta), y' = x' sinh theta,
    which is feasible when cosh theta <= d. When 2 f(theta) - 1 < 1 the
    zero point is better and is returned instead.
    """
    problem = AbcProblem(d, (eps1, eps2))
    k = math.sqrt(d * d - 1)
    ch, sh = math.cosh(theta), math.sinh(theta)
    if 2 * analytic.f_theta(theta, d, *problem.errors) - 1 <= 1 or ch > d:
        return DualCertificateAbc(theta, 0.0, 0.0, 0.0, 1.0)
    x3 = 2.0 / (d + ch)
    y3 = x3 * sh
    x2 = 2 * x3 / d
    y2 = 2 * y3 / (d * k)
    x, y = (x2 + y2) / 2, (x2 - y2) / 2
    z = 2.0 / d
    return DualCertificateAbc(theta, x, y, z, 1 - d * z)


def abc_dual_feasibility(d: int, eps1: float, eps2: float, cert: DualCertificateAbc,
                         tol: float = 1e-10, dense: bool | None = None) -> dict:
    """Check z 1 >= M(x, y) >= (z - 2/d) 1 through the closed-form and dense spectra."""
    AbcProblem(d, (eps1, eps2))
    spec = m_xy_spectrum(cert.x, cert.y, d)
    lo, hi = cert.z - 2.0 / d, cert.z
    closed = max(0.0, spec.lam_max - hi, lo - spec.lam_min)
    out = {
        "objective": dual_objective(d, eps1, eps2, cert.x, cert.y, cert.z),
        "closed_form_violation": closed,
    }
    use_dense = (d ** 3 <= 4096) if dense is None else dense
    violation = closed
    if use_dense:
        vals = np.linalg.eigvalsh(m_xy(cert.x, cert.y, d).entries)
        dense_v = max(0.0, float(vals[-1]) - hi, lo - float(vals[0]))
        out["dense_violation"] = dense_v
        violation = max(violation, dense_v)
    out["max_violation"] = violation
    out["feasible"] = violation <= tol
    return out


def _golden_max(fun, lo: float, hi: float, tol: float, max_iter: int) -> tuple[float, int]:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc, fe = fun(c), fun(e)
    for it in range(max_iter):
        if b - a <= tol:
            return 0.5 * (a + b), it
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = fun(e)
    raise NumericError(f"golden-section search did not converge; best theta {0.5 * (a + b)}")


def abc_dual_theta_search(d: int, eps1: float, eps2: float, tol: float = 1e-10,
                          max_iter: int = 500) -> OverheadResult:
    """max over theta of {2 f(theta) - 1, 1} by bracketed golden-section search."""
    AbcProblem(d, (eps1, eps2))
    center = analytic.theta_star(d, eps1, eps2)
    lo, hi = center - 5.0, center + 5.0
    for _ in range(20):
        # f is unimodal: rising at the left edge, falling at the right one
        grow_left = analytic.f_theta_derivative(lo, d, eps1, eps2) < 0
        grow_right = analytic.f_theta_derivative(hi, d, eps1, eps2) > 0
        if not (grow_left or grow_right):
            break
        lo -= 5.0 if grow_left else 0.0
        hi += 5.0 if grow_right else 0.0
    theta, iters = _golden_max(lambda t: analytic.f_theta(t, d, eps1, eps2), lo, hi, tol, max_iter)
    f = analytic.f_theta(theta, d, eps1, eps2)
    value = max(2 * f - 1, 1.0)
    cert = certificate_from_theta(d, eps1, eps2, theta)
    return OverheadResult(value, "theta_search", cert, {"iterations": iters, "f": f, "bracket": (lo, hi)})


def abc_closed_certificate(d: int, eps1: float, eps2: float) -> DualCertificateAbc:
    return certificate_from_theta(d, eps1, eps2, analytic.theta_star(d, eps1, eps2))


@dataclass(frozen=True)
class LpCorners:
    s1: Fraction | float
    s2: Fraction | float
    lambda_max: Fraction | float
    active: str


def pbc_lp_solve(d: int, n: int, p: float | Fraction, lambda_max: float | None = None) -> OverheadResult:
    """Larger of the two LP corner values p (2dN - lam)/lam and p, lam = lambda_max(Z)."""
    PbcProblem(d, n, p)
    lam = z_lambda_max(d, n) if lambda_max is None else lambda_max
    if analytic._exact(p, lam):
        lam_q, p_q = Fraction(lam), Fraction(p)
        s1 = p_q * (2 * d * n - lam_q) / lam_q
        s2 = p_q
    else:
        s1 = float(p) * (2 * d * n - float(lam)) / float(lam)
        s2 = float(p)
    active = "s1" if s1 >= s2 else "s2"
    value = s1 if s1 >= s2 else s2
    return OverheadResult(value, "lp_corner", LpCorners(s1, s2, lam, active))


# primal SDPs over commutant coefficients


def _blockdiag(mats: Sequence[np.ndarray]) -> np.ndarray:
    sizes = [m.shape[0] for m in mats]
    out = np.zeros((sum(sizes), sum(sizes)), dtype=complex)
    start = 0
    for m, s in zip(mats, sizes):
        out[start:start + s, start:start + s] = m
        start += s
    return out


def _operator_basis(d: int, k: int, kind: str) -> np.ndarray:
    if kind == "commutant":
        return hermitian_commutant_basis(d, k)
    if kind == "full":
        return hermitian_matrix_basis(d ** k)
    raise ArgumentError(f"unknown basis kind {kind!r}")


def _traceless_input_constraints(d: int, n: int, n_blocks: int, extra: int) -> list[tuple[np.ndarray, float]]:
    """Tr_out J_i has no traceless part, for each Choi block i."""
    dd = d ** (n + 1)
    rest = np.eye(d ** n)
    out = []
    for e in hermitian_matrix_basis(d)[1:]:
        big = np.kron(e, rest)
        for i in range(n_blocks):
            mats = [np.zeros((dd, dd))] * n_blocks + [np.zeros((1, 1))] * extra
            mats[i] = big
            out.append((_blockdiag(mats), 0.0))
    return out


def _marginal_constraints(d: int, n: int, targets: Sequence[np.ndarray], extra: int) -> list[tuple[np.ndarray, float]]:
    """Tr_{others}[J1 - J2] = targets[i] on (A, B_i)."""
    dims = (d,) * (n + 1)
    out = []
    for i, target in enumerate(targets):
        for e in hermitian_matrix_basis(d * d):
            big = embed(MultipartiteOperator(e, (d, d)), [0, i + 1], dims).entries
            mat = _blockdiag([big, -big] + [np.zeros((1, 1))] * extra)
            out.append((mat, float(np.real(np.vdot(e, target)))))
    return out


def _check_sdp_size(d: int, n: int, kind: str) -> None:
    _check_size(d ** (n + 1))
    if kind == "commutant" and math.factorial(n + 1) > 120:
        raise SizeError(f"(N+1)! = {math.factorial(n + 1)} exceeds the basis cap")
    if kind == "full" and 2 * d ** (2 * (n + 1)) > 300:
        raise SizeError("full-basis SDP limited to 300 scalar variables")


def build_abc_primal_sdp(d: int, n: int, eps_list: Sequence[float], basis: str = "commutant") -> SdpStandardForm:
    """min a + b with depolarizing marginals for J1 - J2, J1, J2 >= 0, Tr_out J = (a, b) 1, a - b = 1."""
    problem = AbcProblem(d, tuple(eps_list))
    if problem.n_receivers != n:
        raise ArgumentError("one error per receiver is required")
    _check_sdp_size(d, n, basis)
    dd = d ** (n + 1)
    ops = _operator_basis(d, n + 1, basis)
    zero = np.zeros((dd, dd))
    full = [_blockdiag([h, zero]) for h in ops] + [_blockdiag([zero, h]) for h in ops]
    eye = np.eye(dd)
    constraints = [(_blockdiag([eye / d, -eye / d]), 1.0)]
    constraints += _traceless_input_constraints(d, n, 2, 0)
    targets = [depolarizing_choi(d, analytic.eps_to_p(d, e)).entries for e in problem.errors]
    constraints += _marginal_constraints(d, n, targets, 0)
    return SdpStandardForm(
        blocks=(dd, dd),
        objective=_blockdiag([eye / d, eye / d]),
        constraints=constraints,
        basis=np.stack(full),
        meta={"kind": "abc", "d": d, "n": n, "eps": list(problem.errors), "basis": basis},
    )


def build_pbc_primal_sdp(d: int, n: int, p: float, basis: str = "commutant") -> SdpStandardForm:
    """min a + b with Tr_{others}[J1 - J2] = p Gamma, Tr_out J1 <= a 1, Tr_out J2 <= b 1, a - b <= 1."""
    PbcProblem(d, n, p)
    if basis != "commutant":
        # Tr_out J <= a 1 is imposed as a scalar inequality, exact only on the commutant
        raise ArgumentError("the probabilistic SDP is built over the commutant only")
    _check_sdp_size(d, n, basis)
    dd = d ** (n + 1)
    ops = _operator_basis(d, n + 1, basis)
    zero, z1, one = np.zeros((dd, dd)), np.zeros((1, 1)), np.ones((1, 1))
    full = [_blockdiag([h, zero, z1, z1]) for h in ops] + [_blockdiag([zero, h, z1, z1]) for h in ops]
    full += [_blockdiag([zero, zero, one, z1]), _blockdiag([zero, zero, z1, one])]
    eye = np.eye(dd)
    constraints = _traceless_input_constraints(d, n, 2, 2)
    gamma = float(p) * umes(d).entries
    constraints += _marginal_constraints(d, n, [gamma] * n, 2)
    inequalities = [
        (_blockdiag([eye / d, zero, -one, z1]), 0.0),
        (_blockdiag([zero, eye / d, z1, -one]), 0.0),
        (_blockdiag([zero, zero, one, -one]), 1.0),
    ]
    return SdpStandardForm(
        blocks=(dd, dd, 1, 1),
        objective=_blockdiag([zero, zero, one, one]),
        constraints=constraints,
        inequalities=inequalities,
        basis=np.stack(full),
        meta={"kind": "pbc", "d": d, "n": n, "p": float(p), "basis": basis},
    )


@dataclass
class SdpWitness:
    """Primal point (a, b, J1, J2) of a broadcasting SDP."""

    kind: Literal["abc", "pbc"]
    d: int
    n: int
    a: float
    b: float
    j1: ChoiOperator
    j2: ChoiOperator
    value: float
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "d": self.d, "n": self.n, "a": self.a, "b": self.b,
            "value": self.value, "params": self.params,
            "j1": self.j1.to_json(), "j2": self.j2.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SdpWitness":
        try:
            return cls(
                kind=data["kind"], d=int(data["d"]), n=int(data["n"]),
                a=float(data["a"]), b=float(data["b"]),
                j1=ChoiOperator.from_json(data["j1"]), j2=ChoiOperator.from_json(data["j2"]),
                value=float(data["value"]), params=dict(data.get("params", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ArgumentError(f"malformed witness JSON: {exc}") from exc


def _witness(problem: SdpStandardForm, res: SdpResult) -> SdpWitness:
    meta = problem.meta
    d, n = meta["d"], meta["n"]

    def choi(i: int) -> ChoiOperator:
        mat = res.block(problem, i)
        return ChoiOperator.from_matrix(0.5 * (mat + mat.conj().T), d, n)

    j1, j2 = choi(0), choi(1)
    if meta["kind"] == "abc":
        a, b = j1.trace_scale(), j2.trace_scale()
    else:
        a = float(np.real(res.block(problem, 2)[0, 0]))
        b = float(np.real(res.block(problem, 3)[0, 0]))
    params = {k: v for k, v in meta.items() if k not in ("kind", "d", "n")}
    params.update({"gap": res.gap, "iterations": res.iterations})
    return SdpWitness(meta["kind"], d, n, a, b, j1, j2, res.value, params)


def _solve(problem: SdpStandardForm, tol: float) -> OverheadResult:
    res = sdp_barrier_solve(problem, tol)
    if res.status != "optimal":
        raise NumericError(f"SDP reported status {res.status}")
    return OverheadResult(res.value, "sdp_oracle", _witness(problem, res),
                          {"gap": res.gap, "iterations": res.iterations,
                           "equality_residual": res.equality_residual,
                           "min_eigenvalue": res.min_eigenvalue})


def solve_abc_sdp(d: int, eps_list: Sequence[float], tol: float = 1e-8, basis: str = "commutant") -> OverheadResult:
    return _solve(build_abc_primal_sdp(d, len(eps_list), eps_list, basis), tol)


def solve_pbc_sdp(d: int, n: int, p: float, tol: float = 1e-8) -> OverheadResult:
    return _solve(build_pbc_primal_sdp(d, n, p), tol)
