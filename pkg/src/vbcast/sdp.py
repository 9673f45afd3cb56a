"""Small dense log-det barrier SDP solver.

The variable is a block-diagonal Hermitian matrix X, optionally restricted
to the real span of a supplied Hermitian basis. Equalities are eliminated by
parametrizing their affine solution set; inequalities become 1x1 slack
blocks. A phase-1 barrier finds a strictly feasible start when X = X(w0) is
not positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import TOL
from .errors import ArgumentError, NumericError

EIG_FLOOR = 1e-12
MU_FACTOR = 0.2
MAX_OUTER = 200
MAX_NEWTON = 100


def _hinner(a: np.ndarray, x: np.ndarray) -> float:
    """Re Tr[A^dagger X]."""
    return float(np.real(np.vdot(a, x)))


def hermitian_matrix_basis(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis of n x n matrices; the first element is 1/sqrt(n), the rest are traceless."""
    mats = [np.eye(n, dtype=complex) / np.sqrt(n)]
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            mats.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j], e[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            mats.append(e)
    for ell in range(1, n):
        e = np.zeros((n, n), dtype=complex)
        e[np.arange(ell), np.arange(ell)] = 1.0
        e[ell, ell] = -float(ell)
        mats.append(e / np.sqrt(ell * (ell + 1)))
    return np.stack(mats)


@dataclass
class SdpStandardForm:
    """min <C, X> s.t. <A_i, X> = b_i, <G_j, X> <= h_j, X = diag(X_1, ...) PSD."""

    blocks: tuple[int, ...]
    objective: np.ndarray
    constraints: list[tuple[np.ndarray, float]] = field(default_factory=list)
    inequalities: list[tuple[np.ndarray, float]] = field(default_factory=list)
    basis: np.ndarray | None = None  # (m, dim, dim); None means every Hermitian X
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.blocks = tuple(int(b) for b in self.blocks)
        n = self.dim
        self.objective = np.asarray(self.objective, dtype=complex)
        mats = [self.objective] + [a for a, _ in self.constraints] + [g for g, _ in self.inequalities]
        if self.basis is not None:
            self.basis = np.asarray(self.basis, dtype=complex)
            mats += list(self.basis)
        for m in mats:
            if m.shape != (n, n):
                raise ArgumentError(f"matrix of shape {m.shape} does not match dim {n}")
            if np.max(np.abs(m - m.conj().T), initial=0.0) > TOL.hermitian_tol:
                raise ArgumentError("all problem matrices must be Hermitian")

    @property
    def dim(self) -> int:
        return int(sum(self.blocks))

    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for b in self.blocks:
            out.append(slice(start, start + b))
            start += b
        return out

    def full_basis(self) -> np.ndarray:
        if self.basis is not None:
            return self.basis
        mats = []
        for sl in self.block_slices():
            for h in hermitian_matrix_basis(sl.stop - sl.start):
                e = np.zeros((self.dim, self.dim), dtype=complex)
                e[sl, sl] = h
                mats.append(e)
        return np.stack(mats)

    def expand(self, w: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(w, dtype=float), self.full_basis(), axes=1)

    def to_json(self) -> dict:
        def enc(m: np.ndarray) -> dict:
            return {"re": m.real.tolist(), "im": m.imag.tolist()}

        return {
            "blocks": list(self.blocks),
            "objective": enc(self.objective),
            "constraints": [{"a": enc(a), "b": float(b)} for a, b in self.constraints],
            "inequalities": [{"a": enc(a), "b": float(b)} for a, b in self.inequalities],
            "basis": None if self.basis is None else [enc(m) for m in self.basis],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SdpStandardForm":
        def dec(m: dict) -> np.ndarray:
            return np.asarray(m["re"], dtype=float) + 1j * np.asarray(m["im"], dtype=float)

        basis = data.get("basis")
        return cls(
            blocks=tuple(data["blocks"]),
            objective=dec(data["objective"]),
            constraints=[(dec(c["a"]), float(c["b"])) for c in data.get("constraints", [])],
            inequalities=[(dec(c["a"]), float(c["b"])) for c in data.get("inequalities", [])],
            basis=None if basis is None else np.stack([dec(m) for m in basis]),
            meta=data.get("meta", {}),
        )


@dataclass
class SdpResult:
    status: str  # "optimal", "infeasible", "unbounded"
    value: float
    primal_witness: np.ndarray | None
    coefficients: np.ndarray | None
    iterations: int
    gap: float
    equality_residual: float = 0.0
    min_eigenvalue: float = float("nan")

    def block(self, problem: SdpStandardForm, i: int) -> np.ndarray:
        sl = problem.block_slices()[i]
        return self.primal_witness[sl, sl]


class _Barrier:
    """Affine cone map z -> (X blocks, slacks) with log-det barrier derivatives."""

    def __init__(self, blocks0: list[np.ndarray], blocks_dir: list[np.ndarray],
                 slack0: np.ndarray, slack_dir: np.ndarray) -> None:
        self.blocks0 = blocks0  # each (n_b, n_b)
        self.blocks_dir = blocks_dir  # each (m, n_b, n_b)
        self.slack0 = slack0  # (q,)
        self.slack_dir = slack_dir  # (q, m)
        self.nu = sum(b.shape[0] for b in blocks0) + slack0.size

    def point(self, z: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        mats = [b0 + np.tensordot(z, bd, axes=1) for b0, bd in zip(self.blocks0, self.blocks_dir)]
        return mats, self.slack0 + self.slack_dir @ z

    def min_eig(self, z: np.ndarray) -> float:
        mats, s = self.point(z)
        vals = [np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] for m in mats]
        vals += list(s)
        return float(min(vals)) if vals else np.inf

    def value(self, z: np.ndarray) -> float:
        """-log det, +inf outside the interior."""
        mats, s = self.point(z)
        total = 0.0
        for m in mats:
            vals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
            if vals[0] <= EIG_FLOOR:
                return np.inf
            total -= float(np.sum(np.log(vals)))
        if s.size:
            if np.min(s) <= EIG_FLOOR:
                return np.inf
            total -= float(np.sum(np.log(s)))
        return total

    def derivatives(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = z.size
        grad = np.zeros(m)
        hess = np.zeros((m, m))
        mats, s = self.point(z)
        for mat, bd in zip(mats, self.blocks_dir):
            lower = np.linalg.cholesky(0.5 * (mat + mat.conj().T))
            linv = np.linalg.inv(lower)
            g = linv[None] @ bd @ linv.conj().T[None]
            grad -= np.real(np.trace(g, axis1=1, axis2=2))
            flat = g.reshape(m, -1)
            hess += np.real(flat.conj() @ flat.T)
        if s.size:
            inv = 1.0 / s
            grad -= self.slack_dir.T @ inv
            scaled = self.slack_dir * inv[:, None]
            hess += scaled.T @ scaled
        return grad, hess


def _center(bar: _Barrier, cost: np.ndarray, t: float, z: np.ndarray,
            stop=None) -> tuple[np.ndarray, int]:
    """Damped Newton on t*cost.z + barrier(z)."""
    f = t * cost @ z + bar.value(z)
    for it in range(MAX_NEWTON):
        grad, hess = bar.derivatives(z)
        grad = t * cost + grad
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        dec = float(-grad @ step)
        if dec / 2 <= 1e-11:
            return z, it
        alpha = 1.0
        while True:
            cand = z + alpha * step
            fc = t * cost @ cand + bar.value(cand)
            if np.isfinite(fc) and fc <= f - 0.25 * alpha * dec:
                break
            alpha *= 0.5
            if alpha < 1e-14:
                return z, it
        z, f = cand, fc
        if stop is not None and stop(z):
            return z, it + 1
        if np.max(np.abs(z)) > 1e12:
            raise _Unbounded()
    return z, MAX_NEWTON


class _Unbounded(Exception):
    pass


def _barrier_minimize(bar: _Barrier, cost: np.ndarray, z0: np.ndarray, tol: float,
                      t0: float = 1.0, stop=None) -> tuple[np.ndarray, int, float]:
    z, t, iters = z0, t0, 0
    for _ in range(MAX_OUTER):
        z, n_it = _center(bar, cost, t, z, stop)
        iters += n_it
        if stop is not None and stop(z):
            return z, iters, bar.nu / t
        if bar.nu / t < tol:
            return z, iters, bar.nu / t
        t /= MU_FACTOR
    raise NumericError(f"barrier did not converge in {MAX_OUTER} outer iterations (gap {bar.nu / t:.3e})")


def sdp_barrier_solve(problem: SdpStandardForm, sdp_tol: float = TOL.sdp_tol) -> SdpResult:
    basis = problem.full_basis()
    m = basis.shape[0]
    cvec = np.array([_hinner(b, problem.objective) for b in basis])
    if problem.constraints:
        a_eq = np.array([[_hinner(a, b) for b in basis] for a, _ in problem.constraints])
        b_eq = np.array([float(b) for _, b in problem.constraints])
    else:
        a_eq, b_eq = np.zeros((0, m)), np.zeros(0)
    g_in = np.array([[_hinner(g, b) for b in basis] for g, _ in problem.inequalities]).reshape(-1, m)
    h_in = np.array([float(h) for _, h in problem.inequalities])

    # affine parametrization w = w0 + N z of the equality set
    if a_eq.shape[0]:
        u, s, vt = np.linalg.svd(a_eq, full_matrices=True)
        rank = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
        w0 = vt[:rank].T @ ((u[:, :rank].T @ b_eq) / s[:rank])
        residual = float(np.max(np.abs(a_eq @ w0 - b_eq)))
        null = vt[rank:].T
    else:
        w0, residual, null = np.zeros(m), 0.0, np.eye(m)
    scale = max(1.0, float(np.max(np.abs(b_eq), initial=0.0)))
    if residual > 1e-8 * scale:
        return SdpResult("infeasible", np.nan, None, None, 0, np.inf, residual)

    x0 = np.tensordot(w0, basis, axes=1)
    xdir = np.tensordot(null.T, basis, axes=1)  # (k, dim, dim)
    slices = problem.block_slices()
    blocks0 = [x0[sl, sl] for sl in slices]
    blocks_dir = [xdir[:, sl, sl] for sl in slices]
    slack0 = h_in - g_in @ w0
    slack_dir = -(g_in @ null)
    cost = null.T @ cvec
    const = float(cvec @ w0)
    k = null.shape[1]
    iterations = 0

    bar = _Barrier(blocks0, blocks_dir, slack0, slack_dir)
    z = np.zeros(k)
    if k == 0:
        # the equalities pin X down completely
        lam = bar.min_eig(z)
        if lam < -TOL.psd_tol:
            return SdpResult("infeasible", np.nan, None, None, 0, np.inf, residual, lam)
        return SdpResult("optimal", _hinner(problem.objective, x0), x0, w0, 0, 0.0, residual, lam)
    if bar.min_eig(z) <= 1e-9:
        z, it, feasible = _phase_one(bar, k)
        iterations += it
        if not feasible:
            return SdpResult("infeasible", np.nan, None, None, iterations, np.inf, residual)
    try:
        t0 = bar.nu / max(1.0, abs(cost @ z + const))
        z, it, gap = _barrier_minimize(bar, cost, z, sdp_tol, t0=t0)
    except _Unbounded:
        return SdpResult("unbounded", -np.inf, None, None, iterations, np.inf, residual)
    iterations += it
    w = w0 + null @ z
    x = np.tensordot(w, basis, axes=1)
    value = _hinner(problem.objective, x)
    eq_res = float(np.max(np.abs(a_eq @ w - b_eq), initial=0.0))
    return SdpResult("optimal", value, x, w, iterations, gap, eq_res, bar.min_eig(z))


def _phase_one(bar: _Barrier, k: int) -> tuple[np.ndarray, int, bool]:
    """min s s.t. X(z) + s I > 0, slacks + s > 0, Tr X(z) + sum(slacks) <= bound."""
    z0 = np.zeros(k)
    lam = bar.min_eig(z0)
    s0 = max(0.0, -lam) + 1.0
    # cone trace as an affine function of z
    tr0 = sum(float(np.real(np.trace(b))) for b in bar.blocks0) + float(np.sum(bar.slack0))
    trdir = sum(np.real(np.trace(bd, axis1=1, axis2=2)) for bd in bar.blocks_dir) + bar.slack_dir.sum(axis=0)
    bound = 1e3 * (abs(tr0) + bar.nu * s0 + 1.0)
    eyes = [np.eye(b.shape[0]) for b in bar.blocks0]
    blocks_dir = [np.concatenate([bd, e[None]], axis=0) for bd, e in zip(bar.blocks_dir, eyes)]
    slack0 = np.concatenate([bar.slack0, [bound - tr0]])
    slack_dir = np.vstack([
        np.hstack([bar.slack_dir, np.ones((bar.slack_dir.shape[0], 1))]),
        np.hstack([-trdir, [0.0]])[None],
    ])
    ext = _Barrier(bar.blocks0, blocks_dir, slack0, slack_dir)
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    y0 = np.concatenate([z0, [s0]])

    def done(y: np.ndarray) -> bool:
        return y[-1] < 0 and bar.min_eig(y[:-1]) > 1e-9

    try:
        y, it, _ = _barrier_minimize(ext, cost, y0, 1e-9, stop=done)
    except NumericError:
        return z0, MAX_OUTER, False
    return y[:-1], it, bool(done(y))
