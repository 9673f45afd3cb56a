"""Permutation operators, commutant projection, Haar twirls, and the M(x, y) and Z operators."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations as _iter_perms
from math import factorial, sqrt
from typing import Sequence

import numpy as np

from .config import BASIS_CAP, TOL
from .errors import ArgumentError, SizeError
from .tensor import (
    ChoiOperator,
    MultipartiteOperator,
    _check_size,
    channel_fidelity,
    depolarizing_choi,
    embed,
    hermitian_eigenvalues,
    partial_transpose,
    umes,
)


@dataclass(frozen=True)
class Permutation:
    """Bijection i -> images[i] of {0..k-1}."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ArgumentError(f"{self.images} is not a permutation")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(tuple(range(k)))

    @classmethod
    def from_cycles(cls, k: int, *cycles: Sequence[int]) -> "Permutation":
        images = list(range(k))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                images[a] = b
        return cls(tuple(images))

    @property
    def k(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """(self o other)(i) = self(other(i))."""
        if other.k != self.k:
            raise ArgumentError("cannot compose permutations of different size")
        return Permutation(tuple(self.images[j] for j in other.images))

    __matmul__ = compose

    def inverse(self) -> "Permutation":
        inv = [0] * self.k
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycle_count(self) -> int:
        seen = [False] * self.k
        count = 0
        for start in range(self.k):
            if not seen[start]:
                count += 1
                j = start
                while not seen[j]:
                    seen[j] = True
                    j = self.images[j]
        return count

    def is_involution(self) -> bool:
        return self.compose(self) == Permutation.identity(self.k)


def all_permutations(k: int) -> list[Permutation]:
    """Lexicographic order; the identity comes first."""
    if factorial(k) > BASIS_CAP:
        raise SizeError(f"{k}! exceeds the basis cap {BASIS_CAP}")
    return [Permutation(p) for p in _iter_perms(range(k))]


def rng_from_seed(seed: int | np.random.Generator | None = 0) -> np.random.Generator:
    """Counter-based generator (Philox) with an explicit 64-bit seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(0 if seed is None else int(seed)))


@lru_cache(maxsize=256)
def _perm_matrix(images: tuple[int, ...], d: int) -> np.ndarray:
    k = len(images)
    total = d ** k
    inv = Permutation(images).inverse().images
    # content of slot j moves to slot sigma(j)
    eye = np.eye(total).reshape((d,) * k + (total,))
    mat = eye.transpose(list(inv) + [k]).reshape(total, total)
    mat.setflags(write=False)
    return mat


def perm_operator(sigma: Permutation, d: int) -> MultipartiteOperator:
    """P_sigma with P_sigma P_tau = P_{sigma tau}."""
    if d < 2:
        raise ArgumentError("d must be at least 2")
    _check_size(d ** sigma.k)
    return MultipartiteOperator(_perm_matrix(sigma.images, d), (d,) * sigma.k)


def gram(d: int, k: int) -> np.ndarray:
    """G[s, t] = Tr[P_s P_t^dagger] = d^{cycles(s t^-1)}."""
    perms = all_permutations(k)
    g = np.empty((len(perms), len(perms)))
    for i, s in enumerate(perms):
        for j, t in enumerate(perms):
            g[i, j] = float(d) ** s.compose(t.inverse()).cycle_count()
    return g


def gram_is_singular(d: int, k: int) -> bool:
    # the antisymmetric sector of (C^d)^{otimes k} vanishes when d < k
    return d < k


@lru_cache(maxsize=32)
def _commutant_stack(d: int, k: int) -> np.ndarray:
    """PT_A(P_sigma) for every sigma, shape (k!, D, D)."""
    perms = all_permutations(k)
    _check_size(d ** k)
    mats = [partial_transpose(perm_operator(s, d), [0]).entries for s in perms]
    out = np.stack(mats)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _gram_pinv(d: int, k: int) -> np.ndarray:
    out = np.linalg.pinv(gram(d, k), rcond=1e-10)
    out.setflags(write=False)
    return out


def commutant_basis(d: int, k: int) -> np.ndarray:
    return _commutant_stack(d, k)


@dataclass(frozen=True)
class CommutantElement:
    """sum_sigma coeffs[sigma] PT_A(P_sigma), permutations in lexicographic order."""

    k: int
    d: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=complex, copy=True)
        if coeffs.shape != (factorial(self.k),):
            raise ArgumentError(f"expected {factorial(self.k)} coefficients, got {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def expand(self) -> MultipartiteOperator:
        mat = np.tensordot(self.coeffs, _commutant_stack(self.d, self.k), axes=1)
        return MultipartiteOperator(mat, (self.d,) * self.k)

    def pairing_defect(self) -> float:
        """max |c_sigma - conj(c_{sigma^-1})|; zero iff the coefficients describe a Hermitian element."""
        perms = all_permutations(self.k)
        index = {p: i for i, p in enumerate(perms)}
        return float(max(abs(self.coeffs[i] - np.conj(self.coeffs[index[p.inverse()]]))
                         for i, p in enumerate(perms)))

    @classmethod
    def project(cls, x: MultipartiteOperator) -> "CommutantElement":
        """Minimum-norm coefficients of the orthogonal projection of ``x``."""
        d = x.dims[0]
        if any(dd != d for dd in x.dims):
            raise ArgumentError("all subsystems must share one dimension")
        k = x.n_systems
        stack = _commutant_stack(d, k)
        # stack entries are real, so Tr[B^dagger X] = sum B * X
        v = np.einsum("sij,ij->s", stack, x.entries)
        return cls(k, d, _gram_pinv(d, k) @ v)


def triple_twirl_exact(x: MultipartiteOperator) -> MultipartiteOperator:
    """Haar average of (U* x U x ... x U) X (U^T x U^dagger ...), U* on the first system."""
    out = CommutantElement.project(x).expand()
    return MultipartiteOperator(out.entries, x.dims, x.labels)


twirl_exact = triple_twirl_exact


def haar_unitary(d: int, rng: int | np.random.Generator | None = 0) -> np.ndarray:
    """QR of a Ginibre matrix with the phases of R's diagonal removed."""
    gen = rng_from_seed(rng)
    z = (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def _haar_batch(d: int, n: int, gen: np.random.Generator) -> np.ndarray:
    z = (gen.standard_normal((n, d, d)) + 1j * gen.standard_normal((n, d, d))) / sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def _twirl_batch_sum(x: np.ndarray, d: int, k: int, us: np.ndarray) -> np.ndarray:
    n = us.shape[0]
    v = us.conj()
    for _ in range(k - 1):
        size = v.shape[1]
        v = np.einsum("nij,nkl->nikjl", v, us).reshape(n, size * d, size * d)
    return np.einsum("nij,jk,nlk->il", v, x, v.conj())


def mc_twirl(x: MultipartiteOperator, samples: int, seed: int = 0, batch_size: int = 512,
             workers: int = 1) -> MultipartiteOperator:
    """Monte-Carlo Haar twirl; batch b draws from child stream b of ``seed``.

    The estimate depends only on (seed, samples, batch_size), not on ``workers``.
    """
    if samples < 1:
        raise ArgumentError("samples must be at least 1")
    d = x.dims[0]
    if any(dd != d for dd in x.dims):
        raise ArgumentError("all subsystems must share one dimension")
    k = x.n_systems
    sizes = [batch_size] * (samples // batch_size)
    if samples % batch_size:
        sizes.append(samples % batch_size)
    children = np.random.SeedSequence(int(seed)).spawn(len(sizes))
    mat = x.entries

    def run(i: int) -> np.ndarray:
        gen = np.random.Generator(np.random.Philox(children[i]))
        return _twirl_batch_sum(mat, d, k, _haar_batch(d, sizes[i], gen))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    total = np.sum(parts, axis=0) / samples
    return MultipartiteOperator(total, x.dims, x.labels)


def channel_twirl(choi: ChoiOperator) -> ChoiOperator:
    """Exact Haar twirl of a single-output Choi operator."""
    if choi.n_outputs != 1:
        raise ArgumentError("channel twirl needs exactly one output")
    c = choi.canonical()
    if c.op.dims[0] != c.op.dims[1]:
        raise ArgumentError("input and output dimensions differ")
    return ChoiOperator(triple_twirl_exact(c.op), 0, (1,))


def channel_twirl_parameter(choi: ChoiOperator, tol: float = 1e-9) -> float:
    """Depolarizing parameter p of the twirled channel, read off the channel fidelity."""
    if choi.n_outputs != 1:
        raise ArgumentError("channel twirl needs exactly one output")
    if not choi.is_tp(1.0, tol):
        raise ArgumentError("channel twirl parameter needs a trace-preserving Choi operator")
    d = choi.d_in
    f = channel_fidelity(choi)
    return (1.0 - f) * d * d / (d * d - 1)


def channel_twirl_depolarizing(choi: ChoiOperator) -> ChoiOperator:
    return depolarizing_choi(choi.d_in, channel_twirl_parameter(choi))


def m_xy(x: float, y: float, d: int) -> MultipartiteOperator:
    """x Gamma_AC x 1_B + y Gamma_AB x 1_C on A, B, C."""
    if d < 2:
        raise ArgumentError("d must be at least 2")
    g = umes(d)
    dims = (d, d, d)
    mat = x * embed(g, [0, 2], dims).entries + y * embed(g, [0, 1], dims).entries
    return MultipartiteOperator(mat, dims, ("A", "B", "C"))


@dataclass(frozen=True)
class MxySpectrum:
    lam_plus: float
    lam_minus: float
    multiplicity: int
    zero_multiplicity: int

    def eigenvalues(self) -> np.ndarray:
        vals = [self.lam_plus] * self.multiplicity + [self.lam_minus] * self.multiplicity
        vals += [0.0] * self.zero_multiplicity
        return np.sort(np.array(vals))

    @property
    def lam_max(self) -> float:
        return max(self.lam_plus, 0.0)

    @property
    def lam_min(self) -> float:
        return min(self.lam_minus, 0.0)


def m_xy_spectrum(x: float, y: float, d: int) -> MxySpectrum:
    """lambda_pm = ((x+y)d +- sqrt((x-y)^2 d^2 + 4xy)) / 2, each d-fold; the rest vanish."""
    if d < 2:
        raise ArgumentError("d must be at least 2")
    disc = (x - y) ** 2 * d * d + 4 * x * y
    root = sqrt(max(disc, 0.0))
    return MxySpectrum(((x + y) * d + root) / 2, ((x + y) * d - root) / 2, d, d ** 3 - 2 * d)


def z_operator(d: int, n: int) -> MultipartiteOperator:
    """sum_i Gamma_{A B_i} x 1 on A, B_1, ..., B_n."""
    if d < 2 or n < 1:
        raise ArgumentError("need d >= 2 and n >= 1")
    dims = (d,) * (n + 1)
    _check_size(d ** (n + 1))
    g = umes(d)
    mat = sum(embed(g, [0, i], dims).entries for i in range(1, n + 1))
    return MultipartiteOperator(mat, dims)


def z_lambda_max(d: int, n: int) -> int:
    """Largest eigenvalue of Z, N + d - 1."""
    if d < 2 or n < 1:
        raise ArgumentError("need d >= 2 and n >= 1")
    return n + d - 1


def z_dense_spectrum(d: int, n: int) -> np.ndarray:
    return hermitian_eigenvalues(z_operator(d, n), TOL.hermitian_tol)


def z_kernel_witness(d: int, n: int) -> np.ndarray:
    """|0>_A |1>^{n}, annihilated by Z."""
    v = np.zeros(d ** (n + 1), dtype=complex)
    idx = 0
    for digit in [0] + [1] * n:
        idx = idx * d + digit
    v[idx] = 1.0
    return v


def hermitian_commutant_basis(d: int, k: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) Hermitian basis of span{PT_A(P_sigma)}."""
    perms = all_permutations(k)
    stack = _commutant_stack(d, k)
    index = {p: i for i, p in enumerate(perms)}
    herm = []
    done = set()
    for i, p in enumerate(perms):
        if i in done:
            continue
        j = index[p.inverse()]
        done.update({i, j})
        if i == j:
            herm.append(stack[i].astype(complex))
        else:
            herm.append((stack[i] + stack[j]).astype(complex))
            herm.append(1j * (stack[i] - stack[j]))
    vecs = np.stack([np.concatenate([h.real.ravel(), h.imag.ravel()]) for h in herm])
    u, s, vt = np.linalg.svd(vecs, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    dim = d ** k
    rows = vt[:rank]
    out = rows[:, : dim * dim].reshape(rank, dim, dim) + 1j * rows[:, dim * dim:].reshape(rank, dim, dim)
    # symmetrize against round-off
    return 0.5 * (out + out.conj().transpose(0, 2, 1))
