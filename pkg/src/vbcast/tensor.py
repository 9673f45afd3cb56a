"""Dense multipartite operators, partial operations, Choi operators and link products."""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .config import TOL, max_dim
from .errors import ArgumentError, NumericError, SizeError

_LETTERS = string.ascii_letters


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MultipartiteOperator:
    """Square complex matrix acting on a tensor product of subsystems."""

    entries: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        dims = tuple(int(x) for x in self.dims)
        if not dims or any(x < 1 for x in dims):
            raise ArgumentError(f"invalid subsystem dimensions {self.dims}")
        entries = _freeze(self.entries)
        total = prod(dims)
        if entries.shape != (total, total):
            raise ArgumentError(f"entries of shape {entries.shape} do not match dims {dims}")
        labels = None if self.labels is None else tuple(str(x) for x in self.labels)
        if labels is not None:
            if len(labels) != len(dims) or len(set(labels)) != len(labels):
                raise ArgumentError(f"labels {labels} must be distinct, one per subsystem")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_systems(self) -> int:
        return len(self.dims)

    def hermiticity_defect(self) -> float:
        """Max |M - M^dagger| entry."""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = TOL.hermitian_tol) -> bool:
        return self.hermiticity_defect() <= tol

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def with_labels(self, labels: Sequence[str] | None) -> "MultipartiteOperator":
        return MultipartiteOperator(self.entries, self.dims, None if labels is None else tuple(labels))

    def index_of(self, label: str) -> int:
        if self.labels is None or label not in self.labels:
            raise ArgumentError(f"label {label!r} not present in {self.labels}")
        return self.labels.index(label)

    def __add__(self, other: "MultipartiteOperator") -> "MultipartiteOperator":
        _check_same_shape(self, other)
        return MultipartiteOperator(self.entries + other.entries, self.dims, self.labels)

    def __sub__(self, other: "MultipartiteOperator") -> "MultipartiteOperator":
        _check_same_shape(self, other)
        return MultipartiteOperator(self.entries - other.entries, self.dims, self.labels)

    def __mul__(self, scalar: complex) -> "MultipartiteOperator":
        return MultipartiteOperator(self.entries * scalar, self.dims, self.labels)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "MultipartiteOperator":
        return MultipartiteOperator(self.entries / scalar, self.dims, self.labels)

    def to_json(self) -> dict:
        out = {
            "dims": list(self.dims),
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
        }
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MultipartiteOperator":
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
            dims = tuple(data["dims"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ArgumentError(f"malformed operator JSON: {exc}") from exc
        return cls(re + 1j * im, dims, data.get("labels"))


def _check_same_shape(a: MultipartiteOperator, b: MultipartiteOperator) -> None:
    if a.dims != b.dims:
        raise ArgumentError(f"dimension mismatch {a.dims} vs {b.dims}")


def _check_size(total: int, cap: int | None = None) -> None:
    cap = max_dim() if cap is None else cap
    if total > cap:
        raise SizeError(f"total dimension {total} exceeds max_dim {cap}")


def operator(entries: np.ndarray, dims: Sequence[int] | None = None,
             labels: Sequence[str] | None = None) -> MultipartiteOperator:
    """Wrap a matrix; a single subsystem is assumed when ``dims`` is omitted."""
    entries = np.asarray(entries, dtype=complex)
    if dims is None:
        dims = (entries.shape[0],)
    return MultipartiteOperator(entries, tuple(dims), None if labels is None else tuple(labels))


def identity(dims: Sequence[int] | int, labels: Sequence[str] | None = None) -> MultipartiteOperator:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    total = prod(dims)
    _check_size(total)
    return MultipartiteOperator(np.eye(total), dims, labels)


def kron(a: MultipartiteOperator, b: MultipartiteOperator, cap: int | None = None) -> MultipartiteOperator:
    _check_size(a.dim * b.dim, cap)
    labels = None
    if a.labels is not None and b.labels is not None:
        labels = a.labels + b.labels
    return MultipartiteOperator(np.kron(a.entries, b.entries), a.dims + b.dims, labels)


def kron_all(ops: Iterable[MultipartiteOperator], cap: int | None = None) -> MultipartiteOperator:
    ops = list(ops)
    if not ops:
        raise ArgumentError("kron_all needs at least one operator")
    out = ops[0]
    for op in ops[1:]:
        out = kron(out, op, cap)
    return out


def _normalize_indices(op: MultipartiteOperator, subsystems: Iterable[int] | int) -> list[int]:
    if isinstance(subsystems, (int, np.integer)):
        subsystems = [int(subsystems)]
    idx = [int(i) for i in subsystems]
    if len(set(idx)) != len(idx):
        raise ArgumentError(f"repeated subsystem index in {idx}")
    for i in idx:
        if not 0 <= i < op.n_systems:
            raise ArgumentError(f"subsystem index {i} out of range for {op.n_systems} systems")
    return idx


def _tensor(op: MultipartiteOperator) -> np.ndarray:
    return op.entries.reshape(op.dims + op.dims)


def partial_trace(op: MultipartiteOperator, subsystems: Iterable[int] | int) -> MultipartiteOperator:
    """Trace out the listed subsystems; tracing everything leaves a 1x1 operator."""
    idx = _normalize_indices(op, subsystems)
    k = op.n_systems
    keep = [i for i in range(k) if i not in idx]
    rows = list(_LETTERS[:k])
    cols = list(_LETTERS[k:2 * k])
    for i in idx:
        cols[i] = rows[i]
    spec = "".join(rows) + "".join(cols) + "->" + "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    out = np.einsum(spec, _tensor(op))
    dims = tuple(op.dims[i] for i in keep)
    labels = None if op.labels is None else tuple(op.labels[i] for i in keep)
    if not dims:
        return MultipartiteOperator(np.reshape(out, (1, 1)), (1,), None)
    total = prod(dims)
    return MultipartiteOperator(out.reshape(total, total), dims, labels)


def partial_transpose(op: MultipartiteOperator, subsystems: Iterable[int] | int) -> MultipartiteOperator:
    idx = _normalize_indices(op, subsystems)
    k = op.n_systems
    axes = list(range(2 * k))
    for i in idx:
        axes[i], axes[k + i] = k + i, i
    out = _tensor(op).transpose(axes).reshape(op.dim, op.dim)
    return MultipartiteOperator(out, op.dims, op.labels)


def permute_subsystems(op: MultipartiteOperator, order: Sequence[int]) -> MultipartiteOperator:
    """Reorder subsystems: new subsystem j is old subsystem ``order[j]``."""
    order = [int(i) for i in order]
    if sorted(order) != list(range(op.n_systems)):
        raise ArgumentError(f"{order} is not a permutation of the subsystems")
    k = op.n_systems
    axes = order + [k + i for i in order]
    out = _tensor(op).transpose(axes).reshape(op.dim, op.dim)
    dims = tuple(op.dims[i] for i in order)
    labels = None if op.labels is None else tuple(op.labels[i] for i in order)
    return MultipartiteOperator(out, dims, labels)


def embed(local: MultipartiteOperator, positions: Sequence[int], dims: Sequence[int],
          labels: Sequence[str] | None = None) -> MultipartiteOperator:
    """Place ``local`` on ``positions`` of a larger space, identity elsewhere."""
    dims = tuple(dims)
    positions = list(positions)
    if len(positions) != local.n_systems:
        raise ArgumentError("one position per local subsystem is required")
    for p, dl in zip(positions, local.dims):
        if not 0 <= p < len(dims) or dims[p] != dl:
            raise ArgumentError(f"position {p} incompatible with local dimension {dl}")
    rest = [i for i in range(len(dims)) if i not in positions]
    full = local if not rest else kron(local, identity([dims[i] for i in rest]))
    current = positions + rest  # current subsystem j sits at global position current[j]
    order = [current.index(g) for g in range(len(dims))]
    return permute_subsystems(full, order).with_labels(labels)


def link_product(m: MultipartiteOperator, n: MultipartiteOperator,
                 shared: Iterable[str] | None = None) -> MultipartiteOperator:
    """M * N = Tr_S[M N^{T_S}] over the shared labels S.

    The result carries M's unshared subsystems first, then N's.
    """
    if m.labels is None or n.labels is None:
        raise ArgumentError("link product requires labelled operators")
    shared = [s for s in m.labels if s in n.labels] if shared is None else list(shared)
    for s in shared:
        if s not in m.labels or s not in n.labels:
            raise ArgumentError(f"shared label {s!r} missing from an operand")
        if m.dims[m.index_of(s)] != n.dims[n.index_of(s)]:
            raise ArgumentError(f"dimension mismatch on shared label {s!r}")
    km, kn = m.n_systems, n.n_systems
    if 4 * (km + kn) > len(_LETTERS):
        raise SizeError("too many subsystems for the link product contraction")
    letters = iter(_LETTERS)
    m_rows = [next(letters) for _ in range(km)]
    m_cols = [next(letters) for _ in range(km)]
    n_rows, n_cols = [], []
    for lab in n.labels:
        if lab in shared:
            j = m.labels.index(lab)
            # sum_{s,t} M[(a s),(a' t)] N[(s b),(t b')]
            n_rows.append(m_rows[j])
            n_cols.append(m_cols[j])
        else:
            n_rows.append(next(letters))
            n_cols.append(next(letters))
    m_keep = [i for i, lab in enumerate(m.labels) if lab not in shared]
    n_keep = [i for i, lab in enumerate(n.labels) if lab not in shared]
    out_rows = [m_rows[i] for i in m_keep] + [n_rows[i] for i in n_keep]
    out_cols = [m_cols[i] for i in m_keep] + [n_cols[i] for i in n_keep]
    spec = ("".join(m_rows + m_cols) + "," + "".join(n_rows + n_cols) + "->"
            + "".join(out_rows + out_cols))
    out = np.einsum(spec, _tensor(m), _tensor(n))
    dims = tuple(m.dims[i] for i in m_keep) + tuple(n.dims[i] for i in n_keep)
    labels = tuple(m.labels[i] for i in m_keep) + tuple(n.labels[i] for i in n_keep)
    if not dims:
        return MultipartiteOperator(np.reshape(out, (1, 1)), (1,), None)
    total = prod(dims)
    _check_size(total)
    return MultipartiteOperator(out.reshape(total, total), dims, labels)


def ket_gamma(d: int) -> np.ndarray:
    return np.eye(d).reshape(d * d).astype(complex)


def umes(d: int, labels: Sequence[str] | None = None) -> MultipartiteOperator:
    """Unnormalized maximally entangled projector |Gamma><Gamma|, trace d."""
    if d < 1:
        raise ArgumentError("dimension must be at least 1")
    v = ket_gamma(d)
    return MultipartiteOperator(np.outer(v, v.conj()), (d, d), labels)


def mes(d: int, labels: Sequence[str] | None = None) -> MultipartiteOperator:
    return umes(d, labels) / d


def hermitian_eigenvalues(op: MultipartiteOperator | np.ndarray,
                          tol: float = TOL.hermitian_tol) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian operator."""
    mat = op.entries if isinstance(op, MultipartiteOperator) else np.asarray(op, dtype=complex)
    defect = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    if defect > tol:
        raise NumericError(f"operator is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    vals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    return np.sort(vals)


@dataclass(frozen=True)
class ChoiOperator:
    """Choi operator of a map from subsystem ``input_index`` to ``output_indices``."""

    op: MultipartiteOperator
    input_index: int = 0
    output_indices: tuple[int, ...] = field(default=(1,))

    def __post_init__(self) -> None:
        outs = tuple(int(i) for i in self.output_indices)
        indices = [self.input_index, *outs]
        if len(set(indices)) != len(indices) or sorted(indices) != list(range(self.op.n_systems)):
            raise ArgumentError("input and outputs must partition the subsystems")
        object.__setattr__(self, "output_indices", outs)

    @classmethod
    def from_matrix(cls, entries: np.ndarray, d: int, n_outputs: int = 1) -> "ChoiOperator":
        dims = (d,) * (n_outputs + 1)
        labels = ("A",) + tuple(f"B{i + 1}" for i in range(n_outputs))
        return cls(MultipartiteOperator(entries, dims, labels), 0, tuple(range(1, n_outputs + 1)))

    @property
    def n_outputs(self) -> int:
        return len(self.output_indices)

    @property
    def d_in(self) -> int:
        return self.op.dims[self.input_index]

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    def canonical(self) -> "ChoiOperator":
        """Same map with the input first and outputs in their listed order."""
        order = [self.input_index, *self.output_indices]
        if order == list(range(self.op.n_systems)):
            return self
        op = permute_subsystems(self.op, order)
        return ChoiOperator(op, 0, tuple(range(1, len(order))))

    def input_marginal(self) -> MultipartiteOperator:
        """Tr over all outputs."""
        return partial_trace(self.op, self.output_indices)

    def trace_scale(self) -> float:
        """Scalar c with Tr_out J closest to c * identity."""
        return float(np.real(self.input_marginal().trace())) / self.d_in

    def tp_defect(self, scale: float | None = None) -> float:
        marg = self.input_marginal().entries
        c = self.trace_scale() if scale is None else scale
        return float(np.max(np.abs(marg - c * np.eye(self.d_in))))

    def is_tp(self, scale: float = 1.0, tol: float = TOL.hermitian_tol) -> bool:
        return self.tp_defect(scale) <= tol

    def is_proportional_tp(self, tol: float = TOL.hermitian_tol) -> bool:
        return self.tp_defect() <= tol

    def min_eigenvalue(self) -> float:
        return float(hermitian_eigenvalues(self.op, max(TOL.hermitian_tol, 1e-8))[0])

    def is_cp(self, tol: float = TOL.psd_tol) -> bool:
        return self.min_eigenvalue() >= -tol

    def marginal(self, receiver: int) -> "ChoiOperator":
        """Choi operator of the map to output ``receiver`` alone (others traced)."""
        if not 0 <= receiver < self.n_outputs:
            raise ArgumentError(f"receiver {receiver} out of range for {self.n_outputs} outputs")
        c = self.canonical()
        drop = [1 + i for i in range(c.n_outputs) if i != receiver]
        op = partial_trace(c.op, drop) if drop else c.op
        return ChoiOperator(op, 0, (1,))

    def __sub__(self, other: "ChoiOperator") -> "ChoiOperator":
        a, b = self.canonical(), other.canonical()
        diff = a.op - b.op
        return ChoiOperator(diff.with_labels(a.op.labels), 0, a.output_indices)

    def to_json(self) -> dict:
        return {"op": self.op.to_json(), "input_index": self.input_index,
                "output_indices": list(self.output_indices)}

    @classmethod
    def from_json(cls, data: dict) -> "ChoiOperator":
        if "op" not in data:
            # bare operator: input first, remaining systems are outputs
            op = MultipartiteOperator.from_json(data)
            return cls(op, 0, tuple(range(1, op.n_systems)))
        op = MultipartiteOperator.from_json(data["op"])
        return cls(op, int(data.get("input_index", 0)),
                   tuple(data.get("output_indices", range(1, op.n_systems))))


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> ChoiOperator:
    """J = sum_k (1 x K) Gamma (1 x K)^dagger."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    d_out, d_in = kraus[0].shape
    if d_out != d_in:
        raise ArgumentError("only equal input and output dimensions are supported")
    g = ket_gamma(d_in)
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in kraus:
        v = np.kron(np.eye(d_in), k) @ g
        j += np.outer(v, v.conj())
    return ChoiOperator.from_matrix(j, d_in, 1)


def identity_choi(d: int) -> ChoiOperator:
    return ChoiOperator(umes(d, ("A", "B1")), 0, (1,))


def depolarizing_choi(d: int, p: float) -> ChoiOperator:
    """(p/d) 1 + (1-p) Gamma; p may exceed 1 up to d^2/(d^2-1)."""
    if d < 2:
        raise ArgumentError("depolarizing channel needs d >= 2")
    p_max = d * d / (d * d - 1)
    if not (0.0 <= p <= p_max + 1e-15):
        raise ArgumentError(f"p={p} outside [0, {p_max}]")
    j = (p / d) * np.eye(d * d) + (1 - p) * umes(d).entries
    return ChoiOperator(MultipartiteOperator(j, (d, d), ("A", "B1")), 0, (1,))


def channel_fidelity(choi: ChoiOperator) -> float:
    """Tr[(J/d) phi+] for a single-output Choi operator."""
    if choi.n_outputs != 1:
        raise ArgumentError("channel fidelity needs exactly one output")
    c = choi.canonical()
    d = c.op.dims[0]
    if c.op.dims[1] != d:
        raise ArgumentError("input and output dimensions differ")
    val = np.trace(c.entries @ umes(d).entries) / (d * d)
    return float(np.real(val))


def broadcast_fidelity(choi: ChoiOperator, receiver: int) -> float:
    if choi.n_outputs < 2:
        raise ArgumentError("broadcast fidelity needs at least two outputs")
    return channel_fidelity(choi.marginal(receiver))


def average_broadcast_fidelity(choi: ChoiOperator) -> float:
    if choi.n_outputs < 2:
        raise ArgumentError("broadcast fidelity needs at least two outputs")
    return float(np.mean([broadcast_fidelity(choi, i) for i in range(choi.n_outputs)]))


def apply_channel(choi: ChoiOperator, rho: MultipartiteOperator | np.ndarray) -> MultipartiteOperator:
    """E(rho) = J * rho, output subsystems in order."""
    c = choi.canonical()
    rho_m = rho.entries if isinstance(rho, MultipartiteOperator) else np.asarray(rho, dtype=complex)
    d = c.op.dims[0]
    if rho_m.shape != (d, d):
        raise ArgumentError(f"state of shape {rho_m.shape} does not match input dimension {d}")
    dout = c.op.dim // d
    j = c.entries.reshape(d, dout, d, dout)
    out = np.einsum("st,sbtc->bc", rho_m, j)
    labels = None if c.op.labels is None else c.op.labels[1:]
    return MultipartiteOperator(out, c.op.dims[1:], labels)
