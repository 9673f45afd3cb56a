"""Monte-Carlo simulation of virtual operations a E1 - b E2.

Each shot runs E1 with probability a/(a+b) (otherwise E2), measures the
observable on the exact output state, and records the eigenvalue times
+(a+b) or -(a+b). Shots are drawn in aggregate (binomial branch counts,
multinomial outcome counts), which has the same law as shot-by-shot sampling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import analytic
from .config import TOL
from .errors import ArgumentError, InvariantViolation
from .optimizer import SdpWitness
from .tensor import (
    ChoiOperator,
    MultipartiteOperator,
    apply_channel,
    depolarizing_choi,
    hermitian_eigenvalues,
    identity_choi,
    partial_trace,
    umes,
)

STATE_TOL = 1e-7


@dataclass(frozen=True)
class VirtualDecomposition:
    """Weights a, b and operators J1, J2 with Tr_out J1 = a 1 and Tr_out J2 = b 1.

    With ``probabilistic`` set, J1 and J2 are subchannel Choi operators
    satisfying Tr_out J1 <= a 1, Tr_out J2 <= b 1 and a - b <= 1.
    """

    a: float
    b: float
    choi1: ChoiOperator
    choi2: ChoiOperator | None = None
    probabilistic: bool = False

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0 or self.a + self.b <= 0:
            raise ArgumentError("weights must be nonnegative with a + b > 0")
        if self.choi2 is None and self.b > 0:
            raise ArgumentError("b > 0 needs a second Choi operator")
        for j, w in ((self.choi1, self.a), (self.choi2, self.b)):
            if j is None:
                continue
            if not j.is_cp(TOL.psd_tol * max(1.0, w)):
                raise ArgumentError(f"Choi operator is not CP (min eigenvalue {j.min_eigenvalue():.3e})")
            marg = j.input_marginal().entries
            if self.probabilistic:
                slack = np.linalg.eigvalsh(w * np.eye(j.d_in) - 0.5 * (marg + marg.conj().T))
                if slack[0] < -STATE_TOL:
                    raise ArgumentError("subchannel trace exceeds its weight")
            elif np.max(np.abs(marg - w * np.eye(j.d_in))) > STATE_TOL * max(1.0, w):
                raise ArgumentError("Choi operator trace does not match its weight")
        if self.probabilistic and self.tp_defect > 1 + STATE_TOL:
            raise ArgumentError("probabilistic decompositions need a - b <= 1")
        if not self.probabilistic and abs(self.tp_defect - 1) > STATE_TOL:
            raise ArgumentError("deterministic decompositions need a - b = 1")
        if self.choi2 is not None and self.choi2.op.dims != self.choi1.op.dims:
            raise ArgumentError("J1 and J2 act on different spaces")

    @property
    def tp_defect(self) -> float:
        return self.a - self.b

    @property
    def overhead(self) -> float:
        return self.a + self.b

    @property
    def d(self) -> int:
        return self.choi1.d_in

    @property
    def n_outputs(self) -> int:
        return self.choi1.n_outputs

    def virtual_choi(self) -> np.ndarray:
        j = self.choi1.canonical().entries
        if self.choi2 is not None:
            j = j - self.choi2.canonical().entries
        return j

    @classmethod
    def from_witness(cls, w: SdpWitness) -> "VirtualDecomposition":
        return cls(w.a, w.b, w.j1, w.j2, probabilistic=(w.kind == "pbc"))


def identity_decomposition(d: int = 2) -> VirtualDecomposition:
    return VirtualDecomposition(1.0, 0.0, identity_choi(d))


def depolarizing_pair(d: int, a: float, b: float, p1: float, p2: float) -> VirtualDecomposition:
    """a D_{p1} - b D_{p2}; a - b must be 1."""
    j1 = ChoiOperator(depolarizing_choi(d, p1).op * a, 0, (1,))
    j2 = ChoiOperator(depolarizing_choi(d, p2).op * b, 0, (1,))
    return VirtualDecomposition(a, b, j1, j2)


def depolarizing_success(d: int, p: float) -> VirtualDecomposition:
    """Subchannel with Choi p Gamma: identity on success, failure with probability 1 - p."""
    j = ChoiOperator(umes(d, ("A", "B1")) * p, 0, (1,))
    return VirtualDecomposition(1.0, 0.0, j, None, probabilistic=True)


@dataclass
class ExperimentConfig:
    decomposition: VirtualDecomposition
    rho: np.ndarray
    observable: np.ndarray
    shots: int | None = None
    repetitions: int = 200
    seed: int = 0
    eps: float = 0.1
    delta: float = 0.05
    receiver: int | None = None  # observable acts on this output only

    def __post_init__(self) -> None:
        self.rho = np.asarray(self.rho, dtype=complex)
        self.observable = np.asarray(self.observable, dtype=complex)
        d = self.decomposition.d
        if self.rho.shape != (d, d):
            raise ArgumentError("input state has the wrong dimension")
        o = self.observable
        if o.ndim != 2 or o.shape[0] != o.shape[1]:
            raise ArgumentError("observable must be a square matrix")
        if np.max(np.abs(o - o.conj().T)) > TOL.hermitian_tol:
            raise ArgumentError("observable must be Hermitian")
        if abs(np.trace(o)) > 1e-9:
            raise ArgumentError("observable must be traceless")
        expected = d if self.receiver is not None else d ** self.decomposition.n_outputs
        if o.shape[0] != expected:
            raise ArgumentError(f"observable dimension {o.shape[0]} != {expected}")
        if self.receiver is not None and not 0 <= self.receiver < self.decomposition.n_outputs:
            raise ArgumentError("receiver index out of range")
        if self.shots is not None and self.shots < 1:
            raise ArgumentError("shots must be at least 1")
        if self.repetitions < 1:
            raise ArgumentError("repetitions must be at least 1")

    @property
    def outcome_range(self) -> float:
        vals = hermitian_eigenvalues(self.observable)
        return float(vals[-1] - vals[0])


@dataclass
class ExperimentReport:
    means: list[float]
    truth: float
    failures: int
    repetitions: int
    shots: int
    eps: float
    delta: float
    c_effective: float
    seed: int
    variances: list[float] = field(default_factory=list)
    success_frequency: float | None = None
    failure_slack: float = 0.0

    @property
    def failure_rate(self) -> float:
        return self.failures / self.repetitions

    @property
    def passed(self) -> bool:
        return self.failure_rate <= self.delta + self.failure_slack

    def to_json(self) -> dict:
        return {
            "seed": self.seed, "shots": self.shots, "repetitions": self.repetitions,
            "eps": self.eps, "delta": self.delta, "truth": self.truth,
            "failures": self.failures, "failure_rate": self.failure_rate,
            "failure_slack": self.failure_slack, "pass": self.passed,
            "c_effective": self.c_effective, "success_frequency": self.success_frequency,
            "means": self.means, "variances": self.variances,
        }


def binomial_slack(delta: float, repetitions: int) -> float:
    return 3 * math.sqrt(delta * (1 - delta) / repetitions)


def _output_state(j: ChoiOperator, rho: np.ndarray, receiver: int | None) -> np.ndarray:
    out = apply_channel(j, rho)
    if receiver is not None and out.n_systems > 1:
        drop = [i for i in range(out.n_systems) if i != receiver]
        out = partial_trace(out, drop)
    return out.entries


def _outcome_probs(state: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    probs = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), state, vecs))
    return np.clip(probs, 0.0, None)


def _branch_tables(config: ExperimentConfig) -> tuple[np.ndarray, list[np.ndarray], list[float]]:
    """Eigenvalues plus per-branch outcome distributions (with failure mass last)."""
    dec = config.decomposition
    vals, vecs = np.linalg.eigh(0.5 * (config.observable + config.observable.conj().T))
    tables, weights = [], []
    for j, w in ((dec.choi1, dec.a), (dec.choi2, dec.b)):
        if j is None or w == 0:
            tables.append(np.concatenate([np.zeros_like(vals), [1.0]]))
            weights.append(0.0)
            continue
        probs = _outcome_probs(_output_state(j, config.rho, config.receiver) / w, vecs)
        total = probs.sum()
        if dec.probabilistic:
            # probs sum to the success probability of this subchannel
            fail = max(0.0, 1.0 - total)
            probs = np.concatenate([probs, [fail]])
        else:
            probs = np.concatenate([probs, [0.0]])
        tables.append(probs / probs.sum())
        weights.append(w)
    return vals, tables, weights


def _truth(config: ExperimentConfig) -> float:
    dec = config.decomposition
    out = _output_state(dec.choi1, config.rho, config.receiver)
    if dec.choi2 is not None:
        out = out - _output_state(dec.choi2, config.rho, config.receiver)
    return float(np.real(np.trace(out @ config.observable)))


def _run(config: ExperimentConfig, shots: int, scale: float) -> tuple[list[float], list[float], float]:
    dec = config.decomposition
    vals, tables, weights = _branch_tables(config)
    outcomes = np.concatenate([vals, [0.0]])  # failure label is 0
    total = dec.a + dec.b
    p1 = dec.a / total
    children = np.random.SeedSequence(int(config.seed)).spawn(config.repetitions)
    means, variances = [], []
    successes = 0
    for child in children:
        gen = np.random.Generator(np.random.Philox(child))
        n1 = int(gen.binomial(shots, p1))
        c1 = gen.multinomial(n1, tables[0])
        c2 = gen.multinomial(shots - n1, tables[1])
        signed = c1 - c2
        s1 = total * float(signed @ outcomes) / scale
        s2 = total * total * float((c1 + c2) @ outcomes ** 2) / scale ** 2
        mean = s1 / shots
        means.append(mean)
        variances.append(max(0.0, s2 / shots - mean * mean) * shots / max(shots - 1, 1))
        successes += shots - int(c1[-1] + c2[-1])
    return means, variances, successes / (shots * config.repetitions)


def _default_shots(config: ExperimentConfig, p: float | None = None) -> int:
    if config.shots is not None:
        return config.shots
    c = config.outcome_range
    if c == 0:
        return 1
    overhead = config.decomposition.overhead
    if p is None:
        return analytic.virtual_samples(overhead, c, config.eps, config.delta)
    return analytic.probabilistic_samples(overhead, p, c, config.eps, config.delta)


def simulate_estimate(config: ExperimentConfig) -> ExperimentReport:
    return _report(config, _default_shots(config), 1.0)


def _report(config: ExperimentConfig, shots: int, p: float) -> ExperimentReport:
    means, variances, success = _run(config, shots, p)
    truth = _truth(config) / p
    failures = int(sum(abs(m - truth) >= config.eps for m in means))
    dec = config.decomposition
    return ExperimentReport(
        means=means, truth=truth, failures=failures, repetitions=config.repetitions, shots=shots,
        eps=config.eps, delta=config.delta, c_effective=dec.overhead * config.outcome_range / p,
        seed=config.seed, variances=variances,
        success_frequency=success if dec.probabilistic else None,
        failure_slack=binomial_slack(config.delta, config.repetitions),
    )


def epsilon_delta_trial(config: ExperimentConfig) -> dict[str, Any]:
    """Failure rate of the estimator at the Hoeffding shot count (or ``config.shots``)."""
    shots = _default_shots(config)
    report = _report(config, shots, 1.0)
    return {
        "empirical_failure_rate": report.failure_rate,
        "hoeffding_n_used": shots,
        "pass": report.passed,
        "slack": report.failure_slack,
        "report": report,
    }


def check_success_invariance(dec: VirtualDecomposition, p: float, tol: float = 1e-6) -> float:
    """Every receiver's marginal of J1 - J2 must be p Gamma: success probability p, independent of input."""
    j = ChoiOperator.from_matrix(dec.virtual_choi(), dec.d, dec.n_outputs)
    target = p * umes(dec.d).entries
    worst = 0.0
    for i in range(dec.n_outputs):
        marg = j.marginal(i).entries if dec.n_outputs > 1 else j.entries
        worst = max(worst, float(np.max(np.abs(marg - target))))
    if worst > tol:
        raise InvariantViolation(f"success probability depends on the input or receiver (defect {worst:.3e})")
    return worst


def probabilistic_estimate(config: ExperimentConfig, p: float) -> ExperimentReport:
    """Failures count as 0 and the mean is divided by p."""
    if not p > 0:
        raise ArgumentError("success probability must be positive")
    dec = config.decomposition
    if dec.probabilistic:
        check_success_invariance(dec, p)
    shots = _default_shots(config, min(p, 1.0))
    return _report(config, shots, p)


def estimate_broadcast_fidelity(dec: VirtualDecomposition, receiver: int, shots: int, seed: int = 0) -> float:
    """Sample the projector onto phi+ on (reference, receiver) after the virtual map."""
    if dec.n_outputs < 2:
        raise ArgumentError("broadcast fidelity needs a decomposition with two or more outputs")
    if shots < 1:
        raise ArgumentError("shots must be at least 1")
    d = dec.d
    g = umes(d).entries
    probs = []
    for j, w in ((dec.choi1, dec.a), (dec.choi2, dec.b)):
        if j is None or w == 0:
            probs.append(0.0)
            continue
        marg = j.marginal(receiver).entries
        # (id x E_i)(phi+) = J_i / (w d); <phi+| . |phi+> = Tr[J_i Gamma] / (w d^2)
        probs.append(float(np.clip(np.real(np.trace(marg @ g)) / (w * d * d), 0.0, 1.0)))
    gen = np.random.Generator(np.random.Philox(int(seed)))
    total = dec.a + dec.b
    n1 = int(gen.binomial(shots, dec.a / total))
    k1 = int(gen.binomial(n1, probs[0]))
    k2 = int(gen.binomial(shots - n1, probs[1]))
    return total * (k1 - k2) / shots


# config files


_PAULI = {
    "I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1.0, -1.0]),
}
_STATES = {
    "zero": np.diag([1.0, 0.0]), "one": np.diag([0.0, 1.0]),
    "plus": np.full((2, 2), 0.5), "minus": np.array([[0.5, -0.5], [-0.5, 0.5]]),
}


def _matrix(spec: Any, names: dict) -> np.ndarray:
    if isinstance(spec, str):
        mat = np.array([[1.0]])
        for ch in spec.split("x") if "x" in spec else [spec]:
            if ch not in names:
                raise ArgumentError(f"unknown name {ch!r}")
            mat = np.kron(mat, names[ch])
        return mat
    if isinstance(spec, dict):
        return np.asarray(spec["re"], dtype=float) + 1j * np.asarray(spec.get("im", 0.0), dtype=float)
    return np.asarray(spec, dtype=complex)


def decomposition_from_json(spec: dict, base: Path | None = None) -> VirtualDecomposition:
    kind = spec.get("kind")
    if kind == "identity":
        return identity_decomposition(int(spec.get("d", 2)))
    if kind == "depolarizing_pair":
        return depolarizing_pair(int(spec.get("d", 2)), float(spec["a"]), float(spec["b"]),
                                 float(spec["p1"]), float(spec["p2"]))
    if kind == "depolarizing_success":
        return depolarizing_success(int(spec.get("d", 2)), float(spec["p"]))
    if kind == "witness":
        if "witness" in spec:
            data = spec["witness"]
        else:
            path = Path(spec["path"])
            if base is not None and not path.is_absolute():
                path = base / path
            data = json.loads(path.read_text())
        return VirtualDecomposition.from_witness(SdpWitness.from_json(data))
    raise ArgumentError(f"unknown decomposition kind {kind!r}")


def config_from_json(data: dict, base: Path | None = None) -> tuple[ExperimentConfig, dict]:
    """Build a config; the second value carries run options (mode, p)."""
    try:
        dec = decomposition_from_json(data["decomposition"], base)
        cfg = ExperimentConfig(
            decomposition=dec,
            rho=_matrix(data.get("rho", "zero"), _STATES),
            observable=_matrix(data.get("observable", "Z"), _PAULI),
            shots=data.get("shots"),
            repetitions=int(data.get("repetitions", 200)),
            seed=int(data.get("seed", 0)),
            eps=float(data.get("eps", 0.1)),
            delta=float(data.get("delta", 0.05)),
            receiver=data.get("receiver"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ArgumentError):
            raise
        raise ArgumentError(f"malformed experiment config: {exc}") from exc
    options = {"mode": data.get("mode", "trial"), "p": data.get("p")}
    return cfg, options


def run_config(cfg: ExperimentConfig, options: dict) -> dict:
    mode = options.get("mode", "trial")
    if mode == "trial":
        out = epsilon_delta_trial(cfg)
        report = out.pop("report")
        return {"mode": mode, **out, "report": report.to_json()}
    if mode == "estimate":
        return {"mode": mode, "report": simulate_estimate(cfg).to_json()}
    if mode == "probabilistic":
        p = options.get("p")
        if p is None:
            raise ArgumentError("probabilistic mode needs p")
        return {"mode": mode, "report": probabilistic_estimate(cfg, float(p)).to_json()}
    raise ArgumentError(f"unknown mode {mode!r}")
