"""Acceptance checks shared by the ``verify`` command and the test suite."""

from __future__ import annotations

import inspect
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import analytic
from .optimizer import abc_dual_theta_search, solve_abc_sdp, solve_pbc_sdp
from .permutations import (
    channel_twirl,
    channel_twirl_depolarizing,
    haar_unitary,
    m_xy,
    m_xy_spectrum,
    mc_twirl,
    rng_from_seed,
    triple_twirl_exact,
    z_dense_spectrum,
    z_lambda_max,
)
from .sampling import ExperimentConfig, epsilon_delta_trial, identity_decomposition
from .tensor import ChoiOperator, MultipartiteOperator, choi_from_kraus

SUITES = ("closed-forms", "spectra", "twirl", "sdp", "sampling")


@dataclass
class CheckResult:
    criterion: int
    name: str
    suite: str
    measured: float
    tolerance: float
    passed: bool
    runtime: float = 0.0
    runtime_limit: float | None = None
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.criterion:>2} {self.name}: measured={self.measured:.3e} "
                f"tol={self.tolerance:.1e} runtime={self.runtime:.2f}s")

    def to_json(self) -> dict:
        return asdict(self)


def _timed(criterion: int, name: str, suite: str, limit: float, fn: Callable[[], tuple[float, float, bool, dict]]) -> CheckResult:
    start = time.perf_counter()
    measured, tol, ok, detail = fn()
    elapsed = time.perf_counter() - start
    return CheckResult(criterion, name, suite, float(measured), float(tol),
                       bool(ok and elapsed < limit), elapsed, limit, detail)


def random_channel(d: int, rng: np.random.Generator, n_kraus: int = 3) -> ChoiOperator:
    """Kraus operators cut from a Haar isometry (first d columns of a Haar unitary)."""
    u = haar_unitary(d * n_kraus, rng)
    iso = u[:, :d]
    return choi_from_kraus([iso[i * d:(i + 1) * d] for i in range(n_kraus)])


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return a + a.conj().T


def check_exact_overhead() -> CheckResult:
    def run():
        worst = max(abs(analytic.u2_closed(d, 0.0, 0.0) - (3 * d - 1) / (d + 1)) for d in range(2, 11))
        return worst, 1e-12, worst <= 1e-12, {}
    return _timed(1, "exact overhead (3d-1)/(d+1), d=2..10", "closed-forms", 1.0, run)


def check_form_equivalence() -> CheckResult:
    def run():
        worst = 0.0
        for d in (2, 3, 5, 10):
            grid = np.linspace(0.0, analytic.eps_max(d), 50)
            for e1 in grid:
                for e2 in grid:
                    worst = max(worst, abs(analytic.u2_closed(d, e1, e2) - analytic.u2_alternate(d, e1, e2)))
        return worst, 1e-12, worst <= 1e-12, {}
    return _timed(2, "closed forms agree on 50x50 grid, d in {2,3,5,10}", "closed-forms", 5.0, run)


def check_theta_search(seed: int = 0) -> CheckResult:
    def run():
        rng = rng_from_seed(seed)
        worst = 0.0
        for _ in range(200):
            d = int(rng.choice([2, 3, 5]))
            e1, e2 = rng.uniform(0.0, analytic.eps_max(d), 2)
            res = abc_dual_theta_search(d, e1, e2)
            worst = max(worst, abs(res.value - analytic.u2_closed(d, e1, e2)))
        return worst, 1e-8, worst <= 1e-8, {"seed": seed}
    return _timed(3, "theta-search matches closed form, 200 problems", "closed-forms", 10.0, run)


def check_sdp_oracle() -> CheckResult:
    def run():
        cases = {}
        for eps in ((0.0, 0.0), (0.1, 0.3), (0.25, 0.25)):
            val = solve_abc_sdp(2, eps).value
            cases[f"abc d=2 eps={eps}"] = abs(val - analytic.u2_closed(2, *eps))
        for n in (2, 3):
            for p in (0.5, 1.0):
                val = solve_pbc_sdp(2, n, p).value
                cases[f"pbc d=2 N={n} p={p}"] = abs(val - float(analytic.s_n_closed(2, n, p)))
        worst = max(cases.values())
        return worst, 1e-5, worst <= 1e-5, cases
    return _timed(4, "barrier SDP matches closed forms", "sdp", 120.0, run)


def check_spectra(seed: int = 0) -> CheckResult:
    def run():
        rng = rng_from_seed(seed)
        worst, zero_ok = 0.0, True
        for d in (2, 3):
            for _ in range(100):
                x, y = rng.uniform(-2.0, 2.0, 2)
                dense = np.linalg.eigvalsh(m_xy(x, y, d).entries)
                closed = m_xy_spectrum(x, y, d).eigenvalues()
                worst = max(worst, float(np.max(np.abs(np.sort(dense) - closed))))
                zero_ok &= int(np.sum(np.abs(dense) < 1e-8)) == d ** 3 - 2 * d
        z_worst = 0.0
        for d in (2, 3):
            for n in (2, 3):
                z_worst = max(z_worst, abs(z_dense_spectrum(d, n)[-1] - z_lambda_max(d, n)))
        measured = max(worst, z_worst)
        ok = worst <= 1e-10 and z_worst <= 1e-10 and zero_ok
        return measured, 1e-10, ok, {"m_xy": worst, "z": z_worst, "zero_multiplicity": zero_ok}
    return _timed(5, "M(x,y) and Z spectra vs dense eigensolver", "spectra", 30.0, run)


def check_no_go_constants() -> CheckResult:
    def run():
        bound = analytic.no_go_dimension_bound()
        n2 = analytic.n_prob(2, 2, 1)
        s6 = analytic.s_n_closed(2, 6, 1)
        ok = (abs(bound - 1.5224) <= 1e-4 and n2 == Fraction(25, 9) and n2 > 2
              and s6 * s6 == Fraction(289, 49) and s6 * s6 < 6)
        return abs(bound - 1.5224), 1e-4, ok, {"n_prob": str(n2), "s6_squared": str(s6 * s6)}
    return _timed(6, "no-go constants 1.5224, 25/9, 289/49", "closed-forms", 1.0, run)


def check_min_n() -> CheckResult:
    def run():
        got = {d: analytic.min_n_for_se(d, 1) for d in (2, 3, 4)}
        want = {2: 6, 3: 20, 4: 42}
        miss = sum(got[d] != want[d] for d in want)
        return float(miss), 0.0, miss == 0, {str(k): v for k, v in got.items()}
    return _timed(7, "min N for sample efficiency 6, 20, 42", "closed-forms", 1.0, run)


def check_twirl(seed: int = 0) -> CheckResult:
    def run():
        rng = rng_from_seed(seed)
        chan = 0.0
        for i in range(20):
            d = 2 if i % 2 == 0 else 3
            j = random_channel(d, rng)
            chan = max(chan, float(np.max(np.abs(channel_twirl(j).entries - channel_twirl_depolarizing(j).entries))))
        idem = 0.0
        for d in (2, 3):
            x = MultipartiteOperator(random_hermitian(d ** 3, rng), (d, d, d))
            once = triple_twirl_exact(x)
            idem = max(idem, float(np.max(np.abs(triple_twirl_exact(once).entries - once.entries))))
        x = MultipartiteOperator(random_hermitian(8, rng), (2, 2, 2))
        exact = triple_twirl_exact(x).entries
        errs = {}
        for n in (100, 10_000):
            errs[n] = float(np.mean([np.linalg.norm(mc_twirl(x, n, seed=seed + s).entries - exact)
                                     for s in range(5)]))
        ratio = errs[100] / errs[10_000]
        ok = chan <= 1e-10 and idem <= 1e-11 and errs[10_000] < errs[100] and 10 / 3 <= ratio <= 30
        return max(chan, idem), 1e-10, ok, {"channel": chan, "idempotence": idem,
                                            "mc_error_100": errs[100], "mc_error_10000": errs[10_000],
                                            "mc_ratio": ratio}
    return _timed(8, "channel twirl, idempotence, MC sqrt(n) scaling", "twirl", 60.0, run)


def check_epsilon_delta(seed: int = 0) -> CheckResult:
    def run():
        plus = np.full((2, 2), 0.5)
        z = np.diag([1.0, -1.0])
        n = analytic.virtual_samples(1.0, 2.0, 0.1, 0.05)
        cfg = ExperimentConfig(identity_decomposition(2), plus, z, shots=n, repetitions=200,
                               seed=seed, eps=0.1, delta=0.05)
        out = epsilon_delta_trial(cfg)
        bound = 0.05 + 3 * math.sqrt(0.05 * 0.95 / 200)
        rate = out["empirical_failure_rate"]
        return rate, bound, rate <= bound, {"shots": n, "seed": seed}
    return _timed(9, "epsilon-delta trial, identity op, R=200", "sampling", 60.0, run)


def check_se_spots() -> CheckResult:
    def run():
        a = analytic.se_abc(2, [0.0, 0.0])
        b = analytic.se_abc(2, [0.3, 0.3])
        u = analytic.u2_closed(2, 0.3, 0.3)
        ok = (not a) and b and u == 1.0
        return float(u), 0.0, ok, {"se_00": a, "se_03": b}
    return _timed(10, "SE spot checks d=2 at (0,0) and (0.3,0.3)", "closed-forms", 1.0, run)


CHECKS: dict[str, list[Callable[[], CheckResult]]] = {
    "closed-forms": [check_exact_overhead, check_form_equivalence, check_theta_search,
                     check_no_go_constants, check_min_n, check_se_spots],
    "spectra": [check_spectra],
    "twirl": [check_twirl],
    "sdp": [check_sdp_oracle],
    "sampling": [check_epsilon_delta],
}


def _call(fn: Callable[..., CheckResult], seed: int | None) -> CheckResult:
    if seed is not None and "seed" in inspect.signature(fn).parameters:
        return fn(seed=seed)
    return fn()


def run_suite(name: str, seed: int | None = None) -> list[CheckResult]:
    """Run one suite (or "all"); the seed only reaches checks that draw random numbers."""
    if name == "all":
        results = [_call(fn, seed) for suite in SUITES for fn in CHECKS[suite]]
        return sorted(results, key=lambda r: r.criterion)
    if name not in CHECKS:
        raise KeyError(name)
    return [_call(fn, seed) for fn in CHECKS[name]]
