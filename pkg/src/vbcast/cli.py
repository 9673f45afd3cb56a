"""Command-line interface: ``vbcast {overhead,region,min-n,verify,sample,witness}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analytic
from .acceptance import SUITES, run_suite
from .errors import ArgumentError, InvariantViolation, VbcastError
from .optimizer import abc_dual_theta_search, pbc_lp_solve, solve_abc_sdp, solve_pbc_sdp
from .sampling import config_from_json, run_config

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
CSV_HEADER = "# vbcast-region v1"
SDP_MAX_FACTORIAL = 120
SDP_MAX_DIM = 64


class UsageError(VbcastError):
    pass


def fmt(x: Any) -> str:
    """12 significant digits, locale independent."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return "none"
    return format(float(x), ".12g")


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def parse_grid(spec: str) -> np.ndarray:
    try:
        a, b, steps = spec.split(":")
        lo, hi, n = float(a), float(b), int(steps)
    except ValueError as exc:
        raise UsageError(f"grid must look like A:B:steps, got {spec!r}") from exc
    if n < 1 or hi < lo:
        raise UsageError(f"empty grid {spec!r}")
    return np.linspace(lo, hi, n)


def parse_int_range(spec: str) -> list[int]:
    try:
        if ":" in spec:
            a, b = spec.split(":")
            return list(range(int(a), int(b) + 1))
        return [int(spec)]
    except ValueError as exc:
        raise UsageError(f"integer range must look like A:B, got {spec!r}") from exc


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def _sdp_fits(d: int, n: int) -> bool:
    return math.factorial(n + 1) <= SDP_MAX_FACTORIAL and d ** (n + 1) <= SDP_MAX_DIM


def _abc_errors(args: argparse.Namespace) -> list[float]:
    n = args.n or 2
    if args.eps is not None:
        return [args.eps] * n
    _require(args, "eps1", "eps2")
    if args.n not in (None, 2):
        raise UsageError("--eps1/--eps2 describe two receivers; use --eps for N >= 3")
    return [args.eps1, args.eps2]


def cmd_overhead(args: argparse.Namespace) -> tuple[dict, int]:
    _require(args, "d")
    tol = args.tol
    out: dict[str, Any] = {"kind": args.kind, "d": args.d}
    checks: dict[str, float] = {}
    if args.kind == "exact":
        n = args.n or 2
        exact = analytic.v_n_exact(args.d, n)
        out.update(n=n, value=float(exact), exact=str(exact), method="closed_form")
        if args.verify:
            if n == 2:
                checks["theta_search"] = abs(abc_dual_theta_search(args.d, 0.0, 0.0, tol or 1e-10).value - float(exact))
            checks["lp_corner"] = abs(float(pbc_lp_solve(args.d, n, 1).value) - float(exact))
            if _sdp_fits(args.d, n):
                checks["sdp_oracle"] = abs(solve_pbc_sdp(args.d, n, 1.0, tol or 1e-8).value - float(exact))
    elif args.kind == "abc":
        errors = _abc_errors(args)
        out.update(n=len(errors), eps=errors)
        if len(errors) == 2:
            value = analytic.u2_closed(args.d, *errors)
            out.update(value=value, method="closed_form")
            if args.verify:
                checks["theta_search"] = abs(abc_dual_theta_search(args.d, *errors, tol or 1e-10).value - value)
                if _sdp_fits(args.d, 2):
                    checks["sdp_oracle"] = abs(solve_abc_sdp(args.d, errors, tol or 1e-8).value - value)
        else:
            if not _sdp_fits(args.d, len(errors)):
                raise ArgumentError("no closed form for N >= 3 and the SDP exceeds the size caps")
            value = solve_abc_sdp(args.d, errors, tol or 1e-8).value
            out.update(value=value, method="sdp_oracle")
        out["rate"] = analytic.rate_abc(args.d, errors, None if len(errors) == 2 else value)
        out["se"] = analytic.se_abc(args.d, errors, None if len(errors) == 2 else value)
    else:
        _require(args, "n", "p")
        p = Fraction(args.p).limit_denominator(10 ** 9) if args.p == round(args.p, 9) else args.p
        value = analytic.s_n_closed(args.d, args.n, p)
        out.update(n=args.n, p=args.p, value=float(value), exact=str(value), method="closed_form",
                   n_prob=float(analytic.n_prob(args.d, args.n, p)), se=analytic.se_pbc(args.d, args.n, p))
        if args.verify:
            checks["lp_corner"] = abs(float(pbc_lp_solve(args.d, args.n, p).value) - float(value))
            if _sdp_fits(args.d, args.n):
                checks["sdp_oracle"] = abs(solve_pbc_sdp(args.d, args.n, args.p, tol or 1e-8).value - float(value))
    code = EXIT_OK
    if args.verify:
        limit = 1e-5
        out["verify"] = checks
        out["max_deviation"] = max(checks.values()) if checks else 0.0
        out["verified"] = out["max_deviation"] <= limit
        code = EXIT_OK if out["verified"] else EXIT_VERIFY
    return out, code


def _abc_cell(d: int, n: int, errors: list[float], tol: float) -> tuple[float, float, bool]:
    if n == 2:
        value = analytic.u2_closed(d, *errors)
        return value, analytic.rate_abc(d, errors), analytic.se_abc(d, errors)
    value = solve_abc_sdp(d, errors, tol).value
    return value, analytic.rate_abc(d, errors, value), analytic.se_abc(d, errors, value)


def _map(fn, items: list, workers: int) -> list:
    # pool.map keeps input order, so the CSV does not depend on scheduling
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_region(args: argparse.Namespace) -> tuple[list[str], int]:
    _require(args, "d", "grid")
    d = args.d
    grid = parse_grid(args.grid)
    tol = args.tol or 1e-8
    lines = [CSV_HEADER]
    if args.kind == "abc":
        grid2 = parse_grid(args.grid2) if args.grid2 else grid
        if grid.min() < 0 or max(grid.max(), grid2.max()) > analytic.eps_max(d) + 1e-15:
            raise UsageError(f"errors must lie in [0, {analytic.eps_max(d)}]")
        lines.append("eps1,eps2,overhead,rate,se")
        cells = [(float(e1), float(e2)) for e1 in grid for e2 in grid2]
        results = _map(lambda c: _abc_cell(d, 2, list(c), tol), cells, args.workers)
        for (e1, e2), (v, r, se) in zip(cells, results):
            lines.append(",".join([fmt(e1), fmt(e2), fmt(v), fmt(r), fmt(se)]))
    elif args.kind == "abc-n":
        n = args.n or 3
        if not _sdp_fits(d, n):
            raise ArgumentError("SDP grid exceeds the size caps")
        if grid.min() < 0 or grid.max() > analytic.eps_max(d) + 1e-15:
            raise UsageError(f"errors must lie in [0, {analytic.eps_max(d)}]")
        lines.append("n,eps,overhead,rate,se")

        def cell(e: float) -> tuple[float, float, bool]:
            return _abc_cell(d, n, [float(e)] * n, tol)

        results = _map(cell, list(grid), args.workers)
        for e, (v, r, se) in zip(grid, results):
            lines.append(",".join([str(n), fmt(e), fmt(v), fmt(r), fmt(se)]))
    else:
        ns = parse_int_range(args.n_range or "2:10")
        if grid.min() <= 0 or grid.max() > 1:
            raise UsageError("success probabilities must lie in (0, 1]")
        lines.append("n,p,overhead,n_prob,se")
        for n in ns:
            for p in grid:
                v = analytic.s_n_closed(d, n, float(p))
                lines.append(",".join([str(n), fmt(p), fmt(v), fmt(analytic.n_prob(d, n, float(p))),
                                       fmt(analytic.se_pbc(d, n, float(p)))]))
    return lines, EXIT_OK


def cmd_min_n(args: argparse.Namespace) -> tuple[list[dict], int]:
    ds = parse_int_range(args.d_range or (str(args.d) if args.d else "2:4"))
    p: Any = 1 if args.p is None else args.p
    if p == 1:
        p = 1
    rows = [{"d": d, "min_n": analytic.min_n_for_se(d, p, args.cap)} for d in ds]
    return rows, EXIT_OK


def cmd_verify(args: argparse.Namespace) -> tuple[dict, int]:
    results = run_suite(args.suite, args.seed)
    report = {"suite": args.suite, "passed": all(r.passed for r in results),
              "checks": [r.to_json() for r in results]}
    return report, EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_sample(args: argparse.Namespace) -> tuple[dict, int]:
    path = Path(args.config)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    if args.seed is not None:
        data["seed"] = args.seed
    data.setdefault("seed", 0)
    try:
        cfg, options = config_from_json(data, path.parent)
    except ArgumentError as exc:
        raise UsageError(str(exc)) from exc
    out = run_config(cfg, options)
    out["seed"] = cfg.seed
    return out, EXIT_OK


def cmd_witness(args: argparse.Namespace) -> tuple[dict, int]:
    _require(args, "d")
    tol = args.tol or 1e-8
    if args.kind == "abc":
        errors = _abc_errors(args)
        res = solve_abc_sdp(args.d, errors, tol)
    else:
        _require(args, "n", "p")
        res = solve_pbc_sdp(args.d, args.n, args.p, tol)
    data = res.certificate.to_json()
    if args.out:
        Path(args.out).write_text(json.dumps(data))
        return {"written": args.out, "value": res.value}, EXIT_OK
    return data, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--tol", type=float, default=None, help="solver tolerance")

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--d", type=int)
    params.add_argument("--n", type=int)
    params.add_argument("--p", type=float)
    params.add_argument("--eps1", type=float)
    params.add_argument("--eps2", type=float)
    params.add_argument("--eps", type=float, help="uniform error for every receiver")

    parser = argparse.ArgumentParser(prog="vbcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("overhead", parents=[common, params], help="minimal sampling overhead")
    p.add_argument("kind", choices=["abc", "pbc", "exact"])
    p.add_argument("--verify", action="store_true", help="cross-check against numerical oracles")

    p = sub.add_parser("region", parents=[common, params], help="CSV sweep over a parameter grid")
    p.add_argument("kind", choices=["abc", "abc-n", "pbc"])
    p.add_argument("--grid", help="A:B:steps")
    p.add_argument("--grid2", help="second axis for abc (defaults to --grid)")
    p.add_argument("--n-range", help="receiver counts for pbc, A:B")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write CSV here instead of stdout")

    p = sub.add_parser("min-n", parents=[common, params], help="smallest N where PBC is sample efficient")
    p.add_argument("--d-range", help="A:B")
    p.add_argument("--cap", type=int, default=analytic.MIN_N_CAP)

    p = sub.add_parser("verify", parents=[common], help="run acceptance suites")
    p.add_argument("suite", choices=list(SUITES) + ["all"])

    p = sub.add_parser("sample", parents=[common], help="run a sampling experiment from a JSON config")
    p.add_argument("config")

    p = sub.add_parser("witness", parents=[common, params], help="solve a primal SDP and emit its witness")
    p.add_argument("kind", choices=["abc", "pbc"])
    p.add_argument("--out")
    return parser


def _emit_text(command: str, payload: Any) -> str:
    if command == "overhead":
        lines = [f"{fmt(payload['value'])}", f"method={payload['method']}"]
        for key in ("exact", "rate", "se", "n_prob"):
            if key in payload:
                val = payload[key]
                lines.append(f"{key}={val if isinstance(val, str) else fmt(val)}")
        if "verify" in payload:
            for name, dev in payload["verify"].items():
                lines.append(f"verify {name}: deviation={fmt(dev)}")
            lines.append(f"verified={fmt(payload['verified'])}")
        return "\n".join(lines)
    if command == "min-n":
        return "\n".join(["d,min_n"] + [f"{r['d']},{fmt(r['min_n'])}" for r in payload])
    if command == "verify":
        out = []
        for c in payload["checks"]:
            out.append(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['criterion']:>2} {c['name']}: "
                       f"measured={c['measured']:.3e} tol={c['tolerance']:.1e}")
        return "\n".join(out)
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"overhead": cmd_overhead, "region": cmd_region, "min-n": cmd_min_n,
                "verify": cmd_verify, "sample": cmd_sample, "witness": cmd_witness}
    try:
        payload, code = handlers[args.command](args)
    except UsageError as exc:
        print(f"vbcast: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArgumentError as exc:
        print(f"vbcast: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"vbcast: invariant violated: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except VbcastError as exc:
        print(f"vbcast: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "region" and args.json:
        header = payload[1].split(",")
        rows = [dict(zip(header, line.split(","))) for line in payload[2:]]
        payload = {"schema": CSV_HEADER[2:], "columns": header, "rows": rows}
        text = json.dumps(payload, indent=2) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return code
    if args.command == "region":
        text = "\n".join(payload) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return code
    if args.command == "verify":
        # human summary on stderr, JSON report on stdout
        print(_emit_text("verify", payload), file=sys.stderr)
        print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    elif args.json and args.command not in ("sample", "witness"):
        print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    else:
        print(_emit_text(args.command, payload))
    return code


if __name__ == "__main__":
    sys.exit(main())
