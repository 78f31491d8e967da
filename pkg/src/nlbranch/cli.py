"""Command-line front end.

Subcommands: classify | simulate | passage | sweep | selftest.
Exit codes are a stable contract: 0 success, 1 configuration error,
2 numeric failure, 3 self-test failure.
"""

import argparse
import csv
import json
import os
import sys
import time
from typing import Dict, List, Optional

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, config_echo, parse_config
from .criteria import (
    classify,
    k_integral_bounds,
    ln_test_function,
    apply_generator,
    phi,
    stable_k_integral,
)
from .model import (
    ModelSpec,
    PowerLaw,
    StableMeasure,
    ValidationError,
    validate,
)
from .montecarlo import SWEEP_COLUMNS, estimate_passage_prob, sweep
from .numerics import RngStream, StreamBundle, gamma
from .numerics.quadrature import QuadratureError, integrate_semiinfinite, integrate_truncated
from .simulator import trace_path

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_SELFTEST = 3


def _versions() -> Dict[str, str]:
    return {"nlbranch": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__, "python": sys.version.split()[0]}


def _report(command: str, config: Optional[Dict], results,
            started: float) -> Dict:
    return {
        "command": command,
        "config": config,
        "results": results,
        "versions": _versions(),
        "wall_clock_s": time.monotonic() - started,
    }


def _emit(report: Dict, out_path: Optional[str]) -> None:
    text = json.dumps(report, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _resolve_threads(args, rc: RunConfig) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get("NLBRANCH_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("env", "NLBRANCH_THREADS",
                              f"not an integer: {env!r}")
    return max(1, rc.threads)


def _load(args) -> RunConfig:
    rc = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        rc.seed = args.seed
    if getattr(args, "out", None):
        rc.output_path = args.out
    if getattr(args, "format", None):
        rc.output_format = args.format
    return rc


# ---------------------------------------------------------------------------
# subcommands


def cmd_classify(args) -> int:
    started = time.monotonic()
    rc = _load(args)
    report = classify(rc.model, rc.criteria)
    _emit(_report("classify", config_echo(rc), report.to_dict(), started),
          rc.output_path)
    return EXIT_OK


def cmd_passage(args) -> int:
    started = time.monotonic()
    rc = _load(args)
    threads = _resolve_threads(args, rc)
    est = estimate_passage_prob(rc.model, rc.sim, x0=args.x0, a=args.a,
                                t=args.t, n_paths=rc.n_paths, seed=rc.seed,
                                threads=threads)
    results = {
        "p_hat": est.p_hat,
        "ci95_low": est.ci95_low,
        "ci95_high": est.ci95_high,
        "n_paths": est.n_paths,
        "query": {"x0": est.x0, "a": est.a, "t": est.t},
        "note": "grid-time crossings; cap hits count as non-crossings",
    }
    _emit(_report("passage", config_echo(rc), results, started),
          rc.output_path)
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.monotonic()
    rc = _load(args)
    rng = RngStream(rc.seed, stream_id=0)
    ts, xs = trace_path(rc.model, rc.sim, args.x0, rng)
    if rc.output_format == "csv":
        target = rc.output_path
        rows = [f"{float(t)!r},{float(x)!r}" for t, x in zip(ts, xs)]
        text = "t,x\n" + "\n".join(rows) + "\n"
        if target:
            with open(target, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        results = {"trace": [[float(t), float(x)] for t, x in zip(ts, xs)],
                   "points": int(len(ts))}
        _emit(_report("simulate", config_echo(rc), results, started),
              rc.output_path)
    return EXIT_OK


def _read_grid(path: str) -> List[Dict[str, float]]:
    grid = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigError("grid", "", f"{path}: empty grid file")
        for row in reader:
            point = {}
            for key, raw in row.items():
                if raw is None or raw.strip() == "":
                    continue
                try:
                    point[key.strip()] = float(raw)
                except ValueError:
                    raise ConfigError("grid", key,
                                      f"not a number: {raw!r}")
            grid.append(point)
    return grid


def _sweep_csv(rows, n_paths: int, seed: int) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(row.csv_values(n_paths, seed)))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    started = time.monotonic()
    rc = _load(args)
    threads = _resolve_threads(args, rc)
    grid = _read_grid(args.grid)
    template = {
        "b0": 1.0, "r0": 1.0, "b1": 0.0, "r1": 0.0, "b2": 0.0, "r2": 0.0,
        "alpha": rc.model.alpha, "x0": 100.0, "a": 1.0, "t": 1.0,
    }
    m = rc.model_params
    if m["a0"]["type"] == "powerlaw":
        template.update(b0=m["a0"]["b"], r0=m["a0"]["r"])
    if m["a1"]["type"] == "powerlaw":
        template.update(b1=m["a1"]["b"], r1=m["a1"]["r"])
    if m["a2"]["type"] == "powerlaw":
        template.update(b2=m["a2"]["b"], r2=m["a2"]["r"])
    rows = sweep(template, grid, rc.sim, n_paths=rc.n_paths, seed=rc.seed,
                 threads=threads, criteria_cfg=rc.criteria)
    if rc.output_format == "csv":
        text = _sweep_csv(rows, rc.n_paths, rc.seed)
        if rc.output_path:
            with open(rc.output_path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        results = [dict(zip(SWEEP_COLUMNS, row.csv_values(rc.n_paths, rc.seed)))
                   for row in rows]
        _emit(_report("sweep", config_echo(rc), results, started),
              rc.output_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# self-test battery


def _check_stable_identity() -> Dict:
    """Quadrature of the quadratic jump moment against gamma(a) u^-a."""
    worst = 0.0
    detail = []
    for alpha, tol in [(1.1, 1e-8), (1.5, 1e-8), (1.9, 1e-8),
                       (1.01, 1e-6), (1.99, 1e-6)]:
        c = StableMeasure(alpha=alpha).c_alpha()
        for u in (1.0, 10.0, 1e3):
            def f(z):
                z = np.atleast_1d(z)
                inner = np.array([
                    integrate_truncated(
                        lambda v: (u + v * zz) ** -2 * (1.0 - v),
                        upper=1.0, tol=1e-12).value
                    for zz in z
                ])
                return c * z ** (1.0 - alpha) * inner

            got = integrate_semiinfinite(f, 1e-10, head_power=1.0 - alpha,
                                         tail_power=-alpha).value
            ref = gamma(alpha) * u ** -alpha
            rel = abs(got - ref) / ref
            worst = max(worst, rel / tol)
            detail.append(f"alpha={alpha} u={u}: rel={rel:.2e} (tol {tol})")
    return {"name": "stable_integral_identity", "passed": bool(worst <= 1.0),
            "detail": "; ".join(detail)}


def _check_k_sandwich() -> Dict:
    ok = True
    detail = []
    for alpha in (1.2, 1.5, 1.8):
        model = validate(ModelSpec(
            a0=PowerLaw(1.0, 1.0), a1=PowerLaw(0.0, 0.0),
            a2=PowerLaw(1.0, 0.0), a3=PowerLaw(0.0, 0.0),
            mu=StableMeasure(alpha=alpha)))
        for u in (10.0, 100.0, 1e4):
            for rho in (0.5, 1.0, 2.0):
                ki = stable_k_integral(model, u, rho, 1e-10)
                lo, up = k_integral_bounds(u, rho, alpha, model.c_alpha)
                good = lo <= ki <= up
                ok = ok and good
                if not good:
                    detail.append(
                        f"alpha={alpha} u={u} rho={rho}: {lo:.3e} "
                        f"<= {ki:.3e} <= {up:.3e} FAILS")
    return {"name": "k_integral_sandwich", "passed": bool(ok),
            "detail": "; ".join(detail) or "27 combinations inside bounds"}


def _check_generator_consistency() -> Dict:
    g_15 = gamma(1.5)
    families = {
        "diffusion_critical": dict(b0=1.0, r0=1.0, b1=2.0, r1=2.0,
                                   b2=0.0, r2=0.0),
        "jump_critical": dict(b0=g_15, r0=1.0, b1=0.0, r1=0.0,
                              b2=1.0, r2=1.5),
        "mixed_critical": dict(b0=0.5 + 0.5 * g_15, r0=1.0, b1=1.0, r1=2.0,
                               b2=0.5, r2=1.5),
    }
    ok = True
    detail = []
    g = ln_test_function()
    for name, p in families.items():
        model = validate(ModelSpec(
            a0=PowerLaw(p["b0"], p["r0"]), a1=PowerLaw(p["b1"], p["r1"]),
            a2=PowerLaw(p["b2"], p["r2"]), a3=PowerLaw(0.0, 0.0),
            mu=StableMeasure(alpha=1.5)))
        for u in (5.0, 100.0, 1e6):
            lg = apply_generator(model, g, u, 1e-10)
            ph = phi(model, u)
            err = abs(lg + ph)
            good = err <= 1e-8 * (1.0 + abs(ph))
            ok = ok and good
            detail.append(f"{name} u={u}: |L(ln)+phi|={err:.2e}"
                          + ("" if good else " FAILS"))
    return {"name": "generator_consistency", "passed": bool(ok),
            "detail": "; ".join(detail)}


def _check_rng_determinism() -> Dict:
    ok = True
    detail = []
    s1 = RngStream(99, stream_id=3)
    s2 = RngStream(99, stream_id=3)
    seq1 = [s1.next_uniform() for _ in range(128)]
    seq2 = [s2.next_uniform() for _ in range(128)]
    if seq1 != seq2:
        ok = False
        detail.append("repeat run differs")
    bundle = StreamBundle(99, np.arange(4, dtype=np.uint64))
    block = np.array([bundle.uniforms() for _ in range(16)])
    for col, sid in enumerate(range(4)):
        ref = RngStream(99, stream_id=sid)
        vals = np.array([ref.next_uniform() for _ in range(16)])
        if not np.array_equal(block[:, col], vals):
            ok = False
            detail.append(f"bundle lane {sid} differs from scalar stream")
    means = block.mean(axis=0)
    if np.any(means < 0.15) or np.any(means > 0.85):
        ok = False
        detail.append("lane means far from 1/2")
    return {"name": "rng_determinism", "passed": bool(ok),
            "detail": "; ".join(detail) or
            "scalar/vector agree bitwise; repeat runs identical"}


def run_selftest() -> List[Dict]:
    return [
        _check_stable_identity(),
        _check_k_sandwich(),
        _check_generator_consistency(),
        _check_rng_determinism(),
    ]


def cmd_selftest(args) -> int:
    started = time.monotonic()
    checks = run_selftest()
    for chk in checks:
        status = "PASS" if chk["passed"] else "FAIL"
        print(f"[selftest] {chk['name']}: {status}", file=sys.stderr)
    report = _report("selftest", None, checks, started)
    _emit(report, getattr(args, "out", None))
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_SELFTEST


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlbranch",
        description="Boundary-behavior classification and Monte Carlo "
                    "verification for state-dependent branching models.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run file (INI)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (fallback: NLBRANCH_THREADS)")
        p.add_argument("--out", default=None, help="output path")
        p.add_argument("--format", choices=("json", "csv"), default=None)

    p = sub.add_parser("classify", help="boundary-behavior verdicts")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="one path trace")
    common(p)
    p.add_argument("--x0", type=float, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("passage", help="passage probability estimate")
    common(p)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_passage)

    p = sub.add_parser("sweep", help="phase-diagram sweep from a grid CSV")
    common(p)
    p.add_argument("--grid", required=True, help="CSV of parameter overrides")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the numeric invariant battery")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
