"""Command-line entry point.

One config file per invocation; flags are limited to command selection, the
output directory, and verbosity, so experiment provenance lives in
versionable config files. COGNIQ_THREADS caps the worker count (0 = auto).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .dynamics import (
    ConvergenceError,
    MeanField,
    Region,
    g,
    lyapunov,
    rescale_rewards_below,
    solve_stationary,
)
from .game import RewardMatrix
from .harness import (
    config_from_dict,
    delay_cdf,
    run_once,
    sweep,
    write_delay_cdf_csv,
)
from .learner import QState
from .ode import OdeConfig, integrate, write_ode_trace_csv


def _workers_from_env() -> int:
    raw = os.environ.get("COGNIQ_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"COGNIQ_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ValueError(f"COGNIQ_THREADS must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def _load_json(path) -> dict:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc


def _pop_keys(doc: dict, keys: dict) -> dict:
    """Extract CLI-level keys (with defaults) from a config document."""
    out = {}
    for key, default in keys.items():
        out[key] = doc.pop(key, default)
    return out


def _mean_field_from(doc: dict, extra_keys: dict) -> tuple[MeanField, dict]:
    extras = _pop_keys(doc, extra_keys)
    allowed = {"r_a1", "r_a2", "r_b1", "r_b2", "gamma"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    missing = sorted(allowed - set(doc))
    if missing:
        raise ValueError(f"missing config key(s): {', '.join(missing)}")
    mf = MeanField(
        RewardMatrix(float(doc["r_a1"]), float(doc["r_a2"]),
                     float(doc["r_b1"]), float(doc["r_b2"])),
        float(doc["gamma"]),
    )
    return mf, extras


def _qstate(values, name="q0") -> QState:
    if values is None or len(values) != 4:
        raise ValueError(f"{name} must hold 4 values (q_a1, q_a2, q_b1, q_b2)")
    return QState(*(float(x) for x in values))


def _say(quiet, *parts):
    if not quiet:
        print(*parts)


def cmd_simulate(args) -> int:
    doc = _load_json(args.config)
    extras = _pop_keys(doc, {"save_runs": None})
    cfg = config_from_dict(doc)
    workers = _workers_from_env()
    save_runs = cfg.num_runs if extras["save_runs"] is None else int(extras["save_runs"])
    os.makedirs(args.out, exist_ok=True)

    def job(i):
        return run_once(cfg, i, keep_trajectory=(i < save_runs))

    if workers <= 1:
        results = [job(i) for i in range(cfg.num_runs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(cfg.num_runs)))

    for r in results:
        if r.trajectory is not None:
            r.trajectory.to_csv(os.path.join(args.out, f"run_{r.run_index:04d}.csv"))
    cdf = delay_cdf(results)
    write_delay_cdf_csv(os.path.join(args.out, "delay_cdf.csv"), cdf)

    region_counts = {reg.value: 0 for reg in Region}
    for r in results:
        region_counts[r.terminal_region.value] += 1
    summary = {
        "num_runs": cfg.num_runs,
        "horizon": cfg.horizon,
        "completed": int(cdf.num_runs * (1.0 - cdf.censored_fraction) + 0.5),
        "censored_fraction": cdf.censored_fraction,
        "delay_median": cdf.median(),
        "delay_mean": cdf.mean(),
        "terminal_regions": region_counts,
        "mean_collisions": float(np.mean([r.collision_count for r in results])),
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _say(args.quiet, f"simulate: {cfg.num_runs} runs, "
         f"median delay {summary['delay_median']}, "
         f"censored {cdf.censored_fraction:.3f}")
    return 0


def cmd_sweep(args) -> int:
    doc = _load_json(args.config)
    extras = _pop_keys(doc, {"alpha0_grid": None, "gamma_grid": None})
    if not extras["alpha0_grid"] or not extras["gamma_grid"]:
        raise ValueError("sweep config needs nonempty alpha0_grid and gamma_grid")
    cfg = config_from_dict(doc)
    workers = _workers_from_env()
    os.makedirs(args.out, exist_ok=True)
    cdfs = sweep(cfg, extras["alpha0_grid"], extras["gamma_grid"], workers=workers)
    summary = {}
    for (alpha0, gamma), cdf in cdfs.items():
        name = f"delay_cdf_a{alpha0:g}_g{gamma:g}.csv"
        write_delay_cdf_csv(os.path.join(args.out, name), cdf)
        summary[f"alpha0={alpha0:g},gamma={gamma:g}"] = {
            "median": cdf.median(),
            "mean": cdf.mean(),
            "censored_fraction": cdf.censored_fraction,
            "file": name,
        }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _say(args.quiet, f"sweep: {len(cdfs)} cells written to {args.out}")
    return 0


def cmd_ode(args) -> int:
    doc = _load_json(args.config)
    mf, extras = _mean_field_from(doc, {
        "q0": None, "step_h": 1e-2, "max_time": 200.0,
        "stop_tol": 1e-8, "record_every": 1,
    })
    q0 = _qstate(extras["q0"])
    cfg = OdeConfig(step_h=float(extras["step_h"]), max_time=float(extras["max_time"]),
                    stop_tol=float(extras["stop_tol"]), record_every=int(extras["record_every"]))
    trace = integrate(q0, mf, cfg)
    os.makedirs(args.out, exist_ok=True)
    write_ode_trace_csv(os.path.join(args.out, "ode_trace.csv"), trace, mf)
    residual = float(np.abs(g(trace.final_state(), mf)).max())
    _say(args.quiet, f"ode: {len(trace)} records, reason={trace.reason}, "
         f"terminal residual {residual:.3e}")
    return 0 if trace.converged else 1


def cmd_stationary(args) -> int:
    doc = _load_json(args.config)
    mf, extras = _mean_field_from(doc, {"q0": None, "tol": 1e-10, "max_iter": 100_000})
    q0 = _qstate(extras["q0"])
    result = solve_stationary(mf, q0, tol=float(extras["tol"]), max_iter=int(extras["max_iter"]))
    os.makedirs(args.out, exist_ok=True)
    qs = result.q
    with open(os.path.join(args.out, "stationary.json"), "w", encoding="utf-8") as f:
        json.dump({
            "q_a1": qs.q_a1, "q_a2": qs.q_a2, "q_b1": qs.q_b1, "q_b2": qs.q_b2,
            "iterations": result.iterations,
            "residual": result.residual,
        }, f, indent=2, sort_keys=True)
        f.write("\n")
    _say(args.quiet, f"stationary: residual {result.residual:.3e} "
         f"in {result.iterations} iterations")
    return 0


def _assembled_half_dv(report, fault_sign: float) -> float:
    e_a1, e_a2, e_b1, e_b2 = report.epsilons
    c11, c12, c21, c22 = report.c_coeffs
    return (
        -float(np.dot(report.epsilons, report.epsilons))
        + fault_sign * c12 * e_a1 * e_b2
        - c11 * e_a1 * e_b1
        + c21 * e_a2 * e_b1
        - c22 * e_a2 * e_b2
    )


def run_verification(mf: MeanField, seed: int = 0, num_points: int = 100,
                     inject_fault: bool = False):
    """Invariant suite behind the verify command; returns (name, ok, detail)
    triples. inject_fault flips the sign of one coefficient in the assembled
    derivative expression, a self-test that the checks can actually fail."""
    rng = np.random.default_rng(seed)
    rvec = mf.rewards.as_vector()
    fault_sign = -1.0 if inject_fault else 1.0
    checks = []

    # Stationary points reachable and tight from scattered starts.
    worst_res = 0.0
    ok = True
    for _ in range(10):
        q0 = QState.from_array(rng.random(4) * rvec)
        try:
            res = solve_stationary(mf, q0, tol=1e-10)
            worst_res = max(worst_res, res.residual)
        except ConvergenceError as exc:
            ok = False
            worst_res = exc.residual
    checks.append(("stationary_residual", ok and worst_res <= 1e-10,
                   f"worst residual {worst_res:.3e}"))

    # Derivative of V strictly negative once rewards sit below 2*gamma.
    scaled_mf, _, _ = rescale_rewards_below(mf, margin=0.5)
    scaled_r = scaled_mf.rewards.as_vector()
    bad = 0
    for _ in range(num_points):
        q = QState.from_array(rng.random(4) * scaled_r)
        report = lyapunov(q, scaled_mf)
        if report.v > 1e-20 and _assembled_half_dv(report, fault_sign) >= 0.0:
            bad += 1
    checks.append(("lyapunov_negativity", bad == 0,
                   f"{bad}/{num_points} states with nonnegative dV/dt after rescaling"))

    # Assembled coefficient expression against a finite difference along the flow.
    h = 1e-6
    worst_rel = 0.0
    for _ in range(num_points):
        q = QState.from_array(rng.random(4) * rvec)
        report = lyapunov(q, mf)
        gv = g(q, mf)
        v_plus = lyapunov(QState.from_array(q.as_array() + h * gv), mf).v
        v_minus = lyapunov(QState.from_array(q.as_array() - h * gv), mf).v
        fd_half = (v_plus - v_minus) / (4.0 * h)
        half = _assembled_half_dv(report, fault_sign)
        rel = abs(fd_half - half) / max(abs(half), 1e-12)
        worst_rel = max(worst_rel, rel)
    checks.append(("dv_dt_finite_difference", worst_rel <= 1e-5,
                   f"worst relative error {worst_rel:.3e}"))

    # Joint scaling of (q, gamma, r) by c scales g by c and leaves C fixed.
    worst = 0.0
    for c in (1e-3, 1.0, 1e3):
        for _ in range(20):
            q = QState.from_array(rng.random(4) * rvec)
            scaled = MeanField(mf.rewards.scaled(c), c * mf.gamma)
            g1 = g(q, mf)
            g2 = g(q.scaled(c), scaled)
            # relative to the flow scale; components of g cross zero
            worst = max(worst, float(np.max(np.abs(g2 - c * g1))) / (c * mf.rewards.r_max))
            c1 = lyapunov(q, mf).c_coeffs
            c2 = lyapunov(q.scaled(c), scaled).c_coeffs
            worst = max(worst, float(np.max(np.abs(c2 - c1) / np.abs(c1))))
    checks.append(("scale_equivariance", worst <= 1e-12, f"worst relative error {worst:.3e}"))
    return checks


def cmd_verify(args) -> int:
    doc = _load_json(args.config)
    mf, extras = _mean_field_from(doc, {
        "seed": 0, "num_points": 100, "inject_fault": False,
    })
    checks = run_verification(mf, seed=int(extras["seed"]),
                              num_points=int(extras["num_points"]),
                              inject_fault=bool(extras["inject_fault"]))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "verify_report.json"), "w", encoding="utf-8") as f:
        json.dump({name: {"passed": bool(ok), "detail": detail} for name, ok, detail in checks},
                  f, indent=2, sort_keys=True)
        f.write("\n")
    failed = 0
    for name, ok, detail in checks:
        if not ok:
            failed += 1
        _say(args.quiet, f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogniq",
        description="Two-user two-channel selection learning: simulation, "
                    "mean-field ODE, and convergence verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
        ("simulate", cmd_simulate, "run seeded learning experiments, emit trajectory CSVs"),
        ("sweep", cmd_sweep, "delay CDFs over an (alpha0, gamma) grid"),
        ("ode", cmd_ode, "integrate the mean-field flow and export the trace"),
        ("stationary", cmd_stationary, "solve the stationary equations"),
        ("verify", cmd_verify, "run the convergence invariant suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
