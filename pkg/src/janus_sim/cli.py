"""Command-line entry point: run | mc | frontier | equilibrium.

Outputs are machine-readable (CSV traces, JSON summaries) with frozen column
order and field names.  Every command writes a ``manifest.json`` sufficient
to reproduce the run and uses write-to-temp, rename-on-success so no partial
files survive an error.

Exit codes: 0 success, 2 config/validation error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .config_io import (
    PRESET_NAMES,
    config_hash,
    load_config,
    load_preset,
)
from .controller import (
    SolverError,
    classify_stability,
    find_fixed_point,
    jacobian_fd,
    spectral_radius,
    step_map,
)
from .core_state import from_vector, to_vector
from .metrics import decentralization, ponzi_report, trilemma_point
from .sim_engine import (
    ConfigError,
    ScenarioConfig,
    TRACE_COLUMNS,
    frontier_sweep,
    initial_state,
    monte_carlo,
    path_summary,
    simulate_path,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _load(args) -> ScenarioConfig:
    config = load_preset(args.preset) if args.preset else load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _workers(args) -> int:
    env = os.environ.get("JANUS_SIM_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"JANUS_SIM_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ConfigError("JANUS_SIM_THREADS must be >= 1")
        return n
    return args.workers


def _write_manifest(out_dir: str, config: ScenarioConfig, n_paths: int, outputs: list[str], t0: float):
    manifest = {
        "build": f"janus-sim {__version__}",
        "config_hash": config_hash(config),
        "seed": config.seed,
        "n_paths": n_paths,
        "outputs": sorted(outputs),
        "duration_seconds": time.perf_counter() - t0,
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"), _json_text(manifest))


def cmd_run(args) -> int:
    t0 = time.perf_counter()
    config = _load(args)
    os.makedirs(args.out, exist_ok=True)
    trace = simulate_path(config, path_index=0)
    summary = path_summary(trace, config, path_index=0)

    lines = [",".join(TRACE_COLUMNS)]
    for row in trace.rows():
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(os.path.join(args.out, "trace.csv"), "\n".join(lines) + "\n")

    payload = {
        "seed": config.seed,
        "horizon": config.horizon,
        "steps_recorded": len(trace),
        "failed": summary.failed,
        "in_band_fraction": summary.in_band_fraction,
        "mean_efficiency": summary.mean_efficiency,
        "terminal_p_a": summary.terminal_p_a,
        "terminal_p_omega": summary.terminal_p_omega,
        "terminal_p_ref": summary.terminal_p_ref,
        "inflow_r2": summary.inflow_r2,
    }
    _atomic_write(os.path.join(args.out, "summary.json"), _json_text(payload))
    _write_manifest(args.out, config, 1, ["trace.csv", "summary.json"], t0)
    if len(trace) < config.horizon:
        print(
            f"simulation diverged after {len(trace)} of {config.horizon} steps",
            file=sys.stderr,
        )
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_mc(args) -> int:
    t0 = time.perf_counter()
    config = _load(args)
    workers = _workers(args)
    os.makedirs(args.out, exist_ok=True)
    summary = monte_carlo(config, args.paths, workers)
    point = trilemma_point(config.governance, summary)
    ponzi = ponzi_report(summary)
    payload = {
        "n_paths": summary.n_paths,
        "failures": summary.failures,
        "p_fail": summary.p_fail,
        "p_fail_ci": list(summary.p_fail_ci),
        "safety": 1.0 - summary.p_fail,
        "mean_in_band": summary.mean_in_band,
        "mean_efficiency": summary.mean_efficiency,
        "decentralization": decentralization(config.governance),
        "mean_terminal_p_a": summary.mean_terminal_p_a,
        "mean_terminal_p_omega": summary.mean_terminal_p_omega,
        "median_terminal_p_a": summary.median_terminal_p_a,
        "median_terminal_p_omega": summary.median_terminal_p_omega,
        "terminal_p_ref": summary.terminal_p_ref,
        "trilemma_point": {
            "d": point.d,
            "e": point.e,
            "s": point.s,
            "s_ci": list(point.s_ci),
        },
        "ponzi_report": {
            "anchor_margin": ponzi.anchor_margin,
            "inflow_dependence": ponzi.inflow_dependence,
            "verdict": str(ponzi.verdict),
        },
    }
    _atomic_write(os.path.join(args.out, "ensemble.json"), _json_text(payload))
    _write_manifest(args.out, config, args.paths, ["ensemble.json"], t0)
    return EXIT_OK


def _load_grid(args) -> dict:
    if args.grid is None:
        from importlib import resources

        text = resources.files("janus_sim.presets").joinpath("frontier_grid.json").read_text()
    else:
        try:
            with open(args.grid) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read grid file: {exc}")
    try:
        grid = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"grid file is not valid JSON: {exc}")
    if not isinstance(grid, dict) or not grid or any(not v for v in grid.values()):
        raise ConfigError("sweep grid must be a non-empty object of non-empty lists")
    return grid


def cmd_frontier(args) -> int:
    t0 = time.perf_counter()
    config = _load(args)
    workers = _workers(args)
    grid = _load_grid(args)
    os.makedirs(args.out, exist_ok=True)
    points = frontier_sweep(config, grid, args.paths, workers)
    keys = list(grid.keys())
    lines = [",".join(keys + ["d", "e", "s", "pareto"])]
    for p in points:
        cells = [json.dumps(p.overrides[k]) if isinstance(p.overrides[k], list) else _fmt(p.overrides[k]) for k in keys]
        cells = [c.replace(",", ";") for c in cells]
        lines.append(",".join(cells + [_fmt(p.d), _fmt(p.e), _fmt(p.s), str(int(p.pareto))]))
    _atomic_write(os.path.join(args.out, "frontier.csv"), "\n".join(lines) + "\n")
    _write_manifest(args.out, config, args.paths, ["frontier.csv"], t0)
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    t0 = time.perf_counter()
    config = _load(args)
    os.makedirs(args.out, exist_ok=True)
    template = initial_state(config)

    def F(x):
        return to_vector(step_map(from_vector(x, template), config))

    x0 = to_vector(template)
    try:
        report = find_fixed_point(F, x0)
    except SolverError as exc:
        print(f"equilibrium solve diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    if not report.converged:
        print(
            f"equilibrium solve did not converge; last residual {report.residual:.6e}",
            file=sys.stderr,
        )
        return EXIT_DIVERGED
    try:
        J = jacobian_fd(F, report.x_star)
        rho = spectral_radius(J)
    except SolverError as exc:
        print(f"stability analysis diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    stability = classify_stability(rho)
    payload = {
        "x_star": [float(v) for v in np.asarray(report.x_star)],
        "residual": report.residual,
        "iterations": report.iterations,
        "converged": report.converged,
        "spectral_radius": rho,
        "stability": stability.value,
    }
    _atomic_write(os.path.join(args.out, "equilibrium.json"), _json_text(payload))
    _write_manifest(args.out, config, 0, ["equilibrium.json"], t0)
    print(f"stability: {stability.value} (spectral radius {rho:.6f})")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a scenario config JSON file")
    src.add_argument("--preset", choices=PRESET_NAMES, help="bundled scenario preset")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=".", help="output directory (created if missing)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="janus-sim",
        description="Dual-token stablecoin simulator and analysis toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one path, write trace.csv + summary.json")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_mc = sub.add_parser("mc", help="Monte Carlo ensemble, write ensemble.json")
    _add_common(p_mc)
    p_mc.add_argument("--paths", type=int, default=100)
    p_mc.add_argument("--workers", type=int, default=1)
    p_mc.set_defaults(func=cmd_mc)

    p_fr = sub.add_parser("frontier", help="parameter sweep, write frontier.csv")
    _add_common(p_fr)
    p_fr.add_argument("--paths", type=int, default=50)
    p_fr.add_argument("--workers", type=int, default=1)
    p_fr.add_argument("--grid", default=None, help="JSON file mapping parameter to value list")
    p_fr.set_defaults(func=cmd_frontier)

    p_eq = sub.add_parser("equilibrium", help="solve the fixed point, write equilibrium.json")
    _add_common(p_eq)
    p_eq.set_defaults(func=cmd_equilibrium)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
