"""Command-line entry point wiring scenario -> solve -> round -> bias -> reports.

Commands:

* ``generate``: scenario TOML to instance JSON plus geometry CSV.
* ``solve``: instance JSON to allocation / bias / ABS-pattern artifacts.
* ``evaluate``: Monte-Carlo comparison of every scheme on a scenario.
* ``sweep``: percentile-gain table along a pico-power or UE-density axis.
* ``oracle-check``: tiny-instance verification against the exhaustive
  optimum, printing gap statistics and the approximation-factor verdict.

All randomness flows from the mandatory ``--seed``; reruns with identical
flags produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from eicic import baselines as schemes_mod
from eicic import evaluate as ev
from eicic.bias import default_grid, fit_bias, to_patterns
from eicic.model import NetworkInstance, check_feasibility
from eicic.oracle import verify_tiny_instances
from eicic.rounding import round_solution
from eicic.scenario import ScenarioSpec, generate
from eicic.solver import SolverConfig, solve_relaxed, write_trace_csv

SCHEME_CHOICES = (
    "all",
    ev.PROPOSED,
    "local-opt",
    "no-eicic",
    "no-pico",
    "fixed-5-5",
    "fixed-10-7.5",
    "fixed-15-10",
    "fixed-15-15",
)


def _add_seed(p):
    p.add_argument(
        "--seed",
        type=int,
        required=True,
        help="seed for every random choice (no ambient entropy)",
    )


def _add_out(p):
    p.add_argument("--out-dir", type=Path, required=True, help="artifact directory")


def _add_solver_flags(p):
    p.add_argument("--epsilon", type=float, default=0.05,
                   help="per-UE utility tolerance for the step/iteration rule")
    p.add_argument("--gamma", type=float, default=None,
                   help="step-size override (rate-normalized domain)")
    p.add_argument("--iterations", type=int, default=None,
                   help="iteration-count override")
    p.add_argument("--max-iterations", type=int, default=2_000_000,
                   help="cap on the rule's iteration count")


def _add_bias_flags(p):
    p.add_argument("--bias-grid", type=float, default=0.1,
                   help="bias grid step in dB")
    p.add_argument("--bias-min", type=float, default=0.0)
    p.add_argument("--bias-max", type=float, default=15.0)


def _solver_config(args, record_trace=False) -> SolverConfig:
    return SolverConfig(
        epsilon=args.epsilon,
        step_size=args.gamma,
        iterations=args.iterations,
        max_iterations=args.max_iterations,
        record_trace=record_trace,
    )


def _config_hash(parts: dict) -> str:
    return hashlib.sha256(
        json.dumps(parts, sort_keys=True).encode()
    ).hexdigest()[:16]


def _write_summary(out_dir: Path, command: str, parts: dict) -> None:
    ev.write_json(
        {
            "format": "eicic-run-summary",
            "version": 1,
            "command": command,
            "config_hash": _config_hash(parts),
            **parts,
        },
        out_dir / "summary.json",
    )


def _load_spec(args) -> ScenarioSpec:
    spec = ScenarioSpec.from_toml(args.spec, rng_seed=args.seed)
    if args.nsf is not None:
        from dataclasses import replace

        spec = replace(spec, n_sf=args.nsf)
    return spec


def cmd_generate(args) -> int:
    spec = _load_spec(args)
    snap = generate(spec)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "instance.json").write_text(snap.instance.to_json() + "\n")
    (args.out_dir / "geometry.csv").write_text(snap.geometry_csv())
    _write_summary(
        args.out_dir,
        "generate",
        {
            "seed": args.seed,
            "spec_file": os.path.basename(str(args.spec)),
            "n_macros": snap.instance.n_macros,
            "n_picos": snap.instance.n_picos,
            "n_ues": snap.instance.n_ues,
            "n_sf": spec.n_sf,
        },
    )
    print(
        f"generated {snap.instance.n_ues} UEs, {snap.instance.n_macros} macros, "
        f"{snap.instance.n_picos} picos -> {args.out_dir}"
    )
    return 0


def _allocation_csv(instance, alloc) -> str:
    import csv as _csv
    import io

    buf = io.StringIO()
    w = _csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["ue_id", "association", "x", "y_abs", "y_nonabs",
         "throughput_bits_per_period", "throughput_mbps"]
    )
    rates_mbps = ev.mbps(alloc.throughput, instance.n_sf)
    for pos, ue in enumerate(instance.ues):
        w.writerow(
            [
                ue.id,
                alloc.association[pos],
                repr(float(alloc.x[pos])),
                repr(float(alloc.y_abs[pos])),
                repr(float(alloc.y_nonabs[pos])),
                repr(float(alloc.throughput[pos])),
                repr(float(rates_mbps[pos])),
            ]
        )
    return buf.getvalue()


def cmd_solve(args) -> int:
    instance = NetworkInstance.from_json(Path(args.instance).read_text())
    config = _solver_config(args, record_trace=args.trace)
    sol = solve_relaxed(instance, config, seed=args.seed)
    alloc = round_solution(sol, instance)
    violations = check_feasibility(alloc, instance)
    if violations:
        raise RuntimeError(f"internal error: infeasible output: {violations[0]}")
    grid = default_grid(args.bias_min, args.bias_max, args.bias_grid)
    fit = fit_bias(
        alloc.association, instance, grid=grid,
        b_min=args.bias_min, b_max=args.bias_max,
    )
    pattern = to_patterns(alloc.abs_pico, alloc.nonabs_macro, instance)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ev.write_json(alloc.to_json_dict(), args.out_dir / "allocation.json")
    (args.out_dir / "allocation.csv").write_text(_allocation_csv(instance, alloc))
    ev.write_json(fit.to_json_dict(), args.out_dir / "bias.json")
    ev.write_json(pattern.to_json_dict(), args.out_dir / "patterns.json")
    if args.trace:
        write_trace_csv(sol, args.out_dir / "trace.csv")
    _write_summary(
        args.out_dir,
        "solve",
        {
            "seed": args.seed,
            "epsilon": args.epsilon,
            "gamma": args.gamma,
            "iterations": args.iterations,
            "utility": alloc.utility,
            "relaxed_utility": sol.relaxed_utility,
            "component_iterations": [c.iterations for c in sol.components],
        },
    )
    print(f"utility {alloc.utility:.4f} (relaxed estimate {sol.relaxed_utility:.4f})")
    return 0


def _scheme_names(requested):
    if not requested or "all" in requested:
        return tuple(n for n in SCHEME_CHOICES if n not in ("all", ev.PROPOSED))
    return tuple(n for n in requested if n != ev.PROPOSED)


def cmd_evaluate(args) -> int:
    spec = _load_spec(args)
    config = _solver_config(args)
    schemes = _scheme_names(args.scheme)
    mc = ev.monte_carlo(
        spec,
        args.snapshots,
        config,
        seed=args.seed,
        schemes=schemes,
        bias_grid=default_grid(args.bias_min, args.bias_max, args.bias_grid),
        b_min=args.bias_min,
        b_max=args.bias_max,
        jobs=args.jobs,
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ev.write_csv(ev.utility_rows(mc), args.out_dir / "utilities.csv")
    ev.write_csv(ev.percentile_rows(mc), args.out_dir / "percentiles.csv")
    ev.write_csv(ev.cdf_rows(mc), args.out_dir / "cdf.csv")
    ev.write_json(ev.eicic_params_dict(mc), args.out_dir / "eicic_params.json")
    _write_summary(
        args.out_dir,
        "evaluate",
        {
            "seed": args.seed,
            "snapshots": args.snapshots,
            "schemes": list(schemes),
            "epsilon": args.epsilon,
            "iterations": args.iterations,
            "mean_utility_proposed": float(
                np.mean([s.allocations[ev.PROPOSED].utility for s in mc.snapshots])
            ),
            "mean_gap_vs_relaxed": float(
                np.mean([s.gap_vs_relaxed for s in mc.snapshots])
            ),
        },
    )
    print(f"evaluated {args.snapshots} snapshots -> {args.out_dir}")
    return 0


def cmd_sweep(args) -> int:
    spec = _load_spec(args)
    config = _solver_config(args)
    if args.values:
        values = [float(v) for v in args.values.split(",")]
    else:
        values = list(
            ev.POWER_SWEEP_DBM if args.axis == "pico_power" else ev.DENSITY_SWEEP_PER_KM2
        )
    rows = ev.sweep(
        spec, args.axis, values, args.snapshots, config, seed=args.seed,
        jobs=args.jobs,
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ev.write_csv(rows, args.out_dir / "sweep.csv")
    _write_summary(
        args.out_dir,
        "sweep",
        {
            "seed": args.seed,
            "axis": args.axis,
            "values": values,
            "snapshots": args.snapshots,
        },
    )
    print(f"swept {args.axis} over {values} -> {args.out_dir}")
    return 0


def cmd_oracle_check(args) -> int:
    results = verify_tiny_instances(
        args.trials, seed=args.seed, delta=args.delta,
        epsilon=args.epsilon_override,
    )
    gaps = [r.gap_vs_oracle for r in results]
    ok = all(r.factor_bound_ok for r in results)
    for r in results:
        print(
            f"trial seed={r.seed} ues={r.n_ues} macros={r.n_macros} "
            f"picos={r.n_picos} alg={r.alg_utility:.4f} opt={r.oracle_utility:.4f} "
            f"(1-g)={1 - r.gap_vs_oracle:.4f} factor_ok={r.factor_bound_ok}"
        )
    n_pass = sum(r.factor_bound_ok for r in results)
    print(
        f"oracle-check: {n_pass}/{len(results)} approximation bounds hold; "
        f"max g={max(gaps):.4f}; median (1-g)={1 - float(np.median(gaps)):.4f}"
    )
    print(f"verdict: {'PASS' if ok else 'FAIL'}")
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        ev.write_json(
            {
                "format": "eicic-oracle-check",
                "version": 1,
                "trials": args.trials,
                "seed": args.seed,
                "delta": args.delta,
                "all_factor_bounds_hold": ok,
                "max_gap": max(gaps),
                "median_one_minus_gap": 1 - float(np.median(gaps)),
                "results": [
                    {
                        "seed": r.seed,
                        "alg_utility": r.alg_utility,
                        "oracle_utility": r.oracle_utility,
                        "gap_vs_oracle": r.gap_vs_oracle,
                        "factor_bound_ok": r.factor_bound_ok,
                    }
                    for r in results
                ],
            },
            args.out_dir / "oracle_check.json",
        )
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eicic",
        description="Joint ABS / cell-association optimization for LTE HetNets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="scenario TOML -> instance JSON + geometry")
    p.add_argument("--spec", required=True)
    p.add_argument("--nsf", type=int, default=None, help="override the ABS period")
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="instance JSON -> allocation/bias/patterns")
    p.add_argument("--instance", required=True)
    p.add_argument("--trace", action="store_true", help="write the iteration trace")
    _add_seed(p)
    _add_out(p)
    _add_solver_flags(p)
    _add_bias_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="Monte-Carlo comparison of all schemes")
    p.add_argument("--spec", required=True)
    p.add_argument("--nsf", type=int, default=None)
    p.add_argument("--snapshots", type=int, default=10)
    p.add_argument("--scheme", action="append", choices=SCHEME_CHOICES,
                   help="comparison scheme (repeatable; default all)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_seed(p)
    _add_out(p)
    _add_solver_flags(p)
    _add_bias_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="percentile gains along a parameter axis")
    p.add_argument("--spec", required=True)
    p.add_argument("--nsf", type=int, default=None)
    p.add_argument("--axis", choices=("pico_power", "ue_density"), required=True)
    p.add_argument("--values", default=None,
                   help="comma-separated axis values (defaults per axis)")
    p.add_argument("--snapshots", type=int, default=5)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_seed(p)
    _add_out(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "oracle-check", help="verify solve+round against the exhaustive optimum"
    )
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--delta", type=float, default=0.1,
                   help="approximation slack in the factor bound")
    p.add_argument("--epsilon-override", type=float, default=None,
                   help="solver tolerance (default ln(1+delta))")
    p.add_argument("--out-dir", type=Path, default=None)
    _add_seed(p)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error surface
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
