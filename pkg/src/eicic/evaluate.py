"""Monte-Carlo evaluation pipeline and report surfaces.

Each snapshot runs the full chain (generate, solve the relaxation, round,
fit biases) plus any requested comparison schemes; the resulting frame
counts and biases are averaged across snapshots, re-rounded and
re-repaired for feasibility.  Report helpers produce utility tables,
throughput percentiles and CDFs (optionally restricted to UEs in or out
of pico coverage), and parameter sweeps against the no-coordination
baseline.

Cell geometry depends only on the scenario seed, so every snapshot shares
the interference graph and the averaged parameters stay meaningful.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from eicic import baselines as schemes_mod
from eicic.bias import BiasAssignment, default_grid, fit_bias
from eicic.model import Allocation, NetworkInstance, check_feasibility
from eicic.oracle import optimality_gap
from eicic.rounding import rnd, round_solution
from eicic.scenario import ScenarioSpec, generate
from eicic.solver import RelaxedSolution, SolverConfig, solve_relaxed

PROPOSED = "proposed"
UE_FILTERS = ("all", "pico-area", "non-pico-area")

#: Preconfigured sweep axes: pico transmit powers (dBm) and UE densities
#: (active UEs per square km).
POWER_SWEEP_DBM = (36.0, 30.0, 27.0)
DENSITY_SWEEP_PER_KM2 = (450.0, 225.0, 125.0)


def mbps(throughput, n_sf: int):
    """Bits per ABS-period to Mbps (1 ms subframes)."""
    return np.asarray(throughput, dtype=float) / (n_sf * 1000.0)


@dataclass(frozen=True)
class SnapshotResult:
    seed: int
    instance: NetworkInstance
    allocations: dict  # scheme name -> Allocation ("proposed" always present)
    relaxed_throughput: np.ndarray
    relaxed_utility: float
    gap_vs_relaxed: float
    bias: BiasAssignment


@dataclass(frozen=True)
class MonteCarloResult:
    spec: ScenarioSpec
    snapshots: tuple
    abs_pico: np.ndarray  # averaged + re-rounded + repaired
    nonabs_macro: np.ndarray
    bias_db: tuple  # averaged in dB, snapped to the fitting grid
    repairs: tuple


def _run_snapshot(args):
    (spec, seed, config, scheme_names, grid, b_min, b_max) = args
    snap = generate(spec, seed=seed)
    inst = snap.instance
    sol = solve_relaxed(inst, config, seed=seed)
    alloc = round_solution(sol, inst)
    violations = check_feasibility(alloc, inst)
    if violations:
        raise RuntimeError(
            f"snapshot {seed}: infeasible rounded allocation: {violations[0]}"
        )
    allocations = {PROPOSED: alloc}
    available = schemes_mod.all_schemes(inst)
    for name in scheme_names:
        allocations[name] = available[name]
    fit = fit_bias(alloc.association, inst, grid=grid, b_min=b_min, b_max=b_max)
    if (alloc.throughput > 0).all():
        gap = optimality_gap(alloc.throughput, sol.z_avg.throughput, inst.weights)
    else:
        gap = 1.0  # some UE got nothing: infinitely far from the bound
    return SnapshotResult(
        seed=seed,
        instance=inst,
        allocations=allocations,
        relaxed_throughput=sol.z_avg.throughput,
        relaxed_utility=sol.relaxed_utility,
        gap_vs_relaxed=gap,
        bias=fit,
    )


def monte_carlo(
    spec: ScenarioSpec,
    n_snapshots: int,
    config: SolverConfig,
    seed: Optional[int] = None,
    seeds: Optional[Sequence[int]] = None,
    schemes: Sequence[str] = (),
    bias_grid: Optional[Sequence[float]] = None,
    b_min: float = 0.0,
    b_max: float = 15.0,
    jobs: int = 1,
) -> MonteCarloResult:
    """Sample snapshots, run the full pipeline on each, average parameters.

    Snapshot seeds default to ``seed, seed+1, ...``; pass ``seeds`` for
    explicit control.  ``schemes`` selects extra comparison allocations to
    compute per snapshot (names from :func:`eicic.baselines.all_schemes`).
    """
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot")
    if seeds is None:
        if seed is None:
            raise ValueError("give either seed or seeds")
        seeds = [seed + i for i in range(n_snapshots)]
    seeds = list(seeds)
    if len(seeds) != n_snapshots:
        raise ValueError("seeds length must match n_snapshots")
    grid = tuple(bias_grid) if bias_grid is not None else default_grid(b_min, b_max)
    work = [(spec, s, config, tuple(schemes), grid, b_min, b_max) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            snapshots = list(pool.map(_run_snapshot, work))
    else:
        snapshots = [_run_snapshot(w) for w in work]

    n_sf = spec.n_sf
    inst0 = snapshots[0].instance
    abs_mean = np.mean([s.allocations[PROPOSED].abs_pico for s in snapshots], axis=0)
    nonabs_mean = np.mean(
        [s.allocations[PROPOSED].nonabs_macro for s in snapshots], axis=0
    )
    nonabs = np.array([rnd(float(v), n_sf) for v in nonabs_mean], dtype=np.int64)
    abs_p = np.array([rnd(float(v), n_sf) for v in abs_mean], dtype=np.int64)
    repairs = []
    for p in range(inst0.n_picos):
        cap = min(
            [n_sf - int(nonabs[m]) for m in inst0.interferers[p]], default=n_sf
        )
        if abs_p[p] > cap:
            repairs.append((p, int(abs_p[p]), cap))
            abs_p[p] = cap
    bias_mean = np.mean([s.bias.bias_db for s in snapshots], axis=0)
    snapped = tuple(
        float(min(grid, key=lambda g: (abs(g - b), g))) for b in bias_mean
    )
    return MonteCarloResult(
        spec=spec,
        snapshots=tuple(snapshots),
        abs_pico=abs_p,
        nonabs_macro=nonabs,
        bias_db=snapped,
        repairs=tuple(repairs),
    )


# ---------------------------------------------------------------------------
# Report surfaces
# ---------------------------------------------------------------------------


def _filter_mask(instance: NetworkInstance, ue_filter: str) -> np.ndarray:
    if ue_filter == "all":
        return np.ones(instance.n_ues, dtype=bool)
    pico_area = np.array([ue.best_pico is not None for ue in instance.ues])
    if ue_filter == "pico-area":
        return pico_area
    if ue_filter == "non-pico-area":
        return ~pico_area
    raise ValueError(f"unknown UE filter {ue_filter!r}")


def pooled_throughputs_mbps(
    result: MonteCarloResult, scheme: str, ue_filter: str = "all"
) -> np.ndarray:
    """All snapshots' per-UE throughputs under one scheme, in Mbps."""
    parts = []
    for snap in result.snapshots:
        mask = _filter_mask(snap.instance, ue_filter)
        alloc = snap.allocations[scheme]
        parts.append(mbps(alloc.throughput[mask], snap.instance.n_sf))
    return np.concatenate(parts) if parts else np.zeros(0)


def percentile_rows(
    result: MonteCarloResult,
    percentiles: Sequence[float] = (5.0, 10.0, 50.0),
    ue_filters: Sequence[str] = UE_FILTERS,
) -> list:
    """Linear-interpolated throughput percentiles per scheme and UE filter.

    Empty filter groups are reported with ``None`` percentiles (absent,
    not zero).
    """
    scheme_names = list(result.snapshots[0].allocations)
    rows = []
    for scheme in scheme_names:
        for flt in ue_filters:
            vals = pooled_throughputs_mbps(result, scheme, flt)
            row = {"scheme": scheme, "filter": flt, "n_ues": int(vals.size)}
            for q in percentiles:
                key = f"p{q:g}_mbps"
                row[key] = (
                    float(np.percentile(vals, q, method="linear"))
                    if vals.size
                    else None
                )
            rows.append(row)
    return rows


def cdf_rows(result: MonteCarloResult, ue_filters: Sequence[str] = UE_FILTERS) -> list:
    rows = []
    for scheme in result.snapshots[0].allocations:
        for flt in ue_filters:
            vals = np.sort(pooled_throughputs_mbps(result, scheme, flt))
            n = vals.size
            for i, v in enumerate(vals):
                rows.append(
                    {
                        "scheme": scheme,
                        "filter": flt,
                        "throughput_mbps": float(v),
                        "cdf": (i + 1) / n,
                    }
                )
    return rows


def utility_rows(result: MonteCarloResult) -> list:
    rows = []
    for snap in result.snapshots:
        for scheme, alloc in snap.allocations.items():
            rows.append(
                {
                    "snapshot_seed": snap.seed,
                    "scheme": scheme,
                    "utility": alloc.utility,
                }
            )
        rows.append(
            {
                "snapshot_seed": snap.seed,
                "scheme": "relaxed-bound",
                "utility": snap.relaxed_utility,
            }
        )
    return rows


def sweep(
    spec: ScenarioSpec,
    axis: str,
    values: Sequence[float],
    n_snapshots: int,
    config: SolverConfig,
    seed: int,
    percentiles: Sequence[float] = (5.0, 10.0, 50.0),
    jobs: int = 1,
) -> list:
    """Percentile gains of the proposed scheme over no-eICIC along one axis.

    ``axis`` is ``pico_power`` (dBm) or ``ue_density`` (UEs/km^2); each row
    carries the percentage improvement per requested percentile plus the
    mean utilities of both schemes.
    """
    if axis not in ("pico_power", "ue_density"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for v in values:
        if axis == "pico_power":
            sp = replace(spec, pico_tx_power_dbm=float(v))
        else:
            sp = replace(spec, ue_density_per_km2=float(v))
        mc = monte_carlo(
            sp, n_snapshots, config, seed=seed, schemes=("no-eicic",), jobs=jobs
        )
        row = {"axis": axis, "value": float(v)}
        for q in percentiles:
            prop = np.percentile(
                pooled_throughputs_mbps(mc, PROPOSED, "all"), q, method="linear"
            )
            base = np.percentile(
                pooled_throughputs_mbps(mc, "no-eicic", "all"), q, method="linear"
            )
            row[f"gain_p{q:g}_pct"] = float((prop / base - 1.0) * 100.0)
        row["utility_proposed"] = float(
            np.mean([s.allocations[PROPOSED].utility for s in mc.snapshots])
        )
        row["utility_no_eicic"] = float(
            np.mean([s.allocations["no-eicic"].utility for s in mc.snapshots])
        )
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Deterministic file writers
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows: list, path) -> None:
    """Write dict rows with repr-formatted floats (byte-deterministic)."""
    if not rows:
        raise ValueError("no rows to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in header])
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def eicic_params_dict(result: MonteCarloResult) -> dict:
    """Averaged deployable parameters: frame counts, biases, patterns."""
    from eicic.bias import to_patterns

    inst0 = result.snapshots[0].instance
    pattern = to_patterns(result.abs_pico, result.nonabs_macro, inst0)
    return {
        "format": "eicic-parameters",
        "version": 1,
        "n_sf": result.spec.n_sf,
        "snapshot_seeds": [s.seed for s in result.snapshots],
        "abs_pico": result.abs_pico.tolist(),
        "nonabs_macro": result.nonabs_macro.tolist(),
        "bias_db": list(result.bias_db),
        "repairs": [list(r) for r in result.repairs],
        "abs_patterns": pattern.to_json_dict(),
        "mean_gap_vs_relaxed": float(
            np.mean([s.gap_vs_relaxed for s in result.snapshots])
        ),
    }


def write_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
