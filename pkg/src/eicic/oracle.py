"""Exhaustive ground truth for tiny instances and the optimality-gap metric.

The brute-force search enumerates every binary association of the
pico-eligible UEs and every integral macro frame vector; each pico then
takes the largest ABS count its interferers allow (more ABS never hurts a
pico, so this is exact while shrinking the enumeration to the macros).
Inner airtimes come from the shared proportional-fair allocators.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from eicic.baselines import pf_macro_allocation, pf_pico_allocation
from eicic.model import (
    Allocation,
    NetworkInstance,
    log_utility,
    safe_log_utility,
)
from eicic.rounding import round_solution
from eicic.scenario import random_instance
from eicic.solver import SolverConfig, solve_relaxed

MAX_ENUMERATION = 10_000_000


def _enumeration_size(instance: NetworkInstance, flexible) -> int:
    return (2 ** len(flexible)) * (instance.n_sf + 1) ** instance.n_macros


def _macro_utility_curve(instance, members):
    """util(N) = const + (sum w) * ln N for the closed-form PF split."""
    n_sf = instance.n_sf
    curve = np.full(n_sf + 1, 0.0)
    if not members:
        return curve
    w = instance.weights[members]
    r = instance.rates_macro[members]
    total_w = w.sum()
    if (r <= 0).any():
        return np.full(n_sf + 1, -math.inf)
    const = float(np.dot(w, np.log(r * w / total_w)))
    curve[0] = -math.inf
    for n in range(1, n_sf + 1):
        curve[n] = const + total_w * math.log(n)
    return curve


def _pico_utility_curve(instance, members):
    n_sf = instance.n_sf
    curve = np.zeros(n_sf + 1)
    if not members:
        return curve
    w = instance.weights[members]
    ra = instance.rates_pico_abs[members]
    rn = instance.rates_pico_nonabs[members]
    for a in range(n_sf + 1):
        _, _, tput, _, _ = pf_pico_allocation(w, ra, rn, a, n_sf)
        curve[a] = safe_log_utility(w, tput)
    return curve


def brute_force_opt(
    instance: NetworkInstance, max_enumeration: int = MAX_ENUMERATION
) -> Allocation:
    """Optimal allocation by exhaustive search (tiny instances only).

    Raises if the enumeration (associations times macro frame vectors)
    exceeds ``max_enumeration``.  Deterministic: the lexicographically
    first optimum over (association mask, frame vector) wins.
    """
    flexible = [u for u, ue in enumerate(instance.ues) if ue.best_pico is not None]
    size = _enumeration_size(instance, flexible)
    if size > max_enumeration:
        raise ValueError(
            f"instance needs {size} evaluations, above the {max_enumeration} cap"
        )
    n_sf = instance.n_sf
    best = (-math.inf, None, None)
    for mask in range(2 ** len(flexible)):
        to_pico = np.zeros(instance.n_ues, dtype=bool)
        for i, u in enumerate(flexible):
            if mask >> i & 1:
                to_pico[u] = True
        macro_curves = [
            _macro_utility_curve(
                instance,
                [u for u in instance.ues_by_macro[m] if not to_pico[u]],
            )
            for m in range(instance.n_macros)
        ]
        pico_curves = [
            _pico_utility_curve(
                instance,
                [u for u in instance.ues_by_pico[p] if to_pico[u]],
            )
            for p in range(instance.n_picos)
        ]
        for frames in itertools.product(range(n_sf + 1), repeat=instance.n_macros):
            util = 0.0
            for m in range(instance.n_macros):
                util += macro_curves[m][frames[m]]
                if util == -math.inf:
                    break
            else:
                for p in range(instance.n_picos):
                    a_p = min(
                        [n_sf - frames[m] for m in instance.interferers[p]],
                        default=n_sf,
                    )
                    util += pico_curves[p][a_p]
                    if util == -math.inf:
                        break
                else:
                    if util > best[0]:
                        best = (util, mask, frames)
    util, mask, frames = best
    if mask is None:
        raise ValueError("no association with finite utility exists")

    to_pico = np.zeros(instance.n_ues, dtype=bool)
    for i, u in enumerate(flexible):
        if mask >> i & 1:
            to_pico[u] = True
    nonabs = np.array(frames, dtype=np.int64)
    abs_p = np.array(
        [
            min([n_sf - frames[m] for m in instance.interferers[p]], default=n_sf)
            for p in range(instance.n_picos)
        ],
        dtype=np.int64,
    )
    x = np.zeros(instance.n_ues)
    y_a = np.zeros(instance.n_ues)
    y_n = np.zeros(instance.n_ues)
    for m in range(instance.n_macros):
        members = [u for u in instance.ues_by_macro[m] if not to_pico[u]]
        if members:
            mx, _ = pf_macro_allocation(
                instance.weights[members],
                instance.rates_macro[members],
                nonabs[m],
                cell=f"macro {m}",
            )
            x[members] = mx
    for p in range(instance.n_picos):
        members = [u for u in instance.ues_by_pico[p] if to_pico[u]]
        if members:
            ya, yn, _, _, _ = pf_pico_allocation(
                instance.weights[members],
                instance.rates_pico_abs[members],
                instance.rates_pico_nonabs[members],
                abs_p[p],
                n_sf,
                cell=f"pico {p}",
            )
            y_a[members] = ya
            y_n[members] = yn
    tput = (
        instance.rates_macro * x
        + instance.rates_pico_abs * y_a
        + instance.rates_pico_nonabs * y_n
    )
    return Allocation(
        association=tuple("pico" if t else "macro" for t in to_pico),
        abs_pico=abs_p,
        nonabs_macro=nonabs,
        x=x,
        y_abs=y_a,
        y_nonabs=y_n,
        throughput=tput,
        utility=safe_log_utility(instance.weights, tput),
    )


def optimality_gap(r_alg, r_rel, weights=None) -> float:
    """Smallest g in [0, 1) with Util(alg) >= Util(rel * (1 - g)).

    Computed as ``1 - exp((Util_alg - Util_rel) / sum(w))``; zero when the
    algorithm matches or beats the reference.  Both throughput vectors
    must be strictly positive.
    """
    r_alg = np.asarray(r_alg, dtype=float)
    r_rel = np.asarray(r_rel, dtype=float)
    if weights is None:
        weights = np.ones(r_alg.size)
    w = np.asarray(weights, dtype=float)
    u_alg = log_utility(w, r_alg)
    u_rel = log_utility(w, r_rel)
    if u_alg >= u_rel:
        return 0.0
    return 1.0 - math.exp((u_alg - u_rel) / w.sum())


# ---------------------------------------------------------------------------
# Tiny-instance verification harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    """Proposed pipeline vs exhaustive optimum on one random tiny instance."""

    seed: int
    n_macros: int
    n_picos: int
    n_ues: int
    alg_utility: float
    oracle_utility: float
    relaxed_utility: float
    gap_vs_oracle: float
    gap_vs_relaxed: float
    factor_bound_ok: bool


def verify_tiny_instances(
    n_trials: int,
    seed: int,
    delta: float = 0.1,
    epsilon: Optional[float] = None,
    max_iterations: int = 2_000_000,
) -> list:
    """Run solve+round vs the brute-force optimum on random tiny instances.

    ``factor_bound_ok`` checks the rounding guarantee
    ``Util(2*(1+delta)*R_alg) >= Util(R_opt)``; the solver tolerance
    defaults to ``ln(1+delta)`` per UE so the approximation slack absorbs
    the convergence error.
    """
    if epsilon is None:
        epsilon = math.log1p(delta)
    rng = np.random.default_rng(seed)
    results = []
    for k in range(n_trials):
        trial_seed = int(rng.integers(0, 2**31))
        shape_rng = np.random.default_rng(trial_seed)
        n_macros = int(shape_rng.integers(1, 3))
        n_picos = int(shape_rng.integers(1, 3))
        n_ues = int(shape_rng.integers(3, 9))
        inst = random_instance(
            trial_seed,
            n_macros=n_macros,
            n_picos=n_picos,
            n_ues=n_ues,
            n_sf=8,
            rate_lo=2000.0,
            rate_hi=16000.0,
        )
        sol = solve_relaxed(
            inst,
            SolverConfig(epsilon=epsilon, max_iterations=max_iterations),
            seed=trial_seed,
        )
        alloc = round_solution(sol, inst)
        opt = brute_force_opt(inst)
        w = inst.weights
        factor = float(np.dot(w, np.full(inst.n_ues, math.log(2.0 * (1.0 + delta)))))
        ok = alloc.utility + factor >= opt.utility - 1e-9
        results.append(
            TrialResult(
                seed=trial_seed,
                n_macros=n_macros,
                n_picos=n_picos,
                n_ues=n_ues,
                alg_utility=alloc.utility,
                oracle_utility=opt.utility,
                relaxed_utility=sol.relaxed_utility,
                gap_vs_oracle=optimality_gap(alloc.throughput, opt.throughput, w),
                gap_vs_relaxed=optimality_gap(
                    alloc.throughput, sol.z_avg.throughput, w
                ),
                factor_bound_ok=bool(ok),
            )
        )
    return results
