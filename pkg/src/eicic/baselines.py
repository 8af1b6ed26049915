"""Comparison schemes and the shared proportional-fair airtime allocator.

With association and frame counts fixed, each cell solves a weighted
proportional-fair airtime problem.  The macro case has the closed form
``x_u = w_u * N_m / sum(w)``.  The pico case couples two budgets (ABS
airtime <= A_p, total airtime <= n_sf) and is solved exactly from the KKT
conditions: at the optimum each served UE consumes airtime w/price on its
preferred resource, preferences are ordered by the ABS/non-ABS rate ratio,
so the split is a prefix in that order (possibly with one straddling
ratio group), and the two prices follow from the budget equalities.

The schemes themselves mirror the usual comparison points: network-wide
fixed (ABS count, bias) configurations, a local-optimal heuristic where
picos grab rate-improving UEs and macros blank the captured fraction,
plus no-eICIC and no-pico references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from eicic.model import Allocation, NetworkInstance, safe_log_utility


class AllocationError(ValueError):
    """Inner allocation cannot serve anybody in a cell."""


def pf_macro_allocation(weights, rates, n_frames, cell="macro"):
    """Closed-form weighted PF split of ``n_frames`` subframes.

    Returns ``(x, throughput)``.  Raises :class:`AllocationError` if no
    member has a positive rate.
    """
    w = np.asarray(weights, dtype=float)
    r = np.asarray(rates, dtype=float)
    if w.size == 0:
        return np.zeros(0), np.zeros(0)
    if not (r > 0).any():
        raise AllocationError(f"{cell}: all member rates are zero")
    x = w * (float(n_frames) / w.sum())
    return x, r * x


def pf_pico_allocation(weights, rates_abs, rates_nonabs, abs_frames, n_sf, cell="pico"):
    """Exact weighted PF allocation over ABS and non-ABS pico airtime.

    Maximizes sum(w * ln(r_abs*ate_A + r_nonabs*ate_nA)) subject to
    sum(y_abs) <= abs_frames and sum(y_abs + y_nonabs) <= n_sf.

    Returns ``(y_abs, y_nonabs, throughput, price_abs, price_total)`` where
    the prices are the multipliers of the two budgets (KKT residual at
    machine precision).  Members that cannot receive a positive rate under
    the budgets get zero airtime.  Raises :class:`AllocationError` if all
    member rates are zero.
    """
    w = np.asarray(weights, dtype=float)
    ra = np.asarray(rates_abs, dtype=float)
    rn = np.asarray(rates_nonabs, dtype=float)
    n = w.size
    y_abs = np.zeros(n)
    y_nab = np.zeros(n)
    if n == 0:
        return y_abs, y_nab, np.zeros(0), 0.0, 0.0
    if not ((ra > 0) | (rn > 0)).any():
        raise AllocationError(f"{cell}: all member rates are zero")
    A = min(max(float(abs_frames), 0.0), float(n_sf))

    # A member is servable if some budgeted resource carries a positive rate.
    active = (rn > 0) | ((ra > 0) & (A > 0))
    idx = np.nonzero(active)[0]
    if idx.size == 0:
        return y_abs, y_nab, ra * y_abs + rn * y_nab, 0.0, 0.0
    aw, ara, arn = w[idx], ra[idx], rn[idx]
    W = aw.sum()

    with np.errstate(divide="ignore"):
        rho = np.where(arn > 0, ara / np.where(arn > 0, arn, 1.0), np.inf)

    def _finish(ya, yn, theta, phi):
        y_abs[idx] = ya
        y_nab[idx] = yn
        tput = ra * y_abs + rn * y_nab
        return y_abs, y_nab, tput, theta, phi

    # ABS-budget-slack corner: a single price clears the total budget.
    phi0 = W / n_sf
    t = aw / phi0
    strict = rho > 1.0
    if t[strict].sum() <= A + 1e-12:
        ya = np.where(strict, t, 0.0)
        yn = np.where(strict, 0.0, t)
        rem = A - ya.sum()
        for j in np.nonzero(rho == 1.0)[0]:  # indifferent: fill leftover ABS
            if rem <= 0:
                break
            move = min(yn[j], rem)
            ya[j] += move
            yn[j] -= move
            rem -= move
        served = ya + yn > 0
        theta = 0.0
        if (~served).any() and (ara[~served] > 0).any():
            # Unservable ABS-only members with A == 0 stay at R = 0.
            pass
        return _finish(ya, yn, theta, phi0)

    if A <= 0:
        # Non-ABS only; only rn > 0 members are active here by construction.
        phi = W / n_sf
        yn = aw / phi
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = max(0.0, float(np.max(ara / arn)) * phi - phi)
        return _finish(np.zeros_like(yn), yn, theta, phi)

    if not (arn > 0).any():
        # Everyone is ABS-only; the total budget stays slack.
        price = W / A
        ya = aw / price
        return _finish(ya, np.zeros_like(ya), price, 0.0)

    # ABS budget binds: order ratio groups descending and locate the split.
    order = np.argsort(-rho, kind="stable")
    sorted_rho = rho[order]
    sorted_w = aw[order]
    # Group boundaries over equal ratios.
    starts = [0]
    for i in range(1, idx.size):
        if sorted_rho[i] != sorted_rho[i - 1]:
            starts.append(i)
    starts.append(idx.size)
    n_groups = len(starts) - 1
    group_rho = [sorted_rho[starts[g]] for g in range(n_groups)]
    group_w = [sorted_w[starts[g] : starts[g + 1]].sum() for g in range(n_groups)]
    prefix_w = np.concatenate([[0.0], np.cumsum(group_w)])

    ya_sorted = np.zeros(idx.size)
    yn_sorted = np.zeros(idx.size)
    split = None
    for k in range(1, n_groups):
        c_k = (prefix_w[k] * (n_sf - A)) / ((W - prefix_w[k]) * A)
        nxt = group_rho[k]
        if c_k >= nxt:
            split = (k, c_k)
            break
    if split is not None and split[1] <= group_rho[split[0] - 1]:
        # Clean split: k full groups on ABS, the rest on non-ABS.
        k = split[0]
        price_a = prefix_w[k] / A
        price_n = (W - prefix_w[k]) / (n_sf - A)
        ya_sorted[: starts[k]] = sorted_w[: starts[k]] / price_a
        yn_sorted[starts[k] :] = sorted_w[starts[k] :] / price_n
        theta, phi = price_a - price_n, price_n
    else:
        # Crossing lands inside a group: it straddles both resources.
        s = split[0] - 1 if split is not None else n_groups - 1
        rho_s = group_rho[s]
        phi = W / (rho_s * A + (n_sf - A))
        price_a = rho_s * phi
        w_pre = prefix_w[s]
        w_post = W - prefix_w[s + 1]
        t_abs = A - w_pre / price_a
        t_nab = (n_sf - A) - w_post / phi
        t_abs = max(t_abs, 0.0)
        t_nab = max(t_nab, 0.0)
        ya_sorted[: starts[s]] = sorted_w[: starts[s]] / price_a
        yn_sorted[starts[s + 1] :] = sorted_w[starts[s + 1] :] / phi
        g = slice(starts[s], starts[s + 1])
        frac = t_abs * price_a / group_w[s]
        ya_sorted[g] = frac * sorted_w[g] / price_a
        yn_sorted[g] = (1.0 - frac) * sorted_w[g] / phi
        theta = price_a - phi
    ya = np.zeros(idx.size)
    yn = np.zeros(idx.size)
    ya[order] = ya_sorted
    yn[order] = yn_sorted
    return _finish(ya, yn, theta, phi)


def inner_pf_allocation(
    weights,
    rates,
    frames,
    rates_nonabs=None,
    n_sf: Optional[int] = None,
    cell: str = "cell",
):
    """Dispatch to the macro or pico PF allocator.

    Macro mode: ``(weights, macro rates, N_m)`` -> ``(x, throughput)``.
    Pico mode: pass ABS rates plus ``rates_nonabs`` and ``n_sf``; ``frames``
    is the ABS budget -> ``(y_abs, y_nonabs, throughput, price_abs, price_total)``.
    """
    if rates_nonabs is None:
        return pf_macro_allocation(weights, rates, frames, cell=cell)
    if n_sf is None:
        raise ValueError("pico mode needs n_sf")
    return pf_pico_allocation(weights, rates, rates_nonabs, frames, n_sf, cell=cell)


# ---------------------------------------------------------------------------
# Scheme assembly
# ---------------------------------------------------------------------------


def assemble_allocation(
    instance: NetworkInstance,
    pico_assoc,
    abs_pico,
    nonabs_macro,
) -> Allocation:
    """Build a feasible allocation from an association plus frame counts,
    running the PF allocator inside every nonempty cell."""
    n = instance.n_ues
    pico_assoc = np.asarray(pico_assoc, dtype=bool)
    x = np.zeros(n)
    y_abs = np.zeros(n)
    y_nab = np.zeros(n)
    for m in range(instance.n_macros):
        members = [u for u in instance.ues_by_macro[m] if not pico_assoc[u]]
        if not members:
            continue
        mx, _ = pf_macro_allocation(
            instance.weights[members],
            instance.rates_macro[members],
            nonabs_macro[m],
            cell=f"macro {m}",
        )
        x[members] = mx
    for p in range(instance.n_picos):
        members = [u for u in instance.ues_by_pico[p] if pico_assoc[u]]
        if not members:
            continue
        ya, yn, _, _, _ = pf_pico_allocation(
            instance.weights[members],
            instance.rates_pico_abs[members],
            instance.rates_pico_nonabs[members],
            abs_pico[p],
            instance.n_sf,
            cell=f"pico {p}",
        )
        y_abs[members] = ya
        y_nab[members] = yn
    tput = (
        instance.rates_macro * x
        + instance.rates_pico_abs * y_abs
        + instance.rates_pico_nonabs * y_nab
    )
    return Allocation(
        association=tuple("pico" if a else "macro" for a in pico_assoc),
        abs_pico=np.asarray(abs_pico, dtype=np.int64),
        nonabs_macro=np.asarray(nonabs_macro, dtype=np.int64),
        x=x,
        y_abs=y_abs,
        y_nonabs=y_nab,
        throughput=tput,
        utility=safe_log_utility(instance.weights, tput),
    )


def _bias_association(instance: NetworkInstance, bias_db) -> np.ndarray:
    """Pico association mask under per-pico selection bias (macro bias 0)."""
    bias = np.asarray(bias_db, dtype=float)
    mask = np.zeros(instance.n_ues, dtype=bool)
    for u, ue in enumerate(instance.ues):
        if ue.best_pico is None:
            continue
        if ue.rsrp_pico + bias[ue.best_pico.index] >= ue.rsrp_macro:
            mask[u] = True
    return mask


def _interfering_macros(instance: NetworkInstance):
    out = set()
    for s in instance.interferers:
        out |= s
    return out


def fixed_eicic(abs_count: int, csb_db: float, instance: NetworkInstance) -> Allocation:
    """Network-wide fixed configuration: uniform ABS count and pico bias.

    Macros that interfere with at least one pico blank ``abs_count``
    subframes; isolated macros keep the full period.  Every pico uses
    ``abs_count`` ABS subframes.
    """
    if not (0 <= abs_count <= instance.n_sf):
        raise ValueError("abs_count outside ABS period")
    assoc = _bias_association(instance, np.full(instance.n_picos, float(csb_db)))
    blanking = _interfering_macros(instance)
    nonabs = np.array(
        [
            instance.n_sf - abs_count if m in blanking else instance.n_sf
            for m in range(instance.n_macros)
        ],
        dtype=np.int64,
    )
    abs_p = np.full(instance.n_picos, abs_count, dtype=np.int64)
    return assemble_allocation(instance, assoc, abs_p, nonabs)


def no_eicic(instance: NetworkInstance) -> Allocation:
    """Picos deployed, no coordination: zero bias, zero ABS."""
    return fixed_eicic(0, 0.0, instance)


def no_pico(instance: NetworkInstance) -> Allocation:
    """Macro-only reference: every UE on its best macro, full frames."""
    return assemble_allocation(
        instance,
        np.zeros(instance.n_ues, dtype=bool),
        np.zeros(instance.n_picos, dtype=np.int64),
        np.full(instance.n_macros, instance.n_sf, dtype=np.int64),
    )


def local_optimal_heuristic(
    instance: NetworkInstance, bias_grid: Optional[Sequence[float]] = None
) -> Allocation:
    """Per-pico greedy bias plus proportional macro blanking.

    Each pico picks the grid bias maximizing the summed PHY-rate improvement
    (ABS pico rate minus macro rate) over the UEs it would capture; each
    macro then offers ``ceil(n_sf * (1 - a_m))`` blanks where ``a_m`` is the
    fraction of its candidate UEs it retained, and each pico can use only
    the minimum number of blanks offered by its interferers.
    """
    if bias_grid is None:
        bias_grid = np.round(np.arange(0.0, 15.0 + 1e-9, 0.1), 6)
    bias = np.zeros(instance.n_picos)
    for p in range(instance.n_picos):
        members = instance.ues_by_pico[p]
        best_val = -math.inf
        best_b = float(bias_grid[0])
        for b in bias_grid:
            val = 0.0
            for u in members:
                ue = instance.ues[u]
                if ue.rsrp_pico + b >= ue.rsrp_macro:
                    val += ue.rate_pico_abs - ue.rate_macro
            if val > best_val + 1e-12:
                best_val = val
                best_b = float(b)
        bias[p] = best_b
    assoc = _bias_association(instance, bias)
    nonabs = np.empty(instance.n_macros, dtype=np.int64)
    for m in range(instance.n_macros):
        candidates = instance.ues_by_macro[m]
        if candidates:
            kept = sum(1 for u in candidates if not assoc[u])
            a_m = kept / len(candidates)
        else:
            a_m = 1.0
        offered = math.ceil(instance.n_sf * (1.0 - a_m))
        nonabs[m] = instance.n_sf - offered
    abs_p = np.empty(instance.n_picos, dtype=np.int64)
    for p in range(instance.n_picos):
        offers = [instance.n_sf - nonabs[m] for m in instance.interferers[p]]
        abs_p[p] = min(offers) if offers else instance.n_sf
    return assemble_allocation(instance, assoc, abs_p, nonabs)


#: Canonical fixed configurations, ABS counts out of a 40-subframe period.
FIXED_SCHEMES = ((5, 5.0), (10, 7.5), (15, 10.0), (15, 15.0))


def all_schemes(instance: NetworkInstance) -> dict:
    """Every comparison scheme except the proposed optimizer, by name.

    The fixed configurations' ABS counts are fractions of a 40-subframe
    period and are rescaled to the instance's ABS period.
    """
    out = {}
    for abs_count, csb in FIXED_SCHEMES:
        scaled = round(abs_count * instance.n_sf / 40)
        out[f"fixed-{abs_count}-{csb:g}"] = fixed_eicic(scaled, csb, instance)
    out["local-opt"] = local_optimal_heuristic(instance)
    out["no-eicic"] = no_eicic(instance)
    out["no-pico"] = no_pico(instance)
    return out
