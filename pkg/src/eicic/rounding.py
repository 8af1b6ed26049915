"""Rounding of the relaxed solution into a feasible integral allocation.

Three steps: pick each UE's side by comparing the throughput it drew from
macro vs pico airtime in the averaged relaxed point, round the frame
counts (floor above half the ABS period, ceil below), then rescale every
cell's airtimes so they exactly fill the rounded frame budgets.

Subgradient averages can carry a small slack violation on the per-edge
frame constraint, so a repair pass shrinks pico ABS counts (never macro
frame counts, which serve more UEs) until every edge satisfies
``A_p + N_m <= n_sf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from eicic.model import (
    MACRO,
    PICO,
    Allocation,
    NetworkInstance,
    PrimalState,
    safe_log_utility,
)
from eicic.solver import RelaxedSolution

_SLACK = 1e-9


def rnd(x: float, n_sf: int) -> int:
    """Round a frame count: floor when x >= n_sf/2, ceil otherwise.

    ``x`` must lie in ``[0, n_sf]`` up to 1e-9 slack (clamped); anything
    further out is an error.
    """
    if x < -_SLACK or x > n_sf + _SLACK:
        raise ValueError(f"frame count {x} outside [0, {n_sf}]")
    x = min(max(x, 0.0), float(n_sf))
    return math.floor(x) if x >= n_sf / 2.0 else math.ceil(x)


def associate_users(z_hat: PrimalState, instance: NetworkInstance) -> tuple:
    """Binary association from the relaxed averages.

    A UE goes to the side that delivered more throughput in the averaged
    point; exact ties go to the pico.  UEs without a candidate pico always
    stay on the macro, as does a UE whose pico link rates are all zero
    (the zero-zero tie would otherwise strand it on a dead pico link).
    """
    labels = []
    for u, ue in enumerate(instance.ues):
        if ue.best_pico is None:
            labels.append(MACRO)
            continue
        r_mac = ue.rate_macro * z_hat.x[u]
        r_pic = ue.rate_pico_abs * z_hat.y_abs[u] + ue.rate_pico_nonabs * z_hat.y_nonabs[u]
        if r_mac > r_pic:
            labels.append(MACRO)
        elif r_pic == 0.0 and ue.rate_pico_abs == 0.0:
            labels.append(MACRO)
        else:
            labels.append(PICO)
    return tuple(labels)


@dataclass(frozen=True)
class RepairEntry:
    pico: int
    rounded: int
    repaired: int
    binding_macro: int


def round_abs(z_hat: PrimalState, associations: tuple, instance: NetworkInstance):
    """Round frame counts to integers and repair residual edge violations.

    Returns ``(abs_pico, nonabs_macro, repair_log)``.  The association
    labels do not influence the counts; they are threaded through for
    pipeline clarity.
    """
    n_sf = instance.n_sf
    nonabs = np.array(
        [rnd(float(z_hat.nonabs_macro[m]), n_sf) for m in range(instance.n_macros)],
        dtype=np.int64,
    )
    abs_p = np.array(
        [rnd(float(z_hat.abs_pico[p]), n_sf) for p in range(instance.n_picos)],
        dtype=np.int64,
    )
    log = []
    for p in range(instance.n_picos):
        cap = n_sf
        binding = -1
        for m in instance.interferers[p]:
            room = n_sf - int(nonabs[m])
            if room < cap:
                cap = room
                binding = m
        if abs_p[p] > cap:
            log.append(RepairEntry(pico=p, rounded=int(abs_p[p]), repaired=cap,
                                   binding_macro=binding))
            abs_p[p] = cap
    return abs_p, nonabs, tuple(log)


def finalize(
    z_hat: PrimalState,
    associations: tuple,
    abs_pico,
    nonabs_macro,
    instance: NetworkInstance,
) -> Allocation:
    """Scale the relaxed airtimes onto the rounded frame budgets.

    Within each cell the members' relaxed airtime shares are scaled to fill
    the integral budget exactly; a cell whose members carry zero relaxed
    mass splits its frames equally among them.
    """
    n = instance.n_ues
    x = np.zeros(n)
    y_abs = np.zeros(n)
    y_nab = np.zeros(n)
    pico_assoc = np.array([lab == PICO for lab in associations])

    for m in range(instance.n_macros):
        members = [u for u in instance.ues_by_macro[m] if not pico_assoc[u]]
        if not members:
            continue
        mass = float(z_hat.x[members].sum())
        if mass > 0.0:
            scale = float(nonabs_macro[m]) / mass
            x[members] = z_hat.x[members] * scale
        else:
            x[members] = float(nonabs_macro[m]) / len(members)

    for p in range(instance.n_picos):
        members = [u for u in instance.ues_by_pico[p] if pico_assoc[u]]
        if not members:
            continue
        budget_abs = float(abs_pico[p])
        budget_nab = float(instance.n_sf - abs_pico[p])
        mass_a = float(z_hat.y_abs[members].sum())
        mass_n = float(z_hat.y_nonabs[members].sum())
        if mass_a > 0.0:
            y_abs[members] = z_hat.y_abs[members] * (budget_abs / mass_a)
        else:
            y_abs[members] = budget_abs / len(members)
        if mass_n > 0.0:
            y_nab[members] = z_hat.y_nonabs[members] * (budget_nab / mass_n)
        else:
            y_nab[members] = budget_nab / len(members)

    tput = (
        instance.rates_macro * x
        + instance.rates_pico_abs * y_abs
        + instance.rates_pico_nonabs * y_nab
    )
    return Allocation(
        association=tuple(associations),
        abs_pico=np.asarray(abs_pico, dtype=np.int64),
        nonabs_macro=np.asarray(nonabs_macro, dtype=np.int64),
        x=x,
        y_abs=y_abs,
        y_nonabs=y_nab,
        throughput=tput,
        utility=safe_log_utility(instance.weights, tput),
    )


def round_solution(relaxed: RelaxedSolution, instance: NetworkInstance) -> Allocation:
    """Association, rounding and rescaling in one call."""
    labels = associate_users(relaxed.z_avg, instance)
    abs_p, nonabs, _ = round_abs(relaxed.z_avg, labels, instance)
    return finalize(relaxed.z_avg, labels, abs_p, nonabs, instance)
