"""Hand-built instances and independent oracles shared across the test suite."""

import math

import numpy as np

from eicic.model import Allocation, CellId, NetworkInstance, UeRecord


def make_ue(
    uid,
    macro=0,
    pico=None,
    rate_macro=1000.0,
    rate_abs=0.0,
    rate_nonabs=0.0,
    weight=1.0,
    rsrp_macro=-80.0,
    rsrp_pico=None,
):
    if pico is not None and rsrp_pico is None:
        rsrp_pico = rsrp_macro - 5.0
    return UeRecord(
        id=uid,
        weight=weight,
        best_macro=CellId.macro(macro),
        best_pico=None if pico is None else CellId.pico(pico),
        rate_macro=rate_macro,
        rate_pico_abs=rate_abs,
        rate_pico_nonabs=rate_nonabs,
        rsrp_macro=rsrp_macro,
        rsrp_pico=rsrp_pico,
    )


def make_instance(n_macros=1, n_picos=0, interferers=None, ues=(), n_sf=40):
    if interferers is None:
        interferers = [set(range(n_macros))] * n_picos
    return NetworkInstance(
        macros=tuple(CellId.macro(i) for i in range(n_macros)),
        picos=tuple(CellId.pico(i) for i in range(n_picos)),
        interferers=tuple(frozenset(s) for s in interferers),
        ues=tuple(ues),
        n_sf=n_sf,
    )


def lone_macro_instance(k=4, rate=1000.0, n_sf=40, weight=1.0):
    ues = [make_ue(i, rate_macro=rate, weight=weight) for i in range(k)]
    return make_instance(n_macros=1, n_picos=0, ues=ues, n_sf=n_sf)


def macro_pico_pair_instance(n_sf=40):
    """One macro, one pico (interfering), one macro-only UE, one pico-eligible UE."""
    ues = [
        make_ue(0, rate_macro=2000.0),
        make_ue(1, rate_macro=400.0, pico=0, rate_abs=3000.0, rate_nonabs=100.0),
    ]
    return make_instance(n_macros=1, n_picos=1, ues=ues, n_sf=n_sf)


def allocation_all_macro(instance, x=None):
    """Everybody on their macro with the full frame split equally per cell."""
    n = instance.n_ues
    if x is None:
        x = np.zeros(n)
        for m in range(instance.n_macros):
            members = instance.ues_by_macro[m]
            for u in members:
                x[u] = instance.n_sf / len(members)
    tput = instance.rates_macro * x
    util = (
        float(np.dot(instance.weights, np.log(tput)))
        if (tput > 0).all()
        else -math.inf
    )
    return Allocation(
        association=("macro",) * n,
        abs_pico=np.zeros(instance.n_picos, dtype=int),
        nonabs_macro=np.full(instance.n_macros, instance.n_sf, dtype=int),
        x=x,
        y_abs=np.zeros(n),
        y_nonabs=np.zeros(n),
        throughput=tput,
        utility=util,
    )


def lagrangian_by_hand(z, p, instance):
    """Independent expansion of the five penalty groups using plain loops."""
    total = 0.0
    for u, ue in enumerate(instance.ues):
        total += ue.weight * math.log(z.throughput[u])
        served = (
            ue.rate_macro * z.x[u]
            + ue.rate_pico_abs * z.y_abs[u]
            + ue.rate_pico_nonabs * z.y_nonabs[u]
        )
        total -= p.lam[u] * (z.throughput[u] - served)
    for e, (pi, mi) in enumerate(instance.edges):
        total -= p.mu[e] * (z.abs_pico[pi] + z.nonabs_macro[mi] - instance.n_sf)
    for m in range(instance.n_macros):
        s = sum(z.x[u] for u in instance.ues_by_macro[m])
        total -= p.beta_macro[m] * (s - z.nonabs_macro[m])
    for pi in range(instance.n_picos):
        sa = sum(z.y_abs[u] for u in instance.ues_by_pico[pi])
        st = sum(z.y_abs[u] + z.y_nonabs[u] for u in instance.ues_by_pico[pi])
        total -= p.beta_pico[pi] * (sa - z.abs_pico[pi])
        total -= p.alpha[pi] * (st - instance.n_sf)
    return total
