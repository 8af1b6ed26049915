"""Jit-compiled subgradient loop for one interference-graph component.

One iteration runs the greedy primal updates (per-UE throughput, one
winner-takes-the-frame UE per macro and per pico resource, bang-bang frame
counts) followed by the projected dual step, accumulating the running
primal average.  Argmax ties are broken uniformly at random via a
counter-based hash of (seed, iteration, resource, UE), so runs are
reproducible without carrying RNG state.

All rates entering the kernel are pre-normalized by the component's
maximum rate; see :mod:`eicic.solver`.
"""

import numpy as np
from numba import njit

U64 = np.uint64

_K_T = U64(0x9E3779B97F4A7C15)
_K_D = U64(0xBF58476D1CE4E5B9)
_K_U = U64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _tie_key(seed, t, domain, u):
    return _mix64(seed ^ (U64(t) * _K_T) ^ (U64(domain) * _K_D) ^ (U64(u) * _K_U))


@njit(cache=True)
def run_component(
    n_sf,
    iterations,
    gamma,
    w,
    r_mac,
    r_abs,
    r_nab,
    lam,
    beta_m,
    beta_p,
    alpha,
    mac_members,
    mac_starts,
    pic_members,
    pic_starts,
    edge_p,
    edge_m,
    seed,
    r_min_clamp,
    r_max_clamp,
    record_trace,
    trace_stride,
):
    n = w.size
    n_macros = mac_starts.size - 1
    n_picos = pic_starts.size - 1
    n_edges = edge_p.size
    s64 = U64(seed)

    mu = np.zeros(n_edges)
    musum_m = np.zeros(n_macros)
    musum_p = np.zeros(n_picos)

    x = np.zeros(n)
    y_a = np.zeros(n)
    y_n = np.zeros(n)
    big_r = np.zeros(n)
    n_arr = np.zeros(n_macros)
    a_arr = np.zeros(n_picos)
    win_m = np.full(n_macros, -1, dtype=np.int64)
    win_pa = np.full(n_picos, -1, dtype=np.int64)
    win_pn = np.full(n_picos, -1, dtype=np.int64)

    acc_x = np.zeros(n)
    acc_ya = np.zeros(n)
    acc_yn = np.zeros(n)
    acc_r = np.zeros(n)
    acc_a = np.zeros(n_picos)
    acc_n = np.zeros(n_macros)

    trace_len = (iterations + trace_stride - 1) // trace_stride if record_trace else 0
    dual_trace = np.empty(trace_len)
    primal_trace = np.empty(trace_len)

    for t in range(1, iterations + 1):
        sample = record_trace and (t - 1) % trace_stride == 0
        # Per-UE throughput: maximizer of w*ln(R) - lam*R on the clamp box.
        for u in range(n):
            lu = lam[u]
            if lu > 0.0:
                ru = w[u] / lu
                if ru > r_max_clamp:
                    ru = r_max_clamp
                elif ru < r_min_clamp:
                    ru = r_min_clamp
            else:
                ru = r_max_clamp
            big_r[u] = ru

        for m in range(n_macros):
            musum_m[m] = 0.0
        for p in range(n_picos):
            musum_p[p] = 0.0
        for e in range(n_edges):
            musum_m[edge_m[e]] += mu[e]
            musum_p[edge_p[e]] += mu[e]

        trace_gh = 0.0

        # Macro frame counts and frame-winner UEs.
        for m in range(n_macros):
            coef = beta_m[m] - musum_m[m]
            nm = n_sf if coef >= 0.0 else 0.0
            n_arr[m] = nm
            if win_m[m] >= 0:
                x[win_m[m]] = 0.0
            best = -1
            best_s = 0.0
            best_key = U64(0)
            have_key = False
            for ii in range(mac_starts[m], mac_starts[m + 1]):
                u = mac_members[ii]
                s = lam[u] * r_mac[u] - beta_m[m]
                if s <= 0.0:
                    continue
                if best < 0 or s > best_s:
                    best = u
                    best_s = s
                    have_key = False
                elif s == best_s:
                    if not have_key:
                        best_key = _tie_key(s64, t, 0, best)
                        have_key = True
                    k = _tie_key(s64, t, 0, u)
                    if k > best_key:
                        best = u
                        best_key = k
            win_m[m] = best
            if best >= 0:
                x[best] = n_sf
                acc_x[best] += n_sf
                if sample:
                    trace_gh += n_sf * best_s
            acc_n[m] += nm
            if sample:
                trace_gh += nm * coef

        # Pico frame counts and the two per-pico resource winners.
        for p in range(n_picos):
            coef = beta_p[p] - musum_p[p]
            ap = n_sf if coef >= 0.0 else 0.0
            a_arr[p] = ap
            if win_pa[p] >= 0:
                y_a[win_pa[p]] = 0.0
            if win_pn[p] >= 0:
                y_n[win_pn[p]] = 0.0
            price_a = beta_p[p] + alpha[p]
            best_a = -1
            best_as = 0.0
            best_ak = U64(0)
            have_ak = False
            best_n = -1
            best_ns = 0.0
            best_nk = U64(0)
            have_nk = False
            for ii in range(pic_starts[p], pic_starts[p + 1]):
                u = pic_members[ii]
                s = lam[u] * r_abs[u] - price_a
                if s > 0.0:
                    if best_a < 0 or s > best_as:
                        best_a = u
                        best_as = s
                        have_ak = False
                    elif s == best_as:
                        if not have_ak:
                            best_ak = _tie_key(s64, t, 1, best_a)
                            have_ak = True
                        k = _tie_key(s64, t, 1, u)
                        if k > best_ak:
                            best_a = u
                            best_ak = k
                sn = lam[u] * r_nab[u] - alpha[p]
                if sn > 0.0:
                    if best_n < 0 or sn > best_ns:
                        best_n = u
                        best_ns = sn
                        have_nk = False
                    elif sn == best_ns:
                        if not have_nk:
                            best_nk = _tie_key(s64, t, 2, best_n)
                            have_nk = True
                        k = _tie_key(s64, t, 2, u)
                        if k > best_nk:
                            best_n = u
                            best_nk = k
            win_pa[p] = best_a
            win_pn[p] = best_n
            if best_a >= 0:
                y_a[best_a] = n_sf
                acc_ya[best_a] += n_sf
                if sample:
                    trace_gh += n_sf * best_as
            if best_n >= 0:
                y_n[best_n] = n_sf
                acc_yn[best_n] += n_sf
                if sample:
                    trace_gh += n_sf * best_ns
            acc_a[p] += ap
            if sample:
                trace_gh += ap * coef

        if sample:
            # Dual cost at the pre-update prices: the greedy primal point is
            # exactly the inner maximizer of the Lagrangian.
            f_part = 0.0
            for u in range(n):
                f_part += w[u] * np.log(big_r[u]) - lam[u] * big_r[u]
            const = 0.0
            for e in range(n_edges):
                const += mu[e]
            for p in range(n_picos):
                const += alpha[p]
            dual_trace[(t - 1) // trace_stride] = f_part + trace_gh + n_sf * const

        # Projected subgradient step on every multiplier family.
        for u in range(n):
            acc_r[u] += big_r[u]
            g = big_r[u] - r_mac[u] * x[u] - r_abs[u] * y_a[u] - r_nab[u] * y_n[u]
            nl = lam[u] + gamma * g
            lam[u] = nl if nl > 0.0 else 0.0
        for m in range(n_macros):
            xsum = n_sf if win_m[m] >= 0 else 0.0
            nb = beta_m[m] + gamma * (xsum - n_arr[m])
            beta_m[m] = nb if nb > 0.0 else 0.0
        for e in range(n_edges):
            nm_ = mu[e] + gamma * (a_arr[edge_p[e]] + n_arr[edge_m[e]] - n_sf)
            mu[e] = nm_ if nm_ > 0.0 else 0.0
        for p in range(n_picos):
            yasum = n_sf if win_pa[p] >= 0 else 0.0
            ytot = yasum + (n_sf if win_pn[p] >= 0 else 0.0)
            nb = beta_p[p] + gamma * (yasum - a_arr[p])
            beta_p[p] = nb if nb > 0.0 else 0.0
            na = alpha[p] + gamma * (ytot - n_sf)
            alpha[p] = na if na > 0.0 else 0.0

        if sample:
            util = 0.0
            inv_t = 1.0 / t
            for u in range(n):
                util += w[u] * np.log(acc_r[u] * inv_t)
            primal_trace[(t - 1) // trace_stride] = util

    inv = 1.0 / iterations
    for u in range(n):
        acc_x[u] *= inv
        acc_ya[u] *= inv
        acc_yn[u] *= inv
        acc_r[u] *= inv
    for m in range(n_macros):
        acc_n[m] *= inv
    for p in range(n_picos):
        acc_a[p] *= inv

    return (
        acc_x,
        acc_ya,
        acc_yn,
        acc_r,
        acc_a,
        acc_n,
        lam,
        mu,
        beta_m,
        beta_p,
        alpha,
        dual_trace,
        primal_trace,
    )
