"""Dual subgradient solver for the relaxed joint ABS/association problem.

The relaxed problem (frame counts real-valued, no association exclusivity)
is solved by iterating a greedy primal update against the current prices
and a projected subgradient step on the duals, then averaging the primal
iterates.  The step size and iteration count follow the convergence-based
rule ``gamma = N*eps/Q^2``, ``T = (Q*B/(N*eps))^2`` with

    Q^2 = n_sf^2 (N r_max^2 + M + P + 2 I)
    B^2 = (|W|^2 / n_sf^2) (1 + 2 I_max + U_max / r_min)

computed per interference-graph component.  Internally each component is
solved on a rate-normalized copy (all rates divided by the component
maximum); this is an exact reparametrization of the same problem that
keeps the rule's step size and iteration count usable, and all returned
quantities are mapped back to the original units.

Disconnected components (interference edges plus shared-UE candidacy) are
independent subproblems and are solved separately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from eicic import _kernel
from eicic.model import (
    CellId,
    ConvergenceParams,
    DualState,
    NetworkInstance,
    PrimalState,
    UeRecord,
)

_MASK = (1 << 64) - 1
_K_T = 0x9E3779B97F4A7C15
_K_D = 0xBF58476D1CE4E5B9
_K_U = 0x94D049BB133111EB

#: Default cap on the rule's iteration count; the worst-case bound is
#: pessimistic and empirical convergence is far faster.
DEFAULT_MAX_ITERATIONS = 2_000_000

#: Cap on the step-size boost applied when the iteration budget falls below
#: the rule's count (validated over scenario spreads in the test suite).
CLAMPED_STEP_BOOST = 30.0


def mix64(z: int) -> int:
    """64-bit finalizer used for all tie-break hashing (pure-python twin of
    the jitted kernel's)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def tie_key(seed: int, t: int, domain: int, u: int) -> int:
    return mix64(seed ^ (t * _K_T & _MASK) ^ (domain * _K_D & _MASK) ^ (u * _K_U & _MASK))


# ---------------------------------------------------------------------------
# Step-size / iteration rule
# ---------------------------------------------------------------------------


def q_squared(params: ConvergenceParams) -> float:
    return params.n_sf**2 * (
        params.n_ues * params.r_max**2
        + params.n_macros
        + params.n_picos
        + 2 * params.n_edges
    )


def b_squared(params: ConvergenceParams) -> float:
    if params.r_min <= 0:
        raise ValueError(
            "r_min is zero: exclude zero-rate links before deriving iterations"
        )
    return (params.weights_norm_sq / params.n_sf**2) * (
        1.0 + 2.0 * params.i_max + params.u_max / params.r_min
    )


def derive_step_and_iterations(
    params: ConvergenceParams,
    epsilon: float,
    max_iterations: Optional[int] = None,
):
    """Step size and iteration count for a per-UE utility tolerance.

    Returns ``(gamma, T)`` with ``gamma = N*eps/Q^2`` and
    ``T = ceil((Q*B/(N*eps))^2)``, ``T`` clamped to ``max_iterations``
    (with a warning) when given.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if params.n_ues < 1:
        raise ValueError("iteration rule needs at least one UE")
    q2 = q_squared(params)
    b2 = b_squared(params)
    n_eps = params.n_ues * epsilon
    gamma = n_eps / q2
    t = math.ceil(q2 * b2 / n_eps**2)
    if max_iterations is not None and t > max_iterations:
        warnings.warn(
            f"iteration rule asks for {t} iterations; clamping to {max_iterations}",
            stacklevel=2,
        )
        t = max_iterations
    return gamma, t


# ---------------------------------------------------------------------------
# Reference primal/dual updates (definitional; the jitted kernel is the
# fast path and is cross-checked against these in the tests)
# ---------------------------------------------------------------------------


def primal_update_user(lam_u: float, w_u: float, r_min_clamp: float, r_max_clamp: float) -> float:
    """Throughput maximizing w*ln(R) - lam*R on the clamp box: w/lam clipped."""
    if lam_u <= 0.0:
        return r_max_clamp
    return min(max(w_u / lam_u, r_min_clamp), r_max_clamp)


def _pick_winner(scores, members, rng):
    """Index of the positive-score argmax, ties uniform at random; -1 if none."""
    best = -1
    best_s = 0.0
    ties = []
    for u, s in zip(members, scores):
        if s <= 0.0:
            continue
        if best < 0 or s > best_s:
            best, best_s, ties = u, s, [u]
        elif s == best_s:
            ties.append(u)
    if len(ties) > 1:
        best = ties[int(rng.integers(0, len(ties)))]
    return best


def primal_update_macro(m: int, dual: DualState, instance: NetworkInstance, rng):
    """Greedy macro update: bang-bang frame count plus one frame-winner UE.

    Returns ``(n_m, x_members)`` with ``x_members`` aligned with
    ``instance.ues_by_macro[m]``.
    """
    mu_sum = sum(
        dual.mu[e] for e, (_, mi) in enumerate(instance.edges) if mi == m
    )
    n_m = float(instance.n_sf) if dual.beta_macro[m] - mu_sum >= 0.0 else 0.0
    members = instance.ues_by_macro[m]
    scores = [
        dual.lam[u] * instance.rates_macro[u] - dual.beta_macro[m] for u in members
    ]
    winner = _pick_winner(scores, members, rng)
    x = np.zeros(len(members))
    for i, u in enumerate(members):
        if u == winner:
            x[i] = float(instance.n_sf)
    return n_m, x


def primal_update_pico(p: int, dual: DualState, instance: NetworkInstance, rng):
    """Greedy pico update: bang-bang ABS count plus one winner per resource.

    Returns ``(a_p, y_abs_members, y_nonabs_members)`` aligned with
    ``instance.ues_by_pico[p]``; the same UE may win both resources.
    """
    mu_sum = sum(
        dual.mu[e] for e, (pi, _) in enumerate(instance.edges) if pi == p
    )
    a_p = float(instance.n_sf) if dual.beta_pico[p] - mu_sum >= 0.0 else 0.0
    members = instance.ues_by_pico[p]
    price_abs = dual.beta_pico[p] + dual.alpha[p]
    s_abs = [dual.lam[u] * instance.rates_pico_abs[u] - price_abs for u in members]
    s_nab = [
        dual.lam[u] * instance.rates_pico_nonabs[u] - dual.alpha[p] for u in members
    ]
    win_a = _pick_winner(s_abs, members, rng)
    win_n = _pick_winner(s_nab, members, rng)
    y_a = np.zeros(len(members))
    y_n = np.zeros(len(members))
    for i, u in enumerate(members):
        if u == win_a:
            y_a[i] = float(instance.n_sf)
        if u == win_n:
            y_n[i] = float(instance.n_sf)
    return a_p, y_a, y_n


def dual_update(
    p: DualState, z: PrimalState, gamma: float, instance: NetworkInstance
) -> DualState:
    """One projected subgradient step; each multiplier moves by gamma times
    its constraint residual, then is clipped at zero."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    served = (
        instance.rates_macro * z.x
        + instance.rates_pico_abs * z.y_abs
        + instance.rates_pico_nonabs * z.y_nonabs
    )
    lam = np.maximum(p.lam + gamma * (z.throughput - served), 0.0)
    x_mac = np.bincount(
        instance.ue_macro_index, weights=z.x, minlength=instance.n_macros
    )
    beta_m = np.maximum(p.beta_macro + gamma * (x_mac - z.nonabs_macro), 0.0)
    mask = instance.ue_pico_index >= 0
    ya_pic = np.bincount(
        instance.ue_pico_index[mask],
        weights=z.y_abs[mask],
        minlength=instance.n_picos,
    ) if mask.any() else np.zeros(instance.n_picos)
    ytot_pic = np.bincount(
        instance.ue_pico_index[mask],
        weights=(z.y_abs + z.y_nonabs)[mask],
        minlength=instance.n_picos,
    ) if mask.any() else np.zeros(instance.n_picos)
    beta_p = np.maximum(p.beta_pico + gamma * (ya_pic - z.abs_pico), 0.0)
    alpha = np.maximum(p.alpha + gamma * (ytot_pic - instance.n_sf), 0.0)
    mu = p.mu.copy()
    for e, (pi, mi) in enumerate(instance.edges):
        g = z.abs_pico[pi] + z.nonabs_macro[mi] - instance.n_sf
        mu[e] = max(p.mu[e] + gamma * g, 0.0)
    return DualState(lam=lam, mu=mu, beta_macro=beta_m, beta_pico=beta_p, alpha=alpha)


# ---------------------------------------------------------------------------
# Component decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    """One independent subproblem with maps back into the parent instance."""

    instance: NetworkInstance
    macro_ids: tuple  # original macro indices, ascending
    pico_ids: tuple
    ue_positions: tuple  # original UE positions, ascending


def decompose_components(instance: NetworkInstance):
    """Split into independent subproblems.

    Cells are connected by interference edges and by shared candidate UEs
    (a UE whose best macro and best pico land in different cells couples
    them); solving the components separately and merging is exact.
    """
    m_count = instance.n_macros
    parent = list(range(m_count + instance.n_picos))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for pi, mi in instance.edges:
        union(mi, m_count + pi)
    for ue in instance.ues:
        if ue.best_pico is not None:
            union(ue.best_macro.index, m_count + ue.best_pico.index)

    roots = {}
    order = []
    for node in range(m_count + instance.n_picos):
        r = find(node)
        if r not in roots:
            roots[r] = len(order)
            order.append(r)

    comp_macros = [[] for _ in order]
    comp_picos = [[] for _ in order]
    for m in range(m_count):
        comp_macros[roots[find(m)]].append(m)
    for p in range(instance.n_picos):
        comp_picos[roots[find(m_count + p)]].append(p)
    comp_ues = [[] for _ in order]
    for pos, ue in enumerate(instance.ues):
        comp_ues[roots[find(ue.best_macro.index)]].append(pos)

    components = []
    for ci in range(len(order)):
        macro_map = {m: i for i, m in enumerate(comp_macros[ci])}
        pico_map = {p: i for i, p in enumerate(comp_picos[ci])}
        ues = []
        for pos in comp_ues[ci]:
            ue = instance.ues[pos]
            ues.append(
                replace(
                    ue,
                    best_macro=CellId.macro(macro_map[ue.best_macro.index]),
                    best_pico=None
                    if ue.best_pico is None
                    else CellId.pico(pico_map[ue.best_pico.index]),
                )
            )
        sub = NetworkInstance(
            macros=tuple(CellId.macro(i) for i in range(len(comp_macros[ci]))),
            picos=tuple(CellId.pico(i) for i in range(len(comp_picos[ci]))),
            interferers=tuple(
                frozenset(
                    macro_map[m]
                    for m in instance.interferers[p]
                    if m in macro_map
                )
                for p in comp_picos[ci]
            ),
            ues=tuple(ues),
            n_sf=instance.n_sf,
        )
        components.append(
            Component(
                instance=sub,
                macro_ids=tuple(comp_macros[ci]),
                pico_ids=tuple(comp_picos[ci]),
                ue_positions=tuple(comp_ues[ci]),
            )
        )
    return components


# ---------------------------------------------------------------------------
# Full solve
# ---------------------------------------------------------------------------

#: ABS share assumed by the dual warm start.
WARM_START_ABS_FRACTION = 0.25


def _warm_start_duals(sub, r_mac, r_abs, r_nab, lam_floor):
    """Dual variables at fair-share scale.

    A subgradient step moves a user price by gamma times a bounded
    residual, so a price starting far from its equilibrium (which spans
    decades: it is inversely proportional to the UE's tiny throughput
    share) cannot get there within any practical iteration budget.  Each
    UE's price therefore starts at w/R0 where R0 is the best fair-share
    throughput over its candidate cells; cell prices start at the matching
    candidate-load level.  Cell prices cancel inside the per-cell argmax
    and adjust quickly; it is the per-UE prices that must start at the
    right magnitude.
    """
    n_sf = sub.n_sf
    w = sub.weights
    w_macro = np.zeros(sub.n_macros)
    w_pico = np.zeros(sub.n_picos)
    for m in range(sub.n_macros):
        members = list(sub.ues_by_macro[m])
        if members:
            w_macro[m] = w[members].sum()
    for p in range(sub.n_picos):
        members = list(sub.ues_by_pico[p])
        if members:
            w_pico[p] = w[members].sum()

    abs_frames = WARM_START_ABS_FRACTION * n_sf
    r0 = np.zeros(sub.n_ues)
    for u, ue in enumerate(sub.ues):
        m = ue.best_macro.index
        best = r_mac[u] * n_sf * w[u] / max(w_macro[m], w[u])
        if ue.best_pico is not None:
            p = ue.best_pico.index
            share = w[u] / max(w_pico[p], w[u])
            best = max(
                best,
                r_abs[u] * abs_frames * share,
                r_nab[u] * (n_sf - abs_frames) * share,
            )
        r0[u] = best
    lam0 = w / np.maximum(r0, max(lam_floor, 1e-300))
    beta_m0 = w_macro / n_sf
    alpha0 = w_pico / n_sf
    beta_p0 = 3.0 * w_pico / n_sf  # ABS premium at the assumed ABS share
    return lam0, beta_m0, beta_p0, alpha0


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs.

    ``epsilon`` is the per-UE utility tolerance driving the step/iteration
    rule.  ``step_size`` and ``iterations`` override the rule when given;
    the step size is interpreted in the rate-normalized domain the solver
    iterates in.  ``max_iterations`` caps the rule's (often astronomically
    pessimistic) iteration count.
    """

    epsilon: float = 0.05
    step_size: Optional[float] = None
    iterations: Optional[int] = None
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    record_trace: bool = False
    trace_stride: int = 1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size override must be positive")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations override must be at least 1")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be at least 1")


@dataclass(frozen=True)
class ComponentResult:
    """Per-component solve diagnostics (all rate-dependent constants are in
    the normalized domain; traces are in original utility units)."""

    macro_ids: tuple
    pico_ids: tuple
    ue_positions: tuple
    gamma: float
    iterations: int
    rule_iterations: Optional[int]
    clamped: bool
    epsilon: float
    q_squared: float
    b_squared: float
    rate_scale: float
    utility_offset: float
    dual_cost_trace: Optional[np.ndarray]
    primal_utility_trace: Optional[np.ndarray]

    def convergence_bound(self) -> float:
        """Dual-averaging error bound B^2/(2 gamma T) + gamma Q^2 / 2."""
        return self.b_squared / (2.0 * self.gamma * self.iterations) + (
            self.gamma * self.q_squared / 2.0
        )


@dataclass(frozen=True)
class RelaxedSolution:
    """Averaged primal point, final duals, and solve diagnostics."""

    z_avg: PrimalState
    final_dual: DualState
    relaxed_utility: float
    dual_cost_trace: Optional[np.ndarray]
    primal_utility_trace: Optional[np.ndarray]
    components: tuple
    trace_stride: int = 1

    @property
    def dual_bound(self) -> Optional[float]:
        """Best (lowest) traced dual cost: an upper bound on the relaxed
        optimum, hence on any feasible utility."""
        if self.dual_cost_trace is None or len(self.dual_cost_trace) == 0:
            return None
        return float(np.min(self.dual_cost_trace))


def _members_csr(groups, n_cells):
    members = []
    starts = np.zeros(n_cells + 1, dtype=np.int64)
    for c in range(n_cells):
        members.extend(groups[c])
        starts[c + 1] = len(members)
    return np.asarray(members, dtype=np.int64), starts


def solve_relaxed(
    instance: NetworkInstance, config: SolverConfig, seed: int
) -> RelaxedSolution:
    """Run the averaged dual subgradient method on every component.

    Deterministic given ``seed``: all argmax tie-breaking derives from it.
    """
    components = decompose_components(instance)
    n = instance.n_ues
    x = np.zeros(n)
    y_a = np.zeros(n)
    y_n = np.zeros(n)
    big_r = np.zeros(n)
    abs_p = np.zeros(instance.n_picos)
    nonabs_m = np.zeros(instance.n_macros)
    lam = np.zeros(n)
    mu = np.zeros(len(instance.edges))
    beta_m = np.zeros(instance.n_macros)
    beta_p = np.zeros(instance.n_picos)
    alpha = np.zeros(instance.n_picos)
    edge_pos = {edge: e for e, edge in enumerate(instance.edges)}

    results = []
    for ci, comp in enumerate(components):
        sub = comp.instance
        if sub.n_ues == 0:
            # Nothing to serve: macros keep the full frame, picos need none.
            for i, m in enumerate(comp.macro_ids):
                nonabs_m[m] = float(instance.n_sf)
            results.append(
                ComponentResult(
                    macro_ids=comp.macro_ids,
                    pico_ids=comp.pico_ids,
                    ue_positions=(),
                    gamma=0.0,
                    iterations=0,
                    rule_iterations=None,
                    clamped=False,
                    epsilon=config.epsilon,
                    q_squared=0.0,
                    b_squared=0.0,
                    rate_scale=1.0,
                    utility_offset=0.0,
                    dual_cost_trace=None,
                    primal_utility_trace=None,
                )
            )
            continue

        params = ConvergenceParams.from_instance(sub)
        if params.r_max <= 0:
            raise ValueError(
                f"component {ci} has UEs but no positive-rate links"
            )
        scale = params.r_max
        scaled = replace(params, r_max=1.0, r_min=params.r_min / scale)

        rule_t = None
        clamped = False
        if config.step_size is not None and config.iterations is not None:
            gamma, t = config.step_size, config.iterations
        else:
            rule_gamma, rule_t = derive_step_and_iterations(scaled, config.epsilon)
            if config.iterations is not None:
                t = config.iterations
            elif rule_t > config.max_iterations:
                warnings.warn(
                    f"iteration rule asks for {rule_t} iterations; "
                    f"clamping to {config.max_iterations}",
                    stacklevel=2,
                )
                t = config.max_iterations
                clamped = True
            else:
                t = rule_t
            if config.step_size is not None:
                gamma = config.step_size
            elif t < rule_t:
                # The budget is below the rule's iteration count, so the
                # rule's step would leave the duals mid-transient.  Growing
                # the step with the square root of the shortfall follows the
                # bound's gamma-vs-T balance; the cap keeps the oscillation
                # floor in check (the bound's B overstates the warm-started
                # dual distance badly, so the uncapped value overshoots).
                boost = min(
                    CLAMPED_STEP_BOOST, math.sqrt(rule_t / float(t))
                )
                gamma = rule_gamma * boost
            else:
                gamma = rule_gamma

        w_arr = sub.weights
        r_mac = sub.rates_macro / scale
        r_abs = sub.rates_pico_abs / scale
        r_nab = sub.rates_pico_nonabs / scale
        r_min_clamp = scaled.r_min * sub.n_sf * 1e-6
        r_max_clamp = 1.0 * sub.n_sf
        lam0, beta_m0, beta_p0, alpha0 = _warm_start_duals(
            sub, r_mac, r_abs, r_nab, r_min_clamp
        )
        mac_members, mac_starts = _members_csr(sub.ues_by_macro, sub.n_macros)
        pic_members, pic_starts = _members_csr(sub.ues_by_pico, sub.n_picos)
        edge_p = np.asarray([e[0] for e in sub.edges], dtype=np.int64)
        edge_m = np.asarray([e[1] for e in sub.edges], dtype=np.int64)
        comp_seed = mix64(seed ^ mix64(ci + 1))

        (
            k_x,
            k_ya,
            k_yn,
            k_r,
            k_a,
            k_n,
            k_lam,
            k_mu,
            k_bm,
            k_bp,
            k_al,
            k_dtrace,
            k_ptrace,
        ) = _kernel.run_component(
            float(sub.n_sf),
            int(t),
            float(gamma),
            w_arr,
            r_mac,
            r_abs,
            r_nab,
            lam0.copy(),
            beta_m0.copy(),
            beta_p0.copy(),
            alpha0.copy(),
            mac_members,
            mac_starts,
            pic_members,
            pic_starts,
            edge_p,
            edge_m,
            np.uint64(comp_seed),
            float(r_min_clamp),
            float(r_max_clamp),
            bool(config.record_trace),
            int(config.trace_stride),
        )

        pos = np.asarray(comp.ue_positions, dtype=np.int64)
        x[pos] = k_x
        y_a[pos] = k_ya
        y_n[pos] = k_yn
        big_r[pos] = k_r * scale
        lam[pos] = k_lam / scale
        for i, m in enumerate(comp.macro_ids):
            nonabs_m[m] = k_n[i]
            beta_m[m] = k_bm[i]
        for i, p in enumerate(comp.pico_ids):
            abs_p[p] = k_a[i]
            beta_p[p] = k_bp[i]
            alpha[p] = k_al[i]
        for e_sub, (pi, mi) in enumerate(sub.edges):
            mu[edge_pos[(comp.pico_ids[pi], comp.macro_ids[mi])]] = k_mu[e_sub]

        offset = float(np.dot(w_arr, np.full(sub.n_ues, math.log(scale))))
        results.append(
            ComponentResult(
                macro_ids=comp.macro_ids,
                pico_ids=comp.pico_ids,
                ue_positions=comp.ue_positions,
                gamma=float(gamma),
                iterations=int(t),
                rule_iterations=rule_t,
                clamped=clamped,
                epsilon=config.epsilon,
                q_squared=q_squared(scaled),
                b_squared=b_squared(scaled) if scaled.r_min > 0 else float("nan"),
                rate_scale=float(scale),
                utility_offset=offset,
                dual_cost_trace=(k_dtrace + offset) if config.record_trace else None,
                primal_utility_trace=(k_ptrace + offset)
                if config.record_trace
                else None,
            )
        )

    # Combined traces: components shorter than the longest are padded with
    # their final value (their duals stop moving once they finish).
    dual_trace = primal_trace = None
    if config.record_trace:
        lengths = [r.iterations for r in results if r.dual_cost_trace is not None]
        if lengths:
            t_max = max(lengths)
            dual_trace = np.zeros(t_max)
            primal_trace = np.zeros(t_max)
            for r in results:
                if r.dual_cost_trace is None:
                    continue
                d = r.dual_cost_trace
                p_tr = r.primal_utility_trace
                dual_trace[: len(d)] += d
                primal_trace[: len(p_tr)] += p_tr
                if len(d) < t_max:
                    dual_trace[len(d):] += d[-1]
                    primal_trace[len(p_tr):] += p_tr[-1]

    z_avg = PrimalState(
        x=x,
        y_abs=y_a,
        y_nonabs=y_n,
        abs_pico=abs_p,
        nonabs_macro=nonabs_m,
        throughput=big_r,
    )
    dual = DualState(lam=lam, mu=mu, beta_macro=beta_m, beta_pico=beta_p, alpha=alpha)
    served = big_r[big_r > 0]
    weights = instance.weights[big_r > 0]
    relaxed_utility = float(np.dot(weights, np.log(served))) if served.size else 0.0
    return RelaxedSolution(
        z_avg=z_avg,
        final_dual=dual,
        relaxed_utility=relaxed_utility,
        dual_cost_trace=dual_trace,
        primal_utility_trace=primal_trace,
        components=tuple(results),
        trace_stride=config.trace_stride,
    )


def write_trace_csv(solution: RelaxedSolution, path) -> None:
    """Iteration trace (t, dual_cost, primal_utility_of_averaged_z)."""
    if solution.dual_cost_trace is None:
        raise ValueError("solution was produced without record_trace")
    with open(path, "w") as fh:
        fh.write("t,dual_cost,primal_utility_of_averaged_z\n")
        for k, (d, p) in enumerate(
            zip(solution.dual_cost_trace, solution.primal_utility_trace)
        ):
            fh.write(f"{1 + k * solution.trace_stride},{d!r},{p!r}\n")
