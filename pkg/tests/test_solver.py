import math
import warnings

import numpy as np
import pytest

from eicic import _kernel
from eicic.model import ConvergenceParams, DualState, PrimalState, in_subspace
from eicic.scenario import random_instance
from eicic.solver import (
    Component,
    SolverConfig,
    decompose_components,
    derive_step_and_iterations,
    dual_update,
    mix64,
    primal_update_macro,
    primal_update_pico,
    primal_update_user,
    q_squared,
    b_squared,
    solve_relaxed,
    tie_key,
    write_trace_csv,
)
from helpers import lone_macro_instance, make_instance, make_ue


def reference_run(n_sf, T, gamma, w, r_mac, r_abs, r_nab, lam0, bm0, bp0, al0,
                  mac_groups, pic_groups, edges, seed, r_min_clamp, r_max_clamp):
    """Plain-python twin of the jitted kernel, same tie-break hashing."""
    n = len(w)
    lam = [float(v) for v in lam0]
    mu = [0.0] * len(edges)
    beta_m = [float(v) for v in bm0]
    beta_p = [float(v) for v in bp0]
    alpha = [float(v) for v in al0]
    x = [0.0] * n
    y_a = [0.0] * n
    y_n = [0.0] * n
    acc = {k: [0.0] * n for k in "xanr"}
    acc_A = [0.0] * len(pic_groups)
    acc_N = [0.0] * len(mac_groups)

    def winner(scores, members, domain, t):
        cands = [(s, u) for s, u in zip(scores, members) if s > 0.0]
        if not cands:
            return -1
        smax = max(s for s, _ in cands)
        tied = [u for s, u in cands if s == smax]
        if len(tied) == 1:
            return tied[0]
        return max(tied, key=lambda u: tie_key(seed, t, domain, u))

    for t in range(1, T + 1):
        big_r = [
            r_max_clamp
            if lam[u] <= 0.0
            else min(max(w[u] / lam[u], r_min_clamp), r_max_clamp)
            for u in range(n)
        ]
        musum_m = [0.0] * len(mac_groups)
        musum_p = [0.0] * len(pic_groups)
        for e, (p, m) in enumerate(edges):
            musum_m[m] += mu[e]
            musum_p[p] += mu[e]
        n_arr = [
            n_sf if beta_m[m] - musum_m[m] >= 0.0 else 0.0
            for m in range(len(mac_groups))
        ]
        a_arr = [
            n_sf if beta_p[p] - musum_p[p] >= 0.0 else 0.0
            for p in range(len(pic_groups))
        ]
        x = [0.0] * n
        y_a = [0.0] * n
        y_n = [0.0] * n
        win_ms = []
        for m, members in enumerate(mac_groups):
            scores = [lam[u] * r_mac[u] - beta_m[m] for u in members]
            wm = winner(scores, members, 0, t)
            win_ms.append(wm)
            if wm >= 0:
                x[wm] = n_sf
        win_pas, win_pns = [], []
        for p, members in enumerate(pic_groups):
            pa = beta_p[p] + alpha[p]
            wa = winner([lam[u] * r_abs[u] - pa for u in members], members, 1, t)
            wn = winner(
                [lam[u] * r_nab[u] - alpha[p] for u in members], members, 2, t
            )
            win_pas.append(wa)
            win_pns.append(wn)
            if wa >= 0:
                y_a[wa] = n_sf
            if wn >= 0:
                y_n[wn] = n_sf
        for u in range(n):
            acc["r"][u] += big_r[u]
            acc["x"][u] += x[u]
            acc["a"][u] += y_a[u]
            acc["n"][u] += y_n[u]
            g = big_r[u] - r_mac[u] * x[u] - r_abs[u] * y_a[u] - r_nab[u] * y_n[u]
            lam[u] = max(lam[u] + gamma * g, 0.0)
        for m in range(len(mac_groups)):
            acc_N[m] += n_arr[m]
            xsum = n_sf if win_ms[m] >= 0 else 0.0
            beta_m[m] = max(beta_m[m] + gamma * (xsum - n_arr[m]), 0.0)
        for e, (p, m) in enumerate(edges):
            mu[e] = max(mu[e] + gamma * (a_arr[p] + n_arr[m] - n_sf), 0.0)
        for p in range(len(pic_groups)):
            acc_A[p] += a_arr[p]
            yasum = n_sf if win_pas[p] >= 0 else 0.0
            ytot = yasum + (n_sf if win_pns[p] >= 0 else 0.0)
            beta_p[p] = max(beta_p[p] + gamma * (yasum - a_arr[p]), 0.0)
            alpha[p] = max(alpha[p] + gamma * (ytot - n_sf), 0.0)
    return {
        "x": np.array(acc["x"]) / T,
        "y_abs": np.array(acc["a"]) / T,
        "y_nonabs": np.array(acc["n"]) / T,
        "r": np.array(acc["r"]) / T,
        "A": np.array(acc_A) / T,
        "N": np.array(acc_N) / T,
        "lam": np.array(lam),
        "mu": np.array(mu),
        "beta_m": np.array(beta_m),
        "beta_p": np.array(beta_p),
        "alpha": np.array(alpha),
    }


class TestTieHash:
    def test_python_matches_kernel(self):
        for z in [0, 1, 42, 2**63, 2**64 - 1, 123456789123456789]:
            assert mix64(z) == int(_kernel._mix64(np.uint64(z)))
        for args in [(7, 1, 0, 3), (7, 2, 1, 5), (99, 1000, 2, 0)]:
            assert tie_key(*args) == int(
                _kernel._tie_key(
                    np.uint64(args[0]), args[1], args[2], args[3]
                )
            )


class TestRule:
    def _params(self, **kw):
        base = dict(
            n_ues=10, n_macros=1, n_picos=1, n_edges=1, i_max=1, u_max=10,
            r_max=1e4, r_min=1e3, weights_norm_sq=100.0, n_sf=40,
        )
        base.update(kw)
        return ConvergenceParams(**base)

    def test_q_squared_example(self):
        p = self._params()
        assert q_squared(p) == pytest.approx(1.6000000064e12, rel=1e-12)

    def test_b_squared_example(self):
        p = self._params()
        assert b_squared(p) == pytest.approx((100.0 / 1600.0) * 3.01, rel=1e-12)

    def test_epsilon_scaling(self):
        p = self._params()
        g1, t1 = derive_step_and_iterations(p, 0.05)
        g2, t2 = derive_step_and_iterations(p, 0.10)
        assert g2 == pytest.approx(2 * g1)
        assert t2 == pytest.approx(t1 / 4, rel=1e-6)

    def test_zero_r_min_errors(self):
        p = self._params(r_min=0.0)
        with pytest.raises(ValueError, match="r_min"):
            derive_step_and_iterations(p, 0.05)

    def test_clamp_warns(self):
        p = self._params()
        with pytest.warns(UserWarning, match="clamping"):
            _, t = derive_step_and_iterations(p, 0.05, max_iterations=1000)
        assert t == 1000


class TestPrimalUpdates:
    def test_user(self):
        assert primal_update_user(0.25, 1.0, 1e-9, 1e9) == pytest.approx(4.0)
        assert primal_update_user(2.0, 2.0, 1e-9, 1e9) == pytest.approx(1.0)
        assert primal_update_user(0.0, 1.0, 1e-9, 4e5) == 4e5  # cap at n_sf*r_max

    def _dual(self, inst, lam=None, mu=None, bm=None, bp=None, al=None):
        z = DualState.zeros(inst)
        return DualState(
            lam=z.lam if lam is None else np.asarray(lam, dtype=float),
            mu=z.mu if mu is None else np.asarray(mu, dtype=float),
            beta_macro=z.beta_macro if bm is None else np.asarray(bm, dtype=float),
            beta_pico=z.beta_pico if bp is None else np.asarray(bp, dtype=float),
            alpha=z.alpha if al is None else np.asarray(al, dtype=float),
        )

    def test_macro_indicator(self):
        ues = [make_ue(0, pico=0, rate_abs=100.0, rate_nonabs=10.0)]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues)
        rng = np.random.default_rng(0)
        d = self._dual(inst, bm=[1.0], mu=[0.4])
        n_m, _ = primal_update_macro(0, d, inst, rng)
        assert n_m == inst.n_sf
        d = self._dual(inst, bm=[0.4], mu=[1.0])
        n_m, _ = primal_update_macro(0, d, inst, rng)
        assert n_m == 0.0

    def test_macro_winner_and_ties(self):
        ues = [
            make_ue(0, rate_macro=5.0),
            make_ue(1, rate_macro=7.0),
            make_ue(2, rate_macro=7.0),
        ]
        inst = make_instance(n_macros=1, ues=ues)
        d = self._dual(inst, lam=[1.0, 1.0, 1.0], bm=[6.0])
        counts = {1: 0, 2: 0}
        for s in range(400):
            rng = np.random.default_rng(s)
            _, x = primal_update_macro(0, d, inst, rng)
            winners = np.nonzero(x)[0]
            assert len(winners) == 1
            assert x[winners[0]] == inst.n_sf
            counts[int(winners[0])] += 1
        assert counts[1] > 100 and counts[2] > 100  # uniform over the argmax set

    def test_macro_no_positive_score(self):
        ues = [make_ue(0, rate_macro=5.0)]
        inst = make_instance(n_macros=1, ues=ues)
        d = self._dual(inst, lam=[1.0], bm=[10.0])
        _, x = primal_update_macro(0, d, inst, np.random.default_rng(0))
        assert (x == 0).all()

    def test_pico_updates(self):
        ues = [make_ue(0, pico=0, rate_macro=10.0, rate_abs=30.0, rate_nonabs=20.0)]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues, n_sf=40)
        rng = np.random.default_rng(1)
        d = self._dual(inst, bp=[0.2], mu=[0.1])
        a_p, _, _ = primal_update_pico(0, d, inst, rng)
        assert a_p == 40.0
        # single UE beats both prices: wins both resources
        d = self._dual(inst, lam=[0.1], bp=[0.5], al=[0.5])
        a_p, y_a, y_n = primal_update_pico(0, d, inst, rng)
        assert y_a[0] == 40.0 and y_n[0] == 40.0
        # ABS reduced utility nonpositive: no ABS winner
        d = self._dual(inst, lam=[0.1], bp=[2.0], al=[1.1])
        _, y_a, y_n = primal_update_pico(0, d, inst, rng)
        assert y_a[0] == 0.0 and y_n[0] == 40.0


class TestDualUpdate:
    def _instance(self):
        ues = [
            make_ue(0, rate_macro=100.0),
            make_ue(1, pico=0, rate_macro=50.0, rate_abs=200.0, rate_nonabs=20.0),
        ]
        return make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues, n_sf=40)

    def test_tight_constraints_fixed_point(self):
        inst = self._instance()
        z = PrimalState(
            x=np.array([20.0, 0.0]),
            y_abs=np.array([0.0, 20.0]),
            y_nonabs=np.array([0.0, 20.0]),
            abs_pico=np.array([20.0]),
            nonabs_macro=np.array([20.0]),
            throughput=np.array([100.0 * 20, 200.0 * 20 + 20.0 * 20]),
        )
        p0 = DualState(
            lam=np.array([0.3, 0.4]),
            mu=np.array([0.2]),
            beta_macro=np.array([0.1]),
            beta_pico=np.array([0.5]),
            alpha=np.array([0.6]),
        )
        p1 = dual_update(p0, z, 0.1, inst)
        assert np.allclose(p1.lam, p0.lam)
        assert np.allclose(p1.mu, p0.mu)
        assert np.allclose(p1.beta_macro, p0.beta_macro)
        assert np.allclose(p1.beta_pico, p0.beta_pico)
        assert np.allclose(p1.alpha, p0.alpha)

    def test_projection_and_growth(self):
        inst = self._instance()
        z = PrimalState(
            x=np.zeros(2),
            y_abs=np.zeros(2),
            y_nonabs=np.zeros(2),
            abs_pico=np.array([40.0]),
            nonabs_macro=np.array([40.0]),
            throughput=np.array([1.0, 1.0]),
        )
        p0 = DualState(
            lam=np.array([1.0, 1.0]),
            mu=np.array([0.5]),
            beta_macro=np.array([1.0]),
            beta_pico=np.array([0.0]),
            alpha=np.array([0.0]),
        )
        # lam: g = 1 - 0 = 1 -> 1.1; mu: g = 40+40-40 = 40 -> 0.5+4.0
        p1 = dual_update(p0, z, 0.1, inst)
        assert p1.lam[0] == pytest.approx(1.1)
        assert p1.mu[0] == pytest.approx(4.5)
        # projection at zero: lam - gamma*20 < 0 -> 0
        z2 = PrimalState(
            x=np.array([0.4, 0.0]),
            y_abs=np.zeros(2),
            y_nonabs=np.zeros(2),
            abs_pico=np.array([0.0]),
            nonabs_macro=np.array([40.0]),
            throughput=np.array([20.0, 1.0]),
        )
        # g_lam0 = 20 - 100*0.4 = -20
        p2 = dual_update(p0, z2, 0.1, inst)
        assert p2.lam[0] == 0.0


class TestDecompose:
    def test_no_coupling_gives_singletons(self):
        ues = [make_ue(0, macro=0), make_ue(1, macro=1)]
        inst = make_instance(n_macros=2, n_picos=1, interferers=[set()], ues=ues)
        comps = decompose_components(inst)
        assert len(comps) == 3
        sizes = sorted((c.instance.n_macros, c.instance.n_picos) for c in comps)
        assert sizes == [(0, 1), (1, 0), (1, 0)]

    def test_shared_ue_couples_cells(self):
        # No interference edge, but UE 0 has candidates in both cells.
        ues = [make_ue(0, macro=0, pico=0, rate_abs=10.0, rate_nonabs=5.0)]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[set()], ues=ues)
        comps = decompose_components(inst)
        assert len(comps) == 1

    def test_full_graph_single_component(self):
        inst = random_instance(0, n_macros=3, n_picos=2, n_ues=10, full_interference=True)
        comps = decompose_components(inst)
        assert len(comps) == 1
        assert comps[0].macro_ids == (0, 1, 2)

    def test_two_pairs_merge_equals_joint(self):
        ues = [
            make_ue(0, macro=0, rate_macro=1500.0),
            make_ue(1, macro=0, pico=0, rate_macro=700.0, rate_abs=4100.0, rate_nonabs=350.0),
            make_ue(2, macro=1, rate_macro=2400.0),
            make_ue(3, macro=1, pico=1, rate_macro=900.0, rate_abs=3700.0, rate_nonabs=150.0),
        ]
        inst = make_instance(
            n_macros=2, n_picos=2, interferers=[{0}, {1}], ues=ues, n_sf=8
        )
        comps = decompose_components(inst)
        assert len(comps) == 2
        assert {c.macro_ids for c in comps} == {(0,), (1,)}
        cfg = SolverConfig(epsilon=0.05)
        joint = solve_relaxed(inst, cfg, seed=5)
        parts = sum(
            solve_relaxed(c.instance, cfg, seed=5).relaxed_utility for c in comps
        )
        assert joint.relaxed_utility == pytest.approx(parts, abs=1e-6)


class TestKernelVsReference:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_trajectories_match(self, seed):
        inst = random_instance(seed, n_macros=2, n_picos=2, n_ues=9, n_sf=8)
        comps = decompose_components(inst)
        for ci, comp in enumerate(comps):
            sub = comp.instance
            if sub.n_ues == 0:
                continue
            params = ConvergenceParams.from_instance(sub)
            scale = params.r_max
            w = sub.weights
            r_mac = sub.rates_macro / scale
            r_abs = sub.rates_pico_abs / scale
            r_nab = sub.rates_pico_nonabs / scale
            r_min_clamp = (params.r_min / scale) * sub.n_sf * 1e-6
            r_max_clamp = float(sub.n_sf)
            from eicic.solver import _warm_start_duals

            lam0, bm0, bp0, al0 = _warm_start_duals(
                sub, r_mac, r_abs, r_nab, r_min_clamp
            )
            gamma, T = 1e-3, 400
            kseed = mix64(seed ^ mix64(ci + 1))
            mac_members = np.asarray(
                [u for g in sub.ues_by_macro for u in g], dtype=np.int64
            )
            mac_starts = np.cumsum(
                [0] + [len(g) for g in sub.ues_by_macro]
            ).astype(np.int64)
            pic_members = np.asarray(
                [u for g in sub.ues_by_pico for u in g], dtype=np.int64
            )
            pic_starts = np.cumsum(
                [0] + [len(g) for g in sub.ues_by_pico]
            ).astype(np.int64)
            out = _kernel.run_component(
                float(sub.n_sf), T, gamma, w, r_mac, r_abs, r_nab, lam0.copy(),
                bm0.copy(), bp0.copy(), al0.copy(),
                mac_members, mac_starts, pic_members, pic_starts,
                np.asarray([e[0] for e in sub.edges], dtype=np.int64),
                np.asarray([e[1] for e in sub.edges], dtype=np.int64),
                np.uint64(kseed), float(r_min_clamp), r_max_clamp, False, 1,
            )
            ref = reference_run(
                float(sub.n_sf), T, gamma, list(w), list(r_mac), list(r_abs),
                list(r_nab), lam0, bm0, bp0, al0,
                [list(g) for g in sub.ues_by_macro],
                [list(g) for g in sub.ues_by_pico], list(sub.edges), kseed,
                float(r_min_clamp), r_max_clamp,
            )
            np.testing.assert_allclose(out[0], ref["x"], rtol=0, atol=1e-12)
            np.testing.assert_allclose(out[1], ref["y_abs"], rtol=0, atol=1e-12)
            np.testing.assert_allclose(out[2], ref["y_nonabs"], rtol=0, atol=1e-12)
            np.testing.assert_allclose(out[3], ref["r"], rtol=1e-12)
            np.testing.assert_allclose(out[4], ref["A"], rtol=0, atol=1e-12)
            np.testing.assert_allclose(out[5], ref["N"], rtol=0, atol=1e-12)
            np.testing.assert_allclose(out[6], ref["lam"], rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(out[7], ref["mu"], rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(out[8], ref["beta_m"], rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(out[9], ref["beta_p"], rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(out[10], ref["alpha"], rtol=1e-12, atol=1e-15)


class TestSolveRelaxed:
    def test_single_macro_pf_distinct_rates(self):
        k = 4
        rates = [800.0, 1200.0, 2000.0, 3100.0]
        ues = [make_ue(i, rate_macro=rates[i]) for i in range(k)]
        inst = make_instance(n_macros=1, ues=ues, n_sf=40)
        eps = 0.02
        sol = solve_relaxed(inst, SolverConfig(epsilon=eps), seed=3)
        opt = sum(math.log(r * 40 / k) for r in rates)
        # The averaged-throughput utility estimates the relaxed optimum to
        # within the per-UE tolerance on either side.
        assert sol.relaxed_utility >= opt - k * eps
        assert sol.relaxed_utility <= opt + 2 * k * eps
        np.testing.assert_allclose(sol.z_avg.x, 10.0, atol=1.0)
        assert in_subspace(sol.z_avg, inst)

    def test_single_macro_pf_equal_rates_ties(self):
        k = 4
        ues = [make_ue(i, rate_macro=1000.0) for i in range(k)]
        inst = make_instance(n_macros=1, ues=ues, n_sf=40)
        eps = 0.02
        sol = solve_relaxed(inst, SolverConfig(epsilon=eps), seed=3)
        opt = k * math.log(1000.0 * 40 / k)
        assert sol.relaxed_utility >= opt - k * eps

    def test_interference_constraint_tight(self):
        ues = [
            make_ue(0, rate_macro=3000.0),
            make_ue(1, pico=0, rate_macro=400.0, rate_abs=5000.0, rate_nonabs=0.0),
        ]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues, n_sf=40)
        sol = solve_relaxed(inst, SolverConfig(epsilon=0.02), seed=1)
        total = sol.z_avg.abs_pico[0] + sol.z_avg.nonabs_macro[0]
        assert total == pytest.approx(40.0, abs=0.5)
        assert sol.z_avg.abs_pico[0] == pytest.approx(20.0, abs=2.0)

    def test_determinism(self):
        inst = random_instance(7, n_ues=10)
        cfg = SolverConfig(epsilon=0.1)
        a = solve_relaxed(inst, cfg, seed=9)
        b = solve_relaxed(inst, cfg, seed=9)
        assert np.array_equal(a.z_avg.x, b.z_avg.x)
        assert np.array_equal(a.z_avg.throughput, b.z_avg.throughput)
        assert np.array_equal(a.final_dual.lam, b.final_dual.lam)
        assert a.relaxed_utility == b.relaxed_utility

    def test_iterates_stay_in_subspace_and_duals_nonneg(self):
        for seed in range(3):
            inst = random_instance(seed, n_ues=8)
            sol = solve_relaxed(inst, SolverConfig(epsilon=0.1), seed=seed)
            assert in_subspace(sol.z_avg, inst)
            assert (sol.final_dual.lam >= 0).all()
            assert (sol.final_dual.mu >= 0).all()

    def test_weak_duality_vs_feasible(self):
        from helpers import allocation_all_macro
        from eicic.model import utility

        inst = random_instance(4, n_macros=2, n_picos=1, n_ues=6, n_sf=8)
        sol = solve_relaxed(inst, SolverConfig(epsilon=0.05, record_trace=True), seed=2)
        feas = allocation_all_macro(inst)
        assert sol.dual_bound >= utility(feas, inst) - 1e-9

    def test_trace_csv(self, tmp_path):
        inst = lone_macro_instance(k=2, n_sf=8)
        sol = solve_relaxed(
            inst, SolverConfig(iterations=50, step_size=1e-3, record_trace=True), seed=0
        )
        assert len(sol.dual_cost_trace) == 50
        path = tmp_path / "trace.csv"
        write_trace_csv(sol, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,dual_cost,primal_utility_of_averaged_z"
        assert len(lines) == 51

    def test_trace_matches_model_lagrangian(self):
        """The kernel's dual-cost trace is the Lagrangian of the greedy point."""
        from eicic.model import lagrangian
        from eicic.solver import _warm_start_duals

        inst = random_instance(11, n_macros=1, n_picos=1, n_ues=4, n_sf=8,
                               full_interference=True)
        comps = decompose_components(inst)
        assert len(comps) == 1
        sol = solve_relaxed(
            inst, SolverConfig(iterations=1, step_size=1e-3, record_trace=True), seed=6
        )
        # With one iteration the averaged z is the first greedy point and the
        # trace entry is its Lagrangian at the initial prices.
        comp = sol.components[0]
        scale = comp.rate_scale
        params = ConvergenceParams.from_instance(inst)
        r_min_clamp = (params.r_min / scale) * inst.n_sf * 1e-6
        lam0, bm0, bp0, al0 = _warm_start_duals(
            inst,
            inst.rates_macro / scale,
            inst.rates_pico_abs / scale,
            inst.rates_pico_nonabs / scale,
            r_min_clamp,
        )
        p0 = DualState(
            lam=lam0 / scale,  # scaled-domain prices map back by 1/scale
            mu=np.zeros(len(inst.edges)),
            beta_macro=bm0,
            beta_pico=bp0,
            alpha=al0,
        )
        val = lagrangian(sol.z_avg, p0, inst)
        assert sol.dual_cost_trace[0] == pytest.approx(val, rel=1e-9)

    def test_iteration_clamp_warns(self):
        inst = random_instance(1, n_ues=8)
        with pytest.warns(UserWarning, match="clamping"):
            sol = solve_relaxed(
                inst, SolverConfig(epsilon=0.001, max_iterations=500), seed=0
            )
        assert all(
            c.iterations <= 500 for c in sol.components if c.ue_positions
        )
