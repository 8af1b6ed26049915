import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eicic.model import PICO, check_feasibility, in_subspace, PrimalState
from eicic.rounding import associate_users, finalize, rnd, round_abs, round_solution
from eicic.scenario import random_instance
from eicic.solver import SolverConfig, solve_relaxed
from helpers import make_instance, make_ue


class TestRnd:
    def test_examples(self):
        assert rnd(25.7, 40) == 25
        assert rnd(10.2, 40) == 11
        assert rnd(20.0, 40) == 20  # boundary takes the floor branch
        assert rnd(0.0, 40) == 0
        assert rnd(40.0, 40) == 40

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            rnd(40.1, 40)
        with pytest.raises(ValueError):
            rnd(-0.1, 40)
        # within slack: clamped, not an error
        assert rnd(40.0 + 5e-10, 40) == 40
        assert rnd(-5e-10, 40) == 0

    @given(x=st.floats(0, 40), k=st.integers(0, 40))
    @settings(max_examples=200, deadline=None)
    def test_properties(self, x, k):
        from fractions import Fraction

        r = rnd(x, 40)
        assert 0 <= r <= 40
        # |Rnd(x) - x| < 1 holds in exact arithmetic (float subtraction can
        # collapse 1 - tiny to exactly 1.0).
        assert abs(Fraction(r) - Fraction(x)) < 1
        assert rnd(float(k), 40) == k


def _pair_instance(n_sf=40):
    ues = [
        make_ue(0, rate_macro=100.0),
        make_ue(1, pico=0, rate_macro=100.0, rate_abs=300.0, rate_nonabs=50.0),
    ]
    return make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues, n_sf=n_sf)


def _state(inst, x, ya, yn, a, nm):
    return PrimalState(
        x=np.asarray(x, dtype=float),
        y_abs=np.asarray(ya, dtype=float),
        y_nonabs=np.asarray(yn, dtype=float),
        abs_pico=np.asarray(a, dtype=float),
        nonabs_macro=np.asarray(nm, dtype=float),
        throughput=np.ones(len(x)),
    )


class TestAssociate:
    def test_pico_wins_on_throughput(self):
        ues = [make_ue(0, pico=0, rate_macro=100.0, rate_abs=300.0, rate_nonabs=0.0)]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues)
        z = _state(inst, [10.0], [5.0], [0.0], [5.0], [35.0])
        assert associate_users(z, inst) == (PICO,)  # 1000 < 1500

    def test_no_candidate_pico_stays_macro(self):
        ues = [make_ue(0, rate_macro=100.0)]
        inst = make_instance(n_macros=1, ues=ues)
        z = _state(inst, [0.0], [0.0], [0.0], [], [40.0])
        assert associate_users(z, inst) == ("macro",)

    def test_exact_tie_goes_pico(self):
        ues = [make_ue(0, pico=0, rate_macro=100.0, rate_abs=200.0, rate_nonabs=0.0)]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues)
        z = _state(inst, [10.0], [5.0], [0.0], [5.0], [35.0])
        assert associate_users(z, inst) == (PICO,)  # 1000 == 1000

    def test_dead_pico_link_tie_goes_macro(self):
        ues = [make_ue(0, pico=0, rate_macro=100.0, rate_abs=0.0, rate_nonabs=0.0)]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues)
        z = _state(inst, [0.0], [0.0], [0.0], [0.0], [40.0])
        assert associate_users(z, inst) == ("macro",)


class TestRoundAbs:
    def test_ceil_floor_pair(self):
        inst = _pair_instance()
        z = _state(inst, [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [19.5], [20.5])
        a, nm, log = round_abs(z, ("macro", "pico"), inst)
        assert a[0] == 20 and nm[0] == 20
        assert log == ()

    def test_ceil_ceil_pair(self):
        inst = _pair_instance()
        z = _state(inst, [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [19.5], [19.5])
        a, nm, _ = round_abs(z, ("macro", "pico"), inst)
        assert a[0] == 20 and nm[0] == 20

    def test_slack_violation_repaired(self):
        inst = _pair_instance()
        z = _state(inst, [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [25.5], [25.5])
        a, nm, log = round_abs(z, ("macro", "pico"), inst)
        assert nm[0] == 25
        assert a[0] == 15  # shrunk to n_sf - N_m
        assert len(log) == 1 and log[0].pico == 0 and log[0].binding_macro == 0

    def test_slight_overflow_stays_feasible(self):
        inst = _pair_instance()
        z = _state(inst, [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [20.6], [20.6])
        a, nm, _ = round_abs(z, ("macro", "pico"), inst)
        assert a[0] + nm[0] <= 40


class TestFinalize:
    def test_macro_proportional_scale(self):
        ues = [make_ue(0, rate_macro=100.0), make_ue(1, rate_macro=100.0)]
        inst = make_instance(n_macros=1, ues=ues)
        z = _state(inst, [3.0, 1.0], [0.0, 0.0], [0.0, 0.0], [], [40.0])
        alloc = finalize(z, ("macro", "macro"), np.zeros(0, dtype=int),
                         np.array([40]), inst)
        assert np.allclose(alloc.x, [30.0, 10.0])
        assert check_feasibility(alloc, inst) == []

    def test_pico_sole_member_scale(self):
        inst = _pair_instance()
        z = _state(inst, [40.0, 0.0], [0.0, 5.0], [0.0, 2.0], [6.0], [34.0])
        alloc = finalize(z, ("macro", "pico"), np.array([6]), np.array([34]), inst)
        assert alloc.y_abs[1] == pytest.approx(6.0)
        assert alloc.y_nonabs[1] == pytest.approx(34.0)  # fills n_sf - A_p
        assert check_feasibility(alloc, inst) == []

    def test_zero_mass_equal_split(self):
        ues = [make_ue(0, rate_macro=100.0), make_ue(1, rate_macro=200.0)]
        inst = make_instance(n_macros=1, ues=ues)
        z = _state(inst, [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [], [0.0])
        alloc = finalize(z, ("macro", "macro"), np.zeros(0, dtype=int),
                         np.array([40]), inst)
        assert np.allclose(alloc.x, [20.0, 20.0])
        assert check_feasibility(alloc, inst) == []


class TestPipeline:
    @pytest.mark.parametrize("seed", range(6))
    def test_solver_plus_rounding_feasible(self, seed):
        inst = random_instance(
            seed,
            n_macros=1 + seed % 3,
            n_picos=seed % 4,
            n_ues=6 + 3 * seed,
            n_sf=8 if seed % 2 else 40,
        )
        sol = solve_relaxed(inst, SolverConfig(epsilon=0.1), seed=seed)
        assert in_subspace(sol.z_avg, inst)
        alloc = round_solution(sol, inst)
        assert check_feasibility(alloc, inst) == []

    def test_exclusivity_exact(self):
        inst = random_instance(3, n_ues=12)
        sol = solve_relaxed(inst, SolverConfig(epsilon=0.1), seed=3)
        alloc = round_solution(sol, inst)
        for u, lab in enumerate(alloc.association):
            if lab == "macro":
                assert alloc.y_abs[u] == 0.0 and alloc.y_nonabs[u] == 0.0
            else:
                assert alloc.x[u] == 0.0

    def test_scaling_conservation(self):
        inst = random_instance(5, n_ues=16)
        sol = solve_relaxed(inst, SolverConfig(epsilon=0.05), seed=5)
        alloc = round_solution(sol, inst)
        pico_assoc = np.array([lab == "pico" for lab in alloc.association])
        for m in range(inst.n_macros):
            members = [u for u in inst.ues_by_macro[m] if not pico_assoc[u]]
            if members and alloc.x[members].sum() > 0:
                assert alloc.x[members].sum() == pytest.approx(
                    alloc.nonabs_macro[m], abs=1e-9
                )
        for p in range(inst.n_picos):
            members = [u for u in inst.ues_by_pico[p] if pico_assoc[u]]
            if members:
                assert alloc.y_abs[members].sum() == pytest.approx(
                    alloc.abs_pico[p], abs=1e-9
                )
                total = (alloc.y_abs[members] + alloc.y_nonabs[members]).sum()
                assert total <= inst.n_sf + 1e-9
