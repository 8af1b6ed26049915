import math

import numpy as np
import pytest

from eicic.bias import (
    AbsPattern,
    BiasAssignment,
    association_under_bias,
    bias_constrained_preprocess,
    default_grid,
    fit_bias,
    to_patterns,
)
from eicic.model import check_feasibility
from eicic.rounding import round_solution
from eicic.solver import SolverConfig, solve_relaxed
from helpers import make_instance, make_ue


def gap_instance(gaps, n_sf=40):
    """One macro, one pico; UE i sits at RSRP gap gaps[i] dB below the macro."""
    ues = [
        make_ue(
            i,
            macro=0,
            pico=0,
            rate_macro=1000.0,
            rate_abs=3000.0,
            rate_nonabs=500.0,
            rsrp_macro=-80.0,
            rsrp_pico=-80.0 - g,
        )
        for i, g in enumerate(gaps)
    ]
    return make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues, n_sf=n_sf)


class TestAssociationUnderBias:
    def test_zero_bias_equal_rsrp(self):
        inst = gap_instance([0.0, 5.0])
        assert association_under_bias(0.0, inst, 0, 0) == (0,)

    def test_boundary_inclusive(self):
        inst = gap_instance([15.0])
        assert association_under_bias(15.0, inst, 0, 0) == (0,)
        assert association_under_bias(14.9, inst, 0, 0) == ()

    def test_monotone_in_bias(self):
        inst = gap_instance([1.0, 3.0, 7.0, 12.0])
        prev = set()
        for b in np.arange(0.0, 15.5, 0.5):
            cur = set(association_under_bias(float(b), inst, 0, 0))
            assert prev <= cur
            prev = cur


class TestFitBias:
    def test_exact_threshold_recovery(self):
        inst = gap_instance([1.0, 4.0, 7.0, 9.5, 13.0])
        # Optimizer associated exactly the UEs within 7 dB.
        target = tuple(
            "pico" if -80.0 - inst.ues[u].rsrp_pico <= 7.0 else "macro"
            for u in range(inst.n_ues)
        )
        fit = fit_bias(target, inst, grid=default_grid(step=0.5))
        assert fit.bias_db[0] == pytest.approx(7.0)
        assert fit.errors[0] == 0.0

    def test_no_candidates_tie_to_min(self):
        ues = [make_ue(0, macro=0, rate_macro=500.0)]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues)
        fit = fit_bias(("macro",), inst)
        assert fit.bias_db == (0.0,)
        assert fit.errors == (0.0,)

    def test_associate_nobody_far_ues(self):
        inst = gap_instance([20.0, 25.0])  # outside any permissible bias
        fit = fit_bias(("macro", "macro"), inst)
        assert fit.bias_db[0] == 0.0
        assert fit.errors[0] == 0.0

    def test_error_nonincreasing_with_refinement(self):
        inst = gap_instance([2.2, 6.7, 11.3])
        target = ("pico", "pico", "macro")
        coarse = fit_bias(target, inst, grid=default_grid(step=2.0))
        fine = fit_bias(target, inst, grid=default_grid(step=0.1))
        assert fine.errors[0] <= coarse.errors[0] + 1e-12

    def test_weighted_error(self):
        ues = [
            make_ue(0, macro=0, pico=0, rate_abs=100.0, rate_nonabs=10.0,
                    rsrp_macro=-80.0, rsrp_pico=-84.0, weight=5.0),
            make_ue(1, macro=0, pico=0, rate_abs=100.0, rate_nonabs=10.0,
                    rsrp_macro=-80.0, rsrp_pico=-90.0, weight=1.0),
        ]
        inst = make_instance(n_macros=1, n_picos=1, interferers=[{0}], ues=ues)
        # Target: only the heavy UE on the pico; biases in [4, 10) achieve it.
        fit = fit_bias(("pico", "macro"), inst, grid=default_grid(step=1.0))
        assert 4.0 <= fit.bias_db[0] < 10.0
        assert fit.errors[0] == 0.0

    def test_bounds_respected(self):
        inst = gap_instance([1.0])
        with pytest.raises(ValueError, match="outside"):
            BiasAssignment(bias_db=(20.0,), errors=(0.0,), b_min=0.0, b_max=15.0)


class TestPreprocess:
    def test_rules(self):
        inst = gap_instance([0.0, 7.0, 20.0])
        out = bias_constrained_preprocess(inst, b_min=3.0, b_max=15.0)
        # gap 0 <= b_min: always captured, macro rate zeroed
        assert out.ues[0].rate_macro == 0.0
        assert out.ues[0].rate_pico_abs == 3000.0
        # gap 7: in between, untouched
        assert out.ues[1] == inst.ues[1]
        # gap 20 > b_max: never captured, pico rates zeroed
        assert out.ues[2].rate_pico_abs == 0.0
        assert out.ues[2].rate_pico_nonabs == 0.0
        assert out.ues[2].rate_macro == 1000.0

    def test_solver_respects_preprocess(self):
        inst = gap_instance([0.0, 20.0], n_sf=8)
        pre = bias_constrained_preprocess(inst, b_min=3.0, b_max=15.0)
        sol = solve_relaxed(pre, SolverConfig(epsilon=0.05), seed=0)
        alloc = round_solution(sol, pre)
        assert check_feasibility(alloc, pre) == []
        # forbidden sides carry zero rate, so association must avoid them
        assert alloc.association[0] == "pico"
        assert alloc.association[1] == "macro"


class TestPatterns:
    def _instance(self, interferers, n_macros=2, n_picos=1, n_sf=40):
        ues = [make_ue(0, macro=0)]
        return make_instance(
            n_macros=n_macros, n_picos=n_picos, interferers=interferers,
            ues=ues, n_sf=n_sf,
        )

    def test_prefix_intersection(self):
        inst = self._instance([{0, 1}])
        # macro 0 offers 5 blanks, macro 1 offers 7
        pat = to_patterns([5], [35, 33], inst)
        assert pat.macro_blank[0] == "1" * 5 + "0" * 35
        assert pat.macro_blank[1] == "1" * 7 + "0" * 33
        assert pat.pico_usable[0] == "1" * 5 + "0" * 35
        assert pat.pico_usable[0].count("1") == min(5, 7)

    def test_full_frames_no_blanks(self):
        inst = self._instance([set()], n_macros=1)
        pat = to_patterns([0], [40], inst)
        assert pat.macro_blank[0] == "0" * 40
        assert pat.pico_usable[0] == "1" * 40  # no interferers: all usable

    def test_excess_abs_rejected(self):
        inst = self._instance([{0, 1}])
        with pytest.raises(ValueError, match="exceeds"):
            to_patterns([6], [35, 36], inst)

    def test_prefix_nesting_property(self):
        inst = self._instance([{0, 1}])
        pat = to_patterns([3], [30, 20], inst)
        sets = [
            {i for i, c in enumerate(s) if c == "1"} for s in pat.macro_blank
        ]
        assert sets[0] <= sets[1] or sets[1] <= sets[0]

    def test_isolated_macro_keeps_full_frames_end_to_end(self):
        # Macro 1 is isolated (no pico edges, no pico-eligible UEs).
        ues = [
            make_ue(0, macro=0, pico=0, rate_macro=500.0, rate_abs=4000.0,
                    rate_nonabs=100.0),
            make_ue(1, macro=0, rate_macro=2500.0),
            make_ue(2, macro=1, rate_macro=1800.0),
            make_ue(3, macro=1, rate_macro=900.0),
        ]
        inst = make_instance(
            n_macros=2, n_picos=1, interferers=[{0}], ues=ues, n_sf=40
        )
        sol = solve_relaxed(inst, SolverConfig(epsilon=0.05), seed=4)
        assert sol.z_avg.nonabs_macro[1] == pytest.approx(40.0, abs=1e-12)
        alloc = round_solution(sol, inst)
        assert alloc.nonabs_macro[1] == 40
        pat = to_patterns(alloc.abs_pico, alloc.nonabs_macro, inst)
        assert pat.macro_blank[1] == "0" * 40
