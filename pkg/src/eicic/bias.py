"""Cell-selection bias fitting and ABS-number-to-pattern conversion.

The optimizer decides UE association directly; real handsets associate by
``argmax(RSRP + bias)``.  For each pico we pick the grid bias whose
induced association best matches the optimizer's, in weighted
least-squares over the interfering macros.  Macro biases stay at zero
(only the relative bias matters).

Frame counts become bitmaps by indexing subframes consistently at every
cell and blanking the first k: every macro's blank set is then a prefix,
so a pico's usable ABS subframes are exactly the first
``min_over_interferers(blanks)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from eicic.model import PICO, NetworkInstance, UeRecord

DEFAULT_BIAS_MIN_DB = 0.0
DEFAULT_BIAS_MAX_DB = 15.0
DEFAULT_BIAS_STEP_DB = 0.1


def default_grid(
    b_min: float = DEFAULT_BIAS_MIN_DB,
    b_max: float = DEFAULT_BIAS_MAX_DB,
    step: float = DEFAULT_BIAS_STEP_DB,
):
    """Bias candidates from b_min to b_max inclusive (0.1 dB default)."""
    n = int(round((b_max - b_min) / step))
    return tuple(round(b_min + k * step, 9) for k in range(n + 1))


@dataclass(frozen=True)
class BiasAssignment:
    """Per-pico selection bias in dB (macros implicitly at zero)."""

    bias_db: tuple
    errors: tuple  # achieved weighted squared association error per pico
    b_min: float
    b_max: float

    def __post_init__(self):
        for b in self.bias_db:
            if not (self.b_min - 1e-9 <= b <= self.b_max + 1e-9):
                raise ValueError(f"bias {b} outside [{self.b_min}, {self.b_max}] dB")

    def to_json_dict(self) -> dict:
        return {
            "format": "eicic-bias",
            "version": 1,
            "bias_db": list(self.bias_db),
            "errors": list(self.errors),
            "b_min": self.b_min,
            "b_max": self.b_max,
        }


@dataclass(frozen=True)
class AbsPattern:
    """Blank bitmaps per macro and usable-ABS bitmaps per pico.

    Bit i covers subframe ``i mod n_sf`` under a network-wide consistent
    indexing; '1' marks a blanked (macro) / usable (pico) subframe.
    """

    n_sf: int
    macro_blank: tuple  # strings of 0/1, length n_sf
    pico_usable: tuple

    def to_json_dict(self) -> dict:
        return {
            "format": "eicic-abs-pattern",
            "version": 1,
            "n_sf": self.n_sf,
            "macro_blank": list(self.macro_blank),
            "pico_usable": list(self.pico_usable),
        }


def _in_window(ue: UeRecord, bias: float) -> bool:
    return ue.rsrp_pico + bias >= ue.rsrp_macro


def candidate_pairs(instance: NetworkInstance, pico: int, macro: int):
    """C_{p,m}: UEs whose best pico is p and best macro is m."""
    return tuple(
        u
        for u in instance.ues_by_pico[pico]
        if instance.ues[u].best_macro.index == macro
    )


def association_under_bias(
    bias_db: float, instance: NetworkInstance, pico: int, macro: int
):
    """D_{p,m}(b): the members of C_{p,m} the bias rule sends to the pico."""
    return tuple(
        u
        for u in candidate_pairs(instance, pico, macro)
        if _in_window(instance.ues[u], bias_db)
    )


def fit_bias(
    target_association,
    instance: NetworkInstance,
    grid: Optional[Sequence[float]] = None,
    b_min: float = DEFAULT_BIAS_MIN_DB,
    b_max: float = DEFAULT_BIAS_MAX_DB,
) -> BiasAssignment:
    """Per-pico bias minimizing the weighted squared association error.

    For each interfering macro the error term is
    ``(W_{p,m}(b) - W*_{p,m})^2`` where the weights count the C_{p,m} UEs
    the rule would capture vs those the optimizer associated; ties resolve
    to the smallest bias.
    """
    if grid is None:
        grid = default_grid(b_min, b_max)
    grid = tuple(b for b in grid if b_min - 1e-9 <= b <= b_max + 1e-9)
    if not grid:
        raise ValueError("empty bias grid within bounds")
    labels = tuple(target_association)
    biases = []
    errors = []
    for p in range(instance.n_picos):
        pairs = {}
        for m in sorted(instance.interferers[p]):
            members = candidate_pairs(instance, p, m)
            target_w = sum(
                instance.ues[u].weight for u in members if labels[u] == PICO
            )
            pairs[m] = (members, target_w)
        best_b = grid[0]
        best_err = math.inf
        for b in grid:
            err = 0.0
            for m, (members, target_w) in pairs.items():
                got = sum(
                    instance.ues[u].weight
                    for u in members
                    if _in_window(instance.ues[u], b)
                )
                err += (got - target_w) ** 2
            if err < best_err - 1e-15:
                best_err = err
                best_b = b
        biases.append(best_b)
        errors.append(best_err if pairs else 0.0)
    return BiasAssignment(
        bias_db=tuple(biases),
        errors=tuple(float(e) for e in errors),
        b_min=b_min,
        b_max=b_max,
    )


def bias_constrained_preprocess(
    instance: NetworkInstance, b_min, b_max
) -> NetworkInstance:
    """Zero out link rates the bias bounds make unreachable.

    UEs the pico captures even at minimum bias lose their macro rate; UEs
    it cannot capture even at maximum bias lose their pico rates.  Run the
    optimizer on the result to make its association realizable within the
    bias bounds.
    """
    lo = np.broadcast_to(np.asarray(b_min, dtype=float), (instance.n_picos,))
    hi = np.broadcast_to(np.asarray(b_max, dtype=float), (instance.n_picos,))
    ues = []
    for ue in instance.ues:
        if ue.best_pico is None:
            ues.append(ue)
            continue
        p = ue.best_pico.index
        if _in_window(ue, lo[p]):
            ues.append(_replace_rates(ue, rate_macro=0.0))
        elif not _in_window(ue, hi[p]):
            ues.append(_replace_rates(ue, rate_pico_abs=0.0, rate_pico_nonabs=0.0))
        else:
            ues.append(ue)
    return NetworkInstance(
        macros=instance.macros,
        picos=instance.picos,
        interferers=instance.interferers,
        ues=tuple(ues),
        n_sf=instance.n_sf,
    )


def _replace_rates(ue: UeRecord, **kw) -> UeRecord:
    from dataclasses import replace

    return replace(ue, **kw)


def to_patterns(abs_pico, nonabs_macro, instance: NetworkInstance) -> AbsPattern:
    """Blank the first ``n_sf - N_m`` subframes at each macro and intersect
    over every pico's interferers.

    Raises if some pico's ABS count exceeds what its interferers blank
    (an upstream interference-constraint violation).
    """
    n_sf = instance.n_sf
    macro_blank = []
    for m in range(instance.n_macros):
        k = n_sf - int(nonabs_macro[m])
        if not (0 <= k <= n_sf):
            raise ValueError(f"macro {m}: blank count {k} outside [0, {n_sf}]")
        macro_blank.append("1" * k + "0" * (n_sf - k))
    pico_usable = []
    for p in range(instance.n_picos):
        k = min(
            [n_sf - int(nonabs_macro[m]) for m in instance.interferers[p]],
            default=n_sf,
        )
        if int(abs_pico[p]) > k:
            raise ValueError(
                f"pico {p}: ABS count {abs_pico[p]} exceeds the {k} blanks "
                "offered by its interferers"
            )
        pico_usable.append("1" * k + "0" * (n_sf - k))
    return AbsPattern(
        n_sf=n_sf, macro_blank=tuple(macro_blank), pico_usable=tuple(pico_usable)
    )
