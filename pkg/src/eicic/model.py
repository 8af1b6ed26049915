"""Core data model for joint ABS / cell-association optimization.

A heterogeneous LTE downlink is described by a :class:`NetworkInstance`:
macro cells, pico cells, the pico-to-macro interference graph, and one
record per UE carrying its candidate cells and PHY rates in bits per
subframe.  The solver modules exchange :class:`PrimalState` /
:class:`DualState` vectors; the final integral result is an
:class:`Allocation`.

Throughputs are kept in bits per ABS-period (rate in bits/subframe times
airtime in subframes) everywhere; only the report layer converts to Mbps.

``NetworkInstance`` round-trips through a versioned JSON document whose
field names mirror the dataclass fields (see :meth:`NetworkInstance.to_json_dict`).
All types are immutable value data after construction and safe to share
across parallel workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

MACRO = "macro"
PICO = "pico"

JSON_FORMAT = "eicic-network-instance"
JSON_VERSION = 1

#: Absolute tolerance for real-valued feasibility sums (double-precision
#: accumulation over <= 1e4 UEs).
FEASIBILITY_TOL = 1e-9


def _readonly(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, order=True)
class CellId:
    """Identifier of a cell: kind ('macro' or 'pico') plus index within kind."""

    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in (MACRO, PICO):
            raise ValueError(f"unknown cell kind {self.kind!r}")
        if self.index < 0:
            raise ValueError("cell index must be nonnegative")

    @staticmethod
    def macro(index: int) -> "CellId":
        return CellId(MACRO, index)

    @staticmethod
    def pico(index: int) -> "CellId":
        return CellId(PICO, index)


@dataclass(frozen=True)
class UeRecord:
    """One UE: candidate cells, link rates (bits/subframe) and RSRP (dBm).

    A UE always has a best candidate macro.  The best candidate pico is
    optional; UEs without one participate with zero pico rates and are
    never association candidates for picos.
    """

    id: int
    weight: float
    best_macro: CellId
    best_pico: Optional[CellId]
    rate_macro: float
    rate_pico_abs: float
    rate_pico_nonabs: float
    rsrp_macro: float
    rsrp_pico: Optional[float] = None

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("UE id must be nonnegative")
        if not self.weight > 0:
            raise ValueError(f"UE {self.id}: weight must be positive")
        if self.best_macro.kind != MACRO:
            raise ValueError(f"UE {self.id}: best_macro must be a macro cell")
        if self.rate_macro < 0 or self.rate_pico_nonabs < 0:
            raise ValueError(f"UE {self.id}: rates must be nonnegative")
        if self.rate_pico_abs < self.rate_pico_nonabs:
            raise ValueError(
                f"UE {self.id}: ABS pico rate must dominate the non-ABS rate"
            )
        if self.best_pico is None:
            if self.rate_pico_abs != 0.0 or self.rate_pico_nonabs != 0.0:
                raise ValueError(
                    f"UE {self.id}: pico rates must be zero without a candidate pico"
                )
            if self.rsrp_pico is not None:
                raise ValueError(
                    f"UE {self.id}: rsrp_pico given without a candidate pico"
                )
        else:
            if self.best_pico.kind != PICO:
                raise ValueError(f"UE {self.id}: best_pico must be a pico cell")
            if self.rsrp_pico is None:
                raise ValueError(
                    f"UE {self.id}: rsrp_pico required with a candidate pico"
                )


@dataclass(frozen=True)
class NetworkInstance:
    """Complete input to the joint optimization problem.

    Cells are indexed contiguously (macros ``0..M-1``, picos ``0..P-1``).
    ``interferers[p]`` is the set of macro indices that must blank while
    pico ``p`` uses an ABS subframe.  ``n_sf`` is the ABS-period length
    in subframes.
    """

    macros: tuple
    picos: tuple
    interferers: tuple  # per pico, frozenset of macro indices
    ues: tuple
    n_sf: int

    def __post_init__(self):
        macros = tuple(self.macros)
        picos = tuple(self.picos)
        interferers = tuple(frozenset(s) for s in self.interferers)
        ues = tuple(self.ues)
        object.__setattr__(self, "macros", macros)
        object.__setattr__(self, "picos", picos)
        object.__setattr__(self, "interferers", interferers)
        object.__setattr__(self, "ues", ues)

        if self.n_sf < 1:
            raise ValueError("n_sf must be at least 1")
        for i, c in enumerate(macros):
            if c.kind != MACRO or c.index != i:
                raise ValueError("macros must be macro cells indexed 0..M-1 in order")
        for i, c in enumerate(picos):
            if c.kind != PICO or c.index != i:
                raise ValueError("picos must be pico cells indexed 0..P-1 in order")
        if len(interferers) != len(picos):
            raise ValueError("interferers must provide one macro set per pico")
        for p, macs in enumerate(interferers):
            for m in macs:
                if not (0 <= m < len(macros)):
                    raise ValueError(f"pico {p}: interferer {m} is not a known macro")
        seen = set()
        for ue in ues:
            if ue.id in seen:
                raise ValueError(f"duplicate UE id {ue.id}")
            seen.add(ue.id)
            if ue.best_macro.index >= len(macros):
                raise ValueError(f"UE {ue.id}: unknown macro {ue.best_macro.index}")
            if ue.best_pico is not None and ue.best_pico.index >= len(picos):
                raise ValueError(f"UE {ue.id}: unknown pico {ue.best_pico.index}")

        # Precomputed read-only arrays shared by solver / baselines / reports.
        n = len(ues)
        object.__setattr__(self, "weights", _readonly([u.weight for u in ues]))
        object.__setattr__(self, "rates_macro", _readonly([u.rate_macro for u in ues]))
        object.__setattr__(
            self, "rates_pico_abs", _readonly([u.rate_pico_abs for u in ues])
        )
        object.__setattr__(
            self, "rates_pico_nonabs", _readonly([u.rate_pico_nonabs for u in ues])
        )
        object.__setattr__(
            self,
            "ue_macro_index",
            _readonly([u.best_macro.index for u in ues], dtype=np.int64),
        )
        object.__setattr__(
            self,
            "ue_pico_index",
            _readonly(
                [-1 if u.best_pico is None else u.best_pico.index for u in ues],
                dtype=np.int64,
            ),
        )
        by_macro = [[] for _ in macros]
        by_pico = [[] for _ in picos]
        for pos, ue in enumerate(ues):
            by_macro[ue.best_macro.index].append(pos)
            if ue.best_pico is not None:
                by_pico[ue.best_pico.index].append(pos)
        object.__setattr__(
            self, "ues_by_macro", tuple(tuple(g) for g in by_macro)
        )
        object.__setattr__(self, "ues_by_pico", tuple(tuple(g) for g in by_pico))
        edges = tuple(
            (p, m) for p in range(len(picos)) for m in sorted(interferers[p])
        )
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "n_ues", n)
        object.__setattr__(self, "n_macros", len(macros))
        object.__setattr__(self, "n_picos", len(picos))

    # -- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        """Versioned JSON document; cell ids are stored as bare indices."""
        return {
            "format": JSON_FORMAT,
            "version": JSON_VERSION,
            "n_sf": self.n_sf,
            "macros": [c.index for c in self.macros],
            "picos": [c.index for c in self.picos],
            "interferers": {
                str(p): sorted(self.interferers[p]) for p in range(self.n_picos)
            },
            "ues": [
                {
                    "id": u.id,
                    "weight": u.weight,
                    "best_macro": u.best_macro.index,
                    "best_pico": None if u.best_pico is None else u.best_pico.index,
                    "rate_macro": u.rate_macro,
                    "rate_pico_abs": u.rate_pico_abs,
                    "rate_pico_nonabs": u.rate_pico_nonabs,
                    "rsrp_macro": u.rsrp_macro,
                    "rsrp_pico": u.rsrp_pico,
                }
                for u in self.ues
            ],
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "NetworkInstance":
        if doc.get("format") != JSON_FORMAT:
            raise ValueError("not a network-instance document")
        if doc.get("version") != JSON_VERSION:
            raise ValueError(f"unsupported document version {doc.get('version')!r}")
        ues = tuple(
            UeRecord(
                id=u["id"],
                weight=u["weight"],
                best_macro=CellId.macro(u["best_macro"]),
                best_pico=None if u["best_pico"] is None else CellId.pico(u["best_pico"]),
                rate_macro=u["rate_macro"],
                rate_pico_abs=u["rate_pico_abs"],
                rate_pico_nonabs=u["rate_pico_nonabs"],
                rsrp_macro=u["rsrp_macro"],
                rsrp_pico=u["rsrp_pico"],
            )
            for u in doc["ues"]
        )
        return NetworkInstance(
            macros=tuple(CellId.macro(i) for i in doc["macros"]),
            picos=tuple(CellId.pico(i) for i in doc["picos"]),
            interferers=tuple(
                frozenset(doc["interferers"][str(p)]) for p in range(len(doc["picos"]))
            ),
            ues=ues,
            n_sf=doc["n_sf"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=1)

    @staticmethod
    def from_json(text: str) -> "NetworkInstance":
        return NetworkInstance.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class PrimalState:
    """One point of the relaxed problem: airtimes, frame counts, throughputs.

    ``x`` is macro airtime, ``y_abs`` / ``y_nonabs`` pico airtime over ABS
    and regular subframes (all per UE, in subframes per ABS-period);
    ``abs_pico`` / ``nonabs_macro`` are per-cell frame counts; ``throughput``
    is per UE in bits per ABS-period.
    """

    x: np.ndarray
    y_abs: np.ndarray
    y_nonabs: np.ndarray
    abs_pico: np.ndarray
    nonabs_macro: np.ndarray
    throughput: np.ndarray

    def __post_init__(self):
        for name in ("x", "y_abs", "y_nonabs", "abs_pico", "nonabs_macro", "throughput"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


@dataclass(frozen=True)
class DualState:
    """Nonnegative multipliers, one family per constraint group.

    ``lam`` prices UE throughput, ``mu`` the per-edge frame budget (aligned
    with ``instance.edges``), ``beta_macro`` / ``beta_pico`` the cell airtime
    budgets and ``alpha`` the total pico airtime.
    """

    lam: np.ndarray
    mu: np.ndarray
    beta_macro: np.ndarray
    beta_pico: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        for name in ("lam", "mu", "beta_macro", "beta_pico", "alpha"):
            arr = _readonly(getattr(self, name))
            if arr.size and arr.min() < 0:
                raise ValueError(f"dual variable {name} must be nonnegative")
            object.__setattr__(self, name, arr)

    @staticmethod
    def zeros(instance: NetworkInstance) -> "DualState":
        return DualState(
            lam=np.zeros(instance.n_ues),
            mu=np.zeros(len(instance.edges)),
            beta_macro=np.zeros(instance.n_macros),
            beta_pico=np.zeros(instance.n_picos),
            alpha=np.zeros(instance.n_picos),
        )


@dataclass(frozen=True)
class Allocation:
    """Feasible integral solution: association, frame counts, airtimes.

    ``association[u]`` is ``'macro'`` or ``'pico'``; frame counts are
    integers in ``[0, n_sf]``; ``utility`` is the weighted log utility
    (``-inf`` if some UE ended up with zero throughput).
    """

    association: tuple
    abs_pico: np.ndarray
    nonabs_macro: np.ndarray
    x: np.ndarray
    y_abs: np.ndarray
    y_nonabs: np.ndarray
    throughput: np.ndarray
    utility: float

    def __post_init__(self):
        assoc = tuple(self.association)
        if any(a not in (MACRO, PICO) for a in assoc):
            raise ValueError("association labels must be 'macro' or 'pico'")
        object.__setattr__(self, "association", assoc)
        object.__setattr__(self, "abs_pico", _readonly(self.abs_pico, dtype=np.int64))
        object.__setattr__(
            self, "nonabs_macro", _readonly(self.nonabs_macro, dtype=np.int64)
        )
        for name in ("x", "y_abs", "y_nonabs", "throughput"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    def to_json_dict(self) -> dict:
        return {
            "format": "eicic-allocation",
            "version": 1,
            "association": list(self.association),
            "abs_pico": self.abs_pico.tolist(),
            "nonabs_macro": self.nonabs_macro.tolist(),
            "x": self.x.tolist(),
            "y_abs": self.y_abs.tolist(),
            "y_nonabs": self.y_nonabs.tolist(),
            "throughput": self.throughput.tolist(),
            "utility": self.utility,
        }


@dataclass(frozen=True)
class ConvergenceParams:
    """Instance statistics that drive the solver's step-size/iteration rule.

    ``r_max`` / ``r_min`` are taken over all link rates of all UEs, with
    zero-rate links excluded from ``r_min``.  ``weights_norm_sq`` stacks
    the per-cell candidate-weight totals once per cell (macros then picos).
    ``i_max`` is the larger of the max interferer count per pico and the
    max interfered-pico count per macro.
    """

    n_ues: int
    n_macros: int
    n_picos: int
    n_edges: int
    i_max: int
    u_max: int
    r_max: float
    r_min: float
    weights_norm_sq: float
    n_sf: int

    @staticmethod
    def from_instance(instance: NetworkInstance) -> "ConvergenceParams":
        rates = np.concatenate(
            [instance.rates_macro, instance.rates_pico_abs, instance.rates_pico_nonabs]
        )
        positive = rates[rates > 0]
        r_max = float(positive.max()) if positive.size else 0.0
        r_min = float(positive.min()) if positive.size else 0.0
        per_macro_edges = np.zeros(instance.n_macros, dtype=int)
        for _, m in instance.edges:
            per_macro_edges[m] += 1
        i_max_pico = max((len(s) for s in instance.interferers), default=0)
        i_max_macro = int(per_macro_edges.max()) if instance.n_macros else 0
        cell_sizes = [len(g) for g in instance.ues_by_macro] + [
            len(g) for g in instance.ues_by_pico
        ]
        w = instance.weights
        totals = [w[list(g)].sum() for g in instance.ues_by_macro] + [
            w[list(g)].sum() for g in instance.ues_by_pico
        ]
        return ConvergenceParams(
            n_ues=instance.n_ues,
            n_macros=instance.n_macros,
            n_picos=instance.n_picos,
            n_edges=len(instance.edges),
            i_max=max(i_max_pico, i_max_macro),
            u_max=max(cell_sizes, default=0),
            r_max=r_max,
            r_min=r_min,
            weights_norm_sq=float(sum(t * t for t in totals)),
            n_sf=instance.n_sf,
        )


@dataclass(frozen=True)
class Violation:
    """One violated constraint; ``subject`` identifies the UE/cell/edge."""

    kind: str
    subject: tuple
    excess: float
    message: str

    def __str__(self):
        return self.message


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def log_utility(weights, throughputs, ids: Optional[Sequence[int]] = None) -> float:
    """sum(w_u * ln R_u) with natural log; raises if any throughput <= 0."""
    w = np.asarray(weights, dtype=float)
    t = np.asarray(throughputs, dtype=float)
    bad = np.nonzero(~(t > 0))[0]
    if bad.size:
        which = ids[bad[0]] if ids is not None else int(bad[0])
        raise ValueError(
            f"nonpositive throughput ({t[bad[0]]!r}) for UE {which}; "
            "log utility is undefined"
        )
    return float(np.dot(w, np.log(t)))


def safe_log_utility(weights, throughputs) -> float:
    """Like :func:`log_utility` but maps zero throughput to ``-inf`` instead
    of raising; used where a degenerate allocation is data, not a bug."""
    t = np.asarray(throughputs, dtype=float)
    if not (t > 0).all():
        return -math.inf
    return float(np.dot(np.asarray(weights, dtype=float), np.log(t)))


def utility(allocation: Allocation, instance: NetworkInstance) -> float:
    """System utility sum(w_u * ln R_u) of an allocation (bits per ABS-period)."""
    ids = [u.id for u in instance.ues]
    return log_utility(instance.weights, allocation.throughput, ids=ids)


def _cell_sums(values: np.ndarray, instance: NetworkInstance):
    """Per-macro and per-pico sums of a per-UE vector over candidate sets."""
    mac = np.bincount(
        instance.ue_macro_index, weights=values, minlength=instance.n_macros
    )
    mask = instance.ue_pico_index >= 0
    if mask.any():
        pic = np.bincount(
            instance.ue_pico_index[mask],
            weights=values[mask],
            minlength=instance.n_picos,
        )
    else:
        pic = np.zeros(instance.n_picos)
    return mac, pic


def lagrangian(z: PrimalState, p: DualState, instance: NetworkInstance) -> float:
    """Relaxed-problem Lagrangian: utility minus the five priced penalty groups."""
    util = log_utility(instance.weights, z.throughput)
    served = (
        instance.rates_macro * z.x
        + instance.rates_pico_abs * z.y_abs
        + instance.rates_pico_nonabs * z.y_nonabs
    )
    pen_tpt = float(np.dot(p.lam, z.throughput - served))
    pen_int = 0.0
    for e, (pi, mi) in enumerate(instance.edges):
        pen_int += p.mu[e] * (z.abs_pico[pi] + z.nonabs_macro[mi] - instance.n_sf)
    x_mac, _ = _cell_sums(z.x, instance)
    _, ya_pic = _cell_sums(z.y_abs, instance)
    _, ytot_pic = _cell_sums(z.y_abs + z.y_nonabs, instance)
    pen_mac = float(np.dot(p.beta_macro, x_mac - z.nonabs_macro))
    pen_pabs = float(np.dot(p.beta_pico, ya_pic - z.abs_pico))
    pen_ptot = float(np.dot(p.alpha, ytot_pic - instance.n_sf))
    return util - pen_tpt - pen_int - pen_mac - pen_pabs - pen_ptot


def in_subspace(z: PrimalState, instance: NetworkInstance, tol: float = FEASIBILITY_TOL) -> bool:
    """True if the iterate lies in the solver's box: per-cell sums <= n_sf."""
    nsf = instance.n_sf + tol
    if (z.x < -tol).any() or (z.y_abs < -tol).any() or (z.y_nonabs < -tol).any():
        return False
    if (z.abs_pico < -tol).any() or (z.abs_pico > nsf).any():
        return False
    if (z.nonabs_macro < -tol).any() or (z.nonabs_macro > nsf).any():
        return False
    x_mac, _ = _cell_sums(z.x, instance)
    _, ya_pic = _cell_sums(z.y_abs, instance)
    _, yn_pic = _cell_sums(z.y_nonabs, instance)
    return bool(
        (x_mac <= nsf).all() and (ya_pic <= nsf).all() and (yn_pic <= nsf).all()
    )


def check_feasibility(allocation: Allocation, instance: NetworkInstance) -> list:
    """Check an allocation against every constraint of the integral problem.

    Returns a list of :class:`Violation` (empty means feasible).  Real-valued
    sums use an absolute tolerance of ``1e-9``; the exclusivity and integer
    constraints are checked exactly.  Violations are data, not errors.
    """
    v = []
    nsf = instance.n_sf
    a = allocation

    def ue_id(pos):
        return instance.ues[pos].id

    # Association exclusivity: airtime from one side only, checked exactly.
    pico_air = a.y_abs + a.y_nonabs
    for pos in np.nonzero((a.x != 0.0) & (pico_air != 0.0))[0]:
        v.append(
            Violation(
                "exclusivity",
                (ue_id(int(pos)),),
                float(a.x[pos] * pico_air[pos]),
                f"UE {ue_id(int(pos))} holds both macro and pico airtime",
            )
        )
    # Nonnegative airtimes.
    for name, arr in (("x", a.x), ("y_abs", a.y_abs), ("y_nonabs", a.y_nonabs)):
        for pos in np.nonzero(arr < 0)[0]:
            v.append(
                Violation(
                    "negative_airtime",
                    (ue_id(int(pos)), name),
                    float(-arr[pos]),
                    f"UE {ue_id(int(pos))}: negative {name}",
                )
            )
    # Frame-count bounds (integer arrays by construction).
    for p in range(instance.n_picos):
        if not (0 <= a.abs_pico[p] <= nsf):
            v.append(
                Violation(
                    "abs_bounds",
                    (p,),
                    float(a.abs_pico[p]),
                    f"pico {p}: ABS count {a.abs_pico[p]} outside [0, {nsf}]",
                )
            )
    for m in range(instance.n_macros):
        if not (0 <= a.nonabs_macro[m] <= nsf):
            v.append(
                Violation(
                    "nonabs_bounds",
                    (m,),
                    float(a.nonabs_macro[m]),
                    f"macro {m}: non-ABS count {a.nonabs_macro[m]} outside [0, {nsf}]",
                )
            )
    # Interference edges: blanked frames must cover every interfered pico.
    for pi, mi in instance.edges:
        s = int(a.abs_pico[pi]) + int(a.nonabs_macro[mi])
        if s > nsf:
            v.append(
                Violation(
                    "interference",
                    (pi, mi),
                    float(s - nsf),
                    f"edge (pico {pi}, macro {mi}): ABS + non-ABS = {s} > {nsf}",
                )
            )
    # Airtime budgets over associated sets.
    assoc = np.array([lab == PICO for lab in a.association])
    for m in range(instance.n_macros):
        members = [u for u in instance.ues_by_macro[m] if not assoc[u]]
        total = float(a.x[members].sum()) if members else 0.0
        if total > a.nonabs_macro[m] + FEASIBILITY_TOL:
            v.append(
                Violation(
                    "macro_airtime",
                    (m,),
                    total - float(a.nonabs_macro[m]),
                    f"macro {m}: airtime {total} exceeds {a.nonabs_macro[m]}",
                )
            )
    for p in range(instance.n_picos):
        members = [u for u in instance.ues_by_pico[p] if assoc[u]]
        ya = float(a.y_abs[members].sum()) if members else 0.0
        ytot = float(pico_air[members].sum()) if members else 0.0
        if ya > a.abs_pico[p] + FEASIBILITY_TOL:
            v.append(
                Violation(
                    "pico_abs_airtime",
                    (p,),
                    ya - float(a.abs_pico[p]),
                    f"pico {p}: ABS airtime {ya} exceeds {a.abs_pico[p]}",
                )
            )
        if ytot > nsf + FEASIBILITY_TOL:
            v.append(
                Violation(
                    "pico_total_airtime",
                    (p,),
                    ytot - nsf,
                    f"pico {p}: total airtime {ytot} exceeds {nsf}",
                )
            )
    # Throughput cannot exceed what the airtimes deliver.
    served = (
        instance.rates_macro * a.x
        + instance.rates_pico_abs * a.y_abs
        + instance.rates_pico_nonabs * a.y_nonabs
    )
    for pos in np.nonzero(a.throughput > served + FEASIBILITY_TOL)[0]:
        v.append(
            Violation(
                "throughput_bound",
                (ue_id(int(pos)),),
                float(a.throughput[pos] - served[pos]),
                f"UE {ue_id(int(pos))}: throughput {a.throughput[pos]} exceeds served rate {served[pos]}",
            )
        )
    return v


def primal_from_allocation(a: Allocation) -> PrimalState:
    """View an integral allocation as a point of the relaxed problem."""
    return PrimalState(
        x=a.x,
        y_abs=a.y_abs,
        y_nonabs=a.y_nonabs,
        abs_pico=a.abs_pico.astype(float),
        nonabs_macro=a.nonabs_macro.astype(float),
        throughput=a.throughput,
    )
