"""Synthetic scenario generation: topology, path loss, SINR, rates, UE drops.

Produces :class:`eicic.model.NetworkInstance` values from a declarative
:class:`ScenarioSpec`.  Macro positions come from a hex lattice or explicit
coordinates; picos are placed randomly, explicitly, or near the macro cell
edge; UEs are dropped as a seeded Poisson process with optional hotspot
discs.  Path loss follows a log-distance model with separate exponents for
macro and pico transmitters, and link SINRs are mapped to PHY rates with a
capped Shannon formula (a stepwise efficiency table can be plugged in
instead).

Everything is deterministic in the seeds: cell geometry depends only on
``spec.rng_seed``, the UE drop on the snapshot seed, so repeated snapshots
of one spec share cells and interference graph.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from eicic.model import CellId, NetworkInstance, UeRecord

SUBFRAME_S = 1e-3  # LTE subframe duration

# Spec defaults mirroring typical deployments: 45 dBm macros, 36 dBm picos,
# 10 MHz band, 40-subframe ABS period, 15 dB maximum selection bias.
DEFAULT_MACRO_POWER_DBM = 45.0
DEFAULT_PICO_POWER_DBM = 36.0
DEFAULT_MAX_BIAS_DB = 15.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


# ---------------------------------------------------------------------------
# Link-level primitives
# ---------------------------------------------------------------------------


def sinr_pico(received_mw, pico_interf_mw, macro_interf_mw, noise_mw, abs_frame: bool):
    """Linear SINR of a pico-served UE.

    During ABS subframes the coordinated macro interferers are muted, so
    only pico interference and the noise floor remain; otherwise the macro
    interference adds in.
    """
    if abs_frame:
        return received_mw / (pico_interf_mw + noise_mw)
    return received_mw / (pico_interf_mw + macro_interf_mw + noise_mw)


def sinr_macro(received_mw, pico_interf_mw, macro_interf_mw, noise_mw):
    """Linear SINR of a macro-served UE (all interference present)."""
    return received_mw / (pico_interf_mw + macro_interf_mw + noise_mw)


def rate_from_sinr(
    sinr,
    bandwidth_hz: float,
    snr_gap_db: float = 3.0,
    eff_scale: float = 1.0,
    max_eff: float = 6.0,
):
    """Bits per subframe from linear SINR: capped Shannon with an SINR gap.

    rate = bandwidth * 1ms * min(max_eff, eff_scale * log2(1 + sinr/gap)).
    Monotone nondecreasing in ``sinr``; zero at zero SINR.
    """
    gap = db_to_linear(snr_gap_db)
    eff = np.minimum(max_eff, eff_scale * np.log2(1.0 + np.asarray(sinr) / gap))
    return bandwidth_hz * SUBFRAME_S * eff


def rate_from_sinr_table(sinr, bandwidth_hz: float, table: Sequence) -> float:
    """Bits per subframe via a stepwise (min_sinr_db, bps/Hz) lookup table.

    ``table`` rows must be sorted by ascending SINR threshold; SINR below
    the first row maps to zero efficiency.
    """
    sinr_db = -math.inf if sinr <= 0 else linear_to_db(float(sinr))
    eff = 0.0
    for min_db, row_eff in table:
        if sinr_db >= min_db:
            eff = row_eff
        else:
            break
    return bandwidth_hz * SUBFRAME_S * eff


def compose_icic_rate(
    eta_high: float, eta_low: float, b_high_hz: float, b_low_hz: float
) -> float:
    """Macro rate under frequency-domain power partitioning (bits/subframe).

    Combines the spectral efficiencies seen on the high- and low-power
    sub-bands; with this composed rate as input, the time-domain optimizer
    needs no other change.
    """
    return (eta_high * b_high_hz + eta_low * b_low_hz) * SUBFRAME_S


# ---------------------------------------------------------------------------
# Scenario specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hotspot:
    center_m: tuple
    radius_m: float
    density_multiplier: float

    def __post_init__(self):
        if self.radius_m <= 0:
            raise ValueError("hotspot radius must be positive")
        if self.density_multiplier < 1.0:
            raise ValueError("hotspot density multiplier must be >= 1")


@dataclass(frozen=True)
class ScenarioSpec:
    """Generator parameters; ``rng_seed`` fully determines the output."""

    rng_seed: int
    area_km: tuple = (2.0, 1.0)
    macro_layout: str = "hex"  # "hex" | "explicit"
    macro_spacing_m: float = 500.0
    macro_coords_m: Optional[tuple] = None
    macro_tx_power_dbm: float = DEFAULT_MACRO_POWER_DBM
    pico_count: int = 0
    pico_placement: str = "random"  # "random" | "explicit" | "near-edge"
    pico_coords_m: Optional[tuple] = None
    pico_tx_power_dbm: float = DEFAULT_PICO_POWER_DBM
    ue_density_per_km2: float = 450.0
    ue_weight: float = 1.0
    hotspots: tuple = ()
    bandwidth_mhz: float = 10.0
    noise_density_dbm_hz: float = -174.0
    interference_threshold_db: float = 6.0
    n_sf: int = 40
    max_bias_db: float = DEFAULT_MAX_BIAS_DB
    pathloss_ref_db: float = 38.0
    pathloss_ref_m: float = 1.0
    pathloss_exp_macro: float = 3.5
    pathloss_exp_pico: float = 3.0
    shadowing_sigma_db: float = 0.0
    snr_gap_db: float = 3.0
    eff_scale: float = 1.0
    max_eff: float = 6.0
    rate_table: Optional[tuple] = None  # rows (min_sinr_db, bps_per_hz)

    def __post_init__(self):
        if self.ue_density_per_km2 <= 0:
            raise ValueError("UE density must be positive")
        for name in ("macro_tx_power_dbm", "pico_tx_power_dbm"):
            p = getattr(self, name)
            if not (0.0 <= p <= 60.0):
                raise ValueError(f"{name}={p} outside [0, 60] dBm")
        if self.macro_layout not in ("hex", "explicit"):
            raise ValueError(f"unknown macro layout {self.macro_layout!r}")
        if self.pico_placement not in ("random", "explicit", "near-edge"):
            raise ValueError(f"unknown pico placement {self.pico_placement!r}")
        if self.macro_layout == "explicit" and not self.macro_coords_m:
            raise ValueError("explicit macro layout needs macro_coords_m")
        if self.pico_placement == "explicit" and self.pico_count > 0 and not self.pico_coords_m:
            raise ValueError("explicit pico placement needs pico_coords_m")
        if self.n_sf < 1:
            raise ValueError("n_sf must be at least 1")
        object.__setattr__(self, "hotspots", tuple(self.hotspots))

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth_mhz * 1e6

    @property
    def noise_dbm(self) -> float:
        """Thermal noise over the whole band."""
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)

    @staticmethod
    def from_toml_dict(doc: dict, rng_seed: Optional[int] = None) -> "ScenarioSpec":
        area = doc.get("area", {})
        macros = doc.get("macros", {})
        picos = doc.get("picos", {})
        ues = doc.get("ues", {})
        radio = doc.get("radio", {})
        pl = doc.get("pathloss", {})
        rates = doc.get("rates", {})
        run = doc.get("run", {})
        seed = rng_seed if rng_seed is not None else run.get("rng_seed")
        if seed is None:
            raise ValueError("a seed is required (run.rng_seed or --seed)")
        kwargs = dict(rng_seed=int(seed))
        if area:
            kwargs["area_km"] = (area["width_km"], area["height_km"])
        if "layout" in macros:
            kwargs["macro_layout"] = macros["layout"]
        if "spacing_m" in macros:
            kwargs["macro_spacing_m"] = macros["spacing_m"]
        if "coords_m" in macros:
            kwargs["macro_coords_m"] = tuple(tuple(c) for c in macros["coords_m"])
        if "tx_power_dbm" in macros:
            kwargs["macro_tx_power_dbm"] = macros["tx_power_dbm"]
        if "count" in picos:
            kwargs["pico_count"] = picos["count"]
        if "placement" in picos:
            kwargs["pico_placement"] = picos["placement"]
        if "coords_m" in picos:
            kwargs["pico_coords_m"] = tuple(tuple(c) for c in picos["coords_m"])
        if "tx_power_dbm" in picos:
            kwargs["pico_tx_power_dbm"] = picos["tx_power_dbm"]
        if "density_per_km2" in ues:
            kwargs["ue_density_per_km2"] = ues["density_per_km2"]
        if "weight" in ues:
            kwargs["ue_weight"] = ues["weight"]
        kwargs["hotspots"] = tuple(
            Hotspot(tuple(h["center_m"]), h["radius_m"], h["density_multiplier"])
            for h in doc.get("hotspots", [])
        )
        for key, name in (
            ("bandwidth_mhz", "bandwidth_mhz"),
            ("noise_density_dbm_hz", "noise_density_dbm_hz"),
            ("interference_threshold_db", "interference_threshold_db"),
            ("n_sf", "n_sf"),
            ("max_bias_db", "max_bias_db"),
        ):
            if key in radio:
                kwargs[name] = radio[key]
        for key, name in (
            ("ref_loss_db", "pathloss_ref_db"),
            ("ref_distance_m", "pathloss_ref_m"),
            ("exponent_macro", "pathloss_exp_macro"),
            ("exponent_pico", "pathloss_exp_pico"),
            ("shadowing_sigma_db", "shadowing_sigma_db"),
        ):
            if key in pl:
                kwargs[name] = pl[key]
        for key, name in (
            ("snr_gap_db", "snr_gap_db"),
            ("spectral_efficiency_scale", "eff_scale"),
            ("max_spectral_efficiency", "max_eff"),
        ):
            if key in rates:
                kwargs[name] = rates[key]
        if "table" in rates:
            kwargs["rate_table"] = tuple(tuple(r) for r in rates["table"])
        return ScenarioSpec(**kwargs)

    @staticmethod
    def from_toml(path, rng_seed: Optional[int] = None) -> "ScenarioSpec":
        try:
            import tomllib as toml
        except ImportError:
            import tomli as toml
        with open(path, "rb") as fh:
            return ScenarioSpec.from_toml_dict(toml.load(fh), rng_seed=rng_seed)


@dataclass(frozen=True)
class Snapshot:
    """One generated UE drop plus the geometry retained for diagnostics."""

    spec: ScenarioSpec
    seed: int
    instance: NetworkInstance
    macro_xy: np.ndarray
    pico_xy: np.ndarray
    ue_xy: np.ndarray
    sinr_macro_db: np.ndarray
    sinr_pico_abs_db: np.ndarray  # nan where the UE has no candidate pico
    sinr_pico_nonabs_db: np.ndarray

    def geometry_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                "ue_id",
                "x_m",
                "y_m",
                "best_macro",
                "best_pico",
                "sinr_macro_db",
                "sinr_pico_abs_db",
                "sinr_pico_nonabs_db",
            ]
        )
        for pos, ue in enumerate(self.instance.ues):
            has_pico = ue.best_pico is not None
            writer.writerow(
                [
                    ue.id,
                    repr(float(self.ue_xy[pos, 0])),
                    repr(float(self.ue_xy[pos, 1])),
                    ue.best_macro.index,
                    ue.best_pico.index if has_pico else "",
                    repr(float(self.sinr_macro_db[pos])),
                    repr(float(self.sinr_pico_abs_db[pos])) if has_pico else "",
                    repr(float(self.sinr_pico_nonabs_db[pos])) if has_pico else "",
                ]
            )
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _hex_lattice(width_m, height_m, spacing_m):
    dy = spacing_m * math.sqrt(3.0) / 2.0
    pts = []
    n_rows = int(height_m // dy) + 1
    oy = (height_m - (n_rows - 1) * dy) / 2.0
    n_cols = int(width_m // spacing_m) + 2
    ox = (width_m - (width_m // spacing_m) * spacing_m) / 2.0
    for j in range(n_rows):
        shift = (j % 2) * spacing_m / 2.0
        for i in range(-1, n_cols):
            x = ox + i * spacing_m + shift
            if 0.0 <= x <= width_m:
                pts.append((x, oy + j * dy))
    return np.array(pts, dtype=float)


def _pathloss_db(dist_m, spec: ScenarioSpec, exponent):
    d = np.maximum(np.asarray(dist_m, dtype=float), spec.pathloss_ref_m)
    return spec.pathloss_ref_db + 10.0 * exponent * np.log10(d / spec.pathloss_ref_m)


def _distances(a_xy, b_xy):
    diff = a_xy[:, None, :] - b_xy[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def _rsrp_at(points_xy, cells_xy, tx_dbm, spec, exponent, shadow_db=None):
    pl = _pathloss_db(_distances(points_xy, cells_xy), spec, exponent)
    rsrp = tx_dbm - pl
    if shadow_db is not None:
        rsrp = rsrp + shadow_db
    return rsrp


def _place_cells(spec: ScenarioSpec):
    width_m = spec.area_km[0] * 1000.0
    height_m = spec.area_km[1] * 1000.0
    if spec.macro_layout == "explicit":
        macro_xy = np.array(spec.macro_coords_m, dtype=float).reshape(-1, 2)
    else:
        macro_xy = _hex_lattice(width_m, height_m, spec.macro_spacing_m)
    if macro_xy.shape[0] == 0:
        raise ValueError("scenario produced zero macros")

    cells_rng = np.random.default_rng([int(spec.rng_seed), 0x5CE11])
    count = spec.pico_count
    if count == 0:
        pico_xy = np.zeros((0, 2))
    elif spec.pico_placement == "explicit":
        pico_xy = np.array(spec.pico_coords_m, dtype=float).reshape(-1, 2)[:count]
    elif spec.pico_placement == "random":
        pico_xy = np.column_stack(
            [
                cells_rng.uniform(0.0, width_m, count),
                cells_rng.uniform(0.0, height_m, count),
            ]
        )
    else:  # near-edge: raster points with the weakest best-macro RSRP
        step = max(min(width_m, height_m) / 60.0, 10.0)
        gx, gy = np.meshgrid(
            np.arange(step / 2, width_m, step), np.arange(step / 2, height_m, step)
        )
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        rsrp = _rsrp_at(
            grid, macro_xy, spec.macro_tx_power_dbm, spec, spec.pathloss_exp_macro
        ).max(axis=1)
        order = np.lexsort((grid[:, 1], grid[:, 0], rsrp))
        chosen = []
        min_sep = 3.0 * step
        for idx in order:
            pt = grid[idx]
            if all(np.hypot(*(pt - c)) >= min_sep for c in chosen):
                chosen.append(pt)
            if len(chosen) == count:
                break
        if len(chosen) < count:
            raise ValueError("near-edge placement could not fit all picos")
        pico_xy = np.array(chosen)
    return macro_xy, pico_xy


def _interference_sets(macro_at_pico_dbm, noise_dbm, threshold_db):
    floor = noise_dbm + threshold_db
    return tuple(
        frozenset(np.nonzero(macro_at_pico_dbm[p] >= floor)[0].tolist())
        for p in range(macro_at_pico_dbm.shape[0])
    )


def build_interference_graph(snapshot: Snapshot, threshold_db: float):
    """Per-pico macro interferer sets: macros received above noise + threshold."""
    spec = snapshot.spec
    if snapshot.pico_xy.shape[0] == 0:
        return ()
    at_pico = _rsrp_at(
        snapshot.pico_xy,
        snapshot.macro_xy,
        spec.macro_tx_power_dbm,
        spec,
        spec.pathloss_exp_macro,
    )
    return _interference_sets(at_pico, spec.noise_dbm, threshold_db)


def _link_rate(sinr, spec: ScenarioSpec):
    if spec.rate_table is not None:
        return rate_from_sinr_table(sinr, spec.bandwidth_hz, spec.rate_table)
    return float(
        rate_from_sinr(
            sinr,
            spec.bandwidth_hz,
            snr_gap_db=spec.snr_gap_db,
            eff_scale=spec.eff_scale,
            max_eff=spec.max_eff,
        )
    )


def generate(spec: ScenarioSpec, seed: Optional[int] = None) -> Snapshot:
    """Generate one UE-drop snapshot.

    ``seed`` overrides the UE-drop randomness (defaults to ``spec.rng_seed``);
    cell placement always depends on ``spec.rng_seed`` alone so that repeated
    snapshots share topology and interference graph.
    """
    drop_seed = spec.rng_seed if seed is None else seed
    macro_xy, pico_xy = _place_cells(spec)
    n_macros = macro_xy.shape[0]
    n_picos = pico_xy.shape[0]
    width_m = spec.area_km[0] * 1000.0
    height_m = spec.area_km[1] * 1000.0

    if n_picos:
        at_pico = _rsrp_at(
            pico_xy, macro_xy, spec.macro_tx_power_dbm, spec, spec.pathloss_exp_macro
        )
        interferers = _interference_sets(
            at_pico, spec.noise_dbm, spec.interference_threshold_db
        )
    else:
        interferers = ()

    drop_rng = np.random.default_rng([int(drop_seed), 0xD2A9])
    area_km2 = spec.area_km[0] * spec.area_km[1]
    n_base = int(drop_rng.poisson(spec.ue_density_per_km2 * area_km2))
    xs = drop_rng.uniform(0.0, width_m, n_base)
    ys = drop_rng.uniform(0.0, height_m, n_base)
    pts = [np.column_stack([xs, ys])]
    for hs in spec.hotspots:
        extra_km2 = math.pi * hs.radius_m**2 / 1e6
        lam = (hs.density_multiplier - 1.0) * spec.ue_density_per_km2 * extra_km2
        n_extra = int(drop_rng.poisson(lam))
        r = hs.radius_m * np.sqrt(drop_rng.uniform(0.0, 1.0, n_extra))
        theta = drop_rng.uniform(0.0, 2.0 * math.pi, n_extra)
        hx = np.clip(hs.center_m[0] + r * np.cos(theta), 0.0, width_m)
        hy = np.clip(hs.center_m[1] + r * np.sin(theta), 0.0, height_m)
        pts.append(np.column_stack([hx, hy]))
    ue_xy = np.concatenate(pts, axis=0)
    n_ues = ue_xy.shape[0]

    shadow_mac = shadow_pic = None
    if spec.shadowing_sigma_db > 0:
        shadow_mac = drop_rng.normal(0.0, spec.shadowing_sigma_db, (n_ues, n_macros))
        if n_picos:
            shadow_pic = drop_rng.normal(0.0, spec.shadowing_sigma_db, (n_ues, n_picos))

    rsrp_mac = _rsrp_at(
        ue_xy, macro_xy, spec.macro_tx_power_dbm, spec, spec.pathloss_exp_macro,
        shadow_db=shadow_mac,
    )
    mac_mw = dbm_to_mw(rsrp_mac)
    best_mac = rsrp_mac.argmax(axis=1) if n_ues else np.zeros(0, dtype=int)
    noise_mw = db_to_linear(spec.noise_dbm)
    if n_ues and rsrp_mac.max(axis=1).min() < spec.noise_dbm:
        worst = int(rsrp_mac.max(axis=1).argmin())
        raise ValueError(
            f"UE {worst} has no macro coverage above the noise floor "
            f"({rsrp_mac[worst].max():.1f} dBm < {spec.noise_dbm:.1f} dBm)"
        )

    if n_picos:
        rsrp_pic = _rsrp_at(
            ue_xy, pico_xy, spec.pico_tx_power_dbm, spec, spec.pathloss_exp_pico,
            shadow_db=shadow_pic,
        )
        pic_mw = dbm_to_mw(rsrp_pic)
        best_pic = rsrp_pic.argmax(axis=1) if n_ues else np.zeros(0, dtype=int)
    else:
        rsrp_pic = np.zeros((n_ues, 0))
        pic_mw = rsrp_pic
        best_pic = np.full(n_ues, -1)

    ues = []
    s_mac_db = np.empty(n_ues)
    s_abs_db = np.full(n_ues, np.nan)
    s_nab_db = np.full(n_ues, np.nan)
    for u in range(n_ues):
        m = int(best_mac[u])
        serv_mac = mac_mw[u, m]
        other_mac = mac_mw[u].sum() - serv_mac
        all_pic = pic_mw[u].sum() if n_picos else 0.0
        s_mac = sinr_macro(serv_mac, all_pic, other_mac, noise_mw)
        s_mac_db[u] = linear_to_db(s_mac)
        rate_mac = _link_rate(s_mac, spec)

        best_pico_id = None
        rsrp_pico_val = None
        rate_abs = rate_nab = 0.0
        if n_picos:
            p = int(best_pic[u])
            # Candidate only within the maximum-bias window of the best macro.
            if rsrp_pic[u, p] >= rsrp_mac[u, m] - spec.max_bias_db:
                best_pico_id = p
                rsrp_pico_val = float(rsrp_pic[u, p])
                serv_pic = pic_mw[u, p]
                other_pic = pic_mw[u].sum() - serv_pic
                coord = list(interferers[p])
                mac_coord = mac_mw[u, coord].sum() if coord else 0.0
                # Macros outside the coordinated set keep transmitting during
                # ABS subframes: they join the noise floor in both branches.
                mac_floor = mac_mw[u].sum() - mac_coord
                s_abs = sinr_pico(
                    serv_pic, other_pic, mac_coord, noise_mw + mac_floor, True
                )
                s_nab = sinr_pico(
                    serv_pic, other_pic, mac_coord, noise_mw + mac_floor, False
                )
                s_abs_db[u] = linear_to_db(s_abs)
                s_nab_db[u] = linear_to_db(s_nab)
                rate_abs = _link_rate(s_abs, spec)
                rate_nab = _link_rate(s_nab, spec)
        ues.append(
            UeRecord(
                id=u,
                weight=spec.ue_weight,
                best_macro=CellId.macro(m),
                best_pico=None if best_pico_id is None else CellId.pico(best_pico_id),
                rate_macro=rate_mac,
                rate_pico_abs=rate_abs,
                rate_pico_nonabs=rate_nab,
                rsrp_macro=float(rsrp_mac[u, m]),
                rsrp_pico=rsrp_pico_val,
            )
        )

    instance = NetworkInstance(
        macros=tuple(CellId.macro(i) for i in range(n_macros)),
        picos=tuple(CellId.pico(i) for i in range(n_picos)),
        interferers=interferers,
        ues=tuple(ues),
        n_sf=spec.n_sf,
    )
    return Snapshot(
        spec=spec,
        seed=drop_seed,
        instance=instance,
        macro_xy=macro_xy,
        pico_xy=pico_xy,
        ue_xy=ue_xy,
        sinr_macro_db=s_mac_db,
        sinr_pico_abs_db=s_abs_db,
        sinr_pico_nonabs_db=s_nab_db,
    )


# ---------------------------------------------------------------------------
# Direct random instances (small-instance verification, no geometry)
# ---------------------------------------------------------------------------


def random_instance(
    seed,
    n_macros=2,
    n_picos=2,
    n_ues=8,
    n_sf=8,
    rate_lo=2000.0,
    rate_hi=16000.0,
    pico_prob=0.7,
    zero_nonabs_prob=0.3,
    full_interference=False,
) -> NetworkInstance:
    """Random problem instance with bounded rate spread, no geometry behind it.

    Pico ABS rates dominate non-ABS rates by construction; a fraction of
    pico links has a zero non-ABS rate (fully ABS-dependent UEs).  With
    ``full_interference`` every pico is interfered by every macro, which
    keeps the cell graph connected.
    """
    rng = np.random.default_rng(seed)
    interferers = []
    for p in range(n_picos):
        if full_interference or n_macros == 1:
            interferers.append(frozenset(range(n_macros)))
        else:
            size = int(rng.integers(1, n_macros + 1))
            interferers.append(
                frozenset(rng.choice(n_macros, size=size, replace=False).tolist())
            )
    ues = []
    for u in range(n_ues):
        macro = int(rng.integers(0, n_macros))
        rate_mac = float(rng.uniform(rate_lo, rate_hi * 0.6))
        rsrp_mac = float(rng.uniform(-100.0, -70.0))
        pico = None
        rate_abs = rate_nab = 0.0
        rsrp_pic = None
        if n_picos and rng.uniform() < pico_prob:
            pico = int(rng.integers(0, n_picos))
            rate_abs = float(rng.uniform(max(rate_lo, rate_mac), rate_hi))
            if rng.uniform() < zero_nonabs_prob:
                rate_nab = 0.0
            else:
                rate_nab = float(rng.uniform(rate_lo, rate_abs))
            rsrp_pic = float(rsrp_mac + rng.uniform(-DEFAULT_MAX_BIAS_DB, 5.0))
        ues.append(
            UeRecord(
                id=u,
                weight=1.0,
                best_macro=CellId.macro(macro),
                best_pico=None if pico is None else CellId.pico(pico),
                rate_macro=rate_mac,
                rate_pico_abs=rate_abs,
                rate_pico_nonabs=rate_nab,
                rsrp_macro=rsrp_mac,
                rsrp_pico=rsrp_pic,
            )
        )
    return NetworkInstance(
        macros=tuple(CellId.macro(i) for i in range(n_macros)),
        picos=tuple(CellId.pico(i) for i in range(n_picos)),
        interferers=tuple(interferers),
        ues=tuple(ues),
        n_sf=n_sf,
    )
