"""Energy, power, area and throughput from activity traces and 28nm block models."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .fabric import TileMode
from .mapper import Placement
from .simulator import ActivityTrace, TraceMismatchError

PJ = 1e-12


@dataclass(frozen=True)
class BlockModel:
    energy_pj: float
    delay_ps: float
    area_um2: float
    leakage_ua: float


def _default_blocks() -> dict[str, BlockModel]:
    return {
        "sram6t_256x256": BlockModel(19.45, 416, 14877, 532),
        "sram6t_16x256": BlockModel(15.3, 317, 3659, 247),
        "sram8t_128x128": BlockModel(8.67, 292, 5655, 243),
        "sram8t_256x256": BlockModel(17.9, 394, 18153, 584),
        "cam8t_16x256": BlockModel(16.78, 325, 3919, 299),
    }


@dataclass
class CostParams:
    blocks: dict[str, BlockModel] = field(default_factory=_default_blocks)
    freq_e_ghz: float = 1.21
    freq_t_ghz: float = 2.14
    cam_e_min_pj: float = 2.67
    cam_e_max_pj: float = 16.78
    periphery_fraction: float = 0.8
    voltage: float = 0.9
    encoder_energy_pj: float = 2.4
    # 256x32 encoder scaled by bit count from the 6T 16x256 block
    encoder_area_um2: float = 3659 * 32 / 256
    encoder_leakage_ua: float = 247 * 32 / 256
    state_match_delay_ps: float = 325
    local_switch_delay_ps: float = 292
    global_switch_delay_ps: float = 420.1
    # annotations only: global wire delay basis and its CAMA-scaled value
    wire_delay_basis_ps: float = 99
    wire_delay_ps: float = 26.1
    frequency_margin: float = 0.9

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float | int) and not v > 0:
                raise ValueError(f"cost parameter {f.name} must be positive, got {v}")
        for name, b in self.blocks.items():
            if min(b.energy_pj, b.delay_ps, b.area_um2, b.leakage_ua) <= 0:
                raise ValueError(f"block {name} has a non-positive constant")
        if not 0 < self.periphery_fraction <= 1:
            raise ValueError("periphery_fraction must lie in (0, 1]")

    @property
    def cam(self) -> BlockModel:
        return self.blocks["cam8t_16x256"]

    @property
    def local_switch(self) -> BlockModel:
        return self.blocks["sram8t_128x128"]

    @property
    def global_switch(self) -> BlockModel:
        return self.blocks["sram8t_256x256"]

    def frequency_ghz(self, version: str) -> float:
        return {"e": self.freq_e_ghz, "t": self.freq_t_ghz}[version]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["blocks"] = {k: asdict(v) for k, v in self.blocks.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CostParams":
        d = dict(d)
        blocks = _default_blocks()
        for k, v in d.pop("blocks", {}).items():
            blocks[k] = BlockModel(**{**asdict(blocks.get(k, BlockModel(1, 1, 1, 1))), **v})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown cost parameters: {', '.join(sorted(unknown))}")
        return cls(blocks=blocks, **d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "CostParams":
        return cls.from_dict(json.loads(text))


DEFAULT_PARAMS = CostParams()


def derived_frequencies(params: CostParams = DEFAULT_PARAMS) -> dict[str, float]:
    """Max and margined frequencies (GHz) from the stage delays.

    CAMA-E serializes state matching with the global switch (the local
    switch runs in parallel with it); CAMA-T is bounded by its slowest stage.
    """
    e_max = 1e3 / (params.state_match_delay_ps + max(params.local_switch_delay_ps,
                                                      params.global_switch_delay_ps))
    t_max = 1e3 / max(params.state_match_delay_ps, params.local_switch_delay_ps,
                      params.global_switch_delay_ps)
    return {
        "e_max": e_max, "t_max": t_max,
        "e_operated": e_max * params.frequency_margin,
        "t_operated": t_max * params.frequency_margin,
    }


# ---------------------------------------------------------------------------
# Per-event energies (pJ)
# ---------------------------------------------------------------------------

def cam_energy_pj(enabled: float, version: str, params: CostParams = DEFAULT_PARAMS) -> float:
    """One powered 16x256 sub-array: linear in enabled entries for E, flat for T."""
    if version == "t":
        return params.cam_e_max_pj
    return params.cam_e_min_pj + (params.cam_e_max_pj - params.cam_e_min_pj) * enabled / 256


def local_switch_energy_pj(active_rows: float, params: CostParams = DEFAULT_PARAMS) -> float:
    p = params.periphery_fraction
    return params.local_switch.energy_pj * (p + (1 - p) * active_rows / 384)


def energy_of_cycle(trace: ActivityTrace, cycle: int, params: CostParams = DEFAULT_PARAMS
                    ) -> dict[str, float]:
    """Energy (J) of one cycle split into state matching, interconnect and encoder."""
    match = inter = 0.0
    for t, mode in enumerate(trace.tile_modes):
        en = trace.enabled[cycle, t]
        if trace.version == "e":
            if en.sum() > 0:
                for sub in range(mode.powered_subarrays):
                    match += cam_energy_pj(float(en[sub]), "e", params)
        elif trace.encoder[cycle]:
            match += mode.powered_subarrays * params.cam_e_max_pj
        for u in range(2):
            if trace.rows[cycle, t, u] > 0:
                inter += local_switch_energy_pj(float(trace.rows[cycle, t, u]), params)
    inter += float(trace.array_accesses()[cycle].sum()) * params.global_switch.energy_pj
    enc = float(trace.encoder[cycle]) * params.encoder_energy_pj
    return {"state_matching": match * PJ, "interconnect": inter * PJ, "encoder": enc * PJ}


def energy_components(trace: ActivityTrace, params: CostParams = DEFAULT_PARAMS) -> dict[str, float]:
    """Vectorized total of ``energy_of_cycle`` over the whole trace (J)."""
    C = trace.cycles
    if C == 0:
        return {"state_matching": 0.0, "interconnect": 0.0, "encoder": 0.0}
    powered = np.array([m.powered_subarrays for m in trace.tile_modes], dtype=float)
    en = trace.enabled.astype(float)
    if trace.version == "e":
        active = en.sum(axis=2) > 0
        per_sub = params.cam_e_min_pj + (params.cam_e_max_pj - params.cam_e_min_pj) * en / 256
        mask = np.zeros_like(per_sub, dtype=bool)
        mask[:, :, 0] = active
        mask[:, :, 1] = active & (powered[None, :] == 2)
        match = float((per_sub * mask).sum())
    else:
        match = float(trace.encoder.sum()) * float(powered.sum()) * params.cam_e_max_pj
    rows = trace.rows.astype(float)
    p = params.periphery_fraction
    local = np.where(rows > 0, params.local_switch.energy_pj * (p + (1 - p) * rows / 384), 0.0)
    inter = float(local.sum()) + float(trace.array_accesses().sum()) * params.global_switch.energy_pj
    enc = float(trace.encoder.sum()) * params.encoder_energy_pj
    return {"state_matching": match * PJ, "interconnect": inter * PJ, "encoder": enc * PJ}


def breakdown(trace: ActivityTrace, params: CostParams = DEFAULT_PARAMS) -> dict[str, float]:
    comp = energy_components(trace, params)
    total = sum(comp.values())
    if total == 0:
        return {k: 0.0 for k in comp}
    return {k: v / total for k, v in comp.items()}


# ---------------------------------------------------------------------------
# Placement-level figures
# ---------------------------------------------------------------------------

def tile_area_um2(params: CostParams = DEFAULT_PARAMS) -> float:
    return 2 * params.cam.area_um2 + 2 * params.local_switch.area_um2


def area_of(placement: Placement, params: CostParams = DEFAULT_PARAMS) -> float:
    """Instantiated tiles, one global switch per occupied array, one encoder."""
    arrays = len({t.array for t in placement.tiles})
    return (len(placement.tiles) * tile_area_um2(params)
            + arrays * params.global_switch.area_um2
            + params.encoder_area_um2)


def leakage_w(placement: Placement, params: CostParams = DEFAULT_PARAMS) -> float:
    arrays = len({t.array for t in placement.tiles})
    ua = (len(placement.tiles) * (2 * params.cam.leakage_ua + 2 * params.local_switch.leakage_ua)
          + arrays * params.global_switch.leakage_ua
          + params.encoder_leakage_ua)
    return ua * 1e-6 * params.voltage


def throughput_of(version: str, params: CostParams = DEFAULT_PARAMS) -> float:
    """Gbps at one 8-bit symbol per cycle."""
    return params.frequency_ghz(version) * 8


def power_of(trace: ActivityTrace, placement: Placement, params: CostParams = DEFAULT_PARAMS) -> float:
    total = sum(energy_components(trace, params).values())
    dynamic = total * params.frequency_ghz(trace.version) * 1e9 / trace.n_symbols if trace.n_symbols else 0.0
    return dynamic + leakage_w(placement, params)


@dataclass
class CostReport:
    version: str
    symbols: int
    total_energy_j: float
    energy_per_symbol_nj: float
    dynamic_power_w: float
    leakage_power_w: float
    average_power_w: float
    area_um2: float
    throughput_gbps: float
    compute_density_gbps_mm2: float
    breakdown: dict[str, float]
    components_j: dict[str, float]
    note: str = "global wire energy excluded (only its delay is modeled)"

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [
            ("version", f"CAMA-{self.version.upper()}"),
            ("symbols", f"{self.symbols}"),
            ("total energy (J)", f"{self.total_energy_j:.6e}"),
            ("energy/symbol (nJ)", f"{self.energy_per_symbol_nj:.6f}"),
            ("dynamic power (W)", f"{self.dynamic_power_w:.6e}"),
            ("leakage power (W)", f"{self.leakage_power_w:.6e}"),
            ("average power (W)", f"{self.average_power_w:.6e}"),
            ("area (um^2)", f"{self.area_um2:.3f}"),
            ("throughput (Gbps)", f"{self.throughput_gbps:.2f}"),
            ("compute density (Gbps/mm^2)", f"{self.compute_density_gbps_mm2:.3f}"),
        ] + [(f"share: {k}", f"{v:.4%}") for k, v in self.breakdown.items()]
        width = max(len(k) for k, _ in rows)
        body = "\n".join(f"{k:<{width}}  {v}" for k, v in rows)
        return f"{body}\nnote: {self.note}"


def cost_report(trace: ActivityTrace, placement: Placement,
                params: CostParams = DEFAULT_PARAMS) -> CostReport:
    if trace.placement_digest and trace.placement_digest != placement.digest():
        raise TraceMismatchError("trace was produced by a different placement (digest mismatch)")
    if len(trace.tile_modes) != len(placement.tiles):
        raise TraceMismatchError(
            f"trace covers {len(trace.tile_modes)} tiles, placement has {len(placement.tiles)}"
        )
    comp = energy_components(trace, params)
    total = sum(comp.values())
    n = trace.n_symbols
    dynamic = total * params.frequency_ghz(trace.version) * 1e9 / n if n else 0.0
    leak = leakage_w(placement, params)
    area = area_of(placement, params)
    thr = throughput_of(trace.version, params)
    return CostReport(
        version=trace.version,
        symbols=n,
        total_energy_j=total,
        energy_per_symbol_nj=total / n * 1e9 if n else 0.0,
        dynamic_power_w=dynamic,
        leakage_power_w=leak,
        average_power_w=dynamic + leak,
        area_um2=area,
        throughput_gbps=thr,
        compute_density_gbps_mm2=thr / (area * 1e-6),
        breakdown=breakdown(trace, params),
        components_j=comp,
    )
