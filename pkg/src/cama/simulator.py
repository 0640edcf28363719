"""Cycle-accurate functional execution of a placement (CAMA-E and CAMA-T)."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .fabric import TileMode, rcb_row_weight
from .mapper import Placement
from .nfa import HomogeneousNfa, ReportRecord, StartKind, SymbolRangeError, interpret

INPUT_BUFFER = 128
OUTPUT_BUFFER = 64


class DivergenceError(AssertionError):
    pass


class TraceMismatchError(ValueError):
    pass


@dataclass
class ActivityTrace:
    version: str
    n_symbols: int
    enabled: np.ndarray    # [cycle, tile, sub-array]
    matches: np.ndarray    # [cycle, tile]
    rows: np.ndarray       # [cycle, tile, local switch]
    sends: np.ndarray      # [cycle, tile]
    encoder: np.ndarray    # [cycle]
    reports: np.ndarray    # [cycle]
    tile_modes: list[TileMode]
    tile_arrays: list[int]
    placement_digest: str = ""

    @property
    def cycles(self) -> int:
        return int(self.encoder.shape[0])

    @property
    def accessed(self) -> np.ndarray:
        return self.rows > 0

    def array_accesses(self) -> np.ndarray:
        """[cycle, array]: 1 when any tile of the array drives a send port."""
        n_arrays = max(self.tile_arrays) + 1 if self.tile_arrays else 0
        out = np.zeros((self.cycles, n_arrays), dtype=np.int32)
        for t, a in enumerate(self.tile_arrays):
            out[:, a] |= (self.sends[:, t] > 0).astype(np.int32)
        return out

    # -- CSV round trip ------------------------------------------------------
    FIELDS = ("cycle", "tile", "enabled0", "enabled1", "matches", "rows0", "rows1",
              "accessed0", "accessed1", "global_sends", "encoder", "reports")

    def to_csv(self) -> str:
        buf = io.StringIO()
        meta = {
            "version": self.version,
            "n_symbols": self.n_symbols,
            "cycles": self.cycles,
            "tile_modes": [m.value for m in self.tile_modes],
            "tile_arrays": self.tile_arrays,
            "placement_digest": self.placement_digest,
        }
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.FIELDS)
        acc = self.accessed
        for c in range(self.cycles):
            for t in range(len(self.tile_modes)):
                w.writerow([
                    c, t, self.enabled[c, t, 0], self.enabled[c, t, 1], self.matches[c, t],
                    self.rows[c, t, 0], self.rows[c, t, 1], int(acc[c, t, 0]), int(acc[c, t, 1]),
                    self.sends[c, t], self.encoder[c], self.reports[c],
                ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ActivityTrace":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise TraceMismatchError("trace is missing its metadata line")
        meta = json.loads(lines[0][2:])
        T = len(meta["tile_modes"])
        C = meta["cycles"]
        enabled = np.zeros((C, T, 2), dtype=np.int32)
        matches = np.zeros((C, T), dtype=np.int32)
        rows = np.zeros((C, T, 2), dtype=np.int32)
        sends = np.zeros((C, T), dtype=np.int32)
        encoder = np.zeros(C, dtype=np.int32)
        reports = np.zeros(C, dtype=np.int32)
        for r in csv.DictReader(lines[1:]):
            c, t = int(r["cycle"]), int(r["tile"])
            enabled[c, t] = (int(r["enabled0"]), int(r["enabled1"]))
            matches[c, t] = int(r["matches"])
            rows[c, t] = (int(r["rows0"]), int(r["rows1"]))
            sends[c, t] = int(r["global_sends"])
            encoder[c] = int(r["encoder"])
            reports[c] = int(r["reports"])
        return cls(meta["version"], meta["n_symbols"], enabled, matches, rows, sends, encoder,
                   reports, [TileMode(m) for m in meta["tile_modes"]], meta["tile_arrays"],
                   meta["placement_digest"])


@dataclass
class MachineState:
    cycle: int = 0
    input_occupancy: int = 0
    output_occupancy: int = 0
    input_interrupts: int = 0
    output_interrupts: int = 0
    max_input_occupancy: int = 0
    max_output_occupancy: int = 0


@dataclass
class SimResult:
    reports: list[ReportRecord]
    trace: ActivityTrace
    machine: MachineState = field(default_factory=MachineState)


# ---------------------------------------------------------------------------
# Placement flattening
# ---------------------------------------------------------------------------

_ROW_WEIGHT = None


def _rcb_weights(cfg) -> list[int]:
    global _ROW_WEIGHT
    if _ROW_WEIGHT is None or len(_ROW_WEIGHT) != cfg.cam_cols:
        _ROW_WEIGHT = [rcb_row_weight(i, cfg) for i in range(cfg.cam_cols)]
    return _ROW_WEIGHT


def build_tables(placement: Placement) -> dict:
    """Flatten a placement into the arrays the cycle kernel consumes.

    Routes come from the programmed local and global crosspoints, not from
    the source NFA, so a mis-programmed switch shows up as a divergence.
    """
    cfg = placement.cfg
    S = placement.num_states
    T = len(placement.tiles)
    stride = 512
    weights = _rcb_weights(cfg)
    col_code = np.zeros(max(1, T * stride), dtype=np.uint32)
    for t, tile in enumerate(placement.tiles):
        for c, col in tile.columns.items():
            col_code[t * stride + c] = int(col.code, 2)
    st_ptr = np.zeros(S + 1, dtype=np.int32)
    st_cols: list[int] = []
    st_tile = np.zeros(S, dtype=np.int32)
    st_unit = np.zeros(S, dtype=np.int32)
    en_w = np.zeros((S, 2), dtype=np.int32)
    row_w = np.zeros(S, dtype=np.int32)
    send = np.zeros(S, dtype=np.uint8)
    placed_en = np.zeros((T, 2), dtype=np.int32)
    for s, site in enumerate(placement.sites):
        tile = placement.tiles[site.tile]
        st_tile[s] = site.tile
        st_cols.extend(site.tile * stride + c for c in site.columns)
        st_ptr[s + 1] = len(st_cols)
        n = len(site.columns)
        first = site.columns[0]
        if tile.mode is TileMode.RCB16:
            sub = first // 256
            en_w[s, sub] = n
            st_unit[s] = sub
            row_w[s] = sum(weights[c % 256] for c in site.columns)
        else:
            en_w[s, 0] = n
            if tile.mode is TileMode.MODE32:
                en_w[s, 1] = n
            st_unit[s] = first // 128
            row_w[s] = cfg.wl_segments * n
        placed_en[site.tile] += en_w[s]
        glob = placement.globals[tile.array]
        if s in glob.send[tile.slot]:
            send[s] = 1

    succ: dict[int, set[int]] = {}
    for a, b in placement.realized_edges():
        succ.setdefault(a, set()).add(b)
    succ_ptr = np.zeros(S + 1, dtype=np.int32)
    succ_idx: list[int] = []
    for s in range(S):
        succ_idx.extend(sorted(succ.get(s, ())))
        succ_ptr[s + 1] = len(succ_idx)

    enc = np.array([int(c, 2) for c in placement.codebook.codes], dtype=np.uint32)
    return {
        "enc": enc,
        "col_code": col_code,
        "st_ptr": st_ptr,
        "st_cols": np.asarray(st_cols, dtype=np.int32),
        "invert": np.asarray(placement.invert, dtype=np.uint8),
        "report": np.asarray(placement.reporting, dtype=np.uint8),
        "start_data": np.asarray([k is StartKind.START_OF_DATA for k in placement.starts], dtype=np.uint8),
        "start_all": np.asarray([k is StartKind.ALL_INPUT for k in placement.starts], dtype=np.uint8),
        "succ_ptr": succ_ptr,
        "succ_idx": np.asarray(succ_idx, dtype=np.int32),
        "st_tile": st_tile,
        "en_w": en_w,
        "st_unit": st_unit,
        "row_w": row_w,
        "send": send,
        "placed_en": placed_en,
        "n_tiles": T,
    }


# ---------------------------------------------------------------------------
# Buffers
# ---------------------------------------------------------------------------

def model_buffers(n_symbols: int, reports_per_cycle: Sequence[int], cycles: int) -> MachineState:
    """Input refills when empty; output drains when full and once at the end."""
    m = MachineState(cycle=cycles)
    remaining = n_symbols
    for c in range(cycles):
        if c < n_symbols:
            if m.input_occupancy == 0:
                m.input_interrupts += 1
                m.input_occupancy = min(INPUT_BUFFER, remaining)
                remaining -= m.input_occupancy
                m.max_input_occupancy = max(m.max_input_occupancy, m.input_occupancy)
            m.input_occupancy -= 1
        for _ in range(int(reports_per_cycle[c])):
            m.output_occupancy += 1
            m.max_output_occupancy = max(m.max_output_occupancy, m.output_occupancy)
            if m.output_occupancy == OUTPUT_BUFFER:
                m.output_interrupts += 1
                m.output_occupancy = 0
    if m.output_occupancy:
        m.output_interrupts += 1
        m.output_occupancy = 0
    return m


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

def _as_symbols(placement: Placement, data) -> np.ndarray:
    arr = np.frombuffer(bytes(data), dtype=np.uint8).astype(np.int64) if isinstance(
        data, (bytes, bytearray)) else np.asarray(list(data), dtype=np.int64)
    if arr.size:
        bad = np.flatnonzero((arr < 0) | (arr >= placement.alphabet_size))
        if bad.size:
            i = int(bad[0])
            raise SymbolRangeError(f"symbol {int(arr[i])} at offset {i} outside alphabet")
    return arr


def _run(placement: Placement, data, version: str, backend: str | None,
         tables: dict | None) -> SimResult:
    symbols = _as_symbols(placement, data)
    tables = tables if tables is not None else build_tables(placement)
    pipelined = version == "t"
    rc, rs, en, match, rows, sends, rep = kernels.run_cycles(tables, symbols, pipelined, backend)
    n = len(symbols)
    cycles = en.shape[0]
    encoder = np.zeros(cycles, dtype=np.int32)
    encoder[:n] = 1
    partition = [site.partition for site in placement.sites]
    reports = [
        ReportRecord(int(c), int(s), partition[int(s)], int(symbols[int(c)]))
        for c, s in zip(rc, rs)
    ]
    trace = ActivityTrace(
        version=version,
        n_symbols=n,
        enabled=en, matches=match, rows=rows, sends=sends, encoder=encoder, reports=rep,
        tile_modes=[t.mode for t in placement.tiles],
        tile_arrays=[t.array for t in placement.tiles],
        placement_digest=placement.digest(),
    )
    return SimResult(reports, trace, model_buffers(n, rep, cycles))


def run_e(placement: Placement, data, backend: str | None = None, tables: dict | None = None) -> SimResult:
    """Non-pipelined: only enabled columns are precharged and matched."""
    return _run(placement, data, "e", backend, tables)


def run_t(placement: Placement, data, backend: str | None = None, tables: dict | None = None) -> SimResult:
    """Two-stage pipeline: every placed column matched in stage 1, gated by enable in stage 2."""
    return _run(placement, data, "t", backend, tables)


def simulate(placement: Placement, data, version: str = "e", backend: str | None = None) -> SimResult:
    if version not in ("e", "t"):
        raise ValueError(f"unknown version {version!r}; expected 'e' or 't'")
    return _run(placement, data, version, backend, None)


# ---------------------------------------------------------------------------
# Oracle comparison and summaries
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    ok: bool
    detail: str = ""
    first: tuple | None = None


def _key(r: ReportRecord) -> tuple[int, int, int]:
    return (r.cycle, r.state_id, r.input_symbol)


def compare_reports(expected: Sequence[ReportRecord], got: Sequence[ReportRecord],
                    label: str = "simulator") -> Verdict:
    a, b = Counter(map(_key, expected)), Counter(map(_key, got))
    if a == b:
        return Verdict(True)
    diff = sorted((a - b).keys() | (b - a).keys())
    c, s, sym = diff[0]
    kind = "missing from" if a[(c, s, sym)] > b[(c, s, sym)] else "extra in"
    detail = (f"first divergence at cycle {c}: report of state {s} on symbol {sym} is {kind} {label} "
              f"({len(diff)} differing records; oracle {sum(a.values())}, {label} {sum(b.values())})")
    return Verdict(False, detail, (c, s, sym))


def run_oracle_compare(nfa: HomogeneousNfa, placement: Placement, data,
                       versions: Sequence[str] = ("e", "t"), backend: str | None = None) -> Verdict:
    expected = interpret(nfa, data)
    tables = build_tables(placement)
    for v in versions:
        got = _run(placement, data, v, backend, tables).reports
        verdict = compare_reports(expected, got, f"CAMA-{v.upper()}")
        if not verdict.ok:
            return verdict
    return Verdict(True)


def trace_summary(trace: ActivityTrace) -> dict:
    C = trace.cycles
    totals = {
        "cycles": C,
        "symbols": trace.n_symbols,
        "enabled_entries": int(trace.enabled.sum()),
        "matches": int(trace.matches.sum()),
        "active_rows": int(trace.rows.sum()),
        "local_accesses": int(trace.accessed.sum()),
        "global_sends": int(trace.sends.sum()),
        "global_accesses": int(trace.array_accesses().sum()),
        "encoder_accesses": int(trace.encoder.sum()),
        "reports": int(trace.reports.sum()),
    }
    per_cycle = {f"{k}_per_cycle": (v / C if C else 0.0) for k, v in totals.items()
                 if k not in ("cycles", "symbols")}
    return {**totals, **per_cycle}
