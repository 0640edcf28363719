"""Functional models of the CAMA hardware blocks.

Covers the 16x256 8T-CAM match arrays, the 128x128 reconfigurable reduced
crossbar (RRCB) in its band (RCB) and block-full (FCB) configurations, the
256x256 global switch and the tile with its three operating modes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .encoder import CamEntry


class InfeasibleTransitionError(ValueError):
    def __init__(self, pair: tuple[int, int], reason: str):
        super().__init__(f"transition {pair[0]}->{pair[1]} {reason}")
        self.pair = pair


class PortOverflowError(ValueError):
    pass


@dataclass(frozen=True)
class FabricConfig:
    cam_rows: int = 16
    cam_cols: int = 256
    rrcb_dim: int = 128
    k_dia: int = 43
    wl_segments: int = 3
    bl_segments: int = 2
    tiles_per_array: int = 8
    arrays_per_bank: int = 16
    global_dim: int = 256
    global_ports_in: int = 16
    global_ports_out: int = 16

    @property
    def source_slots(self) -> int:
        return self.wl_segments * self.rrcb_dim

    @property
    def dest_slots(self) -> int:
        return self.bl_segments * self.rrcb_dim

    @property
    def window_size(self) -> int:
        return self.rrcb_dim // self.bl_segments

    @property
    def groups(self) -> int:
        return -(-self.cam_cols // self.k_dia)

    def window(self, group: int) -> range:
        """Source slots wired to destination group ``group`` through the fixed replica map."""
        lead = self.window_size - self.k_dia
        lo = max(0, self.k_dia * group - lead)
        hi = min(self.cam_cols, self.k_dia * group + self.k_dia)
        return range(lo, hi)


DEFAULT_FABRIC = FabricConfig()


class TileMode(str, enum.Enum):
    RCB16 = "rcb16"
    FCB16 = "fcb16"
    MODE32 = "mode32"

    @property
    def unit_capacity(self) -> int:
        """Columns per local-switch unit: a whole sub-array in RCB, a 128 block otherwise."""
        return 256 if self is TileMode.RCB16 else 128

    @property
    def capacity(self) -> int:
        return 2 * self.unit_capacity

    @property
    def powered_subarrays(self) -> int:
        return 1 if self is TileMode.FCB16 else 2

    @property
    def code_bits(self) -> int:
        return 32 if self is TileMode.MODE32 else 16


class SwitchMode(str, enum.Enum):
    RCB = "rcb"
    FCB = "fcb"


# ---------------------------------------------------------------------------
# State matching
# ---------------------------------------------------------------------------

def cam_match(entry: CamEntry | str, input_code: str) -> bool:
    """Subset rule: every 1-bit of the stored entry must be 1 in the input."""
    code = entry.code if isinstance(entry, CamEntry) else entry
    if len(code) != len(input_code):
        raise ValueError(f"width mismatch: entry {len(code)} bits, input {len(input_code)} bits")
    e = int(code, 2)
    return e & int(input_code, 2) == e


# ---------------------------------------------------------------------------
# Local switch
# ---------------------------------------------------------------------------

def rcb_supports(i: int, j: int, cfg: FabricConfig = DEFAULT_FABRIC) -> bool:
    if not (0 <= i < cfg.cam_cols and 0 <= j < cfg.cam_cols):
        return False
    return i in cfg.window(j // cfg.k_dia)


def rcb_support_matrix(cfg: FabricConfig = DEFAULT_FABRIC) -> np.ndarray:
    m = np.zeros((cfg.cam_cols, cfg.cam_cols), dtype=bool)
    for g in range(cfg.groups):
        w = cfg.window(g)
        m[w.start:w.stop, g * cfg.k_dia:min(cfg.cam_cols, (g + 1) * cfg.k_dia)] = True
    return m


def rcb_row_weight(i: int, cfg: FabricConfig = DEFAULT_FABRIC) -> int:
    """How many word-line segments source ``i`` drives in RCB mode (its replica count)."""
    return sum(1 for g in range(cfg.groups) if i in cfg.window(g))


@dataclass(frozen=True)
class SwitchProgram:
    mode: SwitchMode
    pairs: frozenset[tuple[int, int]]
    size: int = 256

    def bits(self) -> np.ndarray:
        m = np.zeros((self.size, self.size), dtype=bool)
        if self.pairs:
            rows, cols = zip(*self.pairs)
            m[list(rows), list(cols)] = True
        return m


def program_switch(transitions: Iterable[tuple[int, int]], mode: SwitchMode | str,
                   cfg: FabricConfig = DEFAULT_FABRIC) -> SwitchProgram:
    mode = SwitchMode(mode)
    pairs = frozenset((int(i), int(j)) for i, j in transitions)
    block = cfg.rrcb_dim
    for i, j in sorted(pairs):
        if not (0 <= i < cfg.cam_cols and 0 <= j < cfg.cam_cols):
            raise InfeasibleTransitionError((i, j), "is outside the 256-state switch")
        if mode is SwitchMode.RCB and not rcb_supports(i, j, cfg):
            raise InfeasibleTransitionError((i, j), "lies outside the RCB band")
        if mode is SwitchMode.FCB and i // block != j // block:
            raise InfeasibleTransitionError((i, j), "crosses the FCB block boundary")
    return SwitchProgram(mode, pairs, cfg.cam_cols)


def route_local(program: SwitchProgram, active_sources: Sequence[bool] | np.ndarray) -> np.ndarray:
    """dest[j] = OR_i active[i] AND bits[i][j]."""
    active = np.asarray(active_sources, dtype=bool)
    dest = np.zeros(program.size, dtype=bool)
    for i, j in program.pairs:
        if active[i]:
            dest[j] = True
    return dest


def dump_switch_rle(program: SwitchProgram) -> str:
    """Row-wise run-length text: ``<row>: <start>+<len> ...``, one line per non-empty row."""
    rows: dict[int, list[int]] = {}
    for i, j in program.pairs:
        rows.setdefault(i, []).append(j)
    lines = [f"{program.mode.value} {program.size}"]
    for i in sorted(rows):
        runs: list[list[int]] = []
        for j in sorted(rows[i]):
            if runs and runs[-1][0] + runs[-1][1] == j:
                runs[-1][1] += 1
            else:
                runs.append([j, 1])
        lines.append(f"{i}: " + " ".join(f"{s}+{n}" for s, n in runs))
    return "\n".join(lines)


def parse_switch_rle(text: str) -> SwitchProgram:
    head, *body = text.strip().splitlines()
    mode, size = head.split()
    pairs = set()
    for line in body:
        row, runs = line.split(":")
        for run in runs.split():
            start, n = run.split("+")
            pairs.update((int(row), int(start) + k) for k in range(int(n)))
    return SwitchProgram(SwitchMode(mode), frozenset(pairs), int(size))


# ---------------------------------------------------------------------------
# Global switch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlobalProgram:
    """Port assignment and crosspoints of one array's 256x256 global switch.

    ``send[t]`` lists the states of tile slot ``t`` that own send ports (port
    index = list position); ``recv[t]`` likewise for receive ports.  Slot
    numbering is ``tile_slot * ports + port`` on both sides.
    """

    send: tuple[tuple[int, ...], ...]
    recv: tuple[tuple[int, ...], ...]
    pairs: frozenset[tuple[int, int]]
    ports: int = 16

    def send_slot(self, tile: int, state: int) -> int:
        return tile * self.ports + self.send[tile].index(state)

    def recv_slot(self, tile: int, state: int) -> int:
        return tile * self.ports + self.recv[tile].index(state)

    @property
    def used(self) -> bool:
        return bool(self.pairs)


def program_global(cross_edges: Iterable[tuple[int, int, int, int]], tiles: int,
                   cfg: FabricConfig = DEFAULT_FABRIC) -> GlobalProgram:
    """Allocate ports for (src_tile, src_state, dst_tile, dst_state) edges in first-use order."""
    send: list[list[int]] = [[] for _ in range(tiles)]
    recv: list[list[int]] = [[] for _ in range(tiles)]
    for st, s, dt, d in sorted(cross_edges):
        if s not in send[st]:
            send[st].append(s)
        if d not in recv[dt]:
            recv[dt].append(d)
    for t in range(tiles):
        if len(send[t]) > cfg.global_ports_out:
            raise PortOverflowError(
                f"tile {t}: {len(send[t])} states send to the global switch (limit {cfg.global_ports_out})"
            )
        if len(recv[t]) > cfg.global_ports_in:
            raise PortOverflowError(
                f"tile {t}: {len(recv[t])} states receive from the global switch (limit {cfg.global_ports_in})"
            )
    ports = cfg.global_ports_out
    pairs = frozenset(
        (st * ports + send[st].index(s), dt * ports + recv[dt].index(d))
        for st, s, dt, d in cross_edges
    )
    return GlobalProgram(tuple(map(tuple, send)), tuple(map(tuple, recv)), pairs, ports)


def route_global(program: GlobalProgram, exported: Mapping[int, Sequence[bool]]) -> dict[int, np.ndarray]:
    """Per-tile send-port activity in, per-tile receive-port activity out."""
    ports = program.ports
    active = set()
    for tile, bits in exported.items():
        if len(bits) > ports:
            raise PortOverflowError(f"tile {tile}: {len(bits)} send signals exceed {ports} ports")
        active.update(tile * ports + p for p, b in enumerate(bits) if b)
    out = {t: np.zeros(ports, dtype=bool) for t in range(len(program.recv))}
    for s, r in program.pairs:
        if s in active:
            out[r // ports][r % ports] = True
    return out


# ---------------------------------------------------------------------------
# Tile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Column:
    state: int
    code: str
    invert: bool = False


@dataclass
class Tile:
    array: int
    slot: int
    mode: TileMode
    columns: dict[int, Column] = field(default_factory=dict)
    programs: list[SwitchProgram] = field(default_factory=list)
    report_mask: frozenset[int] = frozenset()

    def state_columns(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for c in sorted(self.columns):
            out.setdefault(self.columns[c].state, []).append(c)
        return out

    def subarray_of(self, col: int) -> int:
        return col // 256 if self.mode is TileMode.RCB16 else 0

    def unit_of(self, col: int) -> int:
        return col // self.mode.unit_capacity


def tile_match(tile: Tile, input_code: int, enable: Sequence[bool] | np.ndarray) -> dict[int, bool]:
    """Per-state match for one input word.

    A column answers only when precharged (``enable``); a state's result is
    the OR over its replica columns, XOR its invert flag, gated by its enable.
    In 32-bit mode each column is split across the two sub-arrays and both
    16-bit halves must match.
    """
    enable = np.asarray(enable, dtype=bool)
    raw: dict[int, bool] = {}
    state_enabled: dict[int, bool] = {}
    invert: dict[int, bool] = {}
    for c, col in sorted(tile.columns.items()):
        entry = int(col.code, 2)
        if tile.mode is TileMode.MODE32:
            lo_ok = (entry & 0xFFFF) & ~input_code & 0xFFFF == 0
            hi_ok = (entry >> 16) & ~(input_code >> 16) & 0xFFFF == 0
            hit = lo_ok and hi_ok
        else:
            hit = entry & ~input_code & 0xFFFF == 0
        on = bool(enable[c])
        raw[col.state] = raw.get(col.state, False) or (on and hit)
        state_enabled[col.state] = state_enabled.get(col.state, False) or on
        invert[col.state] = col.invert
    return {s: state_enabled[s] and (raw[s] != invert[s]) for s in sorted(raw)}
