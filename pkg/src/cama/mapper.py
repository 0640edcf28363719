"""Greedy placement of connected components onto tiles, arrays and banks."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

from .encoder import Codebook, CompiledNfa, Scheme
from .fabric import (
    DEFAULT_FABRIC,
    Column,
    FabricConfig,
    GlobalProgram,
    InfeasibleTransitionError,
    PortOverflowError,
    SwitchMode,
    Tile,
    TileMode,
    dump_switch_rle,
    parse_switch_rle,
    program_global,
    program_switch,
    rcb_supports,
)
from .nfa import StartKind, bfs_order, connected_components


class MappingError(ValueError):
    pass


class CapacityError(MappingError):
    pass


class PortBudgetError(MappingError):
    pass


@dataclass(frozen=True)
class StateSite:
    tile: int
    columns: tuple[int, ...]
    partition: int


@dataclass
class MappingStats:
    rcb_tiles: int = 0
    fcb_tiles: int = 0
    mode32_tiles: int = 0
    global_switches: int = 0
    arrays: int = 0
    columns: int = 0

    def to_dict(self) -> dict:
        return {
            "rcb_tiles": self.rcb_tiles,
            "fcb_tiles": self.fcb_tiles,
            "mode32_tiles": self.mode32_tiles,
            "global_switches": self.global_switches,
            "arrays": self.arrays,
            "columns": self.columns,
        }


@dataclass
class Placement:
    alphabet_size: int
    codebook: Codebook
    starts: list[StartKind]
    reporting: list[bool]
    invert: list[bool]
    sites: list[StateSite]
    tiles: list[Tile]
    globals: list[GlobalProgram]
    stats: MappingStats
    cfg: FabricConfig = DEFAULT_FABRIC
    manifest: dict = field(default_factory=dict)

    @property
    def num_states(self) -> int:
        return len(self.sites)

    @property
    def num_arrays(self) -> int:
        return len(self.globals)

    def state_at(self, tile: int, col: int) -> int:
        return self.tiles[tile].columns[col].state

    def realized_edges(self) -> set[tuple[int, int]]:
        """Pull every local and global crosspoint back to an NFA state pair."""
        edges = set()
        for tile in self.tiles:
            # RCB tiles hold one program per sub-array in sub-array coordinates
            for k, prog in enumerate(tile.programs):
                base = k * prog.size if tile.mode is TileMode.RCB16 else 0
                for i, j in prog.pairs:
                    edges.add((tile.columns[base + i].state, tile.columns[base + j].state))
        for prog in self.globals:
            p = prog.ports
            for s, r in prog.pairs:
                edges.add((prog.send[s // p][s % p], prog.recv[r // p][r % p]))
        return edges

    def report_masks(self) -> list[frozenset[int]]:
        return [t.report_mask for t in self.tiles]

    # -- serialization ---------------------------------------------------
    def to_dict(self, include_manifest: bool = True) -> dict:
        doc = {
            "alphabet": self.alphabet_size,
            "codebook": self.codebook.to_dict(),
            "states": [
                {
                    "id": s,
                    "start": self.starts[s].value,
                    "report": self.reporting[s],
                    "invert": self.invert[s],
                    "partition": site.partition,
                    "tile": site.tile,
                    "columns": list(site.columns),
                }
                for s, site in enumerate(self.sites)
            ],
            "tiles": [
                {
                    "array": t.array,
                    "bank": t.array // self.cfg.arrays_per_bank,
                    "slot": t.slot,
                    "mode": t.mode.value,
                    "columns": [[c, col.state, col.code] for c, col in sorted(t.columns.items())],
                    "programs": [dump_switch_rle(p) for p in t.programs],
                    "report_mask": sorted(t.report_mask),
                }
                for t in self.tiles
            ],
            "arrays": [
                {
                    "send": [list(x) for x in g.send],
                    "recv": [list(x) for x in g.recv],
                    "pairs": sorted([list(p) for p in g.pairs]),
                }
                for g in self.globals
            ],
            "stats": self.stats.to_dict(),
        }
        if include_manifest and self.manifest:
            doc["manifest"] = self.manifest
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def digest(self) -> str:
        """Content hash of the placement itself (manifest excluded)."""
        body = json.dumps(self.to_dict(include_manifest=False), sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()

    @classmethod
    def from_dict(cls, doc: dict) -> "Placement":
        codebook = Codebook.from_dict(doc["codebook"])
        states = doc["states"]
        tiles = []
        for t in doc["tiles"]:
            mode = TileMode(t["mode"])
            tiles.append(Tile(
                array=t["array"],
                slot=t["slot"],
                mode=mode,
                columns={c: Column(s, code, states[s]["invert"]) for c, s, code in t["columns"]},
                programs=[parse_switch_rle(p) for p in t["programs"]],
                report_mask=frozenset(t["report_mask"]),
            ))
        globals_ = [
            GlobalProgram(
                tuple(tuple(x) for x in g["send"]),
                tuple(tuple(x) for x in g["recv"]),
                frozenset(tuple(p) for p in g["pairs"]),
            )
            for g in doc["arrays"]
        ]
        return cls(
            alphabet_size=doc["alphabet"],
            codebook=codebook,
            starts=[StartKind(s["start"]) for s in states],
            reporting=[bool(s["report"]) for s in states],
            invert=[bool(s["invert"]) for s in states],
            sites=[StateSite(s["tile"], tuple(s["columns"]), s["partition"]) for s in states],
            tiles=tiles,
            globals=globals_,
            stats=MappingStats(**doc["stats"]),
            manifest=doc.get("manifest", {}),
        )

    @classmethod
    def loads(cls, text: str) -> "Placement":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Column layout and feasibility
# ---------------------------------------------------------------------------

def layout_columns(order: Sequence[int], widths: Sequence[int], unit: int,
                   offset: int = 0) -> dict[int, tuple[int, int]]:
    """Assign each state a contiguous replica run; runs never straddle a unit boundary.

    Returns state -> (first column, width), counting columns from the start of
    the first unit.  ``offset`` is the fill level of that first unit.
    """
    pos: dict[int, tuple[int, int]] = {}
    cur = offset
    for s in order:
        w = widths[s]
        if w > unit:
            raise CapacityError(f"state {s} needs {w} replica columns, more than a {unit}-column unit")
        if cur // unit != (cur + w - 1) // unit:
            cur = (cur // unit + 1) * unit
        pos[s] = (cur, w)
        cur += w
    return pos


def _replica_pairs(pos: dict[int, tuple[int, int]], src: int, dst: int):
    a, wa = pos[src]
    b, wb = pos[dst]
    for i in range(a, a + wa):
        for j in range(b, b + wb):
            yield i, j


def check_rcb_feasible(cc, ordering: Sequence[int], widths: Sequence[int] | None = None,
                       offset: int = 0, cfg: FabricConfig = DEFAULT_FABRIC
                       ) -> tuple[bool, list[tuple[int, int]]]:
    """Band check for every edge whose endpoints land in the same 256-column slice.

    Edges between slices are carried by the global switch and are not local
    band constraints.  Returns the feasibility flag and the offending edges.
    """
    widths = widths if widths is not None else [1] * len(cc)
    pos = layout_columns(ordering, widths, cfg.cam_cols, offset)
    bad = []
    for src, dst in cc.edge_list():
        for i, j in _replica_pairs(pos, src, dst):
            if i // cfg.cam_cols != j // cfg.cam_cols:
                continue
            if not rcb_supports(i % cfg.cam_cols, j % cfg.cam_cols, cfg):
                bad.append((src, dst))
                break
    return not bad, bad


def choose_app_mode(scheme: Scheme, ccs: Sequence, widths: Sequence[Sequence[int]],
                    cfg: FabricConfig = DEFAULT_FABRIC) -> list[TileMode]:
    if scheme.code_length > 16:
        return [TileMode.MODE32] * len(ccs)
    modes = []
    for cc, w in zip(ccs, widths):
        ok, _ = check_rcb_feasible(cc, bfs_order(cc), w, 0, cfg)
        modes.append(TileMode.RCB16 if ok else TileMode.FCB16)
    return modes


# ---------------------------------------------------------------------------
# Greedy placement
# ---------------------------------------------------------------------------

@dataclass
class _TileDraft:
    array: int
    slot: int
    mode: TileMode
    fill: list[int]
    columns: dict[int, Column] = field(default_factory=dict)
    local: list[set[tuple[int, int]]] = field(default_factory=list)


def place(compiled: CompiledNfa, cfg: FabricConfig = DEFAULT_FABRIC,
          force_mode: TileMode | str | None = None) -> Placement:
    """Pack CCs largest-first; single-unit CCs go first-fit, larger ones take fresh tiles."""
    nfa = compiled.nfa
    if force_mode is not None:
        force_mode = TileMode(force_mode)
        if force_mode is not TileMode.MODE32 and compiled.codebook.code_length > 16:
            raise MappingError(f"{compiled.codebook.code_length}-bit codes need the 32-bit tile mode")
    comps = connected_components(nfa)
    widths_global = [len(e) for e in compiled.entries]
    local_widths = [[widths_global[o] for o in c.origin] for c in comps]
    if force_mode is None:
        modes = choose_app_mode(compiled.codebook.scheme, [c.nfa for c in comps], local_widths, cfg)
    else:
        modes = [force_mode] * len(comps)
    order = sorted(range(len(comps)), key=lambda k: (-sum(local_widths[k]), k))

    drafts: list[_TileDraft] = []
    sites: list[StateSite | None] = [None] * len(nfa)
    cross: dict[int, list[tuple[int, int, int, int]]] = {}
    per_array = cfg.tiles_per_array

    def new_tile(mode: TileMode, array: int) -> _TileDraft:
        slot = sum(1 for d in drafts if d.array == array)
        d = _TileDraft(array, slot, mode, [0, 0], local=[set(), set()])
        drafts.append(d)
        return d

    for partition, k in enumerate(order):
        comp = comps[k]
        cc = comp.nfa
        mode = modes[k]
        unit = mode.unit_capacity
        w = local_widths[k]
        bfs = bfs_order(cc)
        need = layout_columns(bfs, w, unit)
        span = max(c + n for c, n in need.values())
        units = -(-span // unit)
        if units > 2 * per_array:
            raise CapacityError(
                f"component of {len(cc)} states ({span} columns) exceeds one array of {per_array} tiles"
            )

        target: tuple[_TileDraft, int] | None = None
        if units == 1:
            for d in drafts:
                if d.mode is not mode:
                    continue
                for u in range(2):
                    fill = d.fill[u]
                    try:
                        pos = layout_columns(bfs, w, unit, fill)
                    except CapacityError:
                        continue
                    if max(c + n for c, n in pos.values()) > unit:
                        continue
                    if mode is TileMode.RCB16 and not check_rcb_feasible(cc, bfs, w, fill, cfg)[0]:
                        continue
                    target = (d, u)
                    break
                if target:
                    break
        if target is not None:
            tiles_for_cc = [target[0]]
            first_unit = target[1]
            offset = target[0].fill[first_unit]
        else:
            n_tiles = -(-units // 2)
            last_array = drafts[-1].array if drafts else 0
            used = sum(1 for d in drafts if d.array == last_array)
            array = last_array if used + n_tiles <= per_array else last_array + 1
            tiles_for_cc = [new_tile(mode, array) for _ in range(n_tiles)]
            first_unit, offset = 0, 0

        pos = layout_columns(bfs, w, unit, offset)
        loc: dict[int, tuple[_TileDraft, int, int]] = {}  # local state -> (tile, unit, col-in-tile)
        for s, (c, n) in pos.items():
            u_abs = first_unit + c // unit
            d = tiles_for_cc[u_abs // 2]
            u = u_abs % 2
            col = u * unit + c % unit
            loc[s] = (d, u, col)
            for r in range(n):
                gid = comp.origin[s]
                d.columns[col + r] = Column(gid, compiled.entries[gid][r].code, compiled.entries[gid][r].invert)
            d.fill[u] = max(d.fill[u], col % unit + n)
            sites[comp.origin[s]] = StateSite(drafts.index(d), tuple(range(col, col + n)), partition)

        for src, dst in cc.edge_list():
            ds, us, cs = loc[src]
            dd, ud, cd = loc[dst]
            if ds is dd and us == ud:
                base = us * unit
                for i in range(pos[src][1]):
                    for j in range(pos[dst][1]):
                        ds.local[us].add((cs + i - base, cd + j - base))
            else:
                cross.setdefault(ds.array, []).append(
                    (ds.slot, comp.origin[src], dd.slot, comp.origin[dst])
                )

    tiles = []
    for d in drafts:
        try:
            if d.mode is TileMode.RCB16:
                programs = [program_switch(d.local[u], SwitchMode.RCB, cfg) for u in range(2)]
            else:
                pairs = {(i + u * 128, j + u * 128) for u in range(2) for i, j in d.local[u]}
                programs = [program_switch(pairs, SwitchMode.FCB, cfg)]
        except InfeasibleTransitionError as exc:
            raise MappingError(str(exc)) from exc
        mask = frozenset(
            sites[s].columns[0] for s in {c.state for c in d.columns.values()} if nfa.states[s].reporting
        )
        tiles.append(Tile(d.array, d.slot, d.mode, dict(sorted(d.columns.items())), programs, mask))

    n_arrays = (max(d.array for d in drafts) + 1) if drafts else 0
    globals_ = []
    for a in range(n_arrays):
        n_slots = sum(1 for d in drafts if d.array == a)
        try:
            globals_.append(program_global(cross.get(a, []), n_slots, cfg))
        except PortOverflowError as exc:
            raise PortBudgetError(f"array {a}: {exc}") from exc

    stats = MappingStats(
        rcb_tiles=sum(t.mode is TileMode.RCB16 for t in tiles),
        fcb_tiles=sum(t.mode is TileMode.FCB16 for t in tiles),
        mode32_tiles=sum(t.mode is TileMode.MODE32 for t in tiles),
        global_switches=sum(g.used for g in globals_),
        arrays=n_arrays,
        columns=sum(len(t.columns) for t in tiles),
    )
    return Placement(
        alphabet_size=nfa.alphabet_size,
        codebook=compiled.codebook,
        starts=[s.start for s in nfa.states],
        reporting=[s.reporting for s in nfa.states],
        invert=[bool(e[0].invert) for e in compiled.entries],
        sites=list(sites),
        tiles=tiles,
        globals=globals_,
        stats=stats,
        cfg=cfg,
    )


def emit_report_mask(placement: Placement) -> list[frozenset[int]]:
    return placement.report_masks()
