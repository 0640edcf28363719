"""Randomized end-to-end checking: regex/NFA -> codebook -> placement -> simulation vs oracles."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field, replace

from .encoder import compile_nfa
from .fabric import GlobalProgram, SwitchProgram, TileMode
from .mapper import MappingError, Placement, place
from .nfa import (
    HomogeneousNfa,
    StartKind,
    Ste,
    SymbolClass,
    disjoint_union,
    interpret,
    load_nfa,
    nfa_to_dict,
)
from .regex import Alt, Cat, Node, Repeat, Sym, glushkov_construct, parse_regex, to_pattern
from .simulator import build_tables, compare_reports, run_e, run_t

POOL = b"abcdef"
MODES = (None, TileMode.FCB16, TileMode.MODE32)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def random_class(rng: random.Random) -> SymbolClass:
    r = rng.random()
    if r < 0.55:
        return SymbolClass.of([rng.choice(POOL)])
    if r < 0.75:
        return SymbolClass.of(rng.sample(list(POOL), rng.randint(2, 4)))
    if r < 0.85:
        return SymbolClass.of(rng.sample(list(POOL), rng.randint(1, 3)), negated=True)
    if r < 0.92:
        return SymbolClass.any()
    lo = rng.randrange(0, 250)
    return SymbolClass.of(range(lo, min(256, lo + rng.randint(1, 40))), negated=rng.random() < 0.5)


def random_tree(rng: random.Random, depth: int = 6) -> Node:
    if depth <= 1 or rng.random() < 0.3:
        return Sym(random_class(rng))
    kind = rng.random()
    if kind < 0.4:
        return Cat(tuple(random_tree(rng, depth - 1) for _ in range(rng.randint(2, 4))))
    if kind < 0.65:
        return Alt(tuple(random_tree(rng, depth - 1) for _ in range(rng.randint(2, 3))))
    return Repeat(random_tree(rng, depth - 1), rng.choice("*+?"))


def random_input(rng: random.Random, max_len: int = 64) -> bytes:
    n = rng.randint(0, max_len)
    return bytes(rng.choice(POOL) if rng.random() < 0.9 else rng.randrange(256) for _ in range(n))


def random_graph_nfa(rng: random.Random, n_states: int, alphabet: int = 256) -> HomogeneousNfa:
    """Chain backbone plus local random hops (forward up to 5, occasional back edges)."""
    states = []
    for i in range(n_states):
        start = StartKind.NONE
        if i == 0 or rng.random() < 0.02:
            start = rng.choice([StartKind.START_OF_DATA, StartKind.ALL_INPUT])
        states.append(Ste(i, random_class(rng), start, rng.random() < 0.1))
    edges: dict[int, set[int]] = {}
    for i in range(n_states - 1):
        edges.setdefault(i, set()).add(i + 1)
    for i in range(n_states):
        for _ in range(rng.randint(0, 2)):
            j = i + rng.randint(1, 5) if rng.random() < 0.85 else i - rng.randint(0, 8)
            if 0 <= j < n_states:
                edges.setdefault(i, set()).add(j)
    return HomogeneousNfa(alphabet, states, edges)


# ---------------------------------------------------------------------------
# Backtracking oracle
# ---------------------------------------------------------------------------

def match_ends(tree: Node, data: bytes, alphabet: int = 256) -> dict[int, frozenset[int]]:
    """For every start offset i, the offsets j such that tree matches data[i:j]."""
    memo: dict[tuple[int, int], frozenset[int]] = {}
    classes: dict[int, frozenset[int]] = {}

    def ends(node: Node, i: int) -> frozenset[int]:
        key = (id(node), i)
        if key in memo:
            return memo[key]
        if isinstance(node, Sym):
            cls = classes.setdefault(id(node), node.cls.effective(alphabet))
            out = frozenset([i + 1]) if i < len(data) and data[i] in cls else frozenset()
        elif isinstance(node, Alt):
            out = frozenset().union(*(ends(p, i) for p in node.parts))
        elif isinstance(node, Cat):
            cur = frozenset([i])
            for p in node.parts:
                cur = frozenset().union(*(ends(p, j) for j in cur)) if cur else cur
            out = cur
        else:
            base = ends(node.child, i) if node.op == "+" else frozenset([i]) | ends(node.child, i)
            if node.op == "?":
                out = base
            else:
                seen = set(base)
                frontier = list(base)
                while frontier:
                    j = frontier.pop()
                    for k in ends(node.child, j):
                        if k not in seen:
                            seen.add(k)
                            frontier.append(k)
                out = frozenset(seen)
        memo[key] = out
        return out

    return {i: ends(tree, i) for i in range(len(data))}


def backtrack_report_cycles(tree: Node, data: bytes, start: StartKind) -> set[int]:
    """Cycles c such that a non-empty match (anchored at 0 for start-of-data) ends at symbol c."""
    table = match_ends(tree, data)
    starts = [0] if start is StartKind.START_OF_DATA else range(len(data))
    return {j - 1 for i in starts if i in table for j in table[i] if j > i}


# ---------------------------------------------------------------------------
# Cases
# ---------------------------------------------------------------------------

@dataclass
class Case:
    index: int
    patterns: list[str] = field(default_factory=list)
    nfa_doc: dict | None = None
    start: StartKind = StartKind.START_OF_DATA
    data: bytes = b""
    mode: TileMode | None = None

    def build(self) -> tuple[HomogeneousNfa, list[Node]]:
        if self.nfa_doc is not None:
            return load_nfa(self.nfa_doc), []
        trees = [parse_regex(p) for p in self.patterns]
        return disjoint_union([glushkov_construct(t, 256, self.start) for t in trees]), trees

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "patterns": self.patterns,
            "nfa": self.nfa_doc,
            "start": self.start.value,
            "data_hex": self.data.hex(),
            "mode": self.mode.value if self.mode else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Case":
        return cls(d["index"], d["patterns"], d.get("nfa"), StartKind(d["start"]),
                   bytes.fromhex(d["data_hex"]), TileMode(d["mode"]) if d.get("mode") else None)


def make_case(seed: int, index: int, graph_every: int = 10) -> Case:
    rng = random.Random(seed * 1_000_003 + index)
    mode = MODES[index % len(MODES)]
    if graph_every and index % graph_every == graph_every - 1:
        nfa = random_graph_nfa(rng, rng.randint(2, 700))
        return Case(index, [], nfa_to_dict(nfa), StartKind.START_OF_DATA,
                    random_input(rng, 256), mode)
    patterns = []
    for _ in range(rng.randint(1, 3)):
        while True:
            tree = random_tree(rng, rng.randint(1, 6))
            try:
                glushkov_construct(tree)
            except ValueError:
                continue
            patterns.append(to_pattern(tree))
            break
    start = rng.choice([StartKind.START_OF_DATA, StartKind.ALL_INPUT])
    return Case(index, patterns, None, start, random_input(rng, 256 if rng.random() < 0.2 else 64), mode)


def drop_one_crosspoint(placement: Placement, rng: random.Random) -> bool:
    """Fault injection: remove one programmed crosspoint (local or global)."""
    sites = [("local", t, k) for t, tile in enumerate(placement.tiles)
             for k, p in enumerate(tile.programs) if p.pairs]
    sites += [("global", a, 0) for a, g in enumerate(placement.globals) if g.pairs]
    if not sites:
        return False
    kind, a, k = rng.choice(sites)
    if kind == "local":
        prog = placement.tiles[a].programs[k]
        victim = rng.choice(sorted(prog.pairs))
        placement.tiles[a].programs[k] = SwitchProgram(prog.mode, prog.pairs - {victim}, prog.size)
    else:
        g = placement.globals[a]
        victim = rng.choice(sorted(g.pairs))
        placement.globals[a] = GlobalProgram(g.send, g.recv, g.pairs - {victim}, g.ports)
    return True


@dataclass
class CaseResult:
    ok: bool
    detail: str = ""
    unmappable: bool = False
    modes: Counter = field(default_factory=Counter)


def run_case(case: Case, inject_fault: bool = False, backend: str | None = None) -> CaseResult:
    nfa, trees = case.build()
    compiled = compile_nfa(nfa)
    mode = case.mode
    if mode is not None and compiled.codebook.code_length > 16:
        mode = None  # long codes only fit the 32-bit mode, which auto selection picks
    try:
        placement = place(compiled, force_mode=mode)
    except MappingError as exc:
        return CaseResult(True, str(exc), unmappable=True)
    modes = Counter(t.mode.value for t in placement.tiles)
    if inject_fault:
        drop_one_crosspoint(placement, random.Random(case.index))
    expected = interpret(nfa, case.data)
    if trees:
        owner = []
        for k, t in enumerate(trees):
            owner += [k] * len(glushkov_construct(t, 256, case.start))
        for k, t in enumerate(trees):
            want = backtrack_report_cycles(t, case.data, case.start)
            got = {r.cycle for r in expected if owner[r.state_id] == k}
            if want != got:
                return CaseResult(False, f"interpreter disagrees with backtracking matcher on "
                                         f"pattern {case.patterns[k]!r}: {sorted(want ^ got)[:5]}", modes=modes)
    tables = build_tables(placement)
    for run, label in ((run_e, "CAMA-E"), (run_t, "CAMA-T")):
        got = run(placement, case.data, backend=backend, tables=tables).reports
        verdict = compare_reports(expected, got, label)
        if not verdict.ok:
            return CaseResult(False, verdict.detail, modes=modes)
    return CaseResult(True, modes=modes)


def shrink(case: Case, inject_fault: bool = False, budget: int = 200) -> Case:
    """Greedy input and pattern-list reduction while the case keeps failing."""

    def fails(c: Case) -> bool:
        try:
            return not run_case(c, inject_fault).ok
        except Exception:
            return False

    best = case
    steps = 0
    if len(best.patterns) > 1:
        for k in range(len(best.patterns)):
            cand = replace(best, patterns=[best.patterns[k]])
            steps += 1
            if fails(cand):
                best = cand
                break
    chunk = max(1, len(best.data) // 2)
    while chunk >= 1 and steps < budget:
        i = 0
        progressed = False
        while i < len(best.data) and steps < budget:
            cand = replace(best, data=best.data[:i] + best.data[i + chunk:])
            steps += 1
            if fails(cand):
                best = cand
                progressed = True
            else:
                i += chunk
        if not progressed:
            chunk //= 2
    return best


@dataclass
class FuzzSummary:
    seed: int
    cases: int
    passed: int = 0
    unmappable: int = 0
    failures: list[tuple[int, str]] = field(default_factory=list)
    tile_modes: Counter = field(default_factory=Counter)
    counterexample: Case | None = None

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "cases": self.cases,
            "passed": self.passed,
            "unmappable": self.unmappable,
            "divergences": len(self.failures),
            "first_failure": self.failures[0][1] if self.failures else None,
            "tile_modes": dict(sorted(self.tile_modes.items())),
            "counterexample": self.counterexample.to_dict() if self.counterexample else None,
        }


def fuzz(seed: int, n: int, inject_fault: bool = False, stop_on_failure: bool = True,
         graph_every: int = 10, backend: str | None = None) -> FuzzSummary:
    summary = FuzzSummary(seed, n)
    for i in range(n):
        case = make_case(seed, i, graph_every)
        res = run_case(case, inject_fault, backend)
        summary.tile_modes.update(res.modes)
        if res.unmappable:
            summary.unmappable += 1
        if res.ok:
            summary.passed += 1
            continue
        summary.failures.append((i, res.detail))
        if summary.counterexample is None:
            summary.counterexample = shrink(case, inject_fault)
        if stop_on_failure:
            break
    return summary


def case_list(seed: int, n: int, graph_every: int = 10) -> str:
    """Canonical text of the generated cases, for reproducibility checks."""
    return json.dumps([make_case(seed, i, graph_every).to_dict() for i in range(n)], sort_keys=True)
