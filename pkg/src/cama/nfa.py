"""Homogeneous NFA model, interchange I/O, graph analyses and the reference interpreter.

Matching is attached to states: every incoming edge of a state implicitly
carries that state's symbol class, so edges have no labels.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import jsonschema

MAX_ALPHABET = 256


class NfaError(ValueError):
    """Base class for structural problems in an NFA or its serialized form."""


class SchemaError(NfaError):
    pass


class DanglingEdgeError(NfaError):
    pass


class AlphabetOverflowError(NfaError):
    pass


class SymbolRangeError(NfaError):
    """An input symbol is outside the NFA's alphabet."""


class StartKind(str, enum.Enum):
    NONE = "none"
    START_OF_DATA = "start-of-data"
    ALL_INPUT = "all-input"


@dataclass(frozen=True)
class SymbolClass:
    """A set of symbols, optionally stored as the complement of ``members``."""

    members: frozenset[int]
    negated: bool = False

    @classmethod
    def of(cls, symbols: Iterable[int], negated: bool = False) -> "SymbolClass":
        return cls(frozenset(symbols), negated)

    @classmethod
    def any(cls) -> "SymbolClass":
        return cls(frozenset(), True)

    def effective(self, alphabet_size: int) -> frozenset[int]:
        if not self.negated:
            return self.members
        return frozenset(range(alphabet_size)) - self.members

    def union(self, other: "SymbolClass") -> "SymbolClass":
        # complement bookkeeping works without knowing the alphabet
        if not self.negated and not other.negated:
            return SymbolClass(self.members | other.members)
        if self.negated and other.negated:
            return SymbolClass(self.members & other.members, True)
        neg, pos = (self, other) if self.negated else (other, self)
        return SymbolClass(neg.members - pos.members, True)


@dataclass(frozen=True)
class Ste:
    id: int
    cls: SymbolClass
    start: StartKind = StartKind.NONE
    reporting: bool = False


@dataclass(frozen=True, order=True)
class ReportRecord:
    cycle: int
    state_id: int
    partition_id: int
    input_symbol: int


@dataclass
class HomogeneousNfa:
    alphabet_size: int
    states: list[Ste]
    edges: dict[int, set[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 1 <= self.alphabet_size <= MAX_ALPHABET:
            raise AlphabetOverflowError(
                f"alphabet size {self.alphabet_size} outside 1..{MAX_ALPHABET}"
            )
        for pos, ste in enumerate(self.states):
            if ste.id != pos:
                raise NfaError(f"state ids must be dense: position {pos} holds id {ste.id}")
            bad = [s for s in ste.cls.members if not 0 <= s < self.alphabet_size]
            if bad:
                raise AlphabetOverflowError(
                    f"state {ste.id}: symbol {min(bad)} outside alphabet of {self.alphabet_size}"
                )
        n = len(self.states)
        for src, dsts in self.edges.items():
            if not 0 <= src < n:
                raise DanglingEdgeError(f"edge source {src} is not a state")
            for dst in dsts:
                if not 0 <= dst < n:
                    raise DanglingEdgeError(f"edge {src}->{dst}: destination is not a state")

    def __len__(self) -> int:
        return len(self.states)

    def successors(self, state: int) -> set[int]:
        return self.edges.get(state, set())

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted((s, d) for s, dsts in self.edges.items() for d in dsts)

    def start_states(self) -> list[int]:
        return [s.id for s in self.states if s.start is not StartKind.NONE]

    def effective_classes(self) -> list[frozenset[int]]:
        return [s.cls.effective(self.alphabet_size) for s in self.states]

    def is_runnable(self) -> bool:
        return bool(self.start_states())


def disjoint_union(nfas: Sequence[HomogeneousNfa]) -> HomogeneousNfa:
    """Concatenate NFAs into one, renumbering states; alphabets must agree."""
    if not nfas:
        raise NfaError("nothing to combine")
    alphabet = nfas[0].alphabet_size
    states: list[Ste] = []
    edges: dict[int, set[int]] = {}
    for part in nfas:
        if part.alphabet_size != alphabet:
            raise NfaError("alphabet sizes differ")
        base = len(states)
        for ste in part.states:
            states.append(Ste(base + ste.id, ste.cls, ste.start, ste.reporting))
        for src, dsts in part.edges.items():
            if dsts:
                edges[base + src] = {base + d for d in dsts}
    return HomogeneousNfa(alphabet, states, edges)


# ---------------------------------------------------------------------------
# Interchange format
# ---------------------------------------------------------------------------

NFA_SCHEMA = {
    "type": "object",
    "required": ["alphabet", "states", "edges"],
    "properties": {
        "alphabet": {"type": "integer", "minimum": 1},
        "states": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "symbols"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "symbols": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 0},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                    "negated": {"type": "boolean"},
                    "start": {"enum": [k.value for k in StartKind]},
                    "report": {"type": "boolean"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "integer"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
    },
}


def _ranges(symbols: Iterable[int]) -> list[list[int]]:
    out: list[list[int]] = []
    for s in sorted(symbols):
        if out and out[-1][1] == s - 1:
            out[-1][1] = s
        else:
            out.append([s, s])
    return out


def nfa_to_dict(nfa: HomogeneousNfa) -> dict:
    return {
        "alphabet": nfa.alphabet_size,
        "states": [
            {
                "id": s.id,
                "symbols": _ranges(s.cls.members),
                "negated": s.cls.negated,
                "start": s.start.value,
                "report": s.reporting,
            }
            for s in nfa.states
        ],
        "edges": [list(e) for e in nfa.edge_list()],
    }


def save_nfa(nfa: HomogeneousNfa) -> str:
    return json.dumps(nfa_to_dict(nfa), indent=1)


def nfa_from_dict(doc: dict) -> HomogeneousNfa:
    try:
        jsonschema.validate(doc, NFA_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{path or '<root>'}: {exc.message}") from None
    alphabet = doc["alphabet"]
    if alphabet > MAX_ALPHABET:
        raise AlphabetOverflowError(f"alphabet {alphabet} exceeds {MAX_ALPHABET}")
    by_id: dict[int, Ste] = {}
    for raw in doc["states"]:
        members: set[int] = set()
        for lo, hi in raw["symbols"]:
            if lo > hi:
                raise SchemaError(f"state {raw['id']}: empty range [{lo},{hi}]")
            if hi >= MAX_ALPHABET:
                raise AlphabetOverflowError(f"state {raw['id']}: symbol {hi} exceeds 8 bits")
            if hi >= alphabet:
                raise AlphabetOverflowError(
                    f"state {raw['id']}: symbol {hi} outside declared alphabet {alphabet}"
                )
            members.update(range(lo, hi + 1))
        if raw["id"] in by_id:
            raise SchemaError(f"duplicate state id {raw['id']}")
        by_id[raw["id"]] = Ste(
            raw["id"],
            SymbolClass(frozenset(members), raw.get("negated", False)),
            StartKind(raw.get("start", "none")),
            raw.get("report", False),
        )
    if sorted(by_id) != list(range(len(by_id))):
        raise SchemaError("state ids must be 0..n-1")
    edges: dict[int, set[int]] = {}
    for src, dst in doc["edges"]:
        if src not in by_id or dst not in by_id:
            raise DanglingEdgeError(f"edge {src}->{dst} references an unknown state")
        edges.setdefault(src, set()).add(dst)
    return HomogeneousNfa(alphabet, [by_id[i] for i in range(len(by_id))], edges)


def load_nfa(document: str | bytes | dict) -> HomogeneousNfa:
    """Load an NFA from interchange JSON text (or an already-decoded dict)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError("document must be a JSON object")
    return nfa_from_dict(document)


def load_regex_list(
    text: str,
    alphabet_size: int = MAX_ALPHABET,
    start: StartKind = StartKind.START_OF_DATA,
) -> HomogeneousNfa:
    """One pattern per line, each becoming its own component. '#' lines are comments."""
    from .regex import compile_regex

    parts = []
    for line in text.splitlines():
        pattern = line.rstrip("\r\n")
        if not pattern.strip() or pattern.lstrip().startswith("#"):
            continue
        parts.append(compile_regex(pattern, alphabet_size, start))
    if not parts:
        raise SchemaError("regex file contains no patterns")
    return disjoint_union(parts)


def load_any(text: str, alphabet_size: int | None = None,
             start: StartKind = StartKind.START_OF_DATA) -> HomogeneousNfa:
    """Interchange JSON if the text looks like a JSON object, else a regex list."""
    if text.lstrip().startswith("{"):
        nfa = load_nfa(text)
        if alphabet_size is not None and alphabet_size != nfa.alphabet_size:
            raise SchemaError(
                f"--alphabet {alphabet_size} disagrees with file alphabet {nfa.alphabet_size}"
            )
        return nfa
    return load_regex_list(text, alphabet_size or MAX_ALPHABET, start)


# ---------------------------------------------------------------------------
# Graph analyses
# ---------------------------------------------------------------------------

@dataclass
class Component:
    """A weakly-connected sub-NFA; ``origin[i]`` is the parent id of local state i."""

    nfa: HomogeneousNfa
    origin: tuple[int, ...]


def component_partition(nfa: HomogeneousNfa) -> list[list[int]]:
    parent = list(range(len(nfa)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for src, dst in nfa.edge_list():
        a, b = find(src), find(dst)
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for s in range(len(nfa)):
        groups.setdefault(find(s), []).append(s)
    return sorted(groups.values(), key=lambda g: g[0])


def subgraph(nfa: HomogeneousNfa, ids: Sequence[int]) -> Component:
    local = {old: new for new, old in enumerate(ids)}
    states = [
        Ste(local[old], nfa.states[old].cls, nfa.states[old].start, nfa.states[old].reporting)
        for old in ids
    ]
    edges = {}
    for old in ids:
        dsts = {local[d] for d in nfa.successors(old) if d in local}
        if dsts:
            edges[local[old]] = dsts
    return Component(HomogeneousNfa(nfa.alphabet_size, states, edges), tuple(ids))


def connected_components(nfa: HomogeneousNfa) -> list[Component]:
    """Weakly-connected components ordered by their smallest state id."""
    return [subgraph(nfa, ids) for ids in component_partition(nfa)]


def bfs_order(cc: HomogeneousNfa) -> list[int]:
    """BFS from each start state in id order; states never reached go last, in id order."""
    seen = [False] * len(cc)
    order: list[int] = []
    for root in cc.start_states():
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            s = queue.popleft()
            order.append(s)
            for d in sorted(cc.successors(s)):
                if not seen[d]:
                    seen[d] = True
                    queue.append(d)
    order.extend(s for s in range(len(cc)) if not seen[s])
    return order


# ---------------------------------------------------------------------------
# Reference interpreter
# ---------------------------------------------------------------------------

def interpret(nfa: HomogeneousNfa, data: Sequence[int] | bytes) -> list[ReportRecord]:
    """Direct set-based execution; the correctness oracle for the hardware model."""
    classes = nfa.effective_classes()
    always = {s.id for s in nfa.states if s.start is StartKind.ALL_INPUT}
    enabled = always | {s.id for s in nfa.states if s.start is StartKind.START_OF_DATA}
    reporting = {s.id for s in nfa.states if s.reporting}
    out: list[ReportRecord] = []
    for cycle, sym in enumerate(data):
        if not 0 <= sym < nfa.alphabet_size:
            raise SymbolRangeError(f"symbol {sym} at offset {cycle} outside alphabet")
        active = [s for s in enabled if sym in classes[s]]
        for s in sorted(active):
            if s in reporting:
                out.append(ReportRecord(cycle, s, 0, sym))
        enabled = set(always)
        for s in active:
            enabled |= nfa.successors(s)
    return out
