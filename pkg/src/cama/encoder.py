"""Symbol encoding for 8T-CAM state matching.

A stored entry matches an input code when every 1-bit of the entry is also a
1-bit of the input; 0-bits in an entry are don't-cares.  Every symbol code
carries the same number of zeros, so two distinct codes never match each
other, and classes compress by ANDing member codes.

Four schemes are supported:

* ``ONE_ZERO``: complemented one-hot, length equal to the alphabet.
* ``MULTI_ZEROS``: balanced constant-weight codes of minimal length.
* ``TWO_ZEROS_PREFIX``: prefix with two zeros, one-zero suffix.
* ``ONE_ZERO_PREFIX``: prefix with one zero, one-zero suffix.
"""

from __future__ import annotations

import enum
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .nfa import HomogeneousNfa, SymbolClass

CAM_ROWS = 16
MAX_CODE_LENGTH = 32


class UnmappableAlphabetError(ValueError):
    """No scheme fits the alphabet within the maximum code length."""


class SchemeKind(str, enum.Enum):
    ONE_ZERO = "one-zero"
    MULTI_ZEROS = "multi-zeros"
    TWO_ZEROS_PREFIX = "two-zeros-prefix"
    ONE_ZERO_PREFIX = "one-zero-prefix"

    @property
    def is_prefix(self) -> bool:
        return self in (SchemeKind.TWO_ZEROS_PREFIX, SchemeKind.ONE_ZERO_PREFIX)


@dataclass(frozen=True)
class Scheme:
    kind: SchemeKind
    code_length: int
    prefix_len: int = 0
    suffix_len: int = 0

    @property
    def prefix_zeros(self) -> int:
        return {SchemeKind.TWO_ZEROS_PREFIX: 2, SchemeKind.ONE_ZERO_PREFIX: 1}.get(self.kind, 0)

    @property
    def zeros_per_code(self) -> int:
        if self.kind is SchemeKind.ONE_ZERO:
            return 1
        if self.kind is SchemeKind.MULTI_ZEROS:
            return self.code_length // 2
        return self.prefix_zeros + 1

    def capacity(self) -> int:
        """How many distinct symbol codes the scheme can express."""
        if self.kind is SchemeKind.ONE_ZERO:
            return self.code_length
        if self.kind is SchemeKind.MULTI_ZEROS:
            return math.comb(self.code_length, self.code_length // 2)
        return math.comb(self.prefix_len, self.prefix_zeros) * self.suffix_len

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "code_length": self.code_length,
            "prefix_len": self.prefix_len,
            "suffix_len": self.suffix_len,
            "zeros_per_code": self.zeros_per_code,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scheme":
        return cls(SchemeKind(d["kind"]), d["code_length"], d.get("prefix_len", 0), d.get("suffix_len", 0))


@dataclass(frozen=True)
class CamEntry:
    code: str
    owner: int
    invert: bool = False


@dataclass
class AlphabetStats:
    alphabet_size: int
    avg_class_size_raw: Fraction
    avg_class_size_no: Fraction
    freq: np.ndarray
    cooccur: np.ndarray

    def to_dict(self) -> dict:
        return {
            "alphabet_size": self.alphabet_size,
            "avg_class_size_raw": float(self.avg_class_size_raw),
            "avg_class_size_no": float(self.avg_class_size_no),
        }


def _zeros_code(length: int, zeros: Iterable[int]) -> str:
    bits = ["1"] * length
    for z in zeros:
        bits[z] = "0"
    return "".join(bits)


def _zero_positions(code: str) -> frozenset[int]:
    return frozenset(i for i, b in enumerate(code) if b == "0")


def and_codes(codes: Iterable[str]) -> str:
    codes = list(codes)
    width = len(codes[0])
    acc = (1 << width) - 1
    for c in codes:
        acc &= int(c, 2)
    return format(acc, f"0{width}b")


# ---------------------------------------------------------------------------
# Negation optimisation and statistics
# ---------------------------------------------------------------------------

def apply_negation_opt(cls: SymbolClass, alphabet_size: int) -> tuple[frozenset[int], bool]:
    """Store whichever of the class or its complement is smaller; ties stay direct."""
    members = cls.effective(alphabet_size)
    complement = frozenset(range(alphabet_size)) - members
    if len(complement) < len(members):
        return complement, True
    return members, False


def analyze(nfa: HomogeneousNfa) -> AlphabetStats:
    a = nfa.alphabet_size
    freq = np.zeros(a, dtype=np.int64)
    cooccur = np.zeros((a, a), dtype=np.int64)
    raw_total = no_total = 0
    for ste in nfa.states:
        raw_total += len(ste.cls.effective(a))
        members, _ = apply_negation_opt(ste.cls, a)
        no_total += len(members)
        if members:
            idx = np.fromiter(sorted(members), dtype=np.int64)
            freq[idx] += 1
            cooccur[np.ix_(idx, idx)] += 1
    n = max(len(nfa), 1)
    return AlphabetStats(a, Fraction(raw_total, n), Fraction(no_total, n), freq, cooccur)


# ---------------------------------------------------------------------------
# Scheme selection
# ---------------------------------------------------------------------------

def multi_zeros_length(alphabet_size: int) -> int:
    length = 1
    while math.comb(length, length // 2) < alphabet_size:
        length += 1
    return length


def min_two_zero_prefix(alphabet_size: int, suffix_len: int) -> int:
    lp = 2
    while math.comb(lp, 2) * suffix_len < alphabet_size:
        lp += 1
    return lp


def two_zeros_sweep(alphabet_size: int, avg_class: Fraction | float) -> list[tuple[int, int, int]]:
    """(total length, prefix length, suffix length) over the integer suffix sweep."""
    lo = max(2, math.ceil(avg_class))
    hi = math.isqrt(alphabet_size)
    return [
        (ls + min_two_zero_prefix(alphabet_size, ls), min_two_zero_prefix(alphabet_size, ls), ls)
        for ls in range(lo, hi + 1)
    ]


def select_scheme(
    alphabet_size: int,
    avg_class: Fraction | float,
    cam_rows: int = CAM_ROWS,
    max_len: int = MAX_CODE_LENGTH,
) -> Scheme:
    if alphabet_size < 1:
        raise UnmappableAlphabetError("empty alphabet")
    if alphabet_size <= cam_rows:
        scheme = Scheme(SchemeKind.ONE_ZERO, alphabet_size)
    elif avg_class == 1:
        scheme = Scheme(SchemeKind.MULTI_ZEROS, multi_zeros_length(alphabet_size))
    else:
        side = math.isqrt(alphabet_size - 1) + 1  # ceil(sqrt(A))
        sweep = two_zeros_sweep(alphabet_size, avg_class)
        best = None
        if sweep:
            # equal lengths: prefer the longer suffix, it compresses more
            best = min(sweep, key=lambda t: (t[0], -t[2]))
        if best is not None and best[0] < 2 * side:
            scheme = Scheme(SchemeKind.TWO_ZEROS_PREFIX, best[0], best[1], best[2])
        else:
            scheme = Scheme(SchemeKind.ONE_ZERO_PREFIX, 2 * side, side, side)
    if scheme.code_length > max_len:
        raise UnmappableAlphabetError(
            f"alphabet {alphabet_size} needs {scheme.code_length}-bit codes (> {max_len})"
        )
    return scheme


# ---------------------------------------------------------------------------
# Codebook
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Codebook:
    scheme: Scheme
    codes: tuple[str, ...]
    clusters: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.codes)) != len(self.codes):
            raise ValueError("codes must be pairwise distinct")
        width = self.scheme.code_length
        for s, code in enumerate(self.codes):
            if len(code) != width or code.count("0") != self.scheme.zeros_per_code:
                raise ValueError(f"symbol {s}: code {code!r} violates the zero-count invariant")

    @property
    def alphabet_size(self) -> int:
        return len(self.codes)

    @property
    def code_length(self) -> int:
        return self.scheme.code_length

    def prefix(self, code: str) -> str:
        return code[: self.scheme.prefix_len]

    def suffix(self, code: str) -> str:
        return code[self.scheme.prefix_len:]

    @cached_property
    def symbol_of(self) -> dict[str, int]:
        return {c: s for s, c in enumerate(self.codes)}

    @cached_property
    def cluster_members(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = defaultdict(list)
        for s, c in enumerate(self.clusters):
            out[c].append(s)
        return {c: tuple(m) for c, m in out.items()}

    @cached_property
    def suffix_slots(self) -> tuple[int, ...]:
        return tuple(self.suffix(c).find("0") for c in self.codes)

    @cached_property
    def symbols_by_prefix(self) -> dict[frozenset[int], tuple[int, ...]]:
        out: dict[frozenset[int], list[int]] = defaultdict(list)
        for s, code in enumerate(self.codes):
            out[_zero_positions(self.prefix(code))].append(s)
        return {p: tuple(m) for p, m in out.items()}

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.to_dict(),
            "codes": list(self.codes),
            "clusters": list(self.clusters),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Codebook":
        return cls(Scheme.from_dict(d["scheme"]), tuple(d["codes"]), tuple(d["clusters"]))

    @classmethod
    def from_codes(cls, scheme: Scheme, codes: Sequence[str]) -> "Codebook":
        """Build from explicit codes; prefix kinds cluster by shared prefix."""
        if scheme.kind is SchemeKind.ONE_ZERO:
            clusters = [0] * len(codes)
        elif scheme.kind is SchemeKind.MULTI_ZEROS:
            clusters = list(range(len(codes)))
        else:
            seen: dict[str, int] = {}
            clusters = [seen.setdefault(c[: scheme.prefix_len], len(seen)) for c in codes]
        return cls(scheme, tuple(codes), tuple(clusters))


def _prefix_codes(scheme: Scheme) -> list[str]:
    return [
        _zeros_code(scheme.prefix_len, zs)
        for zs in combinations(range(scheme.prefix_len), scheme.prefix_zeros)
    ]


def cluster_symbols(stats: AlphabetStats, scheme: Scheme) -> Codebook:
    """Assign codes; prefix schemes pack co-occurring symbols into shared-prefix clusters."""
    a = stats.alphabet_size
    if scheme.capacity() < a:
        raise UnmappableAlphabetError(f"scheme {scheme} cannot express {a} symbols")
    length = scheme.code_length
    if scheme.kind is SchemeKind.ONE_ZERO:
        codes = [_zeros_code(length, [s]) for s in range(a)]
        return Codebook(scheme, tuple(codes), tuple([0] * a))
    if scheme.kind is SchemeKind.MULTI_ZEROS:
        pool = combinations(range(length), length // 2)
        codes = [_zeros_code(length, next(pool)) for _ in range(a)]
        return Codebook(scheme, tuple(codes), tuple(range(a)))

    freq = stats.freq
    cooccur = stats.cooccur
    undistributed = set(range(a))
    order: list[list[int]] = []
    while undistributed:
        seed = min(undistributed, key=lambda s: (-freq[s], s))
        cluster = [seed]
        undistributed.discard(seed)
        score = cooccur[seed].astype(np.int64).copy()
        while len(cluster) < scheme.suffix_len and undistributed:
            pick = min(undistributed, key=lambda s: (-score[s], -freq[s], s))
            cluster.append(pick)
            undistributed.discard(pick)
            score += cooccur[pick]
        order.append(cluster)

    prefixes = _prefix_codes(scheme)
    codes = [""] * a
    clusters = [0] * a
    for k, members in enumerate(order):
        for slot, s in enumerate(members):
            codes[s] = prefixes[k] + _zeros_code(scheme.suffix_len, [slot])
            clusters[s] = k
    return Codebook(scheme, tuple(codes), tuple(clusters))


def encode_symbol(codebook: Codebook, s: int) -> str:
    if not 0 <= s < codebook.alphabet_size:
        raise KeyError(f"symbol {s} not in alphabet of {codebook.alphabet_size}")
    return codebook.codes[s]


def build_codebook(nfa: HomogeneousNfa, cam_rows: int = CAM_ROWS,
                   max_len: int = MAX_CODE_LENGTH) -> tuple[AlphabetStats, Codebook]:
    stats = analyze(nfa)
    scheme = select_scheme(nfa.alphabet_size, stats.avg_class_size_no, cam_rows, max_len)
    return stats, cluster_symbols(stats, scheme)


# ---------------------------------------------------------------------------
# Class compression
# ---------------------------------------------------------------------------

def _entry_matches(entry: str, code: str) -> bool:
    e = int(entry, 2)
    return e & int(code, 2) == e


def _merge_prefixes(codebook: Codebook, members: frozenset[int],
                    entries: list[tuple[frozenset[int], str]]) -> list[str]:
    """Prefix compression over (prefix zero set, suffix) entries with identical suffixes.

    A merged prefix with zero set M matches every prefix whose zeros lie in M
    (the combinatorial number rule).  A merge is taken only when each such
    prefix either belongs to no symbol or has all of its symbols under the
    suffix inside the class, so the merged entry never matches a non-member.
    """
    scheme = codebook.scheme
    by_prefix = codebook.symbols_by_prefix
    suffix_slot = codebook.suffix_slots

    def admissible(prefix: frozenset[int], suffix: str) -> bool:
        zeros = _zero_positions(suffix)
        return all(s in members for s in by_prefix.get(prefix, ()) if suffix_slot[s] in zeros)

    by_suffix: dict[str, list[frozenset[int]]] = defaultdict(list)
    for pz, suffix in entries:
        by_suffix[suffix].append(pz)

    out: list[str] = []
    for suffix in sorted(by_suffix):
        group = sorted(by_suffix[suffix], key=sorted)
        if scheme.prefix_zeros == 1:
            zeros = frozenset().union(*group)
            out.append(_zeros_code(scheme.prefix_len, zeros) + suffix)
            continue
        covered: set[frozenset[int]] = set()
        for pz in group:
            if pz in covered:
                continue
            clique = set(pz)
            for w in range(scheme.prefix_len):
                if w in clique:
                    continue
                if all(admissible(frozenset((w, m)), suffix) for m in clique):
                    clique.add(w)
            covered.update(frozenset(p) for p in combinations(sorted(clique), 2))
            out.append(_zeros_code(scheme.prefix_len, clique) + suffix)
    return out


def _merge_balanced(codebook: Codebook, members: frozenset[int]) -> list[str]:
    """Multi-Zeros merging: grow a zero set while all codes beneath it are members or unused."""
    length = codebook.code_length
    n = length // 2
    symbol_of = codebook.symbol_of

    def admissible(zeros: Iterable[int]) -> bool:
        s = symbol_of.get(_zeros_code(length, zeros))
        return s is None or s in members

    covered: set[int] = set()
    out: list[str] = []
    for s in sorted(members):
        if s in covered:
            continue
        zeros = set(_zero_positions(codebook.codes[s]))
        for w in range(length):
            if w in zeros:
                continue
            if all(admissible(set(sub) | {w}) for sub in combinations(sorted(zeros), n - 1)):
                zeros.add(w)
        merged = _zeros_code(length, zeros)
        covered.update(m for m in members if _entry_matches(merged, codebook.codes[m]))
        out.append(merged)
    return out


def compile_class(codebook: Codebook, members: Iterable[int], invert: bool,
                  owner: int = 0) -> list[CamEntry]:
    """Exact cover of ``members`` by CAM entries (suffix, then prefix compression)."""
    members = frozenset(members)
    length = codebook.code_length
    if not members:
        # empty-and-inverted matches everything; empty-direct matches nothing,
        # and an all-ones entry never matches because every code holds a zero
        return [CamEntry("0" * length if invert else "1" * length, owner, False)]
    kind = codebook.scheme.kind
    if kind is SchemeKind.MULTI_ZEROS:
        codes = _merge_balanced(codebook, members)
    else:
        by_cluster: dict[int, list[str]] = defaultdict(list)
        for s in sorted(members):
            by_cluster[codebook.clusters[s]].append(codebook.codes[s])
        merged = [and_codes(by_cluster[c]) for c in sorted(by_cluster)]
        if kind.is_prefix:
            pairs = [(_zero_positions(codebook.prefix(m)), codebook.suffix(m)) for m in merged]
            codes = _merge_prefixes(codebook, members, pairs)
        else:
            codes = merged
    return [CamEntry(code, owner, invert) for code in codes]


def compile_state(codebook: Codebook, cls: SymbolClass, alphabet_size: int,
                  owner: int = 0) -> list[CamEntry]:
    """Compile a state's class, using the complement when it needs fewer entries."""
    members = cls.effective(alphabet_size)
    _, prefer_invert = apply_negation_opt(cls, alphabet_size)
    direct = compile_class(codebook, members, False, owner)
    if len(direct) == 1 and not prefer_invert:
        return direct
    complement = frozenset(range(alphabet_size)) - members
    negated = compile_class(codebook, complement, True, owner)
    if len(negated) != len(direct):
        return negated if len(negated) < len(direct) else direct
    return negated if prefer_invert else direct


def matched_symbols(codebook: Codebook, entries: Sequence[CamEntry]) -> frozenset[int]:
    """Symbols for which the state-level match (any entry, then invert) is true."""
    hit = {
        s for s, code in enumerate(codebook.codes)
        if any(_entry_matches(e.code, code) for e in entries)
    }
    invert = entries[0].invert if entries else False
    if invert:
        return frozenset(range(codebook.alphabet_size)) - hit
    return frozenset(hit)


# ---------------------------------------------------------------------------
# Input encoder table and whole-NFA compilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EncoderTable:
    """256x32 input encoder: one zero-padded code word per symbol plus a valid-bit mask."""

    codes: np.ndarray  # uint32, code in the low bits
    width: int

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def lookup(self, s: int) -> str:
        return format(int(self.codes[s]), f"0{self.width}b")


def build_encoder_table(codebook: Codebook) -> EncoderTable:
    codes = np.array([int(c, 2) for c in codebook.codes], dtype=np.uint32)
    return EncoderTable(codes, codebook.code_length)


@dataclass
class CompiledNfa:
    nfa: HomogeneousNfa
    stats: AlphabetStats
    codebook: Codebook
    entries: list[list[CamEntry]] = field(default_factory=list)

    @property
    def total_entries(self) -> int:
        return sum(len(e) for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "stats": self.stats.to_dict(),
            "codebook": self.codebook.to_dict(),
            "total_entries": self.total_entries,
            "states": [
                {
                    "id": sid,
                    "invert": bool(entries[0].invert),
                    "entries": [e.code for e in entries],
                }
                for sid, entries in enumerate(self.entries)
            ],
        }


def compile_nfa(nfa: HomogeneousNfa, scheme: Scheme | None = None,
                cam_rows: int = CAM_ROWS, max_len: int = MAX_CODE_LENGTH) -> CompiledNfa:
    stats = analyze(nfa)
    if scheme is None:
        scheme = select_scheme(nfa.alphabet_size, stats.avg_class_size_no, cam_rows, max_len)
    codebook = cluster_symbols(stats, scheme)
    entries = [compile_state(codebook, s.cls, nfa.alphabet_size, s.id) for s in nfa.states]
    return CompiledNfa(nfa, stats, codebook, entries)


def dump_codebook(compiled: CompiledNfa, manifest: dict | None = None) -> str:
    doc = compiled.to_dict()
    if manifest is not None:
        doc = {"manifest": manifest, **doc}
    return json.dumps(doc, indent=1)
