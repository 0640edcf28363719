import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cama.encoder import (
    CamEntry,
    Codebook,
    Scheme,
    SchemeKind,
    UnmappableAlphabetError,
    analyze,
    and_codes,
    apply_negation_opt,
    build_encoder_table,
    cluster_symbols,
    compile_class,
    compile_nfa,
    compile_state,
    dump_codebook,
    encode_symbol,
    matched_symbols,
    min_two_zero_prefix,
    multi_zeros_length,
    select_scheme,
    two_zeros_sweep,
)
from cama.nfa import HomogeneousNfa, Ste, SymbolClass, load_nfa, save_nfa
from cama.regex import compile_regex
from helpers import example_nfa, random_members, random_scheme, random_stats

KINDS = list(SchemeKind)


def _nfa(*classes, alphabet=256):
    return HomogeneousNfa(alphabet, [Ste(i, c) for i, c in enumerate(classes)])


# analyze / negation optimization

def test_analyze_example_counts():
    stats = analyze(_nfa(SymbolClass.of(b"abcd", negated=True), SymbolClass.of(b"ab")))
    assert stats.avg_class_size_no == 3
    assert stats.avg_class_size_raw == 127
    assert stats.freq[ord("a")] == 2 and stats.freq[ord("c")] == 1
    assert (stats.cooccur.diagonal() == stats.freq).all()
    assert (stats.cooccur == stats.cooccur.T).all()


def test_analyze_all_singletons():
    assert analyze(_nfa(SymbolClass.of(b"a"), SymbolClass.of(b"z"))).avg_class_size_no == 1


def test_negation_opt_examples():
    assert apply_negation_opt(SymbolClass.of(b"abcd", negated=True), 256) == (frozenset(b"abcd"), True)
    assert apply_negation_opt(SymbolClass.of(b"ab"), 256) == (frozenset(b"ab"), False)
    half = SymbolClass.of(range(128))
    assert apply_negation_opt(half, 256) == (frozenset(range(128)), False)


@given(st.sets(st.integers(0, 63)), st.booleans())
def test_no_statistic_never_exceeds_raw(members, negated):
    stats = analyze(_nfa(SymbolClass.of(members, negated), SymbolClass.of([1]), alphabet=64))
    assert stats.avg_class_size_no <= stats.avg_class_size_raw


# scheme selection

@pytest.mark.parametrize("a,s,kind,length", [
    (256, 5, SchemeKind.TWO_ZEROS_PREFIX, 16),
    (256, 1, SchemeKind.MULTI_ZEROS, 11),
    (2, 1, SchemeKind.ONE_ZERO, 2),
    (256, Fraction(5155, 100), SchemeKind.ONE_ZERO_PREFIX, 32),
    (115, Fraction(129, 100), SchemeKind.TWO_ZEROS_PREFIX, 13),
    (107, Fraction(121, 100), SchemeKind.TWO_ZEROS_PREFIX, 12),
    (256, Fraction(1006, 1000), SchemeKind.TWO_ZEROS_PREFIX, 16),
])
def test_select_scheme_examples(a, s, kind, length):
    scheme = select_scheme(a, s)
    assert (scheme.kind, scheme.code_length) == (kind, length)


def test_multi_zeros_eq1_boundary():
    assert math.comb(10, 5) < 256 <= math.comb(11, 5)
    assert multi_zeros_length(256) == 11


def test_random_forest_sweep_is_empty():
    assert two_zeros_sweep(256, Fraction(5155, 100)) == []


def test_unmappable_alphabet():
    with pytest.raises(UnmappableAlphabetError):
        select_scheme(256, 60, max_len=16)
    with pytest.raises(UnmappableAlphabetError):
        select_scheme(0, 1)


@given(st.integers(1, 256), st.fractions(1, 128))
def test_select_scheme_is_minimal_over_permitted_candidates(a, s):
    scheme = select_scheme(a, s, max_len=64)
    side = math.isqrt(a - 1) + 1
    if a <= 16:
        candidates = [a]
    elif s == 1:
        candidates = [multi_zeros_length(a)]
    else:
        candidates = [t[0] for t in two_zeros_sweep(a, s)] + [2 * side]
    assert scheme.code_length == min(candidates)
    assert scheme.capacity() >= a
    if scheme.kind.is_prefix:
        assert scheme.code_length == scheme.prefix_len + scheme.suffix_len


@given(st.integers(17, 256), st.integers(2, 16))
def test_sweep_witness_satisfies_capacity(a, ls):
    lp = min_two_zero_prefix(a, ls)
    assert math.comb(lp, 2) * ls >= a > math.comb(lp - 1, 2) * ls


# clustering and codes

def test_cooccurring_pair_shares_cluster():
    nfa = _nfa(*[SymbolClass.of(b"ab")] * 3, SymbolClass.of(b"cd"), SymbolClass.of(b"e"))
    compiled = compile_nfa(nfa)
    cb = compiled.codebook
    assert cb.scheme.kind is SchemeKind.TWO_ZEROS_PREFIX
    assert cb.clusters[ord("a")] == cb.clusters[ord("b")]
    assert cb.prefix(cb.codes[ord("a")]) == cb.prefix(cb.codes[ord("b")])


def test_zero_cooccurrence_fills_by_frequency():
    a = 20
    freq = np.arange(a)[::-1].copy()
    stats = random_stats(random.Random(0), a)
    stats.freq, stats.cooccur = freq, np.diag(freq)
    cb = cluster_symbols(stats, Scheme(SchemeKind.ONE_ZERO_PREFIX, 10, 5, 5))
    assert cb.cluster_members[0] == (0, 1, 2, 3, 4)
    assert cb.cluster_members[1] == (5, 6, 7, 8, 9)


def test_256_symbols_l5_gives_52_distinct_prefixes():
    stats = random_stats(random.Random(1), 256)
    cb = cluster_symbols(stats, Scheme(SchemeKind.TWO_ZEROS_PREFIX, 16, 11, 5))
    prefixes = {cb.prefix(c) for c in cb.codes}
    assert len(cb.cluster_members) == 52 == len(prefixes)
    assert all(p.count("0") == 2 and len(p) == 11 for p in prefixes)


def test_two_zero_prefix_figure_code():
    cb = Codebook.from_codes(Scheme(SchemeKind.TWO_ZEROS_PREFIX, 5, 3, 2), ["00101", "00110", "01001"])
    assert encode_symbol(cb, 0) == "00101"


def test_one_zero_code():
    stats = random_stats(random.Random(2), 4)
    cb = cluster_symbols(stats, Scheme(SchemeKind.ONE_ZERO, 4))
    assert encode_symbol(cb, 2) == "1101"


def test_multi_zeros_enumeration_order():
    stats = random_stats(random.Random(3), 6)
    cb = cluster_symbols(stats, Scheme(SchemeKind.MULTI_ZEROS, 4))
    assert list(cb.codes) == ["0011", "0101", "0110", "1001", "1010", "1100"]


def test_encode_unknown_symbol():
    cb = compile_nfa(example_nfa()).codebook
    with pytest.raises(KeyError):
        encode_symbol(cb, 256)


def test_codebook_rejects_bad_zero_count():
    with pytest.raises(ValueError):
        Codebook.from_codes(Scheme(SchemeKind.ONE_ZERO, 3), ["011", "001"])
    with pytest.raises(ValueError):
        Codebook.from_codes(Scheme(SchemeKind.ONE_ZERO, 3), ["011", "011"])


@given(st.sampled_from(KINDS), st.integers(0, 10_000))
def test_zero_count_and_cluster_invariants(kind, seed):
    rng = random.Random(seed)
    a, scheme = random_scheme(rng, kind)
    cb = cluster_symbols(random_stats(rng, a), scheme)
    assert len(set(cb.codes)) == a
    assert all(c.count("0") == scheme.zeros_per_code for c in cb.codes)
    if kind.is_prefix:
        for members in cb.cluster_members.values():
            assert len(members) <= scheme.suffix_len
            assert len({cb.prefix(cb.codes[s]) for s in members}) == 1
            assert len({cb.suffix(cb.codes[s]) for s in members}) == len(members)
            assert all(cb.prefix(cb.codes[s]).count("0") == scheme.prefix_zeros for s in members)


# compression

def test_figure_ab_suffix_merge():
    cb = Codebook.from_codes(Scheme(SchemeKind.TWO_ZEROS_PREFIX, 5, 3, 2), ["00101", "00110", "01001"])
    entries = compile_class(cb, {0, 1}, False)
    assert [e.code for e in entries] == ["00100"]
    assert matched_symbols(cb, entries) == {0, 1}


def test_figure_one_zero_prefix_merge():
    cb = Codebook.from_codes(Scheme(SchemeKind.ONE_ZERO_PREFIX, 6, 3, 3),
                             ["110011", "110110", "110101", "101011"])
    entries = compile_class(cb, {0, 1, 2}, False)
    assert [e.code for e in entries] == ["110000"]
    assert matched_symbols(cb, entries) == {0, 1, 2}


def test_multi_zeros_refuses_unsound_merge():
    cb = Codebook.from_codes(Scheme(SchemeKind.MULTI_ZEROS, 4), ["0011", "0101", "0110", "1001"])
    entries = compile_class(cb, {0, 1}, False)
    assert len(entries) == 2
    assert matched_symbols(cb, entries) == {0, 1}
    naive = CamEntry(and_codes(["0011", "0101"]), 0)
    assert matched_symbols(cb, [naive]) == {0, 1, 3}


def test_singleton_is_its_code():
    cb = compile_nfa(example_nfa()).codebook
    assert [e.code for e in compile_class(cb, {97}, False)] == [cb.codes[97]]


def test_full_class_is_single_all_zeros_entry():
    cb = compile_nfa(example_nfa()).codebook
    entries = compile_state(cb, SymbolClass.any(), 256)
    assert entries == [CamEntry("0" * cb.code_length, 0, False)]
    assert matched_symbols(cb, entries) == frozenset(range(256))


def test_empty_class_matches_nothing():
    cb = compile_nfa(example_nfa()).codebook
    assert matched_symbols(cb, compile_state(cb, SymbolClass.of([]), 256)) == frozenset()


@given(st.sampled_from(KINDS), st.integers(0, 10_000))
def test_compression_is_exact_and_never_grows(kind, seed):
    rng = random.Random(seed)
    a, scheme = random_scheme(rng, kind)
    cb = cluster_symbols(random_stats(rng, a), scheme)
    members = random_members(rng, a)
    direct = compile_class(cb, members, False)
    assert matched_symbols(cb, direct) == members
    if members:
        assert len(direct) <= len(members)
        for e in direct:
            covered = [cb.codes[s] for s in members if int(e.code, 2) & int(cb.codes[s], 2) == int(e.code, 2)]
            assert covered and all(int(e.code, 2) & ~int(c, 2) == 0 for c in covered)
    cls = SymbolClass.of(members, negated=rng.random() < 0.5)
    state = compile_state(cb, cls, a)
    assert matched_symbols(cb, state) == cls.effective(a)
    assert len(state) <= len(compile_class(cb, cls.effective(a), False))


# encoder table and dumps

def test_block_rings_encoder_table():
    nfa = HomogeneousNfa(2, [Ste(0, SymbolClass.of([0])), Ste(1, SymbolClass.of([1]))])
    table = build_encoder_table(compile_nfa(nfa).codebook)
    assert len(table.codes) == 2 and table.width == 2 and table.mask == 0b11


def test_encoder_table_round_trips():
    cb = compile_nfa(example_nfa()).codebook
    table = build_encoder_table(cb)
    assert all(table.lookup(s) == encode_symbol(cb, s) for s in range(256))


def test_codebook_dump_is_deterministic_and_reloads():
    nfa = compile_regex("[a-f]x(yz|q)+")
    a = dump_codebook(compile_nfa(nfa))
    b = dump_codebook(compile_nfa(load_nfa(save_nfa(nfa))))
    assert a == b
    doc = json.loads(a)
    assert Codebook.from_dict(doc["codebook"]) == compile_nfa(nfa).codebook
    assert {"stats", "codebook", "states", "total_entries"} <= set(doc)
