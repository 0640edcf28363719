import json
import random

import pytest
from hypothesis import given, strategies as st

from cama.nfa import (
    AlphabetOverflowError,
    DanglingEdgeError,
    HomogeneousNfa,
    ReportRecord,
    SchemaError,
    StartKind,
    Ste,
    SymbolClass,
    SymbolRangeError,
    bfs_order,
    connected_components,
    disjoint_union,
    interpret,
    load_any,
    load_nfa,
    save_nfa,
)
from helpers import chain_nfa, example_nfa


def test_symbol_class_effective_is_single_accessor():
    c = SymbolClass.of(b"abcd", negated=True)
    eff = c.effective(256)
    assert len(eff) == 252 and ord("a") not in eff
    assert SymbolClass.any().effective(4) == frozenset(range(4))


def test_interpret_example_reports_cycles_3_and_4():
    reports = interpret(example_nfa(), b"aecdd")
    assert [(r.cycle, r.state_id) for r in reports] == [(3, 3), (4, 3)]
    assert all(r.partition_id == 0 for r in reports)


def test_interpret_empty_input():
    assert interpret(example_nfa(), b"") == []


def test_interpret_always_on_state():
    nfa = HomogeneousNfa(256, [Ste(0, SymbolClass.any(), StartKind.ALL_INPUT, True)])
    assert [r.cycle for r in interpret(nfa, b"xyz")] == [0, 1, 2]
    assert [r.input_symbol for r in interpret(nfa, b"xyz")] == list(b"xyz")


def test_interpret_rejects_out_of_range_symbol():
    nfa = HomogeneousNfa(2, [Ste(0, SymbolClass.of([0]), StartKind.ALL_INPUT, True)])
    with pytest.raises(SymbolRangeError):
        interpret(nfa, [0, 1, 2])


def test_start_of_data_only_enabled_once():
    nfa = HomogeneousNfa(256, [Ste(0, SymbolClass.of(b"a"), StartKind.START_OF_DATA, True)])
    assert [r.cycle for r in interpret(nfa, b"aaa")] == [0]


def test_round_trip_through_interchange():
    nfa = example_nfa()
    again = load_nfa(save_nfa(nfa))
    assert again == nfa


def test_dangling_edge_rejected():
    doc = json.loads(save_nfa(example_nfa()))
    doc["edges"].append([0, 99])
    with pytest.raises(DanglingEdgeError):
        load_nfa(doc)


def test_alphabet_overflow_rejected():
    doc = json.loads(save_nfa(example_nfa()))
    doc["states"][0]["symbols"] = [[300, 300]]
    with pytest.raises(AlphabetOverflowError):
        load_nfa(doc)


def test_declared_alphabet_above_256_rejected():
    doc = json.loads(save_nfa(example_nfa()))
    doc["alphabet"] = 512
    with pytest.raises(AlphabetOverflowError):
        load_nfa(doc)


@pytest.mark.parametrize("text", ["{bad", "[]", '{"alphabet": 2}', '{"alphabet": 2, "states": [{"id": "x"}], "edges": []}'])
def test_schema_violations(text):
    with pytest.raises(SchemaError):
        load_nfa(text)


def test_regex_list_gives_one_component_per_line():
    nfa = load_any("# comment\nab\n(a|b)e*cd+\n\nxyz\n")
    assert len(connected_components(nfa)) == 3


def test_two_disjoint_regexes_two_components():
    nfa = disjoint_union([example_nfa(), example_nfa()])
    comps = connected_components(nfa)
    assert [len(c.nfa) for c in comps] == [4, 4]


def test_example_is_single_component():
    comps = connected_components(example_nfa())
    assert len(comps) == 1 and len(comps[0].nfa) == 4


def _brute_components(nfa):
    adj = {s: set() for s in range(len(nfa))}
    for a, b in nfa.edge_list():
        adj[a].add(b)
        adj[b].add(a)
    seen, out = set(), []
    for s in range(len(nfa)):
        if s in seen:
            continue
        stack, comp = [s], set()
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x])
        seen |= comp
        out.append(sorted(comp))
    return out


def test_hundred_random_chains_match_brute_force():
    rng = random.Random(7)
    chains = [chain_nfa(rng.randint(1, 12)) for _ in range(100)]
    nfa = disjoint_union(chains)
    comps = connected_components(nfa)
    assert len(comps) == 100
    assert [len(c.nfa) for c in comps] == [len(c) for c in chains]
    assert [list(c.origin) for c in comps] == _brute_components(nfa)


@given(st.lists(st.integers(1, 8), min_size=1, max_size=50))
def test_k_disjoint_nfas_yield_k_components(sizes):
    nfa = disjoint_union([chain_nfa(n) for n in sizes])
    comps = connected_components(nfa)
    assert len(comps) == len(sizes)
    owner = {}
    for k, c in enumerate(comps):
        for s in c.origin:
            owner[s] = k
    assert all(owner[a] == owner[b] for a, b in nfa.edge_list())
    assert sorted(s for c in comps for s in c.origin) == list(range(len(nfa)))


def test_bfs_chain():
    assert bfs_order(chain_nfa(4)) == [0, 1, 2, 3]


def test_bfs_example():
    assert bfs_order(example_nfa()) == [0, 1, 2, 3]


def test_bfs_star_with_id_tiebreak():
    states = [Ste(0, SymbolClass.of(b"a"), StartKind.START_OF_DATA)] + [
        Ste(i, SymbolClass.of(b"b")) for i in range(1, 6)
    ]
    nfa = HomogeneousNfa(256, states, {0: {5, 4, 3, 2, 1}})
    assert bfs_order(nfa) == [0, 1, 2, 3, 4, 5]


def test_bfs_appends_unreached_states_in_id_order():
    states = [Ste(0, SymbolClass.of(b"a")), Ste(1, SymbolClass.of(b"a"), StartKind.ALL_INPUT),
              Ste(2, SymbolClass.of(b"a"))]
    nfa = HomogeneousNfa(256, states, {0: {2}})
    assert bfs_order(nfa) == [1, 0, 2]


@st.composite
def random_nfas(draw):
    n = draw(st.integers(1, 30))
    states = [
        Ste(i, SymbolClass.of(draw(st.sets(st.integers(0, 15), max_size=4))),
            draw(st.sampled_from(list(StartKind))), draw(st.booleans()))
        for i in range(n)
    ]
    edges = {}
    for _ in range(draw(st.integers(0, 3 * n))):
        a, b = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        edges.setdefault(a, set()).add(b)
    return HomogeneousNfa(16, states, edges)


@given(random_nfas())
def test_bfs_is_permutation_and_stable_under_reserialization(nfa):
    order = bfs_order(nfa)
    assert sorted(order) == list(range(len(nfa)))
    assert bfs_order(load_nfa(save_nfa(nfa))) == order


def test_report_record_order():
    assert ReportRecord(1, 0, 0, 0) < ReportRecord(1, 1, 0, 0) < ReportRecord(2, 0, 0, 0)
