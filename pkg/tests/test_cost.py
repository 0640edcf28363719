import json
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cama.cost import (
    DEFAULT_PARAMS,
    CostParams,
    area_of,
    breakdown,
    cam_energy_pj,
    cost_report,
    derived_frequencies,
    energy_components,
    energy_of_cycle,
    leakage_w,
    local_switch_energy_pj,
    power_of,
    throughput_of,
    tile_area_um2,
)
from cama.fuzz import random_graph_nfa, random_input
from cama.nfa import HomogeneousNfa, StartKind, Ste, SymbolClass, disjoint_union
from cama.simulator import ActivityTrace, TraceMismatchError, run_e, run_t
from helpers import chain_nfa, example_nfa, placed

ENCODER_AREA = 3659 * 32 / 256
ENCODER_LEAK_UA = 247 * 32 / 256


def _always_on(n=1):
    states = [Ste(i, SymbolClass.any(), StartKind.ALL_INPUT, True) for i in range(n)]
    return HomogeneousNfa(256, states)


def test_table_constants():
    b = DEFAULT_PARAMS.blocks
    assert (b["cam8t_16x256"].energy_pj, b["cam8t_16x256"].area_um2) == (16.78, 3919)
    assert (b["sram8t_128x128"].energy_pj, b["sram8t_128x128"].area_um2) == (8.67, 5655)
    assert (b["sram8t_256x256"].energy_pj, b["sram8t_256x256"].area_um2) == (17.9, 18153)
    assert DEFAULT_PARAMS.freq_e_ghz == 1.21 and DEFAULT_PARAMS.freq_t_ghz == 2.14


def test_cam_energy_points():
    assert cam_energy_pj(256, "e") == pytest.approx(16.78, abs=1e-12)
    assert cam_energy_pj(0, "e") == 2.67
    assert cam_energy_pj(128, "e") == pytest.approx(9.725, abs=1e-12)
    assert cam_energy_pj(0, "t") == 16.78


def test_local_switch_energy_split():
    assert local_switch_energy_pj(384) == pytest.approx(8.67)
    assert local_switch_energy_pj(0) == pytest.approx(8.67 * 0.8)


def test_frequencies_from_delays():
    f = derived_frequencies()
    assert f["e_max"] == pytest.approx(1.34, abs=0.005)
    assert f["t_max"] == pytest.approx(2.38, abs=0.005)
    assert f["e_operated"] == pytest.approx(1.21, abs=0.005)
    assert f["t_operated"] == pytest.approx(2.14, abs=0.005)


def test_throughput():
    assert throughput_of("t") == pytest.approx(17.12)
    assert throughput_of("e") == pytest.approx(9.68)
    assert throughput_of("t") / throughput_of("e") == pytest.approx(1.768, abs=0.01)


def test_area_examples():
    _, p = placed(example_nfa())
    assert tile_area_um2() == 2 * 3919 + 2 * 5655 == 19148
    assert area_of(p) == 19148 + 18153 + ENCODER_AREA
    assert round(ENCODER_AREA) == 457


def test_area_scales_with_tiles():
    nfa = disjoint_union([chain_nfa(400, symbols=b"abc") for _ in range(8)])
    _, p = placed(nfa)
    assert len(p.tiles) == 8 and p.num_arrays == 1
    assert area_of(p) == 8 * 19148 + 18153 + ENCODER_AREA


def test_zero_tile_area_is_encoder_only():
    _, p = placed(example_nfa())
    p.tiles = []
    assert area_of(p) == ENCODER_AREA


def test_one_tile_always_active_t_power_closed_form():
    _, p = placed(_always_on())
    tr = run_t(p, b"abcd").trace
    dynamic = (2 * 16.78 + 8.67 * (0.8 + 0.2 / 384) + 2.4) * 1e-12 * 2.14e9
    leak = (2 * 299 + 2 * 243 + 584 + ENCODER_LEAK_UA) * 1e-6 * 0.9
    assert power_of(tr, p) == pytest.approx(dynamic + leak, rel=1e-12)


def test_zero_activity_is_leakage_only():
    _, p = placed(example_nfa())
    tr = run_e(p, b"zzzz").trace
    tr.enabled[:] = 0
    tr.encoder[:] = 0
    assert power_of(tr, p) == pytest.approx(leakage_w(p))


def test_power_is_intensive():
    _, p = placed(_always_on(3))
    a = run_e(p, b"aecdd" * 40).trace
    b = run_e(p, b"aecdd" * 80).trace
    assert power_of(a, p) == pytest.approx(power_of(b, p), rel=1e-6)


def test_breakdown_shares():
    _, p = placed(chain_nfa(300))
    tr = run_e(p, b"ab" * 50).trace
    shares = breakdown(tr)
    assert sum(shares.values()) == pytest.approx(1, abs=1e-9)
    tr.rows[:] = 0
    tr.sends[:] = 0
    tr.encoder[:] = 0
    assert breakdown(tr)["state_matching"] == 1.0


def test_encoder_share_bound_with_four_active_tiles():
    # floor of four FCB tiles at zero enabled entries: 2.4 / (2.4 + 4 * 2.67)
    bound = 2.4 / (2.4 + 4 * 2.67)
    nfa = disjoint_union([_always_on()] + [chain_nfa(200) for _ in range(3)])
    for version, run in (("e", run_e), ("t", run_t)):
        _, p = placed(nfa, force_mode="fcb16")
        tr = run(p, b"ab" * 30).trace
        assert ((tr.enabled.sum(axis=2) > 0).sum(axis=1)[:tr.n_symbols] >= 1).all()
        assert breakdown(tr)["encoder"] <= bound


def test_vectorized_energy_equals_per_cycle_sum():
    rng = random.Random(2)
    for _ in range(20):
        nfa = random_graph_nfa(rng, rng.randint(2, 400))
        _, p = placed(nfa)
        data = random_input(rng, 64)
        for run in (run_e, run_t):
            tr = run(p, data).trace
            vec = energy_components(tr)
            loop = {k: 0.0 for k in vec}
            for c in range(tr.cycles):
                for k, v in energy_of_cycle(tr, c).items():
                    loop[k] += v
            assert all(vec[k] == pytest.approx(loop[k], rel=1e-12, abs=1e-30) for k in vec)


@given(st.integers(0, 2**31), st.sampled_from(["enabled", "rows", "sends"]))
def test_energy_monotone_in_activity(seed, field):
    rng = random.Random(seed)
    nfa = random_graph_nfa(rng, rng.randint(2, 300))
    _, p = placed(nfa)
    tr = run_e(p, random_input(rng, 32)).trace
    if tr.cycles == 0:
        return
    before = sum(energy_components(tr).values())
    arr = getattr(tr, field)
    idx = tuple(rng.randrange(s) for s in arr.shape)
    arr[idx] += 1
    assert sum(energy_components(tr).values()) >= before


def test_e_never_exceeds_t_on_same_trace_activity():
    rng = random.Random(9)
    for _ in range(30):
        nfa = random_graph_nfa(rng, rng.randint(2, 300))
        _, p = placed(nfa)
        data = random_input(rng, 64)
        e = sum(energy_components(run_e(p, data).trace).values())
        t = sum(energy_components(run_t(p, data).trace).values())
        assert e <= t


def test_report_arithmetic_and_mismatch():
    _, p = placed(chain_nfa(300))
    tr = run_e(p, b"ab" * 70).trace
    r = cost_report(tr, p)
    assert r.energy_per_symbol_nj * 1e-9 * r.symbols == pytest.approx(r.total_energy_j, rel=1e-9)
    assert r.throughput_gbps == pytest.approx(9.68)
    assert "wire energy excluded" in r.table()
    _, other = placed(example_nfa())
    with pytest.raises(TraceMismatchError):
        cost_report(tr, other)
    again = ActivityTrace.from_csv(tr.to_csv())
    assert cost_report(again, p).total_energy_j == r.total_energy_j


def test_params_validation_and_round_trip():
    assert CostParams.loads(DEFAULT_PARAMS.dumps()) == DEFAULT_PARAMS
    with pytest.raises(ValueError):
        CostParams(voltage=0)
    with pytest.raises(ValueError):
        CostParams.from_dict({"volts": 1})
    custom = CostParams.from_dict({"encoder_energy_pj": 3.0, "blocks": {"cam8t_16x256": {"energy_pj": 20}}})
    assert custom.cam.energy_pj == 20 and custom.cam.area_um2 == 3919
    assert json.loads(custom.dumps())["encoder_energy_pj"] == 3.0
