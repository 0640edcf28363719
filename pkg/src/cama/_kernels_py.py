"""Pure-Python cycle kernel; the fallback when the compiled extension is absent.

Both backends implement the same contract, see ``kernels.run_cycles``.
"""

from __future__ import annotations

import numpy as np


def run_cycles(data, enc, col_code, st_ptr, st_cols, invert, report, start_data, start_all,
               succ_ptr, succ_idx, st_tile, en_w, st_unit, row_w, send, placed_en,
               n_tiles, pipelined):
    n = len(data)
    S = len(invert)
    ncyc = n + 1 if (pipelined and n) else n
    tr_en = np.zeros((ncyc, n_tiles, 2), dtype=np.int32)
    tr_match = np.zeros((ncyc, n_tiles), dtype=np.int32)
    tr_rows = np.zeros((ncyc, n_tiles, 2), dtype=np.int32)
    tr_send = np.zeros((ncyc, n_tiles), dtype=np.int32)
    tr_rep = np.zeros(ncyc, dtype=np.int32)
    rep_cycle: list[int] = []
    rep_state: list[int] = []

    codes = [int(c) for c in col_code]
    ptr = [int(x) for x in st_ptr]
    cols = [int(x) for x in st_cols]
    inv = [bool(x) for x in invert]
    rep = [bool(x) for x in report]
    sptr = [int(x) for x in succ_ptr]
    sidx = [int(x) for x in succ_idx]
    tile = [int(x) for x in st_tile]
    unit = [int(x) for x in st_unit]
    roww = [int(x) for x in row_w]
    snd = [int(x) for x in send]
    ew = [(int(a), int(b)) for a, b in en_w]
    always = [s for s in range(S) if start_all[s]]
    enabled = sorted(set(always) | {s for s in range(S) if start_data[s]})

    def raw_match(s: int, code: int) -> bool:
        for k in range(ptr[s], ptr[s + 1]):
            if codes[cols[k]] & ~code == 0:
                return True
        return False

    def fire(s: int, cyc: int, sym_idx: int, nxt: set) -> None:
        t = tile[s]
        tr_rows[cyc, t, unit[s]] += roww[s]
        tr_send[cyc, t] += snd[s]
        if rep[s]:
            rep_cycle.append(sym_idx)
            rep_state.append(s)
            tr_rep[cyc] += 1
        for k in range(sptr[s], sptr[s + 1]):
            nxt.add(sidx[k])

    if not pipelined:
        for cyc in range(n):
            code = int(enc[data[cyc]])
            nxt = set(always)
            for s in enabled:
                t = tile[s]
                tr_en[cyc, t, 0] += ew[s][0]
                tr_en[cyc, t, 1] += ew[s][1]
                if raw_match(s, code) != inv[s]:
                    tr_match[cyc, t] += 1
                    fire(s, cyc, cyc, nxt)
            enabled = sorted(nxt)
    else:
        match_reg = [False] * S
        for cyc in range(ncyc):
            if cyc >= 1:
                nxt = set(always)
                for s in enabled:
                    if match_reg[s]:
                        fire(s, cyc, cyc - 1, nxt)
                enabled = sorted(nxt)
            if cyc < n:
                code = int(enc[data[cyc]])
                tr_en[cyc] = placed_en
                for s in range(S):
                    m = raw_match(s, code) != inv[s]
                    match_reg[s] = m
                    if m:
                        tr_match[cyc, tile[s]] += 1

    return (np.asarray(rep_cycle, dtype=np.int64), np.asarray(rep_state, dtype=np.int64),
            tr_en, tr_match, tr_rows, tr_send, tr_rep)
