# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cycle kernel; same contract as the pure-Python fallback."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint32_t, int32_t, int64_t

cnp.import_array()


cdef inline bint _raw_match(Py_ssize_t s, uint32_t code, const int32_t[:] ptr,
                            const int32_t[:] cols, const uint32_t[:] codes) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(ptr[s], ptr[s + 1]):
        if codes[cols[k]] & ~code == 0:
            return True
    return False


def run_cycles(const int64_t[:] data, const uint32_t[:] enc, const uint32_t[:] col_code,
               const int32_t[:] st_ptr, const int32_t[:] st_cols, const uint8_t[:] invert,
               const uint8_t[:] report, const uint8_t[:] start_data, const uint8_t[:] start_all,
               const int32_t[:] succ_ptr, const int32_t[:] succ_idx, const int32_t[:] st_tile,
               const int32_t[:, :] en_w, const int32_t[:] st_unit, const int32_t[:] row_w,
               const uint8_t[:] send, const int32_t[:, :] placed_en, Py_ssize_t n_tiles,
               bint pipelined):
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t S = invert.shape[0]
    cdef Py_ssize_t ncyc = n + 1 if (pipelined and n) else n
    tr_en_a = np.zeros((ncyc, n_tiles, 2), dtype=np.int32)
    tr_match_a = np.zeros((ncyc, n_tiles), dtype=np.int32)
    tr_rows_a = np.zeros((ncyc, n_tiles, 2), dtype=np.int32)
    tr_send_a = np.zeros((ncyc, n_tiles), dtype=np.int32)
    tr_rep_a = np.zeros(ncyc, dtype=np.int32)
    cdef int32_t[:, :, :] tr_en = tr_en_a
    cdef int32_t[:, :] tr_match = tr_match_a
    cdef int32_t[:, :, :] tr_rows = tr_rows_a
    cdef int32_t[:, :] tr_send = tr_send_a
    cdef int32_t[:] tr_rep = tr_rep_a

    en_a = np.zeros(S, dtype=np.uint8)
    nxt_a = np.zeros(S, dtype=np.uint8)
    reg_a = np.zeros(S, dtype=np.uint8)
    cdef uint8_t[:] en = en_a
    cdef uint8_t[:] nxt = nxt_a
    cdef uint8_t[:] reg = reg_a
    cdef uint8_t[:] tmp
    rep_cycle = []
    rep_state = []

    cdef Py_ssize_t cyc, s, k, t, sym_idx
    cdef uint32_t code
    cdef bint m

    for s in range(S):
        en[s] = start_data[s] | start_all[s]

    for cyc in range(ncyc):
        if pipelined:
            if cyc >= 1:
                for s in range(S):
                    nxt[s] = start_all[s]
                for s in range(S):
                    if en[s] and reg[s]:
                        t = st_tile[s]
                        tr_rows[cyc, t, st_unit[s]] += row_w[s]
                        tr_send[cyc, t] += send[s]
                        if report[s]:
                            rep_cycle.append(cyc - 1)
                            rep_state.append(s)
                            tr_rep[cyc] += 1
                        for k in range(succ_ptr[s], succ_ptr[s + 1]):
                            nxt[succ_idx[k]] = 1
                tmp = en
                en = nxt
                nxt = tmp
            if cyc < n:
                code = enc[data[cyc]]
                for t in range(n_tiles):
                    tr_en[cyc, t, 0] = placed_en[t, 0]
                    tr_en[cyc, t, 1] = placed_en[t, 1]
                for s in range(S):
                    m = _raw_match(s, code, st_ptr, st_cols, col_code) != (invert[s] != 0)
                    reg[s] = m
                    if m:
                        tr_match[cyc, st_tile[s]] += 1
        else:
            code = enc[data[cyc]]
            for s in range(S):
                nxt[s] = start_all[s]
            for s in range(S):
                if not en[s]:
                    continue
                t = st_tile[s]
                tr_en[cyc, t, 0] += en_w[s, 0]
                tr_en[cyc, t, 1] += en_w[s, 1]
                if _raw_match(s, code, st_ptr, st_cols, col_code) != (invert[s] != 0):
                    tr_match[cyc, t] += 1
                    tr_rows[cyc, t, st_unit[s]] += row_w[s]
                    tr_send[cyc, t] += send[s]
                    if report[s]:
                        rep_cycle.append(cyc)
                        rep_state.append(s)
                        tr_rep[cyc] += 1
                    for k in range(succ_ptr[s], succ_ptr[s + 1]):
                        nxt[succ_idx[k]] = 1
            tmp = en
            en = nxt
            nxt = tmp

    return (np.asarray(rep_cycle, dtype=np.int64), np.asarray(rep_state, dtype=np.int64),
            tr_en_a, tr_match_a, tr_rows_a, tr_send_a, tr_rep_a)
