# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled step loop.

Must stay bit-identical to ``giftsim._kernel_py.run_plan``: same arithmetic,
same accumulation order, same halting rules.  The build disables
floating-point contraction for exactly that reason.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF MODE_HYR = 0

DEF HALT_MAX_STEPS = 0
DEF HALT_NO_POSITIVE_YIELD = 1
DEF HALT_FIXED_POINT = 2


def run_plan(
    int mode,
    int n_pairs,
    cnp.ndarray init_balance,
    cnp.ndarray state_offer_start,
    cnp.ndarray offer_count,
    cnp.ndarray state_cand_start,
    cnp.ndarray cand_pair,
    cnp.ndarray cand_sign,
    cnp.ndarray cand_a,
    cnp.ndarray cand_b,
    cnp.ndarray cand_sslot,
    cnp.ndarray cand_dslot,
    cnp.ndarray state_forced_start,
    cnp.ndarray forced_cand,
    cnp.ndarray forced_count,
    cnp.ndarray prefix_sched,
    cnp.ndarray cycle_sched,
    long long max_steps,
):
    cdef double[::1] stored = np.array(init_balance, dtype=np.float64)
    cdef cnp.int32_t[::1] v_state_offer_start = np.ascontiguousarray(state_offer_start, dtype=np.int32)
    cdef cnp.int32_t[::1] v_offer_count = np.ascontiguousarray(offer_count, dtype=np.int32)
    cdef cnp.int32_t[::1] v_state_cand_start = np.ascontiguousarray(state_cand_start, dtype=np.int32)
    cdef cnp.int32_t[::1] v_cand_pair = np.ascontiguousarray(cand_pair, dtype=np.int32)
    cdef double[::1] v_cand_sign = np.ascontiguousarray(cand_sign, dtype=np.float64)
    cdef double[::1] v_cand_a = np.ascontiguousarray(cand_a, dtype=np.float64)
    cdef double[::1] v_cand_b = np.ascontiguousarray(cand_b, dtype=np.float64)
    cdef cnp.int32_t[::1] v_cand_sslot = np.ascontiguousarray(cand_sslot, dtype=np.int32)
    cdef cnp.int32_t[::1] v_cand_dslot = np.ascontiguousarray(cand_dslot, dtype=np.int32)
    cdef cnp.int32_t[::1] v_state_forced_start = np.ascontiguousarray(state_forced_start, dtype=np.int32)
    cdef cnp.int32_t[::1] v_forced_cand = np.ascontiguousarray(forced_cand, dtype=np.int32)
    cdef cnp.int32_t[::1] v_forced_count = np.ascontiguousarray(forced_count, dtype=np.int32)
    cdef cnp.int32_t[::1] v_prefix_sched = np.ascontiguousarray(prefix_sched, dtype=np.int32)
    cdef cnp.int32_t[::1] v_cycle_sched = np.ascontiguousarray(cycle_sched, dtype=np.int32)

    cdef Py_ssize_t n_prefix = v_prefix_sched.shape[0]
    cdef Py_ssize_t cycle_len = v_cycle_sched.shape[0]
    cdef Py_ssize_t n_states = v_state_cand_start.shape[0] - 1

    cdef Py_ssize_t max_ncand = 0, max_nslots = 0, s
    for s in range(n_states):
        if v_state_cand_start[s + 1] - v_state_cand_start[s] > max_ncand:
            max_ncand = v_state_cand_start[s + 1] - v_state_cand_start[s]
        if v_state_offer_start[s + 1] - v_state_offer_start[s] > max_nslots:
            max_nslots = v_state_offer_start[s + 1] - v_state_offer_start[s]

    cdef double[::1] ys = np.zeros(max_ncand if max_ncand else 1, dtype=np.float64)
    cdef cnp.int32_t[::1] order = np.zeros(max_ncand if max_ncand else 1, dtype=np.int32)
    cdef cnp.int32_t[::1] taken = np.zeros(max_ncand if max_ncand else 1, dtype=np.int32)
    cdef cnp.int32_t[::1] rem = np.zeros(max_nslots if max_nslots else 1, dtype=np.int32)
    cdef double[::1] delta = np.zeros(n_pairs if n_pairs else 1, dtype=np.float64)
    cdef cnp.uint8_t[::1] dirty = np.zeros(n_pairs if n_pairs else 1, dtype=np.uint8)

    balances_arr = np.zeros((max_steps, n_pairs), dtype=np.float64)
    cdef double[:, ::1] balances = balances_arr

    sel_offsets = [0]
    sel_cand = []
    sel_count = []
    sel_yield = []

    cdef int halt = HALT_MAX_STEPS
    cdef Py_ssize_t n_steps = 0
    cdef Py_ssize_t empty_run = 0

    cdef Py_ssize_t i, sid, cs, ce, ncand, nsel, loc, j, k, m, item, pos, ss, ds, os_, oe, fs, fe, f, p
    cdef cnp.int32_t n
    cdef double bal, y, yk
    cdef bint same

    for i in range(max_steps):
        if i < n_prefix:
            sid = v_prefix_sched[i]
        else:
            sid = v_cycle_sched[(i - n_prefix) % cycle_len]
        cs = v_state_cand_start[sid]
        ce = v_state_cand_start[sid + 1]
        nsel = 0

        if mode == MODE_HYR:
            ncand = ce - cs
            for loc in range(ncand):
                j = cs + loc
                bal = v_cand_sign[j] * stored[v_cand_pair[j]]
                y = -v_cand_a[j] * bal + v_cand_b[j]
                if y <= 0.0:
                    y = 0.0
                ys[loc] = y
            # stable insertion sort, descending yield; ties keep candidate order
            for k in range(ncand):
                order[k] = <cnp.int32_t> k
            for k in range(1, ncand):
                item = order[k]
                yk = ys[item]
                m = k - 1
                while m >= 0 and ys[order[m]] < yk:
                    order[m + 1] = order[m]
                    m -= 1
                order[m + 1] = <cnp.int32_t> item
            os_ = v_state_offer_start[sid]
            oe = v_state_offer_start[sid + 1]
            for k in range(oe - os_):
                rem[k] = v_offer_count[os_ + k]
            for loc in range(ncand):
                taken[loc] = 0
            for pos in range(ncand):
                loc = order[pos]
                if ys[loc] <= 0.0:
                    break
                j = cs + loc
                ss = v_cand_sslot[j]
                ds = v_cand_dslot[j]
                n = rem[ss] if rem[ss] < rem[ds] else rem[ds]
                if n > 0:
                    rem[ss] -= n
                    rem[ds] -= n
                    taken[loc] = n
            for loc in range(ncand):
                n = taken[loc]
                if n:
                    j = cs + loc
                    p = v_cand_pair[j]
                    delta[p] += v_cand_sign[j] * ys[loc] * n
                    dirty[p] = 1
                    sel_cand.append(j)
                    sel_count.append(n)
                    sel_yield.append(ys[loc])
                    nsel += 1
        else:
            fs = v_state_forced_start[sid]
            fe = v_state_forced_start[sid + 1]
            for f in range(fs, fe):
                j = v_forced_cand[f]
                n = v_forced_count[f]
                p = v_cand_pair[j]
                bal = v_cand_sign[j] * stored[p]
                y = -v_cand_a[j] * bal + v_cand_b[j]
                if y <= 0.0:
                    y = 0.0
                delta[p] += v_cand_sign[j] * y * n
                dirty[p] = 1
                sel_cand.append(j)
                sel_count.append(n)
                sel_yield.append(y)
                nsel += 1

        for p in range(n_pairs):
            if dirty[p]:
                stored[p] += delta[p]
                delta[p] = 0.0
                dirty[p] = 0

        sel_offsets.append(len(sel_cand))
        for p in range(n_pairs):
            balances[i, p] = stored[p]
        n_steps = i + 1

        if nsel == 0:
            empty_run = empty_run + 1 if i >= n_prefix else 0
        else:
            empty_run = 0

        if mode == MODE_HYR:
            if empty_run >= cycle_len:
                halt = HALT_NO_POSITIVE_YIELD
                break
            # fixed point needs a same-phase predecessor row: step i-cycle_len
            # must exist and step i-cycle_len+1 must already lie in the cycle
            if i >= cycle_len and i >= n_prefix + cycle_len - 1:
                same = True
                for p in range(n_pairs):
                    if balances[i, p] != balances[i - cycle_len, p]:
                        same = False
                        break
                if same:
                    halt = HALT_FIXED_POINT
                    break

    return (
        int(n_steps),
        halt,
        np.asarray(sel_offsets, dtype=np.int64),
        np.asarray(sel_cand, dtype=np.int32),
        np.asarray(sel_count, dtype=np.int32),
        np.asarray(sel_yield, dtype=np.float64),
        balances_arr[:n_steps].copy(),
    )
