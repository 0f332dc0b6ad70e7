"""Pure-Python step loop.

Fallback for environments without the compiled extension.  Mirrors
``giftsim._speedups.run_plan`` operation for operation; the two must stay
bit-identical (same arithmetic, same accumulation order).
"""

from __future__ import annotations

import numpy as np

from ._plan import (
    HALT_FIXED_POINT,
    HALT_MAX_STEPS,
    HALT_NO_POSITIVE_YIELD,
    MODE_HYR,
)


def run_plan(
    mode,
    n_pairs,
    init_balance,
    state_offer_start,
    offer_count,
    state_cand_start,
    cand_pair,
    cand_sign,
    cand_a,
    cand_b,
    cand_sslot,
    cand_dslot,
    state_forced_start,
    forced_cand,
    forced_count,
    prefix_sched,
    cycle_sched,
    max_steps,
):
    stored = [float(v) for v in init_balance]
    state_offer_start = [int(v) for v in state_offer_start]
    offer_count = [int(v) for v in offer_count]
    state_cand_start = [int(v) for v in state_cand_start]
    cand_pair = [int(v) for v in cand_pair]
    cand_sign = [float(v) for v in cand_sign]
    cand_a = [float(v) for v in cand_a]
    cand_b = [float(v) for v in cand_b]
    cand_sslot = [int(v) for v in cand_sslot]
    cand_dslot = [int(v) for v in cand_dslot]
    state_forced_start = [int(v) for v in state_forced_start]
    forced_cand = [int(v) for v in forced_cand]
    forced_count = [int(v) for v in forced_count]
    prefix_sched = [int(v) for v in prefix_sched]
    cycle_sched = [int(v) for v in cycle_sched]

    n_prefix = len(prefix_sched)
    cycle_len = len(cycle_sched)

    sel_offsets = [0]
    sel_cand: list[int] = []
    sel_count: list[int] = []
    sel_yield: list[float] = []
    balances: list[float] = []

    delta = [0.0] * n_pairs
    dirty = [False] * n_pairs

    halt = HALT_MAX_STEPS
    n_steps = 0
    empty_run = 0

    for i in range(max_steps):
        sid = prefix_sched[i] if i < n_prefix else cycle_sched[(i - n_prefix) % cycle_len]
        cs = state_cand_start[sid]
        ce = state_cand_start[sid + 1]
        nsel = 0

        if mode == MODE_HYR:
            ncand = ce - cs
            ys = [0.0] * ncand
            for loc in range(ncand):
                j = cs + loc
                bal = cand_sign[j] * stored[cand_pair[j]]
                y = -cand_a[j] * bal + cand_b[j]
                if y <= 0.0:
                    y = 0.0
                ys[loc] = y
            # stable insertion sort, descending yield; ties keep candidate order
            order = list(range(ncand))
            for k in range(1, ncand):
                item = order[k]
                yk = ys[item]
                m = k - 1
                while m >= 0 and ys[order[m]] < yk:
                    order[m + 1] = order[m]
                    m -= 1
                order[m + 1] = item
            os_ = state_offer_start[sid]
            oe = state_offer_start[sid + 1]
            rem = offer_count[os_:oe]
            taken = [0] * ncand
            for pos in range(ncand):
                loc = order[pos]
                if ys[loc] <= 0.0:
                    break
                j = cs + loc
                ss = cand_sslot[j]
                ds = cand_dslot[j]
                n = rem[ss] if rem[ss] < rem[ds] else rem[ds]
                if n > 0:
                    rem[ss] -= n
                    rem[ds] -= n
                    taken[loc] = n
            for loc in range(ncand):
                n = taken[loc]
                if n:
                    j = cs + loc
                    p = cand_pair[j]
                    delta[p] += cand_sign[j] * ys[loc] * n
                    dirty[p] = True
                    sel_cand.append(j)
                    sel_count.append(n)
                    sel_yield.append(ys[loc])
                    nsel += 1
        else:
            fs = state_forced_start[sid]
            fe = state_forced_start[sid + 1]
            for f in range(fs, fe):
                j = forced_cand[f]
                n = forced_count[f]
                p = cand_pair[j]
                bal = cand_sign[j] * stored[p]
                y = -cand_a[j] * bal + cand_b[j]
                if y <= 0.0:
                    y = 0.0
                delta[p] += cand_sign[j] * y * n
                dirty[p] = True
                sel_cand.append(j)
                sel_count.append(n)
                sel_yield.append(y)
                nsel += 1

        for p in range(n_pairs):
            if dirty[p]:
                stored[p] += delta[p]
                delta[p] = 0.0
                dirty[p] = False

        sel_offsets.append(len(sel_cand))
        balances.extend(stored)
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
                base_now = i * n_pairs
                base_prev = (i - cycle_len) * n_pairs
                same = True
                for p in range(n_pairs):
                    if balances[base_now + p] != balances[base_prev + p]:
                        same = False
                        break
                if same:
                    halt = HALT_FIXED_POINT
                    break

    return (
        n_steps,
        halt,
        np.asarray(sel_offsets, dtype=np.int64),
        np.asarray(sel_cand, dtype=np.int32),
        np.asarray(sel_count, dtype=np.int32),
        np.asarray(sel_yield, dtype=np.float64),
        np.asarray(balances, dtype=np.float64).reshape(n_steps, n_pairs),
    )
