"""Compilation of a scenario into the flat arrays the step-loop kernels consume.

Entities, goods, pairs and per-state candidates are indexed in sorted order,
so the compiled run replays the reference semantics bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .choice import SelectionMode, _constructible, forced_selection
from .core import Transaction, demand, supply
from .credit import _pair_key

if TYPE_CHECKING:
    from .engine import Scenario

MODE_HYR = 0
MODE_FORCE_ALL = 1

HALT_MAX_STEPS = 0
HALT_NO_POSITIVE_YIELD = 1
HALT_FIXED_POINT = 2


@dataclass
class CompiledPlan:
    mode_code: int
    n_pairs: int
    pair_keys: list[tuple[str, str]]
    pair_index: dict[tuple[str, str], int]
    init_balance: np.ndarray
    state_offer_start: np.ndarray
    offer_count: np.ndarray
    state_cand_start: np.ndarray
    cand_pair: np.ndarray
    cand_sign: np.ndarray
    cand_a: np.ndarray
    cand_b: np.ndarray
    cand_sslot: np.ndarray
    cand_dslot: np.ndarray
    state_forced_start: np.ndarray
    forced_cand: np.ndarray
    forced_count: np.ndarray
    prefix_sched: np.ndarray
    cycle_sched: np.ndarray
    cand_txns: list[Transaction]

    def kernel_args(self, max_steps: int) -> tuple:
        return (
            self.mode_code,
            self.n_pairs,
            self.init_balance,
            self.state_offer_start,
            self.offer_count,
            self.state_cand_start,
            self.cand_pair,
            self.cand_sign,
            self.cand_a,
            self.cand_b,
            self.cand_sslot,
            self.cand_dslot,
            self.state_forced_start,
            self.forced_cand,
            self.forced_count,
            self.prefix_sched,
            self.cycle_sched,
            max_steps,
        )


def compile_plan(scenario: Scenario) -> CompiledPlan:
    states = list(scenario.states.prefix) + list(scenario.states.cycle)
    curves = scenario.curves
    force_all = scenario.mode is SelectionMode.FORCE_ALL

    per_state_txns = [_constructible(state) for state in states]

    pair_set: set[tuple[str, str]] = set()
    for txns in per_state_txns:
        for txn in txns:
            curves.curve_for(txn)  # fail fast on uncovered pairings
            key, _ = _pair_key(txn.supplier, txn.recipient)
            pair_set.add(key)
    for key, _value in scenario.initial_balances.items():
        pair_set.add(key)
    pair_keys = sorted(pair_set)
    pair_index = {key: idx for idx, key in enumerate(pair_keys)}

    init_balance = np.zeros(len(pair_keys), dtype=np.float64)
    for key, value in scenario.initial_balances.items():
        init_balance[pair_index[key]] = value

    state_offer_start = [0]
    offer_count: list[int] = []
    state_cand_start = [0]
    cand_pair: list[int] = []
    cand_sign: list[float] = []
    cand_a: list[float] = []
    cand_b: list[float] = []
    cand_sslot: list[int] = []
    cand_dslot: list[int] = []
    state_forced_start = [0]
    forced_cand: list[int] = []
    forced_count: list[int] = []
    cand_txns: list[Transaction] = []

    for state, txns in zip(states, per_state_txns):
        slots = sorted(state.offers.items())
        slot_index = {offer: loc for loc, (offer, _) in enumerate(slots)}
        offer_count.extend(count for _, count in slots)
        state_offer_start.append(len(offer_count))

        cand_base = len(cand_txns)
        local_index = {}
        for loc, txn in enumerate(txns):
            key, sign = _pair_key(txn.supplier, txn.recipient)
            curve = curves.curve_for(txn)
            cand_pair.append(pair_index[key])
            cand_sign.append(sign)
            cand_a.append(curve.coefficient)
            cand_b.append(curve.nominal)
            cand_sslot.append(slot_index[supply(txn.supplier, txn.good)])
            cand_dslot.append(slot_index[demand(txn.recipient, txn.good)])
            cand_txns.append(txn)
            local_index[txn] = loc
        state_cand_start.append(len(cand_txns))

        if force_all:
            selected = forced_selection(state)
            for txn, count in sorted(selected.items()):
                forced_cand.append(cand_base + local_index[txn])
                forced_count.append(count)
        state_forced_start.append(len(forced_cand))

    n_prefix = len(scenario.states.prefix)
    prefix_sched = np.arange(n_prefix, dtype=np.int32)
    cycle_sched = np.arange(n_prefix, len(states), dtype=np.int32)

    return CompiledPlan(
        mode_code=MODE_FORCE_ALL if force_all else MODE_HYR,
        n_pairs=len(pair_keys),
        pair_keys=pair_keys,
        pair_index=pair_index,
        init_balance=init_balance,
        state_offer_start=np.asarray(state_offer_start, dtype=np.int32),
        offer_count=np.asarray(offer_count, dtype=np.int32),
        state_cand_start=np.asarray(state_cand_start, dtype=np.int32),
        cand_pair=np.asarray(cand_pair, dtype=np.int32),
        cand_sign=np.asarray(cand_sign, dtype=np.float64),
        cand_a=np.asarray(cand_a, dtype=np.float64),
        cand_b=np.asarray(cand_b, dtype=np.float64),
        cand_sslot=np.asarray(cand_sslot, dtype=np.int32),
        cand_dslot=np.asarray(cand_dslot, dtype=np.int32),
        state_forced_start=np.asarray(state_forced_start, dtype=np.int32),
        forced_cand=np.asarray(forced_cand, dtype=np.int32),
        forced_count=np.asarray(forced_count, dtype=np.int32),
        prefix_sched=prefix_sched,
        cycle_sched=cycle_sched,
        cand_txns=cand_txns,
    )
