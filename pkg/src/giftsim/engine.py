"""Scenario construction and the standard-model run loop.

A run iterates an eventually-periodic sequence of states, selects each
step's transactions (greedy highest-yield or forced), settles them against
the ledger, and records everything in a Trace.  Runs are strictly
sequential internally but independent of each other, and fully
deterministic: same scenario, same trace, bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernel_for
from ._plan import HALT_FIXED_POINT, HALT_MAX_STEPS, HALT_NO_POSITIVE_YIELD, CompiledPlan, compile_plan
from .choice import SelectionMode, forced_selection, hyr_select
from .core import (
    EntityId,
    GoodId,
    Multiset,
    State,
    TraceStep,
    Transaction,
    TransactionSet,
    demand,
    supply,
)
from .credit import CurveTable, Ledger, YieldCurve, apply_transactions, transaction_yield


class ScenarioError(ValueError):
    """The scenario is structurally invalid."""


class HaltReason(enum.Enum):
    MAX_STEPS = "max_steps"
    NO_POSITIVE_YIELD = "no_positive_yield"
    FIXED_POINT = "fixed_point"


_HALT_BY_CODE = {
    HALT_MAX_STEPS: HaltReason.MAX_STEPS,
    HALT_NO_POSITIVE_YIELD: HaltReason.NO_POSITIVE_YIELD,
    HALT_FIXED_POINT: HaltReason.FIXED_POINT,
}


@dataclass(frozen=True)
class StateSequence:
    """Eventually periodic state sequence: a finite prefix, then a cycle forever.

    The cycle length is the recurrence dimension as configured (it is not
    minimised: a cycle listing the same state twice has dimension 2).
    """

    cycle: tuple[State, ...]
    prefix: tuple[State, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "cycle", tuple(self.cycle))
        object.__setattr__(self, "prefix", tuple(self.prefix))
        if not self.cycle:
            raise ScenarioError("state cycle must contain at least one state")

    @property
    def dimension(self) -> int:
        return len(self.cycle)

    def state_at(self, index: int) -> State:
        """State at a 1-based step index."""
        if index < 1:
            raise IndexError(f"step index is 1-based, got {index}")
        if index <= len(self.prefix):
            return self.prefix[index - 1]
        return self.cycle[(index - len(self.prefix) - 1) % len(self.cycle)]


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs: participants, curves, states, and limits."""

    entities: tuple[EntityId, ...]
    goods: tuple[GoodId, ...]
    curves: CurveTable
    states: StateSequence
    max_steps: int
    mode: SelectionMode = SelectionMode.HYR
    initial_balances: Ledger = field(default_factory=Ledger)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entities", tuple(sorted(self.entities)))
        object.__setattr__(self, "goods", tuple(sorted(self.goods)))
        if not self.entities or len(set(self.entities)) != len(self.entities):
            raise ScenarioError("entities must be non-empty and unique")
        if not self.goods or len(set(self.goods)) != len(self.goods):
            raise ScenarioError("goods must be non-empty and unique")
        if not isinstance(self.max_steps, int) or self.max_steps < 1:
            raise ScenarioError(f"max_steps must be a positive integer, got {self.max_steps!r}")
        known_entities = set(self.entities)
        known_goods = set(self.goods)
        for pos, state in enumerate(self.states.prefix + self.states.cycle):
            for offer in state.offers:
                if offer.entity not in known_entities:
                    raise ScenarioError(f"state {pos + 1} references undeclared entity {offer.entity!r}")
                if offer.good not in known_goods:
                    raise ScenarioError(f"state {pos + 1} references undeclared good {offer.good!r}")
        for (sup, good, rec), _curve in self.curves.items():
            if sup not in known_entities or rec not in known_entities:
                raise ScenarioError(f"curve {sup}>{good}>{rec} references undeclared entities")
            if good not in known_goods:
                raise ScenarioError(f"curve {sup}>{good}>{rec} references undeclared good")
        for (p, q), _value in self.initial_balances.items():
            if p not in known_entities or q not in known_entities:
                raise ScenarioError(f"initial balance for undeclared pair ({p!r}, {q!r})")

    def with_max_steps(self, max_steps: int) -> Scenario:
        return replace(self, max_steps=max_steps)


def step(
    state: State,
    ledger: Ledger,
    curves: CurveTable,
    mode: SelectionMode = SelectionMode.HYR,
    index: int = 1,
) -> tuple[TransactionSet, Ledger, TraceStep]:
    """Run a single step: select, settle, record.

    Yields are evaluated on the opening ledger; the returned TraceStep holds
    them along with the closing balances.
    """
    if mode is SelectionMode.HYR:
        selected = hyr_select(state, ledger, curves)
    else:
        selected = forced_selection(state)
    yields = {
        txn: transaction_yield(txn, ledger, curves, txn.supplier)
        for txn, _count in sorted(selected.items())
    }
    new_ledger = apply_transactions(ledger, selected, curves)
    return selected, new_ledger, TraceStep(index, selected, yields, new_ledger)


class Trace:
    """Recorded run: selections, supplier yields and balances, step by step.

    Stored in columnar arrays; ``steps`` builds TraceStep views on demand.
    Query helpers hand analytics the columns directly so trace-wide scans
    stay cheap even for very long runs.
    """

    def __init__(
        self,
        scenario: Scenario,
        plan: CompiledPlan,
        halt_reason: HaltReason,
        sel_offsets: np.ndarray,
        sel_cand: np.ndarray,
        sel_count: np.ndarray,
        sel_yield: np.ndarray,
        balances: np.ndarray,
    ) -> None:
        self.scenario = scenario
        self.halt_reason = halt_reason
        self._plan = plan
        self._sel_offsets = sel_offsets
        self._sel_cand = sel_cand
        self._sel_count = sel_count
        self._sel_yield = sel_yield
        self._balances = balances
        self._steps: list[TraceStep] | None = None

    @property
    def n_steps(self) -> int:
        return self._balances.shape[0]

    def __len__(self) -> int:
        return self.n_steps

    @property
    def steps(self) -> list[TraceStep]:
        if self._steps is None:
            self._steps = [
                TraceStep(i, self.selected_at(i), self.yields_at(i), self.ledger_after(i))
                for i in range(1, self.n_steps + 1)
            ]
        return self._steps

    def step_selection(self, index: int) -> list[tuple[Transaction, int, float]]:
        """Selected (transaction, count, supplier yield) rows of a 1-based step."""
        if not 1 <= index <= self.n_steps:
            raise IndexError(f"step index out of range: {index}")
        lo = int(self._sel_offsets[index - 1])
        hi = int(self._sel_offsets[index])
        txns = self._plan.cand_txns
        return [
            (txns[int(self._sel_cand[k])], int(self._sel_count[k]), float(self._sel_yield[k]))
            for k in range(lo, hi)
        ]

    def selected_at(self, index: int) -> TransactionSet:
        return Multiset({txn: count for txn, count, _y in self.step_selection(index)})

    def yields_at(self, index: int) -> dict[Transaction, float]:
        return {txn: y for txn, _count, y in self.step_selection(index)}

    def ledger_after(self, index: int) -> Ledger:
        """Ledger after the 1-based step ``index``; index 0 is the initial ledger."""
        if index == 0:
            return self.scenario.initial_balances
        if not 1 <= index <= self.n_steps:
            raise IndexError(f"step index out of range: {index}")
        row = self._balances[index - 1]
        stored = {key: float(row[p]) for p, key in enumerate(self._plan.pair_keys)}
        return Ledger._from_stored(stored)

    def _pair_column(self, p: EntityId, q: EntityId) -> tuple[int, float]:
        from .credit import _pair_key

        key, sign = _pair_key(p, q)
        if key not in self._plan.pair_index:
            raise KeyError(f"pair {key} is not tracked by this trace")
        return self._plan.pair_index[key], sign

    def balances_after(self, p: EntityId, q: EntityId) -> np.ndarray:
        """A(p, q) after each step, as an array of length n_steps."""
        col, sign = self._pair_column(p, q)
        return sign * self._balances[:, col]

    def opening_balances(self, p: EntityId, q: EntityId) -> np.ndarray:
        """A(p, q) at the start of each step: the valuation-point abscissas."""
        col, sign = self._pair_column(p, q)
        series = np.empty(self.n_steps, dtype=np.float64)
        if self.n_steps:
            series[0] = self.scenario.initial_balances.balance(*self._plan.pair_keys[col]) * sign
            series[1:] = sign * self._balances[: self.n_steps - 1, col]
        return series

    def selection_step_counts(self, targets: Sequence[Transaction]) -> list[int]:
        """For each target, the number of steps whose selection contains it."""
        gids_by_txn: dict[Transaction, list[int]] = {}
        for gid, txn in enumerate(self._plan.cand_txns):
            gids_by_txn.setdefault(txn, []).append(gid)
        counts = []
        for target in targets:
            gids = gids_by_txn.get(target, [])
            if gids:
                counts.append(int(np.isin(self._sel_cand, gids).sum()))
            else:
                counts.append(0)
        return counts

    def selected_pairs(self) -> list[tuple[EntityId, EntityId]]:
        """Distinct unordered entity pairs that ever traded, sorted."""
        pairs = {
            self._plan.pair_keys[int(self._plan.cand_pair[int(gid)])]
            for gid in np.unique(self._sel_cand)
        }
        return sorted(pairs)


def run(scenario: Scenario, backend: str | None = None) -> Trace:
    """Execute the scenario and record its trace.

    ``backend`` picks the step-loop implementation ("compiled" or "python");
    None uses the best available.  Both produce bit-identical traces.

    The run stops at ``max_steps``, or earlier in highest-yield mode when the
    remaining sequence is purely cyclic and provably inert: either a full
    cycle selects nothing (no positive yield is left, and none can reappear
    since balances are frozen), or a full cycle reproduces the ledger
    bit-for-bit (the trajectory is exactly periodic from here on).
    """
    plan = compile_plan(scenario)
    kernel = kernel_for(backend)
    n_steps, halt_code, sel_offsets, sel_cand, sel_count, sel_yield, balances = kernel(
        *plan.kernel_args(scenario.max_steps)
    )
    return Trace(scenario, plan, _HALT_BY_CODE[halt_code], sel_offsets, sel_cand, sel_count, sel_yield, balances)


def _default_entities_goods(
    entities: Iterable[EntityId], goods: Iterable[GoodId]
) -> tuple[tuple[EntityId, ...], tuple[GoodId, ...]]:
    return tuple(sorted(set(entities))), tuple(sorted(set(goods)))


def make_repeated_gift(
    supplier_id: EntityId,
    recipient_id: EntityId,
    good: GoodId,
    curve: YieldCurve,
    *,
    max_steps: int = 50,
    initial_balances: Ledger | None = None,
    mode: SelectionMode = SelectionMode.FORCE_ALL,
) -> Scenario:
    """One supplier endlessly offering one good to one always-accepting recipient."""
    state = State.of(supply(supplier_id, good), demand(recipient_id, good))
    entities, goods = _default_entities_goods((supplier_id, recipient_id), (good,))
    return Scenario(
        entities=entities,
        goods=goods,
        curves=CurveTable({(supplier_id, good, recipient_id): curve}),
        states=StateSequence(cycle=(state,)),
        max_steps=max_steps,
        mode=mode,
        initial_balances=initial_balances or Ledger(),
    )


def make_multi_recipient(
    supplier_id: EntityId,
    good: GoodId,
    recipients: Sequence[tuple[EntityId, YieldCurve]],
    *,
    max_steps: int = 1000,
    initial_balances: Ledger | None = None,
) -> Scenario:
    """One supplier, one good, several always-accepting recipients, greedy choice."""
    if not recipients:
        raise ScenarioError("at least one recipient is required")
    offers = [supply(supplier_id, good)] + [demand(rec, good) for rec, _curve in recipients]
    curves = {(supplier_id, good, rec): curve for rec, curve in recipients}
    if len(curves) != len(recipients):
        raise ScenarioError("recipients must be distinct")
    entities, goods = _default_entities_goods(
        [supplier_id] + [rec for rec, _ in recipients], (good,)
    )
    return Scenario(
        entities=entities,
        goods=goods,
        curves=CurveTable(curves),
        states=StateSequence(cycle=(State.of(*offers),)),
        max_steps=max_steps,
        mode=SelectionMode.HYR,
        initial_balances=initial_balances or Ledger(),
    )


def make_alternating_trade(
    p: EntityId,
    q: EntityId,
    goods: tuple[GoodId, GoodId],
    curve_a: YieldCurve,
    curve_b: YieldCurve,
    *,
    ratio: tuple[int, int] = (1, 1),
    max_steps: int = 200,
    initial_balances: Ledger | None = None,
    mode: SelectionMode = SelectionMode.FORCE_ALL,
) -> Scenario:
    """Two entities trading two goods one at a time.

    ``p`` supplies ``goods[0]`` under ``curve_a``; ``q`` supplies ``goods[1]``
    under ``curve_b``.  A ratio of (m, n) produces a cycle of n states in
    which q supplies, followed by m states in which p supplies, so good a is
    offered m times for every n offers of good b.  Both demands stand in
    every state; only the scheduled supply can be matched.
    """
    good_a, good_b = goods
    m, n = ratio
    if m < 1 or n < 1:
        raise ScenarioError(f"ratio parts must be >= 1, got {ratio}")
    standing = (demand(q, good_a), demand(p, good_b))
    state_b = State.of(supply(q, good_b), *standing)
    state_a = State.of(supply(p, good_a), *standing)
    cycle = (state_b,) * n + (state_a,) * m
    entities, good_ids = _default_entities_goods((p, q), goods)
    return Scenario(
        entities=entities,
        goods=good_ids,
        curves=CurveTable({(p, good_a, q): curve_a, (q, good_b, p): curve_b}),
        states=StateSequence(cycle=cycle),
        max_steps=max_steps,
        mode=mode,
        initial_balances=initial_balances or Ledger(),
    )


def make_simultaneous_trade(
    p: EntityId,
    q: EntityId,
    goods: tuple[GoodId, GoodId],
    curve_a: YieldCurve,
    curve_b: YieldCurve,
    *,
    max_steps: int = 200,
    initial_balances: Ledger | None = None,
    mode: SelectionMode = SelectionMode.FORCE_ALL,
) -> Scenario:
    """Two entities trading two goods in the same state every step."""
    good_a, good_b = goods
    state = State.of(
        supply(p, good_a), demand(q, good_a), supply(q, good_b), demand(p, good_b)
    )
    entities, good_ids = _default_entities_goods((p, q), goods)
    return Scenario(
        entities=entities,
        goods=good_ids,
        curves=CurveTable({(p, good_a, q): curve_a, (q, good_b, p): curve_b}),
        states=StateSequence(cycle=(state,)),
        max_steps=max_steps,
        mode=mode,
        initial_balances=initial_balances or Ledger(),
    )
