"""Candidate enumeration and the per-step selection rules."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import Multiset, Offer, OfferKind, State, Transaction, TransactionSet
from .credit import CurveTable, Ledger, transaction_yield


class SelectionMode(enum.Enum):
    """How a step's transactions are chosen.

    HYR picks greedily by highest supplier yield; FORCE_ALL realises the
    state's unique maximal admissible multiset regardless of yields.
    """

    HYR = "hyr"
    FORCE_ALL = "force_all"


class AmbiguousStateError(ValueError):
    """Forced mode needs a unique maximal admissible multiset; this state has several."""


@dataclass(frozen=True)
class Candidate:
    """A constructible transaction and its supplier yield on the current ledger."""

    transaction: Transaction
    supplier_yield: float


def _constructible(state: State) -> list[Transaction]:
    """Distinct transactions the state can host, in (supplier, good, recipient) order."""
    supplies = sorted((o.entity, o.good) for o in state.offers if o.kind == OfferKind.SUPPLY)
    demands = sorted((o.entity, o.good) for o in state.offers if o.kind == OfferKind.DEMAND)
    return sorted(
        Transaction(sup_entity, good, dem_entity)
        for sup_entity, good in supplies
        for dem_entity, dem_good in demands
        if dem_good == good and dem_entity != sup_entity
    )


def enumerate_candidates(state: State, ledger: Ledger, curves: CurveTable) -> list[Candidate]:
    """All transactions constructible in the state, best first.

    Ordered by descending supplier yield; ties fall back to ascending
    (supplier, good, recipient).  Every constructible pairing must have a
    curve entry or MissingCurveError is raised.
    """
    candidates = [
        Candidate(txn, transaction_yield(txn, ledger, curves, txn.supplier))
        for txn in _constructible(state)
    ]
    candidates.sort(key=lambda c: c.supplier_yield, reverse=True)  # stable: ties keep lexicographic order
    return candidates


def hyr_select(state: State, ledger: Ledger, curves: CurveTable) -> TransactionSet:
    """Greedy highest-yield selection.

    Repeatedly takes the best candidate with strictly positive yield whose
    supply and demand offers are still unconsumed; yields stay fixed at the
    step's opening ledger.  Zero-yield candidates are never taken, so a
    saturated market selects nothing.  The result is admissible in ``state``.
    """
    candidates = enumerate_candidates(state, ledger, curves)
    remaining = dict(state.offers.items())
    taken: dict[Transaction, int] = {}
    while True:
        took = False
        for cand in candidates:
            if cand.supplier_yield <= 0.0:
                break  # sorted descending: nothing below is positive either
            sup_offer, dem_offer = cand.transaction.offers
            if remaining.get(sup_offer, 0) > 0 and remaining.get(dem_offer, 0) > 0:
                remaining[sup_offer] -= 1
                remaining[dem_offer] -= 1
                taken[cand.transaction] = taken.get(cand.transaction, 0) + 1
                took = True
                break
        if not took:
            return Multiset(taken)


def all_maximal_admissible(state: State) -> list[TransactionSet]:
    """Every admissible transaction multiset that no transaction can extend.

    Exponential in the worst case; meant for the small states used by
    forced-selection mode, where the result is checked for uniqueness.
    """
    txns = _constructible(state)
    offers_of = {t: t.offers for t in txns}

    def fits(t: Transaction, remaining: dict[Offer, int]) -> bool:
        sup_offer, dem_offer = offers_of[t]
        return remaining.get(sup_offer, 0) > 0 and remaining.get(dem_offer, 0) > 0

    found: dict[tuple, TransactionSet] = {}

    def search(start: int, remaining: dict[Offer, int], chosen: dict[Transaction, int]) -> None:
        if not any(fits(t, remaining) for t in txns):
            key = tuple(sorted(chosen.items()))
            found.setdefault(key, Multiset(dict(chosen)))
            return
        # Branch over indices >= start only: each multiset is then reached by
        # exactly one (non-decreasing) take sequence.
        for idx in range(start, len(txns)):
            t = txns[idx]
            if not fits(t, remaining):
                continue
            sup_offer, dem_offer = offers_of[t]
            remaining[sup_offer] -= 1
            remaining[dem_offer] -= 1
            chosen[t] = chosen.get(t, 0) + 1
            search(idx, remaining, chosen)
            chosen[t] -= 1
            if not chosen[t]:
                del chosen[t]
            remaining[sup_offer] += 1
            remaining[dem_offer] += 1

    search(0, dict(state.offers.items()), {})
    return [found[key] for key in sorted(found)]


def forced_selection(state: State) -> TransactionSet:
    """The unique maximal admissible multiset of the state.

    Used by FORCE_ALL mode, where the scenario asserts the traded set
    outright; a state whose offers pair ambiguously is a scenario error.
    """
    maximal = all_maximal_admissible(state)
    if len(maximal) != 1:
        raise AmbiguousStateError(
            f"state admits {len(maximal)} maximal transaction multisets; forced mode needs exactly one"
        )
    return maximal[0]
