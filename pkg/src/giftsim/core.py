"""Value types for moneyless markets: multisets, offers, states, transactions.

Everything here is immutable and totally ordered, so iteration over
entities, goods and offers is deterministic and whole runs are
bit-reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Generic, Iterable, Iterator, Mapping, TypeVar

if TYPE_CHECKING:
    from .credit import Ledger

EntityId = str
GoodId = str

T = TypeVar("T")


class Multiset(Generic[T]):
    """Immutable finite multiset: an unordered collection with occurrence counts.

    Stored occurrences are positive; absent elements have occurrence zero.
    ``len`` counts occurrences, iteration visits distinct elements.
    """

    __slots__ = ("_counts", "_hash")

    def __init__(self, items: Iterable[T] | Mapping[T, int] = ()) -> None:
        counts: dict[T, int] = {}
        if isinstance(items, Mapping):
            for element, count in items.items():
                if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                    raise ValueError(f"occurrence count must be a non-negative integer, got {count!r}")
                if count:
                    counts[element] = counts.get(element, 0) + count
        else:
            for element in items:
                counts[element] = counts.get(element, 0) + 1
        self._counts = counts
        self._hash: int | None = None

    def count(self, element: T) -> int:
        return self._counts.get(element, 0)

    def items(self) -> Iterable[tuple[T, int]]:
        """(element, occurrence) pairs for every stored element."""
        return self._counts.items()

    def elements(self) -> Iterator[T]:
        """Every element, repeated once per occurrence."""
        for element, count in self._counts.items():
            for _ in range(count):
                yield element

    def union(self, other: Multiset[T]) -> Multiset[T]:
        """Occurrence-additive union: occ(K∪L, e) = occ(K, e) + occ(L, e)."""
        counts = dict(self._counts)
        for element, count in other._counts.items():
            counts[element] = counts.get(element, 0) + count
        return Multiset(counts)

    def issubset(self, other: Multiset[T]) -> bool:
        """True iff every element occurs at most as often as in ``other``."""
        return all(count <= other._counts.get(element, 0) for element, count in self._counts.items())

    def __getitem__(self, element: T) -> int:
        return self._counts.get(element, 0)

    def __contains__(self, element: object) -> bool:
        return element in self._counts

    def __iter__(self) -> Iterator[T]:
        return iter(self._counts)

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Multiset):
            return self._counts == other._counts
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{element!r}: {count}" for element, count in sorted(self._counts.items(), key=repr))
        return f"Multiset({{{inner}}})"


class OfferKind(enum.IntEnum):
    SUPPLY = 0
    DEMAND = 1


@dataclass(frozen=True, order=True)
class Offer:
    """A standing offer: an entity's willingness to give or to accept a good."""

    kind: OfferKind
    entity: EntityId
    good: GoodId

    def __post_init__(self) -> None:
        if not self.entity:
            raise ValueError("offer entity must be non-empty")
        if not self.good:
            raise ValueError("offer good must be non-empty")


def supply(entity: EntityId, good: GoodId) -> Offer:
    return Offer(OfferKind.SUPPLY, entity, good)


def demand(entity: EntityId, good: GoodId) -> Offer:
    return Offer(OfferKind.DEMAND, entity, good)


@dataclass(frozen=True)
class State:
    """One step's market: the multiset of offers available at that step."""

    offers: Multiset[Offer]

    @classmethod
    def of(cls, *offers: Offer) -> State:
        return cls(Multiset(offers))


@dataclass(frozen=True, order=True)
class Transaction:
    """A matched pair of offers moving one unit of a good from supplier to recipient.

    Field order (supplier, good, recipient) doubles as the deterministic
    tie-break order used wherever transactions must be ranked.
    """

    supplier: EntityId
    good: GoodId
    recipient: EntityId

    def __post_init__(self) -> None:
        if not self.supplier or not self.good or not self.recipient:
            raise ValueError("transaction fields must be non-empty")
        if self.supplier == self.recipient:
            raise ValueError(f"self-gift rejected: {self.supplier!r} cannot be its own recipient")

    @property
    def offers(self) -> tuple[Offer, Offer]:
        """The supply and demand offer one occurrence of this transaction consumes."""
        return (supply(self.supplier, self.good), demand(self.recipient, self.good))

    def involves(self, entity: EntityId) -> bool:
        return entity == self.supplier or entity == self.recipient

    def __str__(self) -> str:
        return f"{self.supplier}>{self.good}>{self.recipient}"


TransactionSet = Multiset[Transaction]


def footprint(transactions: TransactionSet) -> Multiset[Offer]:
    """Offers consumed by a transaction multiset: one supply and one demand per occurrence."""
    counts: dict[Offer, int] = {}
    for txn, n in transactions.items():
        sup, dem = txn.offers
        counts[sup] = counts.get(sup, 0) + n
        counts[dem] = counts.get(dem, 0) + n
    return Multiset(counts)


def is_admissible(transactions: TransactionSet, state: State) -> bool:
    """True iff the state caters for every offer the transactions consume."""
    return footprint(transactions).issubset(state.offers)


@dataclass(frozen=True, eq=False)
class TraceStep:
    """One recorded step of a run.

    ``yields`` holds each selected transaction's supplier yield as evaluated
    on the ledger in force when the step began; ``balances_after`` is the
    ledger once all of the step's shifts have settled.
    """

    index: int
    selected: TransactionSet
    yields: Mapping[Transaction, float]
    balances_after: Ledger
