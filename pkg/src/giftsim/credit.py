"""Yield curves, per-pairing curve tables, and the antisymmetric credit ledger."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .core import EntityId, GoodId, Transaction, TransactionSet


class MissingCurveError(KeyError):
    """No yield curve is configured for a (supplier, good, recipient) triple."""

    def __str__(self) -> str:  # KeyError repr-quotes its argument otherwise
        return self.args[0] if self.args else ""


@dataclass(frozen=True)
class YieldCurve:
    """Linear, zero-clamped yield curve: yield = max(0, -coefficient * balance + nominal).

    ``coefficient`` is the rate at which a supplier loses faith in eventual
    settlement as the counterparty's debt grows; ``nominal`` is the yield at
    a neutral (zero) balance.  Coefficients of 1 or more would drop the yield
    to zero in a single step and are rejected as invalid.
    """

    coefficient: float
    nominal: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "nominal", float(self.nominal))
        if not 0.0 <= self.coefficient < 1.0:
            raise ValueError(f"curve coefficient must satisfy 0 <= a < 1, got {self.coefficient}")
        if not self.nominal >= 0.0:
            raise ValueError(f"curve nominal must be >= 0, got {self.nominal}")

    def evaluate(self, balance: float) -> float:
        """Supplier yield at the given account balance, clamped at zero."""
        return max(0.0, -self.coefficient * balance + self.nominal)

    def limit_balance(self) -> float:
        """Balance approached under endless repetition of the same gift.

        This is the zero of the unclamped line; a constant curve
        (coefficient 0) never decays and has no finite limit.
        """
        if self.coefficient == 0.0:
            raise ValueError("constant curve (coefficient 0) has no finite limit balance")
        return self.nominal / self.coefficient


CurveKey = tuple[EntityId, GoodId, EntityId]


class CurveTable:
    """Immutable map from (supplier, good, recipient) to that pairing's yield curve.

    Curves are per-pairing and independent of one another: transacting with
    one recipient never moves the curve used with another.
    """

    __slots__ = ("_curves",)

    def __init__(self, curves: Mapping[CurveKey, YieldCurve] | None = None) -> None:
        table: dict[CurveKey, YieldCurve] = {}
        if curves:
            for (sup, good, rec), curve in curves.items():
                Transaction(sup, good, rec)  # validates ids, rejects self-pairings
                if not isinstance(curve, YieldCurve):
                    raise TypeError(f"expected YieldCurve for {(sup, good, rec)}, got {curve!r}")
                table[(sup, good, rec)] = curve
        self._curves = table

    def curve(self, supplier: EntityId, good: GoodId, recipient: EntityId) -> YieldCurve:
        try:
            return self._curves[(supplier, good, recipient)]
        except KeyError:
            raise MissingCurveError(f"no yield curve for {supplier}>{good}>{recipient}") from None

    def curve_for(self, txn: Transaction) -> YieldCurve:
        return self.curve(txn.supplier, txn.good, txn.recipient)

    def items(self) -> list[tuple[CurveKey, YieldCurve]]:
        return sorted(self._curves.items())

    def __contains__(self, key: CurveKey) -> bool:
        return key in self._curves

    def __len__(self) -> int:
        return len(self._curves)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, CurveTable):
            return self._curves == other._curves
        return NotImplemented

    def __repr__(self) -> str:
        return f"CurveTable({self._curves!r})"


def _pair_key(p: EntityId, q: EntityId) -> tuple[tuple[EntityId, EntityId], float]:
    """Canonical unordered pair key and the sign of (p, q) relative to it."""
    if p == q:
        raise ValueError(f"account balance of an entity with itself is undefined: {p!r}")
    if p < q:
        return (p, q), 1.0
    return (q, p), -1.0


class Ledger:
    """Antisymmetric pairwise account balances.

    A single number is stored per unordered entity pair, so
    A(P,Q) + A(Q,P) = 0 holds exactly by construction.  Pairs never touched
    read as zero.
    """

    __slots__ = ("_stored",)

    def __init__(self, balances: Mapping[tuple[EntityId, EntityId], float] | None = None) -> None:
        stored: dict[tuple[EntityId, EntityId], float] = {}
        if balances:
            for (p, q), value in balances.items():
                key, sign = _pair_key(p, q)
                if key in stored:
                    raise ValueError(f"balance for pair {key} given more than once")
                v = sign * float(value)
                stored[key] = v if v != 0.0 else 0.0
        self._stored = stored

    @classmethod
    def _from_stored(cls, stored: dict[tuple[EntityId, EntityId], float]) -> Ledger:
        ledger = cls.__new__(cls)
        ledger._stored = stored
        return ledger

    def balance(self, p: EntityId, q: EntityId) -> float:
        """A(p, q): what q owes p in credit units.  Exactly -A(q, p)."""
        key, sign = _pair_key(p, q)
        value = self._stored.get(key, 0.0)
        result = sign * value
        return result if result != 0.0 else 0.0

    def pairs(self) -> list[tuple[EntityId, EntityId]]:
        """Stored pairs (p, q) with p < q, sorted."""
        return sorted(self._stored)

    def items(self) -> list[tuple[tuple[EntityId, EntityId], float]]:
        return sorted(self._stored.items())

    def _nonzero(self) -> dict[tuple[EntityId, EntityId], float]:
        return {key: value for key, value in self._stored.items() if value != 0.0}

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Ledger):
            return self._nonzero() == other._nonzero()
        return NotImplemented

    def __repr__(self) -> str:
        return f"Ledger({dict(self.items())!r})"


def transaction_yield(
    txn: Transaction,
    ledger: Ledger,
    curves: CurveTable,
    viewpoint: EntityId,
) -> float:
    """Value of one occurrence of ``txn`` from ``viewpoint``'s perspective.

    The supplier sees the (non-negative) curve yield at the current balance,
    the recipient sees its exact negation, and anyone else sees zero, so the
    two involved viewpoints always sum to zero.
    """
    curve = curves.curve_for(txn)
    if viewpoint == txn.supplier:
        return curve.evaluate(ledger.balance(txn.supplier, txn.recipient))
    if viewpoint == txn.recipient:
        return -curve.evaluate(ledger.balance(txn.supplier, txn.recipient))
    return 0.0


def apply_transactions(ledger: Ledger, transactions: TransactionSet, curves: CurveTable) -> Ledger:
    """Settle one step's transactions and return the new ledger.

    Every yield is evaluated against the opening ledger and all shifts land
    at once: transactions within one step do not see each other's balance
    movements, so a crossed pair shifts the balance by exactly the
    difference of the two yields.
    """
    deltas: dict[tuple[EntityId, EntityId], float] = {}
    for txn, count in sorted(transactions.items()):
        curve = curves.curve_for(txn)
        y = curve.evaluate(ledger.balance(txn.supplier, txn.recipient))
        key, sign = _pair_key(txn.supplier, txn.recipient)
        deltas[key] = deltas.get(key, 0.0) + sign * y * count
    if not deltas:
        return ledger
    stored = dict(ledger._stored)
    for key in sorted(deltas):
        stored[key] = stored.get(key, 0.0) + deltas[key]
    return Ledger._from_stored(stored)
