"""Closed-form predictions and trace diagnostics.

Closed forms (ultimate distribution, intersection, canonical equilibrium,
contraction factor) use the unclamped lines; the trace-side estimators are
their empirical counterparts, so each prediction can be checked against a
simulated run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Transaction
from .credit import YieldCurve
from .engine import Trace


class AnalysisError(ValueError):
    """Requested analysis cannot be computed for this input."""


class InsufficientDataError(AnalysisError):
    """The trace is too short for the estimator."""


class AlreadyConvergedError(AnalysisError):
    """Balance differences are below resolution; there is nothing to estimate."""


class NoCycleError(AnalysisError):
    """No terminal cycle was found within tolerance."""


class NoSelectionError(AnalysisError):
    """None of the targets was ever selected."""


def ucr(coefficient: float) -> float:
    """Ultimate credit ratio -1/ln(1-a): the long-run preference weight of a pairing.

    Defined up to a positive constant (the log base cancels out of every
    share); the natural log is used here.  A zero coefficient never decays
    and a coefficient of 1 or more dies in one step, so both are rejected.
    """
    if not 0.0 < coefficient < 1.0:
        raise ValueError(f"ultimate credit ratio needs 0 < a < 1, got {coefficient}")
    return -1.0 / math.log1p(-coefficient)


def ultimate_distribution(coefficients: Sequence[float]) -> list[float]:
    """Predicted long-run selection shares, proportional to the UCRs.

    Depends only on the coefficients: nominal values and starting balances
    drop out of the shares entirely.
    """
    if not coefficients:
        raise ValueError("at least one coefficient is required")
    weights = [ucr(a) for a in coefficients]
    total = sum(weights)
    return [w / total for w in weights]


def empirical_distribution(trace: Trace, targets: Sequence[Transaction]) -> list[float]:
    """Observed selection shares: per target, the fraction of steps containing it."""
    if len(set(targets)) != len(targets):
        raise ValueError("targets must be distinct")
    counts = trace.selection_step_counts(targets)
    total = sum(counts)
    if total == 0:
        raise NoSelectionError("no target transaction was ever selected")
    return [c / total for c in counts]


@dataclass(frozen=True)
class DistributionReport:
    """Predicted versus observed selection shares for a set of transactions."""

    targets: tuple[Transaction, ...]
    predicted: tuple[float, ...]
    empirical: tuple[float, ...]

    @property
    def max_abs_error(self) -> float:
        return max(abs(p - e) for p, e in zip(self.predicted, self.empirical))


def distribution_report(trace: Trace) -> DistributionReport:
    """Distribution check for a single-supplier, single-good scenario.

    Targets are the scenario's curve entries; they must all share one
    supplier and one good for the prediction to apply.
    """
    triples = [key for key, _curve in trace.scenario.curves.items()]
    if not triples:
        raise AnalysisError("scenario has no curve entries")
    suppliers = {sup for sup, _g, _r in triples}
    goods = {g for _s, g, _r in triples}
    if len(suppliers) != 1 or len(goods) != 1:
        raise AnalysisError("distribution analysis needs a single supplier offering a single good")
    targets = tuple(Transaction(sup, good, rec) for sup, good, rec in triples)
    predicted = tuple(
        ultimate_distribution([trace.scenario.curves.curve(*t).coefficient for t in triples])
    )
    empirical = tuple(empirical_distribution(trace, targets))
    return DistributionReport(targets=targets, predicted=predicted, empirical=empirical)


@dataclass(frozen=True)
class IntersectionPoint:
    """Crossing of the two trading curves in the shared balance coordinate."""

    x: float
    y: float


def intersection_point(curve_p: YieldCurve, curve_q: YieldCurve) -> IntersectionPoint:
    """Where the two curves value the trade equally.

    ``curve_q`` is reflected into p's balance coordinate (z = c*x + d), so
    the crossing solves -a*x + b = c*x + d.  Simultaneous trading converges
    here, but the alternating process does not come to rest here.
    """
    a, b = curve_p.coefficient, curve_p.nominal
    c, d = curve_q.coefficient, curve_q.nominal
    if a + c <= 0.0:
        raise ValueError("curves are parallel (both coefficients zero); no intersection")
    return IntersectionPoint(x=(b - d) / (a + c), y=(a * d + b * c) / (a + c))


@dataclass(frozen=True)
class Equilibrium:
    """The two-point resting cycle of alternating trade.

    The two balances and the common yield form a square: the process steps
    from ``x_low`` up to ``x_high`` and back, both moves worth ``side``.
    """

    x_low: float
    x_high: float
    side: float


def canonical_equilibrium(curve_p: YieldCurve, curve_q: YieldCurve) -> Equilibrium:
    """Closed-form alternating-trade equilibrium; unique for coefficients in (0, 1)."""
    a, b = curve_p.coefficient, curve_p.nominal
    c, d = curve_q.coefficient, curve_q.nominal
    if not 0.0 < a < 1.0 or not 0.0 < c < 1.0:
        raise ValueError(f"equilibrium needs both coefficients in (0, 1), got a={a}, c={c}")
    denom = a + c - a * c
    return Equilibrium(
        x_low=((1.0 - c) * b - d) / denom,
        x_high=(b - (1.0 - a) * d) / denom,
        side=(a * d + b * c) / denom,
    )


def theoretical_contraction(curve_p: YieldCurve, curve_q: YieldCurve) -> float:
    """Per-round-trip shrink factor (1-a)(1-c) of same-parity balance gaps."""
    a, c = curve_p.coefficient, curve_q.coefficient
    if not 0.0 < a < 1.0 or not 0.0 < c < 1.0:
        raise ValueError(f"contraction factor needs both coefficients in (0, 1), got a={a}, c={c}")
    return (1.0 - a) * (1.0 - c)


def _trading_pair(trace: Trace) -> tuple[str, str]:
    pairs = trace.selected_pairs()
    if len(pairs) != 1:
        raise AnalysisError(
            f"trace must involve exactly one trading pair, found {len(pairs)}"
        )
    return pairs[0]


def _linear_regime_start(trace: Trace) -> int:
    """First 0-based step index after which every step traded with positive yields."""
    start = 0
    for i in range(1, trace.n_steps + 1):
        rows = trace.step_selection(i)
        if not rows or any(y <= 0.0 for _t, _n, y in rows):
            start = i
    return start


def measured_contraction(trace: Trace) -> float:
    """Least-squares estimate of the same-parity balance-gap ratio.

    Uses the valuation abscissas x_i (balances at step openings) of the
    trace's single trading pair, restricted to the suffix where every step
    traded at positive yield.  Fits d_{i+2} = r * d_i with d_i = x_i - x_{i+2},
    weighting by d_i^2, which is exact in the linear regime.
    """
    p, q = _trading_pair(trace)
    x = trace.opening_balances(p, q)[_linear_regime_start(trace):]
    if len(x) < 6:
        raise InsufficientDataError(
            f"need at least 6 steps in the linear regime, have {len(x)}"
        )
    d = x[:-2] - x[2:]
    if float(np.max(np.abs(d))) < 1e-12:
        raise AlreadyConvergedError("balance differences are below 1e-12; already converged")
    num = float(np.dot(d[:-2], d[2:]))
    den = float(np.dot(d[:-2], d[:-2]))
    return num / den


@dataclass(frozen=True)
class CyclePoint:
    """One step of a terminal cycle: opening balance plus the step's trades."""

    balance: float
    transactions: tuple[Transaction, ...]
    yields: tuple[float, ...]


def detect_cycle(trace: Trace, tolerance: float = 1e-9, max_period: int = 8) -> list[CyclePoint]:
    """Valuation points of the trace's terminal cycle.

    Finds the smallest period k whose last two full periods of opening
    balances agree within ``tolerance`` (two consecutive confirming periods),
    then reports the final k steps as (balance, transactions, yields) points
    in chronological order.
    """
    p, q = _trading_pair(trace)
    x = trace.opening_balances(p, q)
    n = len(x)
    period = 0
    for k in range(1, max_period + 1):
        if n < 3 * k:
            continue
        if all(abs(x[n - 1 - j] - x[n - 1 - j - k]) <= tolerance for j in range(2 * k)):
            period = k
            break
    if not period:
        raise NoCycleError(
            f"no terminal cycle of period <= {max_period} within tolerance {tolerance}"
        )
    points = []
    for idx in range(n - period, n):
        rows = trace.step_selection(idx + 1)
        txns = tuple(t for t, count, _y in rows for _ in range(count))
        ys = tuple(y for _t, count, y in rows for _ in range(count))
        points.append(CyclePoint(balance=float(x[idx]), transactions=txns, yields=ys))
    return points
