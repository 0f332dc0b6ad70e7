"""Deterministic simulator and analysis toolkit for moneyless gift economies.

Entities hand goods to each other against pairwise social-credit ledgers;
a linear, zero-clamped yield curve prices every gift, selection follows the
highest supplier yield (or a forced schedule), and everything an analysis
could need is recorded in a reproducible trace.

The step loop runs on a compiled kernel when the extension is built and on
a bit-identical pure-Python fallback otherwise; ``kernel_backend()`` tells
you which one is active.
"""

from ._backend import DEFAULT_BACKEND, available_backends
from .analytics import (
    AlreadyConvergedError,
    AnalysisError,
    CyclePoint,
    DistributionReport,
    Equilibrium,
    InsufficientDataError,
    IntersectionPoint,
    NoCycleError,
    NoSelectionError,
    canonical_equilibrium,
    detect_cycle,
    distribution_report,
    empirical_distribution,
    intersection_point,
    measured_contraction,
    theoretical_contraction,
    ucr,
    ultimate_distribution,
)
from .choice import (
    AmbiguousStateError,
    Candidate,
    SelectionMode,
    all_maximal_admissible,
    enumerate_candidates,
    forced_selection,
    hyr_select,
)
from .core import (
    EntityId,
    GoodId,
    Multiset,
    Offer,
    OfferKind,
    State,
    TraceStep,
    Transaction,
    TransactionSet,
    demand,
    footprint,
    is_admissible,
    supply,
)
from .credit import (
    CurveTable,
    Ledger,
    MissingCurveError,
    YieldCurve,
    apply_transactions,
    transaction_yield,
)
from .engine import (
    HaltReason,
    Scenario,
    ScenarioError,
    StateSequence,
    Trace,
    make_alternating_trade,
    make_multi_recipient,
    make_repeated_gift,
    make_simultaneous_trade,
    run,
    step,
)

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Name of the step-loop kernel selected at import ("compiled" or "python")."""
    return DEFAULT_BACKEND


__all__ = [
    "AlreadyConvergedError",
    "AmbiguousStateError",
    "AnalysisError",
    "Candidate",
    "CurveTable",
    "CyclePoint",
    "DistributionReport",
    "EntityId",
    "Equilibrium",
    "GoodId",
    "HaltReason",
    "InsufficientDataError",
    "IntersectionPoint",
    "Ledger",
    "MissingCurveError",
    "Multiset",
    "NoCycleError",
    "NoSelectionError",
    "Offer",
    "OfferKind",
    "Scenario",
    "ScenarioError",
    "SelectionMode",
    "State",
    "StateSequence",
    "Trace",
    "TraceStep",
    "Transaction",
    "TransactionSet",
    "YieldCurve",
    "all_maximal_admissible",
    "apply_transactions",
    "available_backends",
    "canonical_equilibrium",
    "demand",
    "detect_cycle",
    "distribution_report",
    "empirical_distribution",
    "enumerate_candidates",
    "footprint",
    "forced_selection",
    "hyr_select",
    "intersection_point",
    "is_admissible",
    "kernel_backend",
    "make_alternating_trade",
    "make_multi_recipient",
    "make_repeated_gift",
    "make_simultaneous_trade",
    "measured_contraction",
    "run",
    "step",
    "supply",
    "theoretical_contraction",
    "transaction_yield",
    "ucr",
    "ultimate_distribution",
]
