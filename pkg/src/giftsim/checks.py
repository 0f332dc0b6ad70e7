"""End-to-end acceptance battery.

Nine checks covering decay, distributions, equilibria, convergence and the
ledger/selection invariants, each with its tolerance pinned here.  The
pytest suite asserts them one by one and ``giftsim check`` runs the lot.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .analytics import (
    canonical_equilibrium,
    detect_cycle,
    intersection_point,
    measured_contraction,
    theoretical_contraction,
    ultimate_distribution,
)
from .choice import hyr_select
from .core import Multiset, State, Transaction, demand, is_admissible, supply
from .credit import CurveTable, Ledger, YieldCurve
from .engine import (
    make_alternating_trade,
    make_multi_recipient,
    make_repeated_gift,
    make_simultaneous_trade,
    run,
)

DECAY_REL_TOL = 1e-9
LIMIT_ABS_TOL = 1e-6
SHARE_TOL = 0.01
SQUARE_REL_TOL = 1e-12
FIXED_POINT_TOL = 1e-8
CONTRACTION_TOL = 1e-9
TERMINAL_TOL = 1e-6
CYCLE_TOL = 1e-6
INTERSECTION_MIN_DRIFT = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_geometric_decay() -> CheckResult:
    curve = YieldCurve(0.5, 1.0)
    trace = run(make_repeated_gift("P", "Q", "a", curve, max_steps=50))
    worst_rel = 0.0
    prev = None
    for i in range(1, trace.n_steps + 1):
        rows = trace.step_selection(i)
        if len(rows) != 1:
            return CheckResult("geometric-decay", False, f"step {i} selected {len(rows)} transactions")
        y = rows[0][2]
        if prev is not None and prev > 0.0:
            worst_rel = max(worst_rel, abs(y - 0.5 * prev) / prev)
        prev = y
    final = trace.balances_after("P", "Q")[-1]
    limit_err = abs(final - curve.limit_balance())
    # independent closed form for the balance after k gifts: 2 - 2**(1 - k)
    closed_err = max(
        abs(trace.balances_after("P", "Q")[k - 1] - (2.0 - 2.0 ** (1 - k)))
        for k in range(1, trace.n_steps + 1)
    )
    passed = worst_rel <= DECAY_REL_TOL and limit_err <= LIMIT_ABS_TOL and closed_err <= DECAY_REL_TOL
    return CheckResult(
        "geometric-decay",
        passed,
        f"recurrence rel err {worst_rel:.2e}, limit err {limit_err:.2e}, closed-form err {closed_err:.2e}",
    )


def check_ultimate_distribution() -> CheckResult:
    configs = [
        (1.0, 1.0, None),
        (2.0, 1.0, None),
        (1.0, 3.0, None),
        (5.0, 2.0, Ledger({("P", "Q"): 0.5, ("P", "R"): -1.0})),
        (1.0, 1.0, Ledger({("P", "Q"): 0.5, ("P", "R"): -1.0})),
    ]
    predicted = ultimate_distribution([0.75, 0.5])[0]
    worst = 0.0
    for b_q, b_r, balances in configs:
        scenario = make_multi_recipient(
            "P",
            "a",
            [("Q", YieldCurve(0.75, b_q)), ("R", YieldCurve(0.5, b_r))],
            max_steps=100_000,
            initial_balances=balances,
        )
        trace = run(scenario)
        counts = trace.selection_step_counts(
            [Transaction("P", "a", "Q"), Transaction("P", "a", "R")]
        )
        share = counts[0] / sum(counts)
        worst = max(worst, abs(share - predicted))
    return CheckResult(
        "ultimate-distribution",
        worst <= SHARE_TOL,
        f"worst |share - 1/3| = {worst:.4f} over {len(configs)} configurations",
    )


def check_generalized_distribution() -> CheckResult:
    coefficients = [0.3, 0.5, 0.7]
    recipients = [(f"Q{i + 1}", YieldCurve(a, 1.0)) for i, a in enumerate(coefficients)]
    trace = run(make_multi_recipient("P", "a", recipients, max_steps=100_000))
    targets = [Transaction("P", "a", name) for name, _curve in recipients]
    counts = trace.selection_step_counts(targets)
    total = sum(counts)
    predicted = ultimate_distribution(coefficients)
    worst = max(abs(c / total - p) for c, p in zip(counts, predicted))
    return CheckResult(
        "generalized-distribution",
        worst <= SHARE_TOL,
        f"worst share error {worst:.4f} over {total} selections",
    )


def check_canonical_equilibrium() -> CheckResult:
    rng = random.Random(20250810)
    worst_square = 0.0
    worst_gap = 0.0
    for _ in range(100):
        a = rng.uniform(0.05, 0.95)
        c = rng.uniform(0.05, 0.95)
        b = rng.uniform(0.0, 10.0)
        d = rng.uniform(0.0, 10.0)
        eq = canonical_equilibrium(YieldCurve(a, b), YieldCurve(c, d))
        square = abs((eq.x_high - eq.x_low) - eq.side) / max(1.0, abs(eq.side))
        worst_square = max(worst_square, square)
        for _ in range(10):
            x = rng.uniform(-20.0, 20.0)
            for _ in range(3000):
                x = (1.0 - c) * ((1.0 - a) * x + b) - d
            worst_gap = max(worst_gap, abs(x - eq.x_low))
    passed = worst_square <= SQUARE_REL_TOL and worst_gap <= FIXED_POINT_TOL
    return CheckResult(
        "canonical-equilibrium",
        passed,
        f"square rel err {worst_square:.2e}, iteration gap {worst_gap:.2e}",
    )


def check_convergence_rate() -> CheckResult:
    details = []
    passed = True
    for (a, c), expected in [((0.5, 0.5), 0.25), ((0.25, 0.5), 0.375)]:
        curve_p = YieldCurve(a, 1.0)
        curve_q = YieldCurve(c, 1.0)
        trace = run(make_alternating_trade("P", "Q", ("a", "b"), curve_p, curve_q, max_steps=200))
        measured = measured_contraction(trace)
        err = abs(measured - expected)
        passed = passed and err <= CONTRACTION_TOL and abs(
            theoretical_contraction(curve_p, curve_q) - expected
        ) == 0.0
        details.append(f"(1-a)(1-c)={expected}: measured err {err:.2e}")
    curve_p = YieldCurve(0.5, 1.0)
    curve_q = YieldCurve(0.5, 1.0)
    eq = canonical_equilibrium(curve_p, curve_q)
    for start in (-10.0, -2.0, 0.0, 3.0, 15.0):
        trace = run(
            make_alternating_trade(
                "P",
                "Q",
                ("a", "b"),
                curve_p,
                curve_q,
                max_steps=400,
                initial_balances=Ledger({("P", "Q"): start}),
            )
        )
        points = detect_cycle(trace, tolerance=TERMINAL_TOL)
        balances = sorted(pt.balance for pt in points)
        ok = (
            len(points) == 2
            and abs(balances[0] - eq.x_low) <= TERMINAL_TOL
            and abs(balances[1] - eq.x_high) <= TERMINAL_TOL
        )
        passed = passed and ok
        if not ok:
            details.append(f"start {start}: no convergence to equilibrium")
    details.append("converged from 5 starting balances")
    return CheckResult("convergence-rate", passed, "; ".join(details))


def check_simultaneous_trading() -> CheckResult:
    curve_p = YieldCurve(0.5, 1.0)
    curve_q = YieldCurve(0.5, 2.0)
    trace = run(make_simultaneous_trade("P", "Q", ("a", "b"), curve_p, curve_q, max_steps=200))
    target = intersection_point(curve_p, curve_q)
    final = trace.balances_after("P", "Q")[-1]
    rows = trace.step_selection(trace.n_steps)
    yield_err = max(abs(y - target.y) for _t, _n, y in rows)
    balance_err = abs(final - target.x)
    passed = balance_err <= TERMINAL_TOL and yield_err <= TERMINAL_TOL and len(rows) == 2
    return CheckResult(
        "simultaneous-trading",
        passed,
        f"balance err {balance_err:.2e}, yield err {yield_err:.2e} vs intersection",
    )


def check_three_point_equilibrium() -> CheckResult:
    trace = run(
        make_alternating_trade(
            "P",
            "Q",
            ("a", "b"),
            YieldCurve(0.5, 1.0),
            YieldCurve(0.5, 2.0),
            ratio=(2, 1),
            max_steps=300,
        )
    )
    points = detect_cycle(trace, tolerance=CYCLE_TOL)
    if len(points) != 3:
        return CheckResult("three-point-equilibrium", False, f"found {len(points)} cycle points")
    a_yields = [y for pt in points for t, y in zip(pt.transactions, pt.yields) if t.good == "a"]
    b_yields = [y for pt in points for t, y in zip(pt.transactions, pt.yields) if t.good == "b"]
    if len(a_yields) != 2 or len(b_yields) != 1:
        return CheckResult(
            "three-point-equilibrium",
            False,
            f"cycle holds {len(a_yields)} a-trades and {len(b_yields)} b-trades",
        )
    gap = abs(sum(a_yields) - b_yields[0])
    return CheckResult(
        "three-point-equilibrium",
        gap <= CYCLE_TOL,
        f"3 points; |y_a1 + y_a2 - y_b| = {gap:.2e}",
    )


def _random_supply_market_state(rng: random.Random):
    """Random state with at most one supplier per good and <= 5 offers.

    With a single supplier per good the greedy selection provably matches
    the exhaustive optimum, which is what the oracle comparison relies on.
    """
    entities = ["E1", "E2", "E3", "E4"]
    goods = rng.sample(["g", "h"], rng.randint(1, 2))
    offers = []
    triples = []
    for good in goods:
        supplier = rng.choice(entities)
        for _ in range(rng.randint(1, 2)):
            offers.append(supply(supplier, good))
        for rec in rng.sample(entities, rng.randint(1, 3)):
            for _ in range(rng.randint(1, 2)):
                offers.append(demand(rec, good))
            if rec != supplier:
                triples.append((supplier, good, rec))
    if len(offers) > 5 or not triples:
        return None
    curves = CurveTable(
        {t: YieldCurve(rng.uniform(0.0, 0.9), rng.uniform(0.1, 5.0)) for t in triples}
    )
    pairs = {tuple(sorted((s, r))) for s, _g, r in triples}
    ledger = Ledger({pair: rng.uniform(-2.0, 0.5) for pair in pairs})
    return State.of(*offers), ledger, curves


def _exhaustive_best(state, yields):
    """Argmax of total supplier yield over every admissible multiset (brute force)."""
    txns = sorted(yields)
    best_total = 0.0
    best = Multiset()

    def fits(t, remaining):
        sup_offer, dem_offer = t.offers
        return remaining.get(sup_offer, 0) > 0 and remaining.get(dem_offer, 0) > 0

    def search(start, remaining, chosen, total):
        nonlocal best_total, best
        if total > best_total:
            best_total = total
            best = Multiset(dict(chosen))
        for idx in range(start, len(txns)):
            t = txns[idx]
            if fits(t, remaining):
                sup_offer, dem_offer = t.offers
                remaining[sup_offer] -= 1
                remaining[dem_offer] -= 1
                chosen[t] = chosen.get(t, 0) + 1
                search(idx, remaining, chosen, total + yields[t])
                chosen[t] -= 1
                if not chosen[t]:
                    del chosen[t]
                remaining[sup_offer] += 1
                remaining[dem_offer] += 1

    search(0, dict(state.offers.items()), {}, 0.0)
    return best


def check_invariant_suite() -> CheckResult:
    rng = random.Random(987654321)

    # exact antisymmetry across 10^4 fuzzed transactions
    from .credit import apply_transactions

    entities = ["A", "B", "C", "D"]
    goods = ["g", "h"]
    curves = CurveTable(
        {
            (s, g, r): YieldCurve(rng.uniform(0.0, 0.95), rng.uniform(0.0, 5.0))
            for s in entities
            for r in entities
            if s != r
            for g in goods
        }
    )
    ledger = Ledger()
    for _ in range(10_000):
        s, r = rng.sample(entities, 2)
        txn = Transaction(s, rng.choice(goods), r)
        ledger = apply_transactions(ledger, Multiset([txn]), curves)
        for i, p in enumerate(entities):
            for q in entities[i + 1 :]:
                if ledger.balance(p, q) + ledger.balance(q, p) != 0.0:
                    return CheckResult(
                        "ledger-choice-invariants", False, f"antisymmetry broken for ({p}, {q})"
                    )

    # greedy selection equals the exhaustive argmax on supply-market states
    compared = 0
    while compared < 500:
        instance = _random_supply_market_state(rng)
        if instance is None:
            continue
        state, ledger, curves = instance
        from .choice import enumerate_candidates

        cands = enumerate_candidates(state, ledger, curves)
        yields = {c.transaction: c.supplier_yield for c in cands}
        if len(set(yields.values())) != len(yields) or any(y <= 0.0 for y in yields.values()):
            continue
        greedy = hyr_select(state, ledger, curves)
        best = _exhaustive_best(state, yields)
        if greedy != best:
            return CheckResult(
                "ledger-choice-invariants", False, f"greedy != argmax on state {state}"
            )
        if not is_admissible(greedy, state):
            return CheckResult("ledger-choice-invariants", False, "greedy result inadmissible")
        compared += 1

    # every recorded step of representative traces is admissible in its state
    traces = [
        run(make_repeated_gift("P", "Q", "a", YieldCurve(0.5, 1.0), max_steps=30)),
        run(
            make_multi_recipient(
                "P",
                "a",
                [("Q", YieldCurve(0.75, 1.0)), ("R", YieldCurve(0.5, 1.0))],
                max_steps=200,
            )
        ),
        run(
            make_alternating_trade(
                "P", "Q", ("a", "b"), YieldCurve(0.5, 1.0), YieldCurve(0.5, 2.0), ratio=(2, 1), max_steps=90
            )
        ),
    ]
    for trace in traces:
        for i in range(1, trace.n_steps + 1):
            if not is_admissible(trace.selected_at(i), trace.scenario.states.state_at(i)):
                return CheckResult("ledger-choice-invariants", False, f"inadmissible step {i}")

    return CheckResult(
        "ledger-choice-invariants",
        True,
        "10^4 transactions antisymmetric; greedy == argmax on 500 states; traces admissible",
    )


def check_intersection_not_equilibrium() -> CheckResult:
    curve_p = YieldCurve(0.5, 1.0)
    curve_q = YieldCurve(0.5, 2.0)
    x_s = intersection_point(curve_p, curve_q).x
    trace = run(
        make_alternating_trade(
            "P",
            "Q",
            ("a", "b"),
            curve_p,
            curve_q,
            max_steps=2,
            initial_balances=Ledger({("P", "Q"): x_s}),
        )
    )
    drift = abs(trace.balances_after("P", "Q")[-1] - x_s)
    return CheckResult(
        "intersection-not-equilibrium",
        drift > INTERSECTION_MIN_DRIFT,
        f"one full trade cycle moved the balance by {drift:.3g}",
    )


ALL_CHECKS = [
    check_geometric_decay,
    check_ultimate_distribution,
    check_generalized_distribution,
    check_canonical_equilibrium,
    check_convergence_rate,
    check_simultaneous_trading,
    check_three_point_equilibrium,
    check_invariant_suite,
    check_intersection_not_equilibrium,
]


def run_all_checks() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
