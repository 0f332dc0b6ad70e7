"""Acceptance suite: one test per criterion, each printing its pass/fail line.

The criterion logic and tolerances live in giftsim.checks (shared with the
``giftsim check`` subcommand); this module asserts them and adds the
independent oracles that belong on the test side.
"""

import giftsim as gs
from giftsim import checks


def _assert_check(result):
    print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"


def test_criterion_1_geometric_decay():
    _assert_check(checks.check_geometric_decay())


def test_criterion_2_ultimate_distribution():
    _assert_check(checks.check_ultimate_distribution())


def _bruteforce_multi_recipient_shares(coefficients, nominals, steps):
    # independent oracle: the whole selection loop in a dozen lines, no
    # engine machinery involved
    balances = [0.0] * len(coefficients)
    counts = [0] * len(coefficients)
    for _ in range(steps):
        yields = [max(0.0, -a * x + b) for a, b, x in zip(coefficients, nominals, balances)]
        best = 0
        for j in range(1, len(yields)):
            if yields[j] > yields[best]:
                best = j
        if yields[best] <= 0.0:
            break
        old = balances[best]
        counts[best] += 1
        balances[best] += yields[best]
        if balances[best] == old:
            break
    total = sum(counts)
    return [c / total for c in counts]


def test_criterion_3_generalized_distribution():
    result = checks.check_generalized_distribution()
    _assert_check(result)
    coefficients = [0.3, 0.5, 0.7]
    predicted = gs.ultimate_distribution(coefficients)
    oracle = _bruteforce_multi_recipient_shares(coefficients, [1.0, 1.0, 1.0], 100_000)
    assert max(abs(p - o) for p, o in zip(predicted, oracle)) <= 0.01
    trace = gs.run(
        gs.make_multi_recipient(
            "P",
            "a",
            [(f"Q{i + 1}", gs.YieldCurve(a, 1.0)) for i, a in enumerate(coefficients)],
            max_steps=100_000,
        )
    )
    targets = [gs.Transaction("P", "a", f"Q{i + 1}") for i in range(3)]
    empirical = gs.empirical_distribution(trace, targets)
    assert max(abs(e - o) for e, o in zip(empirical, oracle)) <= 1e-12


def test_criterion_4_canonical_equilibrium():
    _assert_check(checks.check_canonical_equilibrium())


def test_criterion_5_convergence_rate():
    _assert_check(checks.check_convergence_rate())


def test_criterion_6_simultaneous_trading():
    _assert_check(checks.check_simultaneous_trading())


def test_criterion_7_three_point_equilibrium():
    _assert_check(checks.check_three_point_equilibrium())


def test_criterion_8_ledger_and_choice_invariants():
    _assert_check(checks.check_invariant_suite())


def test_criterion_9_intersection_is_not_an_equilibrium():
    _assert_check(checks.check_intersection_not_equilibrium())


def test_full_battery_summary():
    results = checks.run_all_checks()
    assert len(results) == 9
    for result in results:
        assert result.passed, f"{result.name}: {result.detail}"
