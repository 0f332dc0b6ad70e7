#!/usr/bin/env python3
"""Benchmark the compiled step-loop kernel against the pure-Python fallback.

The scenarios are chosen so the run actually lasts: forced trades never halt
early, and the greedy scenarios use near-zero coefficients so the yields
decay far too slowly to reach a fixed point within the budget.

Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import numpy as np

import giftsim as gs
from giftsim._backend import available_backends
from giftsim._plan import compile_plan


def scenarios(steps):
    yield "alternating trade, forced (2 cand/state)", gs.make_alternating_trade(
        "P", "Q", ("a", "b"), gs.YieldCurve(0.5, 1.0), gs.YieldCurve(0.5, 2.0), max_steps=steps
    )
    yield "simultaneous trade, greedy (2 cand/state)", gs.make_simultaneous_trade(
        "P",
        "Q",
        ("a", "b"),
        gs.YieldCurve(1e-6, 1.0),
        gs.YieldCurve(1e-6, 1.0),
        max_steps=steps,
        initial_balances=gs.Ledger({("P", "Q"): 1.0}),
        mode=gs.SelectionMode.HYR,
    )
    yield "multi-recipient, greedy (4 cand/state)", gs.make_multi_recipient(
        "P",
        "a",
        [
            ("Q1", gs.YieldCurve(1e-5, 1.0)),
            ("Q2", gs.YieldCurve(2e-5, 1.1)),
            ("Q3", gs.YieldCurve(3e-5, 1.2)),
            ("Q4", gs.YieldCurve(4e-5, 1.3)),
        ],
        max_steps=steps,
    )


def time_backend(scenario, backend):
    plan = compile_plan(scenario)
    kernel = gs._backend.kernel_for(backend)
    start = time.perf_counter()
    result = kernel(*plan.kernel_args(scenario.max_steps))
    elapsed = time.perf_counter() - start
    return elapsed, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200_000, help="steps per scenario")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}; steps per scenario: {args.steps}")
    header = f"{'scenario':45s} " + " ".join(f"{b:>14s}" for b in backends) + f" {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, scenario in scenarios(args.steps):
        times = {}
        results = {}
        for backend in backends:
            times[backend], results[backend] = time_backend(scenario, backend)
        if len(backends) == 2:
            a, b = (results[k] for k in backends)
            assert a[0] == b[0] and np.array_equal(a[6], b[6]), "kernels diverged"
        steps_done = results[backends[0]][0]
        cells = " ".join(
            f"{args.steps / times[b] / 1e6:10.2f} M/s" for b in backends
        )
        if "compiled" in times and "python" in times:
            speedup = f"{times['python'] / times['compiled']:8.1f}x"
        else:
            speedup = "     n/a"
        print(f"{name:45s} {cells} {speedup}   ({steps_done} steps)")


if __name__ == "__main__":
    main()
