"""Scenario files, trace/report emission, and the command-line interface.

The config format is line oriented and diff friendly: one directive per
line, ``#`` starts a comment.  See README for the full grammar.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from ._backend import DEFAULT_BACKEND, available_backends
from .analytics import (
    AnalysisError,
    NoCycleError,
    canonical_equilibrium,
    detect_cycle,
    distribution_report,
    intersection_point,
    measured_contraction,
    theoretical_contraction,
)
from .checks import run_all_checks
from .choice import AmbiguousStateError, SelectionMode
from .core import Multiset, Offer, OfferKind, State, demand, supply
from .credit import CurveTable, Ledger, MissingCurveError, YieldCurve
from .engine import Scenario, ScenarioError, StateSequence, Trace, run

ANALYSES = ("distribution", "equilibrium", "contraction", "cycle")

_RESERVED_CHARS = set(":*# \t")


class ConfigError(ValueError):
    """Scenario file rejected; the message cites the offending line."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ParsedConfig:
    scenario: Scenario
    analyses: tuple[str, ...]


def _check_identifier(name: str, lineno: int, what: str) -> str:
    if not name or any(ch in _RESERVED_CHARS for ch in name):
        raise ConfigError(lineno, f"invalid {what} identifier {name!r}")
    return name


def _parse_offer(token: str, lineno: int, entities: set[str], goods: set[str]) -> tuple[Offer, int]:
    body, star, mult = token.partition("*")
    count = 1
    if star:
        try:
            count = int(mult)
        except ValueError:
            raise ConfigError(lineno, f"bad multiplicity in offer {token!r}") from None
        if count < 1:
            raise ConfigError(lineno, f"offer multiplicity must be >= 1 in {token!r}")
    parts = body.split(":")
    if len(parts) != 3:
        raise ConfigError(lineno, f"offer must look like supply:ENTITY:GOOD, got {token!r}")
    kind, entity, good = parts
    if kind not in ("supply", "demand"):
        raise ConfigError(lineno, f"offer kind must be supply or demand, got {kind!r}")
    if entity not in entities:
        raise ConfigError(lineno, f"undeclared entity {entity!r}")
    if good not in goods:
        raise ConfigError(lineno, f"undeclared good {good!r}")
    offer = supply(entity, good) if kind == "supply" else demand(entity, good)
    return offer, count


def _parse_state(tokens: list[str], lineno: int, entities: set[str], goods: set[str]) -> State:
    if not tokens:
        raise ConfigError(lineno, "state needs at least one offer")
    counts: dict[Offer, int] = {}
    for token in tokens:
        offer, count = _parse_offer(token, lineno, entities, goods)
        counts[offer] = counts.get(offer, 0) + count
    return State(Multiset(counts))


def parse_config(text: str) -> ParsedConfig:
    entities: set[str] = set()
    goods: set[str] = set()
    curves: dict[tuple[str, str, str], YieldCurve] = {}
    balances: dict[tuple[str, str], float] = {}
    prefix: list[State] = []
    cycle: list[State] = []
    analyses: list[str] = []
    mode: SelectionMode | None = None
    max_steps: int | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive, args = tokens[0], tokens[1:]

        if directive == "entity":
            if len(args) != 1:
                raise ConfigError(lineno, "entity takes exactly one identifier")
            name = _check_identifier(args[0], lineno, "entity")
            if name in entities:
                raise ConfigError(lineno, f"entity {name!r} declared twice")
            entities.add(name)
        elif directive == "good":
            if len(args) != 1:
                raise ConfigError(lineno, "good takes exactly one identifier")
            name = _check_identifier(args[0], lineno, "good")
            if name in goods:
                raise ConfigError(lineno, f"good {name!r} declared twice")
            goods.add(name)
        elif directive == "curve":
            if len(args) != 5:
                raise ConfigError(lineno, "curve takes: supplier good recipient coefficient nominal")
            sup, good, rec, a_text, b_text = args
            for name, pool, what in ((sup, entities, "entity"), (rec, entities, "entity"), (good, goods, "good")):
                if name not in pool:
                    raise ConfigError(lineno, f"undeclared {what} {name!r}")
            try:
                curve = YieldCurve(float(a_text), float(b_text))
            except ValueError as exc:
                raise ConfigError(lineno, str(exc)) from None
            key = (sup, good, rec)
            if key in curves:
                raise ConfigError(lineno, f"curve for {sup}>{good}>{rec} declared twice")
            if sup == rec:
                raise ConfigError(lineno, "curve supplier and recipient must differ")
            curves[key] = curve
        elif directive == "balance":
            if len(args) != 3:
                raise ConfigError(lineno, "balance takes: entity entity value")
            p, q, value_text = args
            for name in (p, q):
                if name not in entities:
                    raise ConfigError(lineno, f"undeclared entity {name!r}")
            if p == q:
                raise ConfigError(lineno, "balance needs two distinct entities")
            key = (p, q) if p < q else (q, p)
            if key in balances:
                raise ConfigError(lineno, f"balance for {key} declared twice")
            try:
                value = float(value_text)
            except ValueError:
                raise ConfigError(lineno, f"bad balance value {value_text!r}") from None
            balances[key] = value if p < q else -value
        elif directive == "mode":
            if mode is not None:
                raise ConfigError(lineno, "mode declared twice")
            if len(args) != 1 or args[0] not in ("hyr", "force_all"):
                raise ConfigError(lineno, "mode must be hyr or force_all")
            mode = SelectionMode(args[0])
        elif directive == "max_steps":
            if max_steps is not None:
                raise ConfigError(lineno, "max_steps declared twice")
            try:
                max_steps = int(args[0]) if len(args) == 1 else None
            except ValueError:
                max_steps = None
            if max_steps is None or max_steps < 1:
                raise ConfigError(lineno, "max_steps takes one positive integer")
        elif directive == "prefix":
            prefix.append(_parse_state(args, lineno, entities, goods))
        elif directive == "state":
            cycle.append(_parse_state(args, lineno, entities, goods))
        elif directive == "analyze":
            if not args:
                raise ConfigError(lineno, "analyze takes one or more analysis names")
            for name in args:
                if name not in ANALYSES:
                    raise ConfigError(lineno, f"unknown analysis {name!r}; expected one of {ANALYSES}")
                if name not in analyses:
                    analyses.append(name)
        else:
            raise ConfigError(lineno, f"unknown directive {directive!r}")

    if max_steps is None:
        raise ConfigError(0, "max_steps is required")
    if not cycle:
        raise ConfigError(0, "at least one 'state' line is required (the cycle may not be empty)")
    if not entities:
        raise ConfigError(0, "at least one entity is required")
    if not goods:
        raise ConfigError(0, "at least one good is required")

    scenario = Scenario(
        entities=tuple(sorted(entities)),
        goods=tuple(sorted(goods)),
        curves=CurveTable(curves),
        states=StateSequence(cycle=tuple(cycle), prefix=tuple(prefix)),
        max_steps=max_steps,
        mode=mode or SelectionMode.HYR,
        initial_balances=Ledger(balances),
    )
    return ParsedConfig(scenario=scenario, analyses=tuple(analyses))


def parse_scenario(text: str) -> Scenario:
    return parse_config(text).scenario


def _offer_token(offer: Offer, count: int) -> str:
    kind = "supply" if offer.kind == OfferKind.SUPPLY else "demand"
    token = f"{kind}:{offer.entity}:{offer.good}"
    return f"{token}*{count}" if count > 1 else token


def emit_scenario(scenario: Scenario, analyses: tuple[str, ...] = ()) -> str:
    """Canonical config text; parsing it back yields an equal scenario."""
    lines = []
    for entity in scenario.entities:
        lines.append(f"entity {entity}")
    for good in scenario.goods:
        lines.append(f"good {good}")
    for (sup, good, rec), curve in scenario.curves.items():
        lines.append(f"curve {sup} {good} {rec} {curve.coefficient!r} {curve.nominal!r}")
    for (p, q), value in scenario.initial_balances.items():
        if value != 0.0:
            lines.append(f"balance {p} {q} {value!r}")
    lines.append(f"mode {scenario.mode.value}")
    lines.append(f"max_steps {scenario.max_steps}")
    for state in scenario.states.prefix:
        tokens = " ".join(_offer_token(o, c) for o, c in sorted(state.offers.items()))
        lines.append(f"prefix {tokens}")
    for state in scenario.states.cycle:
        tokens = " ".join(_offer_token(o, c) for o, c in sorted(state.offers.items()))
        lines.append(f"state {tokens}")
    if analyses:
        lines.append("analyze " + " ".join(analyses))
    return "\n".join(lines) + "\n"


def _format_number(value: float) -> str:
    return f"{value + 0.0:.12g}"


def _single_curve_pair(scenario: Scenario) -> tuple[str, str] | None:
    pairs = {tuple(sorted((sup, rec))) for (sup, _good, rec), _curve in scenario.curves.items()}
    if len(pairs) == 1:
        return next(iter(pairs))
    return None


def emit_trace(trace: Trace) -> str:
    """Trace as CSV, one row per selected transaction occurrence per step.

    Rows are ordered by (step, supplier, good, recipient) and numbers carry
    12 significant digits, so the output is byte-stable across runs and
    platforms.  A step that selected nothing emits one row with empty
    transaction fields; when the scenario has a single trading pair that
    row still reports the (unchanged) pair balance.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["step", "supplier", "good", "recipient", "yield", "balance_after"])
    single_pair = _single_curve_pair(trace.scenario)
    for index in range(1, trace.n_steps + 1):
        rows = trace.step_selection(index)
        if not rows:
            if single_pair is not None:
                balance = trace.balances_after(*single_pair)[index - 1]
                writer.writerow([index, "", "", "", "", _format_number(balance)])
            else:
                writer.writerow([index, "", "", "", "", ""])
            continue
        for txn, count, y in rows:
            balance = trace.balances_after(txn.supplier, txn.recipient)[index - 1]
            for _ in range(count):
                writer.writerow(
                    [index, txn.supplier, txn.good, txn.recipient, _format_number(y), _format_number(balance)]
                )
    return buffer.getvalue()


def _trading_curves(scenario: Scenario) -> tuple[YieldCurve, YieldCurve]:
    """Curves of a two-entity trading scenario, oriented from the smaller entity."""
    triples = [key for key, _curve in scenario.curves.items()]
    if len(triples) != 2:
        raise AnalysisError("equilibrium analysis needs exactly two curve entries")
    (s1, _g1, r1), (s2, _g2, r2) = triples
    if {s1, r1} != {s2, r2} or s1 == s2:
        raise AnalysisError("equilibrium analysis needs two entities each supplying the other")
    first, second = sorted((s1, s2))
    curve_p = next(scenario.curves.curve(*t) for t in triples if t[0] == first)
    curve_q = next(scenario.curves.curve(*t) for t in triples if t[0] == second)
    return curve_p, curve_q


def build_report(trace: Trace, analyses: tuple[str, ...]) -> dict:
    report: dict = {
        "steps": trace.n_steps,
        "halt_reason": trace.halt_reason.value,
        "analyses": {},
    }
    for name in analyses:
        if name == "distribution":
            rep = distribution_report(trace)
            report["analyses"]["distribution"] = {
                "targets": [str(t) for t in rep.targets],
                "predicted": list(rep.predicted),
                "empirical": list(rep.empirical),
                "max_abs_error": rep.max_abs_error,
            }
        elif name == "equilibrium":
            curve_p, curve_q = _trading_curves(trace.scenario)
            try:
                equilibrium = canonical_equilibrium(curve_p, curve_q)
                crossing = intersection_point(curve_p, curve_q)
            except ValueError as exc:
                raise AnalysisError(str(exc)) from None
            try:
                points = detect_cycle(trace, tolerance=1e-9)
            except NoCycleError:
                points = None
            entry: dict = {
                "closed_form": {
                    "x_low": equilibrium.x_low,
                    "x_high": equilibrium.x_high,
                    "side": equilibrium.side,
                },
                "intersection": {"x": crossing.x, "y": crossing.y},
            }
            if points is None:
                entry["detected"] = None
                entry["max_discrepancy"] = None
            else:
                entry["detected"] = [
                    {"balance": pt.balance, "yields": list(pt.yields)} for pt in points
                ]
                if len(points) == 2:
                    observed = sorted(pt.balance for pt in points)
                    entry["max_discrepancy"] = max(
                        abs(observed[0] - equilibrium.x_low), abs(observed[1] - equilibrium.x_high)
                    )
                elif len(points) == 1:
                    entry["max_discrepancy"] = abs(points[0].balance - crossing.x)
                else:
                    entry["max_discrepancy"] = None
            report["analyses"]["equilibrium"] = entry
        elif name == "contraction":
            curve_p, curve_q = _trading_curves(trace.scenario)
            try:
                theoretical = theoretical_contraction(curve_p, curve_q)
            except ValueError as exc:
                raise AnalysisError(str(exc)) from None
            report["analyses"]["contraction"] = {
                "theoretical": theoretical,
                "measured": measured_contraction(trace),
            }
        elif name == "cycle":
            points = detect_cycle(trace)
            report["analyses"]["cycle"] = {
                "period": len(points),
                "points": [
                    {
                        "balance": pt.balance,
                        "transactions": [str(t) for t in pt.transactions],
                        "yields": list(pt.yields),
                    }
                    for pt in points
                ],
            }
        else:
            raise AnalysisError(f"unknown analysis {name!r}")
    return report


def emit_report(trace: Trace, analyses: tuple[str, ...]) -> str:
    return json.dumps(build_report(trace, analyses), indent=2) + "\n"


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_config(path: str) -> ParsedConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(0, f"cannot read {path}: {exc}") from None
    return parse_config(text)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="giftsim",
        description="Deterministic gift-economy simulator with social-credit ledgers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run a scenario and print its trace as CSV")
    run_parser.add_argument("config", help="path to a scenario config file")
    run_parser.add_argument("--out", help="write the CSV here instead of stdout")
    run_parser.add_argument("--max-steps", type=int, help="override the config's max_steps")
    run_parser.add_argument("--backend", choices=available_backends(), help="kernel to use")

    analyze_parser = sub.add_parser("analyze", help="run and print the requested analyses as JSON")
    analyze_parser.add_argument("config")
    analyze_parser.add_argument("--out")
    analyze_parser.add_argument("--max-steps", type=int)
    analyze_parser.add_argument("--backend", choices=available_backends())

    echo_parser = sub.add_parser("echo", help="re-emit the parsed scenario in canonical form")
    echo_parser.add_argument("config")

    sub.add_parser("check", help="run the acceptance battery and print pass/fail per criterion")

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            parsed = _load_config(args.config)
            scenario = parsed.scenario
            if args.max_steps:
                scenario = scenario.with_max_steps(args.max_steps)
            trace = run(scenario, backend=args.backend)
            _write_output(emit_trace(trace), args.out)
            return 0
        if args.command == "analyze":
            parsed = _load_config(args.config)
            scenario = parsed.scenario
            if args.max_steps:
                scenario = scenario.with_max_steps(args.max_steps)
            if not parsed.analyses:
                raise ConfigError(0, "config requests no analyses; add an 'analyze' line")
            trace = run(scenario, backend=args.backend)
            _write_output(emit_report(trace, parsed.analyses), args.out)
            return 0
        if args.command == "echo":
            parsed = _load_config(args.config)
            _write_output(emit_scenario(parsed.scenario, parsed.analyses), None)
            return 0
        if args.command == "check":
            results = run_all_checks()
            for result in results:
                status = "PASS" if result.passed else "FAIL"
                print(f"{status} {result.name}: {result.detail}")
            failed = sum(1 for r in results if not r.passed)
            print(f"{len(results) - failed}/{len(results)} criteria passed (kernel: {DEFAULT_BACKEND})")
            return 0 if failed == 0 else 1
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ScenarioError, AmbiguousStateError, MissingCurveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
