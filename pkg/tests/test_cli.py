import json

import pytest

import giftsim as gs
from giftsim.cli import (
    ConfigError,
    build_report,
    emit_scenario,
    emit_trace,
    main,
    parse_config,
    parse_scenario,
)

REPEATED_GIFT = """\
# minimal repeated gift
entity P
entity Q
good a
curve P a Q 0.5 1
mode force_all
max_steps 4
state supply:P:a demand:Q:a
"""

TWO_RECIPIENT = """\
entity P
entity Q
entity R
good a
curve P a Q 0.75 1
curve P a R 0.5 1
max_steps 100000
state supply:P:a demand:Q:a demand:R:a
analyze distribution
"""

ALTERNATING_21 = """\
entity P
entity Q
good a
good b
curve P a Q 0.5 1
curve Q b P 0.5 2
mode force_all
max_steps 300
state supply:Q:b demand:Q:a demand:P:b
state supply:P:a demand:Q:a demand:P:b
state supply:P:a demand:Q:a demand:P:b
analyze equilibrium cycle
"""

ALTERNATING_11 = """\
entity P
entity Q
good a
good b
curve P a Q 0.5 1
curve Q b P 0.5 2
balance P Q 3
mode force_all
max_steps 200
state supply:Q:b demand:Q:a demand:P:b
state supply:P:a demand:Q:a demand:P:b
analyze equilibrium contraction cycle
"""


def test_parse_minimal_repeated_gift():
    scenario = parse_scenario(REPEATED_GIFT)
    assert scenario.entities == ("P", "Q")
    assert scenario.goods == ("a",)
    assert scenario.states.dimension == 1
    assert scenario.mode is gs.SelectionMode.FORCE_ALL
    assert scenario.max_steps == 4
    assert scenario.curves.curve("P", "a", "Q") == gs.YieldCurve(0.5, 1.0)


def test_parse_three_state_cycle_has_dimension_three():
    parsed = parse_config(ALTERNATING_21)
    assert parsed.scenario.states.dimension == 3
    assert parsed.analyses == ("equilibrium", "cycle")


@pytest.mark.parametrize(
    "mutation,fragment",
    [
        ("curve P a Q 1.2 1", "0 <= a < 1"),
        ("curve P a Q 0.5 -1", ">= 0"),
        ("curve P a Z 0.5 1", "undeclared entity"),
        ("curve P z Q 0.5 1", "undeclared good"),
        ("weird P", "unknown directive"),
        ("state supply:P:z", "undeclared good"),
        ("state supply-P-a", "offer must look like"),
        ("analyze nonsense", "unknown analysis"),
        ("entity P", "declared twice"),
        ("max_steps 7", "declared twice"),
        ("mode hyr", "declared twice"),
        ("balance P P 1", "distinct"),
    ],
)
def test_parse_rejects_bad_lines_with_line_numbers(mutation, fragment):
    text = REPEATED_GIFT + mutation + "\n"
    lineno = text.count("\n")
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert fragment in str(err.value)
    assert f"line {lineno}:" in str(err.value)


@pytest.mark.parametrize(
    "dropped,fragment",
    [
        ("max_steps 4", "max_steps is required"),
        ("state supply:P:a demand:Q:a", "at least one 'state'"),
    ],
)
def test_parse_requires_mandatory_directives(dropped, fragment):
    text = "\n".join(line for line in REPEATED_GIFT.splitlines() if line != dropped)
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert fragment in str(err.value)


def test_offer_multiplicity_syntax():
    text = REPEATED_GIFT.replace(
        "state supply:P:a demand:Q:a", "state supply:P:a*2 demand:Q:a*3"
    )
    scenario = parse_scenario(text)
    state = scenario.states.cycle[0]
    assert state.offers[gs.supply("P", "a")] == 2
    assert state.offers[gs.demand("Q", "a")] == 3


def test_echo_roundtrip_is_identity_on_the_scenario():
    for text in (REPEATED_GIFT, TWO_RECIPIENT, ALTERNATING_21):
        parsed = parse_config(text)
        echoed = emit_scenario(parsed.scenario, parsed.analyses)
        reparsed = parse_config(echoed)
        assert reparsed.scenario == parsed.scenario
        assert reparsed.analyses == parsed.analyses
        assert emit_scenario(reparsed.scenario, reparsed.analyses) == echoed


def test_balance_directive_orientation():
    text = REPEATED_GIFT.replace("mode force_all", "mode force_all\nbalance Q P 1.5")
    scenario = parse_scenario(text)
    assert scenario.initial_balances.balance("Q", "P") == 1.5
    assert scenario.initial_balances.balance("P", "Q") == -1.5


def test_emit_trace_single_gift_row():
    trace = gs.run(parse_scenario(REPEATED_GIFT).with_max_steps(1))
    assert emit_trace(trace) == (
        "step,supplier,good,recipient,yield,balance_after\n1,P,a,Q,1,1\n"
    )


def test_emit_trace_empty_step_keeps_single_pair_balance():
    scenario = parse_scenario(REPEATED_GIFT.replace("mode force_all", "mode hyr"))
    scenario = gs.Scenario(
        entities=scenario.entities,
        goods=scenario.goods,
        curves=scenario.curves,
        states=scenario.states,
        max_steps=3,
        mode=gs.SelectionMode.HYR,
        initial_balances=gs.Ledger({("P", "Q"): 2.0}),
    )
    trace = gs.run(scenario)
    lines = emit_trace(trace).splitlines()
    assert lines[1] == "1,,,,,2"


def test_emit_trace_simultaneous_rows_share_the_step():
    trace = gs.run(
        gs.make_simultaneous_trade(
            "P", "Q", ("a", "b"), gs.YieldCurve(0.5, 1.0), gs.YieldCurve(0.5, 2.0), max_steps=1
        )
    )
    lines = emit_trace(trace).splitlines()
    assert lines[1] == "1,P,a,Q,1,-1"
    assert lines[2] == "1,Q,b,P,2,1"


def test_emit_trace_repeats_rows_for_multiplicity():
    state = gs.State(
        gs.Multiset({gs.supply("P", "a"): 2, gs.demand("Q", "a"): 2})
    )
    scenario = gs.Scenario(
        entities=("P", "Q"),
        goods=("a",),
        curves=gs.CurveTable({("P", "a", "Q"): gs.YieldCurve(0.5, 1.0)}),
        states=gs.StateSequence(cycle=(state,)),
        max_steps=1,
        mode=gs.SelectionMode.FORCE_ALL,
    )
    lines = emit_trace(gs.run(scenario)).splitlines()
    assert lines[1] == lines[2] == "1,P,a,Q,1,2"


def test_trace_csv_is_byte_deterministic():
    scenario = parse_scenario(ALTERNATING_21)
    assert emit_trace(gs.run(scenario)) == emit_trace(gs.run(scenario))


def test_report_distribution_values():
    parsed = parse_config(TWO_RECIPIENT)
    trace = gs.run(parsed.scenario)
    report = build_report(trace, parsed.analyses)
    dist = report["analyses"]["distribution"]
    assert dist["targets"] == ["P>a>Q", "P>a>R"]
    assert dist["predicted"][0] == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert dist["max_abs_error"] <= 0.01
    assert report["halt_reason"] in ("no_positive_yield", "fixed_point")


def test_report_equilibrium_with_three_point_cycle():
    parsed = parse_config(ALTERNATING_21)
    trace = gs.run(parsed.scenario)
    report = build_report(trace, parsed.analyses)
    eq = report["analyses"]["equilibrium"]
    assert eq["closed_form"]["x_low"] == pytest.approx((0.5 - 2.0) / 0.75, rel=1e-12)
    assert eq["intersection"]["x"] == pytest.approx(-1.0, rel=1e-12)
    cyc = report["analyses"]["cycle"]
    assert cyc["period"] == 3


def test_report_contraction_on_one_to_one_trade():
    parsed = parse_config(ALTERNATING_11)
    trace = gs.run(parsed.scenario)
    report = build_report(trace, parsed.analyses)
    eq = report["analyses"]["equilibrium"]
    assert report["analyses"]["cycle"]["period"] == 2
    assert eq["detected"] is not None and eq["max_discrepancy"] < 1e-6
    contraction = report["analyses"]["contraction"]
    assert contraction["theoretical"] == 0.25
    assert contraction["measured"] == pytest.approx(0.25, abs=1e-9)


def test_symmetric_equilibrium_report_mirrors_balances():
    text = ALTERNATING_21.replace("curve Q b P 0.5 2", "curve Q b P 0.5 1")
    parsed = parse_config(text)
    trace = gs.run(parsed.scenario)
    eq = build_report(trace, ("equilibrium",))["analyses"]["equilibrium"]
    assert eq["closed_form"]["x_low"] == pytest.approx(-eq["closed_form"]["x_high"], rel=1e-12)


def test_report_rejects_inapplicable_analysis():
    trace = gs.run(parse_scenario(REPEATED_GIFT))
    with pytest.raises(gs.AnalysisError):
        build_report(trace, ("equilibrium",))


def test_main_run_and_analyze_roundtrip(tmp_path, capsys):
    config = tmp_path / "gift.cfg"
    config.write_text(REPEATED_GIFT, encoding="utf-8")
    assert main(["run", str(config)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("step,supplier,good,recipient,yield,balance_after\n")
    assert "4,P,a,Q,0.125,1.875" in out

    out_file = tmp_path / "trace.csv"
    assert main(["run", str(config), "--out", str(out_file)]) == 0
    assert out_file.read_text(encoding="utf-8") == out

    config2 = tmp_path / "dist.cfg"
    config2.write_text(TWO_RECIPIENT, encoding="utf-8")
    assert main(["analyze", str(config2)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["analyses"]["distribution"]["max_abs_error"] <= 0.01


def test_main_echo_roundtrips(tmp_path, capsys):
    config = tmp_path / "gift.cfg"
    config.write_text(ALTERNATING_21, encoding="utf-8")
    assert main(["echo", str(config)]) == 0
    echoed = capsys.readouterr().out
    reparsed = parse_config(echoed)
    assert reparsed.scenario == parse_scenario(ALTERNATING_21)


def test_main_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(REPEATED_GIFT + "curve P a Q 0.5 1\n", encoding="utf-8")
    assert main(["run", str(bad)]) == 1
    assert "declared twice" in capsys.readouterr().err

    missing = tmp_path / "nope.cfg"
    assert main(["run", str(missing)]) == 1
    capsys.readouterr()

    inapplicable = tmp_path / "inapplicable.cfg"
    inapplicable.write_text(REPEATED_GIFT + "analyze equilibrium\n", encoding="utf-8")
    assert main(["analyze", str(inapplicable)]) == 2
    assert "error:" in capsys.readouterr().err

    no_analysis = tmp_path / "none.cfg"
    no_analysis.write_text(REPEATED_GIFT, encoding="utf-8")
    assert main(["analyze", str(no_analysis)]) == 1
    capsys.readouterr()


def test_main_max_steps_override(tmp_path, capsys):
    config = tmp_path / "gift.cfg"
    config.write_text(REPEATED_GIFT, encoding="utf-8")
    assert main(["run", str(config), "--max-steps", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("\n") == 3  # header + 2 rows
