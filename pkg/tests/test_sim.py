import csv
import io
import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainrace.chain import Unverifiable, validate_chain
from chainrace.errors import DomainError
from chainrace.sim import (
    FAITHFUL,
    INTEGER,
    AttackScenario,
    corrupt_difficulty,
    outcome_regime,
    simulate,
    verify_against_analytic,
)
from chainrace.unverifiable import ReportSchedule, UnverifiablePlan, plan_unverifiable
from chainrace.verifiable import NaivePlan, plan_verifiable


def test_example_verifiable_attack():
    plan = plan_verifiable(16, 4)
    out = simulate(AttackScenario(2, plan))
    assert [s.difficulty for s in out.trace] == [1, 2, 4, 8]
    assert [s.actual_duration for s in out.trace] == [0.5] * 4
    assert out.duration == 2.0
    # finishes at t = 4 exactly as the honest chain reaches height 4: a tie
    assert out.reveal_time == 4.0
    assert out.adversary_height == 5
    assert out.success
    assert verify_against_analytic(out).ok


def test_verifiable_deficit_above_capability_fails():
    out = simulate(AttackScenario(2.5, plan_verifiable(16, 4)))
    assert not out.success
    assert out.honest_height_at_reveal == 4.5


def test_idealized_clock_shift():
    out = simulate(AttackScenario(3, plan_verifiable(27, 3)))
    chain = out.adversary_chain
    # laid out as if mining began at t_1 = 1
    assert chain.timestamps == pytest.approx([0, 1, 4 / 3, 5 / 3, 2])
    assert [s.found for s in out.trace] == pytest.approx([10 / 3, 11 / 3, 4])


def test_faithful_mode_differs_from_idealized():
    plan = plan_verifiable(27, 3)
    out = simulate(AttackScenario(2, plan, mode=FAITHFUL))
    assert out.trace[1].difficulty == pytest.approx(3 / 4)
    with pytest.raises(DomainError):
        verify_against_analytic(out)


def test_naive_trace_exact():
    out = simulate(AttackScenario(Fraction(2), NaivePlan(Fraction(3), 6), mode=FAITHFUL))
    assert [s.difficulty for s in out.trace] == [1, Fraction(3, 4), 3, 3, 3, 3]
    assert [s.reported_interval for s in out.trace[:2]] == [Fraction(4, 3), Fraction(1, 4)]
    assert not out.success


def test_naive_float_checks_against_closed_form():
    out = simulate(AttackScenario(2.0, NaivePlan(3.0, 50), mode=FAITHFUL))
    assert verify_against_analytic(out).ok
    assert not out.success


def test_unverifiable_example():
    plan = plan_unverifiable(3, 3)
    # A = 2.04 sits just under the 3 - 0.955 threshold
    out = simulate(AttackScenario(2.04, plan))
    assert out.success
    assert out.reveal_time == pytest.approx(3.0)
    assert verify_against_analytic(out).ok
    late = simulate(AttackScenario(2.1, plan))
    assert not late.success


@settings(max_examples=40, deadline=None)
@given(st.floats(1.5, 500), st.integers(3, 60), st.floats(0.0, 1.0))
def test_unverifiable_success_threshold(m_a, n, frac):
    plan = plan_unverifiable(m_a, n)
    a = 1 + frac * (plan.max_deficit - 1) if plan.max_deficit > 1 else 1.0
    out = simulate(AttackScenario(a, plan))
    assert out.success == (a <= plan.max_deficit)
    assert validate_chain(out.adversary_chain, outcome_regime(out)).ok


def test_integer_height_model():
    out = simulate(AttackScenario(2.5, plan_verifiable(16, 4), height_model=INTEGER))
    assert out.honest_height_at_reveal == 4
    assert out.success


def test_honest_cap_scenario_is_valid():
    plan = plan_unverifiable(99, 20)
    out = simulate(AttackScenario(1.0, plan, honest_cap=1000.0))
    assert out.success
    tip, parent = out.adversary_chain[-1], out.adversary_chain[-2]
    # implied power of the terminal claim stays believable
    assert parent.difficulty / (tip.reported_timestamp - parent.reported_timestamp) <= 1000.0 * (1 + 1e-9)
    assert not verify_against_analytic(out).ok  # rescaled schedule departs from the plan


def test_scenario_checks():
    with pytest.raises(DomainError):
        AttackScenario(0.5, plan_verifiable(3, 2))
    with pytest.raises(DomainError):
        AttackScenario(2, plan_verifiable(3, 2), mode="fast")
    with pytest.raises(DomainError):
        AttackScenario(2, plan_verifiable(3, 2), height_model="real")


def test_inconsistent_plans_are_rejected():
    with pytest.raises(DomainError):
        simulate(AttackScenario(2, plan_unverifiable(3, 3), terminal_claim=2.0))
    # claims overrunning the N - 1 budget would need a header before its parent
    bad = UnverifiablePlan(ReportSchedule((2.5, 0.5)), 3.0)
    with pytest.raises(DomainError):
        simulate(AttackScenario(2, bad))


def test_corrupted_trace_is_caught():
    out = simulate(AttackScenario(2, plan_verifiable(16, 4)))
    bad = corrupt_difficulty(out, 3, 1.001)
    cmp = verify_against_analytic(bad)
    assert not cmp.ok
    assert cmp.first_mismatch.height == 3
    assert cmp.first_mismatch.quantity == "difficulty"


def test_outcome_serialization():
    out = simulate(AttackScenario(2, plan_verifiable(16, 4)))
    doc = json.loads(out.to_json())
    assert doc["success"] is True
    assert doc["scenario"]["plan"]["kind"] == "verifiable"
    assert len(doc["trace"]) == 4 and len(doc["adversary_chain"]) == 6
    rows = list(csv.DictReader(io.StringIO(out.to_csv())))
    assert len(rows) == 1
    assert rows[0]["success"] == "true"
    assert float(rows[0]["duration"]) == 2.0
    assert out.to_csv().endswith("\n") and "\r" not in out.to_csv()


def test_regime_of_outcome():
    out = simulate(AttackScenario(2, plan_unverifiable(3, 4)))
    assert isinstance(outcome_regime(out), Unverifiable)
    assert math.isclose(outcome_regime(out).reveal_time, out.reveal_time)
