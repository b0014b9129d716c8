"""Deterministic longest-chain race between a secret miner and the honest chain.

The honest chain starts at genesis and grows at one block per unit of time.
The attacker forks at genesis and starts mining at ``t_A = deficit``; its
first block is stamped ``t_1 = 1`` like the honest block at that height.
It mines the plan's ``N`` blocks back to back, then reveals block ``N + 1``,
whose header closes the interval of block ``N``. The attack succeeds when
that block is at least one higher than the honest head at reveal.

Difficulty modes (verifiable regime only):

``faithful``
    the first reported interval runs from ``t_1`` to when block 1 was
    actually found, so it includes the ``deficit - 1`` of idle time.
``idealized``
    the attacker's chain is laid out as if mining began at ``t_1``: the idle
    time is dropped, which is the simplification behind the closed forms.
    Its ``actual_found_time`` values are on that shifted clock.

Under unverifiable timestamps the plan picks every reported interval, so the
two modes coincide.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

from chainrace.chain import (
    Chain,
    Unverifiable,
    Verifiable,
    fmt_float,
    validate_chain,
)
from chainrace.errors import DomainError, ValidationError
from chainrace.unverifiable import TERMINAL_CLAIM, UnverifiablePlan, terminal_claims
from chainrace.verifiable import NaivePlan, VerifiablePlan, naive_attack_trace

IDEALIZED = "idealized"
FAITHFUL = "faithful"
CONTINUOUS = "continuous"
INTEGER = "integer"

DURATION_RTOL = 1e-9
# the terminal claim is carved from the last reported interval, which moves the
# final difficulty by up to terminal_claim / T_{N-1} (about 2.5e-9 relative)
UNVERIFIABLE_DIFFICULTY_RTOL = 1e-8


@dataclass(frozen=True)
class AttackScenario:
    deficit: float
    plan: VerifiablePlan | UnverifiablePlan | NaivePlan
    mode: str = IDEALIZED
    height_model: str = CONTINUOUS
    tolerance: float = 1e-9  # timestamp check and reveal-time slack
    terminal_claim: float = TERMINAL_CLAIM
    honest_cap: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.deficit) or self.deficit < 1.0:
            raise DomainError(f"deficit must be >= 1 (the attack starts after c_0 is found), got {self.deficit!r}")
        if self.mode not in (IDEALIZED, FAITHFUL):
            raise DomainError(f"unknown difficulty mode {self.mode!r}")
        if self.height_model not in (CONTINUOUS, INTEGER):
            raise DomainError(f"unknown honest height model {self.height_model!r}")

    @property
    def capacity(self) -> float:
        return self.plan.capacity

    @property
    def regime(self) -> str:
        return "unverifiable" if isinstance(self.plan, UnverifiablePlan) else "verifiable"

    @property
    def strategy(self) -> str:
        return {VerifiablePlan: "optimal", UnverifiablePlan: "optimal", NaivePlan: "naive"}[type(self.plan)]


@dataclass(frozen=True)
class BlockStep:
    """One mined block: its difficulty, the power spent, real start/finish times."""

    height: int
    difficulty: float
    power: float
    started: float
    found: float
    actual_duration: float
    reported_interval: float


@dataclass(frozen=True)
class AttackOutcome:
    scenario: AttackScenario
    adversary_chain: Chain
    trace: tuple[BlockStep, ...]
    reveal_time: float
    honest_height_at_reveal: float
    adversary_height: int
    success: bool

    @property
    def duration(self) -> float:
        return math.fsum(s.actual_duration for s in self.trace)

    def to_dict(self) -> dict:
        sc = self.scenario
        return {
            "scenario": {
                "regime": sc.regime,
                "strategy": sc.strategy,
                "mode": sc.mode,
                "height_model": sc.height_model,
                "deficit": float(sc.deficit),
                "capacity": float(sc.capacity),
                "plan": sc.plan.to_dict(),
            },
            "duration": self.duration,
            "reveal_time": float(self.reveal_time),
            "honest_height_at_reveal": float(self.honest_height_at_reveal),
            "adversary_height": self.adversary_height,
            "success": self.success,
            "trace": [{k: (v if isinstance(v, (int, bool)) else float(v)) for k, v in s.__dict__.items()}
                      for s in self.trace],
            "adversary_chain": self.adversary_chain.to_dict()["blocks"],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    SUMMARY_FIELDS = ("regime", "strategy", "mode", "capacity", "deficit", "blocks",
                      "duration", "reveal_time", "honest_height", "adversary_height", "success")

    def to_csv(self) -> str:
        sc = self.scenario
        row = [sc.regime, sc.strategy, sc.mode, fmt_float(sc.capacity), fmt_float(sc.deficit),
               len(self.trace), fmt_float(self.duration), fmt_float(self.reveal_time),
               fmt_float(self.honest_height_at_reveal), self.adversary_height, str(self.success).lower()]
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.SUMMARY_FIELDS)
        w.writerow(row)
        return out.getvalue()


def _honest_height(t: float, model: str) -> float:
    return math.floor(t) if model == INTEGER else t


def _simulate_verifiable(sc: AttackScenario) -> tuple[list[BlockStep], list[float], list[float], float]:
    powers = sc.plan.schedule.powers
    shift = sc.deficit - 1 if sc.mode == IDEALIZED else 0
    # header of block 1 is t_1 = 1 in both modes
    stamps, actual = [1], [1]
    difficulty, now = 1, sc.deficit
    steps = []
    for h, power in enumerate(powers, start=1):
        dur = difficulty / power
        found = now + dur
        # a truthful header: when this block was found, on the mode's clock
        stamp = found - shift
        interval = stamp - stamps[-1]
        steps.append(BlockStep(h, difficulty, power, now, found, dur, interval))
        stamps.append(stamp)
        actual.append(stamp)
        difficulty = difficulty / interval
        now = found
    return steps, stamps, actual, now


def _simulate_unverifiable(sc: AttackScenario) -> tuple[list[BlockStep], list[float], list[float], float]:
    plan = sc.plan
    n = plan.blocks
    intervals, terminal = terminal_claims(plan.schedule, sc.terminal_claim, sc.honest_cap)
    # headers t_1 = 1 .. t_{N+1} = N; t_N absorbs accumulated rounding
    stamps = [1.0]
    for iv in intervals[:-1]:
        stamps.append(stamps[-1] + iv)
    stamps.append(float(n) - terminal)
    stamps.append(float(n))
    power = plan.capacity
    difficulty, now = 1.0, sc.deficit
    steps, actual = [], [1.0]
    for h in range(1, n + 1):
        dur = difficulty / power
        found = now + dur
        interval = stamps[h] - stamps[h - 1]
        steps.append(BlockStep(h, difficulty, power, now, found, dur, interval))
        actual.append(found)
        difficulty = difficulty / interval
        now = found
    return steps, stamps, actual, now


def simulate(scenario: AttackScenario) -> AttackOutcome:
    """Run the plan against the honest chain; raise :class:`ValidationError` on an invalid chain."""
    if isinstance(scenario.plan, UnverifiablePlan):
        steps, stamps, actual, finish = _simulate_unverifiable(scenario)
        # an early finisher waits until its last header is no longer in the future
        reveal = max(finish, stamps[-1])
        regime = Unverifiable(reveal_time=reveal, earliest_first_timestamp=1.0)
    else:
        steps, stamps, actual, finish = _simulate_verifiable(scenario)
        reveal = finish
        regime = Verifiable(scenario.tolerance)
    chain = Chain.from_timestamps(stamps, actual)
    verdict = validate_chain(chain, regime)
    if not verdict.ok:
        raise ValidationError(verdict.violations)
    honest = _honest_height(reveal, scenario.height_model)
    # a reveal within relative tolerance of an exact tie counts as the tie,
    # which the attacker wins; carving the terminal claim out of the last
    # interval stretches the run by about terminal_claim * duration
    slack = scenario.tolerance * max(reveal, 1)
    lenient = _honest_height(reveal - slack, scenario.height_model) if slack else honest
    return AttackOutcome(
        scenario=scenario,
        adversary_chain=chain,
        trace=tuple(steps),
        reveal_time=reveal,
        honest_height_at_reveal=honest,
        adversary_height=chain.height,
        success=chain.height >= lenient + 1,
    )


def outcome_regime(outcome: AttackOutcome):
    """The regime the outcome's chain was validated against."""
    if outcome.scenario.regime == "unverifiable":
        return Unverifiable(reveal_time=outcome.reveal_time, earliest_first_timestamp=1.0)
    return Verifiable(outcome.scenario.tolerance)


# analytic cross-check -----------------------------------------------------------

@dataclass(frozen=True)
class BlockDiff:
    height: int
    quantity: str
    expected: float
    simulated: float

    @property
    def rel_error(self) -> float:
        return _rel(self.simulated, self.expected)


@dataclass(frozen=True)
class Comparison:
    expected_duration: float
    simulated_duration: float
    max_difficulty_rel_error: float
    mismatches: tuple[BlockDiff, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def duration_rel_error(self) -> float:
        return _rel(self.simulated_duration, self.expected_duration)

    @property
    def first_mismatch(self) -> BlockDiff | None:
        return self.mismatches[0] if self.mismatches else None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "expected_duration": self.expected_duration,
            "simulated_duration": self.simulated_duration,
            "duration_rel_error": self.duration_rel_error,
            "max_difficulty_rel_error": self.max_difficulty_rel_error,
            "mismatches": [d.__dict__ for d in self.mismatches],
        }


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(b), 1e-300)


def _expected_blocks(outcome: AttackOutcome, plan) -> tuple[float, list[tuple[str, float, float]], float]:
    """(duration, per-block expectations, relative tolerance) from the closed forms."""
    if isinstance(plan, VerifiablePlan):
        k, m_a = plan.blocks, plan.capacity
        rows = [("difficulty", h, m_a ** ((h - 1) / k)) for h in range(1, k + 1)]
        return plan.duration, rows, DURATION_RTOL
    if isinstance(plan, UnverifiablePlan):
        rows = [("difficulty", h, d) for h, d in enumerate(plan.schedule.difficulties(), start=1)]
        return plan.actual_duration, rows, UNVERIFIABLE_DIFFICULTY_RTOL
    if isinstance(plan, NaivePlan):
        m_a, a = plan.capacity, outcome.scenario.deficit
        nt = naive_attack_trace(m_a, a)
        rows = [("difficulty", 1, 1.0)]
        if plan.blocks >= 2:
            rows += [("reported_interval", 1, nt.first_interval), ("difficulty", 2, nt.second_difficulty)]
        if plan.blocks >= 3:
            rows += [("reported_interval", 2, nt.second_interval)]
            rows += [("difficulty", h, nt.third_difficulty) for h in range(3, plan.blocks + 1)]
        # first two blocks, then one block per unit of time
        dur = 1.0 / m_a + (nt.second_interval if plan.blocks >= 2 else 0.0) + max(plan.blocks - 2, 0) * 1.0
        return dur, rows, DURATION_RTOL
    raise TypeError(f"unknown plan {plan!r}")


def verify_against_analytic(outcome: AttackOutcome, plan=None) -> Comparison:
    """Compare a simulated trace with the closed-form predictions for its plan.

    Verifiable and unverifiable plans are checked in idealized mode; a naive
    plan is checked against the hand-derived faithful-mode trace.
    """
    plan = outcome.scenario.plan if plan is None else plan
    if isinstance(plan, NaivePlan):
        if outcome.scenario.mode != FAITHFUL:
            raise DomainError("the naive closed form describes faithful mode")
    elif isinstance(plan, VerifiablePlan) and outcome.scenario.mode != IDEALIZED:
        raise DomainError("the verifiable closed forms describe idealized mode")
    expected_dur, rows, rtol = _expected_blocks(outcome, plan)
    by_height = {s.height: s for s in outcome.trace}
    diffs, worst = [], 0.0
    for quantity, h, expected in rows:
        step = by_height.get(h)
        if step is None:
            diffs.append(BlockDiff(h, quantity, expected, float("nan")))
            continue
        simulated = getattr(step, quantity)
        err = _rel(simulated, expected)
        if quantity == "difficulty":
            worst = max(worst, err)
        if not err <= rtol:
            diffs.append(BlockDiff(h, quantity, expected, simulated))
    sim_dur = outcome.duration
    if len(outcome.trace) != plan.blocks:
        diffs.append(BlockDiff(len(outcome.trace), "block_count", float(plan.blocks), float(len(outcome.trace))))
    if not _rel(sim_dur, expected_dur) <= DURATION_RTOL:
        diffs.append(BlockDiff(len(outcome.trace), "duration", expected_dur, sim_dur))
    diffs.sort(key=lambda d: d.height)
    return Comparison(expected_dur, sim_dur, worst, tuple(diffs))


def corrupt_difficulty(outcome: AttackOutcome, height: int, factor: float) -> AttackOutcome:
    """Copy of ``outcome`` with one trace difficulty scaled; a negative control for the checker."""
    trace = tuple(replace(s, difficulty=s.difficulty * factor) if s.height == height else s for s in outcome.trace)
    return replace(outcome, trace=trace)
