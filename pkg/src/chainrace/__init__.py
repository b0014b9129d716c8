"""Longest-chain attacks against per-block difficulty adjustment."""

from chainrace.chain import (
    Block,
    Chain,
    Unverifiable,
    Verdict,
    Verifiable,
    Violation,
    block_find_time,
    build_honest_chain,
    difficulty_from_intervals,
    next_difficulty,
    validate_chain,
)
from chainrace.errors import DomainError, InfeasibleError, SolverError, ValidationError
from chainrace.sim import AttackOutcome, AttackScenario, simulate, verify_against_analytic
from chainrace.unverifiable import (
    ReportSchedule,
    UnverifiablePlan,
    brute_force_reports,
    foc_residuals,
    max_deficit_unverifiable,
    plan_unverifiable,
    shoot_optimal_reports,
    solve_optimal_reports,
    unverifiable_objective,
)
from chainrace.verifiable import (
    Infeasible,
    NaivePlan,
    PowerSchedule,
    VerifiablePlan,
    attack_duration,
    deficit_overcome,
    min_blocks_for_deficit,
    naive_attack_trace,
    optimal_power_schedule,
    plan_verifiable,
    required_power,
)

__version__ = "0.1.0"

__all__ = [
    "attack_duration",
    "AttackOutcome",
    "AttackScenario",
    "Block",
    "block_find_time",
    "brute_force_reports",
    "build_honest_chain",
    "Chain",
    "deficit_overcome",
    "difficulty_from_intervals",
    "DomainError",
    "foc_residuals",
    "Infeasible",
    "InfeasibleError",
    "max_deficit_unverifiable",
    "min_blocks_for_deficit",
    "naive_attack_trace",
    "NaivePlan",
    "next_difficulty",
    "optimal_power_schedule",
    "plan_unverifiable",
    "plan_verifiable",
    "PowerSchedule",
    "ReportSchedule",
    "required_power",
    "shoot_optimal_reports",
    "simulate",
    "solve_optimal_reports",
    "SolverError",
    "Unverifiable",
    "unverifiable_objective",
    "UnverifiablePlan",
    "validate_chain",
    "ValidationError",
    "Verdict",
    "Verifiable",
    "VerifiablePlan",
    "verify_against_analytic",
    "Violation",
]
