import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainrace.errors import DomainError, SolverError
from chainrace.unverifiable import (
    ReportSchedule,
    UnverifiablePlan,
    brute_force_reports,
    foc_residual_norm,
    foc_residuals,
    plan_unverifiable,
    reduced_objective,
    shoot_optimal_reports,
    solve_optimal_reports,
    terminal_claims,
    unverifiable_objective,
)

SQRT3 = math.sqrt(3)


def g_direct(ivs):
    """1 + sum over k of prod_{i<=k} 1/T_i, written out independently."""
    return 1.0 + sum(1.0 / math.prod(ivs[: k + 1]) for k in range(len(ivs)))


def literal_grid_min(n, step):
    """Evaluate g at every grid point with sum n - 1 (n = 3 or 4)."""
    units = round((n - 1) / step)
    i = np.arange(1, units)
    if n == 3:
        t1, t2 = i * step, (units - i) * step
        g = 1 + 1 / t1 + 1 / (t1 * t2)
        k = int(np.argmin(g))
        return float(g[k]), (float(t1[k]), float(t2[k]))
    a, b = np.meshgrid(i, i, indexing="ij")
    c = units - a - b
    ok = c >= 1
    t1, t2, t3 = a[ok] * step, b[ok] * step, c[ok] * step
    g = 1 + 1 / t1 + 1 / (t1 * t2) + 1 / (t1 * t2 * t3)
    k = int(np.argmin(g))
    return float(g[k]), (float(t1[k]), float(t2[k]), float(t3[k]))


def test_objective_matches_direct_form():
    ivs = (1.3, 0.9, 0.5, 0.3)
    assert reduced_objective(ivs) == pytest.approx(g_direct(ivs), rel=1e-15)
    assert unverifiable_objective(ReportSchedule(ivs), 4.0) == pytest.approx(g_direct(ivs) / 4)


def test_two_blocks_forced():
    s = solve_optimal_reports(2)
    assert s.claimed_intervals == (1.0,)
    assert plan_unverifiable(3, 2).actual_duration == pytest.approx(2 / 3)


def test_three_blocks_closed_form():
    s = solve_optimal_reports(3)
    assert s.claimed_intervals == pytest.approx((3 - SQRT3, SQRT3 - 1), abs=1e-12)
    assert s.reduced_objective == pytest.approx(g_direct((3 - SQRT3, SQRT3 - 1)), rel=1e-14)


@pytest.mark.parametrize("n, g", [(3, 2.8660254), (4, 3.618034), (5, 4.2766906), (10, 6.640666), (20, 9.1280145)])
def test_known_objectives(n, g):
    assert solve_optimal_reports(n).reduced_objective == pytest.approx(g, abs=2e-7)


def test_four_blocks_golden_ratio():
    # g* = 1 + phi**2 = (5 + sqrt 5) / 2
    assert solve_optimal_reports(4).reduced_objective == pytest.approx((5 + math.sqrt(5)) / 2, rel=1e-13)


@pytest.mark.parametrize("n", [3, 4])
def test_brute_force_dp_matches_enumeration(n):
    value, point = literal_grid_min(n, 1e-2)
    bf = brute_force_reports(n, 1e-2)
    assert bf.reduced_objective == pytest.approx(value, rel=1e-12)
    assert bf.claimed_intervals == pytest.approx(point, abs=1e-9)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_solver_beats_grid_by_a_little(n):
    s = solve_optimal_reports(n)
    bf = brute_force_reports(n, 1e-2)
    assert s.reduced_objective <= bf.reduced_objective + 1e-12
    assert bf.reduced_objective - s.reduced_objective < 3e-3


def test_brute_force_limits():
    with pytest.raises(DomainError):
        brute_force_reports(6)
    with pytest.raises(DomainError):
        brute_force_reports(4, 0.1)


@pytest.mark.parametrize("n", [3, 7, 50, 400])
def test_shooting_agrees_with_newton(n):
    newton = solve_optimal_reports(n)
    shot = shoot_optimal_reports(n, dps=40)
    assert np.allclose(newton.claimed_intervals, shot.claimed_intervals, rtol=1e-9, atol=1e-12)
    assert foc_residual_norm(shot) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 300), st.integers(0, 2**31))
def test_seeds_reach_same_optimum(n, seed):
    a = solve_optimal_reports(n)
    b = solve_optimal_reports(n, seed=seed)
    assert b.seed == seed
    assert np.allclose(a.claimed_intervals, b.claimed_intervals, rtol=1e-8, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 600))
def test_optimum_properties(n):
    s = solve_optimal_reports(n)
    t = np.array(s.claimed_intervals)
    assert foc_residual_norm(s) < 1e-10
    assert np.all(np.diff(t) < 0)
    assert math.fsum(t) == pytest.approx(n - 1, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2**31), st.floats(1e-4, 0.2))
def test_optimum_beats_perturbations(n, seed, scale):
    s = solve_optimal_reports(n)
    rng = np.random.default_rng(seed)
    t = np.array(s.claimed_intervals) * np.exp(scale * rng.standard_normal(n - 1))
    t *= (n - 1) / t.sum()
    assert reduced_objective(t) >= s.reduced_objective - 1e-12


def test_sublinear_growth():
    g10 = solve_optimal_reports(10).reduced_objective
    g100 = solve_optimal_reports(100).reduced_objective
    assert g100 <= 2.1 * g10
    gs = [solve_optimal_reports(n).reduced_objective for n in (100, 1000, 10_000)]
    assert gs[0] < gs[1] < gs[2] < 15


def test_foc_residual_layout():
    s = ReportSchedule((1.5, 1.5))
    r = foc_residuals(s)
    # boundary T2^2 - (T1 - T2) and the sum constraint
    assert r.tolist() == [1.5**2, 1.0]
    assert foc_residuals(ReportSchedule((0.5,))).tolist() == [-0.5]


def test_solver_failure_reports_diagnostics():
    with pytest.raises(SolverError) as info:
        solve_optimal_reports(200, max_iter=1)
    assert info.value.residual_norm > 0
    assert info.value.best_iterate is not None


def test_invalid_inputs():
    with pytest.raises(DomainError):
        solve_optimal_reports(1)
    with pytest.raises(DomainError):
        ReportSchedule((1.0, -0.5))
    with pytest.raises(DomainError):
        plan_unverifiable(1.0, 3)


def test_plan_quantities_and_round_trip():
    plan = plan_unverifiable(3, 3)
    assert plan.actual_duration == pytest.approx(0.96, abs=0.005)
    assert plan.max_deficit == pytest.approx(3 - plan.actual_duration)
    doc = plan.to_dict()
    assert doc["kind"] == "unverifiable"
    assert doc["foc_residual_norm"] < 1e-9
    assert UnverifiablePlan.from_dict(doc) == plan
    doc["n"] = 4
    with pytest.raises(DomainError):
        UnverifiablePlan.from_dict(doc)


def test_terminal_claims():
    s = solve_optimal_reports(5)
    ivs, claim = terminal_claims(s, 1e-9)
    assert claim == 1e-9
    assert math.fsum(ivs) + claim == pytest.approx(4, abs=1e-12)
    # honest nodes believing at most 10x power force a visible terminal claim
    ivs, claim = terminal_claims(s, 1e-9, honest_cap=10)
    d_last = 1 / math.prod(ivs)
    assert claim == pytest.approx(d_last / 10, rel=1e-9)
    assert math.fsum(ivs) + claim == pytest.approx(4, abs=1e-9)
    with pytest.raises(DomainError):
        terminal_claims(s, 1e-9, honest_cap=1e-3)
