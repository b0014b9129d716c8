"""Optimal fake-timestamp schedules when timestamps are unverifiable.

The attacker mines every block at full capacity ``M_a`` and only chooses
the intervals it reports. Reporting intervals ``T_1..T_{N-1}`` makes block
``k+1`` cost ``1 / (T_1 ... T_k)`` difficulty, so mining ``N`` blocks takes
``g(T) / M_a`` with

    g(T) = 1 + 1/T_1 + 1/(T_1 T_2) + ... + 1/(T_1 ... T_{N-1})

subject to ``sum(T) = N - 1`` (the claims must fit between ``t_1`` and the
honest head at reveal). ``g`` does not depend on ``M_a``, so one schedule
per ``N`` serves every capacity.

Two independent routes find the minimiser:

* :func:`solve_optimal_reports` runs a constrained Newton method on ``g`` in
  log coordinates. It never touches the stationarity recurrence below.
* :func:`shoot_optimal_reports` integrates the stationarity recurrence

      T_x (T_x - T_{x+1}) = T_{x-1} - T_x        (x = 2..N-2)
      T_{N-1}**2          = T_{N-2} - T_{N-1}

  backwards from a guess for ``T_{N-1}`` and root-finds that guess against
  the sum constraint, in extended precision.

:func:`brute_force_reports` is a third, derivative-free oracle for small N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded
from scipy.special import logsumexp

from chainrace.errors import DomainError, SolverError

FOC_TOLERANCE = 1e-10
MAX_ITERATIONS = 100_000
TERMINAL_CLAIM = 1e-9


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise DomainError(f"block count must be an integer >= 2, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class ReportSchedule:
    """Claimed intervals ``T_1..T_{N-1}``; the terminal claim is left implicit (about 0)."""

    claimed_intervals: tuple[float, ...]
    seed: int | None = None

    def __post_init__(self):
        ivs = tuple(float(t) for t in self.claimed_intervals)
        object.__setattr__(self, "claimed_intervals", ivs)
        if not ivs:
            raise DomainError("a report schedule needs at least one interval")
        for i, t in enumerate(ivs):
            if not math.isfinite(t) or t <= 0.0:
                raise DomainError(f"claimed interval {i + 1} must be > 0, got {t!r}")

    @property
    def n_blocks(self) -> int:
        return len(self.claimed_intervals) + 1

    @property
    def reduced_objective(self) -> float:
        return reduced_objective(self.claimed_intervals)

    def difficulties(self) -> list[float]:
        """Difficulty of blocks ``1..N``: running products of inverse claims."""
        out = [1.0]
        for t in self.claimed_intervals:
            out.append(out[-1] / t)
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n_blocks,
            "claimed_intervals": list(self.claimed_intervals),
            "reduced_objective": self.reduced_objective,
            "foc_residual_norm": foc_residual_norm(self) if self.n_blocks >= 2 else 0.0,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReportSchedule":
        sched = cls(tuple(doc["claimed_intervals"]), doc.get("seed"))
        if "n" in doc and int(doc["n"]) != sched.n_blocks:
            raise DomainError(f"schedule says n={doc['n']} but lists {len(sched.claimed_intervals)} intervals")
        return sched


def reduced_objective(intervals) -> float:
    """``g(T)``: attack duration times capacity."""
    total, term = 1.0, 1.0
    for i, t in enumerate(intervals):
        if not t > 0.0:
            raise DomainError(f"claimed interval {i + 1} must be > 0, got {t!r}")
        term /= t
        total += term
    return total


def unverifiable_objective(schedule: ReportSchedule, m_a: float) -> float:
    """Actual time to mine the schedule's ``N`` blocks at capacity ``m_a``."""
    m_a = float(m_a)
    if not math.isfinite(m_a) or m_a <= 1.0:
        raise DomainError(f"capacity must be finite and > 1, got {m_a!r}")
    return reduced_objective(schedule.claimed_intervals) / m_a


def foc_residuals(schedule: ReportSchedule) -> np.ndarray:
    """Stationarity residuals: interior rows, the boundary row, then the sum constraint.

    For ``N = 2`` only the constraint row is returned.
    """
    t = np.asarray(schedule.claimed_intervals, dtype=float)
    n = schedule.n_blocks
    constraint = math.fsum(t) - (n - 1)
    if n == 2:
        return np.array([constraint])
    # t[j] holds T_{j+1}; interior x = 2..N-2 is j = 1..N-3
    interior = t[1:-1] * (t[1:-1] - t[2:]) - (t[:-2] - t[1:-1])
    boundary = t[-1] ** 2 - (t[-2] - t[-1])
    return np.concatenate([interior, [boundary, constraint]])


def foc_residual_norm(schedule: ReportSchedule) -> float:
    return float(np.linalg.norm(foc_residuals(schedule)))


# Newton solver ---------------------------------------------------------------

def _terms(u: np.ndarray) -> tuple[np.ndarray, float]:
    """Products ``p_k = 1/(T_1...T_k)`` for k = 1..m and ``g``."""
    p = np.exp(-np.cumsum(u))
    return p, 1.0 + math.fsum(p)


def _retract(u: np.ndarray, m: int) -> np.ndarray:
    # rescale all intervals so they sum to m exactly
    return u + (math.log(m) - logsumexp(u))


def _newton_direction(u: np.ndarray, p: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Solve the KKT system of ``min g`` s.t. ``sum(exp(u)) = m`` at ``u``.

    In the cumulative variables ``y = cumsum(v)`` the Lagrangian Hessian is
    tridiagonal: ``diag(p) + lam * M`` with ``M = L^-T diag(T) L^-1``.
    The constraint row becomes ``b . y = 0`` with ``b_i = T_i - T_{i+1}``.
    """
    t = np.exp(u)
    t_next = np.append(t[1:], 0.0)
    m = len(u)
    ab = np.zeros((2, m))
    ab[1] = p + lam * (t + t_next)
    ab[0, 1:] = -lam * t[1:]
    b = t - t_next
    rhs = np.column_stack([p, b])
    sol = solveh_banded(ab, rhs, lower=False, check_finite=False)
    y1, y2 = sol[:, 0], sol[:, 1]
    lam_new = float(b @ y1) / float(b @ y2)
    y = y1 - lam_new * y2
    v = np.diff(y, prepend=0.0)
    return v, lam_new


def _initial_point(m: int, seed: int | None) -> np.ndarray:
    if seed is None:
        return np.zeros(m)
    rng = np.random.default_rng(seed)
    # log-Dirichlet spread is about 1/alpha per interval and makes ln(p_m) drift
    # by roughly m / (2 alpha); growing alpha with m keeps p moderate
    alpha = max(1.0, m / 20)
    return _retract(np.log(rng.dirichlet(np.full(m, alpha))), m)


def _candidate(u: np.ndarray, m: int, seed: int | None) -> tuple[ReportSchedule, float]:
    t = np.exp(u)
    t *= m / math.fsum(t)
    sched = ReportSchedule(tuple(t), seed)
    return sched, foc_residual_norm(sched)


def solve_optimal_reports(
    n: int,
    seed: int | None = None,
    tol: float = FOC_TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
) -> ReportSchedule:
    """Minimise ``g`` under the sum constraint.

    ``seed=None`` starts from uniform claims; an integer seed starts from a
    random feasible point. Raises :class:`SolverError` carrying the best
    iterate if the stationarity residual does not drop below ``tol``.
    """
    n = _check_n(n)
    m = n - 1
    if m == 1:
        return ReportSchedule((1.0,), seed)

    u = _initial_point(m, seed)
    p, g = _terms(u)
    t = np.exp(u)
    lam = float(t @ np.cumsum(p[::-1])[::-1]) / float(t @ t)
    best = ReportSchedule(tuple(t), seed)
    res = foc_residual_norm(best)
    stalls = polish = 0
    for _ in range(max_iter):
        # keep polishing past tol for a few steps; stop once Newton stops helping
        if res < tol:
            if res < tol * 1e-3 or stalls >= 2 or polish >= 8:
                return best
            polish += 1
        v, lam = _newton_direction(u, p, lam)
        slope = -float(np.cumsum(p[::-1])[::-1] @ v)  # grad(g) . v
        # near the optimum changes in g drop below roundoff; allow that much slack
        noise = 8 * np.finfo(float).eps * g
        step, cand = 1.0, None
        while True:
            u_try = _retract(u + step * v, m)
            p_try, g_try = _terms(u_try)
            if g_try <= g + 1e-4 * step * slope + noise:
                break
            if step == 1.0 and abs(g_try - g) <= 1e-9 * g:
                # g is flat to roundoff here; judge the full step by stationarity
                cand, cand_res = _candidate(u_try, m, seed)
                if cand_res < res:
                    break
                cand = None
            step *= 0.5
            if step < 1e-12:
                break
        if step < 1e-12:
            break
        if cand is None:
            cand, cand_res = _candidate(u_try, m, seed)
        # creeping by roundoff-sized amounts counts as a stall
        progress = g_try < g * (1 - 1e-9) or cand_res < 0.5 * res
        stalls = 0 if progress else stalls + 1
        u, p, g = u_try, p_try, g_try
        if cand_res < res:
            best, res = cand, cand_res
        if stalls >= 50:
            break
    if res < tol:
        return best
    raise SolverError(f"report solver did not converge for n={n}", best_iterate=best, residual_norm=res)


# shooting cross-check --------------------------------------------------------

def _shoot(s, m: int):
    """Intervals ``T_1..T_m`` from the stationarity recurrence with ``T_m = s``."""
    t = [None] * m
    t[m - 1] = s
    t[m - 2] = s + s * s
    for x in range(m - 2, 0, -1):
        t[x - 1] = t[x] + t[x] * (t[x] - t[x + 1])
    return t


def shoot_optimal_reports(n: int, dps: int = 50) -> ReportSchedule:
    """Solve the stationarity recurrence by shooting on ``T_{N-1}`` at ``dps`` digits."""
    import mpmath

    n = _check_n(n)
    m = n - 1
    if m == 1:
        return ReportSchedule((1.0,))
    with mpmath.workdps(dps):
        target = mpmath.mpf(m)

        def excess(s):
            return mpmath.fsum(_shoot(s, m)) - target

        # the sum grows monotonically with s; s = 1 overshoots, tiny s undershoots.
        # Plain bisection: the excess is far too steep for secant-type methods.
        lo, hi = mpmath.mpf("1e-6"), mpmath.mpf(1)
        if not (excess(lo) < 0 < excess(hi)):
            raise SolverError(f"shooting bracket failed for n={n}")
        for _ in range(int(3.33 * dps) + 30):
            mid = (lo + hi) / 2
            if excess(mid) > 0:
                hi = mid
            else:
                lo = mid
        ts = _shoot((lo + hi) / 2, m)
        return ReportSchedule(tuple(float(x) for x in ts))


# brute-force oracle ----------------------------------------------------------

def brute_force_reports(n: int, grid_step: float = 1e-3) -> ReportSchedule:
    """Minimise ``g`` over all claims on a grid of multiples of ``grid_step``.

    Exhaustive over the grid, using the nested form
    ``g(T_1..T_m) = 1 + g(T_2..T_m) / T_1``: the best value for a remaining
    budget of ``j`` grid units and ``r`` intervals is built from the best
    values with ``r - 1`` intervals. Every grid point is covered; none is
    skipped by a heuristic.
    """
    n = _check_n(n)
    if not 3 <= n <= 5:
        raise DomainError(f"brute force is limited to 3 <= n <= 5, got {n}")
    if not 0.0 < grid_step <= 1e-2:
        raise DomainError(f"grid_step must be in (0, 1e-2], got {grid_step!r}")
    m = n - 1
    units = int(math.floor(m / grid_step + 1e-9))
    vals = grid_step * np.arange(units + 1)  # vals[j] = j * step
    inv = np.zeros(units + 1)
    inv[1:] = 1.0 / vals[1:]

    # best[j]: min of g over r intervals using at most j units (each >= 1 unit)
    # with one interval: g = 1 + 1/T, best with all j units
    best = np.full(units + 1, np.inf)
    best[1:] = 1.0 + inv[1:]
    choices = [np.arange(units + 1)]
    for r in range(2, m + 1):
        new = np.full(units + 1, np.inf)
        arg = np.zeros(units + 1, dtype=int)
        for j in range(r, units + 1):
            first = np.arange(1, j - r + 2)  # units for T_1, leaving >= r-1 for the rest
            cand = 1.0 + best[j - first] * inv[first]
            k = int(np.argmin(cand))
            new[j], arg[j] = cand[k], first[k]
        best = new
        choices.append(arg)

    ivs, j = [], units
    for r in range(m, 1, -1):
        first = int(choices[r - 1][j])
        ivs.append(first * grid_step)
        j -= first
    ivs.append(j * grid_step)
    return ReportSchedule(tuple(ivs))


# plans ------------------------------------------------------------------------

@dataclass(frozen=True)
class UnverifiablePlan:
    schedule: ReportSchedule
    capacity: float

    @property
    def blocks(self) -> int:
        return self.schedule.n_blocks

    @property
    def reduced_objective(self) -> float:
        return self.schedule.reduced_objective

    @property
    def actual_duration(self) -> float:
        return unverifiable_objective(self.schedule, self.capacity)

    @property
    def max_deficit(self) -> float:
        return self.blocks - self.actual_duration

    def to_dict(self) -> dict:
        doc = {"kind": "unverifiable", "capacity": self.capacity}
        doc.update(self.schedule.to_dict())
        doc["actual_duration"] = self.actual_duration
        doc["max_deficit"] = self.max_deficit
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "UnverifiablePlan":
        capacity = float(doc["capacity"])
        if not math.isfinite(capacity) or capacity <= 1.0:
            raise DomainError(f"capacity must be finite and > 1, got {capacity!r}")
        return cls(ReportSchedule.from_dict(doc), capacity)


def plan_unverifiable(m_a: float, n: int, seed: int | None = None) -> UnverifiablePlan:
    m_a = float(m_a)
    if not math.isfinite(m_a) or m_a <= 1.0:
        raise DomainError(f"capacity must be finite and > 1, got {m_a!r}")
    return UnverifiablePlan(solve_optimal_reports(n, seed=seed), m_a)


def max_deficit_unverifiable(m_a: float, n: int) -> float:
    """Largest honest lead ``n`` blocks can make up: ``n - g*/m_a``."""
    return plan_unverifiable(m_a, n).max_deficit


def terminal_claims(schedule: ReportSchedule, epsilon: float = TERMINAL_CLAIM, honest_cap: float | None = None) -> tuple[list[float], float]:
    """Intervals to actually report, plus the terminal claim ``T_N``.

    The ideal terminal claim is zero, which no valid chain can carry. The
    claim is taken out of the last interval so the final header lands on
    ``N`` exactly. With ``honest_cap`` set (the largest capacity honest
    nodes would believe), the claim must also imply no more than that
    power: ``T_N >= d_N / honest_cap``. The whole schedule is then shrunk by
    a common factor to make room; the result is feasible but not re-optimised.
    """
    ivs = list(schedule.claimed_intervals)
    m = len(ivs)
    if honest_cap is None:
        if ivs[-1] <= epsilon:
            raise DomainError("last claimed interval too short to carve the terminal claim from")
        ivs[-1] -= epsilon
        return ivs, epsilon

    from scipy.optimize import brentq

    cap = float(honest_cap)
    if not math.isfinite(cap) or cap <= 0.0:
        raise DomainError(f"honest_cap must be finite and > 0, got {cap!r}")
    d_last = schedule.difficulties()[-1]

    def excess(scale):
        return scale * m + d_last * scale ** (-m) / cap - m

    if excess(1.0) <= 0.0:
        return ivs, m - math.fsum(ivs)
    # excess is convex in scale with its minimum at (d_last / cap) ** (1 / (m + 1))
    lo = (d_last / cap) ** (1.0 / (m + 1))
    if lo >= 1.0 or excess(lo) >= 0.0:
        raise DomainError(f"no report schedule fits under honest_cap={cap!r}")
    scale = brentq(excess, lo, 1.0, xtol=1e-15, rtol=1e-15)
    ivs = [t * scale for t in ivs]
    return ivs, max(d_last * scale ** (-m) / cap, epsilon)
