"""Optimal attack planning when timestamps are verifiable.

With truthful timestamps the only lever is how much power to put on each
block. Mining ``k`` blocks at powers ``M_1..M_k`` takes

    1/M_1 + M_1/M_2 + ... + M_{k-1}/M_k

(each block's difficulty is the previous block's power), which by AM-GM is
minimised by the geometric ramp ``M_i = M_a**(i/k)``: every block then takes
``M_a**(-1/k)`` and the whole run takes ``k * M_a**(-1/k)``.

The honest chain keeps growing meanwhile, so ``k`` blocks overcome a deficit
of ``k * (1 - M_a**(-1/k))`` blocks. That quantity increases in ``k`` towards
``ln(M_a)`` and never reaches it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from chainrace.errors import DomainError, InfeasibleError


def _check_capacity(m_a: float) -> float:
    if not math.isfinite(m_a):
        raise DomainError(f"capacity must be finite, got {m_a!r}")
    if m_a <= 1:
        raise InfeasibleError(f"capacity {m_a!r} <= 1 cannot outpace the honest chain", bound=0.0)
    return m_a


def _check_blocks(k: int) -> int:
    if int(k) != k or k < 1:
        raise DomainError(f"block count must be a positive integer, got {k!r}")
    return int(k)


@dataclass(frozen=True)
class PowerSchedule:
    powers: tuple[float, ...]
    capacity: float

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(self.powers))
        if not self.powers:
            raise DomainError("empty power schedule")
        for p in self.powers:
            if not (0.0 < p <= self.capacity) or not math.isfinite(p):
                raise DomainError(f"power {p!r} outside (0, {self.capacity!r}]")

    def __len__(self) -> int:
        return len(self.powers)


@dataclass(frozen=True)
class VerifiablePlan:
    schedule: PowerSchedule
    blocks: int
    duration: float
    deficit_overcome: float

    @property
    def capacity(self) -> float:
        return self.schedule.capacity

    def to_dict(self) -> dict:
        return {
            "kind": "verifiable",
            "capacity": self.capacity,
            "blocks": self.blocks,
            "powers": list(self.schedule.powers),
            "duration": self.duration,
            "deficit_overcome": self.deficit_overcome,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VerifiablePlan":
        schedule = PowerSchedule(tuple(doc["powers"]), float(doc["capacity"]))
        blocks = int(doc["blocks"])
        if blocks != len(schedule):
            raise DomainError(f"plan says {blocks} blocks but lists {len(schedule)} powers")
        return cls(schedule, blocks, float(doc["duration"]), float(doc["deficit_overcome"]))


@dataclass(frozen=True)
class NaivePlan:
    """Full capacity on every block."""

    capacity: float
    blocks: int

    @property
    def schedule(self) -> PowerSchedule:
        return PowerSchedule((self.capacity,) * self.blocks, self.capacity)

    def to_dict(self) -> dict:
        return {"kind": "naive", "capacity": float(self.capacity), "blocks": self.blocks}

    @classmethod
    def from_dict(cls, doc: dict) -> "NaivePlan":
        return cls(_check_capacity(float(doc["capacity"])), _check_blocks(doc["blocks"]))


def optimal_power_schedule(m_a: float, k: int) -> PowerSchedule:
    m_a, k = _check_capacity(m_a), _check_blocks(k)
    powers = [m_a ** (i / k) for i in range(1, k)] + [m_a]
    return PowerSchedule(tuple(powers), m_a)


def attack_duration(m_a: float, k: int) -> float:
    """Shortest time to mine ``k`` blocks with capacity ``m_a``."""
    m_a, k = _check_capacity(m_a), _check_blocks(k)
    return k * math.exp(-math.log(m_a) / k)


def deficit_overcome(m_a: float, k: int) -> float:
    """Honest lead that ``k`` optimally mined blocks make up."""
    m_a, k = _check_capacity(m_a), _check_blocks(k)
    # expm1 keeps the k -> infinity limit accurate (plain 1 - x**(1/k) cancels)
    return -k * math.expm1(-math.log(m_a) / k)


def required_power(a: float, k: int) -> float:
    """Capacity for which ``k`` optimally mined blocks overcome exactly ``a``."""
    k = _check_blocks(k)
    a = float(a)
    if not math.isfinite(a) or a <= 0.0:
        raise DomainError(f"deficit must be finite and > 0, got {a!r}")
    if a >= k:
        raise InfeasibleError(f"a deficit of {a!r} cannot be overcome in {k} blocks with finite power", bound=float(k))
    return (k / (k - a)) ** k


def plan_verifiable(m_a: float, k: int) -> VerifiablePlan:
    return VerifiablePlan(
        schedule=optimal_power_schedule(m_a, k),
        blocks=_check_blocks(k),
        duration=attack_duration(m_a, k),
        deficit_overcome=deficit_overcome(m_a, k),
    )


@dataclass(frozen=True)
class Infeasible:
    """No finite number of blocks suffices; ``bound`` is the supremum deficit ``ln(m_a)``."""

    capacity: float
    deficit: float
    bound: float

    def __bool__(self) -> bool:
        return False


def max_overcomable_deficit(m_a: float) -> float:
    """Supremum of :func:`deficit_overcome` over ``k``: ``ln(m_a)``."""
    return math.log(_check_capacity(m_a))


def min_blocks_for_deficit(m_a: float, a: float) -> int | Infeasible:
    """Fewest blocks whose optimal run overcomes a deficit ``a``, or :class:`Infeasible`."""
    m_a = _check_capacity(m_a)
    a = float(a)
    if not math.isfinite(a) or a <= 0.0:
        raise DomainError(f"deficit must be finite and > 0, got {a!r}")
    bound = math.log(m_a)
    if a >= bound:
        return Infeasible(m_a, a, bound)
    hi = 1
    while deficit_overcome(m_a, hi) < a:
        hi *= 2
        if hi > 2**62:
            # a sits within rounding of ln(m_a); no representable k gets there
            return Infeasible(m_a, a, bound)
    lo = hi // 2  # deficit_overcome(lo) < a, or lo == 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if deficit_overcome(m_a, mid) >= a:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class NaiveTrace:
    """Closed-form first steps of the all-out strategy (attack starts at ``t_A = a``)."""

    first_interval: float
    second_difficulty: float
    second_interval: float
    third_difficulty: float
    terminal_rate: float
    terminal_deficit: float


def naive_attack_trace(m_a: float, a: float) -> NaiveTrace:
    m_a = _check_capacity(m_a)
    if not math.isfinite(a) or a < 1:
        raise DomainError(f"deficit must be finite and >= 1, got {a!r}")
    # first block is stamped t_1 = 1 but found at t_A + 1/M_a
    t1 = (a - 1) + 1 / m_a
    denom = 1 + m_a * (a - 1)
    return NaiveTrace(
        first_interval=t1,
        second_difficulty=m_a / denom,
        second_interval=1 / denom,
        third_difficulty=m_a,
        terminal_rate=1,
        terminal_deficit=a - 2,
    )
