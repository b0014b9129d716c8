"""Deterministic proof-of-work chain with per-block difficulty adjustment.

Time is measured in honest block intervals: the honest network has mining
power 1 and, at difficulty 1, finds one block per unit of time.

Timestamp convention
--------------------
A block's header time is the moment its parent was found, i.e. the moment
work on the block could begin (there is no propagation delay). The honest
chain therefore has ``t_i = i`` and the interval ``t_{i+1} - t_i`` is the
time spent mining block ``i``. Difficulty follows

    d_{i+1} = d_i / (t_{i+1} - t_i),    d_0 = 1

which unrolls to ``d_{i+1} = 1 / prod(intervals)``.

Every block also carries ``actual_found_time``: the true moment its header
time refers to. A truthful miner reports exactly that value; the
unverifiable regime never looks at it.

Arithmetic is generic: pass ``fractions.Fraction`` values for exact results.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from chainrace.errors import DomainError

# ints so that exact (Fraction) arithmetic stays exact
GENESIS_DIFFICULTY = 1
GENESIS_TIMESTAMP = 0
DEFAULT_TOLERANCE = 1e-9
# relative tolerance when checking a stored difficulty against the adjustment rule
DIFFICULTY_RTOL = 1e-12


def _check_positive(name: str, value: float) -> float:
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


def _check_time(name: str, value: float) -> float:
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def block_find_time(difficulty: float, power: float) -> float:
    """Time for ``power`` to find a nonce at ``difficulty``."""
    return _check_positive("difficulty", difficulty) / _check_positive("power", power)


def next_difficulty(difficulty: float, t_parent: float, t_child: float) -> float:
    """Difficulty of the block timestamped ``t_child`` whose parent is timestamped ``t_parent``."""
    difficulty = _check_positive("difficulty", difficulty)
    interval = t_child - t_parent
    if not math.isfinite(interval) or interval <= 0:
        raise DomainError(
            f"timestamp interval must be > 0, got {t_child!r} - {t_parent!r}; "
            "a zero interval would imply infinite mining power"
        )
    return difficulty / interval


def difficulty_from_intervals(intervals: Iterable[float]) -> float:
    """Difficulty reached from genesis after the given reported intervals."""
    product = 1
    for i, interval in enumerate(intervals):
        product *= _check_positive(f"interval[{i}]", interval)
    return GENESIS_DIFFICULTY / product


@dataclass(frozen=True)
class Block:
    height: int
    reported_timestamp: float
    difficulty: float
    actual_found_time: float

    @property
    def parent_height(self) -> int | None:
        return self.height - 1 if self.height > 0 else None


GENESIS = Block(0, GENESIS_TIMESTAMP, GENESIS_DIFFICULTY, GENESIS_TIMESTAMP)


@dataclass(frozen=True)
class Chain:
    """Blocks from genesis with consecutive heights.

    Only the structure is enforced here. Timestamp ordering and the
    difficulty rule are regime questions answered by :func:`validate_chain`,
    so that deliberately broken chains can still be represented and rejected.
    """

    blocks: tuple[Block, ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise DomainError("a chain needs at least the genesis block")
        g = blocks[0]
        if (g.height, g.reported_timestamp, g.difficulty) != (0, GENESIS_TIMESTAMP, GENESIS_DIFFICULTY):
            raise DomainError(f"bad genesis block {g!r}")
        for i, b in enumerate(blocks):
            if b.height != i:
                raise DomainError(f"heights must be consecutive from 0; position {i} has height {b.height}")

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    @property
    def timestamps(self) -> list[float]:
        return [b.reported_timestamp for b in self.blocks]

    @property
    def difficulties(self) -> list[float]:
        return [b.difficulty for b in self.blocks]

    def intervals(self) -> list[float]:
        ts = self.timestamps
        return [b - a for a, b in zip(ts, ts[1:])]

    @classmethod
    def from_timestamps(cls, timestamps: Sequence[float], actual_times: Sequence[float] | None = None) -> "Chain":
        """Build a chain whose difficulties follow the adjustment rule.

        ``timestamps`` excludes genesis. ``actual_times`` defaults to the
        reported values (a truthful miner).
        """
        if actual_times is None:
            actual_times = timestamps
        if len(actual_times) != len(timestamps):
            raise DomainError("timestamps and actual_times differ in length")
        blocks = [GENESIS]
        for h, (ts, at) in enumerate(zip(timestamps, actual_times), start=1):
            parent = blocks[-1]
            d = next_difficulty(parent.difficulty, parent.reported_timestamp, ts)
            blocks.append(Block(h, ts, d, _check_time("actual time", at)))
        return cls(tuple(blocks))

    # serialization -------------------------------------------------------

    def to_records(self) -> str:
        """Line-oriented form: a header line, then one comma-separated block per line."""
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["height", "reported_timestamp", "difficulty", "actual_found_time"])
        for b in self.blocks:
            w.writerow([b.height, fmt_float(b.reported_timestamp), fmt_float(b.difficulty), fmt_float(b.actual_found_time)])
        return out.getvalue()

    @classmethod
    def from_records(cls, text: str) -> "Chain":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(tuple(
            Block(int(r["height"]), float(r["reported_timestamp"]), float(r["difficulty"]), float(r["actual_found_time"]))
            for r in rows
        ))

    def to_dict(self) -> dict:
        return {"blocks": [
            {
                "height": b.height,
                "reported_timestamp": float(b.reported_timestamp),
                "difficulty": float(b.difficulty),
                "actual_found_time": float(b.actual_found_time),
            }
            for b in self.blocks
        ]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Chain":
        return cls(tuple(
            Block(int(b["height"]), float(b["reported_timestamp"]), float(b["difficulty"]), float(b["actual_found_time"]))
            for b in doc["blocks"]
        ))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Chain":
        return cls.from_dict(json.loads(text))


def fmt_float(x: float) -> str:
    """17 significant digits; parses back to the identical double."""
    return f"{float(x):.17g}"


def build_honest_chain(n: int) -> Chain:
    """Honest chain of height ``n``: ``t_i = i`` and every difficulty 1."""
    if n < 0:
        raise DomainError(f"height must be >= 0, got {n}")
    return Chain.from_timestamps(list(range(1, n + 1)))


# timestamp regimes ----------------------------------------------------------

@dataclass(frozen=True)
class Verifiable:
    """Reported timestamps must equal the true times (within ``tolerance``)."""

    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not self.tolerance >= 0.0:
            raise DomainError(f"tolerance must be >= 0, got {self.tolerance!r}")


@dataclass(frozen=True)
class Unverifiable:
    """Any strictly increasing timestamps, bounded by the fork point and the reveal time."""

    reveal_time: float
    earliest_first_timestamp: float = 1.0


TimestampRegime = Verifiable | Unverifiable

NON_INCREASING = "non-increasing timestamps"
FUTURE_DATED = "future-dated reveal"
EARLY_FIRST = "first timestamp before fork point"
WRONG_DIFFICULTY = "wrong difficulty"
TIME_MISMATCH = "timestamp differs from actual time"


@dataclass(frozen=True)
class Violation:
    kind: str
    height: int
    detail: str = ""

    def __str__(self) -> str:
        s = f"{self.kind} at height {self.height}"
        return f"{s}: {self.detail}" if self.detail else s


@dataclass(frozen=True)
class Verdict:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok


def _difficulty_violations(chain: Chain) -> list[Violation]:
    found = []
    for parent, child in zip(chain.blocks, chain.blocks[1:]):
        interval = child.reported_timestamp - parent.reported_timestamp
        if interval <= 0.0:
            found.append(Violation(NON_INCREASING, child.height, f"{child.reported_timestamp!r} <= {parent.reported_timestamp!r}"))
            continue
        expected = parent.difficulty / interval
        if not math.isclose(child.difficulty, expected, rel_tol=DIFFICULTY_RTOL, abs_tol=0.0):
            found.append(Violation(WRONG_DIFFICULTY, child.height, f"expected {expected!r}, found {child.difficulty!r}"))
    return found


def validate_chain(chain: Chain, regime: TimestampRegime) -> Verdict:
    """Check ``chain`` against the rules of ``regime``; never raises on a bad chain."""
    found = _difficulty_violations(chain)
    if isinstance(regime, Verifiable):
        for b in chain.blocks:
            if abs(b.reported_timestamp - b.actual_found_time) > regime.tolerance:
                found.append(Violation(
                    TIME_MISMATCH, b.height,
                    f"reported {b.reported_timestamp!r}, actual {b.actual_found_time!r}",
                ))
    elif isinstance(regime, Unverifiable):
        if chain.height >= 1 and chain[1].reported_timestamp < regime.earliest_first_timestamp:
            found.append(Violation(
                EARLY_FIRST, 1,
                f"{chain[1].reported_timestamp!r} < {regime.earliest_first_timestamp!r}",
            ))
        if chain.tip.reported_timestamp > regime.reveal_time:
            found.append(Violation(
                FUTURE_DATED, chain.height,
                f"{chain.tip.reported_timestamp!r} > reveal time {regime.reveal_time!r}",
            ))
    else:
        raise TypeError(f"unknown regime {regime!r}")
    found.sort(key=lambda v: v.height)
    return Verdict(tuple(found))
