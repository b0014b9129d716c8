"""Attack duration and largest overcomable lead for a grid of capacities and chain lengths."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from chainrace.chain import fmt_float
from chainrace.unverifiable import solve_optimal_reports
from chainrace.verifiable import attack_duration

CAPACITIES = (3.0, 99.0)
BLOCK_COUNTS = (3, 5, 10, 20, 100)
REGIMES = ("unverifiable", "verifiable")
COLUMNS = ("ma", "n", "regime", "t_star", "a_max")


@dataclass(frozen=True)
class Table1Cell:
    capacity: float
    n_blocks: int
    regime: str
    t_star: float

    @property
    def a_max(self) -> float:
        return self.n_blocks - self.t_star


class CellError(RuntimeError):
    def __init__(self, capacity, n_blocks, regime, cause):
        super().__init__(f"cell (ma={capacity:g}, n={n_blocks}, {regime}) failed: {cause}")
        self.cause = cause


def compute_cells(
    capacities=CAPACITIES,
    block_counts=BLOCK_COUNTS,
    seed: int | None = None,
) -> list[Table1Cell]:
    """Every (capacity, n, regime) cell, sorted by capacity, n, then regime name."""
    # one schedule per n serves every capacity
    schedules = {}
    for n in block_counts:
        try:
            schedules[n] = solve_optimal_reports(n, seed=seed)
        except Exception as exc:  # noqa: BLE001 - reported against the failing cell
            raise CellError(capacities[0], n, "unverifiable", exc) from exc
    cells = []
    for m_a in sorted(capacities):
        for n in sorted(block_counts):
            for regime in sorted(REGIMES):
                try:
                    if regime == "verifiable":
                        t_star = attack_duration(m_a, n)
                    else:
                        t_star = schedules[n].reduced_objective / m_a
                except Exception as exc:  # noqa: BLE001
                    raise CellError(m_a, n, regime, exc) from exc
                cells.append(Table1Cell(m_a, n, regime, t_star))
    return cells


def _half_up(x: float, places: int = 2) -> str:
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def to_csv(cells, display: bool = False) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    fmt = _half_up if display else fmt_float
    for c in cells:
        w.writerow([f"{c.capacity:g}", c.n_blocks, c.regime, fmt(c.t_star), fmt(c.a_max)])
    return out.getvalue()
