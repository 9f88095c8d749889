"""Optimal order quantities under the linear capacity constraint.

Because the profit rate is submodular in ``(Q1, Q2)``, the largest best
response ``Q2*(Q1)`` is nonincreasing.  :func:`optimize_monotone` exploits this
by shrinking the search range of each row to the previous row's best
response; :func:`optimize_bruteforce` scans the whole feasible set and is
kept as a reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .core import InventoryModel, Policy, enumerate_feasible
from .profit import profit_rate

# two profit values closer than this (relative, floored at 1) are tied
TIE_RTOL = 1e-9

# mixed second differences above this count as submodularity violations
SUBMODULARITY_SLACK = 1e-9


def _scale(a: float, b: float) -> float:
    return TIE_RTOL * max(1.0, abs(a), abs(b))


def is_better(a: float, b: float) -> bool:
    """``a`` beats ``b`` by more than the tie tolerance."""
    return a > b + _scale(a, b)


def is_tied(a: float, b: float) -> bool:
    return abs(a - b) <= _scale(a, b)


class ProfitTable:
    """Memoized profit evaluations for one model.

    ``shared`` may be a dict reused across runs with the same demand, economic
    and regime parameters (only the capacity differs); ``evaluations`` still
    counts the distinct points requested through this table.
    """

    def __init__(self, model: InventoryModel, shared: Optional[dict] = None):
        self.model = model
        self._values = {} if shared is None else shared
        self._seen: set[tuple[int, int]] = set()

    def __call__(self, q1: int, q2: int) -> float:
        key = (q1, q2)
        self._seen.add(key)
        value = self._values.get(key)
        if value is None:
            m = self.model
            value = profit_rate(Policy(q1, q2), m.econ, m.demand, m.regime, m.tol).rate
            self._values[key] = value
        return value

    @property
    def evaluations(self) -> int:
        return len(self._seen)


@dataclass
class OptimizationResult:
    best: Policy
    best_rate: float
    q2_star_profile: dict[int, int] = field(default_factory=dict)
    evaluations: int = 0
    method: str = "monotone"

    def profile_is_nonincreasing(self) -> bool:
        values = [self.q2_star_profile[q1] for q1 in sorted(self.q2_star_profile)]
        return all(b <= a for a, b in zip(values, values[1:]))


def q2_star(
    model: InventoryModel,
    Q1: int,
    upper: int,
    evaluate: Optional[Callable[[int, int], float]] = None,
) -> int:
    """Largest maximizer of ``profit(Q1, .)`` over ``{0..upper}``.

    Scans downward from ``upper`` and only moves when a strictly better value
    (beyond the tie tolerance) turns up, so ties resolve to the larger Q2.
    """
    if upper < 0:
        raise ValueError(f"no feasible Q2 next to Q1={Q1}")
    evaluate = evaluate or ProfitTable(model)
    best_q, best_v = upper, evaluate(Q1, upper)
    for q in range(upper - 1, -1, -1):
        v = evaluate(Q1, q)
        if is_better(v, best_v):
            best_q, best_v = q, v
    return best_q


def optimize_monotone(model: InventoryModel, shared: Optional[dict] = None) -> OptimizationResult:
    """Row-by-row search with the upper bound ``min(Q2*(j-1), (C - a1 j)/a2)``."""
    k = model.constraint
    table = ProfitTable(model, shared)
    profile = {0: q2_star(model, 0, k.max_q2(0), table)}
    for j in range(1, k.max_q1() + 1):
        upper = min(profile[j - 1], k.max_q2(j))
        profile[j] = q2_star(model, j, upper, table)
    best_q1 = 0
    best_v = table(0, profile[0])
    for j in range(1, len(profile)):
        v = table(j, profile[j])
        if is_better(v, best_v):
            best_q1, best_v = j, v
    return OptimizationResult(
        best=Policy(best_q1, profile[best_q1]),
        best_rate=best_v,
        q2_star_profile=profile,
        evaluations=table.evaluations,
        method="monotone",
    )


def _largest_tied(candidates):
    """Among ``(q1, q2, value)`` rows, those within tolerance of the maximum."""
    top = max(v for _, _, v in candidates)
    return [(q1, q2, v) for q1, q2, v in candidates if not is_better(top, v)]


def optimize_bruteforce(model: InventoryModel, shared: Optional[dict] = None) -> OptimizationResult:
    """Exhaustive scan of the feasible set.

    Ties go to the larger Q2, then to the smaller Q1.  The reported profile is
    the unrestricted largest best response of every row.
    """
    table = ProfitTable(model, shared)
    rows: dict[int, list] = {}
    for p in enumerate_feasible(model.constraint):
        rows.setdefault(p.Q1, []).append((p.Q1, p.Q2, table(p.Q1, p.Q2)))
    profile = {q1: max(_largest_tied(cands), key=lambda c: c[1])[1] for q1, cands in rows.items()}
    everything = [c for cands in rows.values() for c in cands]
    q1, q2, value = max(_largest_tied(everything), key=lambda c: (c[1], -c[0]))
    return OptimizationResult(
        best=Policy(q1, q2),
        best_rate=value,
        q2_star_profile=profile,
        evaluations=table.evaluations,
        method="bruteforce",
    )


class Violation(NamedTuple):
    Q1: int
    Q2: int
    slack: float


def mixed_differences(model: InventoryModel, Qmax: int, shared: Optional[dict] = None) -> np.ndarray:
    """``D[q1, q2] = pi(q1+1, q2+1) - pi(q1+1, q2) - pi(q1, q2+1) + pi(q1, q2)``
    for ``q1, q2`` in ``0..Qmax-1`` (capacity is ignored)."""
    if Qmax < 1:
        raise ValueError(f"Qmax must be at least 1, got {Qmax}")
    table = ProfitTable(model, shared)
    grid = np.array([[table(a, b) for b in range(Qmax + 1)] for a in range(Qmax + 1)])
    return grid[1:, 1:] - grid[1:, :-1] - grid[:-1, 1:] + grid[:-1, :-1]


def check_submodularity(model: InventoryModel, Qmax: int) -> list[Violation]:
    """Grid points where the mixed second difference exceeds the slack."""
    diff = mixed_differences(model, Qmax)
    return [
        Violation(int(a), int(b), float(diff[a, b]))
        for a, b in zip(*np.nonzero(diff > SUBMODULARITY_SLACK))
    ]
