"""Long-run expected profit per unit time of an order-up-to policy.

Replenishment epochs are regeneration points, so the profit rate is the
expected cycle profit divided by the expected cycle length.  A cycle earns
``(r_i - c_i) Q_i`` up front and gives back ``(r_i + h_i)`` for each unsold
unit of product ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DemandModel, EconomicParams, Exponential, Fixed, Policy, ReplenishmentRegime
from .stationary import expected_leftover_random
from .transient import DEFAULT_TOL, expected_leftover_fixed


@dataclass(frozen=True)
class ProfitBreakdown:
    rate: float
    margin_term: float
    leftover_penalty1: float
    leftover_penalty2: float
    expected_leftover1: float
    expected_leftover2: float
    cycle_length: float

    @property
    def cycle_profit(self) -> float:
        return self.margin_term - self.leftover_penalty1 - self.leftover_penalty2


def expected_leftovers(
    policy: Policy, d: DemandModel, regime: ReplenishmentRegime, tol: float = DEFAULT_TOL
) -> tuple[float, float]:
    if isinstance(regime, Fixed):
        return expected_leftover_fixed(policy.Q1, policy.Q2, regime.T, d, tol)
    if isinstance(regime, Exponential):
        return expected_leftover_random(policy.Q1, policy.Q2, d, regime.mu)
    raise TypeError(f"unknown replenishment regime {regime!r}")


def profit_rate(
    policy: Policy,
    e: EconomicParams,
    d: DemandModel,
    regime: ReplenishmentRegime,
    tol: float = DEFAULT_TOL,
) -> ProfitBreakdown:
    """Expected profit per unit time with its cycle-level components."""
    en1, en2 = expected_leftovers(policy, d, regime, tol)
    margin = (e.r1 - e.c1) * policy.Q1 + (e.r2 - e.c2) * policy.Q2
    pen1 = (e.r1 + e.h1) * en1
    pen2 = (e.r2 + e.h2) * en2
    length = regime.mean_cycle_length
    return ProfitBreakdown(
        rate=(margin - pen1 - pen2) / length,
        margin_term=margin,
        leftover_penalty1=pen1,
        leftover_penalty2=pen2,
        expected_leftover1=en1,
        expected_leftover2=en2,
        cycle_length=length,
    )
