"""Discrete-event Monte Carlo of single replenishment cycles.

Each cycle's randomness is drawn up front as a :class:`CycleEvents` record
(cycle length, merged arrival epochs, product labels and one uniform
"willingness to substitute" per customer).  Several systems can therefore be
driven by the very same record, which is how the four-system coupling used
for the submodularity argument is reproduced path by path.

Random numbers come from numpy's PCG64.  A replication family with seed
``s`` uses ``SeedSequence(s).spawn(n)``, one child stream per replication,
so replication ``i`` is the same regardless of ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from .core import DemandModel, EconomicParams, Exponential, Fixed, Policy, ReplenishmentRegime


@dataclass(frozen=True)
class CycleEvents:
    length: float
    times: np.ndarray
    products: np.ndarray
    coins: np.ndarray


@dataclass(frozen=True)
class CycleOutcome:
    leftover1: int
    leftover2: int
    sold1: int
    sold2: int
    substituted_1to2: int
    substituted_2to1: int
    cycle_length: float

    @property
    def leftovers(self) -> tuple[int, int]:
        return (self.leftover1, self.leftover2)


class EventStream:
    """Reproducible source of cycle event records."""

    def __init__(self, seed=None, generator: Optional[np.random.Generator] = None):
        if generator is None:
            generator = np.random.Generator(np.random.PCG64(seed))
        self.rng = generator

    @classmethod
    def spawn(cls, seed, n: int) -> list[EventStream]:
        children = np.random.SeedSequence(seed).spawn(n)
        return [cls(generator=np.random.Generator(np.random.PCG64(c))) for c in children]

    def _arrival_times(self, rate: float, horizon: float) -> np.ndarray:
        chunk = int(rate * horizon + 4 * math.sqrt(rate * horizon) + 8)
        times = np.cumsum(self.rng.exponential(1.0 / rate, chunk))
        while times[-1] <= horizon:
            more = times[-1] + np.cumsum(self.rng.exponential(1.0 / rate, chunk))
            times = np.concatenate([times, more])
        return times[: np.searchsorted(times, horizon, side="right")]

    def draw_cycle(self, d: DemandModel, regime: ReplenishmentRegime) -> CycleEvents:
        if isinstance(regime, Exponential):
            length = float(self.rng.exponential(1.0 / regime.mu))
        elif isinstance(regime, Fixed):
            length = float(regime.T)
        else:
            raise TypeError(f"unknown replenishment regime {regime!r}")
        t1 = self._arrival_times(d.lambda1, length)
        t2 = self._arrival_times(d.lambda2, length)
        times = np.concatenate([t1, t2])
        products = np.concatenate([np.ones(len(t1), dtype=np.int8), np.full(len(t2), 2, dtype=np.int8)])
        # stable sort: on an exact tie the product-1 arrival goes first
        order = np.argsort(times, kind="stable")
        coins = self.rng.random(len(times))
        return CycleEvents(length, times[order], products[order], coins)


def run_events(
    start: tuple[int, int], events: CycleEvents, d: DemandModel, trace: Optional[TextIO] = None
) -> CycleOutcome:
    """Play one cycle's events against a system that starts at ``start``."""
    q1, q2 = start
    n1, n2 = q1, q2
    sub12 = sub21 = 0
    p12, p21 = d.p12, d.p21
    for time, product, coin in zip(events.times.tolist(), events.products.tolist(), events.coins.tolist()):
        if n1 == 0 and n2 == 0 and trace is None:
            break
        if product == 1:
            if n1 > 0:
                n1 -= 1
                outcome = "sold"
            elif n2 > 0 and coin < p12:
                n2 -= 1
                sub12 += 1
                outcome = "substituted"
            else:
                outcome = "lost"
        else:
            if n2 > 0:
                n2 -= 1
                outcome = "sold"
            elif n1 > 0 and coin < p21:
                n1 -= 1
                sub21 += 1
                outcome = "substituted"
            else:
                outcome = "lost"
        if trace is not None:
            trace.write(f"{time!r},arrival,{product},{outcome}\n")
    if trace is not None:
        trace.write(f"{events.length!r},replenish,,{n1}:{n2}\n")
    return CycleOutcome(n1, n2, q1 - n1, q2 - n2, sub12, sub21, events.length)


def simulate_cycle(
    policy: Policy,
    d: DemandModel,
    regime: ReplenishmentRegime,
    stream: EventStream,
    trace: Optional[TextIO] = None,
) -> CycleOutcome:
    """Simulate one cycle from ``(Q1, Q2)``; ``trace`` receives
    ``time,kind,product,outcome`` lines if given."""
    return run_events(policy.as_tuple(), stream.draw_cycle(d, regime), d, trace)


@dataclass(frozen=True)
class ProfitEstimate:
    mean: float
    stderr: float
    n_reps: int


def cycle_profit(policy: Policy, e: EconomicParams, outcome: CycleOutcome) -> float:
    return (
        (e.r1 - e.c1) * policy.Q1
        + (e.r2 - e.c2) * policy.Q2
        - (e.r1 + e.h1) * outcome.leftover1
        - (e.r2 + e.h2) * outcome.leftover2
    )


def estimate_profit(
    policy: Policy,
    e: EconomicParams,
    d: DemandModel,
    regime: ReplenishmentRegime,
    n_reps: int,
    seed,
) -> ProfitEstimate:
    """Renewal-reward estimate of the profit rate.

    The mean cycle profit is divided by the exact mean cycle length, not by
    the sampled lengths.
    """
    if n_reps < 2:
        raise ValueError(f"need at least two replications, got {n_reps}")
    profits = np.empty(n_reps)
    for i, stream in enumerate(EventStream.spawn(seed, n_reps)):
        profits[i] = cycle_profit(policy, e, simulate_cycle(policy, d, regime, stream))
    length = regime.mean_cycle_length
    return ProfitEstimate(
        mean=float(profits.mean()) / length,
        stderr=float(profits.std(ddof=1)) / math.sqrt(n_reps) / length,
        n_reps=n_reps,
    )


def simulate_leftovers(
    policy: Policy, d: DemandModel, regime: ReplenishmentRegime, n_reps: int, seed
) -> np.ndarray:
    """Array of shape ``(n_reps, 2)`` with end-of-cycle leftovers."""
    out = np.empty((n_reps, 2), dtype=int)
    for i, stream in enumerate(EventStream.spawn(seed, n_reps)):
        out[i] = simulate_cycle(policy, d, regime, stream).leftovers
    return out


QUADRUPLE_OFFSETS = ((1, 1), (1, 0), (0, 1), (0, 0))


def coupled_quadruple_trace(
    Q1: int, Q2: int, d: DemandModel, regime: ReplenishmentRegime, stream: EventStream
) -> dict[tuple[int, int], tuple[int, int]]:
    """Run systems started at ``(Q1+1, Q2+1), (Q1+1, Q2), (Q1, Q2+1), (Q1, Q2)``
    against one shared event record; map each start to its leftovers."""
    events = stream.draw_cycle(d, regime)
    out = {}
    for a, b in QUADRUPLE_OFFSETS:
        start = (Q1 + a, Q2 + b)
        out[start] = run_events(start, events, d).leftovers
    return out


def coupling_gaps(Q1: int, Q2: int, trace: dict) -> tuple[int, int]:
    """Per-product ``(A - B) - (C - D)``; the coupling argument makes both >= 0."""
    A, B = trace[(Q1 + 1, Q2 + 1)], trace[(Q1 + 1, Q2)]
    C, D = trace[(Q1, Q2 + 1)], trace[(Q1, Q2)]
    return tuple((A[i] - B[i]) - (C[i] - D[i]) for i in range(2))
