import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from subinv.core import DemandModel, EconomicParams, Exponential, Fixed, Policy
from subinv.simulator import (
    CycleEvents,
    EventStream,
    coupled_quadruple_trace,
    coupling_gaps,
    estimate_profit,
    run_events,
    simulate_cycle,
    simulate_leftovers,
)
from subinv.stationary import stationary_distribution
from subinv.transient import transient_distribution

from conftest import SCENARIO1

N = 100_000
ENVELOPE = 4 / math.sqrt(N)


class ScriptedStream:
    """Returns the same prepared event record on every draw."""

    def __init__(self, events):
        self.events = events

    def draw_cycle(self, d, regime):
        return self.events


def events(*arrivals, length=1.0):
    times = np.array([a[0] for a in arrivals], dtype=float)
    products = np.array([a[1] for a in arrivals], dtype=np.int8)
    coins = np.array([a[2] for a in arrivals], dtype=float)
    return CycleEvents(length, times, products, coins)


def empirical(samples, Q):
    return np.bincount(samples, minlength=Q + 1) / len(samples)


def test_nothing_stocked_all_lost():
    out = simulate_cycle(Policy(0, 0), DemandModel(20, 20, 1, 1), Fixed(1.0), EventStream(1))
    assert out.leftovers == (0, 0) and out.sold1 == out.sold2 == 0


def test_leftover_law_without_substitution():
    Q1, Q2, d = 6, 4, DemandModel(5, 3)
    left = simulate_leftovers(Policy(Q1, Q2), d, Fixed(1.0), N, seed=5)
    for i, (Q, lam) in enumerate([(Q1, 5), (Q2, 3)]):
        law = np.append(poisson.sf(Q - 1, lam), poisson.pmf(Q - np.arange(1, Q + 1), lam))
        assert np.abs(empirical(left[:, i], Q) - law).max() <= ENVELOPE


@pytest.mark.parametrize(
    "regime, exact",
    [
        (Fixed(1.0), lambda d: transient_distribution(5, 6, 1.0, d)),
        (Exponential(1.0), lambda d: stationary_distribution(5, 6, d, 1.0)),
    ],
)
def test_leftover_law_with_substitution(regime, exact):
    d = DemandModel(4, 5, 0.6, 0.3)
    left = simulate_leftovers(Policy(5, 6), d, regime, N, seed=9)
    law = exact(d)
    for i, Q in ((0, 5), (1, 6)):
        assert np.abs(empirical(left[:, i], Q) - law.marginal(i + 1)).max() <= ENVELOPE


def test_full_substitution_reduction():
    q, lam1, n = 4, 3.0, 40_000
    d = DemandModel(lam1, 1e-12, p12=1.0, p21=0.0)
    sold = [simulate_cycle(Policy(0, q), d, Fixed(1.0), s).sold2 for s in EventStream.spawn(3, n)]
    law = poisson.pmf(np.arange(q + 1), lam1)
    law[q] = poisson.sf(q - 1, lam1)
    assert np.abs(np.bincount(sold, minlength=q + 1) / n - law).max() <= 4 / math.sqrt(n)


@pytest.mark.parametrize("regime", [Fixed(2.0), Exponential(0.5)])
def test_degenerate_no_demand_rate(regime):
    e = EconomicParams(50, 10, 3, 20, 4, 1)
    est = estimate_profit(Policy(3, 5), e, DemandModel(1e-9, 1e-9), regime, 50, seed=1)
    assert est.mean == pytest.approx(-((10 + 3) * 3 + (4 + 1) * 5) / regime.mean_cycle_length)
    assert est.stderr == 0.0


def test_stderr_scales_with_root_n(scenario1_demand):
    # a policy near mean demand, so cycle profits are spread out
    a = estimate_profit(Policy(25, 22), SCENARIO1, scenario1_demand, Fixed(1.0), 20_000, seed=4)
    b = estimate_profit(Policy(25, 22), SCENARIO1, scenario1_demand, Fixed(1.0), 40_000, seed=4)
    assert a.stderr / b.stderr == pytest.approx(math.sqrt(2), rel=0.05)


def test_estimate_needs_two_reps(scenario1_demand):
    with pytest.raises(ValueError):
        estimate_profit(Policy(1, 1), SCENARIO1, scenario1_demand, Fixed(1.0), 1, seed=0)


def test_reproducible_and_prefix_stable(scenario1_demand):
    run = lambda n: [simulate_cycle(Policy(7, 7), scenario1_demand, Exponential(1.0), s) for s in EventStream.spawn(42, n)]
    a, b = run(50), run(80)
    assert a == run(50) and a == b[:50]
    assert a != [simulate_cycle(Policy(7, 7), scenario1_demand, Exponential(1.0), s) for s in EventStream.spawn(43, 50)]


def test_pcg64_stream_is_pinned():
    # freezes the generator and the draw order: cycle length first, then arrivals
    ev = EventStream(2024).draw_cycle(DemandModel(2, 3), Exponential(1.0))
    ref = np.random.Generator(np.random.PCG64(2024))
    assert ev.length == ref.exponential(1.0)


def test_equal_times_serve_product_one_first():
    class Clash(EventStream):
        def _arrival_times(self, rate, horizon):
            return np.array([0.5])

    ev = Clash(0).draw_cycle(DemandModel(1, 1), Fixed(1.0))
    assert ev.products.tolist() == [1, 2]
    out = run_events((1, 0), ev, DemandModel(1, 1, 0, 1))
    assert out.sold1 == 1 and out.substituted_2to1 == 0


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 12), st.integers(0, 12), st.floats(0.1, 20), st.floats(0.1, 20),
    st.floats(0, 1), st.floats(0, 1), st.booleans(), st.integers(0, 10**6),
)
def test_conservation(Q1, Q2, l1, l2, p12, p21, exp, seed):
    d = DemandModel(l1, l2, p12, p21)
    out = simulate_cycle(Policy(Q1, Q2), d, Exponential(1.0) if exp else Fixed(1.0), EventStream(seed))
    assert out.leftover1 + out.sold1 == Q1 and out.leftover2 + out.sold2 == Q2
    assert min(out.leftovers) >= 0
    assert out.substituted_1to2 <= out.sold2 and out.substituted_2to1 <= out.sold1


def test_trace_format():
    buf = io.StringIO()
    ev = events((0.1, 1, 0.9), (0.2, 2, 0.1), (0.3, 1, 0.1), (0.4, 1, 0.9))
    out = run_events((1, 1), ev, DemandModel(1, 1, 0.5, 0.5), trace=buf)
    assert buf.getvalue().splitlines() == [
        "0.1,arrival,1,sold",
        "0.2,arrival,2,sold",
        "0.3,arrival,1,lost",
        "0.4,arrival,1,lost",
        "1.0,replenish,,0:0",
    ]
    assert out.leftovers == (0, 0)


# coupling -------------------------------------------------------------------

@pytest.mark.parametrize("i", [2, 3, 7])
def test_scripted_product2_arrival_case(i):
    # A=(i,1), B=(i,0), C=(i-1,1), D=(i-1,0); one product-2 customer willing to switch
    d = DemandModel(1, 1, 0.0, 0.5)
    trace = coupled_quadruple_trace(i - 1, 0, d, Fixed(1.0), ScriptedStream(events((0.5, 2, 0.0))))
    assert trace == {(i, 1): (i, 0), (i, 0): (i - 1, 0), (i - 1, 1): (i - 1, 0), (i - 1, 0): (i - 2, 0)}
    assert coupling_gaps(i - 1, 0, trace) == (0, 0)


def test_zero_demand_coupling():
    d = DemandModel(1e-9, 1e-9, 0.5, 0.5)
    trace = coupled_quadruple_trace(3, 2, d, Fixed(1.0), EventStream(0))
    assert trace == {s: s for s in trace}
    assert coupling_gaps(3, 2, trace) == (0, 0)


@pytest.mark.parametrize("regime", [Fixed(1.0), Exponential(1.0)])
def test_coupling_inequality_holds(regime):
    rng = np.random.default_rng(8)
    for stream in EventStream.spawn(77, 1500):
        Q1, Q2 = (int(q) for q in rng.integers(0, 8, 2))
        d = DemandModel(*rng.uniform(0.5, 15, 2), *rng.uniform(0, 1, 2))
        assert min(coupling_gaps(Q1, Q2, coupled_quadruple_trace(Q1, Q2, d, regime, stream))) >= 0
