import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import null_space

from subinv.core import DemandModel, InvalidParameterError, derived_rates
from subinv.stationary import (
    balance_oracle,
    expected_leftover_random,
    generator_matrix,
    stationary_constants,
    stationary_distribution,
)


def test_constants_sum_to_one():
    c = stationary_constants(DemandModel(3, 4, 0.2, 0.6), 1.5)
    assert c.q1 + c.q2 + c.q3 == pytest.approx(1.0, abs=1e-15)
    r = derived_rates(DemandModel(3, 4, 0.2, 0.6))
    assert c.A1 == pytest.approx(r.s1 / (r.s1 + 1.5))
    assert c.B1 == pytest.approx(3 / (r.s2 + 1.5))


def test_full_stock_corner():
    pi = stationary_distribution(5, 7, DemandModel(20, 20, 0.4, 0.4), 1.0)
    assert pi[5, 7] == pytest.approx(1 / 41, abs=1e-15)
    assert pi.kind == "stationary"


def test_first_interior_neighbour():
    d = DemandModel(6, 9, 0.3, 0.3)
    c = stationary_constants(d, 2.0)
    pi = stationary_distribution(4, 3, d, 2.0)
    assert pi[3, 3] == pytest.approx(c.q1 * c.q3, rel=1e-14)
    assert pi[4, 2] == pytest.approx(c.q2 * c.q3, rel=1e-14)


def test_single_unit_null_space():
    d = DemandModel(2, 3, 0.5, 0.8)
    G = generator_matrix(1, 1, d, 0.7)
    ns = null_space(G.T)[:, 0]
    ns = ns / ns.sum()
    assert np.abs(stationary_distribution(1, 1, d, 0.7).mass.ravel() - ns).max() < 1e-14


def test_generator_rows_sum_to_zero_and_corner_diagonal():
    d = DemandModel(2, 3, 0.5, 0.8)
    G = generator_matrix(3, 2, d, 0.7)
    assert np.abs(G.sum(axis=1)).max() < 1e-14
    assert G[-1, -1] == pytest.approx(-5.0)
    assert np.array_equal(G, generator_matrix(3, 2, d, 0.7, sparse=True).toarray())


GRID = list(
    itertools.product(
        [(20.0, 20.0), (5.0, 15.0)], [0.0, 0.4, 1.0], [0.0, 0.4, 1.0], [0.2, 1.0, 5.0]
    )
)


@pytest.mark.parametrize("lams, p12, p21, mu", GRID)
def test_closed_form_matches_balance_up_to_8(lams, p12, p21, mu):
    d = DemandModel(*lams, p12, p21)
    for Q1, Q2 in itertools.product(range(1, 9), repeat=2):
        a = stationary_distribution(Q1, Q2, d, mu)
        b = balance_oracle(Q1, Q2, d, mu)
        assert np.abs(a.mass - b.mass).max() <= 1e-10
        assert abs(a.total() - 1) <= 1e-10
        assert (a.mass >= 0).all()


@pytest.mark.parametrize("Q1, Q2", [(0, 5), (4, 0), (0, 0)])
def test_zero_quantity_matches_balance(Q1, Q2):
    d = DemandModel(3, 2, 0.7, 0.1)
    a = stationary_distribution(Q1, Q2, d, 0.9)
    b = balance_oracle(Q1, Q2, d, 0.9)
    assert np.abs(a.mass - b.mass).max() < 1e-13


def test_power_method_beyond_dense_limit():
    d = DemandModel(4, 5, 0.4, 0.4)
    a = stationary_distribution(6, 6, d, 2.0)
    b = balance_oracle(6, 6, d, 2.0, dense_limit=10)
    assert np.abs(a.mass - b.mass).max() < 1e-12


@pytest.mark.parametrize("scale, mu", [(1.0, 40e6), (1e-8, 1.0)])
def test_instant_replenishment_limit(scale, mu):
    # mu huge relative to s, or demand tiny relative to mu; corner mass is 1/(1 + s/mu)
    d = DemandModel(20 * scale, 20 * scale, 0.4, 0.4)
    for fn in (stationary_distribution, balance_oracle):
        assert fn(3, 3, d, mu)[3, 3] == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 8), st.integers(1, 8), st.floats(0.1, 30), st.floats(0.1, 30),
    st.floats(0, 1), st.floats(0, 1), st.floats(0.05, 20),
)
def test_swap_symmetry(Q1, Q2, l1, l2, p12, p21, mu):
    d = DemandModel(l1, l2, p12, p21)
    a = stationary_distribution(Q1, Q2, d, mu)
    b = stationary_distribution(Q2, Q1, d.swapped(), mu)
    assert np.abs(a.mass - b.transposed().mass).max() < 1e-13


def test_large_grid_is_stable():
    pi = stationary_distribution(300, 300, DemandModel(20, 20, 0.4, 0.4), 0.2)
    assert np.isfinite(pi.mass).all() and abs(pi.total() - 1) < 1e-10


def test_expected_leftover_limits():
    d = DemandModel(20, 20, 0.4, 0.4)
    e1, e2 = expected_leftover_random(5, 5, d, 1e6)
    assert e1 == pytest.approx(5, abs=1e-3) and e2 == pytest.approx(5, abs=1e-3)
    e1, e2 = expected_leftover_random(5, 5, d, 1e-3)
    assert e1 < 1e-3 and e2 < 1e-3


def test_bad_mu():
    with pytest.raises(InvalidParameterError):
        stationary_distribution(2, 2, DemandModel(1, 1), 0.0)
    with pytest.raises(InvalidParameterError):
        balance_oracle(2, 2, DemandModel(1, 1), -1.0)
