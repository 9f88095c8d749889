"""Stationary inventory distribution under exponential replenishment times.

With replenishments arriving at rate ``mu`` the inventory chain jumps back to
``(Q1, Q2)`` from every state.  By PASTA the stationary law is also the law
of the leftovers found by a replenishment.  :func:`stationary_distribution`
evaluates the product-form closed form; :func:`balance_oracle` solves the
global balance equations of the assembled generator directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse import coo_matrix, identity
from scipy.special import logsumexp

from .core import DemandModel, InvalidParameterError, derived_rates
from .transient import InventoryDistribution, _check_grid, _log_binom

DENSE_LIMIT = 4000


@dataclass(frozen=True)
class StationaryConstants:
    q1: float
    q2: float
    q3: float
    A1: float
    A2: float
    B1: float
    B2: float


def stationary_constants(d: DemandModel, mu: float) -> StationaryConstants:
    r = derived_rates(d)
    return StationaryConstants(
        q1=d.lambda1 / (r.s + mu),
        q2=d.lambda2 / (r.s + mu),
        q3=mu / (r.s + mu),
        A1=r.s1 / (r.s1 + mu),
        A2=r.s2 / (r.s2 + mu),
        B1=d.lambda1 / (r.s2 + mu),
        B2=d.lambda2 / (r.s1 + mu),
    )


def _check_mu(mu):
    if not mu > 0:
        raise InvalidParameterError(f"replenishment rate mu must be positive, got {mu}")


def _single_product(Q: int, rate: float, mu: float) -> np.ndarray:
    """Stationary leftover of one product selling at ``rate``, indexed by units left."""
    out = np.zeros(Q + 1)
    if Q == 0:
        out[0] = 1.0
        return out
    ratio = rate / (rate + mu)
    # pi(Q - i) = (1 - ratio) * ratio**i for i < Q; the rest is at 0
    out[1:] = (1 - ratio) * ratio ** np.arange(Q - 1, -1, -1)
    out[0] = ratio**Q
    return out


def _edge(Qa, Qb, qa, qb, q3, A, B):
    """Log-mass of states (Qa - i, 0), i = 0..Qa-1, where product b is gone."""
    i = np.arange(Qa)[:, None]
    k = np.arange(Qa)[None, :]
    with np.errstate(divide="ignore"):
        terms = np.where(
            k <= i,
            (i - k) * np.log(A) + k * np.log(qa) + _log_binom(Qb + k - 1, k),
            -np.inf,
        )
    return np.log(B) + (Qb - 1) * np.log(qb) + np.log(q3) + logsumexp(terms, axis=1)


def stationary_distribution(Q1: int, Q2: int, d: DemandModel, mu: float) -> InventoryDistribution:
    """Closed-form stationary distribution of the inventory chain.

    Interior states carry ``C(i1+i2, i1) q1^i1 q2^i2 q3`` where ``i`` counts
    units sold; each edge is a finite convolution of the interior mass with a
    geometric factor; ``(0, 0)`` collects the outflow of its two neighbours.
    An order size of zero is handled as a one-product chain.
    """
    _check_grid(Q1, Q2)
    _check_mu(mu)
    Q1, Q2 = int(Q1), int(Q2)
    rates = derived_rates(d)
    mass = np.zeros((Q1 + 1, Q2 + 1))
    if Q1 == 0:
        mass[0, :] = _single_product(Q2, rates.s2, mu)
        return InventoryDistribution(mass, "stationary")
    if Q2 == 0:
        mass[:, 0] = _single_product(Q1, rates.s1, mu)
        return InventoryDistribution(mass, "stationary")

    c = stationary_constants(d, mu)
    i1, i2 = np.meshgrid(np.arange(Q1), np.arange(Q2), indexing="ij")
    interior = np.exp(
        _log_binom(i1 + i2, i1) + i1 * np.log(c.q1) + i2 * np.log(c.q2) + np.log(c.q3)
    )
    # index (Q - i) reverses the sold-units axis
    mass[1:, 1:] = interior[::-1, ::-1]
    edge1 = np.exp(_edge(Q1, Q2, c.q1, c.q2, c.q3, c.A1, c.B2))
    edge2 = np.exp(_edge(Q2, Q1, c.q2, c.q1, c.q3, c.A2, c.B1))
    mass[1:, 0] = edge1[::-1]
    mass[0, 1:] = edge2[::-1]
    mass[0, 0] = (rates.s1 * mass[1, 0] + rates.s2 * mass[0, 1]) / mu
    return InventoryDistribution(mass, "stationary")


def _generator_entries(Q1, Q2, d, mu):
    rates = derived_rates(d)
    width = Q2 + 1
    top = (Q1 + 1) * width - 1
    rows, cols, vals = [], [], []
    for i1 in range(Q1 + 1):
        for i2 in range(Q2 + 1):
            row = i1 * width + i2
            out = []
            if i1 > 0 and i2 > 0:
                out = [(row - width, d.lambda1), (row - 1, d.lambda2)]
            elif i1 > 0:
                out = [(row - width, rates.s1)]
            elif i2 > 0:
                out = [(row - 1, rates.s2)]
            if row != top:
                out.append((top, mu))
            for col, rate in out:
                rows.append(row)
                cols.append(col)
                vals.append(rate)
            rows.append(row)
            cols.append(row)
            vals.append(-sum(rate for _, rate in out))
    return rows, cols, vals, top + 1


def generator_matrix(Q1: int, Q2: int, d: DemandModel, mu: float, sparse: bool = False):
    """Rate matrix of the chain with replenishment, using net rates.

    Same state order as :func:`subinv.transient.one_step_matrix`; the row of
    ``(Q1, Q2)`` has no self-loop, so its diagonal is ``-s``.
    """
    _check_grid(Q1, Q2)
    rows, cols, vals, size = _generator_entries(int(Q1), int(Q2), d, mu)
    G = coo_matrix((vals, (rows, cols)), shape=(size, size))
    return G.tocsr() if sparse else G.toarray()


def balance_oracle(
    Q1: int, Q2: int, d: DemandModel, mu: float, dense_limit: int = DENSE_LIMIT, tol: float = 1e-15
) -> InventoryDistribution:
    """Reference stationary distribution from ``pi G = 0, sum(pi) = 1``.

    Up to ``dense_limit`` states the system is solved directly with one balance
    equation replaced by the normalization; beyond that, power iteration on the
    uniformized chain is used.
    """
    _check_grid(Q1, Q2)
    _check_mu(mu)
    Q1, Q2 = int(Q1), int(Q2)
    size = (Q1 + 1) * (Q2 + 1)
    if size <= dense_limit:
        A = generator_matrix(Q1, Q2, d, mu).T
        A[-1, :] = 1.0
        b = np.zeros(size)
        b[-1] = 1.0
        pi = lu_solve(lu_factor(A), b)
    else:
        pi = _power_method(generator_matrix(Q1, Q2, d, mu, sparse=True), tol)
    return InventoryDistribution(pi.reshape(Q1 + 1, Q2 + 1), "stationary")


def _power_method(G, tol, max_iter=1_000_000):
    rate = -G.diagonal().min()
    PT = (identity(G.shape[0], format="csr") + G / rate).T.tocsr()
    pi = np.full(G.shape[0], 1.0 / G.shape[0])
    for _ in range(max_iter):
        new = PT @ pi
        if np.abs(new - pi).max() < tol:
            return new / new.sum()
        pi = new
    raise RuntimeError("power iteration did not converge")


def expected_leftover_random(Q1: int, Q2: int, d: DemandModel, mu: float) -> tuple[float, float]:
    """Expected leftovers seen by a replenishment (stationary means)."""
    return stationary_distribution(Q1, Q2, d, mu).expected_leftover()
