"""End-of-cycle inventory distribution under a fixed replenishment time.

During a cycle the two inventory levels form a pure-death chain on
``{0..Q1} x {0..Q2}`` started at ``(Q1, Q2)``: with both products on the shelf
product ``i`` sells at rate ``lambda_i``; once one product is gone the other
sells at its spill-over rate ``s1`` or ``s2``; ``(0, 0)`` is absorbing.

Two independent routes to the same distribution are provided:

* :func:`transient_distribution` evaluates the closed form obtained by
  uniformizing at rate ``s = lambda1 + lambda2`` and counting lattice paths;
* :func:`uniformization_oracle` builds the one-step matrix explicitly and
  accumulates Poisson-weighted vector-matrix products.

Masses are stored as an array ``mass[j1, j2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln, xlogy
from scipy.stats import poisson

from .core import DemandModel, DomainError, InvalidParameterError, derived_rates

DEFAULT_TOL = 1e-12

# masses this far below zero are rounding noise and get clamped
NEGATIVE_SLACK = 1e-12


@dataclass(frozen=True)
class InventoryDistribution:
    """Probability mass over the inventory grid ``{0..Q1} x {0..Q2}``.

    ``kind`` is ``"transient"`` (then ``t`` is the elapsed time) or
    ``"stationary"``.
    """

    mass: np.ndarray
    kind: str
    t: Optional[float] = None

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float)
        if mass.ndim != 2:
            raise ValueError("mass must be a 2-d array indexed [j1, j2]")
        if self.kind not in ("transient", "stationary"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        low = mass.min()
        if low < -1e-9:
            raise ValueError(f"negative probability mass {low:.3e}")
        mass[mass < 0] = 0.0
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def Q1(self) -> int:
        return self.mass.shape[0] - 1

    @property
    def Q2(self) -> int:
        return self.mass.shape[1] - 1

    def __getitem__(self, state):
        return float(self.mass[state])

    def total(self) -> float:
        return float(self.mass.sum())

    def marginal(self, i: int) -> np.ndarray:
        """Distribution of the leftover of product ``i`` (index = units left)."""
        if i == 1:
            return self.mass.sum(axis=1)
        if i == 2:
            return self.mass.sum(axis=0)
        raise InvalidParameterError(f"product index must be 1 or 2, got {i!r}")

    def expected_leftover(self) -> tuple[float, float]:
        e1 = float(np.dot(np.arange(self.Q1 + 1), self.marginal(1)))
        e2 = float(np.dot(np.arange(self.Q2 + 1), self.marginal(2)))
        return e1, e2

    def transposed(self) -> InventoryDistribution:
        return InventoryDistribution(self.mass.T, self.kind, self.t)


@dataclass(frozen=True)
class KStepDistribution:
    """State distribution of the uniformized chain after ``k`` steps from ``(Q1, Q2)``."""

    k: int
    mass: np.ndarray

    @property
    def Q1(self) -> int:
        return self.mass.shape[0] - 1

    @property
    def Q2(self) -> int:
        return self.mass.shape[1] - 1


def _close_at_origin(mass: np.ndarray) -> np.ndarray:
    """Assign ``1 - (everything else)`` to state ``(0, 0)``."""
    mass[(mass < 0) & (mass >= -NEGATIVE_SLACK)] = 0.0
    mass[0, 0] = 0.0
    mass[0, 0] = max(1.0 - mass.sum(), 0.0)
    return mass


def _check_grid(Q1, Q2):
    for name, q in (("Q1", Q1), ("Q2", Q2)):
        if int(q) != q or q < 0:
            raise InvalidParameterError(f"{name} must be a nonnegative integer, got {q!r}")


def _log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def poisson_cutoff(x: float, tol: float) -> int:
    """Smallest ``K`` with ``P(N > K) < tol`` for ``N ~ Poisson(x)``."""
    if tol <= 0:
        raise InvalidParameterError(f"truncation tolerance must be positive, got {tol}")
    if x == 0:
        return 0
    k = max(int(poisson.isf(tol, x)), 0)
    while poisson.sf(k, x) >= tol:
        k += 1
    while k > 0 and poisson.sf(k - 1, x) < tol:
        k -= 1
    return k


def kstep_probs(Q1: int, Q2: int, k: int, d: DemandModel) -> KStepDistribution:
    """Exact ``k``-step distribution of the uniformized chain started at ``(Q1, Q2)``.

    Interior states are reached only after exactly ``Q1-j1+Q2-j2`` steps; the
    edge ``(j1, 0)`` is entered for the first time at some step ``l`` (ending on
    a product-2 sale) and then drifts down at probability ``s1/s`` per step.
    Everything is evaluated in log space.  Requires ``Q1, Q2 >= 1``.
    """
    _check_grid(Q1, Q2)
    if Q1 < 1 or Q2 < 1:
        raise DomainError("the lattice-path formulas need Q1 >= 1 and Q2 >= 1")
    if int(k) != k or k < 0:
        raise InvalidParameterError(f"step count must be a nonnegative integer, got {k!r}")
    rates = derived_rates(d)
    s = rates.s
    log_u1, log_u2 = math.log(d.lambda1 / s), math.log(d.lambda2 / s)
    mass = np.zeros((Q1 + 1, Q2 + 1))

    # interior: a single step count reaches (j1, j2)
    j1, j2 = np.meshgrid(np.arange(1, Q1 + 1), np.arange(1, Q2 + 1), indexing="ij")
    hit = (Q1 - j1) + (Q2 - j2) == k
    if hit.any():
        i1, i2 = Q1 - j1[hit], Q2 - j2[hit]
        mass[j1[hit], j2[hit]] = np.exp(_log_binom(k, i1) + i1 * log_u1 + i2 * log_u2)

    mass[1:, 0] = _edge_kstep(Q1, Q2, k, log_u1, log_u2, rates.s1 / s, d.lambda2 * (1 - d.p21) / s)
    mass[0, 1:] = _edge_kstep(Q2, Q1, k, log_u2, log_u1, rates.s2 / s, d.lambda1 * (1 - d.p12) / s)
    return KStepDistribution(int(k), _close_at_origin(mass))


def _edge_kstep(Qa, Qb, k, log_ua, log_ub, move, stay):
    """k-step mass on the edge where product b is exhausted, for ja = 1..Qa."""
    out = np.zeros(Qa)
    for ja in range(1, Qa + 1):
        n0 = Qa + Qb - ja
        if k < n0:
            continue
        ls = np.arange(Qb, n0 + 1)
        m = n0 - ls
        logs = (
            _log_binom(ls - 1, Qb - 1)
            + Qb * log_ub
            + (ls - Qb) * log_ua
            + _log_binom(k - ls, m)
            + xlogy(m, move)
            + xlogy(k - n0, stay)
        )
        out[ja - 1] = np.exp(logs).sum()
    return out


def _edge_series(w, lmax, mmax, move, stay):
    """Table ``G[l, m] = sum_k w[k] * C(k-l, m) * move**m * stay**(k-l-m)``.

    Uses the Pascal recursions ``G(l, 0) = w(l) + stay*G(l+1, 0)`` and
    ``G(l, m) = stay*G(l+1, m) + move*G(l+1, m-1)``, run as IIR filters over
    the reversed weight sequence.  Rows are ``l = 0..lmax``.
    """
    n = max(len(w), lmax + 1)
    rev = np.zeros(n)
    rev[n - len(w):] = w[::-1]
    cols = np.empty((n, mmax + 1))
    y = lfilter([1.0], [1.0, -stay], rev)
    cols[:, 0] = y
    for m in range(1, mmax + 1):
        y = lfilter([0.0, move], [1.0, -stay], y)
        cols[:, m] = y
    return cols[::-1][: lmax + 1]


def _edge_mass(Qa, Qb, G, log_ua, log_ub):
    """Mass on states (ja, 0), ja = 1..Qa, from the first-passage decomposition."""
    ja = np.arange(1, Qa + 1)[:, None]
    ls = np.arange(Qb, Qa + Qb)[None, :]
    m = Qa + Qb - ja - ls
    valid = m >= 0
    log_coef = _log_binom(ls - 1, Qb - 1) + Qb * log_ub + (ls - Qb) * log_ua
    series = G[np.broadcast_to(ls, m.shape), np.where(valid, m, 0)]
    terms = np.where(valid, np.exp(log_coef) * series, 0.0)
    return terms.sum(axis=1)


def _single_product(Q: int, rate: float, t: float) -> np.ndarray:
    """Leftover law (Q - D)^+ with D ~ Poisson(rate * t), indexed by units left."""
    out = np.zeros(Q + 1)
    if Q == 0:
        out[0] = 1.0
        return out
    x = rate * t
    out[1:] = poisson.pmf(Q - np.arange(1, Q + 1), x)
    out[0] = poisson.sf(Q - 1, x)
    return out


def transient_distribution(
    Q1: int, Q2: int, t: float, d: DemandModel, tol: float = DEFAULT_TOL
) -> InventoryDistribution:
    """Distribution of ``(n1(t), n2(t))`` given ``(n1(0), n2(0)) = (Q1, Q2)``.

    The infinite Poisson series on the two edges is cut at the smallest index
    whose Poisson(``s*t``) upper tail is below ``tol``.  An order size of zero
    reduces the chain to a single product selling at its spill-over rate.
    """
    _check_grid(Q1, Q2)
    if tol <= 0:
        raise InvalidParameterError(f"truncation tolerance must be positive, got {tol}")
    if t < 0 or not math.isfinite(t):
        raise InvalidParameterError(f"time must be finite and nonnegative, got {t}")
    Q1, Q2 = int(Q1), int(Q2)
    mass = np.zeros((Q1 + 1, Q2 + 1))
    if t == 0:
        mass[Q1, Q2] = 1.0
        return InventoryDistribution(mass, "transient", t)
    rates = derived_rates(d)
    if Q1 == 0:
        mass[0, :] = _single_product(Q2, rates.s2, t)
        return InventoryDistribution(mass, "transient", t)
    if Q2 == 0:
        mass[:, 0] = _single_product(Q1, rates.s1, t)
        return InventoryDistribution(mass, "transient", t)

    s = rates.s
    x = s * t
    log_u1, log_u2 = math.log(d.lambda1 / s), math.log(d.lambda2 / s)

    j1, j2 = np.meshgrid(np.arange(1, Q1 + 1), np.arange(1, Q2 + 1), indexing="ij")
    i1, i2 = Q1 - j1, Q2 - j2
    n = i1 + i2
    mass[1:, 1:] = np.exp(
        -x + n * math.log(x) - gammaln(n + 1) + _log_binom(n, i1) + i1 * log_u1 + i2 * log_u2
    )

    kmax = poisson_cutoff(x, tol)
    w = poisson.pmf(np.arange(kmax + 1), x)
    lmax = Q1 + Q2 - 1
    G1 = _edge_series(w, lmax, Q1 - 1, rates.s1 / s, d.lambda2 * (1 - d.p21) / s)
    G2 = _edge_series(w, lmax, Q2 - 1, rates.s2 / s, d.lambda1 * (1 - d.p12) / s)
    mass[1:, 0] = _edge_mass(Q1, Q2, G1, log_u1, log_u2)
    mass[0, 1:] = _edge_mass(Q2, Q1, G2, log_u2, log_u1)
    return InventoryDistribution(_close_at_origin(mass), "transient", t)


def one_step_matrix(Q1: int, Q2: int, d: DemandModel) -> np.ndarray:
    """Dense one-step matrix ``I + Q/s`` of the uniformized chain.

    States are ordered ``(i1, i2) -> i1*(Q2+1) + i2``, so that the matrix has
    the block lower-bidiagonal layout (block rows by product-1 level).
    """
    _check_grid(Q1, Q2)
    rates = derived_rates(d)
    s = rates.s
    width = Q2 + 1
    size = (Q1 + 1) * width
    P = np.zeros((size, size))
    for i1 in range(Q1 + 1):
        for i2 in range(Q2 + 1):
            row = i1 * width + i2
            if i1 > 0 and i2 > 0:
                P[row, row - width] = d.lambda1 / s
                P[row, row - 1] = d.lambda2 / s
            elif i1 > 0:
                P[row, row - width] = rates.s1 / s
            elif i2 > 0:
                P[row, row - 1] = rates.s2 / s
            P[row, row] = 1.0 - P[row].sum()
    return P


def uniformization_oracle(
    Q1: int, Q2: int, t: float, d: DemandModel, tol: float = DEFAULT_TOL
) -> InventoryDistribution:
    """Reference transient distribution by explicit uniformization.

    Iterates ``v <- v @ P`` from the point mass at ``(Q1, Q2)`` and adds
    Poisson(``s*t``) weights term by term until the remaining weight is below
    ``tol``.  Valid for any ``Q1, Q2 >= 0``.
    """
    _check_grid(Q1, Q2)
    if tol <= 0:
        raise InvalidParameterError(f"truncation tolerance must be positive, got {tol}")
    if t < 0:
        raise InvalidParameterError(f"time must be nonnegative, got {t}")
    Q1, Q2 = int(Q1), int(Q2)
    P = one_step_matrix(Q1, Q2, d)
    v = np.zeros(P.shape[0])
    v[-1] = 1.0
    x = derived_rates(d).s * t
    acc = np.zeros_like(v)
    cum = 0.0
    k = 0
    while True:
        weight = math.exp(-x + k * math.log(x) - math.lgamma(k + 1)) if x > 0 else float(k == 0)
        acc += weight * v
        cum += weight
        if 1.0 - cum < tol and k >= x:
            break
        v = v @ P
        k += 1
    # the truncated tail is left where the chain is heading: at (0, 0)
    acc[0] += max(1.0 - acc.sum(), 0.0)
    return InventoryDistribution(acc.reshape(Q1 + 1, Q2 + 1), "transient", t)


def expected_leftover_fixed(
    Q1: int, Q2: int, T: float, d: DemandModel, tol: float = DEFAULT_TOL
) -> tuple[float, float]:
    """Expected units of each product left at the end of a cycle of length ``T``."""
    return transient_distribution(Q1, Q2, T, d, tol).expected_leftover()
