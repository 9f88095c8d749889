"""Parameter containers and small helpers shared by every other module.

Quantities (order sizes, inventory levels) are plain ints; rates, prices and
probabilities are floats.  All containers are frozen dataclasses and validate
themselves on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union


class InvalidParameterError(ValueError):
    """Raised when a parameter violates its sign or range constraint."""


class InfiniteRegionError(ValueError):
    """Raised when a capacity constraint does not bound both order sizes."""


class DomainError(ValueError):
    """Raised when a closed form is asked for outside the grid it covers."""


# slack used when flooring capacity ratios, so that e.g. C=0.3, a=0.1 gives 3
_FLOOR_EPS = 1e-9


def _check_finite(name, value):
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class DemandModel:
    """Poisson arrival rates and substitution probabilities of the two products.

    ``p12`` is the probability that a customer for product 1 who finds it out of
    stock buys product 2 instead; ``p21`` is the reverse.
    """

    lambda1: float
    lambda2: float
    p12: float = 0.0
    p21: float = 0.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "p12", "p21"):
            _check_finite(name, getattr(self, name))
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise InvalidParameterError(
                f"arrival rates must be positive, got ({self.lambda1}, {self.lambda2})"
            )
        for name in ("p12", "p21"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {p}")

    @property
    def rates(self) -> AggregateRates:
        return derived_rates(self)

    def swapped(self) -> DemandModel:
        """The same model with the product labels exchanged."""
        return DemandModel(self.lambda2, self.lambda1, self.p21, self.p12)

    def with_substitution(self, p12: float, p21: float) -> DemandModel:
        return DemandModel(self.lambda1, self.lambda2, p12, p21)


@dataclass(frozen=True)
class AggregateRates:
    """Sales rates when both products (``s``), only product 1 (``s1``) or only
    product 2 (``s2``) are on the shelf."""

    s: float
    s1: float
    s2: float


def derived_rates(d: DemandModel) -> AggregateRates:
    # s2 uses p12: product-1 customers spill over onto product 2 once 1 is gone
    s = d.lambda1 + d.lambda2
    s1 = d.lambda1 + d.lambda2 * d.p21
    s2 = d.lambda2 + d.lambda1 * d.p12
    # guard against s1 = s + ulp when p = 1
    return AggregateRates(s, min(s1, s), min(s2, s))


@dataclass(frozen=True)
class EconomicParams:
    """Retail price ``r``, unit cost ``c`` and end-of-cycle holding cost ``h``.

    Costs above the price are allowed; they simply make a product unprofitable.
    """

    r1: float
    c1: float
    h1: float
    r2: float
    c2: float
    h2: float

    def __post_init__(self):
        for name in ("r1", "c1", "h1", "r2", "c2", "h2"):
            value = getattr(self, name)
            _check_finite(name, value)
            if value < 0:
                raise InvalidParameterError(f"{name} must be nonnegative, got {value}")

    def price(self, i: int) -> float:
        return (self.r1, self.r2)[_index(i)]

    def cost(self, i: int) -> float:
        return (self.c1, self.c2)[_index(i)]

    def holding(self, i: int) -> float:
        return (self.h1, self.h2)[_index(i)]

    def swapped(self) -> EconomicParams:
        return EconomicParams(self.r2, self.c2, self.h2, self.r1, self.c1, self.h1)


def _index(i: int) -> int:
    if i not in (1, 2):
        raise InvalidParameterError(f"product index must be 1 or 2, got {i!r}")
    return i - 1


def critical_ratio(e: EconomicParams, i: int) -> float:
    """Newsvendor critical ratio ``(r_i - c_i) / (r_i + h_i)`` of product ``i``.

    Negative when the product is sold below cost.
    """
    r, c, h = e.price(i), e.cost(i), e.holding(i)
    if r + h == 0:
        raise ZeroDivisionError(f"critical ratio undefined for product {i}: r + h = 0")
    return (r - c) / (r + h)


@dataclass(frozen=True)
class Policy:
    """Order-up-to quantities placed at every replenishment epoch."""

    Q1: int
    Q2: int

    def __post_init__(self):
        for name in ("Q1", "Q2"):
            q = getattr(self, name)
            if isinstance(q, bool) or int(q) != q or q < 0:
                raise InvalidParameterError(f"{name} must be a nonnegative integer, got {q!r}")
            object.__setattr__(self, name, int(q))

    def as_tuple(self) -> tuple[int, int]:
        return (self.Q1, self.Q2)


@dataclass(frozen=True)
class CapacityConstraint:
    """Linear restriction ``a1*Q1 + a2*Q2 <= C`` on the order quantities."""

    a1: float
    a2: float
    C: float

    def __post_init__(self):
        for name in ("a1", "a2", "C"):
            value = getattr(self, name)
            _check_finite(name, value)
            if value < 0:
                raise InvalidParameterError(f"{name} must be nonnegative, got {value}")
        if self.a1 == 0 and self.a2 == 0:
            raise InvalidParameterError("at least one of a1, a2 must be positive")

    def is_feasible(self, Q1: int, Q2: int) -> bool:
        return self.a1 * Q1 + self.a2 * Q2 <= self.C * (1 + _FLOOR_EPS) + _FLOOR_EPS

    def max_q1(self) -> int:
        """Largest Q1 allowed when Q2 = 0."""
        return self._max_units(self.C, self.a1)

    def max_q2(self, Q1: int = 0) -> int:
        """Largest Q2 allowed next to a given Q1."""
        return self._max_units(self.C - self.a1 * Q1, self.a2)

    @staticmethod
    def _max_units(budget: float, weight: float) -> int:
        if weight == 0:
            raise InfiniteRegionError("a zero weight leaves that order quantity unbounded")
        if budget < 0:
            return -1
        return int(math.floor(budget / weight + _FLOOR_EPS))

    def with_capacity(self, C: float) -> CapacityConstraint:
        return CapacityConstraint(self.a1, self.a2, C)


def enumerate_feasible(k: CapacityConstraint) -> Iterator[Policy]:
    """Yield every feasible integer policy, Q1 ascending then Q2 ascending."""
    if k.a1 == 0 or k.a2 == 0:
        raise InfiniteRegionError("a zero weight leaves that order quantity unbounded")
    for q1 in range(k.max_q1() + 1):
        for q2 in range(k.max_q2(q1) + 1):
            yield Policy(q1, q2)


@dataclass(frozen=True)
class Fixed:
    """Replenishment every ``T`` time units."""

    T: float

    def __post_init__(self):
        _check_finite("T", self.T)
        if self.T <= 0:
            raise InvalidParameterError(f"cycle length T must be positive, got {self.T}")

    @property
    def mean_cycle_length(self) -> float:
        return self.T

    @property
    def tag(self) -> str:
        return f"fixed:{self.T:g}"


@dataclass(frozen=True)
class Exponential:
    """Replenishment epochs form a Poisson process of rate ``mu``."""

    mu: float

    def __post_init__(self):
        _check_finite("mu", self.mu)
        if self.mu <= 0:
            raise InvalidParameterError(f"replenishment rate mu must be positive, got {self.mu}")

    @property
    def mean_cycle_length(self) -> float:
        return 1.0 / self.mu

    @property
    def tag(self) -> str:
        return f"exp:{self.mu:g}"


ReplenishmentRegime = Union[Fixed, Exponential]


def parse_regime(text: str) -> ReplenishmentRegime:
    """Parse ``fixed:T`` or ``exp:mu``."""
    kind, sep, value = text.strip().partition(":")
    if not sep:
        raise InvalidParameterError(f"regime must look like 'fixed:T' or 'exp:mu', got {text!r}")
    try:
        number = float(value)
    except ValueError:
        raise InvalidParameterError(f"bad number in regime {text!r}") from None
    kind = kind.strip().lower()
    if kind == "fixed":
        return Fixed(number)
    if kind in ("exp", "exponential"):
        return Exponential(number)
    raise InvalidParameterError(f"unknown regime kind {kind!r}")


@dataclass(frozen=True)
class InventoryModel:
    """Everything needed to evaluate and optimize a policy."""

    demand: DemandModel
    econ: EconomicParams
    constraint: CapacityConstraint
    regime: ReplenishmentRegime
    tol: float = 1e-12
