"""Cross-checks between every closed form and its independent reference.

Each check returns a :class:`CheckResult`; :func:`run_all` strings them
together for ``subinv validate``.  Sizes default to the release gate.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.stats import poisson

from .core import (
    CapacityConstraint,
    DemandModel,
    EconomicParams,
    Exponential,
    Fixed,
    InventoryModel,
    Policy,
)
from .optimizer import mixed_differences, optimize_bruteforce, optimize_monotone, SUBMODULARITY_SLACK
from .profit import profit_rate
from .scenarios import SHIPPED, ScenarioConfig, SweepRow, load_config, run_sweep
from .simulator import EventStream, coupled_quadruple_trace, coupling_gaps, estimate_profit
from .stationary import balance_oracle, stationary_distribution
from .transient import transient_distribution, uniformization_oracle

P_GRID = (0.0, 0.4, 1.0)
LAMBDA_GRID = ((20.0, 20.0), (5.0, 15.0))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(name: str, fn: Callable[[], tuple]) -> CheckResult:
    """``fn`` returns ``(passed, detail)`` or ``(passed, detail, metrics)``."""
    start = time.perf_counter()
    passed, detail, *rest = fn()
    metrics = rest[0] if rest else {}
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start, metrics)


def _demand_grid():
    for (l1, l2), p12, p21 in itertools.product(LAMBDA_GRID, P_GRID, P_GRID):
        yield DemandModel(l1, l2, p12, p21)


def transient_equivalence(qmax=6, times=(0.1, 0.5, 1.0, 2.0), atol=1e-9) -> CheckResult:
    def run():
        worst = 0.0
        for d in _demand_grid():
            for Q1, Q2 in itertools.product(range(1, qmax + 1), repeat=2):
                for t in times:
                    a = transient_distribution(Q1, Q2, t, d).mass
                    b = uniformization_oracle(Q1, Q2, t, d).mass
                    worst = max(worst, float(np.abs(a - b).max()))
        return worst <= atol, f"max |closed form - uniformization| = {worst:.2e} (tol {atol:g})", {"max_error": worst}

    return _timed("transient closed form vs uniformization", run)


def stationary_equivalence(qmax=6, mus=(0.2, 1.0, 5.0), atol=1e-10) -> CheckResult:
    def run():
        worst = 0.0
        for d in _demand_grid():
            for Q1, Q2 in itertools.product(range(1, qmax + 1), repeat=2):
                for mu in mus:
                    a = stationary_distribution(Q1, Q2, d, mu).mass
                    b = balance_oracle(Q1, Q2, d, mu).mass
                    worst = max(worst, float(np.abs(a - b).max()))
        return worst <= atol, f"max |closed form - balance solve| = {worst:.2e} (tol {atol:g})", {"max_error": worst}

    return _timed("stationary closed form vs balance equations", run)


def corner_mass(qmax=6, mus=(0.2, 1.0, 5.0), atol=1e-12) -> CheckResult:
    def run():
        worst = 0.0
        for d in _demand_grid():
            for Q1, Q2 in itertools.product(range(1, qmax + 1), repeat=2):
                for mu in mus:
                    pi = stationary_distribution(Q1, Q2, d, mu)
                    worst = max(worst, abs(pi[Q1, Q2] - mu / (d.lambda1 + d.lambda2 + mu)))
        return worst <= atol, f"max |pi(Q1,Q2) - mu/(s+mu)| = {worst:.2e} (tol {atol:g})", {"max_error": worst}

    return _timed("stationary mass at full stock", run)


def independence_reduction(qmax=6, times=(0.1, 0.5, 1.0, 2.0), atol=1e-10) -> CheckResult:
    def run():
        worst = 0.0
        for l1, l2 in LAMBDA_GRID:
            d = DemandModel(l1, l2, 0.0, 0.0)
            for Q1, Q2 in itertools.product(range(1, qmax + 1), repeat=2):
                for t in times:
                    dist = transient_distribution(Q1, Q2, t, d)
                    for i, (Q, lam) in enumerate(((Q1, l1), (Q2, l2)), start=1):
                        worst = max(worst, float(np.abs(dist.marginal(i) - _newsvendor_leftover(Q, lam * t)).max()))
        return worst <= atol, f"max |marginal - (Q - Poisson)^+ law| = {worst:.2e} (tol {atol:g})", {"max_error": worst}

    return _timed("no-substitution marginals", run)


def _newsvendor_leftover(Q: int, x: float) -> np.ndarray:
    law = np.empty(Q + 1)
    law[1:] = poisson.pmf(Q - np.arange(1, Q + 1), x)
    law[0] = poisson.sf(Q - 1, x)
    return law


def random_model(
    rng: np.random.Generator, regime_kind: str, cap: Optional[int] = None, lam_hi: float = 25.0
) -> InventoryModel:
    """A random valid instance.

    Without ``cap`` the capacity is 0 (used for grid scans that ignore it).
    With ``cap`` the weights are drawn from {1, 2, 3} and C lies between half
    and all of ``cap`` units of the lighter product.
    """
    d = DemandModel(*rng.uniform(0.5, lam_hi, 2), *rng.uniform(0.0, 1.0, 2))
    r = rng.uniform(5.0, 60.0, 2)
    c = r * rng.uniform(0.05, 0.95, 2)
    h = rng.uniform(0.0, 10.0, 2)
    e = EconomicParams(r[0], c[0], h[0], r[1], c[1], h[1])
    if regime_kind == "fixed":
        regime = Fixed(float(rng.uniform(0.2, 2.0)))
    else:
        regime = Exponential(float(rng.uniform(0.5, 5.0)))
    if cap is None:
        k = CapacityConstraint(1.0, 1.0, 0.0)
    else:
        a = rng.integers(1, 4, 2).astype(float)
        k = CapacityConstraint(a[0], a[1], float(rng.integers(cap // 2, cap + 1)) * min(a))
    return InventoryModel(d, e, k, regime)


def submodularity(n_sets=20, qmax=15, seed=20240601) -> CheckResult:
    """Mixed differences on a ``qmax`` grid; each set is also optimized at
    capacity ``qmax`` to exercise the monotone profile on the same values."""

    def run():
        rng = np.random.default_rng(seed)
        worst = -np.inf
        count = bad_profile = 0
        for kind in ("fixed", "exp"):
            for _ in range(n_sets):
                model = random_model(rng, kind)
                shared: dict = {}
                diff = mixed_differences(model, qmax, shared)
                worst = max(worst, float(diff.max()))
                count += int((diff > SUBMODULARITY_SLACK).sum())
                bounded = replace(model, constraint=CapacityConstraint(1.0, 1.0, float(qmax)))
                bad_profile += not optimize_monotone(bounded, shared).profile_is_nonincreasing()
        return count == 0 and bad_profile == 0, (
            f"{count} violations, max mixed difference {worst:.2e} (slack {SUBMODULARITY_SLACK:g}), "
            f"{bad_profile} non-monotone profiles"
        ), {"violations": count, "max_mixed": worst, "profiles": 2 * n_sets, "bad_profiles": bad_profile}

    return _timed("submodularity of the profit rate", run)


def coupling(n_traces=10_000, seed=424242) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        violations = 0
        for kind in ("fixed", "exp"):
            for stream in EventStream.spawn([seed, 0 if kind == "fixed" else 1], n_traces):
                Q1, Q2 = (int(q) for q in rng.integers(0, 10, 2))
                d = DemandModel(*rng.uniform(0.5, 25.0, 2), *rng.uniform(0.0, 1.0, 2))
                regime = Fixed(float(rng.uniform(0.2, 2.0))) if kind == "fixed" else Exponential(float(rng.uniform(0.2, 5.0)))
                if min(coupling_gaps(Q1, Q2, coupled_quadruple_trace(Q1, Q2, d, regime, stream))) < 0:
                    violations += 1
        return violations == 0, f"{violations} violating traces out of {2 * n_traces}", {
            "traces": 2 * n_traces, "violations": violations,
        }

    return _timed("path-wise coupling of four systems", run)


def optimizer_equivalence(n_instances=50, cap=15, seed=777, min_strict=0.8) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        mismatches = fewer = total = bad_profile = worse = 0
        for kind in ("fixed", "exp"):
            for _ in range(n_instances):
                model = random_model(rng, kind, cap, lam_hi=6.0)
                shared: dict = {}
                mono = optimize_monotone(model, shared)
                brute = optimize_bruteforce(model, shared)
                total += 1
                mismatches += mono.best_rate != brute.best_rate
                worse += mono.evaluations > brute.evaluations
                fewer += mono.evaluations < brute.evaluations
                bad_profile += not (mono.profile_is_nonincreasing() and brute.profile_is_nonincreasing())
        share = fewer / total
        ok = mismatches == 0 and worse == 0 and bad_profile == 0 and share >= min_strict
        return ok, (
            f"{mismatches} rate mismatches, {bad_profile} non-monotone profiles, "
            f"{worse} runs with more evaluations, {share:.0%} strictly fewer"
        ), {
            "instances": total, "mismatches": mismatches, "more_evaluations": worse,
            "strictly_fewer": fewer, "profiles": 2 * total, "bad_profiles": bad_profile,
        }

    return _timed("monotone search vs brute force", run)


MC_POLICIES = (
    (DemandModel(20, 20, 0.4, 0.4), EconomicParams(50, 10, 0, 20, 4, 0), Fixed(1.0), Policy(10, 8)),
    (DemandModel(20, 20, 0.4, 0.4), EconomicParams(50, 10, 0, 20, 4, 0), Exponential(1.0), Policy(10, 10)),
    (DemandModel(5, 15, 0.0, 0.0), EconomicParams(30, 10, 2, 25, 15, 1), Fixed(0.5), Policy(3, 7)),
    (DemandModel(5, 15, 1.0, 0.2), EconomicParams(30, 10, 2, 25, 15, 1), Exponential(2.0), Policy(4, 6)),
    (DemandModel(3, 4, 0.7, 0.9), EconomicParams(10, 4, 1, 12, 5, 3), Fixed(2.0), Policy(6, 2)),
    (DemandModel(3, 4, 0.7, 0.9), EconomicParams(10, 4, 1, 12, 5, 3), Exponential(0.5), Policy(5, 5)),
    (DemandModel(8, 2, 0.5, 1.0), EconomicParams(20, 8, 0, 40, 20, 5), Fixed(1.0), Policy(9, 1)),
    (DemandModel(8, 2, 0.5, 1.0), EconomicParams(20, 8, 0, 40, 20, 5), Exponential(1.0), Policy(0, 6)),
    (DemandModel(12, 9, 0.3, 0.6), EconomicParams(15, 5, 0.5, 18, 9, 0.5), Fixed(0.8), Policy(10, 0)),
    (DemandModel(12, 9, 0.3, 0.6), EconomicParams(15, 5, 0.5, 18, 9, 0.5), Exponential(3.0), Policy(2, 3)),
)


def monte_carlo(n_reps=100_000, seed=2024, z=3.0) -> CheckResult:
    def run():
        worst = 0.0
        for i, (d, e, regime, policy) in enumerate(MC_POLICIES):
            exact = profit_rate(policy, e, d, regime).rate
            est = estimate_profit(policy, e, d, regime, n_reps, [seed, i])
            worst = max(worst, abs(est.mean - exact) / est.stderr if est.stderr > 0 else 0.0)
        return worst <= z, (
            f"worst |MC - exact| = {worst:.2f} standard errors over {len(MC_POLICIES)} policies (limit {z:g})"
        ), {"worst_z": worst, "policies": len(MC_POLICIES)}

    return _timed("simulation vs exact profit", run)


def _rows_by(rows: Iterable[SweepRow]):
    return {(r.C, r.regime, r.substitution): r for r in rows}


def scenario_checks(sweeps: Optional[dict[str, tuple[ScenarioConfig, list[SweepRow]]]] = None) -> list[CheckResult]:
    """Qualitative findings on the shipped capacity sweeps."""
    start = time.perf_counter()
    if sweeps is None:
        sweeps = {}
        for name in SHIPPED:
            cfg = load_config(name)
            sweeps[name] = (cfg, run_sweep(cfg))
    elapsed = time.perf_counter() - start
    no_sub, sub = (0.0, 0.0), (0.4, 0.4)
    results = []

    bad = []
    for name, (cfg, rows) in sweeps.items():
        table = _rows_by(rows)
        for C in cfg.capacities():
            for regime in cfg.regimes:
                a, b = table[(C, regime.tag, sub)], table[(C, regime.tag, no_sub)]
                if a.profit < b.profit - 1e-9:
                    bad.append(f"{name} C={C:g} {regime.tag}")
    results.append(CheckResult("substitution never lowers the optimal profit", not bad,
                               f"{len(bad)} violations" + (f": {bad[:3]}" if bad else ""), elapsed))

    cfg, rows = sweeps["mixed"]
    table = _rows_by(rows)
    C = cfg.C_max
    q2 = {regime.tag: table[(C, regime.tag, sub)].Q2 for regime in cfg.regimes}
    results.append(CheckResult("mixed ratios: low-ratio product dropped at large capacity",
                               all(v == 0 for v in q2.values()), f"Q2* at C={C:g}: {q2}"))

    bad = []
    for name, (cfg, rows) in sweeps.items():
        table = _rows_by(rows)
        fixed = [r for r in cfg.regimes if isinstance(r, Fixed)]
        rand = [r for r in cfg.regimes if isinstance(r, Exponential)]
        for C, f, x, pair in itertools.product(cfg.capacities(), fixed, rand, cfg.substitutions):
            if table[(C, f.tag, pair)].profit < table[(C, x.tag, pair)].profit - 1e-9:
                bad.append(f"{name} C={C:g} p={pair}")
    results.append(CheckResult("fixed cycles beat exponential cycles at the optimum", not bad,
                               f"{len(bad)} violations" + (f": {bad[:3]}" if bad else "")))

    cfg, rows = sweeps["both_high"]
    table = _rows_by(rows)
    C = cfg.C_min
    pairs = {regime.tag: ((table[(C, regime.tag, sub)].Q1, table[(C, regime.tag, sub)].Q2),
                          (table[(C, regime.tag, no_sub)].Q1, table[(C, regime.tag, no_sub)].Q2))
             for regime in cfg.regimes}
    results.append(CheckResult("both ratios high: same quantities with and without substitution at low capacity",
                               all(a == b for a, b in pairs.values()), f"C={C:g} (sub, nosub): {pairs}"))
    return results


def run_all(mc_reps: int = 100_000) -> list[CheckResult]:
    results = [
        transient_equivalence(),
        stationary_equivalence(),
        corner_mass(),
        independence_reduction(),
        submodularity(),
        coupling(),
        optimizer_equivalence(),
    ]
    if mc_reps:
        results.append(monte_carlo(mc_reps))
    results.extend(scenario_checks())
    return results
