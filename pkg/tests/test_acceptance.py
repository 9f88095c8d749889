"""Release gate: the ten acceptance criteria at their stated tolerances.

Each test records a single ``criterion N: PASS|FAIL ...`` line, printed in
the terminal summary (and immediately when run with ``-s``).
"""

import pytest

from subinv import cli, validation

from conftest import ACCEPTANCE_LINES


def report(n, passed, detail, seconds=None):
    timing = f" [{seconds:.1f}s]" if seconds is not None else ""
    line = f"criterion {n}: {'PASS' if passed else 'FAIL'} {detail}{timing}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@pytest.fixture(scope="module")
def submodularity_run():
    return validation.submodularity(n_sets=20, qmax=15)


@pytest.fixture(scope="module")
def optimizer_run():
    return validation.optimizer_equivalence(n_instances=50, cap=15)


def test_criterion_01_transient_oracle():
    r = validation.transient_equivalence(qmax=6, times=(0.1, 0.5, 1.0, 2.0), atol=1e-9)
    ok = r.metrics["max_error"] <= 1e-9 and r.seconds < 30
    assert report(1, ok, f"transient max error {r.metrics['max_error']:.2e} <= 1e-9, limit 30s", r.seconds)


def test_criterion_02_stationary_oracle():
    r = validation.stationary_equivalence(qmax=6, mus=(0.2, 1.0, 5.0), atol=1e-10)
    ok = r.metrics["max_error"] <= 1e-10 and r.seconds < 10
    assert report(2, ok, f"stationary max error {r.metrics['max_error']:.2e} <= 1e-10, limit 10s", r.seconds)


def test_criterion_03_corner_value():
    r = validation.corner_mass(qmax=6, mus=(0.2, 1.0, 5.0), atol=1e-12)
    ok = r.metrics["max_error"] <= 1e-12
    assert report(3, ok, f"corner mass max error {r.metrics['max_error']:.2e} <= 1e-12", r.seconds)


def test_criterion_04_independence_reduction():
    r = validation.independence_reduction(qmax=6, atol=1e-10)
    ok = r.metrics["max_error"] <= 1e-10
    assert report(4, ok, f"no-substitution marginal max error {r.metrics['max_error']:.2e} <= 1e-10", r.seconds)


def test_criterion_05_submodularity(submodularity_run):
    r = submodularity_run
    m = r.metrics
    ok = m["violations"] == 0 and m["max_mixed"] <= 1e-9 and r.seconds < 120
    detail = f"{m['violations']} violations on 20 sets x 2 regimes x 15x15, max {m['max_mixed']:.2e} <= 1e-9, limit 120s"
    assert report(5, ok, detail, r.seconds)


def test_criterion_06_coupling():
    r = validation.coupling(n_traces=10_000)
    m = r.metrics
    ok = m["violations"] == 0 and m["traces"] == 20_000
    assert report(6, ok, f"{m['violations']} violations in {m['traces']} coupled traces", r.seconds)


def test_criterion_07_monotone_profile(submodularity_run, optimizer_run):
    runs = submodularity_run.metrics["profiles"] + optimizer_run.metrics["profiles"]
    bad = submodularity_run.metrics["bad_profiles"] + optimizer_run.metrics["bad_profiles"]
    assert report(7, bad == 0, f"{bad} non-monotone Q2*(Q1) profiles in {runs} optimization runs")


def test_criterion_08_optimizer_equivalence(optimizer_run):
    m = optimizer_run.metrics
    share = m["strictly_fewer"] / m["instances"]
    ok = m["mismatches"] == 0 and m["more_evaluations"] == 0 and share >= 0.8
    detail = (
        f"{m['mismatches']} best-rate mismatches in {m['instances']} instances, "
        f"{m['more_evaluations']} with more evaluations, {share:.0%} strictly fewer (need 80%)"
    )
    assert report(8, ok, detail, optimizer_run.seconds)


def test_criterion_09_monte_carlo():
    r = validation.monte_carlo(n_reps=100_000, z=3.0)
    m = r.metrics
    ok = m["worst_z"] <= 3.0 and m["policies"] == 10 and r.seconds < 120
    assert report(9, ok, f"worst deviation {m['worst_z']:.2f} stderr <= 3 over 10 policies, limit 120s", r.seconds)


def test_criterion_10_scenarios_via_validate(capsys):
    import time

    start = time.perf_counter()
    code = cli.main(["validate", "--reps", "0"])
    seconds = time.perf_counter() - start
    out = capsys.readouterr().out
    names = [
        "substitution never lowers the optimal profit",
        "mixed ratios: low-ratio product dropped at large capacity",
        "fixed cycles beat exponential cycles at the optimum",
        "both ratios high: same quantities with and without substitution at low capacity",
    ]
    found = {n: next((line for line in out.splitlines() if n in line), None) for n in names}
    ok = code == 0 and all(line and line.startswith("[PASS]") for line in found.values()) and seconds < 300
    detail = ", ".join(f"({k}) {'PASS' if v and v.startswith('[PASS]') else 'FAIL'}" for k, v in zip("abcd", found.values()))
    assert report(10, ok, f"{detail} via `subinv validate`, limit 300s", seconds)
