"""Scenario files, capacity sweeps and CSV output.

A scenario file is flat ``key = value`` text with ``#`` comments::

    lambda1 = 20
    lambda2 = 20
    r1 = 50
    c1 = 10
    ...
    C_min = 5
    C_max = 80
    C_step = 5
    regimes = fixed:1, exp:1
    substitution = 0:0, 0.4:0.4

``regimes`` lists ``fixed:T`` and/or ``exp:mu`` entries; ``substitution``
lists ``p12:p21`` pairs.  Three scenarios ship with the package and can be
referred to by name (see :data:`SHIPPED`).
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .core import (
    CapacityConstraint,
    DemandModel,
    EconomicParams,
    InvalidParameterError,
    InventoryModel,
    Policy,
    ReplenishmentRegime,
    parse_regime,
)
from .optimizer import optimize_monotone
from .simulator import estimate_profit

SHIPPED = ("both_high", "both_low", "mixed")

CSV_HEADER = "C,regime,p12,p21,Q1,Q2,profit,mc_mean,mc_stderr,evals"


class ConfigError(ValueError):
    """A scenario file could not be parsed or describes an invalid scenario."""


_REQUIRED = ("lambda1", "lambda2", "r1", "c1", "r2", "c2")
_NUMERIC = {
    "lambda1", "lambda2", "r1", "c1", "h1", "r2", "c2", "h2",
    "a1", "a2", "C", "C_min", "C_max", "C_step", "tol",
}
_INTEGER = {"mc_reps", "mc_seed"}
_TEXT = {"name", "regimes", "substitution"}
_KNOWN = _NUMERIC | _INTEGER | _TEXT


@dataclass(frozen=True)
class ScenarioConfig:
    demand: DemandModel
    econ: EconomicParams
    a1: float = 1.0
    a2: float = 1.0
    C_min: float = 0.0
    C_max: float = 0.0
    C_step: float = 1.0
    regimes: tuple = ()
    substitutions: tuple = ((0.0, 0.0),)
    mc_reps: Optional[int] = None
    mc_seed: int = 0
    tol: float = 1e-12
    name: str = "scenario"

    def __post_init__(self):
        if self.C_step < 1:
            raise ConfigError(f"C_step must be at least 1, got {self.C_step:g}")
        if self.C_max < self.C_min:
            raise ConfigError(f"empty capacity sweep: C_min={self.C_min:g} > C_max={self.C_max:g}")
        if not self.regimes:
            raise ConfigError("at least one replenishment regime is required")
        if not self.substitutions:
            raise ConfigError("at least one substitution pair is required")

    def capacities(self) -> list[float]:
        n = int(math.floor((self.C_max - self.C_min) / self.C_step + 1e-9))
        return [self.C_min + i * self.C_step for i in range(n + 1)]

    def model(self, C: float, regime: ReplenishmentRegime, p12: float, p21: float) -> InventoryModel:
        return InventoryModel(
            demand=self.demand.with_substitution(p12, p21),
            econ=self.econ,
            constraint=CapacityConstraint(self.a1, self.a2, C),
            regime=regime,
            tol=self.tol,
        )


def _pairs(text: str) -> tuple:
    out = []
    for item in text.split(","):
        a, sep, b = item.strip().partition(":")
        if not sep:
            raise ValueError(f"expected p12:p21, got {item.strip()!r}")
        out.append((float(a), float(b)))
    return tuple(out)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    """Parse scenario text; errors name the file, line and field."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        where = f"{source}:{lineno}"
        if not sep or not key:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key not in _KNOWN:
            raise ConfigError(f"{where}: unknown field {key!r}")
        if key in values:
            raise ConfigError(f"{where}: field {key!r} already set on line {lines[key]}")
        try:
            if key in _NUMERIC:
                number = float(value)
                if not math.isfinite(number):
                    raise ValueError("not finite")
                values[key] = number
            elif key in _INTEGER:
                values[key] = int(value)
            elif key == "regimes":
                values[key] = tuple(parse_regime(item) for item in value.split(","))
            elif key == "substitution":
                values[key] = _pairs(value)
            else:
                values[key] = value
        except (ValueError, InvalidParameterError) as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None
        lines[key] = lineno

    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required field(s) {', '.join(missing)}")
    if "C" in values and ("C_min" in values or "C_max" in values):
        raise ConfigError(f"{source}:{lines['C']}: give either C or C_min/C_max, not both")
    if "C" in values:
        values["C_min"] = values["C_max"] = values.pop("C")
    for key in ("C_min", "C_max"):
        if key not in values:
            raise ConfigError(f"{source}: missing required field {key!r}")

    try:
        demand = DemandModel(values.pop("lambda1"), values.pop("lambda2"))
        econ = EconomicParams(
            values.pop("r1"), values.pop("c1"), values.pop("h1", 0.0),
            values.pop("r2"), values.pop("c2"), values.pop("h2", 0.0),
        )
        for p12, p21 in values.get("substitution", ()):
            demand.with_substitution(p12, p21)
        CapacityConstraint(values.get("a1", 1.0), values.get("a2", 1.0), values["C_min"])
    except InvalidParameterError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    kwargs = dict(values)
    if "substitution" in kwargs:
        kwargs["substitutions"] = kwargs.pop("substitution")
    kwargs.setdefault("regimes", (parse_regime("fixed:1"),))
    if kwargs.get("mc_reps") is not None and kwargs["mc_reps"] < 2:
        raise ConfigError(f"{source}: mc_reps must be at least 2")
    try:
        return ScenarioConfig(demand=demand, econ=econ, **kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path_or_name: str) -> ScenarioConfig:
    """Read a scenario file, or one of the shipped scenarios by name."""
    if os.path.exists(path_or_name):
        with open(path_or_name, encoding="utf-8") as fh:
            return parse_config(fh.read(), path_or_name)
    if path_or_name in SHIPPED:
        text = resources.files("subinv").joinpath(f"scenarios/{path_or_name}.cfg").read_text("utf-8")
        return parse_config(text, f"{path_or_name}.cfg")
    raise ConfigError(f"no scenario file or shipped scenario named {path_or_name!r}")


@dataclass(frozen=True)
class SweepRow:
    C: float
    regime: str
    p12: float
    p21: float
    Q1: int
    Q2: int
    profit: float
    evaluations: int
    mc_mean: Optional[float] = None
    mc_stderr: Optional[float] = None

    @property
    def substitution(self) -> tuple[float, float]:
        return (self.p12, self.p21)


@dataclass
class SweepCache:
    """Profit memo tables keyed by (regime, substitution); capacity-independent."""

    tables: dict = field(default_factory=dict)

    def table(self, regime, pair) -> dict:
        return self.tables.setdefault((regime, pair), {})


def _sweep_group(cfg: ScenarioConfig, regime, pair, reps, seed, table: dict) -> list[SweepRow]:
    rows = []
    p12, p21 = pair
    for C in cfg.capacities():
        model = cfg.model(C, regime, p12, p21)
        result = optimize_monotone(model, table)
        mc_mean = mc_stderr = None
        if reps:
            est = estimate_profit(result.best, model.econ, model.demand, regime, reps, seed)
            mc_mean, mc_stderr = est.mean, est.stderr
        rows.append(
            SweepRow(
                C=C,
                regime=regime.tag,
                p12=p12,
                p21=p21,
                Q1=result.best.Q1,
                Q2=result.best.Q2,
                profit=result.best_rate,
                evaluations=result.evaluations,
                mc_mean=mc_mean,
                mc_stderr=mc_stderr,
            )
        )
    return rows


def _sweep_group_star(args) -> list[SweepRow]:
    return _sweep_group(*args, {})


def run_sweep(
    cfg: ScenarioConfig,
    mc_reps: Optional[int] = None,
    mc_seed: Optional[int] = None,
    cache: Optional[SweepCache] = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Optimal policy for every capacity x regime x substitution pair.

    Rows are ordered by capacity, then regime tag, then substitution pair,
    whatever ``jobs`` is.  With ``mc_reps`` (or the file's ``mc_reps``) the
    optimum is also estimated by simulation.  ``jobs > 1`` spreads the
    (regime, substitution) groups over worker processes; ``cache`` is then
    not used.
    """
    reps = cfg.mc_reps if mc_reps is None else mc_reps
    seed = cfg.mc_seed if mc_seed is None else mc_seed
    groups = [(cfg, regime, pair, reps, seed) for regime in cfg.regimes for pair in cfg.substitutions]
    rows: list[SweepRow] = []
    if jobs > 1 and len(groups) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(groups))) as pool:
            for chunk in pool.map(_sweep_group_star, groups):
                rows.extend(chunk)
    else:
        cache = cache or SweepCache()
        for g in groups:
            rows.extend(_sweep_group(*g, cache.table(g[1], g[2])))
    rows.sort(key=lambda r: (r.C, r.regime, r.p12, r.p21))
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    text = format(float(x), ".10g")
    return "0" if text == "-0" else text


def format_csv(rows: list[SweepRow]) -> str:
    if not rows:
        raise ValueError("no rows to write")
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in rows:
        fields = (r.C, r.regime, r.p12, r.p21, r.Q1, r.Q2, r.profit, r.mc_mean, r.mc_stderr, r.evaluations)
        out.write(",".join(f if isinstance(f, str) else _fmt(f) for f in fields) + "\n")
    return out.getvalue()


def emit_csv(rows: list[SweepRow], destination=None) -> bytes:
    """Encode rows as UTF-8 CSV; write to ``destination`` (path or binary file) if given."""
    data = format_csv(rows).encode("utf-8")
    if destination is None:
        return data
    if isinstance(destination, (str, os.PathLike)):
        try:
            with open(destination, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write CSV to {os.fspath(destination)}: {exc.strerror}") from exc
    else:
        destination.write(data)
    return data


def best_policy(rows: list[SweepRow], C: float, regime: str, pair: tuple[float, float]) -> Policy:
    for r in rows:
        if r.C == C and r.regime == regime and r.substitution == pair:
            return Policy(r.Q1, r.Q2)
    raise KeyError((C, regime, pair))
