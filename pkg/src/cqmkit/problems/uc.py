"""Unit commitment: commitment + startup binaries, dispatch continuum.

The model schedules thermal generators over a short horizon to meet demand
at minimum production-plus-startup cost.  Production above minimum output is
piecewise linear per generator (equal-width segments, non-decreasing
slopes); startups carry category costs keyed to how long the unit has been
down.  Constraints cover power balance, segment capacity, minimum up/down
windows, startup linkage and category validity.

Prior to the horizon a unit is assumed to continue its initial state
backwards in time, with the opposite state before that ("the unit ran until
its current downtime began").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ..exceptions import GenerationError, SizeLimitError
from ..model import (
    SENSE_EQ,
    SENSE_GE,
    SENSE_LE,
    Constraint,
    ConstrainedModel,
    Variable,
    check_feasibility,
    make_expr,
)

_INF = math.inf


@dataclass(frozen=True)
class GeneratorSpec:
    """One thermal unit; segment widths split (p_max - p_min) evenly."""

    name: str
    p_min: float
    p_max: float
    segment_slopes: tuple[float, ...]        # cost per MWh above minimum output
    min_power_cost: float                    # per-period cost of running at p_min
    startup_costs: tuple[float, ...]         # hottest first, non-decreasing
    min_up: int = 1
    min_down: int = 1
    downtime_limits: tuple[float, ...] = ()  # per category; defaults applied below
    initially_on: bool = False
    initial_periods: int = 1                 # how long the initial state has held

    def __post_init__(self):
        if self.p_min < 0 or self.p_min > self.p_max:
            raise ValueError(f"{self.name}: need 0 <= p_min <= p_max")
        if not self.segment_slopes:
            raise ValueError(f"{self.name}: at least one segment")
        if not self.startup_costs:
            raise ValueError(f"{self.name}: at least one startup category")
        if any(a > b for a, b in zip(self.startup_costs, self.startup_costs[1:])):
            raise ValueError(f"{self.name}: colder starts cannot be cheaper")
        if self.min_up < 1 or self.min_down < 1 or self.initial_periods < 1:
            raise ValueError(f"{self.name}: durations must be >= 1")
        if not self.downtime_limits:
            limits = tuple(4.0 * (s + 1) for s in range(len(self.startup_costs) - 1)) + (_INF,)
            object.__setattr__(self, "downtime_limits", limits)
        elif len(self.downtime_limits) != len(self.startup_costs):
            raise ValueError(f"{self.name}: one downtime limit per category")
        elif self.downtime_limits[-1] != _INF:
            raise ValueError(f"{self.name}: last category must accept any downtime")

    @property
    def categories(self) -> int:
        return len(self.startup_costs)

    @property
    def segments(self) -> int:
        return len(self.segment_slopes)

    @property
    def segment_width(self) -> float:
        return (self.p_max - self.p_min) / self.segments


@dataclass(frozen=True)
class UcSpec:
    generators: tuple[GeneratorSpec, ...]
    demand: tuple[float, ...]

    def __post_init__(self):
        if not self.generators or not self.demand:
            raise ValueError("need at least one generator and one period")
        cap = sum(g.p_max for g in self.generators)
        for t, load in enumerate(self.demand, start=1):
            if load < 0:
                raise GenerationError(f"demand at period {t} is negative")
            if load > cap + 1e-9:
                raise GenerationError(
                    f"demand {load} at period {t} exceeds total capacity {cap}")

    @property
    def periods(self) -> int:
        return len(self.demand)


def commit_id(g: GeneratorSpec, t: int) -> str:
    return f"u_{g.name}_t{t}"


def startup_id(g: GeneratorSpec, s: int, t: int) -> str:
    return f"start_{g.name}_s{s}_t{t}"


def power_id(g: GeneratorSpec, seg: int, t: int) -> str:
    return f"p_{g.name}_l{seg}_t{t}"


def _prior_on(g: GeneratorSpec, period: int) -> bool:
    """Commitment state at a non-positive period index."""
    if g.initially_on:
        return period >= 1 - g.initial_periods
    return period <= -g.initial_periods


def _hot_window_prior_credit(g: GeneratorSpec, t: int, limit: float) -> int:
    """1 when the pre-horizon schedule already has an on-period within the
    category's lookback window [t - limit - 1, t - 2]."""
    if limit == _INF:
        return 1
    lo = t - int(limit) - 1
    hi = min(t - 2, 0)
    return int(any(_prior_on(g, tau) for tau in range(lo, hi + 1)))


def gen_unit_commitment(spec: UcSpec) -> ConstrainedModel:
    """Build the constrained model for a fleet and demand profile.

    Raises :class:`GenerationError` when no feasible schedule could be
    exhibited at generation time.
    """
    T = spec.periods
    variables: list[Variable] = []
    objective_linear: dict[str, float] = {}
    constraints: list[Constraint] = []

    for g in spec.generators:
        width = g.segment_width
        for t in range(1, T + 1):
            u = commit_id(g, t)
            variables.append(Variable.binary(u))
            objective_linear[u] = g.min_power_cost
            for s in range(1, g.categories + 1):
                d = startup_id(g, s, t)
                variables.append(Variable.binary(d))
                objective_linear[d] = g.startup_costs[s - 1]
            for seg in range(1, g.segments + 1):
                p = power_id(g, seg, t)
                variables.append(Variable.continuous(p, 0.0, width))
                objective_linear[p] = g.segment_slopes[seg - 1]

    # (a) power balance per period
    for t in range(1, T + 1):
        linear: dict[str, float] = {}
        for g in spec.generators:
            linear[commit_id(g, t)] = g.p_min
            for seg in range(1, g.segments + 1):
                linear[power_id(g, seg, t)] = 1.0
        constraints.append(Constraint(
            make_expr(linear), SENSE_EQ, float(spec.demand[t - 1]), f"balance_t{t}"))

    for g in spec.generators:
        width = g.segment_width
        for t in range(1, T + 1):
            u = commit_id(g, t)
            # (b) segment output only when committed
            for seg in range(1, g.segments + 1):
                constraints.append(Constraint(
                    make_expr({power_id(g, seg, t): 1.0, u: -width}),
                    SENSE_LE, 0.0, f"segcap_{g.name}_l{seg}_t{t}"))

            # (c) minimum up/down windows
            u_prev = commit_id(g, t - 1) if t > 1 else None
            prev_const = float(_prior_on(g, 0)) if t == 1 else 0.0
            for tau in range(t + 1, min(t + g.min_up - 1, T) + 1):
                linear = {u: 1.0, commit_id(g, tau): -1.0}
                if u_prev:
                    linear[u_prev] = -1.0
                constraints.append(Constraint(
                    make_expr(linear), SENSE_LE, prev_const,
                    f"minup_{g.name}_t{t}_tau{tau}"))
            for tau in range(t + 1, min(t + g.min_down - 1, T) + 1):
                linear = {u: -1.0, commit_id(g, tau): 1.0}
                if u_prev:
                    linear[u_prev] = 1.0
                constraints.append(Constraint(
                    make_expr(linear), SENSE_LE, 1.0 - prev_const,
                    f"mindown_{g.name}_t{t}_tau{tau}"))

            # (d) startup linkage: turning on requires some startup category
            linear = {u: 1.0}
            for s in range(1, g.categories + 1):
                linear[startup_id(g, s, t)] = -1.0
            if u_prev:
                linear[u_prev] = -1.0
            constraints.append(Constraint(
                make_expr(linear), SENSE_LE, prev_const, f"startlink_{g.name}_t{t}"))

            # (d) category validity: hot categories need a recent on-period
            for s in range(1, g.categories + 1):
                limit = g.downtime_limits[s - 1]
                if limit == _INF:
                    continue
                linear = {startup_id(g, s, t): 1.0}
                lo = max(1, t - int(limit) - 1)
                for tau in range(lo, t - 1):
                    linear[commit_id(g, tau)] = linear.get(commit_id(g, tau), 0.0) - 1.0
                credit = _hot_window_prior_credit(g, t, limit)
                constraints.append(Constraint(
                    make_expr(linear), SENSE_LE, float(credit),
                    f"startcat_{g.name}_s{s}_t{t}"))

            # (e) at most one startup category fires
            if g.categories > 1:
                linear = {startup_id(g, s, t): 1.0 for s in range(1, g.categories + 1)}
                constraints.append(Constraint(
                    make_expr(linear), SENSE_LE, 1.0, f"startone_{g.name}_t{t}"))

        # Initial-state carryover: an unfinished minimum up/down run pins the
        # first periods.
        if g.initially_on and g.initial_periods < g.min_up:
            for t in range(1, min(g.min_up - g.initial_periods, T) + 1):
                constraints.append(Constraint(
                    make_expr({commit_id(g, t): 1.0}), SENSE_GE, 1.0,
                    f"carry_on_{g.name}_t{t}"))
        if not g.initially_on and g.initial_periods < g.min_down:
            for t in range(1, min(g.min_down - g.initial_periods, T) + 1):
                constraints.append(Constraint(
                    make_expr({commit_id(g, t): 1.0}), SENSE_LE, 0.0,
                    f"carry_off_{g.name}_t{t}"))

    model = ConstrainedModel(
        tuple(variables), make_expr(objective_linear), tuple(constraints))
    _verify_feasible(spec, model)
    return model


def schedule_assignment(spec: UcSpec, commits: np.ndarray):
    """Full assignment (commitments, startups, dispatch) for a 0/1 commitment
    matrix, or None when the pattern cannot be dispatched or legally started.

    Startups pick the cheapest valid category; dispatch is merit order.
    Minimum up/down runs are checked directly on the pattern (runs truncated
    by the horizon end are allowed), so this is an independent route from the
    window inequalities in the model.
    """
    G = len(spec.generators)
    T = spec.periods
    commits = np.asarray(commits, dtype=int).reshape(G, T)
    assignment: dict[str, float] = {}
    cost = 0.0

    for gi, g in enumerate(spec.generators):
        longest_hot = int(max((x for x in g.downtime_limits[:-1]), default=0))
        lookback = max(g.initial_periods, g.min_up, g.min_down, longest_hot + 2)
        history = [1 if _prior_on(g, tau) else 0 for tau in range(1 - lookback, 1)]
        series = history + commits[gi].tolist()
        base = len(history)

        # run-length legality within the horizon
        for t in range(T):
            pos = base + t
            if series[pos] == 1 and (pos == 0 or series[pos - 1] == 0):
                # on-run starting here must last min_up unless horizon-truncated
                run = 0
                q = pos
                while q < len(series) and series[q] == 1:
                    run += 1
                    q += 1
                if q < len(series) and run < g.min_up:
                    return None
            if series[pos] == 0 and pos > 0 and series[pos - 1] == 1:
                run = 0
                q = pos
                while q < len(series) and series[q] == 0:
                    run += 1
                    q += 1
                if q < len(series) and run < g.min_down:
                    return None
        # initial run carryover
        if series[base] != series[base - 1]:
            prior_run = 1
            q = base - 2
            while q >= 0 and series[q] == series[base - 1]:
                prior_run += 1
                q -= 1
            prior_run = max(prior_run, g.initial_periods)
            if series[base - 1] == 1 and prior_run < g.min_up:
                return None
            if series[base - 1] == 0 and prior_run < g.min_down:
                return None

        for t in range(1, T + 1):
            for s in range(1, g.categories + 1):
                assignment[startup_id(g, s, t)] = 0.0
            assignment[commit_id(g, t)] = float(commits[gi, t - 1])
            pos = base + t - 1
            if series[pos] == 1 and series[pos - 1] == 0:
                downtime = 0
                q = pos - 1
                while q >= 0 and series[q] == 0:
                    downtime += 1
                    q -= 1
                if q < 0:
                    downtime = max(downtime, g.initial_periods)
                category = next(s for s in range(1, g.categories + 1)
                                if downtime <= g.downtime_limits[s - 1])
                assignment[startup_id(g, category, t)] = 1.0
                cost += g.startup_costs[category - 1]

    # merit-order dispatch per period
    for t in range(1, T + 1):
        committed = [(gi, g) for gi, g in enumerate(spec.generators) if commits[gi, t - 1]]
        residual = spec.demand[t - 1] - sum(g.p_min for _, g in committed)
        if residual < -1e-9:
            return None
        for gi, g in enumerate(spec.generators):
            for seg in range(1, g.segments + 1):
                assignment[power_id(g, seg, t)] = 0.0
        ladder = sorted(
            ((g.segment_slopes[seg - 1], gi, seg, g)
             for gi, g in committed for seg in range(1, g.segments + 1)),
            key=lambda item: (item[0], item[1], item[2]))
        for slope, gi, seg, g in ladder:
            if residual <= 0:
                break
            take = min(residual, g.segment_width)
            assignment[power_id(g, seg, t)] = take
            cost += slope * take
            residual -= take
        if residual > 1e-9:
            return None
        cost += sum(g.min_power_cost for _, g in committed)

    return assignment, cost


def uc_oracle(spec: UcSpec):
    """Exact optimum by enumerating commitment patterns and dispatching each
    by merit order.  Returns ``(cost, assignment)``.

    Bounded to 4 generators x 4 periods with a single segment each.
    """
    G, T = len(spec.generators), spec.periods
    if G > 4 or T > 4:
        raise SizeLimitError("oracle bounded to 4 generators and 4 periods")
    if any(g.segments != 1 for g in spec.generators):
        raise SizeLimitError("oracle requires a single production segment")
    best_cost = np.inf
    best_assignment = None
    for bits in product((0, 1), repeat=G * T):
        commits = np.array(bits, dtype=int).reshape(G, T)
        result = schedule_assignment(spec, commits)
        if result is None:
            continue
        assignment, cost = result
        if cost < best_cost:
            best_cost = cost
            best_assignment = assignment
    if best_assignment is None:
        raise GenerationError("no feasible commitment pattern exists")
    return float(best_cost), best_assignment


def _verify_feasible(spec: UcSpec, model: ConstrainedModel) -> None:
    G, T = len(spec.generators), spec.periods
    for pattern in (np.ones((G, T), dtype=int), np.zeros((G, T), dtype=int)):
        result = schedule_assignment(spec, pattern)
        if result is None:
            continue
        feasible, _ = check_feasibility(model, result[0])
        if feasible:
            return
    if G * T <= 16 and all(g.segments == 1 for g in spec.generators):
        try:
            _, assignment = uc_oracle(spec)
        except (GenerationError, SizeLimitError):
            assignment = None
        if assignment is not None:
            feasible, _ = check_feasibility(model, assignment)
            if feasible:
                return
    raise GenerationError("could not exhibit a feasible schedule at generation time")


def random_fleet(num_generators: int, periods: int, seed: int = 0,
                 categories: int = 1, segments: int = 1) -> UcSpec:
    """Synthetic fleet with a demand profile the full fleet can always meet."""
    rng = np.random.default_rng(seed)
    generators = []
    for gi in range(1, num_generators + 1):
        p_min = float(rng.uniform(20.0, 60.0))
        p_max = p_min + float(rng.uniform(40.0, 120.0))
        slopes = tuple(sorted(float(rng.uniform(15.0, 45.0)) for _ in range(segments)))
        start_costs = tuple(sorted(float(rng.uniform(100.0, 600.0)) for _ in range(categories)))
        generators.append(GeneratorSpec(
            name=f"g{gi}",
            p_min=p_min,
            p_max=p_max,
            segment_slopes=slopes,
            min_power_cost=float(rng.uniform(300.0, 800.0)),
            startup_costs=start_costs,
            min_up=int(rng.integers(1, 3)),
            min_down=int(rng.integers(1, 3)),
            initially_on=False,
            initial_periods=2,
        ))
    floor = sum(g.p_min for g in generators)
    ceiling = sum(g.p_max for g in generators)
    demand = tuple(float(floor + rng.uniform(0.15, 0.75) * (ceiling - floor))
                   for _ in range(periods))
    return UcSpec(tuple(generators), demand)


def fleet_from_json(text: str) -> UcSpec:
    """Fleet spec from a JSON document mirroring the dataclass fields."""
    doc = json.loads(text)
    generators = []
    for entry in doc["generators"]:
        generators.append(GeneratorSpec(
            name=str(entry["name"]),
            p_min=float(entry["p_min"]),
            p_max=float(entry["p_max"]),
            segment_slopes=tuple(float(x) for x in entry["segment_slopes"]),
            min_power_cost=float(entry["min_power_cost"]),
            startup_costs=tuple(float(x) for x in entry["startup_costs"]),
            min_up=int(entry.get("min_up", 1)),
            min_down=int(entry.get("min_down", 1)),
            downtime_limits=tuple(
                _INF if x in ("inf", None) else float(x)
                for x in entry.get("downtime_limits", ())),
            initially_on=bool(entry.get("initially_on", False)),
            initial_periods=int(entry.get("initial_periods", 1)),
        ))
    return UcSpec(tuple(generators), tuple(float(x) for x in doc["demand"]))
