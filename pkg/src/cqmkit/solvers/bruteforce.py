"""Exhaustive enumeration: the exactness oracle behind the test suite."""

from __future__ import annotations

import time
from itertools import combinations
from math import comb

import numpy as np

from ..exceptions import MustBinarizeError, SizeLimitError
from ..model import (
    BINARY,
    DEFAULT_FEASIBILITY_TOL,
    SENSE_EQ,
    SENSE_GE,
    SENSE_LE,
    ConstrainedModel,
    QuadraticExpr,
    QuboModel,
    Sample,
    SampleSet,
    constraint_is_integral,
)

MAX_FREE_VARIABLES = 24
MAX_SUBSET_VARIABLES = 30
MAX_SUBSET_COUNT = 1 << 22
_CHUNK = 1 << 16


def _chunked_states(n: int):
    total = 1 << n
    shifts = np.arange(n, dtype=np.uint64)
    for start in range(0, total, _CHUNK):
        size = min(_CHUNK, total - start)
        codes = np.arange(start, start + size, dtype=np.uint64)
        yield ((codes[:, None] >> shifts) & 1).astype(np.uint8)


def _expr_values(expr: QuadraticExpr, states: np.ndarray, index: dict) -> np.ndarray:
    out = np.full(len(states), expr.offset)
    for v, coeff in expr.linear.items():
        out += coeff * states[:, index[v]]
    for (a, b), coeff in expr.quadratic.items():
        out += coeff * states[:, index[a]] * states[:, index[b]]
    return out


def _feasible_mask(model: ConstrainedModel, states: np.ndarray, index: dict) -> np.ndarray:
    mask = np.ones(len(states), dtype=bool)
    for c in model.constraints:
        values = _expr_values(c.lhs, states.astype(float), index)
        tol = 0.0 if constraint_is_integral(model, c) else DEFAULT_FEASIBILITY_TOL
        if c.sense == SENSE_EQ:
            mask &= np.abs(values - c.rhs) <= tol
        elif c.sense == SENSE_LE:
            mask &= values - c.rhs <= tol
        else:
            mask &= c.rhs - values <= tol
    return mask


def brute_force_qubo(q: QuboModel) -> SampleSet:
    """All global minimizers of a QUBO by full enumeration."""
    if q.n > MAX_FREE_VARIABLES:
        raise SizeLimitError(
            f"brute force handles at most {MAX_FREE_VARIABLES} variables, got {q.n}")
    start = time.perf_counter()
    if q.n == 0:
        return SampleSet.from_samples(
            [Sample({}, q.offset)], "brute_force", time.perf_counter() - start)
    best = np.inf
    rows: list[np.ndarray] = []
    for states in _chunked_states(q.n):
        energies = q.energies(states)
        chunk_best = energies.min()
        if chunk_best < best:
            best = chunk_best
            rows = [states[energies == chunk_best]]
        elif chunk_best == best:
            rows.append(states[energies == best])
    minimizers = np.concatenate(rows)
    samples = [Sample({i: int(row[i]) for i in range(q.n)}, float(best)) for row in minimizers]
    return SampleSet.from_samples(samples, "brute_force", time.perf_counter() - start)


def _cardinality_constraint(model: ConstrainedModel):
    """Index of a ``sum of all variables == C`` constraint, if one exists."""
    ids = set(model.variable_ids())
    for k, c in enumerate(model.constraints):
        if (c.sense == SENSE_EQ and not c.lhs.quadratic and c.lhs.offset == 0.0
                and set(c.lhs.linear) == ids
                and all(v == 1.0 for v in c.lhs.linear.values())
                and float(c.rhs).is_integer() and 0 <= c.rhs <= len(ids)):
            return k
    return None


def _enumerate_subsets(model: ConstrainedModel, card_index: int) -> SampleSet:
    ids = model.variable_ids()
    n = len(ids)
    target = int(model.constraints[card_index].rhs)
    if comb(n, target) > MAX_SUBSET_COUNT:
        raise SizeLimitError(
            f"cardinality enumeration capped at {MAX_SUBSET_COUNT} subsets, "
            f"C({n},{target}) exceeds it")
    start = time.perf_counter()
    index = {v: i for i, v in enumerate(ids)}
    rows = np.zeros((comb(n, target), n), dtype=np.uint8)
    for r, subset in enumerate(combinations(range(n), target)):
        rows[r, list(subset)] = 1
    mask = _feasible_mask(model, rows, index)
    rows = rows[mask]
    if len(rows) == 0:
        return SampleSet.from_samples([], "brute_force", time.perf_counter() - start)
    values = _expr_values(model.objective, rows.astype(float), index)
    best = values.min()
    samples = [Sample({ids[i]: int(row[i]) for i in range(n)}, float(best))
               for row in rows[values == best]]
    return SampleSet.from_samples(samples, "brute_force", time.perf_counter() - start)


def brute_force(model) -> SampleSet:
    """Complete feasible argmin set of a small model.

    Accepts a :class:`QuboModel` or an all-binary :class:`ConstrainedModel`.
    Models constrained by a full cardinality equality enumerate subsets (up
    to 30 variables); everything else enumerates all assignments (up to 24).
    An empty sampleset means the model is infeasible.
    """
    if isinstance(model, QuboModel):
        return brute_force_qubo(model)
    if not isinstance(model, ConstrainedModel):
        raise TypeError(f"cannot brute force {type(model).__name__}")
    if any(v.vartype != BINARY for v in model.variables):
        raise MustBinarizeError("brute force enumerates binary models only")

    n = model.num_variables()
    card = _cardinality_constraint(model)
    if n > MAX_FREE_VARIABLES:
        if card is not None and n <= MAX_SUBSET_VARIABLES:
            return _enumerate_subsets(model, card)
        raise SizeLimitError(
            f"brute force handles at most {MAX_FREE_VARIABLES} free variables "
            f"({MAX_SUBSET_VARIABLES} with a cardinality constraint), got {n}")
    if card is not None and comb(n, int(model.constraints[card].rhs)) * 8 < (1 << n):
        return _enumerate_subsets(model, card)

    start = time.perf_counter()
    ids = model.variable_ids()
    index = {v: i for i, v in enumerate(ids)}
    best = np.inf
    kept: list[np.ndarray] = []
    for states in _chunked_states(n):
        mask = _feasible_mask(model, states, index)
        states = states[mask]
        if len(states) == 0:
            continue
        values = _expr_values(model.objective, states.astype(float), index)
        chunk_best = values.min()
        if chunk_best < best:
            best = chunk_best
            kept = [states[values == chunk_best]]
        elif chunk_best == best:
            kept.append(states[values == best])
    if not kept:
        return SampleSet.from_samples([], "brute_force", time.perf_counter() - start)
    minimizers = np.concatenate(kept)
    samples = [Sample({ids[i]: int(row[i]) for i in range(n)}, float(best))
               for row in minimizers]
    return SampleSet.from_samples(samples, "brute_force", time.perf_counter() - start)
