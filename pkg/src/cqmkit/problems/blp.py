"""Binary linear programs with a cardinality constraint and optional extras.

The base family minimizes random unit-interval costs subject to picking
exactly C of N binaries.  Up to five additional constraints can be layered on
in a fixed order; a quadratic variant replaces the cardinality equality with
an all-pairs product constraint.  Variables are 1-indexed (``x1`` .. ``xN``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import GenerationError, UnsupportedOracleError
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

CARDINALITY_LABEL = "cardinality"
EXTRA_LABELS = (
    "total_at_least",      # sum x_i >= C
    "even_odd_balance",    # sum over even indices == sum over odd indices
    "half_order",          # first half <= second half
    "every_fifth_zero",    # x_i = 0 whenever i is a multiple of 5
    "shifted_cost_order",  # cyclically shifted cost weighting
)
PAIRWISE_LABEL = "pairwise_at_least"


@dataclass(frozen=True)
class BlpSpec:
    n: int
    c: int
    seed: int = 0
    extra_constraints: int = 0

    def __post_init__(self):
        if not 0 <= self.c <= self.n:
            raise ValueError("need 0 <= c <= n")
        if not 0 <= self.extra_constraints <= 5:
            raise ValueError("extra_constraints must be in 0..5")


def _var_ids(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)]


def _draw_costs(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random(n)


def _extra_constraints(n: int, c: int, costs: np.ndarray, count: int) -> list[Constraint]:
    ids = _var_ids(n)
    out = []
    if count >= 1:
        out.append(Constraint(
            make_expr({v: 1.0 for v in ids}), SENSE_GE, float(c), EXTRA_LABELS[0]))
    if count >= 2:
        linear = {ids[i - 1]: (1.0 if i % 2 == 0 else -1.0) for i in range(1, n + 1)}
        out.append(Constraint(make_expr(linear), SENSE_EQ, 0.0, EXTRA_LABELS[1]))
    if count >= 3:
        half = n // 2
        linear = {}
        for i in range(1, half + 1):
            linear[ids[i - 1]] = linear.get(ids[i - 1], 0.0) + 1.0
        for i in range(half, n + 1):
            linear[ids[i - 1]] = linear.get(ids[i - 1], 0.0) - 1.0
        out.append(Constraint(make_expr(linear), SENSE_LE, 0.0, EXTRA_LABELS[2]))
    if count >= 4:
        fifth = {ids[i - 1]: 1.0 for i in range(5, n + 1, 5)}
        if fifth:
            out.append(Constraint(make_expr(fifth), SENSE_EQ, 0.0, EXTRA_LABELS[3]))
    if count >= 5:
        # Weight of x_i is cost[i+1] - cost[i-1] with cyclic index wrap.
        linear = {}
        for i in range(1, n + 1):
            up = costs[i % n]            # cost index i+1, wrapped
            dn = costs[(i - 2) % n]      # cost index i-1, wrapped
            linear[ids[i - 1]] = float(up - dn)
        out.append(Constraint(make_expr(linear), SENSE_LE, 0.0, EXTRA_LABELS[4]))
    return out


def _feasible_witness(n: int, c: int, costs: np.ndarray, count: int,
                      seed: int) -> dict[str, int] | None:
    """Deterministic construction plus seeded repair for the extra-constraint
    stack; None when nothing satisfying was found."""
    ids = _var_ids(n)

    def blocked(i: int) -> bool:
        return count >= 4 and i % 5 == 0

    def shift_weight(i: int) -> float:
        return float(costs[i % n] - costs[(i - 2) % n])

    def sort_key(i: int):
        in_first_half = 1 if i <= n // 2 else 0
        return (in_first_half, shift_weight(i) if count >= 5 else 0.0, costs[i - 1])

    if count < 2:
        chosen = [i for i in range(1, n + 1) if not blocked(i)][:c]
        if len(chosen) < c:
            return None
    else:
        if c % 2 != 0:
            return None
        evens = sorted((i for i in range(2, n + 1, 2) if not blocked(i)), key=sort_key)
        odds = sorted((i for i in range(1, n + 1, 2) if not blocked(i)), key=sort_key)
        if len(evens) < c // 2 or len(odds) < c // 2:
            return None
        chosen = evens[:c // 2] + odds[:c // 2]

    assignment = {v: 0 for v in ids}
    for i in chosen:
        assignment[f"x{i}"] = 1

    probe = ConstrainedModel(
        tuple(Variable.binary(v) for v in ids),
        make_expr(),
        tuple(_extra_constraints(n, c, costs, count))
        + (Constraint(make_expr({v: 1.0 for v in ids}), SENSE_EQ, float(c), CARDINALITY_LABEL),),
    )
    feasible, _ = check_feasibility(probe, assignment)
    if feasible:
        return assignment

    # Repair: seeded same-parity swaps keep the balance constraints intact.
    rng = np.random.default_rng(seed ^ 0x5EED)
    current = set(chosen)
    for _ in range(2000):
        inside = sorted(current)
        outside = [i for i in range(1, n + 1) if i not in current and not blocked(i)]
        if not inside or not outside:
            break
        a = inside[rng.integers(len(inside))]
        same_parity = [i for i in outside if i % 2 == a % 2] if count >= 2 else outside
        if not same_parity:
            continue
        b = same_parity[rng.integers(len(same_parity))]
        current.discard(a)
        current.add(b)
        assignment = {v: 0 for v in ids}
        for i in current:
            assignment[f"x{i}"] = 1
        feasible, _ = check_feasibility(probe, assignment)
        if feasible:
            return assignment
    return None


def gen_blp(spec: BlpSpec) -> ConstrainedModel:
    """Cost-minimizing cardinality model with ``spec.extra_constraints``
    additional constraints stacked in their fixed order.

    Generation verifies that at least one feasible assignment exists and
    fails loudly otherwise.
    """
    costs = _draw_costs(spec.n, spec.seed)
    ids = _var_ids(spec.n)
    objective = make_expr({v: float(mu) for v, mu in zip(ids, costs)})
    constraints = [Constraint(
        make_expr({v: 1.0 for v in ids}), SENSE_EQ, float(spec.c), CARDINALITY_LABEL)]
    constraints.extend(_extra_constraints(spec.n, spec.c, costs, spec.extra_constraints))
    model = ConstrainedModel(
        tuple(Variable.binary(v) for v in ids), objective, tuple(constraints))
    if spec.extra_constraints:
        witness = _feasible_witness(spec.n, spec.c, costs, spec.extra_constraints, spec.seed)
        if witness is None:
            raise GenerationError(
                f"no feasible assignment found for BLP(n={spec.n}, c={spec.c}, "
                f"k={spec.extra_constraints})")
    return model


def blp_costs(spec: BlpSpec) -> np.ndarray:
    """The cost draw behind :func:`gen_blp`, exposed for oracles."""
    return _draw_costs(spec.n, spec.seed)


def blp_oracle(spec: BlpSpec) -> float:
    """Exact optimum for the unadorned family: the C smallest costs."""
    if spec.extra_constraints != 0:
        raise UnsupportedOracleError(
            "the sort oracle only covers the plain cardinality family; "
            "use brute force for extra constraints")
    if spec.c == 0:
        return 0.0
    costs = _draw_costs(spec.n, spec.seed)
    return float(np.sort(np.partition(costs, spec.c - 1)[:spec.c]).sum())


def gen_blp_quadratic_constraint(n: int, c: int, seed: int = 0) -> ConstrainedModel:
    """Linear objective with the all-pairs product constraint
    ``sum_{i,j} x_i x_j >= C`` (diagonal terms canonicalized to linear)."""
    if not 0 <= c <= n * n:
        raise ValueError("need 0 <= c <= n**2")
    costs = _draw_costs(n, seed)
    ids = _var_ids(n)
    objective = make_expr({v: float(mu) for v, mu in zip(ids, costs)})
    linear = {v: 1.0 for v in ids}
    quadratic = {(ids[i], ids[j]): 2.0 for i in range(n) for j in range(i + 1, n)}
    constraint = Constraint(make_expr(linear, quadratic), SENSE_GE, float(c), PAIRWISE_LABEL)
    return ConstrainedModel(
        tuple(Variable.binary(v) for v in ids), objective, (constraint,))


def blp_quadratic_oracle(n: int, c: int, seed: int = 0) -> float:
    """Exact optimum of the quadratic-constraint family.

    The constraint pins the number of ones to at least ceil(sqrt(C)), so the
    optimum is the sum of that many smallest costs.
    """
    import math

    need = 0 if c <= 0 else math.isqrt(max(0, math.ceil(c) - 1)) + 1
    if need == 0:
        return 0.0
    costs = _draw_costs(n, seed)
    return float(np.sort(np.partition(costs, need - 1)[:need]).sum())
