"""Binary quadratic programs: dense random pairwise costs under a
cardinality constraint."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from ..exceptions import SizeLimitError
from ..model import (
    SENSE_EQ,
    Constraint,
    ConstrainedModel,
    Variable,
    make_expr,
)

CARDINALITY_LABEL = "cardinality"
_MAX_ORACLE_SUBSETS = 1 << 22


@dataclass(frozen=True)
class BqpSpec:
    n: int
    c: int
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.c <= self.n:
            raise ValueError("need 0 <= c <= n")


def _cost_matrix(spec: BqpSpec) -> np.ndarray:
    return np.random.default_rng(spec.seed).random((spec.n, spec.n))


def gen_bqp(spec: BqpSpec) -> ConstrainedModel:
    """Dense ordered-pair costs folded to unordered terms, diagonal folded to
    linear, under ``sum x_i == C``."""
    matrix = _cost_matrix(spec)
    n = spec.n
    ids = [f"x{i}" for i in range(1, n + 1)]
    linear = {ids[i]: float(matrix[i, i]) for i in range(n)}
    quadratic = []
    for i in range(n):
        row = matrix[i]
        col = matrix[:, i]
        for j in range(i + 1, n):
            quadratic.append((ids[i], ids[j], float(row[j] + col[j])))
    objective = make_expr(linear, quadratic)
    constraint = Constraint(
        make_expr({v: 1.0 for v in ids}), SENSE_EQ, float(spec.c), CARDINALITY_LABEL)
    return ConstrainedModel(
        tuple(Variable.binary(v) for v in ids), objective, (constraint,))


def bqp_oracle(spec: BqpSpec) -> float:
    """Exact optimum by enumerating every C-subset of the variables."""
    if comb(spec.n, spec.c) > _MAX_ORACLE_SUBSETS:
        raise SizeLimitError(
            f"C({spec.n},{spec.c}) subsets exceed the enumeration cap")
    matrix = _cost_matrix(spec)
    sym = matrix + matrix.T
    diag = np.diag(matrix)
    best = np.inf
    for subset in combinations(range(spec.n), spec.c):
        idx = list(subset)
        value = diag[idx].sum() + sym[np.ix_(idx, idx)][np.triu_indices(len(idx), 1)].sum()
        if value < best:
            best = value
    return float(best) if spec.c > 0 else 0.0
