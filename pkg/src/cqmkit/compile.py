"""Compile constrained binary models into penalized QUBO form.

Linear equality constraints become squared penalty terms; integer-coefficient
inequalities are first turned into equalities with log-encoded binary slack
variables.  Quadratic constraints are never squared (that would leave QUBO):
the all-pairs form ``sum_{i,j} x_i x_j (sense) C`` is replaced by its exact
linear counterpart on ``sum_i x_i`` (the two sums are related by squaring),
and anything else is left to downstream feasibility filtering.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    InfeasibleConstraintError,
    MustBinarizeError,
    UnsupportedEncodingError,
)
from .model import (
    BINARY,
    SENSE_EQ,
    SENSE_GE,
    SENSE_LE,
    Constraint,
    ConstrainedModel,
    IsingModel,
    QuboModel,
    Variable,
    all_assignments,
    check_feasibility,
    make_expr,
)


@dataclass(frozen=True)
class PenaltyConfig:
    """Per-constraint penalty weights; ``auto`` derives missing ones."""

    lambdas: dict[str, float] = field(default_factory=dict)
    auto: bool = True

    def __post_init__(self):
        for label, lam in self.lambdas.items():
            if lam <= 0:
                raise ValueError(f"penalty weight for {label!r} must be positive")


@dataclass(frozen=True)
class SlackEncoding:
    """Binary slack block turning one inequality into an equality.

    ``weights[j]`` is the contribution of slack bit ``slack_ids[j]``; every
    integer in ``[0, upper]`` is representable as a weighted sum of bits.
    """

    label: str
    slack_ids: tuple[str, ...]
    weights: tuple[int, ...]
    upper: int

    def representable(self) -> set[int]:
        """All achievable slack sums (exhaustive; meant for small encodings)."""
        sums = {0}
        for w in self.weights:
            sums |= {s + w for s in sums}
        return sums


@dataclass(frozen=True)
class LambdaChoice:
    value: float
    rule: str  # "auto" | "bisection" | "given"


@dataclass(frozen=True)
class CompileReport:
    """Penalty weights used per constraint, plus constraints left unpenalized
    (quadratic ones that only a feasibility filter can enforce)."""

    lambdas: dict[str, LambdaChoice]
    unpenalized: tuple[str, ...] = ()

    def to_json(self) -> str:
        doc = {label: {"lambda": c.value, "rule": c.rule}
               for label, c in sorted(self.lambdas.items())}
        return json.dumps(doc)


@dataclass(frozen=True)
class CompiledQubo:
    """Penalized QUBO plus the bookkeeping needed to map back to the model."""

    qubo: QuboModel
    variable_order: tuple[str, ...]
    slacks: tuple[SlackEncoding, ...]
    report: CompileReport

    def decode(self, x) -> dict[str, int]:
        """Index assignment back to model + slack variable ids."""
        return {v: int(round(x[i])) for i, v in enumerate(self.variable_order)}


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Affine change of variables x = (s + 1) / 2 preserving all energies."""
    n = q.n
    fields = q.linear / 2.0
    couplings: dict[tuple[int, int], float] = {}
    offset = q.offset + float(np.sum(q.linear)) / 2.0
    for (i, j), coeff in q.quadratic.items():
        quarter = coeff / 4.0
        if quarter != 0.0:
            couplings[(i, j)] = quarter
        fields[i] += quarter
        fields[j] += quarter
        offset += quarter
    return IsingModel(n, fields, couplings, offset)


def ising_to_qubo(m: IsingModel) -> QuboModel:
    """Affine change of variables s = 2x - 1 preserving all energies."""
    n = m.n
    linear = 2.0 * m.fields
    quadratic: dict[tuple[int, int], float] = {}
    offset = m.offset - float(np.sum(m.fields))
    for (i, j), coeff in m.couplings.items():
        quad = 4.0 * coeff
        if quad != 0.0:
            quadratic[(i, j)] = quad
        linear[i] -= 2.0 * coeff
        linear[j] -= 2.0 * coeff
        offset += coeff
    return QuboModel(n, linear, quadratic, offset)


def _integral(value: float) -> bool:
    return float(value).is_integer()


def encode_inequality(c: Constraint, prefix: str | None = None):
    """Turn a linear integer-coefficient inequality into an equality.

    Returns ``(equality, encoding)`` where the equality's lhs carries the
    original terms plus log-weighted slack bits (sign-flipped for ``ge``).
    The slack range is ``upper = rhs - min(lhs)`` for ``le`` and
    ``max(lhs) - rhs`` for ``ge``; the bit count ``ceil(log2(upper + 1))``
    never exceeds ``upper``.
    """
    if c.sense not in (SENSE_LE, SENSE_GE):
        raise UnsupportedEncodingError(f"constraint {c.label!r}: sense {c.sense!r} needs no slack")
    if c.lhs.quadratic:
        raise UnsupportedEncodingError(f"constraint {c.label!r}: lhs must be linear")
    if not all(_integral(a) for a in c.lhs.linear.values()) or not _integral(c.rhs - c.lhs.offset):
        raise UnsupportedEncodingError(
            f"constraint {c.label!r}: slack encoding needs integral coefficients")

    rhs = int(round(c.rhs - c.lhs.offset))
    coeffs = {v: int(round(a)) for v, a in c.lhs.linear.items()}
    if c.sense == SENSE_LE:
        reach = sum(min(0, a) for a in coeffs.values())  # lowest achievable lhs
        upper = rhs - reach
    else:
        reach = sum(max(0, a) for a in coeffs.values())  # highest achievable lhs
        upper = reach - rhs
    if upper < 0:
        raise InfeasibleConstraintError(
            f"constraint {c.label!r}: no binary assignment can satisfy it")

    prefix = prefix or c.label
    if upper == 0:
        encoding = SlackEncoding(c.label, (), (), 0)
        equality = Constraint(c.lhs, SENSE_EQ, c.rhs, c.label)
        return equality, encoding

    count = max(1, math.ceil(math.log2(upper + 1)))
    weights = [1 << j for j in range(count - 1)]
    weights.append(upper - ((1 << (count - 1)) - 1))
    slack_ids = tuple(f"{prefix}__slack{j}" for j in range(count))
    sign = 1.0 if c.sense == SENSE_LE else -1.0
    linear = dict(c.lhs.linear)
    for sid, w in zip(slack_ids, weights):
        linear[sid] = sign * w
    equality = Constraint(
        make_expr(linear, c.lhs.quadratic, c.lhs.offset), SENSE_EQ, c.rhs, c.label)
    return equality, SlackEncoding(c.label, slack_ids, tuple(weights), upper)


def all_pairs_cardinality(c: Constraint):
    """Recognize ``sum_{i,j} x_i x_j (sense) C`` over a variable set.

    The canonical stored form has every linear coefficient 1 (the diagonal)
    and every unordered pair coefficient 2.  Returns the variable tuple, or
    None when the constraint has a different shape.
    """
    ids = sorted(c.lhs.variables())
    if len(ids) < 2 or c.lhs.offset != 0.0:
        return None
    if any(c.lhs.linear.get(v) != 1.0 for v in ids):
        return None
    if len(c.lhs.quadratic) != len(ids) * (len(ids) - 1) // 2:
        return None
    if any(coeff != 2.0 for coeff in c.lhs.quadratic.values()):
        return None
    return tuple(ids)


def linearize_all_pairs(c: Constraint):
    """Exact linear replacement for the all-pairs quadratic constraint.

    With ``t = sum_i x_i`` the lhs equals ``t**2``, so ``t**2 >= C`` becomes
    ``t >= ceil(sqrt(C))`` and ``t**2 <= C`` becomes ``t <= floor(sqrt(C))``.
    Returns None when the shape is not recognized (or an exact equality has
    no integer root).
    """
    ids = all_pairs_cardinality(c)
    if ids is None or c.rhs < 0 and c.sense != SENSE_GE:
        return None
    total = make_expr({v: 1.0 for v in ids})
    if c.sense == SENSE_GE:
        bound = 0 if c.rhs <= 0 else math.isqrt(max(0, math.ceil(c.rhs) - 1)) + 1
        return Constraint(total, SENSE_GE, float(bound), c.label)
    if c.sense == SENSE_LE:
        if c.rhs < 0:
            return None
        return Constraint(total, SENSE_LE, float(math.isqrt(int(c.rhs))), c.label)
    root = math.isqrt(int(c.rhs)) if c.rhs >= 0 and _integral(c.rhs) else -1
    if root >= 0 and root * root == int(c.rhs):
        return Constraint(total, SENSE_EQ, float(root), c.label)
    return None


def objective_scale(objective) -> float:
    """Sum of absolute objective coefficients plus |offset|."""
    return (sum(abs(v) for v in objective.linear.values())
            + sum(abs(v) for v in objective.quadratic.values())
            + abs(objective.offset))


def auto_lambda(model: ConstrainedModel) -> float:
    """Uniform penalty weight making any unit violation dominate the
    objective's full range."""
    return 2.0 * objective_scale(model.objective) + 1.0


def _penalizable_equalities(model: ConstrainedModel, prefix_counts=None):
    """Equality forms for every constraint that can carry a squared penalty.

    Returns ``(equalities, slacks, unpenalized_labels)``.  Inequalities are
    slack-encoded; recognized all-pairs quadratic constraints are linearized
    first; other quadratic constraints are reported as unpenalized.
    """
    equalities: list[Constraint] = []
    slacks: list[SlackEncoding] = []
    unpenalized: list[str] = []
    for c in model.constraints:
        if c.lhs.quadratic:
            linearized = linearize_all_pairs(c)
            if linearized is None:
                unpenalized.append(c.label)
                continue
            c = linearized
        if c.sense == SENSE_EQ:
            equalities.append(c)
            slacks.append(SlackEncoding(c.label, (), (), 0))
        else:
            equality, encoding = encode_inequality(c)
            equalities.append(equality)
            slacks.append(encoding)
    return equalities, slacks, unpenalized


def compile_penalties(model: ConstrainedModel, cfg: PenaltyConfig | None = None) -> CompiledQubo:
    """Assemble ``objective + sum_k lambda_k * (residual_k)**2`` as a QUBO.

    All model variables must be binary; slack bits introduced for
    inequalities are appended after them in the variable order.
    """
    cfg = cfg or PenaltyConfig()
    for v in model.variables:
        if v.vartype != BINARY:
            raise MustBinarizeError(
                f"variable {v.id!r} is {v.vartype}; compile needs binary variables")

    equalities, slacks, unpenalized = _penalizable_equalities(model)

    order = list(model.variable_ids())
    for enc in slacks:
        order.extend(enc.slack_ids)
    index = {v: i for i, v in enumerate(order)}
    if len(index) != len(order):
        raise ValueError("slack variable id collides with a model variable")
    n = len(order)

    linear = np.zeros(n)
    quadratic: dict[tuple[int, int], float] = {}
    offset = model.objective.offset

    def add_quad(i: int, j: int, coeff: float):
        if i == j:
            linear[i] += coeff  # x**2 == x on binaries
            return
        key = (i, j) if i < j else (j, i)
        quadratic[key] = quadratic.get(key, 0.0) + coeff

    for v, coeff in model.objective.linear.items():
        linear[index[v]] += coeff
    for (a, b), coeff in model.objective.quadratic.items():
        add_quad(index[a], index[b], coeff)

    default = auto_lambda(model) if cfg.auto else None
    lambdas: dict[str, LambdaChoice] = {}
    for c in equalities:
        if c.label in cfg.lambdas:
            lam = LambdaChoice(cfg.lambdas[c.label], "given")
        elif default is not None:
            lam = LambdaChoice(default, "auto")
        else:
            raise ValueError(f"no penalty weight for constraint {c.label!r} and auto disabled")
        lambdas[c.label] = lam

        terms = [(index[v], coeff) for v, coeff in c.lhs.linear.items()]
        const = c.lhs.offset - c.rhs
        # (sum a_i x_i + const)**2 expanded over binaries.
        offset += lam.value * const * const
        for i, a in terms:
            linear[i] += lam.value * (a * a + 2.0 * a * const)
        for p in range(len(terms)):
            i, a = terms[p]
            for q in range(p + 1, len(terms)):
                j, b = terms[q]
                add_quad(i, j, 2.0 * lam.value * a * b)

    quadratic = {k: v for k, v in quadratic.items() if v != 0.0}
    qubo = QuboModel(n, linear, quadratic, offset)
    report = CompileReport(lambdas, tuple(unpenalized))
    return CompiledQubo(qubo, tuple(order), tuple(s for s in slacks if s.slack_ids), report)


_BISECTION_GRID = 20  # refined weight is auto / 2**k for some k in [0, 20]
_BISECTION_LIMIT = 20  # post-slack binaries above this skip refinement


def suggest_lambda(model: ConstrainedModel) -> dict[str, LambdaChoice]:
    """Penalty weight per constraint label.

    Starts from the auto rule; on small models the weight is refined to the
    smallest value on a geometric grid whose penalized argmin stays feasible,
    checked exhaustively.  Models too large for the exhaustive check keep the
    auto rule, flagged by ``rule == "auto"``.
    """
    compiled = compile_penalties(model, PenaltyConfig())
    labels = list(compiled.report.lambdas)
    if not labels:
        return {}
    base = auto_lambda(model)
    if compiled.qubo.n > _BISECTION_LIMIT:
        return {label: LambdaChoice(base, "auto") for label in labels}

    states = all_assignments(compiled.qubo.n)

    def argmin_feasible(lam: float) -> bool:
        trial = compile_penalties(
            model, PenaltyConfig({label: lam for label in labels}, auto=False))
        energies = trial.qubo.energies(states)
        minimum = energies.min()
        for row in np.flatnonzero(energies == minimum):
            feasible, _ = check_feasibility(model, trial.decode(states[row]))
            if not feasible:
                return False
        return True

    # Feasibility of the penalized argmin is monotone in the weight, so
    # bisect over grid exponents for the smallest workable one.
    if not argmin_feasible(base):
        return {label: LambdaChoice(base, "auto") for label in labels}
    lo, hi = 0, _BISECTION_GRID  # exponent k; weight = base / 2**k
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if argmin_feasible(base / (1 << mid)):
            lo = mid
        else:
            hi = mid - 1
    refined = base / (1 << lo)
    return {label: LambdaChoice(refined, "bisection") for label in labels}


def with_slack_variables(model: ConstrainedModel) -> tuple[ConstrainedModel, tuple[SlackEncoding, ...]]:
    """Model with integer-coefficient binary inequalities rewritten as
    equalities over added slack binaries; other constraints are unchanged."""
    new_constraints: list[Constraint] = []
    slacks: list[SlackEncoding] = []
    new_vars = list(model.variables)
    for c in model.constraints:
        if c.sense == SENSE_EQ or c.lhs.quadratic:
            new_constraints.append(c)
            continue
        binary_only = all(model.variable(v).vartype == BINARY for v in c.lhs.variables())
        try:
            if not binary_only:
                raise UnsupportedEncodingError("non-binary")
            equality, encoding = encode_inequality(c)
        except UnsupportedEncodingError:
            new_constraints.append(c)
            continue
        new_constraints.append(equality)
        slacks.append(encoding)
        new_vars.extend(Variable.binary(sid) for sid in encoding.slack_ids)
    return ConstrainedModel(tuple(new_vars), model.objective, tuple(new_constraints)), tuple(slacks)
