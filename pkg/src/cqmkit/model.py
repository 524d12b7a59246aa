"""Core data model: constrained quadratic models, QUBO/Ising forms, samples.

A :class:`ConstrainedModel` holds typed variables, a quadratic objective and
sensed quadratic constraints.  :class:`QuboModel` / :class:`IsingModel` are the
index-based unconstrained forms the solvers consume.  All containers are
treated as immutable after construction and are safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ModelFormatError,
    ModelValidationError,
    UnknownVariableError,
)

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"
_VARTYPES = (BINARY, INTEGER, CONTINUOUS)

SENSE_EQ = "eq"
SENSE_LE = "le"
SENSE_GE = "ge"
_SENSES = (SENSE_EQ, SENSE_LE, SENSE_GE)

#: Absolute feasibility tolerance for constraints with non-integral data.
#: Constraints whose variables and coefficients are all integral are checked
#: exactly (their float arithmetic is exact well past any model size we build).
DEFAULT_FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class Variable:
    """A decision variable with a typed, bounded domain."""

    id: str
    vartype: str
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if self.vartype not in _VARTYPES:
            raise ModelValidationError(f"variable {self.id!r}: bad vartype {self.vartype!r}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ModelValidationError(f"variable {self.id!r}: bounds must be finite")
        if self.lower > self.upper:
            raise ModelValidationError(f"variable {self.id!r}: lower > upper")
        if self.vartype == BINARY and (self.lower, self.upper) != (0.0, 1.0):
            raise ModelValidationError(f"variable {self.id!r}: binary domain is exactly {{0,1}}")

    @classmethod
    def binary(cls, id: str) -> "Variable":
        return cls(id, BINARY, 0.0, 1.0)

    @classmethod
    def integer(cls, id: str, lower: float, upper: float) -> "Variable":
        return cls(id, INTEGER, float(lower), float(upper))

    @classmethod
    def continuous(cls, id: str, lower: float, upper: float) -> "Variable":
        return cls(id, CONTINUOUS, float(lower), float(upper))


def _canonical_pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class QuadraticExpr:
    """offset + sum(linear) + sum(quadratic) over an assignment.

    Quadratic keys are unordered id pairs stored sorted; a self-pair ``(v, v)``
    denotes ``v**2`` and is only kept for non-binary variables (use
    :func:`make_expr` with ``binary=`` to fold binary squares into the linear
    part).  Coefficient maps never hold explicit zeros.
    """

    linear: dict[str, float] = field(default_factory=dict)
    quadratic: dict[tuple[str, str], float] = field(default_factory=dict)
    offset: float = 0.0

    def variables(self) -> set[str]:
        ids = set(self.linear)
        for a, b in self.quadratic:
            ids.add(a)
            ids.add(b)
        return ids

    def evaluate(self, assignment: dict) -> float:
        """Energy of the expression under a full assignment.

        Raises :class:`UnknownVariableError` naming the first missing id.
        """
        total = self.offset
        try:
            for v, coeff in self.linear.items():
                total += coeff * assignment[v]
            for (a, b), coeff in self.quadratic.items():
                total += coeff * assignment[a] * assignment[b]
        except KeyError as exc:
            raise UnknownVariableError(exc.args[0]) from None
        return total

    def is_linear(self) -> bool:
        return not self.quadratic


def make_expr(linear=None, quadratic=None, offset: float = 0.0,
              binary=()) -> QuadraticExpr:
    """Build a canonical :class:`QuadraticExpr`.

    Pair keys are sorted, duplicate insertions accumulate, squares of ids
    listed in ``binary`` fold into the linear part (x**2 == x on {0,1}), and
    zero coefficients are dropped.
    """
    binary = set(binary)
    lin: dict[str, float] = {}
    for v, coeff in (linear or {}).items():
        lin[v] = lin.get(v, 0.0) + float(coeff)
    if isinstance(quadratic, dict):
        entries = [(a, b, c) for (a, b), c in quadratic.items()]
    else:
        entries = [(a, b, c) for a, b, c in (quadratic or ())]
    quad: dict[tuple[str, str], float] = {}
    for a, b, coeff in entries:
        coeff = float(coeff)
        if a == b and a in binary:
            lin[a] = lin.get(a, 0.0) + coeff
            continue
        key = _canonical_pair(a, b)
        quad[key] = quad.get(key, 0.0) + coeff
    lin = {v: c for v, c in lin.items() if c != 0.0}
    quad = {k: c for k, c in quad.items() if c != 0.0}
    return QuadraticExpr(lin, quad, float(offset))


@dataclass(frozen=True)
class Constraint:
    """``lhs sense rhs`` with a unique label within its model."""

    lhs: QuadraticExpr
    sense: str
    rhs: float
    label: str

    def __post_init__(self):
        if self.sense not in _SENSES:
            raise ModelValidationError(f"constraint {self.label!r}: bad sense {self.sense!r}")
        if not math.isfinite(self.rhs):
            raise ModelValidationError(f"constraint {self.label!r}: rhs must be finite")

    def violation(self, assignment: dict) -> float:
        """Signed slack clipped at zero: 0.0 means satisfied exactly."""
        value = self.lhs.evaluate(assignment)
        if self.sense == SENSE_EQ:
            return abs(value - self.rhs)
        if self.sense == SENSE_LE:
            return max(0.0, value - self.rhs)
        return max(0.0, self.rhs - value)


@dataclass
class ConstrainedModel:
    """Typed variables + quadratic objective + sensed quadratic constraints."""

    variables: tuple[Variable, ...]
    objective: QuadraticExpr
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.constraints = tuple(self.constraints)
        by_id: dict[str, Variable] = {}
        for v in self.variables:
            if v.id in by_id:
                raise ModelValidationError(f"duplicate variable id {v.id!r}")
            by_id[v.id] = v
        labels = set()
        for c in self.constraints:
            if c.label in labels:
                raise ModelValidationError(f"duplicate constraint label {c.label!r}")
            labels.add(c.label)
        declared = set(by_id)
        for name, expr in self._exprs():
            missing = expr.variables() - declared
            if missing:
                raise ModelValidationError(
                    f"{name} references undeclared variable {sorted(missing)[0]!r}")
        self._by_id = by_id

    def _exprs(self):
        yield "objective", self.objective
        for c in self.constraints:
            yield f"constraint {c.label!r}", c.lhs

    def __eq__(self, other):
        if not isinstance(other, ConstrainedModel):
            return NotImplemented
        return (self.variables == other.variables
                and self.objective == other.objective
                and self.constraints == other.constraints)

    def variable(self, id: str) -> Variable:
        try:
            return self._by_id[id]
        except KeyError:
            raise UnknownVariableError(id) from None

    def variable_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variables)

    def num_variables(self) -> int:
        return len(self.variables)

    def binaries(self) -> tuple[Variable, ...]:
        return tuple(v for v in self.variables if v.vartype == BINARY)

    def continuous(self) -> tuple[Variable, ...]:
        return tuple(v for v in self.variables if v.vartype == CONTINUOUS)


def evaluate(expr: QuadraticExpr, assignment: dict) -> float:
    """Module-level alias for :meth:`QuadraticExpr.evaluate`."""
    return expr.evaluate(assignment)


def constraint_is_integral(model: ConstrainedModel, c: Constraint) -> bool:
    for v in c.lhs.variables():
        if model.variable(v).vartype == CONTINUOUS:
            return False
    coeffs = list(c.lhs.linear.values()) + list(c.lhs.quadratic.values())
    coeffs.append(c.lhs.offset)
    coeffs.append(c.rhs)
    return all(float(x).is_integer() for x in coeffs)


def check_feasibility(model: ConstrainedModel, assignment: dict,
                      tol: float = DEFAULT_FEASIBILITY_TOL):
    """Return ``(feasible, violations)`` for a full assignment.

    ``violations`` maps a constraint label to its violation magnitude and only
    contains entries that exceed the tolerance, so ``feasible`` is equivalent
    to the map being empty.  Constraints over integral variables with integral
    coefficients are checked exactly; the others use the absolute ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    for v in model.variables:
        if v.id not in assignment:
            raise UnknownVariableError(v.id)
    violations: dict[str, float] = {}
    for c in model.constraints:
        v = c.violation(assignment)
        limit = 0.0 if constraint_is_integral(model, c) else tol
        if v > limit:
            violations[c.label] = v
    return (not violations), violations


@dataclass(frozen=True)
class QuboModel:
    """min offset + linear.x + sum_{i<j} quadratic[i,j] x_i x_j over {0,1}^n."""

    n: int
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(self.n))
        for i, j in self.quadratic:
            if not (0 <= i < j < self.n):
                raise ModelValidationError(f"bad quadratic key ({i}, {j}) for n={self.n}")

    def energy(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = self.offset + float(self.linear @ x)
        for (i, j), coeff in self.quadratic.items():
            total += coeff * x[i] * x[j]
        return total

    def energies(self, states: np.ndarray) -> np.ndarray:
        """Vectorised energy of a (m, n) batch of assignments."""
        states = np.asarray(states, dtype=float)
        out = np.full(len(states), self.offset) + states @ self.linear
        for (i, j), coeff in self.quadratic.items():
            out += coeff * states[:, i] * states[:, j]
        return out

    def dense(self) -> np.ndarray:
        """Symmetric coupling matrix with zero diagonal (linear kept apart)."""
        m = np.zeros((self.n, self.n))
        for (i, j), coeff in self.quadratic.items():
            m[i, j] = m[j, i] = coeff
        return m


@dataclass(frozen=True)
class IsingModel:
    """min offset + fields.s + sum_{i<j} couplings[i,j] s_i s_j over {-1,+1}^n."""

    n: int
    fields: np.ndarray
    couplings: dict[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "fields", np.asarray(self.fields, dtype=float).reshape(self.n))
        for i, j in self.couplings:
            if not (0 <= i < j < self.n):
                raise ModelValidationError(f"bad coupling key ({i}, {j}) for n={self.n}")

    def energy(self, s) -> float:
        s = np.asarray(s, dtype=float)
        total = self.offset + float(self.fields @ s)
        for (i, j), coeff in self.couplings.items():
            total += coeff * s[i] * s[j]
        return total

    def energies(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        out = np.full(len(states), self.offset) + states @ self.fields
        for (i, j), coeff in self.couplings.items():
            out += coeff * states[:, i] * states[:, j]
        return out

    def dense(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for (i, j), coeff in self.couplings.items():
            m[i, j] = m[j, i] = coeff
        return m


@dataclass(frozen=True)
class Sample:
    """One assignment with its energy, feasibility flag and violation map."""

    assignment: dict
    energy: float
    feasible: bool = True
    violations: dict = field(default_factory=dict)


def _sample_sort_key(sample: Sample):
    # Energy first; ties broken by the assignment values in sorted-id order so
    # ordering is reproducible across runs and platforms.
    items = tuple(v for _, v in sorted(sample.assignment.items(), key=lambda kv: str(kv[0])))
    return (sample.energy, items)


@dataclass(frozen=True)
class SampleSet:
    """Samples sorted ascending by energy plus run metadata."""

    samples: tuple[Sample, ...]
    solver: str
    wall_time: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.wall_time < 0:
            raise ModelValidationError("wall_time must be >= 0")
        energies = [s.energy for s in self.samples]
        if any(a > b for a, b in zip(energies, energies[1:])):
            raise ModelValidationError("samples must be sorted ascending by energy")

    @classmethod
    def from_samples(cls, samples, solver: str, wall_time: float = 0.0,
                     seed: int = 0) -> "SampleSet":
        ordered = tuple(sorted(samples, key=_sample_sort_key))
        return cls(ordered, solver, wall_time, seed)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def first(self) -> Sample:
        return self.samples[0]

    def lowest_energy(self) -> float:
        return self.samples[0].energy


# --- JSON model format ------------------------------------------------------
#
# {"variables":   [{"id", "type", "lower"?, "upper"?}, ...],
#  "objective":   {"linear": {id: coeff}, "quadratic": [[id, id, coeff], ...],
#                  "offset": float},
#  "constraints": [{"label", "lhs": <like objective>, "sense": "eq|le|ge",
#                   "rhs": float}, ...]}


def _expr_to_doc(expr: QuadraticExpr) -> dict:
    return {
        "linear": dict(sorted(expr.linear.items())),
        "quadratic": [[a, b, c] for (a, b), c in sorted(expr.quadratic.items())],
        "offset": expr.offset,
    }


def _expr_from_doc(doc, where: str) -> QuadraticExpr:
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{where}: expected an object")
    linear = doc.get("linear", {})
    if not isinstance(linear, dict):
        raise ModelFormatError(f"{where}.linear: expected an object")
    quadratic = doc.get("quadratic", [])
    entries = []
    for k, item in enumerate(quadratic):
        if not (isinstance(item, (list, tuple)) and len(item) == 3):
            raise ModelFormatError(f"{where}.quadratic[{k}]: expected [id, id, coeff]")
        entries.append((str(item[0]), str(item[1]), float(item[2])))
    return make_expr({str(v): float(c) for v, c in linear.items()},
                     entries, float(doc.get("offset", 0.0)))


def model_to_doc(model: ConstrainedModel) -> dict:
    variables = []
    for v in model.variables:
        entry = {"id": v.id, "type": v.vartype}
        if v.vartype != BINARY:
            entry["lower"] = v.lower
            entry["upper"] = v.upper
        variables.append(entry)
    return {
        "variables": variables,
        "objective": _expr_to_doc(model.objective),
        "constraints": [
            {"label": c.label, "lhs": _expr_to_doc(c.lhs), "sense": c.sense, "rhs": c.rhs}
            for c in model.constraints
        ],
    }


def model_from_doc(doc: dict) -> ConstrainedModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("top level: expected an object")
    variables = []
    for k, entry in enumerate(doc.get("variables", [])):
        if not isinstance(entry, dict) or "id" not in entry or "type" not in entry:
            raise ModelFormatError(f"variables[{k}]: expected {{id, type, ...}}")
        vartype = entry["type"]
        if vartype not in _VARTYPES:
            raise ModelFormatError(f"variables[{k}].type: unknown type {vartype!r}")
        if vartype == BINARY:
            variables.append(Variable.binary(str(entry["id"])))
        else:
            try:
                lower, upper = float(entry["lower"]), float(entry["upper"])
            except KeyError as exc:
                raise ModelFormatError(f"variables[{k}]: missing bound {exc.args[0]!r}") from None
            variables.append(Variable(str(entry["id"]), vartype, lower, upper))
    objective = _expr_from_doc(doc.get("objective", {}), "objective")
    constraints = []
    for k, entry in enumerate(doc.get("constraints", [])):
        where = f"constraints[{k}]"
        if not isinstance(entry, dict):
            raise ModelFormatError(f"{where}: expected an object")
        sense = entry.get("sense")
        if sense not in _SENSES:
            raise ModelFormatError(f"{where}.sense: unknown sense {sense!r}")
        try:
            constraints.append(Constraint(
                lhs=_expr_from_doc(entry["lhs"], f"{where}.lhs"),
                sense=sense,
                rhs=float(entry["rhs"]),
                label=str(entry["label"]),
            ))
        except KeyError as exc:
            raise ModelFormatError(f"{where}: missing field {exc.args[0]!r}") from None
    return ConstrainedModel(tuple(variables), objective, tuple(constraints))


def serialize(model: ConstrainedModel, indent: int | None = None) -> str:
    """Model to JSON text; floats keep full round-trip precision."""
    return json.dumps(model_to_doc(model), indent=indent)


def deserialize(text: str) -> ConstrainedModel:
    """JSON text to model; parse errors carry line/column context."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return model_from_doc(doc)


def save_model(model: ConstrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize(model, indent=2))
        handle.write("\n")


def load_model(path) -> ConstrainedModel:
    with open(path, encoding="utf-8") as handle:
        return deserialize(handle.read())


def all_assignments(n: int) -> np.ndarray:
    """All 2**n binary assignments as a (2**n, n) uint8 matrix, column 0 = LSB."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.uint8)
    codes = np.arange(2 ** n, dtype=np.uint64)
    return ((codes[:, None] >> np.arange(n, dtype=np.uint64)) & 1).astype(np.uint8)
