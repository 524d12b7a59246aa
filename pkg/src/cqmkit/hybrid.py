"""Decompose-sample-merge orchestrator for constrained quadratic models.

The solve loop alternates three phases around a shared incumbent: a tabu
pass over the full penalized binary subspace, a subsolver run on an
extracted sub-QUBO of the highest flip-impact binaries (clamping the rest),
and a coordinate-descent refit of the continuous variables.  Penalties are
evaluated structurally from the constraint matrix, so the dense coupling
matrix implied by squared penalties is never materialized.

Determinism: every phase draws from streams keyed on (seed, iteration), and
the loop stops on a deterministic work budget derived from the time limit
(the wall clock only cuts in as a safety net on slow machines), so repeated
runs with one seed reproduce each other.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .compile import (
    PenaltyConfig,
    auto_lambda,
    linearize_all_pairs,
    with_slack_variables,
)
from .exceptions import MustBinarizeError
from .model import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    SENSE_EQ,
    SENSE_GE,
    SENSE_LE,
    ConstrainedModel,
    QuboModel,
    Sample,
    SampleSet,
    check_feasibility,
)
from .solvers import SolverParams, simulated_annealing, simulated_quantum_annealing, tabu_search
from .compile import ising_to_qubo, qubo_to_ising

logger = logging.getLogger(__name__)

TIME_LIMIT_FLOOR = 5.0
_SENSE_CODE = {SENSE_EQ: 0, SENSE_LE: 1, SENSE_GE: 2}

# Iteration costs are budgeted in estimated microseconds, inflated by a
# safety factor so the deterministic budget binds before the wall clock on
# this class of hardware; the wall clock remains as a safety net.
_BUDGET_HEADROOM = 0.7
_ESTIMATE_INFLATION = 1.5


def default_time_limit(num_binaries: int) -> float:
    """Scale-dependent minimum solve time with a hard floor."""
    return max(TIME_LIMIT_FLOOR, num_binaries / 5000.0)


@dataclass(frozen=True)
class HybridConfig:
    time_limit: float | None = None       # None -> default_time_limit(n)
    target_samples: int = 100
    subproblem_size: int = 180
    subsolver: str = "sa"                  # sa | sqa | tabu
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    seed: int = 0
    stall_limit: int = 128                 # iterations without improvement
    subsolver_sweeps: int = 256

    def __post_init__(self):
        if self.target_samples < 1 or self.subproblem_size < 1:
            raise ValueError("target_samples and subproblem_size must be >= 1")
        if self.subsolver not in ("sa", "sqa", "tabu"):
            raise ValueError(f"unknown subsolver {self.subsolver!r}")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    incumbent_energy: float        # penalized value, non-increasing
    feasible: bool
    subproblem: tuple[int, ...]


@dataclass(frozen=True)
class HybridReport:
    sampleset: SampleSet
    iterations: tuple[IterationRecord, ...]
    wall_time: float
    feasible_count: int
    time_limit: float
    policy: str = "alternate classical tabu / subsolver each iteration (50/50)"

    @property
    def best_feasible(self) -> Sample | None:
        return select_best_feasible(self.sampleset)


def select_best_feasible(ss: SampleSet) -> Sample | None:
    """Lowest-energy feasible sample; None when the whole set is infeasible."""
    for sample in ss.samples:
        if sample.feasible:
            return sample
    return None


def extract_subproblem(q: QuboModel, incumbent, k: int):
    """Clamp all but the k highest flip-impact variables of a QUBO.

    Returns ``(sub, index_map)`` where ``index_map[p]`` is the original index
    of sub-variable ``p``.  Clamped contributions fold into the sub-model's
    linear part and offset, so ``sub.energy(y) == q.energy(merged)`` exactly
    for every sub-assignment ``y``.
    """
    if not 1 <= k <= q.n:
        raise ValueError(f"need 1 <= k <= {q.n}")
    if isinstance(incumbent, dict):
        x = np.array([incumbent[i] for i in range(q.n)], dtype=float)
    else:
        x = np.asarray(incumbent, dtype=float)
    matrix = q.dense()
    gains = (1.0 - 2.0 * x) * (q.linear + matrix @ x)
    chosen = np.argsort(-np.abs(gains), kind="stable")[:k]
    chosen = np.sort(chosen)
    free = {int(i): p for p, i in enumerate(chosen)}

    linear = q.linear[chosen].copy()
    offset = q.offset + float(q.linear @ x) - float(q.linear[chosen] @ x[chosen])
    quadratic: dict[tuple[int, int], float] = {}
    for (i, j), coeff in q.quadratic.items():
        pi, pj = free.get(i), free.get(j)
        if pi is not None and pj is not None:
            key = (pi, pj) if pi < pj else (pj, pi)
            quadratic[key] = quadratic.get(key, 0.0) + coeff
        elif pi is not None:
            linear[pi] += coeff * x[j]
        elif pj is not None:
            linear[pj] += coeff * x[i]
        else:
            offset += coeff * x[i] * x[j]
    sub = QuboModel(len(chosen), linear, quadratic, offset)
    return sub, tuple(int(i) for i in chosen)


def _penalty_values(residuals: np.ndarray, codes: np.ndarray) -> np.ndarray:
    eq = residuals * residuals
    le = np.square(np.maximum(residuals, 0.0))
    ge = np.square(np.maximum(-residuals, 0.0))
    return np.where(codes == 0, eq, np.where(codes == 1, le, ge))


class PenalizedEvaluator:
    """Incremental objective-plus-penalties evaluation over the binaries.

    Holds the binary state and, for every (slack-augmented, linearized)
    constraint, its residual; continuous variables enter as foldable
    constants refreshed by :meth:`set_continuous`.
    """

    def __init__(self, objective, bin_ids: list[str], cont_ids: list[str],
                 constraints, lambdas: np.ndarray, bounds: np.ndarray):
        self.bin_ids = bin_ids
        self.cont_ids = cont_ids
        self.nb = len(bin_ids)
        self.nc = len(cont_ids)
        self.lambdas = lambdas
        self.cont_bounds = bounds  # (nc, 2)

        bidx = {v: i for i, v in enumerate(bin_ids)}
        cidx = {v: i for i, v in enumerate(cont_ids)}

        self.obj_offset = objective.offset
        self.h_b = np.zeros(self.nb)
        self.h_c = np.zeros(self.nc)
        qbb_rows, qbb_cols, qbb_vals = [], [], []
        qbc_rows, qbc_cols, qbc_vals = [], [], []
        qcc_rows, qcc_cols, qcc_vals = [], [], []
        for v, coeff in objective.linear.items():
            if v in bidx:
                self.h_b[bidx[v]] += coeff
            else:
                self.h_c[cidx[v]] += coeff
        for (a, b), coeff in objective.quadratic.items():
            if a in bidx and b in bidx:
                i, j = bidx[a], bidx[b]
                if i == j:
                    self.h_b[i] += coeff  # x**2 == x on binaries
                else:
                    qbb_rows += [i, j]
                    qbb_cols += [j, i]
                    qbb_vals += [coeff, coeff]
            elif a in cidx and b in cidx:
                qcc_rows.append(cidx[a]); qcc_cols.append(cidx[b]); qcc_vals.append(coeff)
            else:
                bi = bidx[a] if a in bidx else bidx[b]
                ci = cidx[b] if b in cidx else cidx[a]
                qbc_rows.append(bi); qbc_cols.append(ci); qbc_vals.append(coeff)
        self.q_bb = sp.csc_matrix((qbb_vals, (qbb_rows, qbb_cols)),
                                  shape=(self.nb, self.nb))
        self.q_bc = sp.csc_matrix((qbc_vals, (qbc_rows, qbc_cols)),
                                  shape=(self.nb, self.nc))
        self.q_cc = sp.csc_matrix((qcc_vals, (qcc_rows, qcc_cols)),
                                  shape=(self.nc, self.nc))

        K = len(constraints)
        self.num_constraints = K
        self.senses = np.array([_SENSE_CODE[c.sense] for c in constraints], dtype=np.int8)
        self.rhs = np.array([c.rhs - c.lhs.offset for c in constraints])
        a_rows, a_cols, a_vals = [], [], []
        c_rows, c_cols, c_vals = [], [], []
        for k, c in enumerate(constraints):
            for v, coeff in c.lhs.linear.items():
                if v in bidx:
                    a_rows.append(k); a_cols.append(bidx[v]); a_vals.append(coeff)
                else:
                    c_rows.append(k); c_cols.append(cidx[v]); c_vals.append(coeff)
        self.a_bb = sp.csc_matrix((a_vals, (a_rows, a_cols)), shape=(K, self.nb))
        self.a_bc = sp.csc_matrix((c_vals, (c_rows, c_cols)), shape=(K, self.nc))
        coo = self.a_bb.tocoo()
        self.ent_rows = coo.row
        self.ent_cols = coo.col
        self.ent_vals = coo.data
        self.ent_lams = lambdas[coo.row]

        # Raw CSC arrays: column slices without sparse-object construction,
        # which dominates per-flip cost otherwise.
        self._qbb_indptr = self.q_bb.indptr
        self._qbb_indices = self.q_bb.indices
        self._qbb_data = self.q_bb.data
        self._abb_indptr = self.a_bb.indptr
        self._abb_indices = self.a_bb.indices
        self._abb_data = self.a_bb.data
        self._abc_indptr = self.a_bc.indptr
        self._abc_indices = self.a_bc.indices
        self._abc_data = self.a_bc.data

        self.x = np.zeros(self.nb)
        self.z = bounds[:, 0].copy() if self.nc else np.zeros(0)
        self._refresh()

    # -- state -----------------------------------------------------------

    def _refresh(self):
        self.phi = (self.h_b + self.q_bb @ self.x
                    + (self.q_bc @ self.z if self.nc else 0.0))
        self.residuals = np.asarray(
            self.a_bb @ self.x + (self.a_bc @ self.z if self.nc else 0.0) - self.rhs
        ).ravel()
        self.obj_value = self.exact_objective()
        self.value = self.obj_value + self.penalty_value()

    def exact_objective(self) -> float:
        total = self.obj_offset + float(self.h_b @ self.x)
        total += 0.5 * float(self.x @ (self.q_bb @ self.x))
        if self.nc:
            total += float(self.h_c @ self.z)
            total += float(self.z @ (self.q_cc @ self.z))
            total += float(self.x @ (self.q_bc @ self.z))
        return total

    def penalty_value(self) -> float:
        return float(self.lambdas @ _penalty_values(self.residuals, self.senses))

    def load(self, x: np.ndarray, z: np.ndarray | None = None):
        self.x = np.asarray(x, dtype=float).copy()
        if z is not None and self.nc:
            self.z = np.asarray(z, dtype=float).copy()
        self._refresh()

    def set_continuous(self, z: np.ndarray):
        self.z = np.asarray(z, dtype=float).copy()
        self._refresh()

    # -- moves -----------------------------------------------------------

    def gains(self) -> np.ndarray:
        """Penalized-energy delta of flipping each binary."""
        s = 1.0 - 2.0 * self.x
        out = s * self.phi
        if len(self.ent_vals):
            d = self.ent_vals * s[self.ent_cols]
            r = self.residuals[self.ent_rows]
            codes = self.senses[self.ent_rows]
            delta = _penalty_values(r + d, codes) - _penalty_values(r, codes)
            out = out + np.bincount(self.ent_cols, weights=self.ent_lams * delta,
                                    minlength=self.nb)
        return out

    def flip(self, j: int, gain: float | None = None):
        if gain is None:
            gain = float(self.gains()[j])
        shift = 1.0 - 2.0 * self.x[j]
        self.x[j] += shift
        lo, hi = self._qbb_indptr[j], self._qbb_indptr[j + 1]
        self.phi[self._qbb_indices[lo:hi]] += self._qbb_data[lo:hi] * shift
        lo, hi = self._abb_indptr[j], self._abb_indptr[j + 1]
        self.residuals[self._abb_indices[lo:hi]] += self._abb_data[lo:hi] * shift
        self.value += gain

    def value_with_binaries(self, indices, values) -> float:
        """Penalized energy after overwriting a subset of binaries."""
        x = self.x.copy()
        x[list(indices)] = values
        obj = self.obj_offset + float(self.h_b @ x) + 0.5 * float(x @ (self.q_bb @ x))
        if self.nc:
            obj += float(self.h_c @ self.z) + float(self.z @ (self.q_cc @ self.z))
            obj += float(x @ (self.q_bc @ self.z))
        res = np.asarray(self.a_bb @ x + (self.a_bc @ self.z if self.nc else 0.0)
                         - self.rhs).ravel()
        return obj + float(self.lambdas @ _penalty_values(res, self.senses))


def _tabu_pass(ev: PenalizedEvaluator, moves: int, tenure: int,
               deadline: float | None = None) -> None:
    """Best-allowed-move tabu walk; leaves the evaluator on its best state."""
    expires = np.zeros(ev.nb, dtype=np.int64)
    best_value = ev.value
    best_x = ev.x.copy()
    for move in range(1, moves + 1):
        gains = ev.gains()
        allowed = expires < move
        aspiring = ev.value + gains < best_value
        candidates = allowed | aspiring
        masked = np.where(candidates, gains, np.inf)
        j = int(np.argmin(masked))
        if not np.isfinite(masked[j]):
            break
        ev.flip(j, float(gains[j]))
        expires[j] = move + tenure
        if ev.value < best_value - 1e-12:
            best_value = ev.value
            best_x = ev.x.copy()
        if deadline is not None and move % 128 == 0 and time.perf_counter() > deadline:
            break
    if ev.value > best_value:
        ev.load(best_x, ev.z)


def _descent_pass(ev: PenalizedEvaluator, max_moves: int | None = None) -> None:
    moves = 0
    while max_moves is None or moves < max_moves:
        gains = ev.gains()
        j = int(np.argmin(gains))
        if gains[j] >= -1e-15:
            break
        ev.flip(j, float(gains[j]))
        moves += 1


def _continuous_pass(ev: PenalizedEvaluator, passes: int = 3) -> None:
    """Coordinate descent on the continuous block.

    Variables are visited cheapest-objective-gradient first, each set to its
    quadratic minimizer (or pinned by an equality) projected onto the
    interval the other constraints allow, so a single balance equality gets
    filled in merit order.
    """
    if not ev.nc:
        return
    q_cc = ev.q_cc
    order = sorted(range(ev.nc), key=lambda c: (ev.h_c[c], c))
    z = ev.z.copy()
    x_cross = (ev.q_bc.T @ ev.x) if ev.nc else np.zeros(0)
    residuals = ev.residuals.copy()
    for _ in range(passes):
        for c in order:
            clo, chi = ev._abc_indptr[c], ev._abc_indptr[c + 1]
            col_idx = ev._abc_indices[clo:chi]
            col_val = ev._abc_data[clo:chi]
            lo, hi = ev.cont_bounds[c]
            pin = None
            for idx, coeff in zip(col_idx, col_val):
                rest = residuals[idx] - coeff * z[c] + ev.rhs[idx]
                code = ev.senses[idx]
                target = (ev.rhs[idx] - rest) / coeff
                if code == 0:
                    if pin is None:
                        pin = target
                elif (code == 1) == (coeff > 0):
                    hi = min(hi, target)
                else:
                    lo = max(lo, target)
            if pin is None:
                quad = q_cc[c, c]
                grad = ev.h_c[c] + x_cross[c] + float(q_cc.getcol(c).T @ z) \
                    + float(q_cc.getrow(c) @ z) - 2.0 * q_cc[c, c] * z[c]
                if quad > 0:
                    pin = -grad / (2.0 * quad)
                else:
                    pin = lo if grad > 0 else (hi if grad < 0 else z[c])
            if hi < lo:
                hi = lo
            new = min(max(pin, lo), hi)
            if new != z[c]:
                residuals[col_idx] += col_val * (new - z[c])
                z[c] = new
    ev.set_continuous(z)


def _build_evaluator(model: ConstrainedModel, penalty: PenaltyConfig):
    """Slack-augment and linearize the model, then wire the evaluator.

    Returns ``(evaluator, filter_only_labels)``; filter-only constraints are
    quadratic ones no linearization covers, enforced purely by the
    feasibility flags downstream.
    """
    filter_only: list[str] = []
    kept = []
    for c in model.constraints:
        if c.lhs.quadratic:
            linearized = linearize_all_pairs(c)
            if linearized is None:
                filter_only.append(c.label)
                continue
            c = linearized
        kept.append(c)
    surrogate = ConstrainedModel(model.variables, model.objective, tuple(kept))
    augmented, _ = with_slack_variables(surrogate)

    bin_ids = [v.id for v in augmented.variables if v.vartype == BINARY]
    cont_ids = [v.id for v in augmented.variables if v.vartype == CONTINUOUS]
    bounds = np.array([[augmented.variable(v).lower, augmented.variable(v).upper]
                       for v in cont_ids]).reshape(len(cont_ids), 2)

    base = auto_lambda(model) if penalty.auto else None
    lambdas = []
    for c in augmented.constraints:
        if c.label in penalty.lambdas:
            lambdas.append(penalty.lambdas[c.label])
        elif base is not None:
            lambdas.append(base)
        else:
            raise ValueError(f"no penalty weight for constraint {c.label!r}")
    ev = PenalizedEvaluator(augmented.objective, bin_ids, cont_ids,
                            augmented.constraints, np.array(lambdas), bounds)
    return ev, tuple(filter_only)


def _extract_structural(ev: PenalizedEvaluator, size: int):
    """Sub-QUBO over the highest |gain| binaries with the rest clamped.

    Only the objective and equality penalties enter (one-sided penalties are
    not polynomial in the binaries); merges are re-verified against the full
    evaluator, so the subsolver acts as a proposal generator.
    """
    gains = ev.gains()
    size = min(size, ev.nb)
    chosen = np.sort(np.argsort(-np.abs(gains), kind="stable")[:size])
    pos = {int(g): p for p, g in enumerate(chosen)}

    linear = ev.h_b[chosen].copy()
    if ev.nc:
        linear += np.asarray(ev.q_bc[chosen] @ ev.z).ravel()
    quadratic: dict[tuple[int, int], float] = {}
    coo = sp.triu(sp.csr_matrix(ev.q_bb), k=1).tocoo()
    for i, j, coeff in zip(coo.row, coo.col, coo.data):
        pi, pj = pos.get(int(i)), pos.get(int(j))
        if pi is not None and pj is not None:
            key = (pi, pj) if pi < pj else (pj, pi)
            quadratic[key] = quadratic.get(key, 0.0) + coeff
        elif pi is not None:
            linear[pi] += coeff * ev.x[j]
        elif pj is not None:
            linear[pj] += coeff * ev.x[i]

    a_csr = ev.a_bb.tocsr()
    for k in range(ev.num_constraints):
        if ev.senses[k] != 0:
            continue
        lam = ev.lambdas[k]
        row = a_csr.getrow(k)
        free_terms = []
        clamped = ev.residuals[k]
        for col, coeff in zip(row.indices, row.data):
            p = pos.get(int(col))
            if p is None:
                continue
            free_terms.append((p, coeff))
            clamped -= coeff * ev.x[col]
        for p, a in free_terms:
            linear[p] += lam * (a * a + 2.0 * a * clamped)
        for u in range(len(free_terms)):
            p1, a1 = free_terms[u]
            for w in range(u + 1, len(free_terms)):
                p2, a2 = free_terms[w]
                key = (p1, p2) if p1 < p2 else (p2, p1)
                quadratic[key] = quadratic.get(key, 0.0) + 2.0 * lam * a1 * a2

    sub = QuboModel(len(chosen), linear,
                    {k: v for k, v in quadratic.items() if v != 0.0}, 0.0)
    return sub, tuple(int(g) for g in chosen)


def _run_subsolver(sub: QuboModel, kind: str, sweeps: int, seed: int) -> np.ndarray:
    params = SolverParams(sweeps=sweeps, reads=1, seed=seed)
    if kind == "tabu":
        best = tabu_search(sub, params).first
        return np.array([best.assignment[i] for i in range(sub.n)], dtype=float)
    ising = qubo_to_ising(sub)
    if kind == "sa":
        best = simulated_annealing(ising, params).first
    else:
        best = simulated_quantum_annealing(ising, params=params).first
    spins = np.array([best.assignment[i] for i in range(sub.n)], dtype=float)
    return (spins + 1.0) / 2.0


def _iteration_stream(seed: int, index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(2, index))
    return np.random.Generator(np.random.Philox(seq))


_SUB_STEP_US = {"sa": 3.5, "tabu": 2.0, "sqa": 60.0}


def _iteration_cost_us(ev: PenalizedEvaluator, moves: int, cfg: HybridConfig) -> float:
    """Estimated microseconds one loop iteration takes on this hardware."""
    per_move = 40.0 + 0.012 * (ev.nb + len(ev.ent_vals) + ev.q_bb.nnz)
    sub_size = min(cfg.subproblem_size, ev.nb)
    sub_cost = (cfg.subsolver_sweeps * sub_size * _SUB_STEP_US[cfg.subsolver]
                + 5000.0 + 0.05 * sub_size * sub_size)
    cont_cost = 3.0 * (15.0 * ev.nc + 0.05 * ev.a_bc.nnz) if ev.nc else 0.0
    feas_cost = 1000.0 + 0.01 * (len(ev.ent_vals) + ev.q_bb.nnz)
    return (moves * per_move + sub_cost + cont_cost + feas_cost
            + 0.3 * moves * per_move + 3000.0)


def hybrid_solve(model: ConstrainedModel, cfg: HybridConfig | None = None) -> HybridReport:
    """Anytime solve of a constrained model over binaries and continuums.

    Every sample in the returned set carries the model objective as its
    energy and a feasibility flag from direct constraint evaluation.
    """
    cfg = cfg or HybridConfig()
    start = time.perf_counter()
    if any(v.vartype == INTEGER for v in model.variables):
        raise MustBinarizeError("integer variables must be binarized before hybrid_solve")
    if model.num_variables() == 0:
        return HybridReport(SampleSet.from_samples([], "hybrid", 0.0, cfg.seed),
                            (), 0.0, 0, 0.0)

    ev, _filter_only = _build_evaluator(model, cfg.penalty)
    if ev.nb < 1:
        raise MustBinarizeError("hybrid_solve needs at least one binary variable")

    limit = cfg.time_limit
    floor = default_time_limit(ev.nb)
    if limit is None:
        limit = floor
    elif limit < floor:
        logger.warning("time limit %.1fs below floor %.1fs; clamping", limit, floor)
        limit = floor
    budget = limit * 1e6 * _BUDGET_HEADROOM
    deadline = start + limit

    moves = int(min(max(2 * ev.nb, 128), 4096))
    tenure = max(4, min(20, ev.nb // 2))

    _continuous_pass(ev)
    incumbent_value = ev.value
    incumbent_x = ev.x.copy()
    incumbent_z = ev.z.copy()

    snapshots: dict[bytes, tuple[float, np.ndarray, np.ndarray]] = {}

    def snapshot():
        key = ev.x.tobytes() + ev.z.tobytes()
        if key not in snapshots:
            snapshots[key] = (ev.value, ev.x.copy(), ev.z.copy())

    def decode(x: np.ndarray, z: np.ndarray) -> dict:
        assignment = {}
        for i, v in enumerate(ev.bin_ids):
            assignment[v] = int(round(x[i]))
        for i, v in enumerate(ev.cont_ids):
            assignment[v] = float(z[i])
        return {v.id: assignment[v.id] for v in model.variables}

    log: list[IterationRecord] = []
    iteration_cost = _ESTIMATE_INFLATION * _iteration_cost_us(ev, moves, cfg)
    spent = 0.0
    stall = 0
    iteration = 0
    while iteration == 0 or (
            spent + iteration_cost <= budget
            and time.perf_counter() + iteration_cost / 1e6 < deadline
            and stall <= cfg.stall_limit):
        rng = _iteration_stream(cfg.seed, iteration)
        if stall > 0:
            rate = min(0.5, (2.0 / ev.nb) * (1 + stall / 8.0))
            mask = rng.random(ev.nb) < rate
            x_kick = np.where(mask, 1.0 - incumbent_x, incumbent_x)
            ev.load(x_kick, incumbent_z)
        else:
            ev.load(incumbent_x, incumbent_z)

        _tabu_pass(ev, moves, tenure, deadline)

        sub, chosen = _extract_structural(ev, cfg.subproblem_size)
        sub_seed = int(rng.integers(2**63))
        proposal = _run_subsolver(sub, cfg.subsolver, cfg.subsolver_sweeps, sub_seed)
        if ev.value_with_binaries(chosen, proposal) < ev.value:
            x_new = ev.x.copy()
            x_new[list(chosen)] = proposal
            ev.load(x_new, ev.z)
            _descent_pass(ev, max_moves=moves)

        _continuous_pass(ev)
        snapshot()

        if ev.value < incumbent_value - 1e-12:
            incumbent_value = ev.value
            incumbent_x = ev.x.copy()
            incumbent_z = ev.z.copy()
            stall = 0
        else:
            stall += 1
        feasible, _ = check_feasibility(model, decode(incumbent_x, incumbent_z))
        log.append(IterationRecord(iteration, incumbent_value, feasible, chosen))
        spent += iteration_cost
        iteration += 1

    # Pad the sampleset with perturbed re-descents around the incumbent.
    pad_index = 0
    attempts = 0
    while len(snapshots) < cfg.target_samples and attempts < 4 * cfg.target_samples:
        seq = np.random.SeedSequence(entropy=int(cfg.seed) & (2**64 - 1),
                                     spawn_key=(3, pad_index))
        rng = np.random.Generator(np.random.Philox(seq))
        mask = rng.random(ev.nb) < min(0.5, 2.0 / ev.nb)
        ev.load(np.where(mask, 1.0 - incumbent_x, incumbent_x), incumbent_z)
        _descent_pass(ev, max_moves=ev.nb)
        _continuous_pass(ev)
        snapshot()
        if ev.value < incumbent_value - 1e-12:
            incumbent_value = ev.value
            incumbent_x = ev.x.copy()
            incumbent_z = ev.z.copy()
        pad_index += 1
        attempts += 1

    entries = sorted(snapshots.values(), key=lambda item: item[0])[:cfg.target_samples]
    samples = []
    for _value, x, z in entries:
        assignment = decode(x, z)
        feasible, violations = check_feasibility(model, assignment)
        samples.append(Sample(assignment, model.objective.evaluate(assignment),
                              feasible, violations))
    while samples and len(samples) < cfg.target_samples:
        samples.append(samples[0])

    wall = time.perf_counter() - start
    sampleset = SampleSet.from_samples(samples, "hybrid", wall, cfg.seed)
    feasible_count = sum(1 for s in sampleset if s.feasible)
    return HybridReport(sampleset, tuple(log), wall, feasible_count, limit)
