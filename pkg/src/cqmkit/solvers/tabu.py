"""Single-flip tabu search and steepest greedy descent over QUBOs."""

from __future__ import annotations

import time

import numpy as np

from ..model import QuboModel, Sample, SampleSet
from .params import SolverParams, read_stream

_BOOKKEEPING_STRIDE = 64


class _FlipState:
    """Dense incremental bookkeeping for single-bit flips.

    Keeps the coupling row sums so a flip delta is one multiply-add and a
    flip updates the sums with one vector operation.
    """

    def __init__(self, q: QuboModel, x: np.ndarray):
        self.q = q
        self.matrix = q.dense()
        self.x = np.asarray(x, dtype=np.float64).copy()
        self.rows = self.matrix @ self.x
        self.energy = q.energy(self.x)

    def gains(self) -> np.ndarray:
        """Energy delta of flipping each bit."""
        return (1.0 - 2.0 * self.x) * (self.q.linear + self.rows)

    def flip(self, i: int) -> float:
        delta = (1.0 - 2.0 * self.x[i]) * (self.q.linear[i] + self.rows[i])
        shift = 1.0 - 2.0 * self.x[i]
        self.x[i] += shift
        self.rows += self.matrix[:, i] * shift
        self.energy += delta
        return delta


def _default_tenure(n: int) -> int:
    return max(4, min(20, n // 2))


def greedy_descent(q: QuboModel, start) -> Sample:
    """Steepest single-flip descent to a 1-flip-stable state.

    ``start`` may be an index->value mapping or an array of 0/1 values.
    Ties break toward the lowest index; energy decreases monotonically.
    """
    if isinstance(start, dict):
        x = np.array([start[i] for i in range(q.n)], dtype=np.float64)
    else:
        x = np.asarray(start, dtype=np.float64).copy()
    if q.n == 0:
        return Sample({}, q.offset)
    state = _FlipState(q, x)
    while True:
        gains = state.gains()
        i = int(np.argmin(gains))
        if gains[i] >= 0.0:
            break
        state.flip(i)
    assignment = {i: int(state.x[i]) for i in range(q.n)}
    return Sample(assignment, q.energy(state.x))


def _tabu_read(q: QuboModel, params: SolverParams, rng, deadline) -> tuple[np.ndarray, float]:
    n = q.n
    state = _FlipState(q, rng.integers(0, 2, size=n))
    tenure = params.tabu_tenure if params.tabu_tenure is not None else _default_tenure(n)
    expires = np.zeros(n, dtype=np.int64)  # move number until which an index is tabu
    best_energy = state.energy
    best_x = state.x.copy()
    moves = params.sweeps * n
    for move in range(1, moves + 1):
        gains = state.gains()
        allowed = expires < move
        # Aspiration: a tabu move may fire if it beats the incumbent.
        aspiring = state.energy + gains < best_energy
        candidates = allowed | aspiring
        if not candidates.any():
            candidates = allowed
        masked = np.where(candidates, gains, np.inf)
        i = int(np.argmin(masked))
        if not np.isfinite(masked[i]):
            break
        state.flip(i)
        expires[i] = move + tenure
        if params.debug and move % _BOOKKEEPING_STRIDE == 0:
            exact = q.energy(state.x)
            if abs(exact - state.energy) > 1e-9:
                raise AssertionError(f"incremental energy drifted: {state.energy} vs {exact}")
        if state.energy < best_energy:
            best_energy = state.energy
            best_x = state.x.copy()
        if deadline is not None and move % 64 == 0 and time.perf_counter() > deadline:
            break
    return best_x, best_energy


def tabu_search(q: QuboModel, params: SolverParams | None = None) -> SampleSet:
    """Tabu search with incremental deltas, tenure and aspiration.

    Each read restarts from its own random state and runs up to
    ``sweeps * n`` single-flip moves, stopping early at the time limit.
    """
    params = params or SolverParams()
    start = time.perf_counter()
    deadline = start + params.time_limit if params.time_limit is not None else None
    if q.n == 0:
        samples = [Sample({}, q.offset) for _ in range(params.reads)]
        return SampleSet.from_samples(samples, "tabu", time.perf_counter() - start, params.seed)
    samples = []
    for read in range(params.reads):
        rng = read_stream(params.seed, read)
        best_x, _ = _tabu_read(q, params, rng, deadline)
        samples.append(Sample({i: int(best_x[i]) for i in range(q.n)}, q.energy(best_x)))
    return SampleSet.from_samples(samples, "tabu", time.perf_counter() - start, params.seed)
