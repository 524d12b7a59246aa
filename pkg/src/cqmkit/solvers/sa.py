"""Metropolis simulated annealing over spin models."""

from __future__ import annotations

import math
import time

import numpy as np

from ..model import IsingModel, Sample, SampleSet
from .params import SolverParams, calibrate_t_hot, geometric_temperatures, read_stream, side_stream

_BOOKKEEPING_STRIDE = 64


def neighbor_lists(m: IsingModel):
    """Per-spin lists of (neighbor index, coupling) for incremental deltas."""
    neighbors: list[list[tuple[int, float]]] = [[] for _ in range(m.n)]
    for (i, j), coeff in m.couplings.items():
        neighbors[i].append((j, coeff))
        neighbors[j].append((i, coeff))
    return neighbors


def _sample_move_deltas(m: IsingModel, neighbors, rng, count: int = 100) -> np.ndarray:
    """Flip deltas from random states, used to set the initial temperature."""
    if m.n == 0:
        return np.zeros(0)
    deltas = np.empty(count)
    for k in range(count):
        spins = rng.integers(0, 2, size=m.n) * 2 - 1
        i = int(rng.integers(m.n))
        local = m.fields[i] + sum(c * spins[j] for j, c in neighbors[i])
        deltas[k] = -2.0 * spins[i] * local
    return deltas


def _resolve_temperatures(m: IsingModel, neighbors, params: SolverParams):
    t_hot = params.t_hot
    if t_hot is None:
        t_hot = calibrate_t_hot(
            _sample_move_deltas(m, neighbors, side_stream(params.seed, 0)))
    t_cold = params.t_cold if params.t_cold is not None else max(1e-3 * t_hot, 1e-12)
    return geometric_temperatures(t_hot, t_cold, params.sweeps, params.cooling)


def _anneal_read(m: IsingModel, neighbors, temps, rng, debug: bool):
    n = m.n
    spins = (rng.integers(0, 2, size=n) * 2 - 1).astype(np.int8).tolist()
    fields = m.fields.tolist()
    local = [fields[i] + sum(c * spins[j] for j, c in neighbors[i]) for i in range(n)]
    energy = m.energy(spins)
    best_energy = energy
    best_spins = list(spins)
    accepted = 0
    for temp in temps:
        uniforms = rng.random(n)
        for i in range(n):
            delta = -2.0 * spins[i] * local[i]
            if delta > 0.0 and uniforms[i] >= math.exp(-delta / temp):
                continue
            shift = -2 * spins[i]
            spins[i] = -spins[i]
            for j, coupling in neighbors[i]:
                local[j] += coupling * shift
            energy += delta
            accepted += 1
            if debug and accepted % _BOOKKEEPING_STRIDE == 0:
                exact = m.energy(spins)
                if abs(exact - energy) > 1e-9:
                    raise AssertionError(
                        f"incremental energy drifted: {energy} vs {exact}")
            if energy < best_energy:
                best_energy = energy
                best_spins = list(spins)
    return best_spins


def simulated_annealing(m: IsingModel, params: SolverParams | None = None) -> SampleSet:
    """Independent restarts of geometric-schedule Metropolis annealing.

    Each read runs ``params.sweeps`` full sweeps on its own RNG stream and
    contributes its best-seen state, re-evaluated exactly.  Deterministic
    given (model, params, seed).
    """
    params = params or SolverParams()
    start = time.perf_counter()
    if m.n == 0:
        samples = [Sample({}, m.offset) for _ in range(params.reads)]
        return SampleSet.from_samples(
            samples, "sa", time.perf_counter() - start, params.seed)
    neighbors = neighbor_lists(m)
    temps = _resolve_temperatures(m, neighbors, params)
    samples = []
    for read in range(params.reads):
        rng = read_stream(params.seed, read)
        best = _anneal_read(m, neighbors, temps, rng, params.debug)
        samples.append(Sample({i: int(best[i]) for i in range(m.n)}, m.energy(best)))
    return SampleSet.from_samples(samples, "sa", time.perf_counter() - start, params.seed)
