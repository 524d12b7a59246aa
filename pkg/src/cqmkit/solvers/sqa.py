"""Quantum annealing surrogate: path-integral Monte Carlo over replicas.

The driver term of the anneal is realized classically by coupling each spin
to its copies in neighbouring replicas of a ring; the coupling strength grows
without bound as the driver weight vanishes, freezing the replicas together
by the end of the anneal.  Dynamics run at a fixed simulation temperature
with the problem couplings scaled by half the problem weight.
"""

from __future__ import annotations

import time

import numpy as np

from ..exceptions import InvalidScheduleError
from ..model import IsingModel, Sample, SampleSet
from .params import AnnealSchedule, SolverParams, read_stream, replica_coupling
from .sa import neighbor_lists

_MIN_DRIVER = 1e-12  # keeps the replica coupling finite on the last sweep
_GLOBAL_PASSES = 4  # collective moves per spin per sweep; these carry the
                    # dynamics once the ring coupling freezes the slices


def _replica_groups(slices: int):
    """Index groups updatable in parallel on the replica ring."""
    if slices % 2 == 0:
        return [np.arange(0, slices, 2), np.arange(1, slices, 2)]
    head = np.arange(0, slices - 1, 2)
    return [head, np.arange(1, slices, 2), np.array([slices - 1])]


def _metropolis(d_eff: np.ndarray, u: np.ndarray, temp: float) -> np.ndarray:
    """Lazy Metropolis acceptance: ties fire with probability 1/2 so the
    parallel replica updates cannot lock into zero-cost cycles."""
    prob = np.where(d_eff == 0.0, 0.5,
                    np.exp(-np.minimum(np.maximum(d_eff, 0.0), 700.0 * temp) / temp))
    return (d_eff < 0.0) | (u < prob)


def simulated_quantum_annealing(m: IsingModel,
                                schedule: AnnealSchedule | None = None,
                                params: SolverParams | None = None) -> SampleSet:
    """Replica-ring Monte Carlo anneal over a discretized schedule.

    Runs ``params.reads`` independent reads, each with ``params.trotter_slices``
    replicas; the anneal fraction advances linearly over the sweeps and every
    read reports its best single replica with an exactly recomputed energy.
    Deterministic given (model, schedule, params, seed).
    """
    params = params or SolverParams()
    schedule = schedule or AnnealSchedule.linear()
    if not isinstance(schedule, AnnealSchedule):
        raise InvalidScheduleError("schedule must be an AnnealSchedule")
    start = time.perf_counter()
    reads, slices, temp = params.reads, params.trotter_slices, params.sqa_temperature
    n = m.n
    if n == 0:
        samples = [Sample({}, m.offset) for _ in range(reads)]
        return SampleSet.from_samples(samples, "sqa", time.perf_counter() - start, params.seed)

    neighbors = neighbor_lists(m)
    streams = [read_stream(params.seed, r) for r in range(reads)]

    # State arrays carry every read at once; reads stay independent because
    # each consumes only its own stream.
    spins = np.stack([rng.integers(0, 2, size=(slices, n)) * 2 - 1 for rng in streams]
                     ).astype(np.float64)
    fields = m.fields
    local = np.tile(fields, (reads, slices, 1))
    for (i, j), coeff in m.couplings.items():
        local[:, :, i] += coeff * spins[:, :, j]
        local[:, :, j] += coeff * spins[:, :, i]
    raw = np.einsum("rki,i->rk", spins, fields)
    for (i, j), coeff in m.couplings.items():
        raw += coeff * spins[:, :, i] * spins[:, :, j]

    best_energy = raw.min(axis=1).copy()
    best_state = np.empty((reads, n))
    for r in range(reads):
        best_state[r] = spins[r, int(np.argmin(raw[r]))]

    groups = _replica_groups(slices)
    up = {tuple(g): (np.asarray(g) + 1) % slices for g in groups}
    down = {tuple(g): (np.asarray(g) - 1) % slices for g in groups}

    sweeps = params.sweeps
    for sweep in range(sweeps):
        s = sweep / (sweeps - 1) if sweeps > 1 else 1.0
        driver, problem = schedule.weights(s)
        ring_coupling = replica_coupling(max(driver, _MIN_DRIVER), slices, temp)
        problem_scale = problem / 2.0
        uniforms = np.stack([rng.random((n, slices + _GLOBAL_PASSES)) for rng in streams])
        for i in range(n):
            # Local moves: one slice at a time; the ring term resists
            # misaligning a spin with its copies.
            for g in groups:
                key = tuple(g)
                s_here = spins[:, g, i]
                ring = spins[:, up[key], i] + spins[:, down[key], i]
                d_raw = -2.0 * s_here * local[:, g, i]
                d_eff = problem_scale * d_raw + ring_coupling * (-2.0 * s_here * ring)
                u = uniforms[:, i, g]
                accept = _metropolis(d_eff, u, temp)
                if not accept.any():
                    continue
                shift = np.where(accept, -2.0 * s_here, 0.0)
                spins[:, g, i] = np.where(accept, -s_here, s_here)
                raw[:, g] += np.where(accept, d_raw, 0.0)
                for j, coeff in neighbors[i]:
                    local[:, g, j] += coeff * shift
        for gpass in range(_GLOBAL_PASSES):
            # Collective moves: flip a spin in every replica at once; the
            # ring contribution cancels, so frozen replicas can still move.
            for i in range(n):
                s_all = spins[:, :, i]
                d_raw_all = -2.0 * s_all * local[:, :, i]
                d_eff = problem_scale * d_raw_all.sum(axis=1)
                u = uniforms[:, i, slices + gpass]
                accept = _metropolis(d_eff, u, temp)
                if accept.any():
                    shift = np.where(accept[:, None], -2.0 * s_all, 0.0)
                    spins[:, :, i] = np.where(accept[:, None], -s_all, s_all)
                    raw += np.where(accept[:, None], d_raw_all, 0.0)
                    for j, coeff in neighbors[i]:
                        local[:, :, j] += coeff * shift
        sweep_best = raw.min(axis=1)
        improved = np.flatnonzero(sweep_best < best_energy)
        for r in improved:
            best_energy[r] = sweep_best[r]
            best_state[r] = spins[r, int(np.argmin(raw[r]))]

    samples = []
    for r in range(reads):
        state = best_state[r]
        samples.append(Sample({i: int(state[i]) for i in range(n)}, m.energy(state)))
    return SampleSet.from_samples(samples, "sqa", time.perf_counter() - start, params.seed)
