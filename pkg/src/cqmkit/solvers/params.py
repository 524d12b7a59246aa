"""Shared solver parameters, anneal schedules, and seeded RNG streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..exceptions import InvalidScheduleError


@dataclass(frozen=True)
class SolverParams:
    """Knobs shared by the metaheuristic solvers.

    ``t_hot``/``t_cold``/``cooling`` default to a calibrated geometric
    schedule (initial acceptance around 0.8, final temperature a thousandth
    of the initial).  ``trotter_slices`` and ``sqa_temperature`` only matter
    for the replica-based quantum surrogate; ``tabu_tenure`` only for tabu.
    """

    sweeps: int = 1000
    reads: int = 100
    seed: int = 0
    t_hot: float | None = None
    t_cold: float | None = None
    cooling: float | None = None
    trotter_slices: int = 20
    sqa_temperature: float = 0.05
    tabu_tenure: int | None = None
    time_limit: float | None = None
    debug: bool = False

    def __post_init__(self):
        if self.sweeps < 1 or self.reads < 1:
            raise ValueError("sweeps and reads must be >= 1")
        if self.trotter_slices < 2:
            raise ValueError("trotter_slices must be >= 2")
        if self.sqa_temperature <= 0:
            raise ValueError("sqa_temperature must be positive")
        if self.t_hot is not None and self.t_cold is not None:
            if not (self.t_hot > self.t_cold > 0):
                raise ValueError("need t_hot > t_cold > 0")
        if self.tabu_tenure is not None and self.tabu_tenure < 0:
            raise ValueError("tabu_tenure must be >= 0")

    def with_(self, **kwargs) -> "SolverParams":
        return replace(self, **kwargs)


def read_stream(seed: int, read: int) -> np.random.Generator:
    """Independent counter-based RNG stream for one read of one solve.

    Streams are derived from ``(seed, read)`` so reads give identical results
    whether they run serially or concurrently.
    """
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(0, int(read)))
    return np.random.Generator(np.random.Philox(seq))


def side_stream(seed: int, purpose: int) -> np.random.Generator:
    """Stream for auxiliary draws (e.g. temperature calibration), kept apart
    from the per-read streams."""
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(1, int(purpose)))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class AnnealSchedule:
    """Discretized pair of weights (driver, problem) over anneal fraction s.

    The driver weight dominates at s=0 and the problem weight at s=1; both
    are non-negative and s is strictly increasing from 0 to 1.
    """

    points: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        pts = tuple((float(s), float(a), float(b)) for s, a, b in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise InvalidScheduleError("schedule needs at least two points")
        svals = [p[0] for p in pts]
        if svals[0] != 0.0 or svals[-1] != 1.0:
            raise InvalidScheduleError("schedule must span s=0 to s=1")
        if any(b <= a for a, b in zip(svals, svals[1:])):
            raise InvalidScheduleError("s must be strictly increasing")
        if any(a < 0 or b < 0 for _, a, b in pts):
            raise InvalidScheduleError("driver and problem weights must be non-negative")
        if not (pts[0][1] > pts[0][2]):
            raise InvalidScheduleError("driver must dominate at s=0")
        if not (pts[-1][1] < pts[-1][2]):
            raise InvalidScheduleError("problem must dominate at s=1")

    @classmethod
    def linear(cls, num_points: int = 64) -> "AnnealSchedule":
        """Default ramp: driver 1-s, problem s."""
        svals = np.linspace(0.0, 1.0, num_points)
        return cls(tuple((float(s), float(1.0 - s), float(s)) for s in svals))

    def weights(self, s: float) -> tuple[float, float]:
        """Piecewise-linear interpolation of (driver, problem) at s."""
        pts = self.points
        if s <= pts[0][0]:
            return pts[0][1], pts[0][2]
        if s >= pts[-1][0]:
            return pts[-1][1], pts[-1][2]
        for (s0, a0, b0), (s1, a1, b1) in zip(pts, pts[1:]):
            if s0 <= s <= s1:
                frac = (s - s0) / (s1 - s0)
                return a0 + frac * (a1 - a0), b0 + frac * (b1 - b0)
        raise AssertionError("unreachable")


def replica_coupling(driver: float, slices: int, temperature: float) -> float:
    """Coupling between neighbouring replicas realizing the driver term.

    Always <= 0 (aligned replicas lower the energy in the ``sum J s s``
    convention) and diverging to -inf as the driver weight vanishes, which
    freezes the replicas together at the end of the anneal.
    """
    if driver <= 0.0:
        return -math.inf
    x = driver / (2.0 * slices * temperature)
    return 0.5 * slices * temperature * math.log(math.tanh(x))


def geometric_temperatures(t_hot: float, t_cold: float, sweeps: int,
                           factor: float | None = None) -> np.ndarray:
    """Geometric cooling ladder of length ``sweeps``."""
    if sweeps == 1:
        return np.array([t_cold])
    if factor is None:
        factor = (t_cold / t_hot) ** (1.0 / (sweeps - 1))
    temps = t_hot * factor ** np.arange(sweeps)
    return np.maximum(temps, t_cold)


def calibrate_t_hot(deltas: np.ndarray, target_acceptance: float = 0.8) -> float:
    """Initial temperature so uphill moves of typical size are accepted with
    roughly the target probability, estimated from sampled move deltas."""
    uphill = np.abs(np.asarray(deltas, dtype=float))
    uphill = uphill[uphill > 0]
    if uphill.size == 0:
        return 1.0
    return float(np.mean(uphill) / -math.log(target_acceptance))
