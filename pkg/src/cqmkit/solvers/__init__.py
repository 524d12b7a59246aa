"""Metaheuristic and exact solvers over QUBO/Ising models."""

from .bruteforce import brute_force, brute_force_qubo
from .params import (
    AnnealSchedule,
    SolverParams,
    calibrate_t_hot,
    geometric_temperatures,
    read_stream,
    replica_coupling,
    side_stream,
)
from .sa import simulated_annealing
from .sqa import simulated_quantum_annealing
from .tabu import greedy_descent, tabu_search

__all__ = [
    "AnnealSchedule",
    "SolverParams",
    "brute_force",
    "brute_force_qubo",
    "calibrate_t_hot",
    "geometric_temperatures",
    "greedy_descent",
    "read_stream",
    "replica_coupling",
    "side_stream",
    "simulated_annealing",
    "simulated_quantum_annealing",
    "tabu_search",
]
