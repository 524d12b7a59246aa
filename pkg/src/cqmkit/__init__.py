"""Constrained quadratic models, penalty compilation to QUBO/Ising form,
annealing metaheuristics, a hybrid decompose-sample-merge solver, and a
benchmark harness with exact desk-scale oracles."""

__version__ = "0.1.0"

from .model import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    Constraint,
    ConstrainedModel,
    IsingModel,
    QuadraticExpr,
    QuboModel,
    Sample,
    SampleSet,
    Variable,
    check_feasibility,
    deserialize,
    evaluate,
    load_model,
    make_expr,
    save_model,
    serialize,
)
from .compile import (
    CompiledQubo,
    PenaltyConfig,
    SlackEncoding,
    compile_penalties,
    encode_inequality,
    ising_to_qubo,
    qubo_to_ising,
    suggest_lambda,
)
from .solvers import (
    AnnealSchedule,
    SolverParams,
    brute_force,
    greedy_descent,
    simulated_annealing,
    simulated_quantum_annealing,
    tabu_search,
)
