"""Seeded generators and exact oracles for the case-study problem families."""

from .blp import (
    BlpSpec,
    blp_costs,
    blp_oracle,
    blp_quadratic_oracle,
    gen_blp,
    gen_blp_quadratic_constraint,
)
from .bqp import BqpSpec, bqp_oracle, gen_bqp
from .uc import (
    GeneratorSpec,
    UcSpec,
    fleet_from_json,
    gen_unit_commitment,
    random_fleet,
    schedule_assignment,
    uc_oracle,
)

__all__ = [
    "BlpSpec",
    "BqpSpec",
    "GeneratorSpec",
    "UcSpec",
    "blp_costs",
    "blp_oracle",
    "blp_quadratic_oracle",
    "bqp_oracle",
    "fleet_from_json",
    "gen_blp",
    "gen_blp_quadratic_constraint",
    "gen_bqp",
    "gen_unit_commitment",
    "random_fleet",
    "schedule_assignment",
    "uc_oracle",
]
