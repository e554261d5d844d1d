"""VRPTW large neighborhood search with a trainable construction policy."""

from .instance import Instance, Node, SamplerConfig, build_neighborhoods, parse_solomon, sample_instance
from .solution import CostReport, Route, Schedule, Solution, Violation, check_solution, cost
from .errors import SolverError

__all__ = [
    "Instance", "Node", "SamplerConfig", "build_neighborhoods", "parse_solomon",
    "sample_instance", "CostReport", "Route", "Schedule", "Solution", "Violation",
    "check_solution", "cost", "SolverError",
]
