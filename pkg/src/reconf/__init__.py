"""Day-ahead switching schedules for radial multi-substation feeders."""

__version__ = "0.1.0"

from .casegen import FixtureSpec, day_problem, gen_price_profile, scale_loads
from .dcflow import FlowSolution, TopologyError, check_limits, solve_flows
from .model import (
    Bus,
    Line,
    Network,
    NetworkFormatError,
    StructureError,
    ValidationReport,
    is_spanning_forest,
    parse_network,
    parse_network_file,
    required_closed_flexible_count,
    serialize_network,
    validate,
)
from .optimize import (
    DayProblem,
    DaySolution,
    HourSolution,
    InfeasibleHourError,
    ModelOptions,
    NodeLimitError,
    SolverOptions,
    enumerate_hour,
    evaluate_topology,
    solve_day,
    solve_hour,
)

__all__ = [
    "Bus",
    "DayProblem",
    "DaySolution",
    "FixtureSpec",
    "FlowSolution",
    "HourSolution",
    "InfeasibleHourError",
    "Line",
    "ModelOptions",
    "Network",
    "NetworkFormatError",
    "NodeLimitError",
    "SolverOptions",
    "StructureError",
    "TopologyError",
    "ValidationReport",
    "check_limits",
    "day_problem",
    "enumerate_hour",
    "evaluate_topology",
    "gen_price_profile",
    "is_spanning_forest",
    "parse_network",
    "parse_network_file",
    "required_closed_flexible_count",
    "scale_loads",
    "serialize_network",
    "solve_day",
    "solve_flows",
    "solve_hour",
    "validate",
]
