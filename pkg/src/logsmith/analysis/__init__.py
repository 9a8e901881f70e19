"""Java-subset parsing and the program-analysis tools agents invoke."""

from .logs import LogLevel, LoggingStatement, parse_log_statement
from .parser import MethodTree, block_map, parse_file, parse_method
from .printer import print_wrapped
from .scopes import ScopeReport, extract_variables, scope_at
from .slicing import (
    MethodFacts,
    PlacementType,
    SliceReport,
    backward_slice,
    classify_placement,
    placement_at,
)

__all__ = [
    "LogLevel",
    "LoggingStatement",
    "MethodFacts",
    "MethodTree",
    "PlacementType",
    "ScopeReport",
    "SliceReport",
    "backward_slice",
    "block_map",
    "classify_placement",
    "extract_variables",
    "parse_file",
    "parse_log_statement",
    "parse_method",
    "placement_at",
    "print_wrapped",
    "scope_at",
]
