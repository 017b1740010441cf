"""Tools for the BC+ action language: parsing, grounding, SAT-based planning,
a brute-force oracle, and a model-in-the-loop program synthesis pipeline."""

from __future__ import annotations

from .parser import load_program, parse_program, parse_query, render_program
from .query import PlanResult, check_source, format_output, run_query, satisfiability_check

__version__ = "0.1.0"

__all__ = [
    "PlanResult",
    "check_source",
    "format_output",
    "load_program",
    "parse_program",
    "parse_query",
    "render_program",
    "run_query",
    "satisfiability_check",
]
