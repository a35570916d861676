"""A workbench for a small strict functional language: frame-stack
semantics, scoping and substitution, and bounded checkers for program
equivalence (CIU, contextual, logical relations, behavioural)."""

from .equivalence import (
    Budget, ConsistentUpTo, Counterexample, Inconclusive, PreconditionError, Witness, check,
)
from .machine import Configuration, detect_divergence, eval, step
from .surface import ParseError, parse_expr, pretty

__all__ = [
    "Budget", "Configuration", "ConsistentUpTo", "Counterexample", "Inconclusive", "ParseError",
    "PreconditionError", "Witness", "check", "detect_divergence", "eval", "parse_expr", "pretty",
    "step",
]
__version__ = "0.1.0"
