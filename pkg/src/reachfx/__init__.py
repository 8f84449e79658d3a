"""Reachability types with flow-sensitive use/kill effects.

The package provides a type checker, a small-step interpreter with explicit
deallocation and move, and a harness that re-checks machine configurations
against the type system.
"""

from .evaluator import Done, OutOfFuel, Store, Stuck, StuckReason, evaluate, run, step
from .parser import ParseError, parse
from .pretty import term_str
from .typechecker import Diagnostic, Verdict, infer, typecheck

__all__ = [
    "Diagnostic", "Done", "OutOfFuel", "ParseError", "Store", "Stuck", "StuckReason",
    "Verdict", "evaluate", "infer", "parse", "run", "step", "term_str", "typecheck",
]
__version__ = "0.1.0"
