"""Reference rule-based peephole optimizer."""
from .engine import (
    ITERATION_CAP,
    IterationCapExceeded,
    OptimizationTrace,
    TraceEntry,
    apply_rules_once,
    optimize,
    rename_result,
)
from .rules import CATEGORIES, RULES, RewriteRule
