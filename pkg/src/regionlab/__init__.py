"""regionlab: a region-based compilation laboratory.

A small single-entry/single-exit block IR with an interpreter/profiler,
procedure inlining, two region-formation strategies (phased and
demand-driven), a matrix of inlining heuristics (H0-H6), region-scoped
optimization, and measurement utilities for comparing the strategies.
"""

from . import (
    demand,
    flatten,
    generator,
    heuristics,
    inliner,
    ir,
    metrics,
    optimizer,
    pipeline,
    profiler,
    regions,
)
from .demand import form_regions_demand
from .generator import Shape, generate_program
from .heuristics import COMBO_NAMES, HeuristicCombo, combo_config
from .inliner import aggressive_inline, inline_at
from .ir import (
    Block,
    Instruction,
    IRError,
    Procedure,
    Program,
    parse_program,
    unparse_program,
    validate,
)
from .metrics import MetricsReport, build_report
from .pipeline import CompilationResult, compare, compile
from .profiler import (
    ExecutionProfile,
    annotate_profile,
    interpret,
    run_outputs,
)
from .regions import (
    Region,
    RegionParams,
    RegionSet,
    encapsulate,
    form_regions_phased,
    reintegrate,
    remove_side_entries,
    tail_duplicate,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "COMBO_NAMES",
    "CompilationResult",
    "ExecutionProfile",
    "HeuristicCombo",
    "IRError",
    "Instruction",
    "MetricsReport",
    "Procedure",
    "Program",
    "Region",
    "RegionParams",
    "RegionSet",
    "Shape",
    "aggressive_inline",
    "annotate_profile",
    "build_report",
    "combo_config",
    "compare",
    "compile",
    "demand",
    "encapsulate",
    "flatten",
    "form_regions_demand",
    "form_regions_phased",
    "generate_program",
    "generator",
    "heuristics",
    "inline_at",
    "inliner",
    "interpret",
    "ir",
    "metrics",
    "optimizer",
    "parse_program",
    "pipeline",
    "profiler",
    "regions",
    "reintegrate",
    "remove_side_entries",
    "run_outputs",
    "tail_duplicate",
    "unparse_program",
    "validate",
]
