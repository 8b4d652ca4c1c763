"""Inlining heuristics: first-order procedure orderings, second-order
per-callsite gates, loop call weight, and the named combinations H0-H6."""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import ir
from .inliner import Eligibility, recursive_procedures
from .profiler import loop_depths

LOOP_CALL_W = 10

FIRST_ORDER_KINDS = (
    "none",
    "profile_time_desc",
    "callsites_desc_then_size_asc",
    "loop_call_weight_desc_then_size_asc",
)


@dataclass(frozen=True)
class FirstOrderPolicy:
    kind: str = "none"

    def __post_init__(self):
        if self.kind not in FIRST_ORDER_KINDS:
            raise ValueError(f"unknown first-order kind '{self.kind}'")


@dataclass(frozen=True)
class SecondOrderPolicy:
    frequency_ratio: float | None = None
    max_callee_size: int | None = None
    block_recursion: bool = False
    growth_limit: float = 0.20
    min_loop_call_weight: int | None = None

    def __post_init__(self):
        for name in ("frequency_ratio", "max_callee_size",
                     "min_loop_call_weight"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive when enabled")
        if self.growth_limit < 0:
            raise ValueError("growth_limit must be nonnegative")


@dataclass(frozen=True)
class HeuristicCombo:
    name: str
    first: FirstOrderPolicy
    second: SecondOrderPolicy
    strategy: str  # procedure_based | phased | demand

    @property
    def inlines(self):
        return self.strategy != "procedure_based"


_FREQ_GATE = SecondOrderPolicy(frequency_ratio=0.5)

_COMBOS = {
    "H0": HeuristicCombo(
        "H0", FirstOrderPolicy("none"), SecondOrderPolicy(), "procedure_based"
    ),
    "H1": HeuristicCombo(
        "H1", FirstOrderPolicy("profile_time_desc"), _FREQ_GATE, "phased"
    ),
    "H2": HeuristicCombo(
        "H2",
        FirstOrderPolicy("callsites_desc_then_size_asc"),
        replace(_FREQ_GATE, max_callee_size=25),
        "demand",
    ),
    "H3": HeuristicCombo(
        "H3",
        FirstOrderPolicy("callsites_desc_then_size_asc"),
        replace(_FREQ_GATE, block_recursion=True),
        "demand",
    ),
    "H4": HeuristicCombo(
        "H4",
        FirstOrderPolicy("loop_call_weight_desc_then_size_asc"),
        replace(_FREQ_GATE, block_recursion=True),
        "demand",
    ),
    "H5": HeuristicCombo(
        "H5",
        FirstOrderPolicy("profile_time_desc"),
        replace(_FREQ_GATE, block_recursion=True),
        "demand",
    ),
    "H6": HeuristicCombo(
        "H6",
        FirstOrderPolicy("profile_time_desc"),
        replace(_FREQ_GATE, block_recursion=True, min_loop_call_weight=10),
        "demand",
    ),
}

COMBO_NAMES = tuple(sorted(_COMBOS))


def combo_config(name):
    """The named heuristic combination (H0..H6)."""
    try:
        return _COMBOS[name]
    except KeyError:
        raise ValueError(f"unknown heuristic combination '{name}'") from None


def loop_call_weight(procedure, loops=None, w=LOOP_CALL_W):
    """Sum over callsites of loop nesting depth times w."""
    if loops is None:
        loops = loop_depths(procedure)
    return sum(
        loops.depth.get(blk.id, 0) * w for blk in procedure.callsite_blocks()
    )


def _profile_time(proc, pname, profile):
    if profile is not None:
        return sum(
            profile.block_counts.get((pname, bid), 0) * len(blk.instructions)
            for bid, blk in proc.blocks.items()
        )
    # fall back to annotated block weights
    return sum(
        blk.weight * len(blk.instructions) for blk in proc.blocks.values()
    )


def _static_callsites_to(program):
    counts = {name: 0 for name in program.procedures}
    for proc in program.procedures.values():
        for blk in proc.callsite_blocks():
            callee = blk.call.callee
            if callee in counts:
                counts[callee] += 1
    return counts


def order_procedures(program, policy, profile=None):
    """Procedure names in first-order processing order (a permutation)."""
    names = list(program.procedures)
    kind = policy.kind
    if kind == "none":
        return names
    if kind == "profile_time_desc":
        if profile is None and not any(
            blk.weight
            for p in program.procedures.values()
            for blk in p.blocks.values()
        ):
            raise ir.IRError(
                "profile ordering requires a profile or annotated weights"
            )
        return sorted(
            names,
            key=lambda n: (
                -_profile_time(program.procedures[n], n, profile),
                n,
            ),
        )
    if kind == "callsites_desc_then_size_asc":
        counts = _static_callsites_to(program)
        return sorted(
            names,
            key=lambda n: (
                -counts[n],
                ir.code_size(program.procedures[n]),
                n,
            ),
        )
    if kind == "loop_call_weight_desc_then_size_asc":
        return sorted(
            names,
            key=lambda n: (
                -loop_call_weight(program.procedures[n]),
                ir.code_size(program.procedures[n]),
                n,
            ),
        )
    raise ValueError(f"unknown first-order kind '{kind}'")


@dataclass
class CalleeStats:
    size: int
    weight: int = 0
    loop_weight: int = 0
    recursive: bool = False


def callee_stats(program, callee, loops_cache=None):
    proc = program.procedures[callee]
    if loops_cache is not None and callee in loops_cache:
        lcw = loops_cache[callee]
    else:
        lcw = loop_call_weight(proc)
        if loops_cache is not None:
            loops_cache[callee] = lcw
    return CalleeStats(
        size=ir.code_size(proc),
        weight=proc.blocks[proc.entry_block].weight,
        loop_weight=lcw,
        recursive=callee in recursive_procedures(program),
    )


def should_inline(site, stats, policy, growth_state=None, seed_weight=None):
    """Second-order gate decision for one callsite.

    seed_weight is the weight of the seed of the region currently being
    formed; None (no region context yet) lets the frequency gate pass.
    """
    if growth_state is not None and not growth_state.within_limit(
        policy.growth_limit
    ):
        return Eligibility.no("growth_limit")
    if policy.block_recursion and stats.recursive:
        return Eligibility.no("recursive_blocked")
    if policy.max_callee_size is not None and stats.size > policy.max_callee_size:
        return Eligibility.no("policy_rejected(size)")
    if (
        policy.frequency_ratio is not None
        and seed_weight is not None
        and site.frequency < policy.frequency_ratio * seed_weight
    ):
        return Eligibility.no("policy_rejected(frequency)")
    if (
        policy.min_loop_call_weight is not None
        and stats.loop_weight < policy.min_loop_call_weight
    ):
        return Eligibility.no("policy_rejected(loopweight)")
    return Eligibility.ok()
