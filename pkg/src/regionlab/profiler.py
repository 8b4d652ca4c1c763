"""Profiling: program interpretation with per-block execution counts,
profile annotation, and natural-loop nesting depths.

The interpreter dispatches to the compiled kernel when the extension built
from _kernel.pyx is importable; set REGIONLAB_PURE=1 to force the
pure-Python fallback.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from . import flatten, ir
from .flatten import (
    STATUS_ARITY,
    STATUS_DIV_ZERO,
    STATUS_EXTERNAL,
    STATUS_FUEL,
    STATUS_OK,
)

if os.environ.get("REGIONLAB_PURE"):
    from . import _interp_py as _engine

    KERNEL = "python"
else:
    try:
        from . import _kernel as _engine  # type: ignore[attr-defined]

        KERNEL = "compiled"
    except ImportError:
        from . import _interp_py as _engine

        KERNEL = "python"

DEFAULT_FUEL = 10_000_000
CALL_OVERHEAD = 5


class ExecutionError(Exception):
    pass


class FuelExhausted(ExecutionError):
    pass


class DivisionByZero(ExecutionError):
    pass


class ArityMismatch(ExecutionError):
    pass


class ExternalCall(ExecutionError):
    pass


_STATUS_EXC = {
    STATUS_FUEL: (FuelExhausted, "fuel exhausted"),
    STATUS_DIV_ZERO: (DivisionByZero, "division by zero"),
    STATUS_ARITY: (ArityMismatch, "call-arity mismatch at runtime"),
    STATUS_EXTERNAL: (ExternalCall, "call to external procedure"),
}


@dataclass
class ExecutionProfile:
    block_counts: dict  # (proc name, block id) -> count
    dynamic_instructions: int
    dynamic_calls: int
    outputs: list
    return_value: int = 0

    def dynamic_cost(self, call_overhead=CALL_OVERHEAD):
        return self.dynamic_instructions + call_overhead * self.dynamic_calls

    def to_json(self):
        return json.dumps(
            {
                "blocks": {
                    f"{p}.{b}": int(c)
                    for (p, b), c in self.block_counts.items()
                    if c
                },
                "dynamic_instructions": int(self.dynamic_instructions),
                "dynamic_calls": int(self.dynamic_calls),
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        counts = {}
        for key, c in data["blocks"].items():
            proc, block = key.split(".", 1)
            counts[(proc, block)] = int(c)
        return cls(
            block_counts=counts,
            dynamic_instructions=int(data["dynamic_instructions"]),
            dynamic_calls=int(data["dynamic_calls"]),
            outputs=[],
        )


def interpret(program, inputs=(), fuel=DEFAULT_FUEL):
    """Execute program with the given main arguments; returns its profile."""
    flat = flatten.flatten(program)
    status, counts, executed, calls, outputs, ret = _engine.execute(
        flat, list(inputs), fuel
    )
    if status != STATUS_OK:
        exc, msg = _STATUS_EXC[status]
        raise exc(msg)
    block_counts = {
        key: int(counts[i]) for i, key in enumerate(flat.block_keys)
    }
    return ExecutionProfile(
        block_counts=block_counts,
        dynamic_instructions=int(executed),
        dynamic_calls=int(calls),
        outputs=list(outputs),
        return_value=int(ret),
    )


def run_outputs(program, inputs=(), fuel=DEFAULT_FUEL):
    """Outputs only; convenience for semantics-preservation checks."""
    return interpret(program, inputs, fuel).outputs


def annotate_profile(program, profile):
    """New program with block weights set from the profile's counts."""
    known = {
        (pname, bid)
        for pname, proc in program.procedures.items()
        for bid in proc.blocks
    }
    for key in profile.block_counts:
        if key not in known:
            raise ir.IRError(f"profile references unknown block {key[0]}.{key[1]}")
    out = ir.clone_program(program)
    for pname, proc in out.procedures.items():
        for bid, blk in proc.blocks.items():
            blk.weight = int(profile.block_counts.get((pname, bid), 0))
    return out


def has_weights(program):
    return any(
        blk.weight
        for proc in program.procedures.values()
        for blk in proc.blocks.values()
    )


# ---------------------------------------------------------------------------
# Dominators and natural loops


@dataclass
class LoopInfo:
    depth: dict = field(default_factory=dict)  # block id -> nesting depth
    headers: dict = field(default_factory=dict)  # header id -> set of body ids


def dominators(proc):
    """Iterative dominator sets: block id -> set of dominating block ids."""
    order = list(proc.blocks)
    reachable = ir.reachable_blocks(proc)
    preds = proc.predecessors()
    all_ids = set(order) & reachable
    dom = {bid: set(all_ids) for bid in all_ids}
    dom[proc.entry_block] = {proc.entry_block}
    changed = True
    while changed:
        changed = False
        for bid in order:
            if bid not in all_ids or bid == proc.entry_block:
                continue
            ps = [p for p in preds[bid] if p in all_ids]
            new = set(all_ids)
            for p in ps:
                new &= dom[p]
            new.add(bid)
            if new != dom[bid]:
                dom[bid] = new
                changed = True
    return dom


def loop_depths(proc):
    """Natural-loop nesting depth per block.

    Bodies of back edges sharing a header are merged; blocks outside every
    natural loop get depth 0.  Irreducible cycles contribute no header, so
    their blocks keep the depth of the innermost enclosing natural loop.
    """
    dom = dominators(proc)
    preds = proc.predecessors()
    bodies = {}  # header -> set of blocks
    for blk in proc.blocks.values():
        if blk.id not in dom:
            continue
        for succ in blk.successors:
            if succ in dom.get(blk.id, ()):  # back edge blk -> succ
                body = bodies.setdefault(succ, {succ})
                stack = [blk.id]
                while stack:
                    node = stack.pop()
                    if node in body:
                        continue
                    body.add(node)
                    stack.extend(p for p in preds[node] if p in dom)
    depth = {bid: 0 for bid in proc.blocks}
    for body in bodies.values():
        for bid in body:
            depth[bid] += 1
    return LoopInfo(depth=depth, headers=bodies)
