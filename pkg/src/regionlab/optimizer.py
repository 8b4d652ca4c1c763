"""Within-region optimization: per-block constant folding and dead-code
elimination guarded by liveness, plus the liveness analysis itself."""

from __future__ import annotations

from . import ir

_MASK = (1 << 64) - 1
_SIGN = 1 << 63


def _wrap(v):
    v &= _MASK
    return v - (1 << 64) if v & _SIGN else v


def _fold_binop(op, a, b):
    """Fold a binary op over literals with interpreter semantics, or None."""
    if op == "add":
        return _wrap(a + b)
    if op == "sub":
        return _wrap(a - b)
    if op == "mul":
        return _wrap(a * b)
    if op == "div":
        if b == 0:
            return None  # keep the trapping instruction
        q = abs(a) // abs(b)
        return _wrap(-q if (a < 0) != (b < 0) else q)
    if op == "lt":
        return 1 if a < b else 0
    if op == "eq":
        return 1 if a == b else 0
    return None


def block_uses_defs(block):
    """(registers read before written, registers written) for one block."""
    use, defs = set(), set()
    for instr in block.instructions:
        for reg in instr.registers_read():
            if reg not in defs:
                use.add(reg)
        if instr.dest is not None:
            defs.add(instr.dest)
    return use, defs


def liveness(blocks, extra_out=None):
    """Per-block live-in/live-out register sets over a block dict.

    extra_out optionally injects registers live at a block's end beyond what
    internal successors demand (used for encapsulated-unit boundaries).
    """
    use, defs = {}, {}
    for bid, blk in blocks.items():
        use[bid], defs[bid] = block_uses_defs(blk)
    live_in = {bid: set() for bid in blocks}
    live_out = {bid: set() for bid in blocks}
    changed = True
    while changed:
        changed = False
        for bid, blk in blocks.items():
            out = set(extra_out.get(bid, ())) if extra_out else set()
            for s in blk.successors:
                if s in live_in:
                    out |= live_in[s]
            new_in = use[bid] | (out - defs[bid])
            if out != live_out[bid] or new_in != live_in[bid]:
                live_out[bid] = out
                live_in[bid] = new_in
                changed = True
    return live_in, live_out


def fold_block(block):
    """Forward constant propagation and folding within one block."""
    env = {}
    changed = False
    for i, instr in enumerate(block.instructions):
        if instr.opcode == "jump":
            continue
        # branch/jump targets are block ids, not registers; leave them alone
        subst = instr.args[:1] if instr.opcode == "branch" else instr.args
        new_args = tuple(
            env[a] if isinstance(a, str) and a in env else a for a in subst
        ) + instr.args[len(subst):]
        if new_args != instr.args:
            instr.args = new_args
            changed = True
        if instr.opcode == "const":
            env[instr.dest] = _wrap(instr.args[0])
        elif instr.opcode == "move" and isinstance(instr.args[0], int):
            block.instructions[i] = ir.Instruction(
                "const", dest=instr.dest, args=(_wrap(instr.args[0]),)
            )
            env[instr.dest] = _wrap(instr.args[0])
            changed = True
        elif instr.opcode in ir.BINOPS and all(
            isinstance(a, int) for a in instr.args
        ):
            value = _fold_binop(instr.opcode, instr.args[0], instr.args[1])
            if value is None:
                env.pop(instr.dest, None)
            else:
                block.instructions[i] = ir.Instruction(
                    "const", dest=instr.dest, args=(value,)
                )
                env[instr.dest] = value
                changed = True
        elif instr.dest is not None:
            env.pop(instr.dest, None)
    return changed


_REMOVABLE = frozenset({"const", "move", "add", "sub", "mul", "lt", "eq"})


def dce_block(block, live_out):
    """Drop instructions whose results are dead; returns True if changed."""
    live = set(live_out)
    kept = []
    changed = False
    for instr in reversed(block.instructions):
        removable = (
            instr.dest is not None
            and instr.dest not in live
            and (
                instr.opcode in _REMOVABLE
                or (
                    instr.opcode == "div"
                    and isinstance(instr.args[1], int)
                    and instr.args[1] != 0
                )
            )
        )
        if removable:
            changed = True
            continue
        if instr.dest is not None:
            live.discard(instr.dest)
        live.update(instr.registers_read())
        kept.append(instr)
    if changed:
        block.instructions = kept[::-1]
    return changed


def optimize_blocks(blocks, extra_out=None, max_passes=10):
    """Fold + DCE over a block dict until a fixpoint (or pass limit)."""
    for _ in range(max_passes):
        changed = False
        for blk in blocks.values():
            changed |= fold_block(blk)
        _, live_out = liveness(blocks, extra_out=extra_out)
        for bid, blk in blocks.items():
            changed |= dce_block(blk, live_out[bid])
        if not changed:
            return


def optimize_unit(enc):
    """Optimize an encapsulated region in place-safe fashion (new value)."""
    from .regions import EPILOGUE_ID, EncapsulatedRegion

    unit = ir.clone_procedure(enc.unit)
    extra = {}
    for bid, blk in unit.blocks.items():
        out = set()
        if EPILOGUE_ID in blk.successors:
            out |= set(enc.live_out)
        if bid in enc.returns:
            out |= {
                a for a in enc.returns[bid].args if isinstance(a, str)
            }
        if out:
            extra[bid] = out
    optimize_blocks(unit.blocks, extra_out=extra)
    return EncapsulatedRegion(
        region=enc.region,
        unit=unit,
        source_proc=enc.source_proc,
        live_in=list(enc.live_in),
        live_out=list(enc.live_out),
        exit_edges={b: list(s) for b, s in enc.exit_edges.items()},
        returns=dict(enc.returns),
    )
