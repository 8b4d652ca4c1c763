"""Pure-Python interpreter kernel; the fallback when the compiled extension
is unavailable.  Semantics (64-bit wrapping arithmetic, truncating division)
match regionlab._kernel exactly."""

from __future__ import annotations

import numpy as np

from .flatten import (
    OP_ADD,
    OP_BRANCH,
    OP_CALL,
    OP_CONST,
    OP_DIV,
    OP_EQ,
    OP_JUMP,
    OP_LT,
    OP_MOVE,
    OP_MUL,
    OP_PRINT,
    OP_RETURN,
    OP_SUB,
    STATUS_ARITY,
    STATUS_DIV_ZERO,
    STATUS_EXTERNAL,
    STATUS_FUEL,
    STATUS_OK,
)

_MASK = (1 << 64) - 1
_SIGN = 1 << 63


def _wrap(v):
    v &= _MASK
    return v - (1 << 64) if v & _SIGN else v


def execute(flat, args, fuel):
    """Run a flattened program.

    Returns (status, block_counts, dynamic_instructions, dynamic_calls,
    outputs, return_value).
    """
    code = flat.code
    blocks = flat.blocks
    procs = flat.procs
    param_regs = flat.param_regs
    call_args = flat.call_args

    counts = np.zeros(len(blocks), dtype=np.int64)
    outputs = []
    executed = 0
    calls = 0

    entry_proc = flat.entry_proc
    if len(args) != procs[entry_proc][2]:
        return STATUS_ARITY, counts, executed, calls, outputs, 0

    regs = [0] * int(procs[entry_proc][1])
    pstart = int(procs[entry_proc][3])
    for i, v in enumerate(args):
        regs[param_regs[pstart + i]] = _wrap(int(v))

    # frame: (saved regs, return block, return dest)
    stack = []
    block = int(procs[entry_proc][0])
    ret_value = 0

    while True:
        counts[block] += 1
        first = int(blocks[block][0])
        n = int(blocks[block][1])
        next_block = int(blocks[block][2])
        idx = first
        end = first + n
        transferred = False
        while idx < end:
            if executed >= fuel:
                return STATUS_FUEL, counts, executed, calls, outputs, 0
            executed += 1
            op, dest, a, amode, b, bmode = (int(x) for x in code[idx])
            idx += 1
            if op == OP_CONST:
                regs[dest] = _wrap(a)
            elif op == OP_MOVE:
                regs[dest] = a if amode else regs[a]
            elif op <= OP_EQ:  # binary ops
                va = a if amode else regs[a]
                vb = b if bmode else regs[b]
                if op == OP_ADD:
                    regs[dest] = _wrap(va + vb)
                elif op == OP_SUB:
                    regs[dest] = _wrap(va - vb)
                elif op == OP_MUL:
                    regs[dest] = _wrap(va * vb)
                elif op == OP_DIV:
                    if vb == 0:
                        return STATUS_DIV_ZERO, counts, executed, calls, outputs, 0
                    q = abs(va) // abs(vb)
                    if (va < 0) != (vb < 0):
                        q = -q
                    regs[dest] = _wrap(q)
                elif op == OP_LT:
                    regs[dest] = 1 if va < vb else 0
                else:
                    regs[dest] = 1 if va == vb else 0
            elif op == OP_BRANCH:
                cond = a if amode else regs[a]
                block = (
                    int(blocks[block][2]) if cond != 0 else int(blocks[block][3])
                )
                transferred = True
                break
            elif op == OP_JUMP:
                block = next_block
                transferred = True
                break
            elif op == OP_PRINT:
                outputs.append(a if amode else regs[a])
            elif op == OP_RETURN:
                ret_value = a if amode else regs[a]
                if not stack:
                    return STATUS_OK, counts, executed, calls, outputs, ret_value
                regs, block, dest = stack.pop()
                if dest >= 0:
                    regs[dest] = ret_value
                transferred = True
                break
            elif op == OP_CALL:
                calls += 1
                if a < 0:
                    return STATUS_EXTERNAL, counts, executed, calls, outputs, 0
                if bmode != procs[a][2]:
                    return STATUS_ARITY, counts, executed, calls, outputs, 0
                new_regs = [0] * int(procs[a][1])
                ps = int(procs[a][3])
                for k in range(bmode):
                    av, am = int(call_args[b + k][0]), int(call_args[b + k][1])
                    new_regs[param_regs[ps + k]] = av if am else regs[av]
                stack.append((regs, next_block, dest))
                regs = new_regs
                block = int(procs[a][0])
                transferred = True
                break
        if not transferred:
            # fall through on the single successor
            block = next_block
