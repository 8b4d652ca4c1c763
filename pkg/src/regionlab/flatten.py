"""Lowering of the IR into flat numpy tables consumed by the interpreter
kernels (the compiled one and the pure-Python fallback share this layout)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ir

OP_CONST = 0
OP_ADD = 1
OP_SUB = 2
OP_MUL = 3
OP_DIV = 4
OP_LT = 5
OP_EQ = 6
OP_MOVE = 7
OP_BRANCH = 8
OP_JUMP = 9
OP_CALL = 10
OP_RETURN = 11
OP_PRINT = 12

_OPNUM = {
    "const": OP_CONST,
    "add": OP_ADD,
    "sub": OP_SUB,
    "mul": OP_MUL,
    "div": OP_DIV,
    "lt": OP_LT,
    "eq": OP_EQ,
    "move": OP_MOVE,
    "branch": OP_BRANCH,
    "jump": OP_JUMP,
    "call": OP_CALL,
    "return": OP_RETURN,
    "print": OP_PRINT,
}

# Execution status codes shared by both kernels.
STATUS_OK = 0
STATUS_FUEL = 1
STATUS_DIV_ZERO = 2
STATUS_ARITY = 3
STATUS_EXTERNAL = 4


@dataclass
class FlatProgram:
    # code row: op, dest, a, amode, b, bmode   (mode 1 = literal)
    code: np.ndarray
    # block row: first_instr, n_instr, succ0, succ1 (-1 = none), proc
    blocks: np.ndarray
    # proc row: entry_block, n_regs, n_params, param_regs_start
    procs: np.ndarray
    param_regs: np.ndarray
    # call arguments: per call instruction, a = callee proc index,
    # b = start into call_args, bmode = arg count
    call_args: np.ndarray  # rows: value, mode
    entry_proc: int
    block_keys: list  # flat block index -> (proc name, block id)


def flatten(program):
    """Lower a validated Program into a FlatProgram."""
    proc_index = {name: i for i, name in enumerate(program.procedures)}
    code_rows = []
    block_rows = []
    proc_rows = []
    param_regs = []
    call_args = []
    block_keys = []

    block_index = {}
    for pname, proc in program.procedures.items():
        for bid in proc.blocks:
            block_index[(pname, bid)] = len(block_index)
            block_keys.append((pname, bid))

    for pname, proc in program.procedures.items():
        regs = {}

        def reg(name):
            if name not in regs:
                regs[name] = len(regs)
            return regs[name]

        pstart = len(param_regs)
        for p in proc.params:
            param_regs.append(reg(p))

        entry_flat = block_index[(pname, proc.entry_block)]
        for bid, blk in proc.blocks.items():
            first = len(code_rows)
            for instr in blk.instructions:
                op = _OPNUM[instr.opcode]
                dest = reg(instr.dest) if instr.dest is not None else -1
                a, amode, b, bmode = -1, 0, -1, 0
                if op == OP_CONST:
                    a, amode = instr.args[0], 1
                elif op in (OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_LT, OP_EQ):
                    a, amode = _val(instr.args[0], reg)
                    b, bmode = _val(instr.args[1], reg)
                elif op in (OP_MOVE, OP_RETURN, OP_PRINT, OP_BRANCH):
                    a, amode = _val(instr.args[0], reg)
                elif op == OP_CALL:
                    if instr.callee in proc_index:
                        a = proc_index[instr.callee]
                    else:
                        a = -1  # external, traps at runtime
                    b = len(call_args)
                    for arg in instr.args:
                        call_args.append(_val(arg, reg))
                    bmode = len(instr.args)
                code_rows.append((op, dest, a, amode, b, bmode))
            succs = [block_index[(pname, s)] for s in blk.successors]
            succ0 = succs[0] if len(succs) > 0 else -1
            succ1 = succs[1] if len(succs) > 1 else -1
            block_rows.append(
                (first, len(code_rows) - first, succ0, succ1, proc_index[pname])
            )
        proc_rows.append((entry_flat, len(regs), len(proc.params), pstart))

    def arr(rows, width):
        if not rows:
            return np.zeros((0, width), dtype=np.int64)
        return np.asarray(rows, dtype=np.int64)

    return FlatProgram(
        code=arr(code_rows, 6),
        blocks=arr(block_rows, 5),
        procs=arr(proc_rows, 4),
        param_regs=np.asarray(param_regs, dtype=np.int64),
        call_args=arr(call_args, 2),
        entry_proc=proc_index[program.entry],
        block_keys=block_keys,
    )


def _val(operand, reg):
    if isinstance(operand, int):
        return operand, 1
    return reg(operand), 0
