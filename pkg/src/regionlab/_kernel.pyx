# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled interpreter kernel for flattened programs.

Semantics are bit-identical to regionlab._interp_py: 64-bit wrapping
arithmetic, truncating division, call frames with positional parameters.
"""

import numpy as np

cimport numpy as cnp
from libc.limits cimport LLONG_MIN

cnp.import_array()

ctypedef cnp.int64_t i64

DEF S_OK = 0
DEF S_FUEL = 1
DEF S_DIV0 = 2
DEF S_ARITY = 3
DEF S_EXTERNAL = 4


def execute(flat, args, long long fuel):
    cdef i64[:, ::1] code = flat.code
    cdef i64[:, ::1] blocks = flat.blocks
    cdef i64[:, ::1] procs = flat.procs
    cdef i64[::1] param_regs = flat.param_regs
    cdef i64[:, ::1] call_args = flat.call_args

    counts_arr = np.zeros(flat.blocks.shape[0], dtype=np.int64)
    cdef i64[::1] counts = counts_arr
    outputs = []

    cdef long long executed = 0
    cdef long long calls = 0
    cdef Py_ssize_t entry_proc = flat.entry_proc

    if len(args) != procs[entry_proc, 2]:
        return S_ARITY, counts_arr, executed, calls, outputs, 0

    # one flat register file; frames are windows [base, base+nregs)
    cdef Py_ssize_t reg_cap = 4096
    regs_arr = np.zeros(reg_cap, dtype=np.int64)
    cdef i64[::1] regs = regs_arr

    cdef Py_ssize_t stack_cap = 256
    frame_arr = np.zeros((stack_cap, 3), dtype=np.int64)  # base, ret_block, ret_dest
    cdef i64[:, ::1] frames = frame_arr
    cdef Py_ssize_t depth = 0

    cdef Py_ssize_t base = 0
    cdef Py_ssize_t top = <Py_ssize_t> procs[entry_proc, 1]
    cdef Py_ssize_t i, k, idx, end
    cdef Py_ssize_t pstart = <Py_ssize_t> procs[entry_proc, 3]
    for i in range(len(args)):
        regs[base + param_regs[pstart + i]] = <i64> args[i]

    cdef Py_ssize_t block = <Py_ssize_t> procs[entry_proc, 0]
    cdef Py_ssize_t next_block
    cdef i64 op, dest, a, amode, b, bmode
    cdef i64 va, vb, q, ret_value
    cdef bint transferred
    cdef Py_ssize_t callee, nregs

    while True:
        counts[block] += 1
        idx = <Py_ssize_t> blocks[block, 0]
        end = idx + <Py_ssize_t> blocks[block, 1]
        next_block = <Py_ssize_t> blocks[block, 2]
        transferred = False
        while idx < end:
            if executed >= fuel:
                return S_FUEL, counts_arr, executed, calls, outputs, 0
            executed += 1
            op = code[idx, 0]
            dest = code[idx, 1]
            a = code[idx, 2]
            amode = code[idx, 3]
            b = code[idx, 4]
            bmode = code[idx, 5]
            idx += 1
            if op == 0:  # const
                regs[base + dest] = a
            elif op == 7:  # move
                regs[base + dest] = a if amode else regs[base + a]
            elif op <= 6:  # binary
                va = a if amode else regs[base + a]
                vb = b if bmode else regs[base + b]
                if op == 1:
                    regs[base + dest] = <i64> (
                        (<unsigned long long> va) + (<unsigned long long> vb))
                elif op == 2:
                    regs[base + dest] = <i64> (
                        (<unsigned long long> va) - (<unsigned long long> vb))
                elif op == 3:
                    regs[base + dest] = <i64> (
                        (<unsigned long long> va) * (<unsigned long long> vb))
                elif op == 4:
                    if vb == 0:
                        return S_DIV0, counts_arr, executed, calls, outputs, 0
                    if va == LLONG_MIN and vb == -1:
                        regs[base + dest] = va  # wraps, avoids SIGFPE
                    else:
                        regs[base + dest] = va / vb
                elif op == 5:
                    regs[base + dest] = 1 if va < vb else 0
                else:
                    regs[base + dest] = 1 if va == vb else 0
            elif op == 8:  # branch
                va = a if amode else regs[base + a]
                block = <Py_ssize_t> (blocks[block, 2] if va != 0 else blocks[block, 3])
                transferred = True
                break
            elif op == 9:  # jump
                block = next_block
                transferred = True
                break
            elif op == 12:  # print
                outputs.append(a if amode else regs[base + a])
            elif op == 11:  # return
                ret_value = a if amode else regs[base + a]
                if depth == 0:
                    return S_OK, counts_arr, executed, calls, outputs, ret_value
                depth -= 1
                top = base
                base = <Py_ssize_t> frames[depth, 0]
                block = <Py_ssize_t> frames[depth, 1]
                if frames[depth, 2] >= 0:
                    regs[base + frames[depth, 2]] = ret_value
                transferred = True
                break
            elif op == 10:  # call
                calls += 1
                if a < 0:
                    return S_EXTERNAL, counts_arr, executed, calls, outputs, 0
                callee = <Py_ssize_t> a
                if bmode != procs[callee, 2]:
                    return S_ARITY, counts_arr, executed, calls, outputs, 0
                nregs = <Py_ssize_t> procs[callee, 1]
                if top + nregs > reg_cap:
                    reg_cap = max(reg_cap * 2, top + nregs)
                    new_regs = np.zeros(reg_cap, dtype=np.int64)
                    new_regs[: regs_arr.shape[0]] = regs_arr
                    regs_arr = new_regs
                    regs = regs_arr
                if depth >= stack_cap:
                    stack_cap *= 2
                    new_frames = np.zeros((stack_cap, 3), dtype=np.int64)
                    new_frames[: frame_arr.shape[0]] = frame_arr
                    frame_arr = new_frames
                    frames = frame_arr
                for k in range(top, top + nregs):
                    regs[k] = 0
                pstart = <Py_ssize_t> procs[callee, 3]
                for k in range(bmode):
                    va = call_args[b + k, 0]
                    if call_args[b + k, 1]:
                        regs[top + param_regs[pstart + k]] = va
                    else:
                        regs[top + param_regs[pstart + k]] = regs[base + va]
                frames[depth, 0] = base
                frames[depth, 1] = next_block
                frames[depth, 2] = dest
                depth += 1
                base = top
                top = base + nregs
                block = <Py_ssize_t> procs[callee, 0]
                transferred = True
                break
        if not transferred:
            block = next_block
