"""Seeded random program generator for property testing.

Generated programs are always structurally valid and terminate under the
default interpreter fuel: loops are counted with small trip counts and the
call graph is acyclic unless the bounded-recursion flag is set."""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import ir


@dataclass
class Shape:
    procs: int = 3
    max_blocks: int = 12
    call_density: float = 0.3
    loop_prob: float = 0.4
    recursion: bool = False

    def __post_init__(self):
        if self.procs < 1 or self.max_blocks < 3:
            raise ValueError("shape bounds must be positive (max_blocks >= 3)")


class _ProcBuilder:
    def __init__(self, rng, name, params, callees):
        self.rng = rng
        self.name = name
        self.params = params
        self.callees = callees  # list of (name, arity) this proc may call
        self.blocks = {}
        self.order = []
        self.nreg = 0
        self.regs = list(params)  # registers known to be defined
        self.loop_depth = 0
        self.calls_made = []

    def fresh(self):
        self.nreg += 1
        return f"v{self.nreg}"

    def operand(self):
        if self.regs and self.rng.random() < 0.7:
            return self.rng.choice(self.regs)
        return self.rng.randint(-20, 20)

    def new_block(self):
        bid = f"b{len(self.order)}"
        blk = ir.Block(id=bid, origin=self.name)
        self.blocks[bid] = blk
        self.order.append(bid)
        return blk

    def fill(self, blk, n):
        for _ in range(n):
            kind = self.rng.random()
            dest = self.fresh()
            if kind < 0.25:
                blk.instructions.append(
                    ir.Instruction(
                        "const", dest=dest, args=(self.rng.randint(-50, 50),)
                    )
                )
            elif kind < 0.8:
                op = self.rng.choice(["add", "sub", "mul", "lt", "eq"])
                blk.instructions.append(
                    ir.Instruction(
                        op, dest=dest, args=(self.operand(), self.operand())
                    )
                )
            elif kind < 0.9:
                # division by a nonzero literal only, so runs never trap
                blk.instructions.append(
                    ir.Instruction(
                        "div",
                        dest=dest,
                        args=(
                            self.operand(),
                            self.rng.choice([2, 3, 5, 7, -3]),
                        ),
                    )
                )
            else:
                blk.instructions.append(
                    ir.Instruction("print", args=(self.operand(),))
                )
                continue
            self.regs.append(dest)

    def _jump(self, blk, target):
        blk.instructions.append(ir.Instruction("jump", args=(target,)))
        blk.successors = [target]

    def build(self, shape, force_call=None):
        budget = self.rng.randint(3, shape.max_blocks)
        current = self.new_block()
        self.fill(current, self.rng.randint(1, 3))
        pending_call = force_call
        while len(self.order) < budget - 1:
            roll = self.rng.random()
            room = budget - len(self.order)
            if pending_call is not None and room >= 3:
                current = self._emit_call(current, pending_call)
                pending_call = None
            elif (
                self.callees
                and room >= 3
                and roll < shape.call_density
            ):
                current = self._emit_call(
                    current, self.rng.choice(self.callees)
                )
            elif (
                roll < shape.call_density + shape.loop_prob
                and room >= 4
                and self.loop_depth < 2
            ):
                current = self._emit_loop(current, shape)
            elif room >= 4 and roll < 0.85:
                current = self._emit_diamond(current)
            else:
                nxt = self.new_block()
                self._jump(current, nxt.id)
                self.fill(nxt, self.rng.randint(1, 3))
                current = nxt
        if pending_call is not None:
            current = self._emit_call(current, pending_call)
        exit_blk = self.new_block()
        self._jump(current, exit_blk.id)
        exit_blk.instructions.append(
            ir.Instruction("return", args=(self.operand(),))
        )
        exit_blk.successors = []
        return ir.Procedure(
            name=self.name,
            params=list(self.params),
            blocks={bid: self.blocks[bid] for bid in self.order},
            entry_block=self.order[0],
            exit_block=exit_blk.id,
        )

    def _emit_call(self, current, callee):
        name, arity = callee
        call_blk = self.new_block()
        self._jump(current, call_blk.id)
        dest = self.fresh()
        call_blk.instructions.append(
            ir.Instruction(
                "call",
                dest=dest,
                args=tuple(self.operand() for _ in range(arity)),
                callee=name,
            )
        )
        cont = self.new_block()
        call_blk.successors = [cont.id]
        self.regs.append(dest)
        self.fill(cont, self.rng.randint(1, 2))
        self.calls_made.append(name)
        return cont

    def _emit_loop(self, current, shape):
        counter = self.fresh()
        trips = self.rng.randint(2, 4)
        current.instructions.append(
            ir.Instruction("const", dest=counter, args=(trips,))
        )
        head = self.new_block()
        self._jump(current, head.id)
        cond = self.fresh()
        head.instructions.append(
            ir.Instruction("lt", dest=cond, args=(0, counter))
        )
        body = self.new_block()
        after = self.new_block()
        head.instructions.append(
            ir.Instruction("branch", args=(cond, body.id, after.id))
        )
        head.successors = [body.id, after.id]
        self.loop_depth += 1
        self.fill(body, self.rng.randint(1, 3))
        self.loop_depth -= 1
        body.instructions.append(
            ir.Instruction("sub", dest=counter, args=(counter, 1))
        )
        self._jump(body, head.id)
        self.fill(after, self.rng.randint(1, 2))
        return after

    def _emit_diamond(self, current):
        cond = self.fresh()
        current.instructions.append(
            ir.Instruction(
                "lt", dest=cond, args=(self.operand(), self.operand())
            )
        )
        self.regs.append(cond)
        left = self.new_block()
        right = self.new_block()
        join = self.new_block()
        current.instructions.append(
            ir.Instruction("branch", args=(cond, left.id, right.id))
        )
        current.successors = [left.id, right.id]
        for arm in (left, right):
            self.fill(arm, self.rng.randint(1, 2))
            self._jump(arm, join.id)
        self.fill(join, self.rng.randint(1, 2))
        return join


_REC_NAME = "rec1"


def _recursive_procedure():
    """A canned, terminating self-recursive procedure."""
    text = f"""
proc {_REC_NAME}(n) {{
block e0:
  t = lt n 1
  branch t base step
block step:
  m = sub n 1
block c0:
  r = call {_REC_NAME}(m)
block c1:
  s = add r n
  jump base
block base:
  u = move 0
  return u
}}
"""
    return ir.parse_program(text).procedures[_REC_NAME]


def generate_program(seed, shape=None, **kwargs):
    """Deterministic random program for the given seed and shape."""
    if shape is None:
        shape = Shape(**kwargs)
    rng = random.Random(seed)
    names = ["main"] + [f"f{i}" for i in range(1, shape.procs)]
    arities = {n: (0 if n == "main" else rng.randint(0, 2)) for n in names}
    procedures = {}
    rec_sig = None
    if shape.recursion:
        rec_sig = (_REC_NAME, 1)
    for i, name in enumerate(names):
        callees = [(n, arities[n]) for n in names[i + 1:]]
        if rec_sig and shape.call_density > 0:
            callees.append(rec_sig)
        params = [f"p{k}" for k in range(arities[name])]
        builder = _ProcBuilder(rng, name, params, callees)
        # guarantee a chain so every procedure stays reachable from main
        force = None
        if i + 1 < len(names) and shape.call_density > 0:
            force = (names[i + 1], arities[names[i + 1]])
        procedures[name] = builder.build(shape, force_call=force)
    if shape.recursion:
        rec = _recursive_procedure()
        # keep recursion depth small: callers pass literals in [0, 6]
        procedures[_REC_NAME] = rec
        for proc in procedures.values():
            if proc.name == _REC_NAME:
                continue
            for blk in proc.callsite_blocks():
                if blk.call.callee == _REC_NAME:
                    blk.call.args = (rng.randint(0, 6),)
    program = ir.Program(procedures=procedures, entry="main", externs=set())
    diags = ir.validate(program)
    if diags:
        raise ir.IRError(
            "generator produced invalid program: " + "; ".join(map(str, diags))
        )
    return program
