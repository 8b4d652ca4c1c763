"""Intermediate representation: programs, procedures, blocks, instructions.

Programs are treated as immutable after construction; every transformation
in the package builds a fresh value with :func:`clone_program` and friends.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

OPCODES = frozenset(
    {
        "const",
        "add",
        "sub",
        "mul",
        "div",
        "lt",
        "eq",
        "branch",
        "jump",
        "call",
        "return",
        "print",
        "move",
    }
)

BINOPS = frozenset({"add", "sub", "mul", "div", "lt", "eq"})

# Operands are either register names (str) or integer literals (int).
Operand = "str | int"


class IRError(Exception):
    """Structural or syntactic problem with an IR program."""


class ParseError(IRError):
    def __init__(self, message, line, col=1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


@dataclass
class Instruction:
    opcode: str
    dest: str | None = None
    args: tuple = ()
    callee: str | None = None

    def registers_read(self):
        # branch/jump targets are block ids, not register reads
        if self.opcode == "jump":
            return ()
        args = self.args[:1] if self.opcode == "branch" else self.args
        return tuple(a for a in args if isinstance(a, str))


@dataclass
class Block:
    id: str
    instructions: list = field(default_factory=list)
    successors: list = field(default_factory=list)
    weight: int = 0
    origin: str = ""

    @property
    def is_call(self):
        return bool(self.instructions) and self.instructions[0].opcode == "call"

    @property
    def call(self):
        return self.instructions[0] if self.is_call else None

    def terminator(self):
        if not self.instructions:
            return None
        last = self.instructions[-1]
        return last if last.opcode in ("branch", "jump", "return") else None


@dataclass
class Procedure:
    name: str
    params: list
    blocks: dict  # id -> Block, in layout order
    entry_block: str = ""
    exit_block: str = ""

    def block_list(self):
        return list(self.blocks.values())

    def predecessors(self):
        preds = {bid: [] for bid in self.blocks}
        for blk in self.blocks.values():
            for succ in blk.successors:
                if succ in preds:
                    preds[succ].append(blk.id)
        return preds

    def callsite_blocks(self):
        return [b for b in self.blocks.values() if b.is_call]


@dataclass
class Program:
    procedures: dict  # name -> Procedure, in source order
    entry: str
    externs: set = field(default_factory=set)

    def proc(self, name):
        return self.procedures[name]


@dataclass
class Diagnostic:
    invariant: str
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.invariant}: {self.message}"


def natural_key(ident):
    """Sort key that orders numeric identifiers numerically ('9' < '10')."""
    return tuple(
        int(part) if part.isdigit() else part
        for part in re.split(r"(\d+)", str(ident))
        if part != ""
    )


# ---------------------------------------------------------------------------
# Parsing


_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_BLOCKID = r"[A-Za-z0-9_]+"
_OPERAND = r"-?\d+|" + _IDENT

_RE_PROC = re.compile(rf"^proc\s+({_IDENT})\s*\(([^)]*)\)\s*\{{$")
_RE_EXTERN = re.compile(rf"^extern\s+({_IDENT})$")
_RE_BLOCK = re.compile(rf"^block\s+({_BLOCKID})(?:\s+weight\s+(\d+))?\s*:$")
_RE_ASSIGN = re.compile(rf"^({_IDENT})\s*=\s*(.+)$")
_RE_CONST = re.compile(r"^const\s+(-?\d+)$")
_RE_BINOP = re.compile(rf"^(add|sub|mul|div|lt|eq)\s+({_OPERAND})\s+({_OPERAND})$")
_RE_MOVE = re.compile(rf"^move\s+({_OPERAND})$")
_RE_CALL = re.compile(rf"^call\s+({_IDENT})\s*\(([^)]*)\)$")
_RE_BRANCH = re.compile(rf"^branch\s+({_OPERAND})\s+({_BLOCKID})\s+({_BLOCKID})$")
_RE_JUMP = re.compile(rf"^jump\s+({_BLOCKID})$")
_RE_RETURN = re.compile(rf"^return\s+({_OPERAND})$")
_RE_PRINT = re.compile(rf"^print\s+({_OPERAND})$")


def _operand(tok):
    tok = tok.strip()
    if re.fullmatch(r"-?\d+", tok):
        return int(tok)
    return tok


def parse_program(text):
    """Parse IR source text into a structurally valid :class:`Program`."""
    procs = {}
    externs = set()
    cur_proc = None  # (name, params, blocks dict)
    cur_block = None  # pending Block
    pending = []  # blocks of current proc in order

    def finish_block(lineno):
        nonlocal cur_block
        if cur_block is None:
            return
        blk, explicit_succ = cur_block
        if not blk.instructions and explicit_succ is None:
            raise ParseError(f"empty block '{blk.id}'", lineno)
        pending.append((blk, explicit_succ))
        cur_block = None

    def finish_proc(lineno):
        nonlocal cur_proc
        name, params = cur_proc
        finish_block(lineno)
        if not pending:
            raise ParseError(f"procedure '{name}' has no blocks", lineno)
        blocks = {}
        order = [blk.id for blk, _ in pending]
        for i, (blk, explicit_succ) in enumerate(pending):
            if blk.id in blocks:
                raise ParseError(f"duplicate block name '{blk.id}'", lineno)
            term = blk.terminator()
            if term is not None:
                if term.opcode == "branch":
                    blk.successors = [term.args[1], term.args[2]]
                elif term.opcode == "jump":
                    blk.successors = [term.args[0]]
                else:
                    blk.successors = []
            elif explicit_succ is not None:
                blk.successors = [explicit_succ]
            elif blk.is_call:
                if i + 1 >= len(pending):
                    raise ParseError(
                        f"call block '{blk.id}' has no continuation", lineno
                    )
                blk.successors = [order[i + 1]]
            else:
                if i + 1 >= len(pending):
                    raise ParseError(
                        f"block '{blk.id}' is missing a terminator", lineno
                    )
                # Fallthrough is canonicalized to an explicit jump at parse
                # time so in-memory blocks always spell out their edges.
                blk.instructions.append(Instruction("jump", args=(order[i + 1],)))
                blk.successors = [order[i + 1]]
            blocks[blk.id] = blk
        for blk in blocks.values():
            for succ in blk.successors:
                if succ not in blocks:
                    raise ParseError(
                        f"undefined branch target '{succ}' in block '{blk.id}'",
                        lineno,
                    )
            blk.origin = name
        exits = [b.id for b in blocks.values() if not b.successors]
        proc = Procedure(
            name=name,
            params=params,
            blocks=blocks,
            entry_block=order[0],
            exit_block=exits[0] if exits else "",
        )
        if name in procs:
            raise ParseError(f"duplicate procedure name '{name}'", lineno)
        procs[name] = proc
        pending.clear()
        cur_proc = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if cur_proc is None:
            m = _RE_EXTERN.match(line)
            if m:
                externs.add(m.group(1))
                continue
            m = _RE_PROC.match(line)
            if not m:
                raise ParseError(f"expected 'proc' declaration, got: {line}", lineno)
            params = [p.strip() for p in m.group(2).split(",") if p.strip()]
            cur_proc = (m.group(1), params)
            continue
        if line == "}":
            finish_proc(lineno)
            continue
        m = _RE_BLOCK.match(line)
        if m:
            finish_block(lineno)
            blk = Block(id=m.group(1), weight=int(m.group(2) or 0))
            cur_block = (blk, None)
            continue
        if cur_block is None:
            raise ParseError(f"instruction outside a block: {line}", lineno)
        blk, explicit_succ = cur_block
        if explicit_succ is not None:
            raise ParseError("instruction after call continuation", lineno)
        instr = _parse_instruction(line, lineno)
        if blk.is_call:
            # Call blocks hold only the call; a trailing jump just names the
            # continuation edge and is not stored as an instruction.
            if instr.opcode == "jump":
                cur_block = (blk, instr.args[0])
                continue
            raise ParseError(
                f"call must occupy its own block (block '{blk.id}')", lineno
            )
        if blk.terminator() is not None:
            raise ParseError(
                f"instruction after terminator in block '{blk.id}'", lineno
            )
        if instr.opcode == "call" and blk.instructions:
            raise ParseError(
                f"call must occupy its own block (block '{blk.id}')", lineno
            )
        blk.instructions.append(instr)

    if cur_proc is not None:
        raise ParseError("unexpected end of input: missing '}'", lineno)
    if not procs:
        raise ParseError("no procedures defined", 1)

    entry = "main" if "main" in procs else next(iter(procs))
    program = Program(procedures=procs, entry=entry, externs=externs)
    for proc in procs.values():
        for blk in proc.blocks.values():
            call = blk.call
            if call and call.callee not in procs and call.callee not in externs:
                raise ParseError(
                    f"undefined callee '{call.callee}' in {proc.name}.{blk.id}", 1
                )
    return program


def _parse_instruction(line, lineno):
    m = _RE_ASSIGN.match(line)
    if m:
        dest, rhs = m.group(1), m.group(2).strip()
        mc = _RE_CONST.match(rhs)
        if mc:
            return Instruction("const", dest=dest, args=(int(mc.group(1)),))
        mb = _RE_BINOP.match(rhs)
        if mb:
            return Instruction(
                mb.group(1),
                dest=dest,
                args=(_operand(mb.group(2)), _operand(mb.group(3))),
            )
        mm = _RE_MOVE.match(rhs)
        if mm:
            return Instruction("move", dest=dest, args=(_operand(mm.group(1)),))
        mk = _RE_CALL.match(rhs)
        if mk:
            args = tuple(
                _operand(a) for a in mk.group(2).split(",") if a.strip()
            )
            return Instruction("call", dest=dest, args=args, callee=mk.group(1))
        raise ParseError(f"bad assignment: {line}", lineno)
    mb = _RE_BRANCH.match(line)
    if mb:
        return Instruction(
            "branch", args=(_operand(mb.group(1)), mb.group(2), mb.group(3))
        )
    mj = _RE_JUMP.match(line)
    if mj:
        return Instruction("jump", args=(mj.group(1),))
    mr = _RE_RETURN.match(line)
    if mr:
        return Instruction("return", args=(_operand(mr.group(1)),))
    mp = _RE_PRINT.match(line)
    if mp:
        return Instruction("print", args=(_operand(mp.group(1)),))
    raise ParseError(f"unrecognized instruction: {line}", lineno)


# ---------------------------------------------------------------------------
# Unparsing


def unparse_program(program):
    out = []
    for ext in sorted(program.externs):
        out.append(f"extern {ext}")
    for proc in program.procedures.values():
        out.append(f"proc {proc.name}({', '.join(proc.params)}) {{")
        for blk in proc.blocks.values():
            w = f" weight {blk.weight}" if blk.weight else ""
            out.append(f"block {blk.id}{w}:")
            for instr in blk.instructions:
                out.append("  " + _unparse_instruction(instr))
            if blk.is_call:
                out.append(f"  jump {blk.successors[0]}")
            elif blk.successors and blk.terminator() is None:
                out.append(f"  jump {blk.successors[0]}")
        out.append("}")
    return "\n".join(out) + "\n"


def _unparse_instruction(instr):
    op = instr.opcode
    if op == "const":
        return f"{instr.dest} = const {instr.args[0]}"
    if op in BINOPS:
        return f"{instr.dest} = {op} {instr.args[0]} {instr.args[1]}"
    if op == "move":
        return f"{instr.dest} = move {instr.args[0]}"
    if op == "call":
        return f"{instr.dest} = call {instr.callee}({', '.join(map(str, instr.args))})"
    if op == "branch":
        return f"branch {instr.args[0]} {instr.args[1]} {instr.args[2]}"
    if op == "jump":
        return f"jump {instr.args[0]}"
    if op == "return":
        return f"return {instr.args[0]}"
    if op == "print":
        return f"print {instr.args[0]}"
    raise IRError(f"unknown opcode {op}")


# ---------------------------------------------------------------------------
# Cloning


def clone_instruction(instr):
    return Instruction(instr.opcode, instr.dest, tuple(instr.args), instr.callee)


def clone_block(blk):
    return Block(
        id=blk.id,
        instructions=[clone_instruction(i) for i in blk.instructions],
        successors=list(blk.successors),
        weight=blk.weight,
        origin=blk.origin,
    )


def clone_procedure(proc):
    return Procedure(
        name=proc.name,
        params=list(proc.params),
        blocks={bid: clone_block(b) for bid, b in proc.blocks.items()},
        entry_block=proc.entry_block,
        exit_block=proc.exit_block,
    )


def clone_program(program):
    return Program(
        procedures={n: clone_procedure(p) for n, p in program.procedures.items()},
        entry=program.entry,
        externs=set(program.externs),
    )


# ---------------------------------------------------------------------------
# Validation and size accounting


def validate(program):
    """Check every structural invariant; returns a list of diagnostics."""
    diags = []

    def bad(invariant, location, message):
        diags.append(Diagnostic(invariant, location, message))

    if program.entry not in program.procedures:
        bad("entry procedure", program.entry, "entry names no procedure")

    for proc in program.procedures.values():
        loc = proc.name
        preds = proc.predecessors()
        for blk in proc.blocks.values():
            bloc = f"{proc.name}.{blk.id}"
            if len(blk.successors) > 2:
                bad("successor arity", bloc, f"{len(blk.successors)} successors")
            for succ in blk.successors:
                if succ not in proc.blocks:
                    bad("undefined successor", bloc, f"edge to unknown '{succ}'")
            if blk.weight < 0:
                bad("weight nonnegative", bloc, f"weight {blk.weight}")
            if not blk.origin:
                bad("origin set", bloc, "block has no origin annotation")
            term = blk.terminator()
            for i, instr in enumerate(blk.instructions):
                last = i == len(blk.instructions) - 1
                if instr.opcode in ("branch", "jump", "return") and not last:
                    bad("terminator placement", bloc, f"{instr.opcode} not last")
                if instr.opcode == "call":
                    if len(blk.instructions) != 1:
                        bad("call own block", bloc, "call shares a block")
                    if len(blk.successors) != 1:
                        bad("call successors", bloc, "call block needs 1 successor")
                    target = instr.callee
                    if (
                        target not in program.procedures
                        and target not in program.externs
                    ):
                        bad("undefined callee", bloc, f"call to '{target}'")
            if term is not None and term.opcode == "branch":
                if len(blk.successors) != 2:
                    bad("successor arity", bloc, "branch without 2 successors")
            if len(blk.successors) == 2 and (term is None or term.opcode != "branch"):
                bad("branch placement", bloc, "2 successors without branch")

        no_pred = [
            b.id for b in proc.blocks.values() if not preds[b.id]
        ]
        if proc.entry_block not in proc.blocks:
            bad("entry block", loc, f"unknown entry '{proc.entry_block}'")
        elif no_pred != [proc.entry_block] and set(no_pred) != {proc.entry_block}:
            extra = [b for b in no_pred if b != proc.entry_block]
            if extra:
                bad("multiple entries", loc, f"blocks without predecessors: {extra}")
            else:
                bad("multiple entries", loc, "entry block has predecessors")
        no_succ = [b.id for b in proc.blocks.values() if not b.successors]
        if len(no_succ) != 1:
            bad("single exit", loc, f"exit blocks: {no_succ}")
        elif proc.exit_block != no_succ[0]:
            bad("single exit", loc, f"exit_block is '{proc.exit_block}'")

        reachable = reachable_blocks(proc)
        for bid in proc.blocks:
            if bid not in reachable:
                bad("reachability", f"{proc.name}.{bid}", "unreachable from entry")
    return diags


def reachable_blocks(proc):
    seen = set()
    stack = [proc.entry_block]
    while stack:
        bid = stack.pop()
        if bid in seen or bid not in proc.blocks:
            continue
        seen.add(bid)
        stack.extend(proc.blocks[bid].successors)
    return seen


def code_size(scope, program=None):
    """Instruction count of a Program, Procedure, Block, or Region."""
    if isinstance(scope, Program):
        return sum(code_size(p) for p in scope.procedures.values())
    if isinstance(scope, Procedure):
        return sum(len(b.instructions) for b in scope.blocks.values())
    if isinstance(scope, Block):
        return len(scope.instructions)
    # Region-like: iterable of (proc id, block id), or an object with .blocks
    blocks = getattr(scope, "blocks", scope)
    if program is None:
        raise IRError("code_size of a region needs the owning program")
    return sum(
        len(program.procedures[pname].blocks[bid].instructions)
        for pname, bid in blocks
    )
