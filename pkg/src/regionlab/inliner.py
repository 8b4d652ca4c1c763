"""Single-callsite inlining with profile rescaling, plus the up-front
aggressive inliner used by the phased strategy."""

from __future__ import annotations

from dataclasses import dataclass

from . import ir


@dataclass(frozen=True)
class Callsite:
    caller: str
    block: str
    callee: str
    frequency: int


@dataclass(frozen=True)
class Eligibility:
    allowed: bool
    reason: str  # ok | param_mismatch | recursive_blocked | growth_limit |
    #              external | policy_rejected(size|frequency|loopweight)

    @staticmethod
    def ok():
        return Eligibility(True, "ok")

    @staticmethod
    def no(reason):
        return Eligibility(False, reason)


@dataclass
class GrowthState:
    original_size: int
    current_size: int

    def within_limit(self, growth_limit):
        return self.current_size < self.original_size * (1.0 + growth_limit)


def find_callsites(program):
    sites = []
    for pname, proc in program.procedures.items():
        for blk in proc.blocks.values():
            if blk.is_call:
                sites.append(
                    Callsite(pname, blk.id, blk.call.callee, blk.weight)
                )
    return sites


def call_graph(program):
    """Static call graph: proc name -> set of internal callees."""
    graph = {name: set() for name in program.procedures}
    for pname, proc in program.procedures.items():
        for blk in proc.blocks.values():
            if blk.is_call and blk.call.callee in program.procedures:
                graph[pname].add(blk.call.callee)
    return graph


def recursive_procedures(program):
    """Procedures on a call-graph cycle (direct or indirect recursion)."""
    graph = call_graph(program)
    index = {}
    lowlink = {}
    on_stack = set()
    stack = []
    result = set()
    counter = [0]

    def strongconnect(v):
        # iterative Tarjan, avoids recursion limits on deep graphs
        work = [(v, iter(sorted(graph[v])))]
        index[v] = lowlink[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(graph[w]))))
                    advanced = True
                    break
                elif w in on_stack:
                    lowlink[node] = min(lowlink[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                scc = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.append(w)
                    if w == node:
                        break
                if len(scc) > 1 or node in graph[node]:
                    result.update(scc)

    for v in graph:
        if v not in index:
            strongconnect(v)
    return result


def inline_eligibility(
    program,
    site,
    policy=None,
    growth_state=None,
    seed_weight=None,
    recursive=None,
    loop_weights=None,
):
    """Gate a single callsite.

    policy is a heuristics.SecondOrderPolicy (or None for structural checks
    only).  seed_weight is the weight of the current region's seed during
    demand formation; None means the frequency gate passes (seed recursion
    and the phased aggressive inliner have no enclosing region).
    """
    if site.callee in program.externs or site.callee not in program.procedures:
        return Eligibility.no("external")
    callee = program.procedures[site.callee]
    caller = program.procedures[site.caller]
    call = caller.blocks[site.block].call
    if call is None or call.callee != site.callee:
        return Eligibility.no("external")
    if len(call.args) != len(callee.params):
        return Eligibility.no("param_mismatch")
    if policy is None:
        return Eligibility.ok()
    if growth_state is not None and not growth_state.within_limit(
        policy.growth_limit
    ):
        return Eligibility.no("growth_limit")
    if policy.block_recursion:
        if recursive is None:
            recursive = recursive_procedures(program)
        if site.callee in recursive:
            return Eligibility.no("recursive_blocked")
    if policy.max_callee_size is not None:
        if ir.code_size(callee) > policy.max_callee_size:
            return Eligibility.no("policy_rejected(size)")
    if policy.frequency_ratio is not None and seed_weight is not None:
        if site.frequency < policy.frequency_ratio * seed_weight:
            return Eligibility.no("policy_rejected(frequency)")
    if policy.min_loop_call_weight is not None:
        if loop_weights is not None:
            lcw = loop_weights.get(site.callee, 0)
        else:
            from .heuristics import loop_call_weight

            lcw = loop_call_weight(callee, profiler_loops(callee))
        if lcw < policy.min_loop_call_weight:
            return Eligibility.no("policy_rejected(loopweight)")
    return Eligibility.ok()


def profiler_loops(proc):
    from .profiler import loop_depths

    return loop_depths(proc)


def _scale(weight, freq, entry_count):
    return int(weight * freq / max(1, entry_count) + 0.5)


def inline_at(program, site):
    """Replace a call block with a fresh copy of the callee's CFG.

    Copied blocks keep the origin they had in the callee; weights are scaled
    by site frequency over callee entry count.  Returns a new Program.
    """
    out, _ = inline_at_mapped(program, site)
    return out


def inline_at_mapped(program, site):
    """inline_at plus the callee-block-id-to-copied-id mapping."""
    if site.callee in program.externs or site.callee not in program.procedures:
        raise ir.IRError(f"cannot inline external callee '{site.callee}'")
    callee = program.procedures[site.callee]
    if site.caller not in program.procedures:
        raise ir.IRError(f"unknown caller '{site.caller}'")
    out = ir.clone_program(program)
    caller = out.procedures[site.caller]
    call_block = caller.blocks.get(site.block)
    if call_block is None or not call_block.is_call:
        raise ir.IRError(f"{site.caller}.{site.block} is not a call block")
    call = call_block.call
    if call.callee != site.callee:
        raise ir.IRError("callsite/callee mismatch")
    if len(call.args) != len(callee.params):
        raise ir.IRError(
            f"arity mismatch inlining {site.callee} at {site.caller}.{site.block}"
        )
    continuation = call_block.successors[0]

    # Fresh block ids: reuse the callee's id when free in the caller.
    used = set(caller.blocks)
    used.discard(site.block)
    block_map = {}
    for bid in callee.blocks:
        new_id = bid
        n = 1
        while new_id in used:
            new_id = f"{bid}_i{n}"
            n += 1
        used.add(new_id)
        block_map[bid] = new_id

    # Registers renamed apart from everything in the caller.
    taken = {
        instr.dest
        for blk in caller.blocks.values()
        for instr in blk.instructions
        if instr.dest
    }
    taken.update(caller.params)
    reg_map = {}

    def fresh_reg(name):
        if name in reg_map:
            return reg_map[name]
        new = name
        n = 1
        while new in taken:
            new = f"{name}_i{n}"
            n += 1
        taken.add(new)
        reg_map[name] = new
        return new

    entry_count = callee.blocks[callee.entry_block].weight
    copies = {}
    for bid, blk in callee.blocks.items():
        copy = ir.Block(
            id=block_map[bid],
            weight=_scale(blk.weight, site.frequency, entry_count),
            origin=blk.origin,
        )
        for instr in blk.instructions:
            new = ir.clone_instruction(instr)
            if new.dest is not None:
                new.dest = fresh_reg(new.dest)
            new.args = tuple(
                fresh_reg(a) if isinstance(a, str) else a for a in new.args
            )
            if new.opcode == "branch":
                new.args = (new.args[0], block_map[blk.successors[0]],
                            block_map[blk.successors[1]])
            elif new.opcode == "jump":
                new.args = (block_map[blk.successors[0]],)
            copy.instructions.append(new)
        copy.successors = [block_map[s] for s in blk.successors]
        copies[copy.id] = copy

    # Bind parameters with moves prepended to the copied entry block.  Even
    # a parameter the callee never reads needs a fresh name: binding it under
    # its original name would clobber a same-named caller register.
    entry_copy = copies[block_map[callee.entry_block]]
    binds = [
        ir.Instruction("move", dest=fresh_reg(p), args=(arg,))
        for p, arg in zip(callee.params, call.args)
    ]
    entry_copy.instructions[:0] = binds

    # Rewire the copied return to bind the call destination and continue.
    exit_copy = copies[block_map[callee.exit_block]]
    ret = exit_copy.instructions[-1]
    assert ret.opcode == "return", "callee exit must end in return"
    exit_copy.instructions[-1] = ir.Instruction(
        "move", dest=call.dest, args=(ret.args[0],)
    )
    exit_copy.successors = [continuation]

    # Splice: drop the call block, retarget its predecessors, insert copies
    # at its position in the layout.
    entry_copy_id = block_map[callee.entry_block]
    new_blocks = {}
    for bid, blk in caller.blocks.items():
        if bid == site.block:
            for cid, copy in copies.items():
                new_blocks[cid] = copy
            continue
        blk.successors = [
            entry_copy_id if s == site.block else s for s in blk.successors
        ]
        for instr in blk.instructions:
            if instr.opcode == "branch":
                instr.args = tuple(
                    entry_copy_id if a == site.block else a for a in instr.args
                )
            elif instr.opcode == "jump" and instr.args[0] == site.block:
                instr.args = (entry_copy_id,)
        new_blocks[bid] = blk
    caller.blocks = new_blocks
    if caller.entry_block == site.block:
        caller.entry_block = entry_copy_id
    # exit block cannot be a call block (calls have a successor)
    return out, block_map


@dataclass
class InlineRecord:
    site: Callsite
    callee_size: int
    callee_arity: int


def aggressive_inline(program, growth_limit=0.20, policy=None, log=None,
                      max_inlines=10_000):
    """Repeatedly inline the most frequent eligible callsite.

    Ties break toward the smaller callee, then lexicographic site order.
    Stops when no callsite passes the gates under the growth limit.
    """
    from .heuristics import SecondOrderPolicy

    if policy is None:
        policy = SecondOrderPolicy(growth_limit=growth_limit)
    original = ir.code_size(program)
    state = GrowthState(original_size=original, current_size=original)
    recursive = recursive_procedures(program)
    current = program
    for _ in range(max_inlines):
        best = None
        for site in find_callsites(current):
            elig = inline_eligibility(
                current,
                site,
                policy=policy,
                growth_state=state,
                seed_weight=None,
                recursive=recursive,
            )
            if not elig.allowed:
                continue
            callee_size = ir.code_size(current.procedures[site.callee])
            key = (
                -site.frequency,
                callee_size,
                site.callee,
                site.caller,
                ir.natural_key(site.block),
            )
            if best is None or key < best[0]:
                best = (key, site, callee_size)
        if best is None:
            break
        _, site, callee_size = best
        if log is not None:
            log.append(
                InlineRecord(
                    site,
                    callee_size,
                    len(current.procedures[site.callee].params),
                )
            )
        current = inline_at(current, site)
        state.current_size = ir.code_size(current)
    return current
