"""Profile-sensitive region formation for the phased strategy, plus tail
duplication, encapsulation, and reintegration shared with the demand-driven
partitioner."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import ir
from .optimizer import block_uses_defs, liveness

REGION_KINDS = ("local", "entry", "exit", "pass_through", "unclassified")

PROLOGUE_ID = "__pro"
EPILOGUE_ID = "__epi"


@dataclass
class RegionParams:
    desirability_ratio: float = 0.5
    max_region_blocks: int = 200
    tail_duplicate: bool = False

    def __post_init__(self):
        if not (0 < self.desirability_ratio <= 1):
            raise ValueError("desirability_ratio must be in (0, 1]")
        if self.max_region_blocks < 1:
            raise ValueError("max_region_blocks must be >= 1")


@dataclass
class Region:
    id: str
    blocks: list  # ordered list of (procedure name, block id)
    seed: tuple  # (procedure name, block id)
    kind: str = "unclassified"

    def block_ids(self):
        return [bid for _, bid in self.blocks]

    def size(self, program):
        return ir.code_size(self.blocks, program)

    def home_procedure(self):
        procs = {p for p, _ in self.blocks}
        if len(procs) != 1:
            raise ir.IRError(f"region {self.id} spans procedures {procs}")
        return next(iter(procs))


@dataclass
class RegionSet:
    regions: list
    owner: object = None  # the Program the regions partition

    def __iter__(self):
        return iter(self.regions)

    def __len__(self):
        return len(self.regions)

    def region_of(self):
        """Map from (proc, block) to its region; errors on overlap."""
        where = {}
        for region in self.regions:
            for key in region.blocks:
                if key in where:
                    raise ir.IRError(f"block {key} in two regions")
                where[key] = region
        return where

    def is_partition(self, program=None):
        program = program or self.owner
        try:
            where = self.region_of()
        except ir.IRError:
            return False
        want = {
            (pname, bid)
            for pname, proc in program.procedures.items()
            for bid in proc.blocks
        }
        return set(where) == want

    def to_json(self, program=None):
        program = program or self.owner
        return json.dumps(
            [
                {
                    "id": r.id,
                    "kind": r.kind,
                    "seed": f"{r.seed[0]}.{r.seed[1]}",
                    "blocks": [f"{p}.{b}" for p, b in r.blocks],
                    "size": r.size(program) if program else None,
                }
                for r in self.regions
            ],
            indent=2,
        )


def select_seed(worklist, weights):
    """Max-weight block id from the worklist; ties to the lowest id."""
    if not worklist:
        raise ir.IRError("empty worklist")
    return min(worklist, key=lambda bid: (-weights[bid], ir.natural_key(bid)))


def is_desirable(x, y, seed, region_len, params, phased=True):
    """Whether block y may join the region while growing from block x."""
    if region_len >= params.max_region_blocks:
        return False
    if y.weight < params.desirability_ratio * x.weight:
        return False
    if y.weight < params.desirability_ratio * seed.weight:
        return False
    if phased and y.is_call:
        return False
    return True


def _most_frequent(candidates, blocks):
    """Highest-weight block id; ties keep the earliest candidate."""
    best = None
    for bid in candidates:
        if best is None or blocks[bid].weight > blocks[best].weight:
            best = bid
    return best


def grow_region(procedure, seed_id, worklist, params, phased=True):
    """Grow one region from a seed: successor path, predecessor path, then
    expansion from every block already selected.  Mutates worklist."""
    blocks = procedure.blocks
    preds = procedure.predecessors()
    seed = blocks[seed_id]
    region = [seed_id]
    worklist.discard(seed_id)

    def desirable(x_id, y_id):
        return is_desirable(
            blocks[x_id], blocks[y_id], seed, len(region), params, phased
        )

    x = seed_id
    while True:
        y = _most_frequent(
            [s for s in blocks[x].successors if s in worklist], blocks
        )
        if y is None or not desirable(x, y):
            break
        region.append(y)
        worklist.discard(y)
        x = y

    x = seed_id
    while True:
        y = _most_frequent(
            sorted(
                (p for p in preds[x] if p in worklist), key=ir.natural_key
            ),
            blocks,
        )
        if y is None or not desirable(x, y):
            break
        region.append(y)
        worklist.discard(y)
        x = y

    stack = list(region)
    while stack:
        x = stack.pop()
        for y in blocks[x].successors:
            if y in worklist and desirable(x, y):
                region.append(y)
                worklist.discard(y)
                stack.append(y)
    return region


def form_regions_phased(procedure, params=None, id_start=0, program=None):
    """Partition one procedure into regions (seed, grow, repeat)."""
    params = params or RegionParams()
    weights = {bid: blk.weight for bid, blk in procedure.blocks.items()}
    worklist = set(procedure.blocks)
    regions = []
    n = id_start
    while worklist:
        seed = select_seed(worklist, weights)
        block_ids = grow_region(procedure, seed, worklist, params)
        regions.append(
            Region(
                id=f"r{n}",
                blocks=[(procedure.name, b) for b in block_ids],
                seed=(procedure.name, seed),
            )
        )
        n += 1
    return RegionSet(regions, owner=program)


# ---------------------------------------------------------------------------
# Tail duplication


def region_entry_block(procedure, block_ids):
    """The block through which the region is canonically entered."""
    rset = set(block_ids)
    if procedure.entry_block in rset:
        return procedure.entry_block
    preds = procedure.predecessors()
    entered = [
        b for b in block_ids if any(p not in rset for p in preds[b])
    ]
    if not entered:
        return min(block_ids, key=ir.natural_key)
    return min(
        entered,
        key=lambda b: (-procedure.blocks[b].weight, ir.natural_key(b)),
    )


def side_entry_blocks(procedure, block_ids):
    """Region blocks other than the entry with a predecessor outside."""
    rset = set(block_ids)
    entry = region_entry_block(procedure, block_ids)
    preds = procedure.predecessors()
    return sorted(
        (
            b
            for b in rset
            if b != entry and any(p not in rset for p in preds[b])
        ),
        key=ir.natural_key,
    )


def _region_tail(procedure, rset, start):
    """Blocks reachable from start along region-internal edges."""
    tail = set()
    stack = [start]
    while stack:
        b = stack.pop()
        if b in tail:
            continue
        tail.add(b)
        stack.extend(s for s in procedure.blocks[b].successors if s in rset)
    return tail


def _fresh_block_id(base, used):
    n = 1
    while f"{base}_d{n}" in used:
        n += 1
    return f"{base}_d{n}"


def _retarget(block, old, new):
    block.successors = [new if s == old else s for s in block.successors]
    for instr in block.instructions:
        if instr.opcode == "branch":
            instr.args = (
                instr.args[0],
                new if instr.args[1] == old else instr.args[1],
                new if instr.args[2] == old else instr.args[2],
            )
        elif instr.opcode == "jump" and instr.args[0] == old:
            instr.args = (new,)


def tail_duplicate(procedure, region, return_groups=False):
    """Remove side entries from a region by cloning the entered tails.

    Returns (new procedure, list of newly created block ids).  Block ids in
    `region` may be plain ids or (proc, id) pairs.  With `return_groups`,
    additionally returns the new ids grouped per cloned tail; every group is
    single-entry by construction (outside edges are retargeted only to the
    head of its tail).
    """
    block_ids = [b if isinstance(b, str) else b[1] for b in region]
    rset = set(block_ids)
    side = side_entry_blocks(procedure, block_ids)
    if not side:
        if return_groups:
            return procedure, [], []
        return procedure, []

    proc = ir.clone_procedure(procedure)
    new_ids = []
    groups = []

    # Splitting a shared return block keeps the procedure single-exit when
    # the duplicated tail reaches it.
    tails_union = set()
    for b in side:
        tails_union |= _region_tail(proc, rset, b)
    if proc.exit_block in tails_union:
        old_exit = proc.blocks[proc.exit_block]
        ret_id = _fresh_block_id(f"{proc.exit_block}_ret", proc.blocks)
        ret = old_exit.instructions.pop()
        proc.blocks[ret_id] = ir.Block(
            id=ret_id,
            instructions=[ret],
            successors=[],
            weight=old_exit.weight,
            origin=old_exit.origin,
        )
        old_exit.instructions.append(ir.Instruction("jump", args=(ret_id,)))
        old_exit.successors = [ret_id]
        proc.exit_block = ret_id
        new_ids.append(ret_id)
        groups.append([ret_id])

    for b in side:
        preds = proc.predecessors()
        external = [p for p in preds[b] if p not in rset]
        if not external:
            continue
        tail = _region_tail(proc, rset, b)
        total_in = sum(proc.blocks[p].weight for p in preds[b])
        ext_in = sum(proc.blocks[p].weight for p in external)
        frac = ext_in / total_in if total_in else 0.0

        mapping = {}
        for t in sorted(tail, key=ir.natural_key):
            mapping[t] = _fresh_block_id(t, proc.blocks)
        clones = {}
        for t, cid in mapping.items():
            clone = ir.clone_block(proc.blocks[t])
            clone.id = cid
            moved = min(clone.weight, round(clone.weight * frac))
            proc.blocks[t].weight -= moved
            clone.weight = moved
            for old, new in mapping.items():
                _retarget(clone, old, new)
            clones[cid] = clone
        proc.blocks.update(clones)
        group = [mapping[t] for t in sorted(tail, key=ir.natural_key)]
        new_ids.extend(group)
        groups.append(group)
        for p in external:
            _retarget(proc.blocks[p], b, mapping[b])
    if return_groups:
        return proc, new_ids, groups
    return proc, new_ids


def remove_side_entries(procedure, regions, params=None, id_start=0,
                        max_rounds=10_000):
    """Duplicate tails until no region of the procedure has a side entry.

    Newly created blocks are partitioned into fresh regions.  Returns
    (procedure, region list).
    """
    params = params or RegionParams()
    regions = list(regions)
    n = id_start
    for _ in range(max_rounds):
        dirty = None
        for region in regions:
            ids = region.block_ids()
            if side_entry_blocks(procedure, ids):
                dirty = region
                break
        if dirty is None:
            return procedure, regions
        # Every cloned tail becomes its own region: it is single-entry by
        # construction, so duplication never manufactures new side entries.
        # Re-partitioning the clones could, and then each round would spawn
        # fresh side-entered regions and the program would snowball.
        procedure, _, groups = tail_duplicate(
            procedure, dirty.block_ids(), return_groups=True
        )
        weights = {b: procedure.blocks[b].weight for b in procedure.blocks}
        for group in groups:
            seed = select_seed(set(group), weights)
            regions.append(
                Region(
                    id=f"r{n}d",
                    blocks=[(procedure.name, b) for b in group],
                    seed=(procedure.name, seed),
                )
            )
            n += 1
    raise ir.IRError("tail duplication did not converge")


# ---------------------------------------------------------------------------
# Encapsulation / reintegration


@dataclass
class EncapsulatedRegion:
    region: Region
    unit: ir.Procedure
    source_proc: str
    live_in: list
    live_out: list
    # per region block: original successors and, when the block ended the
    # procedure, its original return instruction
    exit_edges: dict = field(default_factory=dict)
    returns: dict = field(default_factory=dict)


def encapsulate(region, procedure):
    """Wrap a single-entry region as a standalone single-entry/exit unit."""
    block_ids = region.block_ids()
    rset = set(block_ids)
    if side_entry_blocks(procedure, block_ids):
        raise ir.IRError(f"region {region.id} has side entries")
    entry = region_entry_block(procedure, block_ids)

    live_in_all, _ = liveness(procedure.blocks)
    live_out = set()
    for b in block_ids:
        for s in procedure.blocks[b].successors:
            if s not in rset:
                live_out |= live_in_all[s]

    unit_blocks = {}
    exit_edges = {}
    returns = {}
    unit_blocks[PROLOGUE_ID] = ir.Block(
        id=PROLOGUE_ID,
        instructions=[ir.Instruction("jump", args=(entry,))],
        successors=[entry],
        origin=procedure.name,
    )
    for b in block_ids:
        blk = ir.clone_block(procedure.blocks[b])
        exit_edges[b] = list(blk.successors)
        term = blk.terminator()
        if term is not None and term.opcode == "return":
            returns[b] = term
            blk.instructions[-1] = ir.Instruction(
                "jump", args=(EPILOGUE_ID,)
            )
            blk.successors = [EPILOGUE_ID]
        else:
            blk.successors = [
                s if s in rset else EPILOGUE_ID for s in blk.successors
            ]
            if term is not None and term.opcode == "branch":
                term.args = (
                    term.args[0],
                    term.args[1] if term.args[1] in rset else EPILOGUE_ID,
                    term.args[2] if term.args[2] in rset else EPILOGUE_ID,
                )
            elif term is not None and term.opcode == "jump":
                if term.args[0] not in rset:
                    term.args = (EPILOGUE_ID,)
        unit_blocks[b] = blk
    unit_blocks[EPILOGUE_ID] = ir.Block(
        id=EPILOGUE_ID,
        instructions=[ir.Instruction("return", args=(0,))],
        successors=[],
        origin=procedure.name,
    )
    unit = ir.Procedure(
        name=f"__unit_{region.id}",
        params=[],
        blocks=unit_blocks,
        entry_block=PROLOGUE_ID,
        exit_block=EPILOGUE_ID,
    )

    # Live-in: registers that may be read before being written in the unit.
    use, defs = {}, {}
    for bid, blk in unit_blocks.items():
        use[bid], defs[bid] = block_uses_defs(blk)
    live = {bid: set() for bid in unit_blocks}
    changed = True
    while changed:
        changed = False
        for bid, blk in unit_blocks.items():
            out = set(live_out) if EPILOGUE_ID in blk.successors else set()
            for s in blk.successors:
                if s != EPILOGUE_ID:
                    out |= live[s]
            for b2, ret in returns.items():
                if bid == b2:
                    out |= {a for a in ret.args if isinstance(a, str)}
            new = use[bid] | (out - defs[bid])
            if new != live[bid]:
                live[bid] = new
                changed = True
    return EncapsulatedRegion(
        region=region,
        unit=unit,
        source_proc=procedure.name,
        live_in=sorted(live[entry]),
        live_out=sorted(live_out),
        exit_edges=exit_edges,
        returns=returns,
    )


def reintegrate(unit, procedure):
    """Stitch an encapsulated (possibly optimized) region back in place."""
    if unit.source_proc != procedure.name:
        raise ir.IRError(
            f"unit from '{unit.source_proc}' cannot reintegrate into "
            f"'{procedure.name}'"
        )
    proc = ir.clone_procedure(procedure)
    for b, succs in unit.exit_edges.items():
        if b not in proc.blocks or b not in unit.unit.blocks:
            raise ir.IRError(f"unit/procedure mismatch at block '{b}'")
        blk = ir.clone_block(unit.unit.blocks[b])
        blk.successors = list(succs)
        if b in unit.returns:
            blk.instructions[-1] = ir.clone_instruction(unit.returns[b])
        else:
            term = blk.terminator()
            if term is not None and term.opcode == "branch":
                orig = procedure.blocks[b].terminator()
                term.args = (term.args[0], orig.args[1], orig.args[2])
            elif term is not None and term.opcode == "jump":
                if term.args[0] == EPILOGUE_ID:
                    term.args = (succs[0],)
        proc.blocks[b] = blk
    return proc
