"""Demand-driven region formation: regions are grown recursively across
callsites, inlining as they go, with local regions of each callee finalized
before formation returns to the caller.  Also provides region classification
and formation-trace memory accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import ir
from .heuristics import CalleeStats, loop_call_weight, order_procedures, should_inline
from .inliner import (
    Callsite,
    Eligibility,
    GrowthState,
    inline_at_mapped,
    recursive_procedures,
)
from .regions import Region, RegionParams, RegionSet, is_desirable, select_seed, tail_duplicate

EVENT_KINDS = (
    "enter_procedure",
    "leave_procedure",
    "region_completed",
    "inline_performed",
    "inline_refused",
)


@dataclass
class FormationTrace:
    events: list = field(default_factory=list)
    live_size_samples: list = field(default_factory=list)

    def add(self, kind, **info):
        event = {"seq": len(self.events), "kind": kind}
        event.update(info)
        self.events.append(event)
        return event

    def of_kind(self, kind):
        return [e for e in self.events if e["kind"] == kind]

    def to_json(self):
        return json.dumps(
            {
                "events": self.events,
                "live_size_samples": self.live_size_samples,
            },
            indent=2,
        )


@dataclass
class RegionClassification:
    entry_region: str
    exit_region: str
    pass_through: bool
    locals: list


@dataclass
class DemandResult:
    program: ir.Program  # program after demand-driven inlining
    regions: RegionSet
    trace: FormationTrace


def peak_live_size(trace):
    """Replay a trace; maximum total size of procedures open at once."""
    stack = []
    peak = 0
    for event in trace.events:
        kind = event["kind"]
        if kind == "enter_procedure":
            stack.append(event["size"])
            peak = max(peak, sum(stack))
        elif kind == "leave_procedure":
            if not stack:
                raise ir.IRError("unbalanced trace: leave without enter")
            stack.pop()
    if stack:
        raise ir.IRError("unbalanced trace: unclosed enter events")
    return peak


def classify_regions(procedure, regions, callsite=None):
    """Classify a procedure's regions relative to a callsite."""
    covered = {}
    for region in regions:
        for pname, bid in region.blocks:
            if pname == procedure.name:
                covered[bid] = region
    missing = set(procedure.blocks) - set(covered)
    if missing:
        raise ir.IRError(
            f"regions do not cover {procedure.name}: missing {sorted(missing)}"
        )
    entry = covered[procedure.entry_block]
    exit_ = covered[procedure.exit_block]
    locals_ = sorted(
        {r.id for r in covered.values()} - {entry.id, exit_.id}
    )
    return RegionClassification(
        entry_region=entry.id,
        exit_region=exit_.id,
        pass_through=entry.id == exit_.id,
        locals=locals_,
    )


class _Former:
    """One demand-driven formation run over a cloned program."""

    def __init__(self, program, combo, params):
        self.prog = ir.clone_program(program)
        self.combo = combo
        self.params = params
        self.trace = FormationTrace()
        size = ir.code_size(self.prog)
        self.growth = GrowthState(size, size)
        self.recursive = recursive_procedures(program)
        self.lcw = {}
        self.regions = []
        self.rid = 0
        self.open = []  # procedure names on the recursion stack
        self._sizes = []  # their body sizes, for live accounting

    # -- trace bookkeeping ------------------------------------------------

    def _enter(self, label, size, isolated):
        self.trace.add(
            "enter_procedure", proc=label, size=size, isolated=isolated
        )
        self._sizes.append(size)
        self.trace.live_size_samples.append(sum(self._sizes))

    def _leave(self, label, returned_size):
        self.trace.add(
            "leave_procedure", proc=label, returned_size=returned_size
        )
        self._sizes.pop()
        self.trace.live_size_samples.append(sum(self._sizes))

    def _finalize(self, rdict, host, kind):
        region = Region(
            id=f"r{self.rid}",
            blocks=[(host, b) for b in rdict["blocks"]],
            seed=(host, rdict["seed"]),
            kind=kind,
        )
        self.rid += 1
        self.regions.append(region)
        self.trace.add(
            "region_completed",
            region=region.id,
            proc=host,
            size=region.size(self.prog),
            blocks=len(region.blocks),
        )
        return region

    # -- inlining ----------------------------------------------------------

    def _gate(self, host, bid, seed_weight):
        blocks = self.prog.procedures[host].blocks
        call = blocks[bid].call
        callee = call.callee
        if callee in self.prog.externs or callee not in self.prog.procedures:
            return Eligibility.no("external")
        if callee in self.open:
            return Eligibility.no("recursive_blocked")
        cproc = self.prog.procedures[callee]
        if len(call.args) != len(cproc.params):
            return Eligibility.no("param_mismatch")
        if callee not in self.lcw:
            self.lcw[callee] = loop_call_weight(cproc)
        stats = CalleeStats(
            size=ir.code_size(cproc),
            weight=cproc.blocks[cproc.entry_block].weight,
            loop_weight=self.lcw[callee],
            recursive=callee in self.recursive,
        )
        return should_inline(
            Callsite(host, bid, callee, blocks[bid].weight),
            stats,
            self.combo.second,
            growth_state=self.growth,
            seed_weight=seed_weight,
        )

    def _inlinable(self, host, bid, seed_weight):
        gate = self._gate(host, bid, seed_weight)
        if not gate.allowed:
            blk = self.prog.procedures[host].blocks[bid]
            self.trace.add(
                "inline_refused",
                caller=host,
                block=bid,
                callee=blk.call.callee,
                reason=gate.reason,
            )
        return gate.allowed

    def _recurse(self, host, bid):
        """Inline the call block and form regions over the copied body.

        Returns (entry region, exit region, entry position id, exit
        position id): the regions of the copy holding its entry/exit, and
        the concrete blocks now occupying those CFG positions.
        """
        blk = self.prog.procedures[host].blocks[bid]
        callee = blk.call.callee
        site = Callsite(host, bid, callee, blk.weight)
        cproc = self.prog.procedures[callee]
        self.prog, bmap = inline_at_mapped(self.prog, site)
        self.growth.current_size = ir.code_size(self.prog)
        self.trace.add(
            "inline_performed",
            caller=host,
            block=bid,
            callee=callee,
            frequency=site.frequency,
            callee_size=ir.code_size(cproc),
            callee_arity=len(cproc.params),
        )
        self.open.append(callee)
        try:
            entry_r, exit_r, pos_e, pos_x = self._form_scope(
                host,
                set(bmap.values()),
                bmap[cproc.entry_block],
                bmap[cproc.exit_block],
                isolated=False,
                label=callee,
                body_size=ir.code_size(cproc),
            )
        finally:
            self.open.pop()
        return entry_r, exit_r, pos_e, pos_x

    # -- formation ----------------------------------------------------------

    def _form_scope(self, host, block_ids, entry_id, exit_id, isolated,
                    label, body_size):
        self._enter(label, body_size, isolated)
        B = set(block_ids)
        rlist = []
        alias = {}  # inlined call block -> (entry position, exit position)

        def blocks():
            return self.prog.procedures[host].blocks

        def most_frequent(candidates):
            best = None
            for bid in candidates:
                if best is None or blocks()[bid].weight > blocks()[best].weight:
                    best = bid
            return best

        def desirable(x, y, rdict):
            return is_desirable(
                blocks()[x],
                blocks()[y],
                blocks()[rdict["seed"]],
                len(rdict["blocks"]),
                self.params,
                phased=False,
            )

        def splice_forward(rdict, y):
            """Recurse through call block y while walking successors."""
            B.discard(y)
            entry_r, exit_r, pos_e, pos_x = self._recurse(host, y)
            alias[y] = (pos_e, pos_x)
            if entry_r is not exit_r:
                rdict["blocks"].extend(entry_r["blocks"])
                rlist.append(rdict)
                rdict = exit_r
            else:
                rdict["blocks"].extend(entry_r["blocks"])
            return rdict, pos_x

        def splice_backward(rdict, y):
            """Recurse through call block y while walking predecessors."""
            B.discard(y)
            entry_r, exit_r, pos_e, pos_x = self._recurse(host, y)
            alias[y] = (pos_e, pos_x)
            if entry_r is not exit_r:
                rdict["blocks"].extend(exit_r["blocks"])
                rlist.append(rdict)
                rdict = entry_r
            else:
                rdict["blocks"].extend(exit_r["blocks"])
            return rdict, pos_e

        while B:
            weights = {b: blocks()[b].weight for b in B}
            s = select_seed(B, weights)
            B.discard(s)
            if blocks()[s].is_call and self._inlinable(host, s, None):
                entry_r, exit_r, pos_e, pos_x = self._recurse(host, s)
                alias[s] = (pos_e, pos_x)
                if entry_r is not exit_r:
                    rlist.append(entry_r)
                    R = exit_r
                else:
                    R = entry_r
                R["seed"] = pos_x
                x = pos_x
            else:
                R = {"blocks": [s], "seed": s}
                x = s

            # successor path
            while True:
                y = most_frequent([t for t in blocks()[x].successors if t in B])
                if y is None or not desirable(x, y, R):
                    break
                if blocks()[y].is_call:
                    if self._inlinable(host, y, blocks()[R["seed"]].weight):
                        R, x = splice_forward(R, y)
                        continue
                    break
                R["blocks"].append(y)
                B.discard(y)
                x = y

            # predecessor path
            x = R["seed"]
            while True:
                preds = self.prog.procedures[host].predecessors()
                y = most_frequent(
                    sorted(
                        (p for p in preds[x] if p in B), key=ir.natural_key
                    )
                )
                if y is None or not desirable(x, y, R):
                    break
                if blocks()[y].is_call:
                    if self._inlinable(host, y, blocks()[R["seed"]].weight):
                        R, x = splice_backward(R, y)
                        continue
                    break
                R["blocks"].append(y)
                B.discard(y)
                x = y

            # expansion from all current region blocks
            stack = list(R["blocks"])
            while stack:
                x = stack.pop()
                for y in list(blocks()[x].successors):
                    if y not in B or not desirable(x, y, R):
                        continue
                    if blocks()[y].is_call:
                        if self._inlinable(host, y, blocks()[R["seed"]].weight):
                            R, _ = splice_forward(R, y)
                        continue
                    R["blocks"].append(y)
                    B.discard(y)
                    stack.append(y)

            if self.params.tail_duplicate:
                # Each cloned tail becomes a region of its own: it is
                # single-entry by construction.  Feeding the clones back into
                # the worklist would re-partition them into regions that can
                # be side-entered again, duplicating without bound.
                proc, _, groups = tail_duplicate(
                    self.prog.procedures[host],
                    R["blocks"],
                    return_groups=True,
                )
                self.prog.procedures[host] = proc
                for group in groups:
                    weights = {b: proc.blocks[b].weight for b in group}
                    rlist.append(
                        {
                            "blocks": list(group),
                            "seed": select_seed(set(group), weights),
                        }
                    )
            rlist.append(R)

        def resolve(bid, side):
            while bid in alias:
                bid = alias[bid][side]
            return bid

        pos_e = resolve(entry_id, 0)
        pos_x = resolve(exit_id, 1)
        entry_r = next(r for r in rlist if pos_e in r["blocks"])
        exit_r = next(r for r in rlist if pos_x in r["blocks"])

        returned = 0
        for rdict in rlist:
            is_entry = rdict is entry_r
            is_exit = rdict is exit_r
            if isolated:
                if is_entry and is_exit:
                    kind = "pass_through"
                elif is_entry:
                    kind = "entry"
                elif is_exit:
                    kind = "exit"
                else:
                    kind = "local"
                self._finalize(rdict, host, kind)
            elif not (is_entry or is_exit):
                self._finalize(rdict, host, "local")
            else:
                returned += ir.code_size(
                    [(host, b) for b in rdict["blocks"]], self.prog
                )
        self._leave(label, returned)
        return entry_r, exit_r, pos_e, pos_x

    def run(self):
        main = self.prog.entry
        mproc = self.prog.procedures[main]
        self.open.append(main)
        try:
            self._form_scope(
                main,
                set(mproc.blocks),
                mproc.entry_block,
                mproc.exit_block,
                isolated=True,
                label=main,
                body_size=ir.code_size(mproc),
            )
        finally:
            self.open.pop()
        # isolated pass: original bodies remain in the program whether or
        # not every callsite was inlined, so each still needs partitioning
        for name in order_procedures(self.prog, self.combo.first):
            if name == main:
                continue
            proc = self.prog.procedures[name]
            self.open.append(name)
            try:
                self._form_scope(
                    name,
                    set(proc.blocks),
                    proc.entry_block,
                    proc.exit_block,
                    isolated=True,
                    label=name,
                    body_size=ir.code_size(proc),
                )
            finally:
                self.open.pop()


def form_regions_demand(program, combo, params=None):
    """Run the demand-driven partitioner; returns a DemandResult."""
    params = params or RegionParams()
    former = _Former(program, combo, params)
    former.run()
    return DemandResult(
        program=former.prog,
        regions=RegionSet(former.regions, owner=former.prog),
        trace=former.trace,
    )
