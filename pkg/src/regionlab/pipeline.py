"""End-to-end driver: profile, transform under a heuristic combination,
partition into regions, optimize, and measure."""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

from . import ir, metrics
from .demand import form_regions_demand
from .heuristics import combo_config, order_procedures
from .inliner import aggressive_inline
from .optimizer import optimize_unit
from .profiler import (
    CALL_OVERHEAD,
    DEFAULT_FUEL,
    annotate_profile,
    interpret,
)
from .regions import (
    Region,
    RegionParams,
    RegionSet,
    encapsulate,
    form_regions_phased,
    reintegrate,
    remove_side_entries,
    select_seed,
    side_entry_blocks,
)

optimize_region = optimize_unit  # region-scoped optimization entry point


@dataclass
class CompilationResult:
    program_in: ir.Program
    program_out: ir.Program
    regions: RegionSet
    report: metrics.MetricsReport
    combo: object
    trace: object = None
    inline_log: list = field(default_factory=list)
    source_key: str = ""
    elapsed: float = 0.0


def _source_key(program, inputs):
    text = ir.unparse_program(program) + repr(tuple(inputs or ()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _whole_procedure_regions(program):
    regions = []
    for i, (name, proc) in enumerate(program.procedures.items()):
        weights = {bid: blk.weight for bid, blk in proc.blocks.items()}
        seed = select_seed(set(proc.blocks), weights)
        regions.append(
            Region(
                id=f"r{i}",
                blocks=[(name, bid) for bid in proc.blocks],
                seed=(name, seed),
                kind="pass_through",
            )
        )
    return RegionSet(regions, owner=program)


def _optimize_regions(program_out, regions):
    for region in regions:
        pname = region.home_procedure()
        proc = program_out.procedures[pname]
        # regions left with side entries (tail duplication off) are skipped
        if side_entry_blocks(proc, region.block_ids()):
            continue
        enc = encapsulate(region, proc)
        enc = optimize_unit(enc)
        program_out.procedures[pname] = reintegrate(enc, proc)


def compile(
    program,
    inputs=None,
    combo="H0",
    params=None,
    call_overhead=CALL_OVERHEAD,
    fuel=DEFAULT_FUEL,
    optimize=True,
):
    """Run the full pipeline for one heuristic combination."""
    if isinstance(combo, str):
        combo = combo_config(combo)
    params = params or RegionParams()
    start = time.perf_counter()
    diags = ir.validate(program)
    if diags:
        raise ir.IRError(
            "invalid program: " + "; ".join(str(d) for d in diags)
        )
    if inputs is not None:
        profile = interpret(program, inputs, fuel)
        annotated = annotate_profile(program, profile)
    else:
        annotated = ir.clone_program(program)

    trace = None
    inline_log = []
    if combo.strategy == "procedure_based":
        program_out = ir.clone_program(annotated)
        regions = _whole_procedure_regions(program_out)
        memory_avg = memory_worst = max(
            ir.code_size(p) for p in program_out.procedures.values()
        )
    elif combo.strategy == "phased":
        program_out = aggressive_inline(
            annotated,
            growth_limit=combo.second.growth_limit,
            policy=combo.second,
            log=inline_log,
        )
        memory_avg = memory_worst = metrics.memory_requirement_phased(
            program_out
        )
        region_list = []
        for name in order_procedures(program_out, combo.first):
            formed = form_regions_phased(
                program_out.procedures[name],
                params,
                id_start=len(region_list),
            ).regions
            if params.tail_duplicate:
                proc, formed = remove_side_entries(
                    program_out.procedures[name],
                    formed,
                    params,
                    id_start=len(region_list),
                )
                program_out.procedures[name] = proc
            region_list.extend(formed)
        regions = RegionSet(region_list, owner=program_out)
    else:  # demand
        result = form_regions_demand(annotated, combo, params)
        program_out = result.program
        regions = result.regions
        trace = result.trace
        inline_log = trace.of_kind("inline_performed")
        memory_avg, memory_worst = metrics.memory_requirement_demand(program)
        if params.tail_duplicate:
            by_proc = {}
            for region in regions:
                by_proc.setdefault(region.home_procedure(), []).append(region)
            all_regions = []
            next_id = len(regions)
            for pname, regs in by_proc.items():
                proc, regs = remove_side_entries(
                    program_out.procedures[pname], regs, params,
                    id_start=next_id,
                )
                next_id += len(regs)
                program_out.procedures[pname] = proc
                all_regions.extend(regs)
            regions = RegionSet(all_regions, owner=program_out)

    if optimize:
        _optimize_regions(program_out, regions)

    dynamic_cost = 0
    if inputs is not None:
        dynamic_cost = interpret(program_out, inputs, fuel).dynamic_cost(
            call_overhead
        )
    report = metrics.build_report(
        combo.name,
        program,
        program_out,
        regions,
        dynamic_cost=dynamic_cost,
        memory_avg=memory_avg,
        memory_worst=memory_worst,
    )
    return CompilationResult(
        program_in=program,
        program_out=program_out,
        regions=regions,
        report=report,
        combo=combo,
        trace=trace,
        inline_log=inline_log,
        source_key=_source_key(program, inputs),
        elapsed=time.perf_counter() - start,
    )


def compare(results):
    """Tabulate reports from one source program, with pairwise deltas."""
    if not results:
        raise ir.IRError("nothing to compare")
    if len({r.source_key for r in results}) != 1:
        raise ir.IRError("compare needs results from the same source/input")
    numeric = (
        "memory_avg",
        "memory_worst",
        "code_growth_pct",
        "unit_count",
        "unit_avg_size",
        "profile_variance",
        "pct_invariant_units",
        "pct_interprocedural_ops",
        "dynamic_cost",
    )
    strategies = [r.report.strategy for r in results]
    table = {
        "strategies": strategies,
        "metrics": {
            col: [getattr(r.report, col) for r in results] for col in numeric
        },
        "deltas": {},
    }
    for a, b in zip(results, results[1:]):
        key = f"{b.report.strategy}-{a.report.strategy}"
        table["deltas"][key] = {
            col: getattr(b.report, col) - getattr(a.report, col)
            for col in numeric
        }
    return table
