"""Measurements over compilation runs: memory estimates, code growth,
unit statistics, profile homogeneity, and interprocedural scope."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

from . import ir

INVARIANCE_THRESHOLD = 0.01


@dataclass
class MetricsReport:
    strategy: str
    memory_avg: float
    memory_worst: int
    code_growth_pct: float
    unit_count: int
    unit_avg_size: float
    profile_variance: float
    pct_invariant_units: float
    pct_interprocedural_ops: float
    dynamic_cost: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def memory_requirement_phased(program):
    """Whole-program size: the phased strategy holds it all at once."""
    return ir.code_size(program)


def _call_edges(program):
    edges = {name: [] for name in program.procedures}
    for pname, proc in program.procedures.items():
        seen = set()
        for blk in proc.callsite_blocks():
            callee = blk.call.callee
            if callee in program.procedures and callee not in seen:
                seen.add(callee)
                edges[pname].append(callee)
    return edges


def call_chains(program):
    """All maximal acyclic call chains from the entry procedure."""
    edges = _call_edges(program)
    chains = []
    path = [program.entry]
    on_path = {program.entry}

    def walk():
        extended = False
        for callee in edges[path[-1]]:
            if callee in on_path:
                continue
            extended = True
            path.append(callee)
            on_path.add(callee)
            walk()
            on_path.discard(callee)
            path.pop()
        if not extended:
            chains.append(list(path))

    walk()
    return chains


def memory_requirement_demand(program):
    """(avg, worst) of procedure-size sums along maximal call chains."""
    sizes = {n: ir.code_size(p) for n, p in program.procedures.items()}
    costs = [sum(sizes[n] for n in chain) for chain in call_chains(program)]
    return sum(costs) / len(costs), max(costs)


def code_growth_pct(original, compiled):
    base = ir.code_size(original)
    if base == 0:
        raise ir.IRError("zero-size original program")
    return 100.0 * (ir.code_size(compiled) - base) / base


def unit_stats(regions, program=None):
    """(unit count, average unit size in instructions)."""
    rlist = list(regions)
    if not rlist:
        raise ir.IRError("empty region set")
    program = program or getattr(regions, "owner", None)
    total = sum(r.size(program) for r in rlist)
    return len(rlist), total / len(rlist)


def profile_variance(region, program, threshold=INVARIANCE_THRESHOLD):
    """(population std dev of max-normalized block weights, invariant?)."""
    weights = [
        program.procedures[p].blocks[b].weight for p, b in region.blocks
    ]
    peak = max(weights)
    if peak == 0:
        return 0.0, True
    norm = [w / peak for w in weights]
    mean = sum(norm) / len(norm)
    var = math.sqrt(sum((v - mean) ** 2 for v in norm) / len(norm))
    return var, var <= threshold


def _seed_origin(region, program):
    pname, bid = region.seed
    return program.procedures[pname].blocks[bid].origin


def interprocedural_scope(regions, program=None):
    """(% of operations whose origin differs from their region seed's,
    count of regions mixing more than one origin)."""
    program = program or getattr(regions, "owner", None)
    total = 0
    interproc = 0
    mixed = 0
    for region in regions:
        seed_origin = _seed_origin(region, program)
        origins = set()
        for pname, bid in region.blocks:
            blk = program.procedures[pname].blocks[bid]
            if not blk.origin:
                raise ir.IRError(f"block {pname}.{bid} has no origin")
            origins.add(blk.origin)
            total += len(blk.instructions)
            if blk.origin != seed_origin:
                interproc += len(blk.instructions)
        if len(origins) > 1:
            mixed += 1
    pct = 100.0 * interproc / total if total else 0.0
    return pct, mixed


def build_report(
    strategy,
    original,
    compiled,
    regions,
    dynamic_cost=0,
    memory_avg=None,
    memory_worst=None,
):
    """Assemble the standard per-run report from its ingredients."""
    if memory_avg is None or memory_worst is None:
        memory_avg, memory_worst = memory_requirement_demand(original)
    count, avg_size = unit_stats(regions, compiled)
    variances = [profile_variance(r, compiled) for r in regions]
    pct_inv = 100.0 * sum(1 for _, inv in variances if inv) / count
    mean_var = sum(v for v, _ in variances) / count
    pct_interproc, _ = interprocedural_scope(regions, compiled)
    return MetricsReport(
        strategy=strategy,
        memory_avg=memory_avg,
        memory_worst=memory_worst,
        code_growth_pct=code_growth_pct(original, compiled),
        unit_count=count,
        unit_avg_size=avg_size,
        profile_variance=mean_var,
        pct_invariant_units=pct_inv,
        pct_interprocedural_ops=pct_interproc,
        dynamic_cost=dynamic_cost,
    )


_COLUMNS = (
    "strategy",
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


def _cell(value):
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def reports_table(reports):
    """Aligned text table, one row per report."""
    rows = [_COLUMNS] + [
        tuple(_cell(getattr(r, c)) for c in _COLUMNS) for r in reports
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(_COLUMNS))]
    lines = []
    for j, row in enumerate(rows):
        lines.append(
            "  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row))
        )
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def reports_csv(reports):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_COLUMNS)
    for r in reports:
        writer.writerow([getattr(r, c) for c in _COLUMNS])
    return buf.getvalue()


def reports_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2)
