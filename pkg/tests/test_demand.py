import pytest

from regionlab import demand, ir
from regionlab.demand import (
    FormationTrace,
    classify_regions,
    form_regions_demand,
    peak_live_size,
)
from regionlab.heuristics import combo_config
from regionlab.regions import RegionParams, form_regions_phased


def _blocks_by_proc(result, proc):
    return {
        frozenset(r.block_ids()): r
        for r in result.regions
        if r.home_procedure() == proc
    }


def test_fig6_demand_partition(fig6):
    result = form_regions_demand(fig6, combo_config("H3"))
    f_regions = _blocks_by_proc(result, "F")
    assert set(f_regions) == {
        frozenset({"1", "2", "3", "5", "7", "8", "10", "11"}),
        frozenset({"9"}),
        frozenset({"6"}),
    }
    spliced = f_regions[
        frozenset({"1", "2", "3", "5", "7", "8", "10", "11"})
    ]
    assert spliced.seed == ("F", "2")
    assert spliced.kind == "pass_through"
    assert f_regions[frozenset({"6"})].kind == "local"
    assert f_regions[frozenset({"9"})].kind == "local"
    # the isolated pass still partitions G's own body
    g_regions = _blocks_by_proc(result, "G")
    assert set(g_regions) == {
        frozenset({"8", "10", "11"}),
        frozenset({"9"}),
    }
    assert g_regions[frozenset({"8", "10", "11"})].kind == "pass_through"
    assert result.regions.is_partition(result.program)


def test_fig6_trace_records_recursion(fig6):
    result = form_regions_demand(fig6, combo_config("H3"))
    inlines = result.trace.of_kind("inline_performed")
    assert [(e["caller"], e["callee"]) for e in inlines] == [("F", "G")]
    enters = result.trace.of_kind("enter_procedure")
    assert [e["proc"] for e in enters] == ["F", "G", "G"]
    assert [e["isolated"] for e in enters] == [1, 0, 1] or [
        e["isolated"] for e in enters
    ] == [True, False, True]


def test_inline_origin_preserved_through_demand(fig6):
    result = form_regions_demand(fig6, combo_config("H3"))
    f = result.program.procedures["F"]
    for bid in ("8", "9", "10", "11"):
        assert f.blocks[bid].origin == "G"


def test_classification_fig3(fig3):
    for name, entry_blocks, expect_pass_through in (
        ("B", {"b1", "b2", "b5"}, True),
        ("C", {"c1", "c2", "c3"}, False),
    ):
        proc = fig3.procedures[name]
        rset = form_regions_phased(proc)
        cls = classify_regions(proc, rset.regions)
        by_id = {r.id: r for r in rset}
        assert set(by_id[cls.entry_region].block_ids()) == entry_blocks
        assert cls.pass_through is expect_pass_through


def test_classification_requires_coverage(fig3):
    proc = fig3.procedures["B"]
    rset = form_regions_phased(proc)
    with pytest.raises(ir.IRError):
        classify_regions(proc, rset.regions[:1])


def test_peak_live_size_replay():
    trace = FormationTrace()
    trace.add("enter_procedure", proc="main", size=10, isolated=1)
    trace.add("enter_procedure", proc="f", size=7, isolated=0)
    trace.add("leave_procedure", proc="f", returned_size=3)
    trace.add("enter_procedure", proc="g", size=2, isolated=0)
    trace.add("leave_procedure", proc="g", returned_size=1)
    trace.add("leave_procedure", proc="main", returned_size=5)
    assert peak_live_size(trace) == 17


def test_peak_live_size_unbalanced_rejected():
    trace = FormationTrace()
    trace.add("leave_procedure", proc="main", returned_size=0)
    with pytest.raises(ir.IRError):
        peak_live_size(trace)
    trace = FormationTrace()
    trace.add("enter_procedure", proc="main", size=3, isolated=1)
    with pytest.raises(ir.IRError):
        peak_live_size(trace)


def test_refused_inline_recorded():
    # callee too large for H2's size cap
    text = """
proc main() {
block a weight 100:
  x = const 1
  jump c0
block c0 weight 100:
  r = call big(x)
  jump b
block b weight 100:
  print r
  return r
}
proc big(n) {
block e weight 100:
  v1 = add n 1
  v2 = add v1 1
  v3 = add v2 1
  v4 = add v3 1
  v5 = add v4 1
  v6 = add v5 1
  v7 = add v6 1
  v8 = add v7 1
  v9 = add v8 1
  v10 = add v9 1
  v11 = add v10 1
  v12 = add v11 1
  v13 = add v12 1
  v14 = add v13 1
  v15 = add v14 1
  v16 = add v15 1
  v17 = add v16 1
  v18 = add v17 1
  v19 = add v18 1
  v20 = add v19 1
  v21 = add v20 1
  v22 = add v21 1
  v23 = add v22 1
  v24 = add v23 1
  v25 = add v24 1
  jump z
block z weight 100:
  return v25
}
"""
    program = ir.parse_program(text)
    result = form_regions_demand(program, combo_config("H2"))
    refusals = result.trace.of_kind("inline_refused")
    assert refusals
    assert refusals[0]["reason"] == "policy_rejected(size)"
    assert not result.trace.of_kind("inline_performed")
    assert result.regions.is_partition(result.program)


def test_recursive_callsite_refused_under_gate():
    text = """
proc main() {
block a weight 10:
  x = const 3
  jump c0
block c0 weight 10:
  r = call rec(x)
  jump b
block b weight 10:
  print r
  return r
}
proc rec(n) {
block e weight 40:
  t = lt n 1
  branch t base step
block step weight 30:
  m = sub n 1
  jump c0
block c0 weight 30:
  r = call rec(m)
  jump c1
block c1 weight 30:
  s = add r n
  jump base
block base weight 40:
  u = move 0
  return u
}
"""
    program = ir.parse_program(text)
    result = form_regions_demand(program, combo_config("H5"))
    assert not result.trace.of_kind("inline_performed")
    reasons = {e["reason"] for e in result.trace.of_kind("inline_refused")}
    assert reasons == {"recursive_blocked"}
    assert result.regions.is_partition(result.program)


TWO_CALLERS = """
proc main() {
block m0 weight 1:
  a = const 1
  jump m1
block m1 weight 1:
  x = call hotuser(a)
  jump m2
block m2 weight 1:
  y = call colduser(a)
  jump m3
block m3 weight 1:
  print x
  print y
  return 0
}
proc hotuser(n) {
block h0 weight 100:
  jump hc
block hc weight 100:
  r = call shared(n)
  jump h1
block h1 weight 100:
  s = add r 1
  jump h2
block h2 weight 100:
  return s
}
proc colduser(n) {
block k0 weight 100:
  jump kc
block kc weight 100:
  r = call shared(n)
  jump k1
block k1 weight 4:
  s = add r 1
  jump k2
block k2 weight 4:
  return s
}
proc shared(n) {
block s0 weight 200:
  v = add n 1
  jump s1
block s1 weight 200:
  return v
}
"""


def test_callee_partitioned_differently_per_callsite():
    """The same callee's copies land in different region shapes depending on
    how hot the code around each callsite is."""
    import dataclasses

    program = ir.parse_program(TWO_CALLERS)
    combo = combo_config("H5")
    combo = dataclasses.replace(
        combo, second=dataclasses.replace(combo.second, growth_limit=5.0)
    )
    result = form_regions_demand(program, combo)

    def region_with(proc, bid):
        for r in result.regions:
            if (proc, bid) in r.blocks:
                return frozenset(r.block_ids())
        raise AssertionError(f"no region holds {proc}.{bid}")

    hot = result.program.procedures["hotuser"]
    cold = result.program.procedures["colduser"]
    hot_copy = next(b for b in hot.blocks.values() if b.origin == "shared")
    cold_copy = next(b for b in cold.blocks.values() if b.origin == "shared")
    hot_region = region_with("hotuser", hot_copy.id)
    cold_region = region_with("colduser", cold_copy.id)
    # the hot caller's continuation joins the region holding the copies;
    # the cold caller's continuation (weight 4) is excluded
    assert "h1" in hot_region and "h2" in hot_region
    assert "k1" not in cold_region and "k2" not in cold_region


def test_growth_halts_demand_inlining():
    text = """
proc main() {
block a weight 100:
  x = const 1
  jump c0
block c0 weight 100:
  r = call f(x)
  jump c1
block c1 weight 100:
  r2 = call f(r)
  jump c2
block c2 weight 100:
  r3 = call f(r2)
  jump c3
block c3 weight 100:
  r4 = call f(r3)
  jump b
block b weight 100:
  print r4
  return r4
}
proc f(n) {
block e weight 400:
  v1 = add n 1
  v2 = add v1 1
  v3 = add v2 1
  jump z
block z weight 400:
  return v3
}
"""
    program = ir.parse_program(text)
    result = form_regions_demand(program, combo_config("H5"))
    performed = result.trace.of_kind("inline_performed")
    refused = result.trace.of_kind("inline_refused")
    assert performed  # at least the first hot callsite is taken
    assert any(e["reason"] == "growth_limit" for e in refused)
    assert result.regions.is_partition(result.program)
