import pytest

from regionlab import heuristics, inliner, ir
from regionlab.heuristics import (
    CalleeStats,
    FirstOrderPolicy,
    SecondOrderPolicy,
    combo_config,
    loop_call_weight,
    order_procedures,
    should_inline,
)


def test_combo_h0_is_procedure_based():
    combo = combo_config("H0")
    assert combo.strategy == "procedure_based"
    assert combo.first.kind == "none"
    assert not combo.inlines


def test_combo_h1():
    combo = combo_config("H1")
    assert combo.strategy == "phased"
    assert combo.first.kind == "profile_time_desc"
    assert combo.second.frequency_ratio == 0.5
    assert combo.second.max_callee_size is None
    assert not combo.second.block_recursion


def test_combo_h2():
    combo = combo_config("H2")
    assert combo.strategy == "demand"
    assert combo.first.kind == "callsites_desc_then_size_asc"
    assert combo.second.max_callee_size == 25
    assert not combo.second.block_recursion


def test_combo_h3_drops_size_cap_adds_recursion_gate():
    combo = combo_config("H3")
    assert combo.strategy == "demand"
    assert combo.first.kind == "callsites_desc_then_size_asc"
    assert combo.second.max_callee_size is None
    assert combo.second.block_recursion


def test_combo_h4():
    combo = combo_config("H4")
    assert combo.first.kind == "loop_call_weight_desc_then_size_asc"
    assert combo.second == combo_config("H3").second


def test_combo_h5():
    combo = combo_config("H5")
    assert combo.first.kind == "profile_time_desc"
    assert combo.second == combo_config("H3").second


def test_combo_h6_adds_loop_weight_floor():
    combo = combo_config("H6")
    assert combo.first.kind == "profile_time_desc"
    assert combo.second.min_loop_call_weight == 10
    assert combo.second.block_recursion


def test_all_combos_share_growth_limit():
    for name in heuristics.COMBO_NAMES:
        assert combo_config(name).second.growth_limit == 0.20


def test_unknown_combo_rejected():
    with pytest.raises(ValueError):
        combo_config("H9")


NO_CALLS = """
proc f() {
block a:
  x = const 1
  jump b
block b:
  return x
}
"""

ONE_LOOP_CALL = """
proc f() {
block pre:
  i = const 3
  jump head
block head:
  t = lt 0 i
  branch t c0 done
block c0:
  x = call g()
  jump dec
block dec:
  i = sub i 1
  jump head
block done:
  return i
}
proc g() {
block a:
  y = const 1
  jump b
block b:
  return y
}
"""

TWO_DEPTH_CALLS = """
proc f() {
block pre:
  i = const 2
  jump oh
block oh:
  ti = lt 0 i
  branch ti oc done
block oc:
  a = call g()
  jump mid
block mid:
  j = const 2
  jump ih
block ih:
  tj = lt 0 j
  branch tj ic oe
block ic:
  b = call g()
  jump idec
block idec:
  j = sub j 1
  jump ih
block oe:
  i = sub i 1
  jump oh
block done:
  return i
}
proc g() {
block a:
  y = const 1
  jump b
block b:
  return y
}
"""


def test_loop_call_weight_no_callsites():
    program = ir.parse_program(NO_CALLS)
    assert loop_call_weight(program.procedures["f"]) == 0


def test_loop_call_weight_single_depth_one():
    program = ir.parse_program(ONE_LOOP_CALL)
    assert loop_call_weight(program.procedures["f"]) == 10


def test_loop_call_weight_depths_one_and_two():
    program = ir.parse_program(TWO_DEPTH_CALLS)
    assert loop_call_weight(program.procedures["f"]) == 30


def test_loop_call_weight_monotone_in_callsites():
    base = ir.parse_program(ONE_LOOP_CALL)
    more = ir.parse_program(TWO_DEPTH_CALLS)
    assert loop_call_weight(more.procedures["f"]) > loop_call_weight(
        base.procedures["f"]
    )


def _weighted(text, weights):
    program = ir.parse_program(text)
    for pname, per_block in weights.items():
        for bid, w in per_block.items():
            program.procedures[pname].blocks[bid].weight = w
    return program


ORDER_PROG = """
proc main() {
block a:
  x = call big()
  jump b
block b:
  y = call small()
  jump c
block c:
  z = call small()
  jump d
block d:
  return z
}
proc big() {
block a:
  p = const 1
  q = const 2
  r = const 3
  s = const 4
  jump b
block b:
  return s
}
proc small() {
block a:
  p = const 1
  jump b
block b:
  return p
}
"""


def test_order_none_is_source_order():
    program = ir.parse_program(ORDER_PROG)
    assert order_procedures(program, FirstOrderPolicy("none")) == [
        "main", "big", "small",
    ]


def test_order_by_static_callsites_then_size():
    program = ir.parse_program(ORDER_PROG)
    order = order_procedures(
        program, FirstOrderPolicy("callsites_desc_then_size_asc")
    )
    # small is called twice, big once, main never; main wins ties? no ties here
    assert order == ["small", "big", "main"]


def test_order_by_profile_time():
    program = _weighted(
        ORDER_PROG,
        {
            "main": {"a": 1, "b": 1, "c": 1, "d": 1},
            "big": {"a": 50, "b": 50},
            "small": {"a": 2, "b": 2},
        },
    )
    order = order_procedures(program, FirstOrderPolicy("profile_time_desc"))
    assert order[0] == "big"


def test_order_by_profile_time_requires_weights():
    program = ir.parse_program(ORDER_PROG)
    with pytest.raises(ir.IRError):
        order_procedures(program, FirstOrderPolicy("profile_time_desc"))


def test_order_by_loop_call_weight():
    program = ir.parse_program(TWO_DEPTH_CALLS)
    order = order_procedures(
        program, FirstOrderPolicy("loop_call_weight_desc_then_size_asc")
    )
    assert order[0] == "f"


def _stats(**kw):
    defaults = dict(size=5, weight=100, loop_weight=0, recursive=False)
    defaults.update(kw)
    return CalleeStats(**defaults)


def _site(freq=100):
    return inliner.Callsite("main", "b1", "f", freq)


def test_should_inline_frequency_gate():
    policy = SecondOrderPolicy(frequency_ratio=0.5)
    ok = should_inline(_site(60), _stats(), policy, seed_weight=100)
    no = should_inline(_site(40), _stats(), policy, seed_weight=100)
    assert ok.allowed
    assert not no.allowed and no.reason == "policy_rejected(frequency)"


def test_should_inline_frequency_gate_passes_without_seed():
    policy = SecondOrderPolicy(frequency_ratio=0.5)
    assert should_inline(_site(1), _stats(), policy, seed_weight=None).allowed


def test_should_inline_size_gate():
    policy = SecondOrderPolicy(max_callee_size=25)
    assert should_inline(_site(), _stats(size=25), policy).allowed
    no = should_inline(_site(), _stats(size=26), policy)
    assert not no.allowed and no.reason == "policy_rejected(size)"


def test_should_inline_recursion_gate():
    policy = SecondOrderPolicy(block_recursion=True)
    no = should_inline(_site(), _stats(recursive=True), policy)
    assert not no.allowed and no.reason == "recursive_blocked"


def test_should_inline_loop_weight_gate():
    policy = combo_config("H6").second
    no = should_inline(_site(), _stats(loop_weight=0), policy,
                       seed_weight=100)
    assert not no.allowed and no.reason == "policy_rejected(loopweight)"
    ok = should_inline(_site(), _stats(loop_weight=10), policy,
                       seed_weight=100)
    assert ok.allowed


def test_should_inline_growth_gate():
    policy = SecondOrderPolicy()
    state = inliner.GrowthState(100, 125)
    no = should_inline(_site(), _stats(), policy, growth_state=state)
    assert not no.allowed and no.reason == "growth_limit"


def test_ordering_and_gates_are_scale_invariant():
    program = _weighted(
        ORDER_PROG,
        {
            "main": {"a": 3, "b": 3, "c": 3, "d": 3},
            "big": {"a": 7, "b": 7},
            "small": {"a": 6, "b": 6},
        },
    )
    scaled = ir.clone_program(program)
    for proc in scaled.procedures.values():
        for blk in proc.blocks.values():
            blk.weight *= 7
    for kind in heuristics.FIRST_ORDER_KINDS:
        policy = FirstOrderPolicy(kind)
        assert order_procedures(program, policy) == order_procedures(
            scaled, policy
        )
    policy = SecondOrderPolicy(frequency_ratio=0.5)
    for freq, seed in ((60, 100), (40, 100), (50, 100)):
        a = should_inline(_site(freq), _stats(), policy, seed_weight=seed)
        b = should_inline(
            _site(freq * 7), _stats(), policy, seed_weight=seed * 7
        )
        assert a == b
