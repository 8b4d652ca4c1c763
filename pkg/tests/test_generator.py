import pytest

from regionlab import generator, inliner, ir, profiler
from regionlab.generator import Shape, generate_program


def test_same_seed_same_program():
    a = generate_program(42, Shape(procs=3, max_blocks=12))
    b = generate_program(42, Shape(procs=3, max_blocks=12))
    assert ir.unparse_program(a) == ir.unparse_program(b)


def test_different_seeds_differ():
    a = generate_program(1)
    b = generate_program(2)
    assert ir.unparse_program(a) != ir.unparse_program(b)


def test_generated_programs_are_valid():
    for seed in range(50):
        program = generate_program(seed, Shape(procs=4, max_blocks=12))
        assert ir.validate(program) == []


def test_generated_programs_terminate():
    for seed in range(50):
        program = generate_program(seed, Shape(procs=3, max_blocks=10))
        profiler.interpret(program, [])  # raises on traps or fuel


def test_call_density_zero_means_no_calls():
    for seed in range(20):
        program = generate_program(
            seed, Shape(procs=3, max_blocks=10, call_density=0.0)
        )
        assert not inliner.find_callsites(program)


def test_call_chain_keeps_procedures_reachable():
    for seed in range(20):
        program = generate_program(
            seed, Shape(procs=4, max_blocks=10, call_density=0.3)
        )
        callees = {s.callee for s in inliner.find_callsites(program)}
        assert {"f1", "f2", "f3"} <= callees


def test_recursion_flag_adds_recursive_procedure():
    program = generate_program(
        5, Shape(procs=3, max_blocks=10, call_density=0.4, recursion=True)
    )
    assert "rec1" in program.procedures
    assert "rec1" in inliner.recursive_procedures(program)
    profiler.interpret(program, [])  # still terminates


def test_bad_shape_rejected():
    with pytest.raises(ValueError):
        Shape(procs=0)
    with pytest.raises(ValueError):
        Shape(max_blocks=2)


def test_kwargs_shape():
    program = generator.generate_program(3, procs=2, max_blocks=8)
    assert len(program.procedures) == 2
