"""Shared fixtures: example programs and session-scoped generated corpora."""

import gc
import os

import pytest

import regionlab
from regionlab.generator import Shape, generate_program
from regionlab.heuristics import COMBO_NAMES
from regionlab.regions import RegionParams

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
FIXTURE_NAMES = ("fig2", "fig6", "fig3", "hotcall")

CORPUS_SIZE = 1000
PLAIN_SEEDS = range(700)
RECURSIVE_SEEDS = range(700, CORPUS_SIZE)
CORPUS_SHAPE = Shape(procs=3, max_blocks=10, call_density=0.4)
RECURSIVE_SHAPE = Shape(
    procs=3, max_blocks=10, call_density=0.4, recursion=True
)


def load_fixture(name):
    with open(os.path.join(FIXTURE_DIR, name + ".ir"), encoding="utf-8") as f:
        return regionlab.parse_program(f.read())


@pytest.fixture
def fig2():
    return load_fixture("fig2")


@pytest.fixture
def fig6():
    return load_fixture("fig6")


@pytest.fixture
def fig3():
    return load_fixture("fig3")


@pytest.fixture
def hotcall():
    return load_fixture("hotcall")


@pytest.fixture(scope="session")
def corpus():
    """Deterministic mixed corpus: acyclic call graphs plus a recursive tail."""
    programs = [generate_program(s, CORPUS_SHAPE) for s in PLAIN_SEEDS]
    programs += [generate_program(s, RECURSIVE_SHAPE) for s in RECURSIVE_SEEDS]
    return programs


def _compile_all(programs, params=None):
    # The results are retained for the whole session; building them with the
    # collector running makes every gen-2 pass rescan the growing pile, so
    # pause collection and freeze the survivors afterwards.
    results = []
    gc.disable()
    try:
        for program in programs:
            results.append(
                {
                    name: regionlab.compile(
                        program, inputs=[], combo=name, params=params
                    )
                    for name in COMBO_NAMES
                }
            )
    finally:
        gc.enable()
    gc.collect()
    gc.freeze()
    return results


@pytest.fixture(scope="session")
def corpus_results(corpus):
    """Every corpus program compiled under every heuristic combination."""
    return _compile_all(corpus)


@pytest.fixture(scope="session")
def corpus_results_tail_dup(corpus):
    """Same compilations with tail duplication enabled."""
    return _compile_all(corpus, params=RegionParams(tail_duplicate=True))


@pytest.fixture(scope="session")
def corpus_baseline_outputs(corpus):
    return [regionlab.run_outputs(p, []) for p in corpus]
