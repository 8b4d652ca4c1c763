"""Benchmark the compiled interpreter kernel against the pure-Python one.

Both engines run the same flattened programs; this script times them side
by side and checks that profiles agree bit for bit.

Usage: python benchmarks/bench_interp.py [--programs N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

from regionlab import flatten, generator
from regionlab import _interp_py

try:
    from regionlab import _kernel
except ImportError:
    _kernel = None


def _corpus(n):
    programs = []
    shape = generator.Shape(procs=4, max_blocks=14, call_density=0.4)
    for seed in range(n):
        programs.append(flatten.flatten(generator.generate_program(seed, shape)))
    return programs


def _run(engine, flats, fuel):
    t0 = time.perf_counter()
    results = [engine.execute(flat, [], fuel) for flat in flats]
    return time.perf_counter() - t0, results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--programs", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--fuel", type=int, default=10_000_000)
    args = parser.parse_args()

    flats = _corpus(args.programs)
    engines = [("python", _interp_py)]
    if _kernel is not None:
        engines.insert(0, ("compiled", _kernel))
    else:
        print("compiled kernel not built; timing pure Python only")

    timings = {}
    outputs = {}
    for name, engine in engines:
        runs = []
        for _ in range(args.repeat):
            elapsed, results = _run(engine, flats, args.fuel)
            runs.append(elapsed)
        timings[name] = min(runs)
        outputs[name] = [
            (r[0], list(r[1]), r[2], r[3], list(r[4]), r[5]) for r in results
        ]
        print(
            f"{name:>9}: best {timings[name]*1e3:8.1f} ms over "
            f"{args.repeat} runs ({args.programs} programs)"
        )

    if len(engines) == 2:
        if outputs["compiled"] == outputs["python"]:
            print("engines agree bit-for-bit on all programs")
        else:
            raise SystemExit("ENGINE MISMATCH: compiled != python")
        speedup = timings["python"] / timings["compiled"]
        print(f"speedup: {speedup:.1f}x")


if __name__ == "__main__":
    main()
