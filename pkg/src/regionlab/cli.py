"""Command-line interface: compile, profile, compare, gen, check."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import ir, metrics
from .generator import Shape, generate_program
from .heuristics import COMBO_NAMES, combo_config
from .pipeline import compare, compile as compile_program
from .profiler import DEFAULT_FUEL, ExecutionError, interpret
from .regions import RegionParams

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_INTERNAL = 2

_PARAM_KEYS = {"desirability_ratio": float, "max_region_blocks": int}
_POLICY_KEYS = {
    "frequency_ratio": float,
    "max_callee_size": int,
    "growth_limit": float,
    "min_loop_call_weight": int,
}


def _parse_inputs(text):
    return [int(tok) for tok in text.split()] if text else []


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError(f"--set expects key=value, got '{pair}'")
        key, value = pair.split("=", 1)
        if key in _PARAM_KEYS:
            out[key] = _PARAM_KEYS[key](value)
        elif key in _POLICY_KEYS:
            out[key] = _POLICY_KEYS[key](value)
        else:
            raise ValueError(f"unknown --set key '{key}'")
    return out


def _load(path):
    with open(path, encoding="utf-8") as handle:
        program = ir.parse_program(handle.read())
    diags = ir.validate(program)
    if diags:
        for d in diags:
            print(str(d), file=sys.stderr)
        raise ir.IRError(f"{len(diags)} diagnostics")
    return program


def _build_setup(args):
    overrides = _parse_overrides(getattr(args, "set", None))
    params = RegionParams(
        desirability_ratio=overrides.get("desirability_ratio", 0.5),
        max_region_blocks=overrides.get("max_region_blocks", 200),
        tail_duplicate=getattr(args, "tail_dup", False),
    )

    def make_combo(name):
        combo = combo_config(name)
        changes = {
            k: v for k, v in overrides.items() if k in _POLICY_KEYS
        }
        if getattr(args, "growth_limit", None) is not None:
            changes["growth_limit"] = args.growth_limit
        if changes:
            combo = dataclasses.replace(
                combo, second=dataclasses.replace(combo.second, **changes)
            )
        return combo

    return params, make_combo


def _emit_report(reports, fmt):
    if fmt == "json":
        print(metrics.reports_json(reports))
    elif fmt == "csv":
        print(metrics.reports_csv(reports), end="")
    else:
        print(metrics.reports_table(reports))


def _cmd_compile(args):
    program = _load(args.file)
    params, make_combo = _build_setup(args)
    inputs = _parse_inputs(args.input) if args.input is not None else None
    result = compile_program(
        program,
        inputs=inputs,
        combo=make_combo(args.heuristic),
        params=params,
        call_overhead=args.call_overhead,
        fuel=args.fuel,
    )
    _emit_report([result.report], args.format)
    if args.emit_regions:
        with open(args.emit_regions, "w", encoding="utf-8") as handle:
            handle.write(result.regions.to_json(result.program_out))
    if args.emit_trace:
        if result.trace is None:
            print("no trace: strategy is not demand-driven", file=sys.stderr)
        else:
            with open(args.emit_trace, "w", encoding="utf-8") as handle:
                handle.write(result.trace.to_json())
    if args.emit_program:
        with open(args.emit_program, "w", encoding="utf-8") as handle:
            handle.write(ir.unparse_program(result.program_out))
    return EXIT_OK


def _cmd_profile(args):
    program = _load(args.file)
    profile = interpret(program, _parse_inputs(args.input), args.fuel)
    text = profile.to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        print(text)
    return EXIT_OK


def _cmd_compare(args):
    program = _load(args.file)
    params, make_combo = _build_setup(args)
    inputs = _parse_inputs(args.input) if args.input is not None else None
    names = [n.strip() for n in args.heuristics.split(",") if n.strip()]
    results = [
        compile_program(
            program,
            inputs=inputs,
            combo=make_combo(name),
            params=params,
            call_overhead=args.call_overhead,
            fuel=args.fuel,
        )
        for name in names
    ]
    if args.format == "json":
        print(json.dumps(compare(results), indent=2))
    else:
        _emit_report([r.report for r in results], args.format)
    return EXIT_OK


def _cmd_gen(args):
    shape = Shape(
        procs=args.procs,
        max_blocks=args.max_blocks,
        call_density=args.call_density,
        loop_prob=args.loop_prob,
        recursion=args.recursion,
    )
    program = generate_program(args.seed, shape)
    text = ir.unparse_program(program)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        print(text, end="")
    return EXIT_OK


def _cmd_check(args):
    failures = 0
    for i in range(args.count):
        seed = args.seed + i
        program = generate_program(
            seed, Shape(procs=3, max_blocks=10, call_density=0.4)
        )
        baseline = interpret(program, [], args.fuel)
        for name in COMBO_NAMES:
            result = compile_program(program, inputs=[], combo=name)
            after = interpret(result.program_out, [], args.fuel)
            if after.outputs != baseline.outputs:
                failures += 1
                print(f"seed {seed} {name}: output mismatch", file=sys.stderr)
            if not result.regions.is_partition(result.program_out):
                failures += 1
                print(f"seed {seed} {name}: not a partition", file=sys.stderr)
    print(
        f"checked {args.count} programs x {len(COMBO_NAMES)} combos: "
        f"{failures} failures"
    )
    return EXIT_OK if failures == 0 else EXIT_DIAGNOSTICS


def build_parser():
    parser = argparse.ArgumentParser(
        prog="regionlab",
        description="Region-based compilation laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("--input", help="main arguments, e.g. '1 2 3'")
        p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
        p.add_argument("--call-overhead", type=int, default=5)

    p = sub.add_parser("compile", help="compile one file under a heuristic")
    p.add_argument("file")
    p.add_argument("--heuristic", default="H0", choices=COMBO_NAMES)
    p.add_argument("--format", default="table", choices=("json", "table", "csv"))
    p.add_argument("--emit-regions", metavar="PATH")
    p.add_argument("--emit-trace", metavar="PATH")
    p.add_argument("--emit-program", metavar="PATH")
    p.add_argument("--growth-limit", type=float, default=None)
    p.add_argument("--tail-dup", action="store_true")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    common(p)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("profile", help="interpret and emit the profile")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("compare", help="compile under several heuristics")
    p.add_argument("file")
    p.add_argument("--heuristics", default="H0,H1,H4")
    p.add_argument("--format", default="table", choices=("json", "table", "csv"))
    p.add_argument("--growth-limit", type=float, default=None)
    p.add_argument("--tail-dup", action="store_true")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("gen", help="generate a random program")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--procs", type=int, default=3)
    p.add_argument("--max-blocks", type=int, default=12)
    p.add_argument("--call-density", type=float, default=0.3)
    p.add_argument("--loop-prob", type=float, default=0.4)
    p.add_argument("--recursion", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("check", help="property-check a generated corpus")
    p.add_argument("--count", type=int, default=25)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ir.IRError, ExecutionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except Exception as exc:  # noqa: BLE001 - report, fixed exit code
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
