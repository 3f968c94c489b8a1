"""Command-line entry point.

Exit codes: 0 success, 1 verification or decode failure, 2 bad config/usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .codec import Image2x2, encode
from .config import ConfigError, load_config
from .experiment import CaseError, prepare, run_case, sweep
from .grid_model import ControlProgram, GridError
from .report import emit
from .steady_state import SolveSettings, closed_form_downstream, solve_nodal
from .verify import verify_paper
from .weight_compiler import CompileError, WeightTask, compile_program

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _print_json(doc) -> None:
    print(json.dumps(doc, indent=2))


def _weights(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bits(text: str) -> Image2x2:
    try:
        return Image2x2.parse(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def cmd_compile(args, settings) -> int:
    config = load_config(args.config)
    if args.weights is not None:
        task = WeightTask(args.weights, args.anchor)
        program = compile_program(config.grid, task, settings)
        name = "custom"
    else:
        prepared = prepare(config, args.direction or config.tasks[0].name, settings)
        program, name = prepared.program, prepared.spec.name
    _print_json({"task": name, "delta_r": list(program.delta_r), "v_sec": list(program.v_sec)})
    return EXIT_OK


def cmd_solve(args, settings) -> int:
    config = load_config(args.config)
    grid = config.grid
    if args.direction:
        program = prepare(config, args.direction, settings).program
    else:
        program = ControlProgram.zero(grid)
    if args.input is not None:
        program = program.with_input(encode(args.input, config.amplitude))
    op = solve_nodal(grid, program, settings)
    i_out_cf, i_down_cf = closed_form_downstream(grid, program)
    doc = op.to_dict()
    doc["closed_form"] = {"i_out_down": i_out_cf, "i_down": i_down_cf}
    _print_json(doc)
    return EXIT_OK


def cmd_run(args, settings) -> int:
    config = load_config(args.config)
    res = run_case(config, args.input, args.direction, settings)
    _print_json(
        {
            "bits": str(res.image),
            "task": res.task,
            "delta_i": list(res.delta_i),
            "decoded": res.decoded,
            "expected": res.expected,
            "residual": res.residual,
        }
    )
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_sweep(args, settings) -> int:
    config = load_config(args.config)
    task = None if args.direction in (None, "all") else args.direction
    text = emit(sweep(config, task, settings), args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args, settings) -> int:
    report = verify_paper(load_config(args.config), settings)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridcompute", description=__doc__.splitlines()[0])
    parser.add_argument("--tolerance", type=float, default=None, help="residual tolerance for steady-state solves")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", default=None, help="JSON config (default: canonical five-bus grid)")
        p.set_defaults(func=func)
        return p

    p = add("compile", cmd_compile, "print compiled droop and secondary offsets")
    p.add_argument("--direction", help="cw | ccw")
    p.add_argument("--weights", type=_weights, help="explicit weights w1,w2,...")
    p.add_argument("--anchor", type=int, default=1, help="1-based anchor DER for --weights")

    p = add("solve", cmd_solve, "solve one steady state")
    p.add_argument("--input", type=_bits, help="4-bit image such as 0101")
    p.add_argument("--direction", help="program the grid for cw | ccw first")

    p = add("run", cmd_run, "run a single image through the grid")
    p.add_argument("--input", type=_bits, required=True)
    p.add_argument("--direction", required=True)

    p = add("sweep", cmd_sweep, "run all 16 images")
    p.add_argument("--direction", default="all", help="cw | ccw | all")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output path (default stdout)")

    add("verify", cmd_verify, "check the reference reproduction criteria")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = SolveSettings() if args.tolerance is None else SolveSettings(args.tolerance)
    except ValueError as err:
        parser.error(str(err))
    try:
        return args.func(args, settings)
    except (ConfigError, CompileError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (CaseError, GridError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
