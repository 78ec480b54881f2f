"""Benchmark harness and verification front-end.

Subcommands:
    verify      run engine and reference on the same seeded grid, compare bitwise
    run         run the engine, emit one CSV row (or JSON) of counters and timing
    plan        print the tiling plan as JSON without executing
    sweep       cross-product of depths x sizes x devices, one CSV row each
    footprints  published scratchpad footprints, optionally with a device row
    presets     the shipped (or a user) device preset table as CSV

Exit codes: 0 success, 1 verification mismatch, 2 infeasible plan, 64 usage
error. Randomized grids come from a seeded portable PRNG, so any row can be
reproduced from its CSV fields alone (wall time and the rate derived from it
excepted).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .grid import (Grid2D, Rect, StencilWeights, grid_compare, grid_extract,
                   grid_new, load_grid, save_grid)
from .kernel import KernelConfig
from .metrics import (presets_csv, run_csv_header, run_csv_row,
                      sota_footprint_csv)
from .oracle import jacobi_reference
from .planner import (DeviceModel, InfeasiblePlanError, TilingPlan,
                      load_presets, plan_device_tiles)
from .prng import random_interior
from .engine import run_dtb

EX_OK = 0
EX_MISMATCH = 1
EX_INFEASIBLE = 2
EX_USAGE = 64

_FLOP_PER_CELL = 9  # 5 multiplies + 4 adds
_DEFAULT_DEVICE = "a100"


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code pinned to 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        xs, ys = text.lower().split("x")
        nx, ny = int(xs), int(ys)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected WIDTHxHEIGHT, got {text!r}") from None
    if nx < 1 or ny < 1:
        raise argparse.ArgumentTypeError(f"dims must be positive, got {text!r}")
    return nx, ny


def _add_domain(p, required: bool):
    p.add_argument("--nx", type=int, required=required, help="domain width")
    p.add_argument("--ny", type=int, required=required, help="domain height")


def _add_stencil(p):
    p.add_argument("--alpha", type=float, default=None,
                   help="diffusive stencil coefficient (default 0.2)")
    p.add_argument("--weights", default=None, metavar="W,E,S,C,N",
                   help="explicit five weights, overrides --alpha")


def _add_device(p):
    p.add_argument("--device", default=None,
                   help=f"device preset name (default {_DEFAULT_DEVICE})")
    p.add_argument("--workers", type=int, default=None,
                   help="explicit worker count (with --capacity)")
    p.add_argument("--capacity", type=int, default=None,
                   help="explicit scratchpad bytes per worker (with --workers)")
    p.add_argument("--presets", default=None, metavar="PATH",
                   help="preset file to read instead of the shipped one")


def _add_exec(p):
    p.add_argument("--t", type=int, default=4, help="temporal depth (default 4)")
    p.add_argument("--seed", type=int, default=1, help="grid fill seed (default 1)")
    p.add_argument("--ilp", type=int, default=4,
                   help="kernel row-block factor; never changes results")
    p.add_argument("--threads", type=int, default=1,
                   help="OS threads for the worker pool; never changes results")


def _weights_from_args(args, parser) -> StencilWeights:
    if args.weights is not None:
        if args.alpha is not None:
            parser.error("--alpha and --weights are mutually exclusive")
        parts = args.weights.split(",")
        if len(parts) != 5:
            parser.error(f"--weights needs 5 comma-separated values, "
                         f"got {len(parts)}")
        try:
            return StencilWeights(*(float(s) for s in parts))
        except ValueError as e:
            parser.error(f"bad --weights: {e}")
    alpha = 0.2 if args.alpha is None else args.alpha
    try:
        return StencilWeights.diffusive(alpha)
    except ValueError as e:
        parser.error(f"bad --alpha: {e}")


def _device_from_args(args, parser) -> DeviceModel:
    explicit = args.workers is not None or args.capacity is not None
    if explicit:
        if args.device is not None:
            parser.error("--device and --workers/--capacity are mutually exclusive")
        if args.workers is None or args.capacity is None:
            parser.error("--workers and --capacity must be given together")
        try:
            return DeviceModel("custom", args.workers, args.capacity)
        except ValueError as e:
            parser.error(str(e))
    name = args.device or _DEFAULT_DEVICE
    presets = load_presets(args.presets)
    if name not in presets:
        parser.error(f"unknown device preset {name!r} "
                     f"(have: {', '.join(sorted(presets))})")
    return presets[name]


def _steps_from_args(args, parser) -> int:
    if args.t < 1:
        parser.error(f"--t must be at least 1, got {args.t}")
    steps = args.steps if args.steps is not None else args.t
    if steps < 1 or steps % args.t:
        parser.error(f"--steps {steps} is not a positive multiple of --t {args.t}")
    return steps


def _kernel_cfg(args, parser) -> KernelConfig:
    if args.ilp < 1:
        parser.error(f"--ilp must be at least 1, got {args.ilp}")
    if args.threads < 1:
        parser.error(f"--threads must be at least 1, got {args.threads}")
    return KernelConfig(args.ilp)


def _valid_from_args(args, parser, nx: int, ny: int) -> Rect:
    if getattr(args, "pruned", None) is None:
        return Rect(0, 0, nx, ny)
    pnx, pny = args.pruned
    if pnx > nx or pny > ny:
        parser.error(f"--pruned {pnx}x{pny} larger than domain {nx}x{ny}")
    return Rect((nx - pnx) // 2, (ny - pny) // 2, pnx, pny)


def _check_against_oracle(initial: Grid2D, result: Grid2D,
                          weights: StencilWeights, steps: int, valid: Rect):
    """Compare a run against the reference, honoring a pruned valid region.

    For a pruned run the comparison target is the standalone problem cut
    out of the initial grid: its ghost ring carries the frozen padding
    values, exactly what the engine's frozen cells provided in place.
    """
    if valid == initial.interior_rect:
        return grid_compare(result, jacobi_reference(initial, weights, steps))
    ref = jacobi_reference(grid_extract(initial, valid), weights, steps)
    return grid_compare(grid_extract(result, valid), ref)


def _record(nx, ny, valid, t, steps, device, args, weights, seed,
            plan: TilingPlan | None) -> dict:
    rec = {
        "nx": nx, "ny": ny,
        "valid_x0": valid.x0, "valid_y0": valid.y0,
        "valid_nx": valid.width, "valid_ny": valid.height,
        "t_depth": t, "total_steps": steps,
        "device": device.name, "workers": device.workers,
        "scratchpad_bytes_per_worker": device.scratchpad_bytes_per_worker,
        "threads": args.threads, "ilp": args.ilp, "seed": seed,
        "weight_w": weights.w, "weight_e": weights.e, "weight_s": weights.s,
        "weight_c": weights.c, "weight_n": weights.n,
    }
    if plan is not None:
        first = plan.tiles[0].interior
        rec.update(tiles=len(plan.tiles), tile_w=first.width,
                   tile_h=first.height, footprint_bytes=plan.footprint_bytes,
                   elem_bytes=plan.elem_bytes)
    return rec


def _report_fields(report) -> dict:
    return {
        "global_load_cells": report.global_load_cells,
        "global_store_cells": report.global_store_cells,
        "halo_exchanged_cells": report.halo_exchanged_cells,
        "redundant_compute_cells": report.redundant_compute_cells,
        "useful_compute_cells": report.useful_compute_cells,
        "scratchpad_peak_bytes": report.scratchpad_peak_bytes,
    }


# --- subcommands ------------------------------------------------------------

def cmd_verify(args, parser) -> int:
    weights = _weights_from_args(args, parser)
    device = _device_from_args(args, parser)
    steps = _steps_from_args(args, parser)
    valid = _valid_from_args(args, parser, args.nx, args.ny)
    plan = plan_device_tiles((args.nx, args.ny), device, args.t)
    cfg = _kernel_cfg(args, parser)
    grid = grid_new(args.nx, args.ny, random_interior(args.nx, args.ny, args.seed))
    out, _ = run_dtb(grid, weights, steps, plan, cfg,
                     valid=None if valid == grid.interior_rect else valid,
                     threads=args.threads)
    cmp = _check_against_oracle(grid, out, weights, steps, valid)
    print(f"bit_equal={'true' if cmp.bit_equal else 'false'}")
    print(f"max_abs_diff={cmp.max_abs_diff!r}")
    if cmp.first_mismatch is not None:
        x, y = cmp.first_mismatch
        print(f"first_mismatch={x},{y}")
    return EX_OK if cmp.bit_equal else EX_MISMATCH


def cmd_run(args, parser) -> int:
    weights = _weights_from_args(args, parser)
    device = _device_from_args(args, parser)
    steps = _steps_from_args(args, parser)
    if args.load_grid is not None:
        grid = load_grid(args.load_grid)
        if ((args.nx is not None and args.nx != grid.nx)
                or (args.ny is not None and args.ny != grid.ny)):
            parser.error(f"--nx/--ny do not match loaded grid "
                         f"{grid.nx}x{grid.ny}")
        nx, ny, seed = grid.nx, grid.ny, None
    else:
        if args.nx is None or args.ny is None:
            parser.error("--nx and --ny are required without --load-grid")
        nx, ny, seed = args.nx, args.ny, args.seed
        grid = grid_new(nx, ny, random_interior(nx, ny, seed))
    valid = _valid_from_args(args, parser, nx, ny)
    plan = plan_device_tiles((nx, ny), device, args.t)

    cfg = _kernel_cfg(args, parser)
    t0 = time.perf_counter()
    out, report = run_dtb(grid, weights, steps, plan, cfg,
                          valid=None if valid == grid.interior_rect else valid,
                          threads=args.threads)
    wall = time.perf_counter() - t0

    rec = _record(nx, ny, valid, args.t, steps, device, args, weights, seed, plan)
    rec.update(_report_fields(report))
    rec["status"] = "ok"
    rec["wall_time_s"] = f"{wall:.6f}"
    gflops = report.useful_compute_cells * _FLOP_PER_CELL / max(wall, 1e-12) / 1e9
    rec["host_model_gflops"] = f"{gflops:.3f}"
    code = EX_OK
    if args.check:
        cmp = _check_against_oracle(grid, out, weights, steps, valid)
        rec["bit_equal"] = cmp.bit_equal
        rec["max_abs_diff"] = cmp.max_abs_diff
        if not cmp.bit_equal:
            rec["status"] = "mismatch"
            code = EX_MISMATCH
    if args.save_grid is not None:
        save_grid(out, args.save_grid)
    if args.format == "json":
        print(json.dumps(rec, indent=2, sort_keys=True))
    else:
        if not args.no_header:
            print(run_csv_header())
        print(run_csv_row(rec))
    return code


def cmd_plan(args, parser) -> int:
    device = _device_from_args(args, parser)
    if args.t < 1:
        parser.error(f"--t must be at least 1, got {args.t}")
    plan = plan_device_tiles((args.nx, args.ny), device, args.t)
    print(json.dumps(plan.to_dict(), indent=2))
    return EX_OK


def cmd_sweep(args, parser) -> int:
    weights = _weights_from_args(args, parser)
    t_list = [tok for tok in (s.strip() for s in args.t_list.split(",")) if tok]
    if not t_list:
        parser.error("--t-list is empty")
    try:
        depths = [int(t) for t in t_list]
    except ValueError as e:
        parser.error(f"bad --t-list: {e}")
    if any(t < 1 for t in depths):
        parser.error("--t-list entries must be at least 1")
    if args.steps_factor < 1:
        parser.error("--steps-factor must be at least 1")
    try:
        sizes = [_parse_dims(s) for s in args.sizes.split(",")]
    except argparse.ArgumentTypeError as e:
        parser.error(f"bad --sizes: {e}")
    presets = load_presets(args.presets)
    devices = []
    for name in (s.strip() for s in args.devices.split(",")):
        if name not in presets:
            parser.error(f"unknown device preset {name!r} "
                         f"(have: {', '.join(sorted(presets))})")
        devices.append(presets[name])

    cfg = _kernel_cfg(args, parser)
    print(run_csv_header())
    any_ok = any_mismatch = False
    for nx, ny in sizes:
        for device in devices:
            for t in depths:
                steps = t * args.steps_factor
                valid = Rect(0, 0, nx, ny)
                try:
                    plan = plan_device_tiles((nx, ny), device, t)
                except InfeasiblePlanError:
                    rec = _record(nx, ny, valid, t, steps, device, args,
                                  weights, args.seed, None)
                    rec["status"] = "infeasible"
                    print(run_csv_row(rec), flush=True)
                    continue
                grid = grid_new(nx, ny, random_interior(nx, ny, args.seed))
                t0 = time.perf_counter()
                out, report = run_dtb(grid, weights, steps, plan, cfg,
                                      threads=args.threads)
                wall = time.perf_counter() - t0
                rec = _record(nx, ny, valid, t, steps, device, args, weights,
                              args.seed, plan)
                rec.update(_report_fields(report))
                rec["status"] = "ok"
                rec["wall_time_s"] = f"{wall:.6f}"
                gflops = (report.useful_compute_cells * _FLOP_PER_CELL
                          / max(wall, 1e-12) / 1e9)
                rec["host_model_gflops"] = f"{gflops:.3f}"
                if args.check:
                    cmp = grid_compare(out, jacobi_reference(grid, weights, steps))
                    rec["bit_equal"] = cmp.bit_equal
                    rec["max_abs_diff"] = cmp.max_abs_diff
                    if not cmp.bit_equal:
                        rec["status"] = "mismatch"
                        any_mismatch = True
                if rec["status"] == "ok":
                    any_ok = True
                print(run_csv_row(rec), flush=True)
    if any_mismatch:
        return EX_MISMATCH
    return EX_OK if any_ok else EX_INFEASIBLE


def cmd_footprints(args, parser) -> int:
    device = None
    if args.device is not None:
        presets = load_presets(args.presets)
        if args.device not in presets:
            parser.error(f"unknown device preset {args.device!r} "
                         f"(have: {', '.join(sorted(presets))})")
        device = presets[args.device]
    print(sota_footprint_csv(device), end="")
    return EX_OK


def cmd_presets(args, parser) -> int:
    print(presets_csv(load_presets(args.presets)), end="")
    return EX_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="dtb-stencil",
                     description="Deep temporal blocking for the 2D 5-point "
                                 "Jacobi stencil: plan, run, verify, sweep.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("verify", help="compare engine against the reference, "
                                      "bitwise")
    _add_domain(p, required=True)
    _add_stencil(p)
    _add_device(p)
    _add_exec(p)
    p.add_argument("--steps", type=int, default=None,
                   help="total steps, a multiple of --t (default --t)")
    p.add_argument("--pruned", type=_parse_dims, default=None, metavar="NXxNY",
                   help="centered valid region; padding cells stay frozen")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="run once, emit counters and timing")
    _add_domain(p, required=False)
    _add_stencil(p)
    _add_device(p)
    _add_exec(p)
    p.add_argument("--steps", type=int, default=None,
                   help="total steps, a multiple of --t (default --t)")
    p.add_argument("--pruned", type=_parse_dims, default=None, metavar="NXxNY",
                   help="centered valid region; rate normalized to it")
    p.add_argument("--check", action="store_true",
                   help="also compare against the reference")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-header", action="store_true",
                   help="omit the CSV header line")
    p.add_argument("--load-grid", default=None, metavar="PATH",
                   help="initial grid fixture instead of a seeded fill")
    p.add_argument("--save-grid", default=None, metavar="PATH",
                   help="write the result grid as a fixture")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plan", help="print the tiling plan as JSON")
    _add_domain(p, required=True)
    _add_device(p)
    p.add_argument("--t", type=int, default=4, help="temporal depth (default 4)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", help="cross-product of depths, sizes, devices")
    _add_stencil(p)
    p.add_argument("--t-list", default="1,2,4,8", metavar="T1,T2,...",
                   help="temporal depths to sweep (default 1,2,4,8)")
    p.add_argument("--sizes", default="512x512", metavar="NXxNY,...",
                   help="domain sizes to sweep (default 512x512)")
    p.add_argument("--devices", default=_DEFAULT_DEVICE, metavar="NAME,...",
                   help=f"preset names to sweep (default {_DEFAULT_DEVICE})")
    p.add_argument("--steps-factor", type=int, default=1,
                   help="total_steps = factor * T per cell (default 1)")
    p.add_argument("--check", action="store_true",
                   help="verify every cell against the reference")
    p.add_argument("--presets", default=None, metavar="PATH",
                   help="preset file to read instead of the shipped one")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--ilp", type=int, default=4)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("footprints",
                       help="published scratchpad footprint table as CSV")
    p.add_argument("--device", default=None,
                   help="append this preset's total-capacity row")
    p.add_argument("--presets", default=None, metavar="PATH")
    p.set_defaults(func=cmd_footprints)

    p = sub.add_parser("presets", help="device preset table as CSV")
    p.add_argument("--presets", default=None, metavar="PATH")
    p.set_defaults(func=cmd_presets)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, parser)
    except SystemExit as e:
        # argparse's own exits (--help, usage errors) funneled to a return
        code = e.code
        return int(code) if code is not None else EX_OK
    except InfeasiblePlanError as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
