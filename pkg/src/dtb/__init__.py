"""Deep temporal blocking for the 2D 5-point Jacobi stencil.

A host-side execution engine and benchmark harness: a capacity-driven tile
planner, a bulk-synchronous multi-worker executor that advances each tile
several time steps per global-memory round trip, an exact traffic model the
engine's counters must reconcile with, and a bitwise reference oracle.
"""

from .grid import (Grid2D, GridComparison, Rect, StencilWeights, grid_compare,
                   grid_extract, grid_from_bytes, grid_new, grid_to_bytes,
                   load_grid, save_grid)
from .kernel import KernelConfig, Window, j2d5pt_update
from .oracle import jacobi_reference, jacobi_reference_trace
from .planner import (DEFAULT_ELEM_BYTES, DeviceModel, DeviceTile,
                      InfeasiblePlanError, SubTile, TilingPlan, load_presets,
                      partition_subtiles, plan_device_tiles,
                      scratchpad_footprint, tile_active_region)
from .metrics import (RUN_CSV_COLUMNS, SOTA_FOOTPRINTS, TrafficReport,
                      format_bytes, model_dtb_traffic, model_naive_traffic,
                      presets_csv, run_csv_header, run_csv_row,
                      sota_footprint_csv, sota_footprint_table)
from .engine import (EngineError, TileBlockTrace, TileTrace, exchange_halo,
                     run_dtb, run_dtb_trace)
from .prng import Xoshiro256StarStar, random_doubles, random_interior, splitmix64

__version__ = "0.1.0"

__all__ = [
    "Grid2D", "GridComparison", "Rect", "StencilWeights", "grid_compare",
    "grid_extract", "grid_from_bytes", "grid_new", "grid_to_bytes",
    "load_grid", "save_grid",
    "KernelConfig", "Window", "j2d5pt_update",
    "jacobi_reference", "jacobi_reference_trace",
    "DEFAULT_ELEM_BYTES", "DeviceModel", "DeviceTile", "InfeasiblePlanError",
    "SubTile", "TilingPlan", "load_presets", "partition_subtiles",
    "plan_device_tiles", "scratchpad_footprint", "tile_active_region",
    "RUN_CSV_COLUMNS", "SOTA_FOOTPRINTS", "TrafficReport", "format_bytes",
    "model_dtb_traffic", "model_naive_traffic", "presets_csv",
    "run_csv_header", "run_csv_row", "sota_footprint_csv",
    "sota_footprint_table",
    "EngineError", "TileBlockTrace", "TileTrace", "exchange_halo", "run_dtb",
    "run_dtb_trace",
    "Xoshiro256StarStar", "random_doubles", "random_interior", "splitmix64",
    "__version__",
]
