"""Traffic accounting: analytic models and the counters the engine must match.

Cells are the unit everywhere; multiply by ``elem_bytes`` for bytes. Only
domain cells are counted: the frozen ghost ring is assumed resident on both
sides of every comparison, which keeps the single-tile t_depth=1 case
exactly equal to the naive model.

The naive baseline charges one global load and one global store per cell
per step (perfect neighbor reuse within a step). The deep-temporal-blocking
model charges, per time block of t_depth steps, one load per load-region
cell and one store per interior cell of every tile, and tracks the halo
columns exchanged between adjacent workers each superstep plus the
trapezoid rim cells recomputed beyond the useful slice. The engine counts
the same quantities at its actual copy and compute sites; model and
counters must reconcile exactly, as integers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .grid import Rect
from .planner import DEFAULT_ELEM_BYTES, DeviceModel, TilingPlan, tile_active_region

__all__ = [
    "TrafficReport",
    "model_naive_traffic",
    "model_dtb_traffic",
    "sota_footprint_table",
    "format_bytes",
    "RUN_CSV_COLUMNS",
    "run_csv_header",
    "run_csv_row",
    "sota_footprint_csv",
    "presets_csv",
]


@dataclass(frozen=True)
class TrafficReport:
    """Cell-granular traffic and compute totals for one run or model."""

    global_load_cells: int
    global_store_cells: int
    halo_exchanged_cells: int
    redundant_compute_cells: int
    useful_compute_cells: int
    scratchpad_peak_bytes: int
    elem_bytes: int = DEFAULT_ELEM_BYTES

    @property
    def global_load_bytes(self) -> int:
        return self.global_load_cells * self.elem_bytes

    @property
    def global_store_bytes(self) -> int:
        return self.global_store_cells * self.elem_bytes

    @property
    def halo_exchanged_bytes(self) -> int:
        return self.halo_exchanged_cells * self.elem_bytes

    @property
    def traffic_cells(self) -> int:
        """Global loads plus stores, the quantity temporal blocking attacks."""
        return self.global_load_cells + self.global_store_cells


def model_naive_traffic(domain: tuple[int, int], steps: int,
                        elem_bytes: int = DEFAULT_ELEM_BYTES) -> TrafficReport:
    """Baseline: every step streams the whole domain in and out once."""
    nx, ny = domain
    if nx < 0 or ny < 0:
        raise ValueError(f"negative domain dims {domain}")
    if steps < 0:
        raise ValueError(f"negative steps {steps}")
    cells = nx * ny * steps
    return TrafficReport(
        global_load_cells=cells,
        global_store_cells=cells,
        halo_exchanged_cells=0,
        redundant_compute_cells=0,
        useful_compute_cells=cells,
        scratchpad_peak_bytes=0,
        elem_bytes=elem_bytes,
    )


def model_dtb_traffic(plan: TilingPlan, total_steps: int,
                      valid: Rect | None = None) -> TrafficReport:
    """Analytic traffic for running ``plan`` over ``total_steps``.

    ``valid`` restricts compute to a sub-rectangle (padded-domain runs);
    loads and stores still cover every tile in full, matching an engine
    that streams the whole allocation but freezes cells outside ``valid``.
    """
    if total_steps < 1 or total_steps % plan.t_depth:
        raise ValueError(
            f"total_steps {total_steps} is not a positive multiple of "
            f"t_depth {plan.t_depth}")
    domain = Rect(0, 0, plan.nx, plan.ny)
    if valid is None:
        valid = domain
    elif not domain.contains(valid) or valid.is_empty:
        raise ValueError(f"valid region {valid} not within domain {domain}")
    blocks = total_steps // plan.t_depth

    loads = stores = halo = compute = 0
    for tile in plan.tiles:
        covered = tile.load_region.intersect(domain)
        loads += covered.area
        stores += tile.interior.area
        active_workers = min(plan.device.workers, tile.load_region.width)
        halo += 2 * max(active_workers - 1, 0) * covered.height * plan.t_depth
        for step in range(1, plan.t_depth + 1):
            compute += tile_active_region(tile, step, valid).area
    useful = valid.area * total_steps
    return TrafficReport(
        global_load_cells=loads * blocks,
        global_store_cells=stores * blocks,
        halo_exchanged_cells=halo * blocks,
        redundant_compute_cells=compute * blocks - useful,
        useful_compute_cells=useful,
        scratchpad_peak_bytes=plan.footprint_bytes,
        elem_bytes=plan.elem_bytes,
    )


# --- reference footprints and CSV emission ----------------------------------

# Published scratchpad consumption of the frameworks this scheme is measured
# against, quoted as-is (their unit conventions are not derivable).
SOTA_FOOTPRINTS = (
    ("StencilGen", "4.32 MB"),
    ("AN5D", "0.864 MB"),
)


def format_bytes(n: int) -> str:
    """KB below 1 MiB, MB with two decimals above (1 KB = 1024 B)."""
    if n < 0:
        raise ValueError(f"negative byte count {n}")
    kb = n / 1024.0
    if kb < 1024.0:
        return f"{kb:g} KB"
    return f"{kb / 1024.0:.2f} MB"


def sota_footprint_table(device: DeviceModel | None = None) -> list[tuple[str, str]]:
    """Rows of (name, scratchpad) for side-by-side comparison.

    The published constants come first; when ``device`` is given, a row for
    this scheme is appended with the device's total capacity, which deep
    temporal blocking fills by construction.
    """
    rows = list(SOTA_FOOTPRINTS)
    if device is not None:
        rows.append((f"dtb-{device.name}", format_bytes(device.total_bytes)))
    return rows


def sota_footprint_csv(device: DeviceModel | None = None) -> str:
    lines = ["name,scratchpad"]
    lines += [f"{name},{val}" for name, val in sota_footprint_table(device)]
    return "\n".join(lines) + "\n"


def presets_csv(presets: dict[str, DeviceModel]) -> str:
    lines = ["name,workers,scratchpad_bytes_per_worker,total_bytes,total"]
    for name, dev in presets.items():
        lines.append(f"{name},{dev.workers},{dev.scratchpad_bytes_per_worker},"
                     f"{dev.total_bytes},{format_bytes(dev.total_bytes)}")
    return "\n".join(lines) + "\n"


# One stable schema for run and sweep rows; absent values stay empty.
RUN_CSV_COLUMNS = (
    "status", "nx", "ny", "valid_x0", "valid_y0", "valid_nx", "valid_ny",
    "t_depth", "total_steps", "device", "workers",
    "scratchpad_bytes_per_worker", "threads", "ilp", "seed",
    "weight_w", "weight_e", "weight_s", "weight_c", "weight_n",
    "tiles", "tile_w", "tile_h", "footprint_bytes", "elem_bytes",
    "global_load_cells", "global_store_cells", "halo_exchanged_cells",
    "redundant_compute_cells", "useful_compute_cells", "scratchpad_peak_bytes",
    "bit_equal", "max_abs_diff", "wall_time_s", "host_model_gflops",
)


def run_csv_header() -> str:
    return ",".join(RUN_CSV_COLUMNS)


def run_csv_row(record: dict) -> str:
    unknown = set(record) - set(RUN_CSV_COLUMNS)
    if unknown:
        raise ValueError(f"unknown CSV fields: {sorted(unknown)}")

    def cell(v) -> str:
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        return str(v)

    return ",".join(cell(record.get(c)) for c in RUN_CSV_COLUMNS)
