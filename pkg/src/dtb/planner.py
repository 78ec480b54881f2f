"""Tiling planner: fit trapezoidal tiles to a modeled scratchpad budget.

Deep temporal blocking advances each tile ``t_depth`` steps entirely inside
fast per-worker buffers before anything is stored back. Computing t_depth
steps of an interior rectangle requires loading that rectangle dilated by
t_depth cells per side (clipped to the domain plus its one-cell ghost
ring), and the freshly-computable region then shrinks by one cell per step
on every side that is not refreshed by the ghost ring or by worker-to-worker
halo exchange. The planner's job is pure geometry and capacity arithmetic:

* pick the largest tile interior whose dilated load region fits the
  per-worker scratchpad model, preferring tiles that span the full x extent
  (row bands stacked along y) and splitting x only when a full-width band
  cannot fit;
* emit a row-major list of tiles covering the domain, edge tiles clipped;
* split each tile's load region into per-worker column sub-tiles whose
  widths differ by at most one.

Per-worker footprint model for a (width, height) load region:

    2 (double buffer) * (ceil(width / workers) + 2) * height * elem_bytes

where the +2 is the pair of exchanged x-halo columns each worker keeps
beside its owned columns.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources

from .grid import Rect

__all__ = [
    "DeviceModel",
    "DeviceTile",
    "SubTile",
    "TilingPlan",
    "InfeasiblePlanError",
    "scratchpad_footprint",
    "plan_device_tiles",
    "partition_subtiles",
    "tile_active_region",
    "load_presets",
]

DEFAULT_ELEM_BYTES = 8


class InfeasiblePlanError(Exception):
    """Raised when not even a 1x1 tile interior fits the capacity model."""

    def __init__(self, message: str, min_required_bytes: int):
        super().__init__(message)
        self.min_required_bytes = min_required_bytes


@dataclass(frozen=True)
class DeviceModel:
    """Capacity model of one device: identical workers, private scratchpads."""

    name: str
    workers: int
    scratchpad_bytes_per_worker: int

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.scratchpad_bytes_per_worker < 1:
            raise ValueError("scratchpad_bytes_per_worker must be positive")

    @property
    def total_bytes(self) -> int:
        return self.workers * self.scratchpad_bytes_per_worker


@dataclass(frozen=True)
class DeviceTile:
    """One tile: the interior it owns and the dilated region it must load."""

    interior: Rect
    halo: int
    load_region: Rect

    def to_dict(self) -> dict:
        return {"interior": self.interior.to_dict(), "halo": self.halo,
                "load_region": self.load_region.to_dict()}


@dataclass(frozen=True)
class SubTile:
    """One worker's column slice of a tile's load region.

    stage_left / stage_right are the width-1 halo strips this worker
    receives from its neighbors each superstep; None where there is no
    active neighbor on that side. Workers beyond the load width get a
    zero-width cols and idle.
    """

    owner: int
    cols: Rect
    stage_left: Rect | None
    stage_right: Rect | None

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "cols": self.cols.to_dict(),
            "stage_left": self.stage_left.to_dict() if self.stage_left else None,
            "stage_right": self.stage_right.to_dict() if self.stage_right else None,
        }


@dataclass(frozen=True)
class TilingPlan:
    """Product of planning: tile list plus the parameters that shaped it."""

    nx: int
    ny: int
    t_depth: int
    elem_bytes: int
    device: DeviceModel
    tiles: tuple[DeviceTile, ...]
    footprint_bytes: int

    def to_dict(self) -> dict:
        tiles = []
        for t in self.tiles:
            d = t.to_dict()
            d["subtiles"] = [s.to_dict() for s in partition_subtiles(t, self.device)]
            tiles.append(d)
        return {
            "domain": {"nx": self.nx, "ny": self.ny},
            "t_depth": self.t_depth,
            "elem_bytes": self.elem_bytes,
            "device": {
                "name": self.device.name,
                "workers": self.device.workers,
                "scratchpad_bytes_per_worker": self.device.scratchpad_bytes_per_worker,
            },
            "footprint_bytes": self.footprint_bytes,
            "tiles": tiles,
        }


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def scratchpad_footprint(tile_load_dims: tuple[int, int], t_depth: int,
                         elem_bytes: int, workers: int) -> int:
    """Per-worker scratchpad bytes needed to hold a load region.

    ``tile_load_dims`` are the (width, height) of the load region, halo
    already included; ``t_depth`` is accepted for the record but the
    footprint depends only on the dims, the element size and the worker
    split.
    """
    width, height = tile_load_dims
    if width < 0 or height < 0:
        raise ValueError(f"negative load dims {tile_load_dims}")
    if t_depth < 0:
        raise ValueError(f"negative t_depth {t_depth}")
    if elem_bytes < 0:
        raise ValueError(f"negative elem_bytes {elem_bytes}")
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    return 2 * (_ceil_div(width, workers) + 2) * height * elem_bytes


def _load_region(interior: Rect, halo: int, nx: int, ny: int) -> Rect:
    # dilate by the temporal halo, clip to domain plus the one-cell ghost ring
    return interior.dilate(halo).intersect(Rect(-1, -1, nx + 2, ny + 2))


def _max_true(pred, lo: int, hi: int) -> int:
    # pred(lo) holds; find the largest value in [lo, hi] where it still does
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if pred(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def plan_device_tiles(domain: tuple[int, int], device: DeviceModel,
                      t_depth: int, elem_bytes: int = DEFAULT_ELEM_BYTES) -> TilingPlan:
    """Tile ``domain`` for ``device`` at temporal depth ``t_depth``.

    Chooses the largest tile interior such that the worst-case load region
    footprint fits ``device.scratchpad_bytes_per_worker``: full domain
    width when possible (height then maximized), otherwise the widest
    feasible tile at height 1, then height maximized at that width. Tiles
    are emitted row-major; edge tiles are clipped to the domain.

    Raises:
        InfeasiblePlanError: even a 1x1 interior with its halo does not
            fit; the error names the minimum required bytes per worker.
        ValueError: non-positive domain dims, t_depth or elem_bytes.
    """
    nx, ny = domain
    if nx < 1 or ny < 1:
        raise ValueError(f"domain dims must be at least 1x1, got {nx}x{ny}")
    if t_depth < 1:
        raise ValueError(f"t_depth must be at least 1, got {t_depth}")
    if elem_bytes < 1:
        raise ValueError(f"elem_bytes must be at least 1, got {elem_bytes}")

    cap = device.scratchpad_bytes_per_worker
    halo = t_depth

    def bound_dims(tw: int, th: int) -> tuple[int, int]:
        # no tile's load region can exceed these dims for interiors <= (tw, th)
        return (min(tw + 2 * halo, nx + 2), min(th + 2 * halo, ny + 2))

    def fits(tw: int, th: int) -> bool:
        return scratchpad_footprint(bound_dims(tw, th), halo, elem_bytes,
                                    device.workers) <= cap

    if not fits(1, 1):
        need = scratchpad_footprint(bound_dims(1, 1), halo, elem_bytes,
                                    device.workers)
        raise InfeasiblePlanError(
            f"device {device.name!r} scratchpad {cap} B/worker cannot hold a "
            f"1x1 tile interior at t_depth={t_depth}: needs at least {need} "
            f"B/worker", need)

    tile_w = nx if fits(nx, 1) else _max_true(lambda t: fits(t, 1), 1, nx)
    tile_h = _max_true(lambda t: fits(tile_w, t), 1, ny)

    tiles = []
    for ty in range(0, ny, tile_h):
        for tx in range(0, nx, tile_w):
            interior = Rect(tx, ty, min(tile_w, nx - tx), min(tile_h, ny - ty))
            tiles.append(DeviceTile(interior, halo,
                                    _load_region(interior, halo, nx, ny)))
    footprint = max(
        scratchpad_footprint((t.load_region.width, t.load_region.height),
                             halo, elem_bytes, device.workers)
        for t in tiles)
    return TilingPlan(nx, ny, t_depth, elem_bytes, device, tuple(tiles), footprint)


def partition_subtiles(tile: DeviceTile, device: DeviceModel) -> list[SubTile]:
    """Split a tile's load region into per-worker column slices.

    Widths differ by at most one, wider slices first; workers beyond the
    load width receive zero-width slices. The slices cover the load region
    exactly and do not overlap.
    """
    load = tile.load_region
    base, rem = divmod(load.width, device.workers)
    out = []
    x = load.x0
    for i in range(device.workers):
        w = base + (1 if i < rem else 0)
        cols = Rect(x, load.y0, w, load.height)
        stage_left = None
        stage_right = None
        if w > 0:
            if x > load.x0:
                stage_left = Rect(x - 1, load.y0, 1, load.height)
            if x + w < load.x1:
                stage_right = Rect(x + w, load.y0, 1, load.height)
        out.append(SubTile(i, cols, stage_left, stage_right))
        x += w
    return out


def tile_active_region(tile: DeviceTile, step: int, valid: Rect) -> Rect:
    """Cells legitimately computable at superstep ``step`` (1-based).

    The useful slice of the tile (interior intersected with the valid
    region) dilated by the remaining depth, clipped to the valid region:
    sides backed by frozen cells (ghost ring, or padding outside ``valid``)
    never shrink, trapezoid rim sides shrink by one per step. At
    step == halo this contains the whole useful slice.
    """
    if step < 1 or step > tile.halo:
        raise ValueError(f"step {step} outside 1..{tile.halo}")
    core = tile.interior.intersect(valid)
    if core.is_empty:
        return core
    return core.dilate(tile.halo - step).intersect(valid)


# --- device presets ---------------------------------------------------------

def load_presets(path=None) -> dict[str, DeviceModel]:
    """Read device presets from an INI file (the shipped one by default).

    Each section is a device name with ``workers`` and
    ``scratchpad_bytes_per_worker`` keys. The file is meant to be edited:
    worker counts and per-worker bytes are a capacity model, not gospel.
    """
    parser = configparser.ConfigParser()
    if path is None:
        text = resources.files("dtb").joinpath("presets.ini").read_text()
        parser.read_string(text)
    else:
        with open(path) as fh:
            parser.read_file(fh)
    out = {}
    for name in parser.sections():
        sec = parser[name]
        out[name] = DeviceModel(
            name=name,
            workers=sec.getint("workers"),
            scratchpad_bytes_per_worker=sec.getint("scratchpad_bytes_per_worker"),
        )
    return out
