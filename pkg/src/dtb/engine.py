"""Bulk-synchronous deep-temporal-blocking executor.

Tiles from a :class:`~dtb.planner.TilingPlan` are processed one at a time;
each tile's load region is split into per-worker column slices, pulled into
private double buffers, advanced ``t_depth`` steps entirely in those
buffers, and only then stored back. Global grid traffic therefore happens
once per time block instead of once per step.

Each superstep is two phases separated by all-worker rendezvous points:

    exchange   every worker copies the boundary column of each neighbor's
               front buffer into its own halo column (width 1 per side);
    compute    every worker applies the micro-kernel to its slice of the
               tile's active region, front to back, then flips its buffers.

The active region starts as the tile interior dilated by the temporal halo
and shrinks by one cell per step on every side that is not refreshed by
frozen cells or halo exchange, so stale rim cells are never read; a debug
mode overwrites everything outside the active region with NaN to make any
violation propagate loudly. Workers only ever write their own buffers, own
halo columns, and disjoint slices of the output grid, and all counter
reduction happens in the driver in worker order, so results and counters
are bitwise independent of how many OS threads the logical workers are
multiplexed onto, and of tile order within a time block.

Cells outside the ``valid`` rectangle (the whole interior by default) are
frozen: loaded, exchanged and stored like everything else, but never
updated. A padded benchmark domain with a centered valid region therefore
evolves its valid cells exactly like the standalone problem whose ghost
ring carries the surrounding padding values.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grid import Grid2D, Rect, StencilWeights
from .kernel import KernelConfig, Window, j2d5pt_update
from .metrics import TrafficReport
from .planner import TilingPlan, partition_subtiles, tile_active_region

__all__ = ["EngineError", "run_dtb", "run_dtb_trace", "exchange_halo",
           "TileTrace", "TileBlockTrace"]


class EngineError(RuntimeError):
    """Runtime contract violation inside the engine (not a usage error)."""


def _pull_halo_into(i: int, fronts: list, owned_widths: list[int]) -> int:
    """Receive worker i's halo columns from its active neighbors.

    Returns the number of columns received (0..2). Writes only worker i's
    own halo columns and reads only neighbor owned columns, so all workers
    may run this concurrently.
    """
    w = owned_widths[i]
    if w == 0:
        return 0
    f = fronts[i]
    got = 0
    if i > 0 and owned_widths[i - 1] > 0:
        f[:, 0] = fronts[i - 1][:, owned_widths[i - 1]]
        got += 1
    if i + 1 < len(owned_widths) and owned_widths[i + 1] > 0:
        f[:, w + 1] = fronts[i + 1][:, 1]
        got += 1
    return got


def exchange_halo(fronts: list, owned_widths: list[int]) -> int:
    """One full superstep exchange across a row of worker front buffers.

    Each front buffer is (rows, owned_width + 2): owned columns 1..w with a
    halo column on each side. Returns total cells received. A single worker
    exchanges nothing.
    """
    if len(fronts) != len(owned_widths):
        raise ValueError("fronts and owned_widths length mismatch")
    cells = 0
    for i in range(len(fronts)):
        cols = _pull_halo_into(i, fronts, owned_widths)
        if cols and fronts[i] is not None:
            cells += cols * fronts[i].shape[0]
    return cells


class _PhasePool:
    """Runs one phase function for every logical worker, then joins.

    The join is the rendezvous: a phase never observes a concurrent phase.
    With one thread the dispatch degenerates to a plain loop in worker
    order, which is bitwise equivalent because phase tasks are independent.
    """

    def __init__(self, threads: int):
        self.threads = max(1, threads)
        self._ex = (ThreadPoolExecutor(max_workers=self.threads)
                    if self.threads > 1 else None)

    def run(self, fn, n: int) -> list:
        if self._ex is None or n == 1:
            return [fn(i) for i in range(n)]
        return list(self._ex.map(fn, range(n)))

    def close(self):
        if self._ex is not None:
            self._ex.shutdown(wait=True)


class _TileState:
    """Per-tile worker geometry and scratch buffers, reused across blocks."""

    def __init__(self, tile, device, domain: Rect, valid: Rect, cap: int):
        self.tile = tile
        load = tile.load_region
        self.row0 = load.y0
        self.lh = load.height
        covered = load.intersect(domain)
        self.rows_dom = covered.height
        subs = partition_subtiles(tile, device)
        self.col0 = [s.cols.x0 for s in subs]
        self.ow = [s.cols.width for s in subs]
        self.owned = [s.cols for s in subs]
        self.n = len(subs)
        self.load_counts = [s.cols.intersect(domain).area for s in subs]
        self.poison_rects = [s.cols.intersect(valid) for s in subs]
        self.front: list = []
        self.back: list = []
        self.peak_worker_bytes = 0
        for w in self.ow:
            if w == 0:
                self.front.append(None)
                self.back.append(None)
                continue
            f = np.empty((self.lh, w + 2), dtype=np.float64)
            b = np.empty((self.lh, w + 2), dtype=np.float64)
            used = f.nbytes + b.nbytes
            if used > cap:
                raise EngineError(
                    f"worker buffer {used} B exceeds scratchpad capacity "
                    f"{cap} B for tile {tile.interior}")
            self.peak_worker_bytes = max(self.peak_worker_bytes, used)
            self.front.append(f)
            self.back.append(b)

    # -- phase bodies, one call per logical worker --------------------------

    def load(self, i: int, g_in: np.ndarray) -> int:
        w = self.ow[i]
        if w == 0:
            return 0
        c0, r0, lh = self.col0[i], self.row0, self.lh
        f = self.front[i]
        f[:, 1:w + 1] = g_in[r0 + 1:r0 + 1 + lh, c0 + 1:c0 + 1 + w]
        # frozen cells must be present in both parities; computed cells are
        # overwritten every superstep anyway
        self.back[i][:] = f
        return self.load_counts[i]

    def exchange(self, i: int) -> int:
        return _pull_halo_into(i, self.front, self.ow) * self.rows_dom

    def compute(self, i: int, active: Rect, weights: StencilWeights,
                cfg: KernelConfig, poison: bool) -> int:
        w = self.ow[i]
        if w == 0:
            return 0
        c0, r0 = self.col0[i], self.row0
        f, b = self.front[i], self.back[i]
        if poison:
            pr = self.poison_rects[i]
            if not pr.is_empty:
                b[pr.y0 - r0:pr.y1 - r0, pr.x0 - c0 + 1:pr.x1 - c0 + 1] = np.nan
        sub = active.intersect(self.owned[i])
        if not sub.is_empty:
            j2d5pt_update(
                Window(f, 1, 0, w, self.lh), Window(b, 1, 0, w, self.lh),
                weights,
                Rect(sub.x0 - c0, sub.y0 - r0, sub.width, sub.height), cfg)
        self.front[i], self.back[i] = b, f
        return sub.area

    def store(self, i: int, g_out: np.ndarray) -> int:
        w = self.ow[i]
        if w == 0:
            return 0
        it = self.tile.interior
        c0 = self.col0[i]
        x0 = max(it.x0, c0)
        x1 = min(it.x1, c0 + w)
        if x1 <= x0:
            return 0
        r0 = self.row0
        g_out[it.y0 + 1:it.y1 + 1, x0 + 1:x1 + 1] = \
            self.front[i][it.y0 - r0:it.y1 - r0, x0 - c0 + 1:x1 - c0 + 1]
        return (x1 - x0) * it.height

    def assemble(self) -> np.ndarray:
        """Stitch worker fronts into one load-region image (driver only)."""
        load = self.tile.load_region
        out = np.empty((self.lh, load.width), dtype=np.float64)
        for i in range(self.n):
            w = self.ow[i]
            if w == 0:
                continue
            x = self.col0[i] - load.x0
            out[:, x:x + w] = self.front[i][:, 1:w + 1]
        return out


@dataclass
class TileBlockTrace:
    """One time block at the probed tile: load image, per-superstep fronts,
    stored interior."""

    load: np.ndarray
    steps: list[np.ndarray]
    store: np.ndarray


@dataclass
class TileTrace:
    tile_index: int
    load_region: Rect
    blocks: list[TileBlockTrace]


def _execute(grid: Grid2D, weights: StencilWeights, total_steps: int,
             plan: TilingPlan, cfg: KernelConfig, valid: Rect | None,
             threads: int | None, poison: bool,
             probe: int | None) -> tuple[Grid2D, TrafficReport, TileTrace | None]:
    if (grid.nx, grid.ny) != (plan.nx, plan.ny):
        raise ValueError(f"plan is for {plan.nx}x{plan.ny}, "
                         f"grid is {grid.nx}x{grid.ny}")
    if total_steps < 1 or total_steps % plan.t_depth:
        raise ValueError(f"total_steps {total_steps} is not a positive "
                         f"multiple of t_depth {plan.t_depth}")
    if plan.elem_bytes != 8:
        raise ValueError("engine executes float64 grids; plan.elem_bytes must be 8")
    domain = Rect(0, 0, plan.nx, plan.ny)
    if valid is None:
        valid = domain
    elif valid.is_empty or not domain.contains(valid):
        raise ValueError(f"valid region {valid} not within domain {domain}")
    if probe is not None and not 0 <= probe < len(plan.tiles):
        raise IndexError(f"probe tile {probe} out of range "
                         f"(plan has {len(plan.tiles)} tiles)")

    device = plan.device
    cap = device.scratchpad_bytes_per_worker
    states = [_TileState(t, device, domain, valid, cap) for t in plan.tiles]
    peak = max(s.peak_worker_bytes for s in states)

    bufs = [grid.data.copy(), grid.data.copy()]
    src = 0
    loads = stores = halo = compute = 0
    t_depth = plan.t_depth
    trace = (TileTrace(probe, plan.tiles[probe].load_region, [])
             if probe is not None else None)

    pool = _PhasePool(threads if threads is not None else 1)
    try:
        for _ in range(total_steps // t_depth):
            g_in, g_out = bufs[src], bufs[1 - src]
            for ti, ts in enumerate(states):
                probing = trace is not None and ti == probe
                n = ts.n
                loads += sum(pool.run(lambda i: ts.load(i, g_in), n))
                if probing:
                    block = TileBlockTrace(ts.assemble(), [], None)
                for step in range(1, t_depth + 1):
                    halo += sum(pool.run(ts.exchange, n))
                    active = tile_active_region(ts.tile, step, valid)
                    compute += sum(pool.run(
                        lambda i: ts.compute(i, active, weights, cfg, poison), n))
                    if probing:
                        block.steps.append(ts.assemble())
                stores += sum(pool.run(lambda i: ts.store(i, g_out), n))
                if probing:
                    it = ts.tile.interior
                    block.store = g_out[it.y0 + 1:it.y1 + 1,
                                        it.x0 + 1:it.x1 + 1].copy()
                    trace.blocks.append(block)
            src = 1 - src
    finally:
        pool.close()

    useful = valid.area * total_steps
    report = TrafficReport(
        global_load_cells=loads,
        global_store_cells=stores,
        halo_exchanged_cells=halo,
        redundant_compute_cells=compute - useful,
        useful_compute_cells=useful,
        scratchpad_peak_bytes=peak,
        elem_bytes=plan.elem_bytes,
    )
    return Grid2D(plan.nx, plan.ny, bufs[src]), report, trace


def run_dtb(grid: Grid2D, weights: StencilWeights, total_steps: int,
            plan: TilingPlan, cfg: KernelConfig = KernelConfig(), *,
            valid: Rect | None = None, threads: int | None = None,
            poison: bool = False) -> tuple[Grid2D, TrafficReport]:
    """Advance ``grid`` by ``total_steps`` using deep temporal blocking.

    ``total_steps`` must be a positive multiple of ``plan.t_depth``; each
    block of t_depth steps streams every tile through scratchpad once.
    The input grid is not modified.

    Keyword args:
        valid: freeze cells outside this rectangle (padded-domain runs).
        threads: OS threads to multiplex the logical workers onto
            (default 1); results are bitwise independent of this.
        poison: overwrite non-active buffer cells with NaN each superstep
            so that any read of stale data corrupts the result visibly.

    Returns (result grid, traffic report).
    """
    out, report, _ = _execute(grid, weights, total_steps, plan, cfg, valid,
                              threads, poison, None)
    return out, report


def run_dtb_trace(grid: Grid2D, weights: StencilWeights, total_steps: int,
                  plan: TilingPlan, cfg: KernelConfig = KernelConfig(), *,
                  probe: int, valid: Rect | None = None,
                  threads: int | None = None,
                  poison: bool = False) -> tuple[Grid2D, TrafficReport, TileTrace]:
    """Like :func:`run_dtb` but record the probed tile's buffers.

    For each time block the trace holds the assembled load-region image
    after the load phase, one image per superstep (t_depth of them), and
    the interior slice that was stored back.

    Raises:
        IndexError: probe is not a valid tile index.
    """
    out, report, trace = _execute(grid, weights, total_steps, plan, cfg,
                                  valid, threads, poison, probe)
    return out, report, trace
