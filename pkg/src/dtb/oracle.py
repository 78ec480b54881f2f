"""Plain double-buffered reference sweep, the trust anchor for everything else.

The reference applies the micro-kernel to the whole interior once per step
with ilp pinned to 1, swapping two full-size padded buffers. No tiling, no
halos, no concurrency: any fancier execution scheme is correct exactly when
it reproduces this output bit for bit.
"""

from __future__ import annotations

from .grid import Grid2D
from .kernel import KernelConfig, Window, j2d5pt_update

__all__ = ["jacobi_reference", "jacobi_reference_trace"]

_REF_CFG = KernelConfig(ilp=1)


def jacobi_reference(grid: Grid2D, weights, steps: int) -> Grid2D:
    """Run ``steps`` whole-interior updates and return the final grid.

    The input grid is left untouched; the ghost ring rides along unchanged.
    steps=0 returns a bitwise copy.
    """
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    a = grid.data.copy()
    b = grid.data.copy()
    cols = grid.interior_rect
    for _ in range(steps):
        j2d5pt_update(Window.over_interior(a), Window.over_interior(b),
                      weights, cols, _REF_CFG)
        a, b = b, a
    return Grid2D(grid.nx, grid.ny, a)


def jacobi_reference_trace(grid: Grid2D, weights, steps: int,
                           stride: int = 1) -> list[Grid2D]:
    """Like ``jacobi_reference`` but keep snapshots along the way.

    Returns copies of the state at t = 0, stride, 2*stride, ... plus always
    the final step, so the last element equals ``jacobi_reference`` output
    bitwise. ``stride`` bounds memory for long runs.
    """
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    a = grid.data.copy()
    b = grid.data.copy()
    cols = grid.interior_rect
    out = [Grid2D(grid.nx, grid.ny, a.copy())]
    for t in range(1, steps + 1):
        j2d5pt_update(Window.over_interior(a), Window.over_interior(b),
                      weights, cols, _REF_CFG)
        a, b = b, a
        if t % stride == 0 or t == steps:
            out.append(Grid2D(grid.nx, grid.ny, a.copy()))
    return out
