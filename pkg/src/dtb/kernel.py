"""Weighted 5-point Jacobi micro-kernel with register-style row blocking.

The update for one cell is the fixed-order expression

    out(x, y) = in(x-1, y)*W + in(x+1, y)*E
              + in(x, y-1)*S + in(x, y)*C + in(x, y+1)*N

with the five products accumulated strictly left to right and no fused
multiply-add, so every code path that feeds the same inputs produces
bitwise-identical output. That property is what lets a blocked, multi-worker
execution be checked against a plain reference run with zero tolerance.

Rows are processed in blocks of ``ilp`` consecutive y values. The south,
center and north operands for a block are staged once into an (ilp+2)-row
scratch array before use, mirroring a register rotation; west and east
operands are read from the input window directly. Rows left over after the
full blocks are handled by a scalar epilogue with the same expression.
Blocking is a pure scheduling choice: results are bitwise independent of
``ilp``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Rect, StencilWeights

__all__ = ["KernelConfig", "Window", "j2d5pt_update"]


@dataclass(frozen=True)
class KernelConfig:
    """Tuning knobs that must not change results."""

    ilp: int = 1

    def __post_init__(self):
        if self.ilp < 1:
            raise ValueError(f"ilp must be at least 1, got {self.ilp}")


@dataclass
class Window:
    """A width x height view into a 2D scalar buffer.

    Window coordinate (x, y) addresses buf[y0 + y, x0 + x]. The caller
    guarantees that the one-cell stencil reach around any updated region is
    backed by the buffer; ``j2d5pt_update`` verifies this against the
    physical buffer extents and refuses out-of-range access.
    """

    buf: np.ndarray
    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.buf.ndim != 2 or self.buf.dtype != np.float64:
            raise ValueError("window buffer must be a 2D float64 array")
        if self.width < 0 or self.height < 0:
            raise ValueError("window dims must be non-negative")

    @property
    def stride(self) -> int:
        """Row pitch of the backing buffer, in cells."""
        return self.buf.shape[1]

    @property
    def base(self) -> int:
        """Flat offset of window cell (0, 0) in the backing buffer."""
        return self.y0 * self.stride + self.x0

    @classmethod
    def over_interior(cls, grid_data: np.ndarray) -> "Window":
        """Window whose (0, 0) is interior cell (0, 0) of a padded grid buffer."""
        rows, cols = grid_data.shape
        return cls(grid_data, 1, 1, cols - 2, rows - 2)


def _check_cols(win: Window, cols: Rect, reach: int, what: str) -> None:
    # cols must lie inside the window, and cols +- reach inside the buffer
    if cols.x0 < 0 or cols.y0 < 0 or cols.x1 > win.width or cols.y1 > win.height:
        raise IndexError(f"update region {cols} outside {what} window "
                         f"{win.width}x{win.height}")
    rows_buf, cols_buf = win.buf.shape
    if (win.x0 + cols.x0 - reach < 0 or win.x0 + cols.x1 + reach > cols_buf
            or win.y0 + cols.y0 - reach < 0 or win.y0 + cols.y1 + reach > rows_buf):
        raise IndexError(f"{what} window too small for stencil reach at {cols}")


def j2d5pt_update(win_in: Window, win_out: Window, weights: StencilWeights,
                  cols: Rect, cfg: KernelConfig) -> None:
    """Apply one weighted 5-point update over ``cols`` of the windows.

    Reads win_in over cols dilated by one cell, writes win_out over cols
    exactly. Input and output must not alias anywhere in the written
    region; the two windows share a coordinate frame (the caller aligns
    them). A zero-area cols is a no-op.

    Raises:
        IndexError: cols outside a window, or stencil reach not backed by
            the input buffer.
        ValueError: input and output alias over the update region.
    """
    if cols.is_empty:
        return
    _check_cols(win_in, cols, 1, "input")
    _check_cols(win_out, cols, 0, "output")

    bi, bo = win_in.buf, win_out.buf
    ix = win_in.x0 + cols.x0
    iy = win_in.y0 + cols.y0
    ox = win_out.x0 + cols.x0
    oy = win_out.y0 + cols.y0
    cw, ch = cols.width, cols.height

    if bi is bo:
        # same buffer: exact rectangle overlap test in buffer coordinates
        if not (ox + cw <= ix - 1 or ix + cw + 1 <= ox
                or oy + ch <= iy - 1 or iy + ch + 1 <= oy):
            raise ValueError("input and output windows alias over the update region")
    elif np.shares_memory(bi[iy - 1:iy + ch + 1, ix - 1:ix + cw + 1],
                          bo[oy:oy + ch, ox:ox + cw]):
        raise ValueError("input and output windows alias over the update region")

    w_, e_, s_, c_, n_ = weights.astuple()
    ilp = cfg.ilp
    nfull = ch // ilp
    for b in range(nfull):
        r = b * ilp
        stage = bi[iy + r - 1:iy + r + ilp + 1, ix:ix + cw].copy()
        west = bi[iy + r:iy + r + ilp, ix - 1:ix - 1 + cw]
        east = bi[iy + r:iy + r + ilp, ix + 1:ix + 1 + cw]
        bo[oy + r:oy + r + ilp, ox:ox + cw] = (
            west * w_ + east * e_
            + stage[:-2] * s_ + stage[1:-1] * c_ + stage[2:] * n_)
    for r in range(nfull * ilp, ch):
        stage = bi[iy + r - 1:iy + r + 2, ix:ix + cw].copy()
        bo[oy + r, ox:ox + cw] = (
            bi[iy + r, ix - 1:ix - 1 + cw] * w_ + bi[iy + r, ix + 1:ix + 1 + cw] * e_
            + stage[0] * s_ + stage[1] * c_ + stage[2] * n_)
