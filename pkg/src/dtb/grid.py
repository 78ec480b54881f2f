"""Global domain grid, stencil coefficients, and comparison utilities.

The domain is a double-precision scalar field of nx x ny interior cells
surrounded by a one-cell ghost ring. Ghost values are fixed at construction
and never touched by stencil updates (frozen Dirichlet boundary), which
keeps engine-versus-oracle comparisons well defined at every edge cell.

Storage is a single C-order (ny+2, nx+2) float64 buffer: interior cell
(x, y) lives at data[y+1, x+1], rows are contiguous lines of constant y,
and kernels address sub-regions as plain offset/stride views of the same
buffer. Interior coordinates run x in [0, nx), y in [0, ny); the ghost ring
occupies x = -1, x = nx, y = -1, y = ny.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Rect",
    "StencilWeights",
    "Grid2D",
    "GridComparison",
    "grid_new",
    "grid_extract",
    "grid_compare",
    "grid_to_bytes",
    "grid_from_bytes",
    "save_grid",
    "load_grid",
]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle of cells in interior coordinates.

    ``width`` and ``height`` are non-negative; a zero-area rectangle is a
    legal degenerate value. Rectangles are half-open: the cells covered are
    x in [x0, x0+width), y in [y0, y0+height).
    """

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.width < 0 or self.height < 0:
            raise ValueError(f"negative rect dims: {self.width}x{self.height}")

    @property
    def x1(self) -> int:
        return self.x0 + self.width

    @property
    def y1(self) -> int:
        return self.y0 + self.height

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def is_empty(self) -> bool:
        return self.width == 0 or self.height == 0

    def intersect(self, other: "Rect") -> "Rect":
        x0 = max(self.x0, other.x0)
        y0 = max(self.y0, other.y0)
        w = max(0, min(self.x1, other.x1) - x0)
        h = max(0, min(self.y1, other.y1) - y0)
        return Rect(x0, y0, w, h)

    def dilate(self, r: int) -> "Rect":
        """Grow by r cells on every side. Empty rectangles stay empty."""
        if self.is_empty:
            return self
        return Rect(self.x0 - r, self.y0 - r, self.width + 2 * r, self.height + 2 * r)

    def contains(self, other: "Rect") -> bool:
        if other.is_empty:
            return True
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "width": self.width, "height": self.height}


@dataclass(frozen=True)
class StencilWeights:
    """Coefficients of the 5-point update, compass-named.

    w multiplies in(x-1, y), e multiplies in(x+1, y), s multiplies
    in(x, y-1), c multiplies in(x, y), n multiplies in(x, y+1). All five
    must be finite; the accumulation order elsewhere is fixed as
    w, e, s, c, n and is part of the bitwise contract.
    """

    w: float
    e: float
    s: float
    c: float
    n: float

    def __post_init__(self):
        for name in ("w", "e", "s", "c", "n"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite stencil weight {name}={v!r}")

    @classmethod
    def diffusive(cls, alpha: float) -> "StencilWeights":
        """Classic diffusion stencil: four sides alpha, center 1 - 4*alpha."""
        return cls(alpha, alpha, alpha, 1.0 - 4.0 * alpha, alpha)

    def astuple(self) -> tuple[float, float, float, float, float]:
        return (self.w, self.e, self.s, self.c, self.n)


@dataclass(eq=False)
class Grid2D:
    """nx x ny interior plus one-cell ghost ring in one row-major buffer.

    ``data`` has shape (ny+2, nx+2), dtype float64, C order. Degenerate
    grids (nx or ny zero) may arise from zero-area extraction and are
    tolerated here; ``grid_new`` rejects them for fresh construction.
    """

    nx: int
    ny: int
    data: np.ndarray

    def __post_init__(self):
        if self.nx < 0 or self.ny < 0:
            raise ValueError(f"negative grid dims {self.nx}x{self.ny}")
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.shape != (self.ny + 2, self.nx + 2):
            raise ValueError(
                f"grid buffer shape {arr.shape} does not match "
                f"({self.ny + 2}, {self.nx + 2})")
        self.data = arr

    @property
    def interior(self) -> np.ndarray:
        """View of the interior cells, indexed [y, x]."""
        return self.data[1:self.ny + 1, 1:self.nx + 1]

    @property
    def interior_rect(self) -> Rect:
        return Rect(0, 0, self.nx, self.ny)

    def copy(self) -> "Grid2D":
        return Grid2D(self.nx, self.ny, self.data.copy())

    def __repr__(self) -> str:
        return f"Grid2D(nx={self.nx}, ny={self.ny})"


def grid_new(nx: int, ny: int, init=0.0, ghost: float = 0.0) -> Grid2D:
    """Allocate a grid, fill the ghost ring with ``ghost`` and the interior
    from ``init``.

    Args:
        nx, ny: interior dims, both at least 1.
        init: a scalar, an (ny, nx) array of values, or a callable
            ``f(x, y) -> float`` invoked once per interior cell in
            row-major order (y outer, x inner).
        ghost: value frozen into the ghost ring.

    Raises:
        ValueError: zero or negative dims, or a value array of wrong shape.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"grid dims must be at least 1x1, got {nx}x{ny}")
    data = np.full((ny + 2, nx + 2), float(ghost), dtype=np.float64)
    if callable(init):
        interior = np.empty((ny, nx), dtype=np.float64)
        for y in range(ny):
            row = interior[y]
            for x in range(nx):
                row[x] = init(x, y)
        data[1:ny + 1, 1:nx + 1] = interior
    elif np.ndim(init) == 0:
        data[1:ny + 1, 1:nx + 1] = float(init)
    else:
        arr = np.asarray(init, dtype=np.float64)
        if arr.shape != (ny, nx):
            raise ValueError(f"init array shape {arr.shape} does not match ({ny}, {nx})")
        data[1:ny + 1, 1:nx + 1] = arr
    return Grid2D(nx, ny, data)


def grid_extract(grid: Grid2D, region: Rect) -> Grid2D:
    """Copy ``region`` of the interior out as a standalone grid.

    The new grid's ghost ring is copied from the source cells surrounding
    the region (source ghost values where the region touches the source
    boundary), so the result is a self-contained problem whose frozen
    boundary reproduces what the region saw in place at extraction time.

    Args:
        grid: source grid.
        region: rectangle within the source interior. A zero-area region
            yields a degenerate empty grid; that is not an error.

    Raises:
        IndexError: region extends outside the source interior.
    """
    if not grid.interior_rect.contains(region):
        raise IndexError(
            f"extract region {region} outside interior {grid.nx}x{grid.ny}")
    w, h = region.width, region.height
    if region.is_empty:
        return Grid2D(w, h, np.zeros((h + 2, w + 2), dtype=np.float64))
    window = grid.data[region.y0:region.y0 + h + 2, region.x0:region.x0 + w + 2]
    return Grid2D(w, h, window.copy())


@dataclass(frozen=True)
class GridComparison:
    """Outcome of an interior-to-interior comparison.

    first_mismatch is the (x, y) of the first differing cell in row-major
    order, or None when the interiors are bitwise identical.
    """

    bit_equal: bool
    max_abs_diff: float
    first_mismatch: tuple[int, int] | None


def grid_compare(a: Grid2D, b: Grid2D) -> GridComparison:
    """Compare interiors bitwise and by magnitude. Symmetric in its arguments.

    Raises:
        ValueError: dimension mismatch.
    """
    if (a.nx, a.ny) != (b.nx, b.ny):
        raise ValueError(f"grid dims differ: {a.nx}x{a.ny} vs {b.nx}x{b.ny}")
    if a.nx == 0 or a.ny == 0:
        return GridComparison(True, 0.0, None)
    au = np.ascontiguousarray(a.interior).view(np.uint64)
    bu = np.ascontiguousarray(b.interior).view(np.uint64)
    neq = au != bu
    if not neq.any():
        return GridComparison(True, 0.0, None)
    flat = int(np.flatnonzero(neq.ravel())[0])
    y, x = divmod(flat, a.nx)
    diff = float(np.max(np.abs(a.interior - b.interior)))
    return GridComparison(False, diff, (x, y))


# --- binary fixture format ------------------------------------------------
#
# 16-byte header of two little-endian uint64 (nx, ny), then the full
# (nx+2)*(ny+2) buffer as little-endian float64, row-major, ghosts included.

_HEADER = struct.Struct("<QQ")


def grid_to_bytes(grid: Grid2D) -> bytes:
    body = np.ascontiguousarray(grid.data, dtype="<f8").tobytes()
    return _HEADER.pack(grid.nx, grid.ny) + body


def grid_from_bytes(blob: bytes) -> Grid2D:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated grid blob: missing header")
    nx, ny = _HEADER.unpack_from(blob)
    want = _HEADER.size + (nx + 2) * (ny + 2) * 8
    if len(blob) != want:
        raise ValueError(f"grid blob length {len(blob)} does not match header ({want})")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(ny + 2, nx + 2)
    return Grid2D(int(nx), int(ny), data.astype(np.float64))


def save_grid(grid: Grid2D, path) -> None:
    with open(path, "wb") as fh:
        fh.write(grid_to_bytes(grid))


def load_grid(path) -> Grid2D:
    with open(path, "rb") as fh:
        return grid_from_bytes(fh.read())
