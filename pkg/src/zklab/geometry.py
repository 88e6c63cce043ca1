"""Uniform tensor-product grids on rectangles and truncated strips.

The computational domain is (0, L) x (-B, B) with homogeneous Dirichlet
walls.  Fields carry one explicit boundary layer (the first/last row and
column of the value array hold the wall values), so stencil code never
branches on position: interior operators read wall data like any other
neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

RECTANGLE = "rectangle"
TRUNCATED_STRIP = "truncated_strip"

_DOMAIN_KINDS = (RECTANGLE, TRUNCATED_STRIP)
MIN_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform grid on (0, L) x (-B, B) with nx x ny interior nodes.

    Node (i, j), 0 <= i <= nx+1, 0 <= j <= ny+1, sits at
    (i*hx, -B + j*hy); i in {0, nx+1} and j in {0, ny+1} are wall nodes.
    ``domain_kind`` records whether B is a physical half-width or a
    truncation of an unbounded strip.
    """

    L: float
    B: float
    nx: int
    ny: int
    domain_kind: str = RECTANGLE

    @property
    def hx(self) -> float:
        return self.L / (self.nx + 1)

    @property
    def hy(self) -> float:
        return 2.0 * self.B / (self.ny + 1)

    def xs(self) -> np.ndarray:
        """All node x-coordinates, computed per node (no running sums)."""
        return self.hx * np.arange(self.nx + 2)

    def ys(self) -> np.ndarray:
        return -self.B + self.hy * np.arange(self.ny + 2)

    def xs_interior(self) -> np.ndarray:
        return self.hx * np.arange(1, self.nx + 1)

    def ys_interior(self) -> np.ndarray:
        return -self.B + self.hy * np.arange(1, self.ny + 1)

    def meshgrid(self):
        """Full-grid coordinate arrays of shape (nx+2, ny+2)."""
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 2, self.ny + 2)


def build_grid(L: float, B: float, nx: int, ny: int,
               domain_kind: str = RECTANGLE) -> Grid:
    """Validated Grid constructor."""
    for name, val in (("L", L), ("B", B)):
        if not math.isfinite(val) or val <= 0:
            raise ValueError(f"{name} must be finite and positive, got {val}")
    for name, val in (("nx", nx), ("ny", ny)):
        if int(val) != val or val < MIN_POINTS:
            raise ValueError(f"{name} must be an integer >= {MIN_POINTS}, got {val}")
    if domain_kind not in _DOMAIN_KINDS:
        raise ValueError(f"domain_kind must be one of {_DOMAIN_KINDS}, got {domain_kind!r}")
    return Grid(float(L), float(B), int(nx), int(ny), domain_kind)


def build_strip_grid(L: float, y_support_radius: float, nx: int, ny: int,
                     widen: float = 4.0) -> Grid:
    """Truncated-strip grid wide enough for a datum supported in |y| <= radius.

    The truncation half-width is ``widen`` times the support radius
    (default 4x), so widening B further only reduces truncation error.
    """
    if y_support_radius <= 0 or not math.isfinite(y_support_radius):
        raise ValueError(f"y_support_radius must be finite and positive, got {y_support_radius}")
    if widen < 1.0:
        raise ValueError(f"widen must be >= 1, got {widen}")
    return build_grid(L, widen * y_support_radius, nx, ny, TRUNCATED_STRIP)


@dataclass(frozen=True)
class Field:
    """Real scalar samples on a Grid, boundary layer included.

    Value-semantic: the array is frozen at construction and never mutated;
    operations return new Fields.  ``dirichlet_clean`` certifies that the
    boundary layer is exactly zero.
    """

    grid: Grid
    values: np.ndarray
    dirichlet_clean: bool = field(default=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"field shape {vals.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def boundary_max(self) -> float:
        """Largest absolute value on the boundary layer."""
        v = self.values
        return max(np.abs(v[0, :]).max(), np.abs(v[-1, :]).max(),
                   np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max())

    def with_interior(self, interior: np.ndarray) -> "Field":
        """New clean Field with the given interior and zero boundary."""
        vals = np.zeros(self.grid.shape)
        vals[1:-1, 1:-1] = interior
        return Field(self.grid, vals, dirichlet_clean=True)


def sample_field(grid: Grid, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Field:
    """Pointwise samples of f(x, y) at every node, boundary layer included."""
    X, Y = grid.meshgrid()
    vals = np.asarray(f(X, Y), dtype=float)
    if vals.shape != grid.shape:  # scalar-valued callables broadcast
        vals = np.broadcast_to(vals, grid.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("sampled function returned non-finite values")
    clean = bool(
        not vals[0, :].any() and not vals[-1, :].any()
        and not vals[:, 0].any() and not vals[:, -1].any())
    return Field(grid, vals, dirichlet_clean=clean)


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.shape), dirichlet_clean=True)


def enforce_dirichlet(fld: Field) -> Field:
    """Zero the boundary layer; interior untouched. Idempotent."""
    vals = fld.values.copy()
    vals[0, :] = 0.0
    vals[-1, :] = 0.0
    vals[:, 0] = 0.0
    vals[:, -1] = 0.0
    return Field(fld.grid, vals, dirichlet_clean=True)
