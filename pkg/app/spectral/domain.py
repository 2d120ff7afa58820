"""Cross-section geometry and its discretization on a uniform lattice.

Every shape is reduced to a `Lattice`: the interior nodes plus, per node and
direction (E, W, N, S), the distance to the next node or to the boundary.
Geometric shapes supply exact boundary distances (Shortley-Weller arms);
masks put the Dirichlet wall on the cell faces, so the domain is exactly the
union of the cells and survives 2x2 refinement unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import structlog
from scipy import ndimage

from app.errors import ConnectivityError
from app.models import DiskDomain, MaskDomain, PolygonDomain, RectangleDomain

logger = structlog.get_logger()

Shape = Union[DiskDomain, RectangleDomain, PolygonDomain, MaskDomain]

# E, W, N, S
DIRECTIONS: Tuple[Tuple[int, int], ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))
_MIN_ARM = 1e-6


@dataclass(frozen=True)
class Lattice:
    """Interior nodes of a domain with their four stencil arms.

    `neighbors[i, d]` is the interior index reached in direction d, or -1
    when the arm ends on the boundary at distance `arms[i, d]`.
    """

    h: float
    inside: np.ndarray
    neighbors: np.ndarray
    arms: np.ndarray

    @property
    def size(self) -> int:
        return self.neighbors.shape[0]


def load_mask(path: Union[str, Path], cell_size: float) -> MaskDomain:
    """Read a mask file: one row of 0/1 characters per line; blank lines and
    lines starting with '#' are skipped."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [line.strip() for line in lines if line.strip() and not line.startswith("#")]
    logger.info("mask_loaded", path=str(path), rows=len(rows))
    return MaskDomain(rows=rows, cell_size=cell_size)


def resolve_mask(domain: MaskDomain, base_dir: Union[str, Path, None] = None) -> MaskDomain:
    """Mask with its rows filled in from the file or polygon source."""
    if domain.rows is not None:
        return domain
    if domain.polygon is not None:
        return rasterize_polygon(domain.polygon, domain.cell_size)
    path = Path(domain.file)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    return load_mask(path, domain.cell_size)


def mask_from_array(cells: np.ndarray, cell_size: float) -> MaskDomain:
    rows = ["".join("1" if v else "0" for v in row) for row in np.asarray(cells, dtype=bool)]
    return MaskDomain(rows=rows, cell_size=cell_size)


def _polygon_contains(vertices: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    for (x1, y1), (x2, y2) in zip(vertices, np.roll(vertices, -1, axis=0)):
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < x_cross)
    return inside


def rasterize_polygon(vertices, cell_size: float) -> MaskDomain:
    """Mask of the cells whose centres lie inside the polygon."""
    verts = np.asarray(vertices, dtype=float)
    (x0, y0), (x1, y1) = verts.min(axis=0), verts.max(axis=0)
    cols = int(np.ceil((x1 - x0) / cell_size))
    rows = int(np.ceil((y1 - y0) / cell_size))
    xc = x0 + (np.arange(cols) + 0.5) * cell_size
    yc = y1 - (np.arange(rows) + 0.5) * cell_size
    X, Y = np.meshgrid(xc, yc)
    return mask_from_array(_polygon_contains(verts, X, Y), cell_size)


def diameter(shape: Shape) -> float:
    if isinstance(shape, DiskDomain):
        return 2.0 * shape.radius
    if isinstance(shape, RectangleDomain):
        return float(np.hypot(shape.a, shape.b))
    if isinstance(shape, PolygonDomain):
        v = np.asarray(shape.vertices, dtype=float)
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))
    cells = shape.array()
    return float(np.hypot(*cells.shape) * shape.cell_size)


def check_scale(shape: Shape) -> None:
    if isinstance(shape, DiskDomain) and shape.radius > 1.0:
        logger.warning("domain_exceeds_scale_length", radius=shape.radius)


def refine_mask(shape: MaskDomain, times: int = 1) -> MaskDomain:
    cells = shape.array()
    for _ in range(times):
        cells = np.kron(cells, np.ones((2, 2), dtype=bool))
    return mask_from_array(cells, shape.cell_size / 2**times)


def require_connected(inside: np.ndarray) -> None:
    _, components = ndimage.label(inside)
    if components != 1:
        raise ConnectivityError(components)


def _geometric_lattice(shape: Shape, h: float):
    """Node coordinates, inside flags and a boundary-distance function."""
    if isinstance(shape, DiskDomain):
        rho = shape.radius
        K = int(np.ceil(rho / h)) + 1
        ticks = np.arange(-K, K + 1) * h
        X, Y = np.meshgrid(ticks, ticks, indexing="ij")
        inside = X**2 + Y**2 < rho**2

        def boundary(x, y, dx, dy):
            along, across = (x, y) if dx else (y, x)
            sign = dx or dy
            half = np.sqrt(np.maximum(rho**2 - across**2, 0.0))
            return half - sign * along

        return X, Y, inside, boundary

    if isinstance(shape, RectangleDomain):
        a, b = shape.a, shape.b
        xs = np.arange(int(np.floor(a / h)) + 2) * h
        ys = np.arange(int(np.floor(b / h)) + 2) * h
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        inside = (X > 0) & (X < a) & (Y > 0) & (Y < b)

        def boundary(x, y, dx, dy):
            if dx:
                return a - x if dx > 0 else x
            return b - y if dy > 0 else y

        return X, Y, inside, boundary

    verts = np.asarray(shape.vertices, dtype=float)
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    xs = np.arange(np.floor(lo[0] / h) - 1, np.ceil(hi[0] / h) + 2) * h
    ys = np.arange(np.floor(lo[1] / h) - 1, np.ceil(hi[1] / h) + 2) * h
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = _polygon_contains(verts, X, Y)

    def boundary(x, y, dx, dy):
        best = np.full(np.shape(x), np.inf)
        for (x1, y1), (x2, y2) in zip(verts, np.roll(verts, -1, axis=0)):
            ex, ey = x2 - x1, y2 - y1
            denom = dx * ey - dy * ex
            if denom == 0:
                continue
            # r(t) = p + t d meets the edge q(s) = v1 + s e
            t = ((x1 - x) * ey - (y1 - y) * ex) / denom
            s = ((x1 - x) * dy - (y1 - y) * dx) / denom
            # t == 0: the node sits on this edge and gets dropped
            hit = (t >= 0) & (s >= 0) & (s <= 1)
            best = np.where(hit & (t < best), t, best)
        return best

    return X, Y, inside, boundary


def build_lattice(shape: Shape, h: float) -> Lattice:
    """Interior nodes and stencil arms of `shape` on a lattice of spacing h."""
    if isinstance(shape, MaskDomain):
        return _mask_lattice(shape, h)

    X, Y, inside, boundary = _geometric_lattice(shape, h)
    # drop nodes sitting (numerically) on the boundary
    for dx, dy in DIRECTIONS:
        near = boundary(X, Y, dx, dy) < _MIN_ARM * h
        inside &= ~near
    return _assemble(inside, h, X, Y, boundary)


def _mask_lattice(shape: MaskDomain, h: float) -> Lattice:
    refinements = np.log2(shape.cell_size / h)
    if refinements < -1e-9 or abs(refinements - round(refinements)) > 1e-9:
        raise ValueError(
            f"mask grids refine by halving: h={h} is not cell_size/2^p for cell_size={shape.cell_size}"
        )
    if round(refinements):
        shape = refine_mask(shape, int(round(refinements)))
    # transpose so axis 0 is x (columns) and axis 1 is y (rows, flipped)
    inside = np.pad(shape.array()[::-1].T, 1)

    def boundary(x, y, dx, dy):
        return np.full(np.shape(x), 0.5 * h)

    return _assemble(inside, h, None, None, boundary)


def _assemble(inside: np.ndarray, h: float, X, Y, boundary) -> Lattice:
    require_connected(inside)
    index = -np.ones(inside.shape, dtype=int)
    index[inside] = np.arange(int(inside.sum()))
    ii, jj = np.nonzero(inside)
    count = len(ii)
    neighbors = -np.ones((count, 4), dtype=int)
    arms = np.full((count, 4), h)
    for d, (dx, dy) in enumerate(DIRECTIONS):
        ni, nj = ii + dx, jj + dy
        target = index[ni, nj]
        neighbors[:, d] = target
        outside = target < 0
        if outside.any():
            xs = X[ii[outside], jj[outside]] if X is not None else np.zeros(outside.sum())
            ys = Y[ii[outside], jj[outside]] if Y is not None else np.zeros(outside.sum())
            arms[outside, d] = np.clip(boundary(xs, ys, dx, dy), _MIN_ARM * h, h)
    return Lattice(h=h, inside=inside, neighbors=neighbors, arms=arms)
