"""Dirichlet eigenvalues lambda_m^2 of -Laplacian on the cross-section."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
import structlog
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigs, eigsh
from scipy.special import jn_zeros

from app.config import settings
from app.errors import ConvergenceError, UnsupportedShapeError
from app.models import DiskDomain, EigenResult, MaskDomain, RectangleDomain
from app.spectral.domain import Lattice, Shape, build_lattice, check_scale, diameter

logger = structlog.get_logger()


def group_multiplicity(resolutions: Sequence[np.ndarray], rtol: float) -> np.ndarray:
    """Size of the run of equal neighbours each sorted value belongs to.

    `resolutions` are aligned solves of one spectrum; neighbours count as
    equal only when they agree to `rtol` in every one of them.
    """
    arrays = [np.asarray(a, dtype=float) for a in resolutions]
    size = len(arrays[0])
    labels = np.zeros(size, dtype=int)
    for i in range(1, size):
        same = all(
            abs(a[i] - a[i - 1]) <= rtol * max(abs(a[i]), abs(a[i - 1])) for a in arrays
        )
        labels[i] = labels[i - 1] if same else labels[i - 1] + 1
    if not size:
        return labels
    return np.bincount(labels)[labels]


def _disk_values(radius: float, M: int) -> np.ndarray:
    cutoff = jn_zeros(0, M)[-1]
    values = list(jn_zeros(0, M))
    order = 1
    while True:
        zeros = jn_zeros(order, M)
        if zeros[0] > cutoff:
            break
        kept = zeros[zeros <= cutoff]
        values.extend(np.repeat(kept, 2))
        order += 1
    values = np.sort(np.asarray(values))[:M]
    return (values / radius) ** 2


def _rectangle_values(a: float, b: float, M: int) -> np.ndarray:
    i = np.arange(1, M + 1)
    grid = np.pi**2 * ((i[:, None] / a) ** 2 + (i[None, :] / b) ** 2)
    return np.sort(grid.ravel())[:M]


def eigen_analytic(d: Shape, M: int) -> EigenResult:
    """Closed-form spectrum: Bessel zeros on the disk, pi^2 (i^2/a^2 + j^2/b^2)
    on the rectangle."""
    if M < 1:
        raise ValueError("M must be at least 1")
    check_scale(d)
    if isinstance(d, DiskDomain):
        values = _disk_values(d.radius, M)
    elif isinstance(d, RectangleDomain):
        values = _rectangle_values(d.a, d.b, M)
    else:
        raise UnsupportedShapeError(
            f"no closed form for shape '{d.shape}'; use the grid solver"
        )
    return EigenResult(
        lambda_sq=values,
        error_estimate=np.zeros_like(values),
        multiplicity=group_multiplicity([values], 1e-12),
        method="analytic",
    )


def laplacian_matrix(lattice: Lattice) -> sparse.csr_matrix:
    """Shortley-Weller approximation of -Laplacian on the interior nodes."""
    arms = lattice.arms
    n = lattice.size
    rows, cols, vals = [list(range(n))], [list(range(n))], []
    east, west, north, south = arms.T
    vals.append(2.0 / (east * west) + 2.0 / (north * south))
    opposite = (1, 0, 3, 2)
    for d in range(4):
        target = lattice.neighbors[:, d]
        linked = target >= 0
        arm = arms[linked, d]
        other = arms[linked, opposite[d]]
        rows.append(np.nonzero(linked)[0])
        cols.append(target[linked])
        vals.append(-2.0 / (arm * (arm + other)))
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )


class GridEigenSolver:
    """Finite-difference Dirichlet eigen-solver with shift-invert ARPACK."""

    def __init__(self, tol: Optional[float] = None, maxiter: Optional[int] = None):
        self.tol = settings.eigen_tol if tol is None else tol
        self.maxiter = settings.eigen_maxiter if maxiter is None else maxiter

    def solve(self, d: Shape, M: int, h: float) -> np.ndarray:
        """Smallest M eigenvalues at a single resolution, ascending."""
        lattice = build_lattice(d, h)
        if lattice.size <= M + 1:
            raise ValueError(f"lattice has {lattice.size} nodes; too coarse for M={M}")
        A = laplacian_matrix(lattice)
        symmetric = abs(A - A.T).max() == 0
        v0 = np.ones(lattice.size)
        logger.info(
            "eigen_solve_started", nodes=lattice.size, h=h, M=M, symmetric=bool(symmetric)
        )
        try:
            if symmetric:
                values = eigsh(A, k=M, sigma=0.0, which="LM", v0=v0, tol=self.tol,
                               maxiter=self.maxiter, return_eigenvectors=False)
            else:
                values = eigs(A, k=M, sigma=0.0, which="LM", v0=v0, tol=self.tol,
                              maxiter=self.maxiter, return_eigenvectors=False)
        except ArpackNoConvergence as exc:
            found = len(exc.eigenvalues)
            logger.error("eigen_solve_failed", nodes=lattice.size, converged=found)
            raise ConvergenceError(
                f"ARPACK converged {found} of {M} eigenvalues at h={h}",
                iterations=self.maxiter,
            ) from exc
        values = np.sort(np.real(values))
        logger.info("eigen_solve_finished", h=h, lambda1_sq=float(values[0]))
        return values

    def richardson(self, d: Shape, M: int, h: float) -> EigenResult:
        """Solve at h and h/2 concurrently; extrapolate assuming O(h^2)."""
        with ThreadPoolExecutor(max_workers=2) as pool:
            coarse, fine = pool.map(lambda step: self.solve(d, M, step), (h, h / 2))
        extrapolated = (4.0 * fine - coarse) / 3.0
        order = np.argsort(extrapolated, kind="stable")
        extrapolated = extrapolated[order]
        error = (np.abs(coarse - fine) / 3.0)[order]
        # degenerate only when equal at both resolutions
        rtol = max(settings.degeneracy_rtol, 100.0 * self.tol)
        return EigenResult(
            lambda_sq=extrapolated,
            error_estimate=error,
            multiplicity=group_multiplicity([coarse[order], fine[order]], rtol),
            method="grid",
        )


grid_solver = GridEigenSolver()


def default_grid_h(d: Shape) -> float:
    if isinstance(d, MaskDomain):
        return d.cell_size
    return diameter(d) / settings.grid_cells_across


def eigen_grid(d: Shape, M: int, h: Optional[float] = None) -> EigenResult:
    """Grid eigenvalues with Richardson extrapolation from h and h/2."""
    if M < 1:
        raise ValueError("M must be at least 1")
    check_scale(d)
    h = h or default_grid_h(d)
    if diameter(d) / h < 32:
        raise ValueError(f"h={h} resolves fewer than 32 cells across the domain")
    return grid_solver.richardson(d, M, h)


def convergence_order(values: Sequence[float], exact: Optional[float] = None) -> float:
    """Observed order from successive halvings: against `exact` if given,
    otherwise from the last three values."""
    values = list(values)
    if exact is not None:
        e1, e2 = abs(values[-2] - exact), abs(values[-1] - exact)
    else:
        if len(values) < 3:
            raise ValueError("need three resolutions without an exact value")
        e1, e2 = abs(values[-3] - values[-2]), abs(values[-2] - values[-1])
    return math.log2(e1 / e2)
