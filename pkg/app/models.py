from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import settings

Vector3 = Tuple[float, float, float]
ModeMap = Dict[int, complex]


def coupling_factor(n: int) -> float:
    """2(n*sqrt(n^2-1) - n^2 + 1/2); links conj(j_{-n}) to j_n.

    |n| <= 1 collapses to the closure relations (1 for n=0, -1 for n=+-1).
    Evaluated as -(|n| + sqrt(n^2-1))^(-2 sign n), which avoids the
    cancellation of the expanded form for large n.
    """
    if n == 0:
        return 1.0
    g = abs(n) + math.sqrt(n * n - 1)
    return -1.0 / (g * g) if n > 0 else -(g * g)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class PhysicalConstants(_Frozen):
    """Dimensional constants of the model; lengths R0 and L share one unit."""

    rho0: float = Field(1.0, gt=0)
    v0: float = Field(1.0, gt=0)
    R0: float = Field(1.0, gt=0)
    L: float = Field(1.0, gt=0)
    mu0: float = Field(1.0, gt=0)
    hbar: float = Field(1e-3, gt=0)
    epsilon: float = Field(0.0, ge=0, lt=1)


class DerivedScales(_Frozen):
    t0: float
    E0: float
    mu_tilde0: float
    alpha: float
    beta: float
    mu0: float
    R0: float

    def mu_v(self, R: float) -> float:
        """Effective vortex mass mu0 (R/R0)^2."""
        if R <= 0:
            raise ValueError("R must be positive")
        return self.mu0 * (R / self.R0) ** 2


class FilamentState(_Frozen):
    """Closed filament: offset q, radius R, circulation Gamma and the
    excited Fourier modes of the complex tangent perturbation j_rho + i j_z.

    Absent indices mean zero amplitude. Closure of the low modes is not
    enforced here (see `check_closure`); the coupling of each (n, -n) pair
    with |n| >= 2 is.
    """

    q: Vector3 = (0.0, 0.0, 0.0)
    R: float = Field(gt=0)
    Gamma: float = 0.0
    epsilon: float = Field(0.0, ge=0, lt=1)
    modes: ModeMap = Field(default_factory=dict)

    @field_validator("modes")
    @classmethod
    def _cutoff(cls, modes: ModeMap) -> ModeMap:
        cutoff = settings.mode_cutoff
        too_high = sorted(n for n in modes if abs(n) > cutoff)
        if too_high:
            raise ValueError(f"mode indices {too_high} exceed the cutoff {cutoff}")
        return {n: complex(a) for n, a in sorted(modes.items()) if a != 0}

    @model_validator(mode="after")
    def _coupling(self) -> "FilamentState":
        tol = settings.coupling_tolerance
        for n in {abs(k) for k in self.modes if abs(k) >= 2}:
            j_n = self.modes.get(n, 0j)
            j_m = self.modes.get(-n, 0j)
            residual = abs(j_m.conjugate() - coupling_factor(n) * j_n)
            if residual > tol * max(1.0, abs(j_n), abs(j_m)):
                raise ValueError(
                    f"modes {n} and {-n} violate the coupling relation "
                    f"(residual {residual:.3e})"
                )
        return self

    @property
    def mode_cutoff(self) -> int:
        return max((abs(n) for n in self.modes), default=0)


class FilamentRecord(BaseModel):
    """Serialized filament: modes as [index, re, im] triples."""

    q: Vector3
    R: float
    Gamma: float
    epsilon: float
    modes: List[Tuple[int, float, float]] = Field(default_factory=list)

    @classmethod
    def from_state(cls, state: FilamentState) -> "FilamentRecord":
        return cls(
            q=state.q,
            R=state.R,
            Gamma=state.Gamma,
            epsilon=state.epsilon,
            modes=[(n, a.real, a.imag) for n, a in sorted(state.modes.items())],
        )

    def to_state(self) -> FilamentState:
        return FilamentState(
            q=self.q,
            R=self.R,
            Gamma=self.Gamma,
            epsilon=self.epsilon,
            modes={n: complex(re, im) for n, re, im in self.modes},
        )


@dataclass(frozen=True)
class SampledCurve:
    """Curve r(xi_i) and tangent j(xi_i) on the grid xi_i = 2 pi i / N."""

    xi: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    R: float

    @property
    def size(self) -> int:
        return len(self.xi)


@dataclass(frozen=True)
class ModeEvolution:
    initial: ModeMap
    tau: float
    evolved: ModeMap


@dataclass
class NonlinearRun:
    """Trajectory of an LIE run plus per-output diagnostics."""

    times: List[float] = field(default_factory=list)
    curves: List[SampledCurve] = field(default_factory=list)
    lengths: List[float] = field(default_factory=list)
    impulses: List[np.ndarray] = field(default_factory=list)
    centroids: List[np.ndarray] = field(default_factory=list)
    truncated: bool = False
    message: str = ""

    @property
    def final(self) -> SampledCurve:
        return self.curves[-1]

    def length_drift(self) -> float:
        return max(abs(x - self.lengths[0]) for x in self.lengths) / self.lengths[0]

    def drift_speed(self) -> float:
        """Mean axial speed of the centroid over the run."""
        if len(self.times) < 2:
            return 0.0
        dz = self.centroids[-1][2] - self.centroids[0][2]
        return float(dz / (self.times[-1] - self.times[0]))


class ImpulseResult(_Frozen):
    f: Vector3
    p_tilde: Vector3
    p_z: float
    p_z_classic: float
    p_z_disagreement: float
    p_perp: complex
    p_perp_classic: complex


# Cross-section domains; lengths in units of R0.


class DiskDomain(_Frozen):
    shape: Literal["disk"] = "disk"
    radius: float = Field(1.0, gt=0)


class RectangleDomain(_Frozen):
    shape: Literal["rectangle"] = "rectangle"
    a: float = Field(gt=0)
    b: float = Field(gt=0)


class PolygonDomain(_Frozen):
    shape: Literal["polygon"] = "polygon"
    vertices: List[Tuple[float, float]] = Field(min_length=3)


class MaskDomain(_Frozen):
    """Union of the square cells marked '1'; row 0 is the top row.

    Cells come from `rows`, a mask `file` or a `polygon` rasterized at
    `cell_size`.
    """

    shape: Literal["mask"] = "mask"
    rows: Optional[List[str]] = None
    file: Optional[str] = None
    polygon: Optional[List[Tuple[float, float]]] = Field(None, min_length=3)
    cell_size: float = Field(gt=0)

    @field_validator("rows")
    @classmethod
    def _binary_rows(cls, rows: Optional[List[str]]) -> Optional[List[str]]:
        if rows is None:
            return rows
        rows = [row.strip() for row in rows if row.strip()]
        if not rows:
            raise ValueError("mask has no rows")
        if len({len(row) for row in rows}) != 1:
            raise ValueError("mask rows have different lengths")
        if any(ch not in "01" for row in rows for ch in row):
            raise ValueError("mask rows may only contain '0' and '1'")
        return rows

    @model_validator(mode="after")
    def _one_source(self) -> "MaskDomain":
        sources = [s for s in (self.rows, self.file, self.polygon) if s is not None]
        if len(sources) != 1:
            raise ValueError("mask needs exactly one of 'rows', 'file' or 'polygon'")
        return self

    def array(self) -> np.ndarray:
        if self.rows is None:
            raise ValueError("mask rows not loaded; use resolve_mask() first")
        return np.array([[ch == "1" for ch in row] for row in self.rows], dtype=bool)


DomainSpec = Annotated[
    Union[DiskDomain, RectangleDomain, PolygonDomain, MaskDomain],
    Field(discriminator="shape"),
]


@dataclass(frozen=True)
class EigenResult:
    """Ascending Dirichlet eigenvalues lambda_m^2 of -Laplacian (m = 1..M)."""

    lambda_sq: np.ndarray
    error_estimate: np.ndarray
    multiplicity: np.ndarray
    method: Literal["analytic", "grid"]

    @property
    def lambdas(self) -> np.ndarray:
        return np.sqrt(self.lambda_sq)

    def __len__(self) -> int:
        return len(self.lambda_sq)


class QuantumNumbers(_Frozen):
    n: int = Field(ge=0)
    m: int = Field(ge=1)
    k: int = Field(ge=0)

    @property
    def sector(self) -> str:
        return f"H({self.n},{self.m},{self.k})"


class CirculationLevel(_Frozen):
    qn: QuantumNumbers
    lam: float
    gamma_exact: float
    gamma_series: float
    base: float
    form_factor: float
    fine_structure: float
    residual: float
    level_index: float
    multiplicity: int = 1
    warnings: Tuple[str, ...] = ()

    @property
    def sector(self) -> str:
        return self.qn.sector
