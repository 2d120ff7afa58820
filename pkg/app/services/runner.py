"""Config-driven commands behind the CLI.

Each `cmd_*` validates what it needs up front, writes its tables through an
`OutputWriter` and returns a JSON-ready summary.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import structlog
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.config import settings
from app.errors import BlowUpError, ConfigError, IncompleteSpectrumError, VortexError
from app.models import (
    DiskDomain,
    DomainSpec,
    EigenResult,
    FilamentState,
    MaskDomain,
    PhysicalConstants,
    RectangleDomain,
    Vector3,
)
from app.scales import bridge_ratio, derive_scales, momentum_uncertainty
from app.services.output import (
    OutputWriter,
    curve_frame,
    diagnostics_frame,
    deviation_frame,
    dispersion_frame,
    eigen_frame,
    histogram_frame,
    levels_frame,
)
from app.spectral.domain import require_connected, resolve_mask
from app.spectral.eigen import eigen_analytic, eigen_grid
from app.spectral.levels import (
    correction_bound,
    enumerate_levels,
    k_limit,
    peak_histogram,
)
from app.vortex.dynamics import (
    dispersion,
    evolve_linearized_pde,
    evolve_modes,
    evolve_nonlinear,
    linear_deviation,
)
from app.vortex.filament import (
    base_ring,
    excite_mode,
    mode_spectrum,
    reconstruct_curve,
    synthesize,
    tangent_field,
)

logger = structlog.get_logger()

MAX_EIGENVALUES = 4096
DEFAULT_SNAPSHOTS = 10


def _warn_if_thick(R: float, c: PhysicalConstants) -> None:
    if R > 0.5 * c.R0:
        logger.warning("ring_not_thin", R=R, R0=c.R0)


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExciteBlock(_Block):
    n: int
    re: float = 0.0
    im: float = 0.0


class FilamentBlock(_Block):
    q: Vector3 = (0.0, 0.0, 0.0)
    R: float = Field(gt=0)
    Gamma: float = 0.0
    epsilon: Optional[float] = Field(None, ge=0, lt=1)
    modes: List[Tuple[int, float, float]] = Field(default_factory=list)
    excite: List[ExciteBlock] = Field(default_factory=list)
    points: int = Field(128, ge=8)


class SimulationBlock(_Block):
    mode: Literal["nonlinear", "linearized"]
    tau: float = Field(ge=0)
    dt: Optional[float] = Field(None, gt=0)
    snapshots: Optional[int] = Field(None, ge=1)
    record_every: Optional[int] = Field(None, ge=1)
    reparam_every: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def _cadence(self) -> "SimulationBlock":
        if self.mode == "linearized":
            unused = [k for k in ("record_every", "reparam_every") if getattr(self, k) is not None]
            if unused:
                raise ValueError(f"{', '.join(unused)} only apply to nonlinear runs")
        elif self.snapshots is not None and self.record_every is not None:
            raise ValueError("give snapshots or record_every, not both")
        return self

    @property
    def snapshot_count(self) -> int:
        return self.snapshots or DEFAULT_SNAPSHOTS


class SweepBlock(_Block):
    n_max: int = Field(ge=1)
    k_max: Optional[int] = Field(None, ge=0)
    eigenvalues: int = Field(20, ge=1)
    bin_width: float = Field(0.01, gt=0)
    include_n0: bool = False
    ring_radius: Optional[float] = Field(None, gt=0)
    grid_h: Optional[float] = Field(None, gt=0)


class OutputBlock(_Block):
    directory: str = "out"
    formats: List[Literal["csv", "gnuplot"]] = Field(default_factory=lambda: ["csv", "gnuplot"])


class RunConfig(_Block):
    constants: PhysicalConstants = Field(default_factory=PhysicalConstants)
    domain: Optional[DomainSpec] = None
    filament: Optional[FilamentBlock] = None
    simulation: Optional[SimulationBlock] = None
    sweep: Optional[SweepBlock] = None
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode="after")
    def _single_epsilon(self) -> "RunConfig":
        fil = self.filament
        if fil is not None and fil.epsilon is not None and fil.epsilon != self.constants.epsilon:
            raise ValueError(
                f"filament.epsilon={fil.epsilon} disagrees with constants.epsilon="
                f"{self.constants.epsilon}"
            )
        return self

    def build_state(self) -> FilamentState:
        fil = self.filament
        if fil is None:
            raise ConfigError(["filament: block required"])
        state = base_ring(fil.q, fil.R, fil.Gamma, self.constants.epsilon)
        _warn_if_thick(fil.R, self.constants)
        if fil.modes:
            modes = {n: complex(re, im) for n, re, im in fil.modes}
            state = FilamentState.model_validate({**state.model_dump(), "modes": modes})
        for mode in fil.excite:
            state = excite_mode(state, mode.n, complex(mode.re, mode.im))
        return state


def _format_errors(exc: ValidationError) -> List[str]:
    return [
        f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
        for err in exc.errors()
    ]


def load_config(path: Path) -> RunConfig:
    """Parse and fully validate a YAML run config; every problem found is
    reported in one ConfigError."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError([f"{path}: {e}"]) from e
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from e

    problems: List[str] = []
    if isinstance(config.domain, MaskDomain):
        try:
            mask = resolve_mask(config.domain, base_dir=path.parent)
            require_connected(mask.array())
            config = config.model_copy(update={"domain": mask})
        except (OSError, ValidationError, VortexError) as e:
            problems.append(f"domain: {e}")

    if config.filament is not None:
        try:
            state = config.build_state()
            required = 4 * max(1, state.mode_cutoff)
            if config.filament.points < required:
                problems.append(f"filament.points: need at least {required} for the mode cutoff")
        except ValidationError as e:
            problems += [f"filament.{msg}" for msg in _format_errors(e)]
        except VortexError as e:
            problems.append(f"filament: {e}")
        if (
            config.simulation is not None
            and config.simulation.mode == "nonlinear"
            and config.filament.points < 64
        ):
            problems.append("filament.points: nonlinear runs need at least 64")

    if problems:
        raise ConfigError(problems)
    logger.info("config_loaded", path=str(path), blocks=sorted(raw))
    return config


def _require(config: RunConfig, *blocks: str) -> None:
    missing = [f"{name}: block required" for name in blocks if getattr(config, name) is None]
    if missing:
        raise ConfigError(missing)


def cmd_validate(config: RunConfig) -> Dict[str, Any]:
    return {
        "valid": True,
        "blocks": [
            name for name in ("domain", "filament", "simulation", "sweep")
            if getattr(config, name) is not None
        ],
    }


def cmd_dispersion(
    n_min: int, n_max: int, writer: Optional[OutputWriter] = None
) -> Dict[str, Any]:
    ns = list(range(n_min, n_max + 1))
    omegas = [dispersion(n) for n in ns]
    if writer is not None:
        frame = dispersion_frame(ns, omegas)
        writer.csv("dispersion.csv", frame)
        writer.gnuplot("dispersion.dat", frame)
        writer.manifest("dispersion")
    return {"n": ns, "omega": omegas}


def _simulate_linearized(config: RunConfig, state: FilamentState, writer: OutputWriter):
    sim, N = config.simulation, config.filament.points
    tangent_field(state, N)  # resolution check
    initial = synthesize(state.modes, N)
    current = initial
    times = np.linspace(0.0, sim.tau, sim.snapshot_count + 1)
    rows = [(0.0, 0.0, float(np.abs(initial).max(initial=0.0)))]
    for start, stop in zip(times[:-1], times[1:]):
        current = evolve_linearized_pde(current, stop - start, sim.dt)
        exact = synthesize(evolve_modes(state.modes, stop), N)
        rows.append((float(stop), float(np.abs(current - exact).max()),
                     float(np.abs(current).max())))

    diagnostics = np.array(rows)
    writer.csv("diagnostics.csv", deviation_frame(diagnostics))
    scale = max(1.0, float(np.abs(current).max(initial=0.0)))
    modes = {
        n: a for n, a in mode_spectrum(current, threshold=1e-12 * scale).items()
        if abs(n) <= settings.mode_cutoff
    }
    final = FilamentState.model_validate({**state.model_dump(), "modes": modes})
    writer.state("final_state.json", final)
    writer.manifest("simulate")
    return {
        "mode": "linearized",
        "points": N,
        "tau": sim.tau,
        "max_deviation": float(diagnostics[:, 1].max()),
    }


def _simulate_nonlinear(config: RunConfig, state: FilamentState, writer: OutputWriter):
    sim, N, R0 = config.simulation, config.filament.points, config.constants.R0
    curve = reconstruct_curve(state, N)
    try:
        run = evolve_nonlinear(
            curve, sim.tau, dt=sim.dt, R0=R0,
            record_every=sim.record_every, reparam_every=sim.reparam_every,
            snapshots=sim.snapshots,
        )
    except BlowUpError as e:
        run = e.partial
        writer.csv("diagnostics.csv", diagnostics_frame(run))
        writer.csv("final_curve.csv", curve_frame(run.final.xi, run.final.points))
        writer.manifest("simulate", note=f"truncated: {run.message}")
        raise
    writer.csv("diagnostics.csv", diagnostics_frame(run))
    writer.csv("final_curve.csv", curve_frame(run.final.xi, run.final.points))
    writer.manifest("simulate")
    return {
        "mode": "nonlinear",
        "points": N,
        "tau": sim.tau,
        "length_drift": run.length_drift(),
        "drift_speed": run.drift_speed(),
        "drift_speed_circle": state.R**2 / R0,
        "linear_deviation": linear_deviation(run, state, R0) if state.modes else 0.0,
    }


def cmd_simulate(config: RunConfig, writer: OutputWriter) -> Dict[str, Any]:
    _require(config, "filament", "simulation")
    state = config.build_state()
    logger.info("simulation_started", mode=config.simulation.mode, modes=len(state.modes))
    if config.simulation.mode == "linearized":
        return _simulate_linearized(config, state, writer)
    return _simulate_nonlinear(config, state, writer)


def solve_domain(
    domain, M: int, force_grid: bool = False, grid_h: Optional[float] = None
) -> EigenResult:
    """Closed form for disk and rectangle unless a grid solve is forced."""
    if not force_grid and isinstance(domain, (DiskDomain, RectangleDomain)):
        return eigen_analytic(domain, M)
    return eigen_grid(domain, M, grid_h)


def cmd_eigen(
    config: RunConfig, writer: OutputWriter, force_grid: bool = False,
    grid_h: Optional[float] = None,
) -> Dict[str, Any]:
    _require(config, "domain")
    M = config.sweep.eigenvalues if config.sweep else 10
    grid_h = grid_h or (config.sweep.grid_h if config.sweep else None)
    eig = solve_domain(config.domain, M, force_grid, grid_h)
    writer.csv("eigenvalues.csv", eigen_frame(eig))
    writer.manifest("eigen")
    return {
        "method": eig.method,
        "count": len(eig),
        "lambda1_sq": float(eig.lambda_sq[0]),
        "max_error_estimate": float(eig.error_estimate.max()),
    }


def effective_radius(config: RunConfig) -> float:
    """Ring radius for the level sweep; mu_v Gamma / hbar does not depend on it."""
    sweep = config.sweep
    if sweep is not None and sweep.ring_radius:
        _warn_if_thick(sweep.ring_radius, config.constants)
        return sweep.ring_radius
    return config.filament.R if config.filament else config.constants.R0


def cmd_spectrum(
    config: RunConfig, writer: OutputWriter, force_grid: bool = False,
    grid_h: Optional[float] = None,
) -> Dict[str, Any]:
    _require(config, "domain", "sweep")
    c, sweep = config.constants, config.sweep
    grid_h = grid_h or sweep.grid_h
    R = effective_radius(config)

    M = sweep.eigenvalues
    while True:
        eig = solve_domain(config.domain, M, force_grid, grid_h)
        try:
            levels = enumerate_levels(
                c, R, eig, sweep.n_max, sweep.k_max, include_n0=sweep.include_n0
            )
            break
        except IncompleteSpectrumError:
            if eig.method != "analytic" or M >= MAX_EIGENVALUES:
                raise
            M *= 2
            logger.info("eigenvalue_count_extended", M=M)

    writer.csv("eigenvalues.csv", eigen_frame(eig))
    writer.csv("levels.csv", levels_frame(levels))
    summary: Dict[str, Any] = {
        "levels": len(levels),
        "eigenvalues": len(eig),
        "k_max": min(sweep.k_max, k_limit(c)) if sweep.k_max is not None else k_limit(c),
        "bridge_ratio": bridge_ratio(c),
        "momentum_uncertainty": momentum_uncertainty(c),
        "beta": derive_scales(c).beta,
    }
    if not levels:
        summary["note"] = "selection rules exclude every (n, m, k); level table is empty"
        writer.text("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
        writer.manifest("spectrum", note=summary["note"])
        return summary

    hist = peak_histogram(levels, sweep.bin_width)
    frame = histogram_frame(hist)
    if "csv" in config.output.formats:
        writer.csv("histogram.csv", frame)
    if "gnuplot" in config.output.formats:
        writer.gnuplot("histogram.dat", frame)

    bound = correction_bound(levels, c.epsilon)
    axial = np.array([lv.qn.n for lv in levels], dtype=float)
    positive = axial > 0
    relative = np.abs(hist.integer_offset[positive]) / axial[positive]
    sublevels: Dict[int, set] = {}
    for lv in levels:
        sublevels.setdefault(lv.qn.n, set()).add(round(lv.level_index, 12))
    summary.update(
        {
            "correction_bound": bound,
            "max_relative_offset": float(relative.max(initial=0.0)),
            "within_bound": bool(np.all(relative <= bound * (1.0 + 1e-9) + 1e-12)),
            "max_residual": max(lv.residual for lv in levels),
            "max_relative_residual": max(
                (lv.residual / lv.base for lv in levels if lv.base > 0), default=0.0
            ),
            "sublevels_per_n": {str(n): len(v) for n, v in sorted(sublevels.items())},
        }
    )
    writer.text("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    writer.manifest("spectrum")
    return summary


def run_directory(config: RunConfig, out: Optional[Path]) -> Path:
    return Path(out) if out is not None else Path(config.output.directory)


__all__ = [
    "RunConfig",
    "load_config",
    "cmd_validate",
    "cmd_dispersion",
    "cmd_simulate",
    "cmd_eigen",
    "cmd_spectrum",
    "solve_domain",
    "run_directory",
]
