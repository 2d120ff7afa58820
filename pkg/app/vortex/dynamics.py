"""Local induction dynamics of the filament.

Linear theory: each mode evolves as j_n(tau) = j_n exp(i omega_n tau) with
omega_n = n sqrt(n^2 - 1), provided conj(j_-n) = c(n) j_n. The nonlinear
curve obeys d_tau r = (1/R0) r' x r''; its tangent j = r'/R then evolves as
d_tau j = (R/R0) j x j'', so the linear clock runs at tau * R / R0.
"""

from __future__ import annotations

import cmath
import math
from typing import Optional, Tuple

import numpy as np
import structlog

from app.config import settings
from app.errors import BlowUpError, StabilityError
from app.models import (
    FilamentState,
    ModeEvolution,
    ModeMap,
    NonlinearRun,
    SampledCurve,
    coupling_factor,
)
from app.vortex.filament import (
    antiderivative,
    arc_length,
    curve_tangents,
    spectral_derivative,
    tangent_field,
    wavenumbers,
    xi_grid,
)
from app.vortex.impulse import impulse_from_curve

logger = structlog.get_logger()

RK4_IMAGINARY_LIMIT = 2.0 * math.sqrt(2.0)

__all__ = [
    "coupling_factor",
    "dispersion",
    "evolve_modes",
    "propagate",
    "linearized_rhs",
    "linear_stability_bound",
    "evolve_linearized_pde",
    "nonlinear_stability_bound",
    "evolve_nonlinear",
    "resample_uniform_arclength",
    "linear_deviation",
]


def dispersion(n: int) -> float:
    """omega_n = n sqrt(n^2 - 1); zero for |n| <= 1, odd in n."""
    if abs(n) <= 1:
        return 0.0
    return n * math.sqrt(n * n - 1)


def evolve_modes(modes: ModeMap, tau: float) -> ModeMap:
    """Exact linear propagator: a phase rotation per mode."""
    return {n: a * cmath.exp(1j * dispersion(n) * tau) for n, a in modes.items()}


def propagate(modes: ModeMap, tau: float) -> ModeEvolution:
    return ModeEvolution(initial=dict(modes), tau=tau, evolved=evolve_modes(modes, tau))


def _second_derivative(values: np.ndarray) -> np.ndarray:
    k = wavenumbers(values.shape[0])
    return np.fft.ifft(-(k**2) * np.fft.fft(values)).real


def linearized_rhs(
    j_rho: np.ndarray, j_phi: np.ndarray, j_z: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linearized LIE in the cylindrical basis; the phi-rate is identically zero."""
    d_rho = j_z + _second_derivative(j_z)
    d_z = -(_second_derivative(j_rho) - 2.0 * spectral_derivative(j_phi))
    return d_rho, np.zeros_like(j_phi), d_z


def linear_stability_bound(N: int, time_scale: float = 1.0) -> float:
    """Largest RK4 step for the discrete linearized operator on N points."""
    k = N // 2
    omega_max = time_scale * k * math.sqrt(k * k - 1) if k > 1 else time_scale
    return RK4_IMAGINARY_LIMIT / omega_max


def _rk4(rhs, state, dt):
    k1 = rhs(state)
    k2 = rhs(state + 0.5 * dt * k1)
    k3 = rhs(state + 0.5 * dt * k2)
    k4 = rhs(state + dt * k3)
    return state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _steps(tau: float, dt: float) -> Tuple[int, float]:
    if tau == 0:
        return 0, dt
    count = max(1, math.ceil(abs(tau) / dt - 1e-9))
    return count, tau / count


def evolve_linearized_pde(
    field: np.ndarray, tau: float, dt: Optional[float] = None
) -> np.ndarray:
    """Advance sampled sj = j_rho + i j_z by tau with spectral derivatives and RK4.

    Integrated in real form (j_rho, j_z) because the conj(sj) term couples
    +n and -n; j_phi stays at zero.
    """
    field = np.asarray(field, dtype=complex)
    N = field.shape[0]
    bound = linear_stability_bound(N)
    if dt is None:
        dt = settings.rk4_safety * bound
    elif dt > bound:
        raise StabilityError(dt, bound)

    def rhs(y: np.ndarray) -> np.ndarray:
        j_rho, j_z = y
        d_rho, _, d_z = linearized_rhs(j_rho, np.zeros_like(j_rho), j_z)
        return np.stack([d_rho, d_z])

    y = np.stack([field.real, field.imag])
    count, step = _steps(tau, dt)
    for _ in range(count):
        y = _rk4(rhs, y, step)
    logger.debug("linearized_run_finished", steps=count, dt=step, points=N)
    return y[0] + 1j * y[1]


def _lie_rhs(points: np.ndarray, R0: float) -> np.ndarray:
    d1 = spectral_derivative(points, 1)
    d2 = spectral_derivative(points, 2)
    return np.cross(d1, d2) / R0


def nonlinear_stability_bound(points: np.ndarray, R0: float) -> float:
    radius = float(np.linalg.norm(spectral_derivative(points), axis=1).max())
    return linear_stability_bound(points.shape[0], time_scale=radius / R0)


def _evaluate_series(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    N = coeffs.shape[0]
    k = wavenumbers(N)
    if N % 2 == 0:
        coeffs = coeffs.copy()
        coeffs[N // 2] = 0.0
    basis = np.exp(1j * np.outer(x, k))
    return (basis @ coeffs).real


def resample_uniform_arclength(points: np.ndarray, iterations: int = 8) -> np.ndarray:
    """Re-place the nodes at equal arclength by trigonometric interpolation,
    keeping node 0 fixed."""
    N = points.shape[0]
    speed = np.linalg.norm(spectral_derivative(points), axis=1)
    speed_coeffs = np.fft.fft(speed) / N
    total = 2.0 * np.pi * speed_coeffs[0].real
    arc = antiderivative(speed)
    periodic = arc - speed_coeffs[0].real * xi_grid(N)
    periodic_coeffs = np.fft.fft(periodic) / N

    targets = total * np.arange(N) / N
    xi = xi_grid(N).copy()
    for _ in range(iterations):
        s = speed_coeffs[0].real * xi + _evaluate_series(periodic_coeffs, xi)
        xi -= (s - targets) / _evaluate_series(speed_coeffs, xi)
    point_coeffs = np.fft.fft(points, axis=0) / N
    return np.stack(
        [_evaluate_series(point_coeffs[:, axis], xi) for axis in range(3)], axis=1
    )


def _record(run: NonlinearRun, t: float, points: np.ndarray, R: float) -> None:
    run.times.append(t)
    run.curves.append(
        SampledCurve(xi=xi_grid(points.shape[0]), points=points.copy(),
                     tangents=curve_tangents(points, R), R=R)
    )
    run.lengths.append(arc_length(points))
    run.impulses.append(impulse_from_curve(points, R))
    run.centroids.append(points.mean(axis=0))


def evolve_nonlinear(
    c: SampledCurve,
    tau: float,
    dt: Optional[float] = None,
    R0: float = 1.0,
    record_every: Optional[int] = None,
    reparam_every: Optional[int] = None,
    snapshots: Optional[int] = None,
) -> NonlinearRun:
    """Integrate d_tau r = (1/R0) r' x r'' with spectral xi-derivatives and RK4.

    The run is recorded at tau = 0 and then either every `record_every` steps
    or at `snapshots` evenly spaced times (never both).

    Raises BlowUpError (carrying the run so far) on non-finite or runaway
    states.
    """
    points = np.asarray(c.points, dtype=float)
    N = points.shape[0]
    if N < 64:
        raise ValueError(f"nonlinear runs need at least 64 points, got {N}")
    if c.R > 0.5 * R0:
        logger.warning("ring_not_thin", R=c.R, R0=R0)

    bound = nonlinear_stability_bound(points, R0)
    if dt is None:
        dt = settings.rk4_safety * bound
    elif dt > bound:
        raise StabilityError(dt, bound)
    if record_every and snapshots:
        raise ValueError("give record_every or snapshots, not both")
    count, step = _steps(tau, dt)
    if snapshots:
        if 0 < count < snapshots:
            count, step = snapshots, tau / snapshots
        marks = {round(k * count / snapshots) for k in range(1, snapshots + 1)}
    else:
        every = record_every or max(1, count // 100)
        marks = set(range(every, count + 1, every)) | {count}
    reparam_every = settings.reparam_every if reparam_every is None else reparam_every
    extent = float(np.ptp(points, axis=0).max())

    run = NonlinearRun()
    _record(run, 0.0, points, c.R)
    logger.info("nonlinear_run_started", points=N, steps=count, dt=step, tau=tau)

    def rhs(y: np.ndarray) -> np.ndarray:
        return _lie_rhs(y, R0)

    for i in range(1, count + 1):
        points = _rk4(rhs, points, step)
        if reparam_every and i % reparam_every == 0:
            points = resample_uniform_arclength(points)
        if not np.all(np.isfinite(points)) or np.ptp(points, axis=0).max() > (
            settings.blowup_factor * extent
        ):
            run.truncated = True
            run.message = f"blow-up at step {i} (tau={i * step:.6g})"
            logger.error("nonlinear_run_aborted", step=i, tau=i * step)
            raise BlowUpError(run.message, partial=run)
        if i in marks:
            _record(run, i * step, points, c.R)

    logger.info(
        "nonlinear_run_finished",
        steps=count,
        length_drift=run.length_drift(),
        drift_speed=run.drift_speed(),
    )
    return run


def linear_deviation(run: NonlinearRun, state: FilamentState, R0: float = 1.0) -> float:
    """max |j_nonlinear - j_linear| over the recorded times, comparing on the
    linear clock tau * R / R0."""
    worst = 0.0
    for t, curve in zip(run.times, run.curves):
        evolved = state.model_copy(
            update={"modes": evolve_modes(state.modes, t * state.R / R0)}
        )
        predicted = tangent_field(evolved, curve.size)
        worst = max(worst, float(np.abs(curve.tangents - predicted).max()))
    return worst
