"""Closed filament geometry.

The curve is r(xi) = q + R * integral_0^2pi [xi - eta] j(eta) d eta, where
[x] is the integer part of x / 2pi. On the principal range [0, 2pi)^2 the
kernel is 0 for eta <= xi and -1 for eta > xi, so

    r(xi) = q + R * (P(xi) - P(2pi)),    P(xi) = integral_0^xi j.

For a closed filament P(2pi) = 0 and r(0) = q. The tangent is
j = j0 + eps * (Re sj * e_rho + Im sj * e_z) with j0 = (-sin xi, cos xi, 0),
e_rho = (cos xi, sin xi, 0) and sj = sum_n j_n exp(i n xi).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import structlog

from app.config import settings
from app.errors import AliasingError, ConstraintError
from app.models import FilamentState, ModeMap, SampledCurve, coupling_factor

logger = structlog.get_logger()


def xi_grid(N: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(N) / N


def wavenumbers(N: int) -> np.ndarray:
    return np.fft.fftfreq(N, d=1.0 / N)


def base_ring(
    q0: Sequence[float] = (0.0, 0.0, 0.0),
    R: float = 1.0,
    Gamma: float = 0.0,
    epsilon: float = 0.0,
) -> FilamentState:
    """Unperturbed ring through q0: a circle of radius R centred at q0 - R e_x."""
    if R <= 0:
        raise ValueError(f"ring radius must be positive, got R={R}")
    return FilamentState(q=tuple(float(x) for x in q0), R=R, Gamma=Gamma, epsilon=epsilon)


def excite_mode(state: FilamentState, n: int, amplitude: complex) -> FilamentState:
    """Add j_n = amplitude together with the partner the equations of motion
    force on -n: the coupling relation for |n| >= 2, closure for |n| = 1,
    and j_0 must be real."""
    modes = dict(state.modes)
    amplitude = complex(amplitude)
    if n == 0:
        if amplitude.imag != 0:
            raise ConstraintError("j_0 must be real for a closed filament", amplitude.imag)
        modes[0] = modes.get(0, 0j) + amplitude
    else:
        modes[n] = modes.get(n, 0j) + amplitude
        # conj(j_-n) = c(n) j_n, c real
        modes[-n] = modes.get(-n, 0j) + (coupling_factor(n) * amplitude).conjugate()
    return FilamentState.model_validate({**state.model_dump(), "modes": modes})


def synthesize(modes: ModeMap, N: int) -> np.ndarray:
    """sj(xi_i) = sum_n j_n exp(i n xi_i) on the uniform grid."""
    coeffs = np.zeros(N, dtype=complex)
    for n, amp in modes.items():
        coeffs[n % N] += amp
    return np.fft.ifft(coeffs) * N


def _require_resolution(state: FilamentState, N: int) -> None:
    required = 4 * max(1, state.mode_cutoff)
    if N < required:
        raise AliasingError(N, required)


def frame(xi: np.ndarray):
    """(j0, e_rho, e_z) sampled at xi, each of shape (N, 3)."""
    zeros = np.zeros_like(xi)
    j0 = np.stack([-np.sin(xi), np.cos(xi), zeros], axis=1)
    e_rho = np.stack([np.cos(xi), np.sin(xi), zeros], axis=1)
    e_z = np.stack([zeros, zeros, np.ones_like(xi)], axis=1)
    return j0, e_rho, e_z


def tangent_field(state: FilamentState, N: int) -> np.ndarray:
    _require_resolution(state, N)
    xi = xi_grid(N)
    j0, e_rho, e_z = frame(xi)
    if not state.modes or state.epsilon == 0:
        return j0
    sj = synthesize(state.modes, N)
    return j0 + state.epsilon * (sj.real[:, None] * e_rho + sj.imag[:, None] * e_z)


def spectral_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """d^order/dxi^order of periodic samples along axis 0."""
    N = values.shape[0]
    k = wavenumbers(N)
    if order % 2 == 1 and N % 2 == 0:
        k = k.copy()
        k[N // 2] = 0.0
    factor = (1j * k) ** order
    shape = (N,) + (1,) * (values.ndim - 1)
    out = np.fft.ifft(factor.reshape(shape) * np.fft.fft(values, axis=0), axis=0)
    return out.real if np.isrealobj(values) else out


def antiderivative(values: np.ndarray) -> np.ndarray:
    """P(xi_i) = integral_0^xi_i of the trigonometric interpolant, along axis 0.

    Exact for band-limited samples, including a nonzero mean (linear growth).
    """
    N = values.shape[0]
    k = wavenumbers(N)
    coeffs = np.fft.fft(values, axis=0) / N
    mean = coeffs[0].real if np.isrealobj(values) else coeffs[0]
    safe_k = np.where(k == 0, 1.0, k)
    weights = np.where(k == 0, 0.0, 1.0 / (1j * safe_k))
    if N % 2 == 0:
        weights[N // 2] = 0.0
    shape = (N,) + (1,) * (values.ndim - 1)
    g = coeffs * weights.reshape(shape)
    periodic = np.fft.ifft(g, axis=0) * N - g.sum(axis=0)
    xi = xi_grid(N).reshape(shape)
    result = mean * xi + periodic
    return result.real if np.isrealobj(values) else result


def closure_residual(tangents: np.ndarray) -> np.ndarray:
    """integral_0^2pi j d xi by the (spectrally exact) trapezoidal rule."""
    return 2.0 * np.pi * tangents.mean(axis=0)


def check_closure(state: FilamentState, N: Optional[int] = None) -> np.ndarray:
    N = N or max(settings.quadrature_points, 4 * max(1, state.mode_cutoff))
    return closure_residual(tangent_field(state, N))


def reconstruct_curve(state: FilamentState, N: int) -> SampledCurve:
    tangents = tangent_field(state, N)
    residual = closure_residual(tangents)
    if np.linalg.norm(residual) > settings.closure_tolerance:
        logger.warning("closure_violated", residual=residual.tolist())
        raise ConstraintError(
            f"filament is not closed: integral of j = {residual.tolist()}", residual
        )
    P = antiderivative(tangents)
    # kernel [xi - eta]: -1 on eta > xi, i.e. -(P(2pi) - P(xi))
    points = np.asarray(state.q) + state.R * (P - residual)
    return SampledCurve(xi=xi_grid(N), points=points, tangents=tangents, R=state.R)


def curve_tangents(points: np.ndarray, R: float) -> np.ndarray:
    return spectral_derivative(points) / R


def arc_length(points: np.ndarray) -> float:
    speed = np.linalg.norm(spectral_derivative(points), axis=1)
    return float(2.0 * np.pi * speed.mean())


def perturbation_amplitude(tangents: np.ndarray):
    """Project j - j0 onto (e_rho, e_z): returns (sj samples, phi leakage)."""
    xi = xi_grid(tangents.shape[0])
    j0, e_rho, e_z = frame(xi)
    delta = tangents - j0
    sj = np.einsum("ij,ij->i", delta, e_rho) + 1j * np.einsum("ij,ij->i", delta, e_z)
    leak = np.einsum("ij,ij->i", delta, j0)
    return sj, leak


def mode_spectrum(field: np.ndarray, threshold: float = 0.0) -> ModeMap:
    """Fourier coefficients of a sampled sj, indices |n| < N/2."""
    N = field.shape[0]
    coeffs = np.fft.fft(field) / N
    k = wavenumbers(N).astype(int)
    return {
        int(n): complex(c)
        for n, c in zip(k, coeffs)
        if abs(n) < N / 2 and abs(c) > threshold
    }
