"""Hydrodynamic impulse of the filament and the circulation constraint.

f = 1/2 iint [xi - eta] j(eta) x j(xi) d xi d eta. Doing the eta integral
against the kernel (-1 on eta > xi) leaves f = 1/2 int P(xi) x j(xi) d xi with
P the running integral of j, which is what is evaluated here. For the base
ring f = (0, 0, pi).

Sign convention: with e_rho = (cos xi, sin xi, 0) the transverse impulse of
a closed perturbed ring is f_x + i f_y = -2 pi eps j_-1 + O(eps^2); the
classical formula p~ = 2 pi rho0 R^2 Gamma j_-1 has the same modulus and
is reported alongside (only |p|^2 enters Phi_Gamma).
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
import structlog

from app.config import settings
from app.models import FilamentState, ImpulseResult, PhysicalConstants
from app.scales import derive_scales
from app.vortex.filament import antiderivative, spectral_derivative, tangent_field

logger = structlog.get_logger()


def _default_points(state: FilamentState, N: Optional[int]) -> int:
    return N or max(settings.quadrature_points, 4 * max(1, state.mode_cutoff))


def impulse_of_tangent(tangents: np.ndarray) -> np.ndarray:
    P = antiderivative(tangents)
    return 0.5 * 2.0 * np.pi * np.cross(P, tangents).mean(axis=0)


def impulse_f(state: FilamentState, N: Optional[int] = None) -> np.ndarray:
    return impulse_of_tangent(tangent_field(state, _default_points(state, N)))


def impulse_from_curve(points: np.ndarray, R: float) -> np.ndarray:
    """Same functional evaluated on a sampled closed curve, f = (1/2R^2) int r x r'."""
    tangents = spectral_derivative(points) / R
    relative = (points - points[0]) / R
    return 0.5 * 2.0 * np.pi * np.cross(relative, tangents).mean(axis=0)


def momentum(
    state: FilamentState, c: PhysicalConstants, N: Optional[int] = None
) -> ImpulseResult:
    """p~ = rho0 R^2 Gamma f, with the axial and transverse parts also given by
    their closed forms for comparison."""
    if state.R > 0.5 * c.R0:
        logger.warning("ring_not_thin", R=state.R, R0=c.R0)
    f = impulse_f(state, N)
    scale = c.rho0 * state.R**2 * state.Gamma
    p_tilde = scale * f
    p_z_classic = math.pi * scale
    disagreement = (
        abs(p_tilde[2] - p_z_classic) / abs(p_z_classic) if p_z_classic else 0.0
    )
    j_minus1 = state.modes.get(-1, 0j)
    transverse = complex(p_tilde[0], p_tilde[1])
    p_perp = transverse / state.epsilon if state.epsilon > 0 else 0j
    logger.debug("momentum_evaluated", p_z=float(p_tilde[2]), disagreement=disagreement)
    return ImpulseResult(
        f=tuple(float(x) for x in f),
        p_tilde=tuple(float(x) for x in p_tilde),
        p_z=float(p_tilde[2]),
        p_z_classic=p_z_classic,
        p_z_disagreement=float(disagreement),
        p_perp=p_perp,
        p_perp_classic=2.0 * math.pi * scale * j_minus1,
    )


def _alpha(c: PhysicalConstants) -> float:
    return derive_scales(c).alpha


def phi_gamma(
    p: Sequence[float],
    j_minus1: complex,
    Gamma: float,
    c: PhysicalConstants,
    R: float,
) -> float:
    """Phi_Gamma = |p|^2 - alpha^2 pi^2 rho0^2 Gamma^2 R^4 (1 + 4 eps^2 |j_-1|^2).

    `p` is the full 3-vector, so its squared norm already equals
    p_z^2 + eps^2 |sp|^2.
    """
    alpha = _alpha(c)
    p = np.asarray(p, dtype=float)
    weight = 1.0 + 4.0 * c.epsilon**2 * abs(j_minus1) ** 2
    return float(p @ p - (alpha * math.pi * c.rho0 * Gamma * R**2) ** 2 * weight)


def solve_gamma_classical(
    p: Sequence[float], j_minus1: complex, c: PhysicalConstants, R: float
) -> float:
    """Non-negative root of Phi_Gamma = 0; zero momentum gives Gamma = 0."""
    norm = float(np.linalg.norm(np.asarray(p, dtype=float)))
    if norm == 0.0:
        return 0.0
    alpha = _alpha(c)
    weight = math.sqrt(1.0 + 4.0 * c.epsilon**2 * abs(j_minus1) ** 2)
    return norm / (alpha * math.pi * c.rho0 * R**2 * weight)
