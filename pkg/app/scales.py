"""Derived scales and dimensionless groups of the vortex-in-cylinder model."""

from __future__ import annotations

from typing import Any, Mapping, Union

import structlog

from app.models import DerivedScales, PhysicalConstants

logger = structlog.get_logger()


def derive_scales(c: Union[PhysicalConstants, Mapping[str, Any]]) -> DerivedScales:
    """Time, energy and mass scales plus alpha = mu0/mu~0 and beta = hbar/(mu0 v0 R0).

    Accepts a raw mapping as well; it is validated first, so a bad field
    surfaces as a pydantic ValidationError naming it.
    """
    if not isinstance(c, PhysicalConstants):
        c = PhysicalConstants.model_validate(c)

    mu_tilde0 = c.rho0 * c.R0**2 * c.L
    return DerivedScales(
        t0=c.R0 / c.v0,
        E0=c.mu0 * c.v0**2 / 2.0,
        mu_tilde0=mu_tilde0,
        alpha=c.mu0 / mu_tilde0,
        beta=c.hbar / (c.mu0 * c.v0 * c.R0),
        mu0=c.mu0,
        R0=c.R0,
    )


def momentum_uncertainty(c: PhysicalConstants) -> dict:
    """Heisenberg floors on the momentum spread of a ring confined to the cylinder."""
    return {
        "dp_transverse": c.hbar / (2.0 * c.R0),
        "dp_axial": c.hbar / (2.0 * c.L),
    }


def bridge_ratio(c: PhysicalConstants) -> float:
    """Ratio of the |j_-1|^2 weight in the classical constraint, after the
    substitution j_-1 -> sqrt(hbar/(t0 E0)) a, to the a+a weight of the
    quantized constraint. Equals 1 when both are printed consistently.
    """
    s = derive_scales(c)
    classical = 4.0 * c.hbar / (s.t0 * s.E0)
    quantum = 8.0 * s.beta
    ratio = classical / quantum
    if abs(ratio - 1.0) > 1e-12:
        logger.warning("quantization_bridge_mismatch", ratio=ratio)
    return ratio
