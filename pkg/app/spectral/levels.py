"""Quantized circulation levels Gamma_{n,m,k} and the mu_v Gamma / hbar histogram.

The exact level is the positive root of

    hbar^2 [(pi n/L)^2 + eps^2 lam^2] = pi^2 alpha^2 rho0^2 Gamma^2 R^4 (1 + 8 eps^2 beta k),

and its expansion to first order in eps^2 is

    Gamma = (hbar n / mu_v) [1 + eps^2 (1/2 (L lam / pi n)^2 - 4 beta k)].

`lam` is always in inverse physical length here; eigenvalues computed on a
domain measured in units of R0 are divided by R0 in `enumerate_levels`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
import structlog

from app.errors import IncompleteSpectrumError
from app.models import CirculationLevel, EigenResult, PhysicalConstants, QuantumNumbers
from app.scales import derive_scales

logger = structlog.get_logger()


@dataclass(frozen=True)
class PeakHistogram:
    bin_width: float
    bin_center: np.ndarray
    count: np.ndarray
    states: np.ndarray
    level_index: np.ndarray
    integer_offset: np.ndarray
    nearest_offset: np.ndarray


def k_limit(c: PhysicalConstants) -> int:
    """Largest k with 8 hbar k <= mu0 v0 R0."""
    beta = derive_scales(c).beta
    return int(math.floor(1.0 / (8.0 * beta) * (1.0 + 1e-12)))


def selection_violations(qn: QuantumNumbers, lam: float, c: PhysicalConstants) -> Tuple[str, ...]:
    problems = []
    if lam > math.pi * qn.n / c.L * (1.0 + 1e-12):
        problems.append(f"lambda={lam:.6g} exceeds pi*n/L={math.pi * qn.n / c.L:.6g}")
    if qn.k > k_limit(c):
        problems.append(f"k={qn.k} exceeds mu0*v0*R0/(8*hbar)")
    return tuple(problems)


def gamma_exact(qn: QuantumNumbers, lam: float, c: PhysicalConstants, R: float) -> float:
    """Positive root of the level equation; selection-rule violations only warn."""
    if R <= 0:
        raise ValueError("R must be positive")
    problems = selection_violations(qn, lam, c)
    if problems:
        logger.warning("selection_rule_violated", sector=qn.sector, problems=list(problems))
    s = derive_scales(c)
    eps2 = c.epsilon**2
    numerator = math.sqrt((math.pi * qn.n / c.L) ** 2 + eps2 * lam**2)
    denominator = math.sqrt(1.0 + 8.0 * eps2 * s.beta * qn.k)
    return c.hbar / (math.pi * s.alpha * c.rho0 * R**2) * numerator / denominator


def level_index(gamma: float, c: PhysicalConstants, R: float) -> float:
    """Dimensionless circulation mu_v Gamma / hbar."""
    return derive_scales(c).mu_v(R) * gamma / c.hbar


def gamma_series(
    qn: QuantumNumbers,
    lam: float,
    c: PhysicalConstants,
    R: float,
    multiplicity: int = 1,
) -> CirculationLevel:
    s = derive_scales(c)
    exact = gamma_exact(qn, lam, c, R)
    warnings = selection_violations(qn, lam, c)
    fine = -4.0 * s.beta * qn.k
    if qn.n == 0:
        # no expansion about a zero base level
        base, form, series = 0.0, 0.0, 0.0
        warnings = warnings + ("series undefined at n=0",)
    else:
        base = c.hbar * qn.n / s.mu_v(R)
        form = 0.5 * (c.L * lam / (math.pi * qn.n)) ** 2
        series = base * (1.0 + c.epsilon**2 * (form + fine))
    return CirculationLevel(
        qn=qn,
        lam=lam,
        gamma_exact=exact,
        gamma_series=series,
        base=base,
        form_factor=form,
        fine_structure=fine,
        residual=abs(exact - series),
        level_index=level_index(exact, c, R),
        multiplicity=multiplicity,
        warnings=warnings,
    )


def _lambda_groups(eig: EigenResult, R0: float) -> List[Tuple[int, float, int]]:
    """(m, lam, multiplicity) per degenerate group; m is the group's first index."""
    groups = []
    lambdas = eig.lambdas / R0
    i = 0
    while i < len(eig):
        size = max(1, int(eig.multiplicity[i]))
        groups.append((i + 1, float(lambdas[i : i + size].mean()), size))
        i += size
    return groups


def enumerate_levels(
    c: PhysicalConstants,
    R: float,
    eig: EigenResult,
    n_max: int,
    k_max: Optional[int] = None,
    include_n0: bool = False,
) -> List[CirculationLevel]:
    """Every admissible (n, m, k), one level per degenerate lambda group,
    sorted by gamma_exact."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rule_k = k_limit(c)
    if k_max is None:
        k_max = rule_k
    elif k_max > rule_k:
        logger.warning("k_max_clipped", requested=k_max, allowed=rule_k)
        k_max = rule_k

    required = math.pi * n_max / c.L
    largest = float(eig.lambdas[-1] / c.R0) if len(eig) else 0.0
    if largest <= required:
        raise IncompleteSpectrumError(largest, required)
    groups = _lambda_groups(eig, c.R0)

    def levels_for(n: int) -> List[CirculationLevel]:
        bound = math.inf if n == 0 else math.pi * n / c.L * (1.0 + 1e-12)
        return [
            gamma_series(QuantumNumbers(n=n, m=m, k=k), lam, c, R, multiplicity=size)
            for m, lam, size in groups
            if lam <= bound
            for k in range(k_max + 1)
        ]

    first = 0 if include_n0 else 1
    with ThreadPoolExecutor() as pool:
        chunks = list(pool.map(levels_for, range(first, n_max + 1)))
    levels = [level for chunk in chunks for level in chunk]
    levels.sort(key=lambda lv: (lv.gamma_exact, lv.qn.n, lv.qn.m, lv.qn.k))
    if not levels:
        logger.info("no_admissible_levels", n_max=n_max, lambda1=groups[0][1], L=c.L)
    else:
        logger.info("levels_enumerated", count=len(levels), n_max=n_max, k_max=k_max)
    return levels


def correction_bound(levels: Iterable[CirculationLevel], epsilon: float) -> float:
    """eps^2 max(form_factor, 4 beta k) over the levels.

    Since sqrt(1+a)/sqrt(1+b) lies in [1 - b/2, 1 + a/2], every level obeys
    |mu_v Gamma / hbar - n| <= n * bound.
    """
    worst = max(
        (max(lv.form_factor, -lv.fine_structure) for lv in levels if lv.qn.n > 0),
        default=0.0,
    )
    return epsilon**2 * worst


def peak_histogram(levels: List[CirculationLevel], bin_width: float) -> PeakHistogram:
    """Bin mu_v Gamma / hbar; `count` counts levels, `states` weighs them by
    multiplicity."""
    if not levels:
        raise ValueError("peak_histogram needs at least one level")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    index = np.array([lv.level_index for lv in levels])
    weight = np.array([lv.multiplicity for lv in levels])
    axial = np.array([lv.qn.n for lv in levels], dtype=float)
    centers = np.round(index / bin_width) * bin_width
    unique, inverse = np.unique(centers, return_inverse=True)
    return PeakHistogram(
        bin_width=bin_width,
        bin_center=unique,
        count=np.bincount(inverse),
        states=np.bincount(inverse, weights=weight).astype(int),
        level_index=index,
        integer_offset=index - axial,
        nearest_offset=index - np.round(index),
    )
