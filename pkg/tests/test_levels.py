import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from structlog.testing import capture_logs

from app.errors import IncompleteSpectrumError
from app.models import DiskDomain, PhysicalConstants, QuantumNumbers
from app.scales import derive_scales
from app.spectral.eigen import eigen_analytic
from app.spectral.levels import (
    correction_bound,
    enumerate_levels,
    gamma_exact,
    gamma_series,
    k_limit,
    level_index,
    peak_histogram,
)

J01 = 2.404825557695773


def qn(n, m=1, k=0):
    return QuantumNumbers(n=n, m=m, k=k)


@pytest.fixture
def disk_eigen():
    return eigen_analytic(DiskDomain(radius=1.0), 20)


@pytest.mark.parametrize("n", [1, 3, 8])
def test_classical_limit_is_integer(n):
    c = PhysicalConstants(L=10.0, epsilon=0.0, rho0=2.0, mu0=0.7)
    gamma = gamma_exact(qn(n), J01, c, R=0.25)
    assert gamma == pytest.approx(c.hbar * n / derive_scales(c).mu_v(0.25), rel=1e-13)
    assert level_index(gamma, c, 0.25) == pytest.approx(n, abs=1e-12)


def test_reference_level(cylinder):
    """n=8, unit disk, L=10, eps=0.1, beta=1e-3, k=0"""
    mpmath.mp.dps = 30
    lam = mpmath.besseljzero(0, 1)
    oracle = (10 / mpmath.pi) * mpmath.sqrt((mpmath.pi * 8 / 10) ** 2 + mpmath.mpf("0.01") * lam**2)
    value = level_index(gamma_exact(qn(8), float(lam), cylinder, 0.25), cylinder, 0.25)
    assert value == pytest.approx(float(oracle), rel=1e-12)
    assert value == pytest.approx(8.0365, abs=1e-3)


def test_form_factor_raises_level(cylinder):
    gamma = gamma_exact(qn(8), J01, cylinder, 0.25)
    assert gamma > cylinder.hbar * 8 / derive_scales(cylinder).mu_v(0.25)


def test_series_without_corrections(cylinder):
    level = gamma_series(qn(3), 0.0, cylinder, 0.25)
    assert level.gamma_series == level.base
    assert level.base == pytest.approx(cylinder.hbar * 3 / derive_scales(cylinder).mu_v(0.25))


def test_fine_structure_linear_in_k(cylinder):
    one = gamma_series(qn(8, k=3), J01, cylinder, 0.25)
    two = gamma_series(qn(8, k=6), J01, cylinder, 0.25)
    assert two.fine_structure == 2 * one.fine_structure
    assert one.sector == "H(8,1,3)"


def test_residual_scales_as_eps_fourth():
    """beta = 1e-6: halving eps shrinks |exact - series| at least 8x"""
    residuals = []
    for eps in (0.1, 0.05):
        c = PhysicalConstants(L=10.0, hbar=1e-6, epsilon=eps)
        residuals.append(gamma_series(qn(8), J01, c, 0.25).residual)
    assert residuals[0] / residuals[1] >= 8.0


def test_residual_bounded_by_eps_fourth(cylinder, disk_eigen):
    levels = enumerate_levels(cylinder, 0.25, disk_eigen, n_max=16, k_max=10)
    ratios = [lv.residual / (lv.base * cylinder.epsilon**4) for lv in levels]
    assert max(ratios) < 1.0


@pytest.mark.parametrize("hbar", [1e-4, 3e-4, 1e-3])
def test_fine_structure_scales_as_hbar_squared(hbar):
    def correction(h):
        c = PhysicalConstants(L=10.0, hbar=h, epsilon=1e-3)
        level = gamma_series(qn(8, k=5), J01, c, 0.25)
        return level.base * c.epsilon**2 * abs(level.fine_structure)

    assert correction(2 * hbar) / correction(hbar) == pytest.approx(4.0, rel=0.05)
    slope = math.log(correction(2 * hbar) / correction(hbar)) / math.log(2)
    assert slope == pytest.approx(2.0, abs=1e-9)


def test_selection_rule_violation_warns(cylinder):
    with capture_logs() as logs:
        gamma = gamma_exact(qn(1), J01, cylinder, 0.25)
    assert gamma > 0
    assert any(entry["event"] == "selection_rule_violated" for entry in logs)
    assert gamma_series(qn(1), J01, cylinder, 0.25).warnings


@given(n=st.integers(1, 30), k=st.integers(0, 100), lam=st.floats(0.1, 10.0))
def test_monotonicity(n, k, lam):
    c = PhysicalConstants(L=10.0, hbar=1e-3, epsilon=0.1)
    g = gamma_exact(qn(n, k=k), lam, c, 0.25)
    assert gamma_exact(qn(n + 1, k=k), lam, c, 0.25) > g
    assert gamma_exact(qn(n, k=k), lam * 1.01, c, 0.25) > g
    assert gamma_exact(qn(n, k=k + 1), lam, c, 0.25) < g


def test_k_limit():
    assert k_limit(PhysicalConstants(hbar=1e-3)) == 125
    assert k_limit(PhysicalConstants(hbar=0.2)) == 0


def test_rules_exclude_everything():
    c = PhysicalConstants(L=1.0, hbar=1e-3, epsilon=0.1)
    eig = eigen_analytic(DiskDomain(radius=0.5), 3)
    assert enumerate_levels(c, 0.25, eig, n_max=1) == []


def test_k_range_follows_rule(cylinder, disk_eigen):
    levels = enumerate_levels(cylinder, 0.25, disk_eigen, n_max=8)
    assert sorted(lv.qn.k for lv in levels) == list(range(126))
    assert {(lv.qn.n, lv.qn.m) for lv in levels} == {(8, 1)}


def test_levels_sorted(cylinder, disk_eigen):
    levels = enumerate_levels(cylinder, 0.25, disk_eigen, n_max=16, k_max=5)
    gammas = [lv.gamma_exact for lv in levels]
    assert gammas == sorted(gammas)


def test_degenerate_bessel_levels(cylinder, disk_eigen):
    """lambda_2 = lambda_3 = j_11 gives one level of multiplicity 2"""
    levels = enumerate_levels(cylinder, 0.25, disk_eigen, n_max=13, k_max=0)
    at_13 = [lv for lv in levels if lv.qn.n == 13]
    assert [(lv.qn.m, lv.multiplicity) for lv in sorted(at_13, key=lambda lv: lv.qn.m)] == [
        (1, 1),
        (2, 2),
    ]


def test_incomplete_spectrum(cylinder):
    eig = eigen_analytic(DiskDomain(radius=1.0), 1)
    with pytest.raises(IncompleteSpectrumError) as exc:
        enumerate_levels(cylinder, 0.25, eig, n_max=8)
    assert exc.value.required == pytest.approx(math.pi * 8 / 10)


def test_opt_in_axial_zero(cylinder, disk_eigen):
    levels = enumerate_levels(cylinder, 0.25, disk_eigen, n_max=1, k_max=0, include_n0=True)
    zero = [lv for lv in levels if lv.qn.n == 0]
    assert zero and all(lv.gamma_exact > 0 for lv in zero)
    assert all(lv.base == 0.0 for lv in zero)


def test_classical_limit_histogram(disk_eigen):
    c = PhysicalConstants(L=10.0, hbar=1e-3, epsilon=0.0)
    levels = enumerate_levels(c, 0.25, disk_eigen, n_max=16, k_max=3)
    hist = peak_histogram(levels, 0.01)
    assert np.abs(hist.nearest_offset).max() < 1e-12
    assert correction_bound(levels, 0.0) == 0.0


def test_peaks_within_correction_bound(cylinder, disk_eigen):
    levels = enumerate_levels(cylinder, 0.25, disk_eigen, n_max=16)
    hist = peak_histogram(levels, 0.01)
    bound = correction_bound(levels, cylinder.epsilon)
    n = np.array([lv.qn.n for lv in levels])
    assert np.all(np.abs(hist.integer_offset) <= n * bound * (1 + 1e-12))
    assert len(set(np.round(hist.level_index[n == 8], 12))) > 1
    assert hist.count.sum() == len(levels)
    assert hist.states.sum() == sum(lv.multiplicity for lv in levels)


def test_single_level_histogram(cylinder):
    level = gamma_series(qn(1), 0.1, cylinder, 0.25)
    hist = peak_histogram([level], 0.05)
    assert len(hist.bin_center) == 1
    assert list(hist.count) == [1]


def test_histogram_needs_levels():
    with pytest.raises(ValueError):
        peak_histogram([], 0.01)
