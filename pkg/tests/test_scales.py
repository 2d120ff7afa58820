import math

import pytest
from hypothesis import given, strategies as st
from pydantic import ValidationError

from app.models import PhysicalConstants
from app.scales import bridge_ratio, derive_scales, momentum_uncertainty

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_unit_inputs():
    """All-unit constants give t0=1, E0=1/2, mu~0=1, alpha=1"""
    s = derive_scales(PhysicalConstants())
    assert s.t0 == 1.0
    assert s.E0 == 0.5
    assert s.mu_tilde0 == 1.0
    assert s.alpha == 1.0


def test_alpha_and_beta_ratios():
    assert derive_scales(PhysicalConstants(mu0=2.0)).alpha == 2.0
    assert derive_scales(PhysicalConstants(hbar=1e-3)).beta == pytest.approx(1e-3, rel=1e-15)


def test_accepts_mapping():
    s = derive_scales({"rho0": 2.0, "L": 3.0})
    assert s.mu_tilde0 == 6.0


@pytest.mark.parametrize("field, value", [("rho0", -1.0), ("v0", 0.0), ("L", float("nan")), ("hbar", float("inf"))])
def test_rejects_bad_constants(field, value):
    """Validation error names the offending field"""
    with pytest.raises(ValidationError) as exc:
        derive_scales({field: value})
    assert field in str(exc.value)


def test_epsilon_range():
    with pytest.raises(ValidationError):
        PhysicalConstants(epsilon=1.0)
    with pytest.raises(ValidationError):
        PhysicalConstants(epsilon=-0.1)


@given(rho0=positive, R0=positive, L=positive, mu0=positive)
def test_alpha_two_ways(rho0, R0, L, mu0):
    s = derive_scales(PhysicalConstants(rho0=rho0, R0=R0, L=L, mu0=mu0))
    assert s.alpha == pytest.approx(mu0 / (rho0 * R0**2 * L), rel=1e-15)
    assert s.alpha * s.mu_tilde0 == pytest.approx(mu0, rel=1e-15)


@given(scale=st.floats(min_value=0.1, max_value=10.0))
def test_time_scale_covariance(scale):
    """R0 -> s R0 and v0 -> v0 / s multiply t0 by s^2 and E0 by 1/s^2"""
    base = derive_scales(PhysicalConstants(R0=1.5, v0=2.0))
    moved = derive_scales(PhysicalConstants(R0=1.5 * scale, v0=2.0 / scale))
    assert moved.t0 == pytest.approx(base.t0 * scale**2, rel=1e-13)
    assert moved.E0 == pytest.approx(base.E0 / scale**2, rel=1e-13)


def test_vortex_mass():
    s = derive_scales(PhysicalConstants(mu0=2.0, R0=4.0))
    assert s.mu_v(2.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        s.mu_v(0.0)


def test_momentum_uncertainty():
    floors = momentum_uncertainty(PhysicalConstants(hbar=2e-3, R0=0.5, L=4.0))
    assert floors["dp_transverse"] == pytest.approx(2e-3)
    assert floors["dp_axial"] == pytest.approx(2.5e-4)


@given(hbar=st.floats(min_value=1e-8, max_value=1e-1), v0=positive, mu0=positive)
def test_quantization_bridge_consistent(hbar, v0, mu0):
    assert bridge_ratio(PhysicalConstants(hbar=hbar, v0=v0, mu0=mu0)) == pytest.approx(1.0, rel=1e-12)


def test_scales_are_frozen():
    s = derive_scales(PhysicalConstants())
    with pytest.raises(ValidationError):
        s.t0 = 2.0
    assert math.isfinite(s.beta)
