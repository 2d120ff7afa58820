import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from pydantic import ValidationError

from app.errors import AliasingError, ConstraintError
from app.models import FilamentRecord, FilamentState, coupling_factor
from app.vortex.filament import (
    arc_length,
    base_ring,
    check_closure,
    curve_tangents,
    excite_mode,
    mode_spectrum,
    perturbation_amplitude,
    reconstruct_curve,
    synthesize,
    tangent_field,
    xi_grid,
)

amplitudes = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def test_base_ring_is_circle():
    """Every point sits at distance R from q0 - R e_x and r(0) = q0"""
    q0 = np.array([0.3, -0.2, 0.5])
    curve = reconstruct_curve(base_ring(q0, R=1.5), 256)
    centre = q0 - np.array([1.5, 0.0, 0.0])
    distances = np.linalg.norm(curve.points - centre, axis=1)
    assert np.allclose(distances, 1.5, atol=1e-10)
    assert np.allclose(curve.points[0], q0, atol=1e-12)
    assert np.allclose(curve.points[:, 2], 0.5, atol=1e-12)


def test_base_ring_circumference():
    curve = reconstruct_curve(base_ring(R=1.0), 256)
    assert arc_length(curve.points) == pytest.approx(2 * math.pi, abs=1e-8)


def test_base_ring_has_no_modes():
    state = base_ring(R=2.0, Gamma=0.5)
    assert state.modes == {}
    xi = xi_grid(64)
    expected = np.stack([-np.sin(xi), np.cos(xi), np.zeros_like(xi)], axis=1)
    assert np.array_equal(tangent_field(state, 64), expected)


def test_base_ring_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        base_ring(R=0.0)


def test_tangent_field_matches_pointwise_sum():
    c = 0.4 - 0.7j
    state = excite_mode(base_ring(R=1.0, epsilon=0.1), -1, c)
    assert state.modes[1] == pytest.approx(-c.conjugate())

    xi = xi_grid(64)
    sj = c * np.exp(-1j * xi) - c.conjugate() * np.exp(1j * xi)
    e_rho = np.stack([np.cos(xi), np.sin(xi), np.zeros_like(xi)], axis=1)
    e_z = np.tile([0.0, 0.0, 1.0], (64, 1))
    j0 = np.stack([-np.sin(xi), np.cos(xi), np.zeros_like(xi)], axis=1)
    expected = j0 + 0.1 * (sj.real[:, None] * e_rho + sj.imag[:, None] * e_z)
    assert np.allclose(tangent_field(state, 64), expected, atol=1e-13)


def test_zero_amplitudes_reduce_to_base_ring():
    state = FilamentState(R=1.0, epsilon=0.2, modes={2: 0.0, -2: 0.0})
    assert np.array_equal(tangent_field(state, 32), tangent_field(base_ring(R=1.0), 32))


def test_grid_too_small_aliases():
    state = excite_mode(base_ring(R=1.0, epsilon=0.1), 8, 1.0)
    with pytest.raises(AliasingError) as exc:
        tangent_field(state, 16)
    assert exc.value.required == 32


def test_closure_of_compliant_state():
    state = excite_mode(base_ring(R=1.0, epsilon=0.1), -1, 0.3 + 0.2j)
    state = excite_mode(state, 3, 0.5j)
    assert np.linalg.norm(check_closure(state)) < 1e-12


def test_imaginary_zero_mode_breaks_axial_closure():
    """j_0 = i c leaves a z-residual of 2 pi eps c"""
    state = FilamentState(R=1.0, epsilon=0.1, modes={0: 0.5j})
    residual = check_closure(state)
    assert residual[2] == pytest.approx(2 * math.pi * 0.1 * 0.5, rel=1e-12)
    assert abs(residual[0]) < 1e-12 and abs(residual[1]) < 1e-12
    with pytest.raises(ConstraintError) as exc:
        reconstruct_curve(state, 64)
    assert exc.value.residual[2] == pytest.approx(0.1 * math.pi)


def test_real_zero_mode_is_closed():
    state = FilamentState(R=1.0, epsilon=0.1, modes={0: 0.5})
    assert np.linalg.norm(check_closure(state)) < 1e-12


def test_excite_zero_mode_must_be_real():
    with pytest.raises(ConstraintError):
        excite_mode(base_ring(R=1.0, epsilon=0.1), 0, 1j)


def test_coupling_enforced_on_construction():
    with pytest.raises(ValidationError, match="coupling"):
        FilamentState(R=1.0, modes={2: 1.0, -2: 1.0})
    with pytest.raises(ValidationError, match="coupling"):
        FilamentState(R=1.0, modes={2: 1.0})


def test_mode_cutoff_enforced():
    with pytest.raises(ValidationError, match="cutoff"):
        FilamentState(R=1.0, modes={40: 1.0})


def test_perturbed_curve_stays_near_base():
    eps = 1e-3
    state = excite_mode(base_ring(R=1.0, epsilon=eps), 2, 1.0)
    perturbed = reconstruct_curve(state, 256).points
    base = reconstruct_curve(base_ring(R=1.0), 256).points
    bound = 2 * math.pi * eps * (1.0 + abs(coupling_factor(2)))
    assert np.abs(perturbed - base).max() <= bound


def test_curve_derivative_recovers_tangent():
    state = excite_mode(base_ring(R=0.7, epsilon=0.05), 2, 0.8 - 0.1j)
    state = excite_mode(state, -1, 0.2)
    curve = reconstruct_curve(state, 256)
    assert np.allclose(curve_tangents(curve.points, 0.7), curve.tangents, atol=1e-10)


def test_spectral_convergence_under_refinement():
    state = excite_mode(base_ring(R=1.0, epsilon=0.1), 3, 0.5 + 0.5j)
    coarse = reconstruct_curve(state, 128).points
    fine = reconstruct_curve(state, 256).points
    assert np.abs(fine[::2] - coarse).max() < 1e-10


def test_projection_recovers_amplitude():
    state = excite_mode(base_ring(R=1.0, epsilon=0.02), 2, 0.3 + 0.4j)
    sj, leak = perturbation_amplitude(tangent_field(state, 64))
    assert np.allclose(sj, 0.02 * synthesize(state.modes, 64), atol=1e-14)
    assert np.abs(leak).max() < 1e-14


def test_mode_spectrum_reads_back_modes():
    state = excite_mode(base_ring(R=1.0, epsilon=0.1), 5, 0.25 - 1j)
    found = mode_spectrum(synthesize(state.modes, 64), threshold=1e-12)
    assert set(found) == {5, -5}
    assert found[5] == pytest.approx(state.modes[5], abs=1e-13)


def test_record_uses_triples():
    state = excite_mode(base_ring((1.0, 2.0, 3.0), R=0.5, Gamma=2.0, epsilon=0.1), 2, 1 + 2j)
    record = FilamentRecord.from_state(state)
    assert record.modes[-1] == (2, 1.0, 2.0)
    assert record.to_state() == state


@given(n=st.integers(min_value=2, max_value=32), amplitude=amplitudes)
def test_excite_keeps_coupling(n, amplitude):
    state = excite_mode(base_ring(R=1.0, epsilon=0.1), n, amplitude)
    j_n, j_m = state.modes.get(n, 0j), state.modes.get(-n, 0j)
    assert abs(j_m.conjugate() - coupling_factor(n) * j_n) <= 1e-12 * max(1.0, abs(amplitude))


@hsettings(max_examples=25, deadline=None)
@given(amplitude=amplitudes)
def test_excite_dipole_keeps_closure(amplitude):
    state = excite_mode(base_ring(R=1.0, epsilon=0.3), 1, amplitude)
    assert np.linalg.norm(check_closure(state, 64)) < 1e-12
