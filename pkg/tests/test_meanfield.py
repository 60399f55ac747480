import numpy as np
import pytest

from spinline.errors import DomainError, ValidationError
from spinline.llg.powder import powder_neel_temperature
from spinline.meanfield.model import MFParams, free_energy_bound, free_energy_gradient, spin_entropy
from spinline.meanfield.solver import (ANTIFERROMAGNETIC, PARAMAGNETIC, SPIN_FLOP, critical_field,
                                       neel_temperature, phase_diagram, solve_equilibrium, spin_flop_field)
from spinline.physics.constants import SPIN_HALF_EXCHANGE_SCALE, UNITS
from spinline.runtime.pool import CellPool

from .conftest import EPSILON, G_FACTOR, J_CHAIN


def test_params_reject_unphysical_values():
    with pytest.raises(DomainError):
        MFParams(J=-0.7)
    with pytest.raises(DomainError):
        MFParams(J=0.7, B=-0.1)
    with pytest.raises(DomainError):
        MFParams(J=0.7, epsilon=1.2)


def test_entropy_limits():
    assert spin_entropy(0.0) == pytest.approx(np.log(2.0))
    assert spin_entropy(1.0) == 0.0


def test_isotropic_bound_is_invariant_under_global_flip():
    p = MFParams(J=J_CHAIN)
    F = free_energy_bound(p, (1.0, 1.0), (0.3, 0.2, np.pi - 0.3, 0.2 + np.pi))
    F_flip = free_energy_bound(p, (1.0, 1.0), (np.pi - 0.3, 0.2 + np.pi, 0.3, 0.2))
    assert F == pytest.approx(-J_CHAIN)
    assert F_flip == pytest.approx(F)


def test_gradient_matches_finite_differences(chain_params):
    p = chain_params.with_(B=0.3, T=0.2, psi=0.6)
    Ms = (0.8, 0.7)
    x = np.array([0.4, 1.1, 2.3, -0.5])
    h = 1e-6
    fd = np.empty(4)
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fd[k] = (free_energy_bound(p, Ms, x + e) - free_energy_bound(p, Ms, x - e)) / (2 * h)
    np.testing.assert_allclose(free_energy_gradient(p, Ms, x), fd, atol=1e-8)


def test_zero_field_ground_state_is_antiparallel(chain_params):
    st = solve_equilibrium(chain_params.with_(T=0.01, psi=0.5 * np.pi))
    assert st.phase == ANTIFERROMAGNETIC
    assert st.dtheta == pytest.approx(np.pi, abs=1e-6)
    assert st.M1 == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("psi", [0.0, np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2])
def test_critical_field_bracket(chain_params, psi):
    p = chain_params.with_(T=0.001, psi=psi)
    B_c = critical_field(p)
    _, Jy, Jz = p.couplings
    assert B_c == pytest.approx(UNITS.kelvin_to_tesla(SPIN_HALF_EXCHANGE_SCALE * (Jy + Jz), G_FACTOR))
    assert B_c == pytest.approx(UNITS.kelvin_to_tesla(
        SPIN_HALF_EXCHANGE_SCALE * J_CHAIN * (2 + EPSILON * (np.sin(psi) + np.cos(psi))), G_FACTOR))
    assert solve_equilibrium(p.with_(B=0.99 * B_c)).phase == SPIN_FLOP
    assert solve_equilibrium(p.with_(B=1.01 * B_c)).phase == PARAMAGNETIC


def test_spin_flop_threshold(chain_params):
    p = chain_params.with_(T=0.001, psi=0.1)
    exact = spin_flop_field(p, exact=True)
    assert spin_flop_field(p) == pytest.approx(exact, rel=0.05)
    assert solve_equilibrium(p.with_(B=0.95 * exact)).phase == ANTIFERROMAGNETIC
    assert solve_equilibrium(p.with_(B=1.05 * exact)).phase == SPIN_FLOP
    assert spin_flop_field(p.with_(psi=1.2)) is None


def test_paramagnetic_above_ordering_temperature(chain_params):
    p = chain_params.with_(psi=0.25 * np.pi)
    T_N = neel_temperature(p)
    assert solve_equilibrium(p.with_(T=1.05 * T_N, B=0.1)).phase == PARAMAGNETIC
    assert solve_equilibrium(p.with_(T=1.05 * T_N)).M1 == 0.0
    assert solve_equilibrium(p.with_(T=0.9 * T_N)).phase == ANTIFERROMAGNETIC


def test_three_dimensional_polish_keeps_the_phase(chain_params):
    p = chain_params.with_(T=0.01, B=0.15, psi=0.25 * np.pi)
    planar = solve_equilibrium(p)
    polished = solve_equilibrium(p, dims=3)
    assert polished.phase == planar.phase
    assert polished.free_energy == pytest.approx(planar.free_energy, rel=1e-9)
    with pytest.raises(ValidationError):
        solve_equilibrium(p, dims=4)


def test_phase_diagram_zero_field_column_jumps_at_neel_temperature(chain_params):
    p = chain_params.with_(psi=0.25 * np.pi)
    T_N = neel_temperature(p)
    T = np.linspace(0.5 * T_N, 1.5 * T_N, 11)
    pd_ = phase_diagram(p, T, [0.0, 0.3])
    assert not pd_.errors
    ordered = pd_.dtheta[:, 0] > 0.5 * np.pi
    assert np.all(ordered[T < T_N]) and not np.any(ordered[T > T_N])
    frame = pd_.to_frame()
    assert len(frame) == T.size * 2
    assert set(frame["phase"]) <= {PARAMAGNETIC, SPIN_FLOP, ANTIFERROMAGNETIC}


def test_phase_diagram_is_independent_of_worker_count(chain_params):
    p = chain_params.with_(psi=0.3)
    T, B = [0.01, 0.3, 0.9], [0.0, 0.4, 1.2]
    serial = phase_diagram(p, T, B)
    with CellPool(3) as pool:
        parallel = phase_diagram(p, T, B, pool=pool)
    np.testing.assert_array_equal(serial.phase, parallel.phase)
    np.testing.assert_allclose(serial.dtheta, parallel.dtheta)


def test_phase_diagram_rejects_unsorted_grid(chain_params):
    with pytest.raises(ValidationError):
        phase_diagram(chain_params, [0.3, 0.1], [0.0])


def test_reference_parameters_order_at_low_field():
    p = MFParams(J=J_CHAIN, epsilon=EPSILON, psi=0.25 * np.pi, g=G_FACTOR, T=0.01, B=0.05)
    assert solve_equilibrium(p).phase in (SPIN_FLOP, ANTIFERROMAGNETIC)


@pytest.mark.parametrize("psi", [0.0, 0.5 * np.pi])
def test_zero_field_order_sets_in_at_exchange_constant(chain_params, psi):
    p = chain_params.with_(psi=psi)
    assert neel_temperature(p) == pytest.approx(J_CHAIN)
    T = J_CHAIN * np.array([0.98, 0.999, 1.001, 1.02])
    diagram = phase_diagram(p, T, [0.0])
    assert not diagram.errors
    ordered = diagram.dtheta[:, 0] > 0.5 * np.pi
    np.testing.assert_array_equal(ordered, [True, True, False, False])


def test_powder_ordering_temperature_is_exchange_constant(chain_params):
    assert powder_neel_temperature(chain_params) == pytest.approx(J_CHAIN)
    assert all(neel_temperature(chain_params.with_(psi=p)) == pytest.approx(J_CHAIN) for p in (0.3, 0.9, 1.4))
