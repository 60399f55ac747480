from dataclasses import replace
from functools import reduce

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.linalg import expm

from spinline.chain_ed.composite import (composite_susceptibility, correlator_estimate, dilution_weights,
                                         MAX_CHAIN_LENGTH)
from spinline.chain_ed.hamiltonian import (Y_AXIS, ChainSpec, build_hamiltonian, diagonalize, solve_chain,
                                          total_spin_operator)
from spinline.chain_ed.thermo import (chi_to_field_derivative, correlator_xx, entropy, field_derivative_magnetization,
                                      free_energy, magnetization, mean_correlator_xx, powder_average_thermo,
                                      specific_heat, susceptibility, thermo_curves)
from spinline.errors import DomainError, ValidationError
from spinline.physics.constants import UNITS, curie_constant_emu
from spinline.physics.quadrature import psi_quadrature

J = 0.7


def test_single_spin_without_field_is_zero_matrix():
    H = build_hamiltonian(ChainSpec(1, J))
    assert H.shape == (2, 2)
    assert np.all(H == 0)


def test_dimer_spectrum():
    w = solve_chain(ChainSpec(2, J)).eigenvalues
    np.testing.assert_allclose(w, [-3 * J, J, J, J], rtol=1e-12, atol=1e-12 * J)


def test_three_spin_chain_matches_tabulated_matrix():
    s = [np.array([[0, 1], [1, 0]], dtype=complex), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0]).astype(complex)]
    eye = np.eye(2)

    def site(op, i):
        return reduce(np.kron, [op if k == i else eye for k in range(3)])

    H = sum(J * site(p, 0) @ site(p, 1) + J * site(p, 1) @ site(p, 2) for p in s)
    np.testing.assert_allclose(solve_chain(ChainSpec(3, J)).eigenvalues, np.linalg.eigvalsh(H), atol=1e-12)


def test_memory_guard_and_parameter_checks():
    with pytest.raises(DomainError):
        ChainSpec(11, J)
    with pytest.raises(DomainError):
        ChainSpec(4, J, epsilon=1.0)
    with pytest.raises(DomainError):
        ChainSpec(4, J, psi=4.0)
    with pytest.raises(ValidationError):
        ChainSpec(4, J, boundary="twisted")


def test_periodic_ring_adds_closing_bond():
    assert len(ChainSpec(4, J, boundary="periodic").bonds()) == 4
    assert len(ChainSpec(2, J, boundary="periodic").bonds()) == 1


def test_diagonalize_simple_matrices(rng):
    assert np.allclose(diagonalize(np.eye(4)).eigenvalues, 1.0)
    sp = diagonalize(np.diag([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(sp.eigenvalues, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.abs(sp.eigenvectors), np.eye(3), atol=1e-14)

    A = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    H = A + A.conj().T
    sp = diagonalize(H)
    V, w = sp.eigenvectors, sp.eigenvalues
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(H - (V * w) @ V.conj().T) <= 1e-10 * np.linalg.norm(H)


def test_diagonalize_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        diagonalize(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigenpair_residuals():
    spec = ChainSpec(6, J, epsilon=0.05, psi=0.4)
    H = build_hamiltonian(spec, 0.3)
    sp = diagonalize(H, spec, 0.3)
    resid = np.linalg.norm(H @ sp.eigenvectors - sp.eigenvectors * sp.eigenvalues, axis=0)
    assert np.max(resid) <= 1e-10 * np.linalg.norm(H, 2)


@pytest.mark.parametrize("T", np.geomspace(0.01 * J, 100 * J, 25))
def test_dimer_specific_heat_is_schottky(T):
    gap = 4 * J
    p = 3 * np.exp(-gap / T) / (1 + 3 * np.exp(-gap / T))
    expected = gap ** 2 * p * (1 - p) / T ** 2 / 2
    assert specific_heat(solve_chain(ChainSpec(2, J)), T) == pytest.approx(expected, rel=1e-10, abs=1e-300)


def test_truncated_spectrum_differs_at_high_temperature():
    sp = solve_chain(ChainSpec(4, J))
    assert specific_heat(sp, 50 * J, n_states=2) != pytest.approx(specific_heat(sp, 50 * J), rel=1e-3)


def test_free_spin_curie_law():
    sp = solve_chain(ChainSpec(1, J))
    for T in (0.01, 1.0, 100.0):
        assert susceptibility(sp, T) * T == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("B", [0.1, 0.5, 8.0])
def test_free_spin_magnetization_is_tanh(B):
    sp = solve_chain(ChainSpec(1, J, g=2.004), B)
    b = UNITS.tesla_to_kelvin(B, 2.004)
    for T in (0.05, 0.5, 5.0):
        assert magnetization(sp, T) == pytest.approx(np.tanh(b / T), rel=1e-12)


def test_five_spin_magnetization_matches_density_matrix_trace():
    spec = ChainSpec(5, J, epsilon=-0.086, psi=0.6, g=2.004)
    B, T = 8.0, 0.5
    H = build_hamiltonian(spec, B)
    rho = expm(-H / T)
    Q = total_spin_operator(5, Y_AXIS)
    expected = np.real(np.trace(rho @ Q) / np.trace(rho)) / 5
    assert magnetization(solve_chain(spec, B), T) == pytest.approx(expected, rel=1e-9)
    assert 0.9 < expected <= 1.0


def test_dimer_susceptibility_vanishes_at_low_temperature():
    assert susceptibility(solve_chain(ChainSpec(2, J)), 0.02 * J) < 1e-20


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_perturbative_susceptibility_equals_field_derivative(n):
    spec = ChainSpec(n, J, epsilon=0.05, psi=0.3)
    for T in (0.3, 0.5, 1.0, 2.0, 5.0):
        for B in (0.0, 0.2, 0.5):
            chi = susceptibility(solve_chain(spec, B), T)
            oracle = field_derivative_magnetization(spec, T, B)
            assert chi_to_field_derivative(chi, spec.g) == pytest.approx(oracle, rel=1e-6)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_odd_chains_keep_one_free_spin(n):
    chi_t = susceptibility(solve_chain(ChainSpec(n, J)), 0.01 * J) * 0.01 * J
    assert 0.99 <= n * chi_t <= 1.01


@pytest.mark.parametrize("n", [2, 4, 6])
def test_even_chains_freeze_out(n):
    chi_t = susceptibility(solve_chain(ChainSpec(n, J)), 0.01 * J) * 0.01 * J
    assert chi_t < 0.01


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 8])
def test_entropy_sum_rule(n):
    sp = solve_chain(ChainSpec(n, J))
    T = np.geomspace(1e-3 * J, 1e3 * J, 4000)
    c = np.array([specific_heat(sp, t) for t in T])
    integral = trapezoid(c, np.log(T))
    d0 = int(np.sum(np.abs(sp.eigenvalues - sp.eigenvalues[0]) < 1e-9))
    expected = np.log(2.0) - np.log(d0) / n
    assert integral == pytest.approx(expected, rel=0.02)
    assert entropy(sp, T[-1]) - entropy(sp, T[0]) == pytest.approx(integral, rel=1e-3)


def test_entropy_and_free_energy_consistency():
    sp = solve_chain(ChainSpec(4, J))
    T, dT = 0.8, 1e-5
    dF = (free_energy(sp, T + dT) - free_energy(sp, T - dT)) / (2 * dT)
    assert -dF / 4 == pytest.approx(entropy(sp, T), rel=1e-6)


def test_dimer_correlator_is_minus_one_at_low_temperature():
    sp = solve_chain(ChainSpec(2, J))
    assert correlator_xx(sp, 0.01 * J, 0) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        correlator_xx(sp, 1.0, 1)


def test_correlators_are_bounded():
    sp = solve_chain(ChainSpec(5, J, epsilon=-0.086, psi=0.7), 0.4)
    for T in (0.01, 0.3, 3.0):
        assert abs(mean_correlator_xx(sp, T)) <= 1.0
    assert np.isnan(mean_correlator_xx(solve_chain(ChainSpec(1, J)), 1.0))


def test_thermo_curves_frame():
    res = thermo_curves(solve_chain(ChainSpec(3, J)), [0.1, 1.0, 10.0])
    frame = res.to_frame()
    assert list(frame.columns) == ["T_K", "B_T", "psi_rad", "n", "c_per_spin", "chi", "chiT", "m", "corr_xx"]
    assert np.all(frame["c_per_spin"] >= 0) and np.all(frame["chi"] >= 0)
    np.testing.assert_allclose(res.chi_t_emu(2.004), res.chi_T * curie_constant_emu(2.004))
    with pytest.raises(DomainError):
        thermo_curves(solve_chain(ChainSpec(2, J)), [0.0, 1.0])


def test_powder_average_is_trivial_without_anisotropy():
    template = ChainSpec(3, J)
    T = [0.2, 1.0]
    avg = powder_average_thermo(template, T, 0.1, psi_quadrature(8))
    single = thermo_curves(solve_chain(replace(template, psi=0.3), 0.1), T)
    np.testing.assert_allclose(avg.chi, single.chi, rtol=1e-12)
    np.testing.assert_allclose(avg.specific_heat, single.specific_heat, rtol=1e-12)


def test_dilution_weights():
    w = dilution_weights()
    assert w.size == MAX_CHAIN_LENGTH
    assert w.sum() == pytest.approx(1.0)
    assert np.all(np.diff(w) < 0)
    with pytest.raises(DomainError):
        dilution_weights(1.0)


def test_composite_high_temperature_limit():
    res = composite_susceptibility([100.0], 0.0, 0.0, 0.85, g=2.004)
    assert res.chi_t[0] == pytest.approx(0.85, rel=1e-12)
    assert res.chi_t_emu[0] == pytest.approx(0.85 * curie_constant_emu(2.004), rel=1e-12)
    assert res.chi_t_emu[0] == pytest.approx(0.319, rel=5e-3)


def test_composite_dimer_freezes_out():
    res = composite_susceptibility([0.05], 5.0, 0.7, 0.85)
    assert res.dimer_chi_t[0] < 1e-20
    assert 0 < res.chi_t[0] < 0.85 * 0.5


def test_composite_rejects_unnormalized_weights():
    with pytest.raises(ValidationError):
        composite_susceptibility([1.0], 5.0, 0.7, 0.85, length_weights=[0.5, 0.4])
    with pytest.raises(DomainError):
        composite_susceptibility([1.0], 5.0, 0.7, 0.0)
    res = composite_susceptibility([1.0], 5.0, 0.7, 0.85, length_weights={1: 0.5, 3: 0.5})
    assert np.isfinite(res.chi_t[0])


def test_correlator_estimate():
    assert correlator_estimate(0.1536, 0.1536) == pytest.approx(0.0)
    np.testing.assert_allclose(correlator_estimate([0.0768, 0.3072], 0.1536), [-0.5, -1.0])
