import numpy as np
import pytest
import scipy.constants

from spinline.errors import DomainError, ValidationError
from spinline.physics.constants import (CODATA, UNITS, bose_occupation, curie_constant_emu, spin_polarization,
                                        zeeman_energy_kelvin, zeeman_frequency)
from spinline.physics.quadrature import psi_quadrature


def test_zeeman_frequency_at_125_mT():
    assert zeeman_frequency(0.125) == pytest.approx(3.506e9, rel=1e-3)
    assert zeeman_frequency(0.0) == 0.0
    np.testing.assert_allclose(zeeman_frequency([0.5, 1.0]), [0.5, 1.0] * np.array(zeeman_frequency(1.0)))


def test_zeeman_rejects_negative_field():
    with pytest.raises(DomainError):
        zeeman_frequency(-0.1)
    with pytest.raises(DomainError):
        zeeman_energy_kelvin(-1.0)


def test_zeeman_energy_matches_frequency_in_kelvin():
    B = 0.37
    assert zeeman_energy_kelvin(B) == pytest.approx(float(UNITS.hz_to_kelvin(zeeman_frequency(B))), rel=1e-14)


def test_unit_round_trips():
    assert float(UNITS.hz_to_kelvin(UNITS.kelvin_to_hz(1.7))) == pytest.approx(1.7, rel=1e-15)
    assert float(UNITS.kelvin_to_tesla(UNITS.tesla_to_kelvin(0.3, 2.0), 2.0)) == pytest.approx(0.3, rel=1e-15)
    assert float(UNITS.tesla_to_kelvin(1.0, 2.0)) == pytest.approx(1.34343, rel=1e-5)
    assert float(UNITS.angular_to_linear(UNITS.linear_to_angular(5.0))) == pytest.approx(5.0)
    assert float(UNITS.hz_to_ghz(UNITS.ghz_to_hz(14.0))) == pytest.approx(14.0)
    assert CODATA.hbar == pytest.approx(1.054571817e-34, rel=1e-9)


def test_constants_agree_with_scipy():
    # scipy may ship a newer CODATA release; mu_B moved by ~1e-9 between releases
    assert CODATA.mu_B == pytest.approx(scipy.constants.physical_constants["Bohr magneton"][0], rel=1e-8)
    assert CODATA.k_B == scipy.constants.k
    assert CODATA.h == scipy.constants.h
    assert CODATA.N_A == scipy.constants.N_A
    assert CODATA.hbar == pytest.approx(scipy.constants.hbar, rel=1e-15)


def test_bose_occupation_limits():
    assert bose_occupation(14e9, 0.0) == 0.0
    with pytest.raises(DomainError):
        bose_occupation(0.0, 1.0)
    f, T = 1.0e9, 10.0
    x = CODATA.h * f / (CODATA.k_B * T)
    assert bose_occupation(f, T) == pytest.approx(1.0 / np.expm1(x), rel=1e-12)
    # classical limit k_B T / h f - 1/2
    assert bose_occupation(f, T) == pytest.approx(1.0 / x - 0.5, rel=1e-3)


def test_polarization_is_inverse_of_two_n_plus_one():
    f, T = 14e9, 2.0
    assert spin_polarization(f, T) == pytest.approx(1.0 / (2.0 * bose_occupation(f, T) + 1.0), rel=1e-12)
    assert spin_polarization(f, 0.0) == 1.0
    assert spin_polarization(0.0, 1.0) == 0.0
    p = spin_polarization(np.array([1e9, 1e10, 1e11]), 0.5)
    assert np.all(np.diff(p) > 0) and np.all((p > 0) & (p < 1))


def test_curie_constant():
    assert curie_constant_emu(2.0) == pytest.approx(0.37515, rel=1e-3)
    assert curie_constant_emu(2.004) == pytest.approx(0.37665, rel=1e-3)


@pytest.mark.parametrize("measure", ["uniform", "sin"])
def test_quadrature_weights_are_normalized(measure):
    q = psi_quadrature(32, measure)
    assert len(q) == 32
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.diff(q.nodes) > 0)
    assert q.nodes[0] > 0 and q.nodes[-1] < np.pi / 2


def test_quadrature_moments():
    uniform = psi_quadrature(16, "uniform")
    assert float(uniform.average(uniform.nodes)) == pytest.approx(np.pi / 4, rel=1e-13)
    sin = psi_quadrature(16, "sin")
    # integral of cos(psi) sin(psi) over [0, pi/2]
    assert float(sin.average(np.cos(sin.nodes))) == pytest.approx(0.5, rel=1e-13)
    stacked = np.stack([np.ones(3) * k for k in range(16)])
    assert uniform.average(stacked).shape == (3,)


def test_quadrature_rejects_bad_input():
    with pytest.raises(ValidationError):
        psi_quadrature(4)
    with pytest.raises(ValidationError):
        psi_quadrature(16, "cosine")
