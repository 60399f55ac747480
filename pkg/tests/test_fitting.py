import numpy as np
import pytest

from spinline.errors import DomainError, ValidationError
from spinline.fitfmt.fitting import fit_coupling_law, fit_resonance, tanh_law_basis
from spinline.fitfmt.normalize import as_normalized, normalize_reflection, normalize_transmission
from spinline.fitfmt.synthesis import Background, synthesize_sweep
from spinline.physics.constants import zeeman_frequency
from spinline.transmission.models import paramagnetic_s_params

from .conftest import G_FACTOR

G, GAMMA, OMEGA = 12e6, 14e6, 14e9
ALPHA_N = 0.00441


def _clean(G_=G, gamma=GAMMA, omega=OMEGA, half_span=300e6, n=1201):
    f = np.linspace(omega - half_span, omega + half_span, n)
    return f, paramagnetic_s_params(f, omega, G_, gamma).s21


def test_noiseless_fit_recovers_parameters():
    f, s = _clean()
    res = fit_resonance(as_normalized(f, s))
    assert res.converged
    assert res.G == pytest.approx(G, rel=1e-8)
    assert res.Gamma == pytest.approx(GAMMA, rel=1e-8)
    assert res.Omega == pytest.approx(OMEGA, rel=1e-8)
    assert res.eta == pytest.approx(12 / 26, rel=1e-8)
    assert res.covariance.shape == (3, 3)


def test_fit_is_independent_of_frequency_scale():
    f, s = _clean(G_=1.2e6, gamma=1.4e6, omega=1.4e9, half_span=30e6)
    res = fit_resonance(as_normalized(f, s))
    assert res.G == pytest.approx(1.2e6, rel=1e-8)
    assert res.Gamma == pytest.approx(1.4e6, rel=1e-8)


def test_amplitude_only_fit():
    f, s = _clean()
    res = fit_resonance(as_normalized(f, s), amplitude_only=True)
    assert res.converged
    assert res.G == pytest.approx(G, rel=1e-6)
    assert res.Gamma == pytest.approx(GAMMA, rel=1e-6)
    assert res.Omega == pytest.approx(OMEGA, rel=1e-8)


def test_initial_values_are_honoured():
    f, s = _clean()
    res = fit_resonance(as_normalized(f, s), initial={"G": 10e6, "Gamma": 20e6, "Omega": OMEGA + 2e6})
    assert res.G == pytest.approx(G, rel=1e-8)


def test_flat_spectrum_does_not_converge():
    f, _ = _clean()
    res = fit_resonance(as_normalized(f, np.ones(f.size)))
    assert not res.converged
    assert res.G == 0.0
    assert "flat" in res.flags


def test_fit_needs_enough_points_and_transmission():
    f, s = _clean(n=10)
    with pytest.raises(ValidationError):
        fit_resonance(as_normalized(f, s))
    sweep = synthesize_sweep(np.linspace(13e9, 15e9, 501), [0.5, 0.55], 2.0, coupling="fixed", G=G, Gamma=GAMMA,
                             background=Background(), g=G_FACTOR)
    with pytest.raises(ValidationError):
        fit_resonance(normalize_reflection(sweep, 0.5, 0.05, g=G_FACTOR))


def test_background_free_pipeline_recovers_parameters():
    freqs = np.linspace(13.0e9, 16.0e9, 3001)
    sweep = synthesize_sweep(freqs, [0.5, 0.55], 2.0, coupling="fixed", G=G, Gamma=GAMMA,
                             background=Background(), g=G_FACTOR)
    spec = normalize_transmission(sweep, 0.5, 0.05, g=G_FACTOR)
    f_z = zeeman_frequency(0.5, G_FACTOR)
    res = fit_resonance(spec, window=(f_z - 300e6, f_z + 300e6))
    assert res.converged
    assert res.G == pytest.approx(G, rel=1e-8)
    assert res.Gamma == pytest.approx(GAMMA, rel=1e-8)
    assert res.detuning(0.5, G_FACTOR) == pytest.approx(0.0, abs=1e-8 * f_z)


def test_mirror_peak_handling():
    freqs = np.linspace(13.0e9, 16.0e9, 3001)
    sweep = synthesize_sweep(freqs, [0.5, 0.55], 2.0, coupling="fixed", G=G, Gamma=GAMMA, g=G_FACTOR)
    spec = normalize_transmission(sweep, 0.5, 0.05, g=G_FACTOR)
    trimmed = fit_resonance(spec)
    kept = fit_resonance(spec, exclude_mirror=False)
    assert trimmed.n_points < kept.n_points == freqs.size
    assert trimmed.G == pytest.approx(G, rel=1e-6)
    assert kept.G == pytest.approx(G, rel=1e-6)


@pytest.mark.slow
def test_uncertainties_cover_the_truth():
    freqs = np.linspace(13.0e9, 16.0e9, 3001)
    f_z = zeeman_frequency(0.5, G_FACTOR)
    window = (f_z - 300e6, f_z + 300e6)
    hits = 0
    for seed in range(100):
        sweep = synthesize_sweep(freqs, [0.5, 0.55], 2.0, coupling="fixed", G=G, Gamma=GAMMA,
                                 background=Background(), noise=0.01, seed=seed, g=G_FACTOR)
        res = fit_resonance(normalize_transmission(sweep, 0.5, 0.05, g=G_FACTOR), window=window)
        assert res.converged
        truth = (G, GAMMA, f_z)
        fitted = (res.G, res.Gamma, res.Omega)
        if all(abs(v - t) <= 3 * se for v, t, se in zip(fitted, truth, res.stderr)):
            hits += 1
    assert hits >= 95


def _law_points(B, T, alpha=ALPHA_N):
    BB, TT = np.meshgrid(B, T, indexing="ij")
    x = tanh_law_basis(BB.ravel(), TT.ravel(), G_FACTOR)
    return BB.ravel(), TT.ravel(), alpha * x


def test_coupling_law_exact_recovery():
    B, T, Gs = _law_points([0.40, 0.45, 0.50, 0.55], [0.5, 2.0])
    for weighting in ("relative", "absolute"):
        res = fit_coupling_law(zip(B, T, Gs), g=G_FACTOR, weighting=weighting)
        assert res.alpha_N == pytest.approx(ALPHA_N, rel=1e-10)
        assert res.n_points == 8


def test_coupling_law_single_point():
    B, T, Gs = _law_points([0.5], [2.0])
    res = fit_coupling_law([(B[0], T[0], Gs[0])], g=G_FACTOR)
    assert res.alpha_N == pytest.approx(ALPHA_N, rel=1e-12)
    assert res.stderr == 0.0


def test_coupling_law_rejects_bad_input():
    with pytest.raises(ValidationError):
        fit_coupling_law([(0.5, 2.0, 0.0), (0.55, 2.0, 0.0)])
    with pytest.raises(DomainError):
        fit_coupling_law([(0.5, 2.0, -1e6), (0.55, 2.0, 1e6)])
    with pytest.raises(DomainError):
        fit_coupling_law([(0.5, 0.0, 1e6), (0.55, 2.0, 1e6)])
    with pytest.raises(ValidationError):
        fit_coupling_law([(0.5, 2.0, 1e6), (0.55, 2.0, 1e6)], weighting="cubic")
    with pytest.raises(ValidationError):
        fit_coupling_law([])


def test_coupling_law_uncertainty_coverage(rng):
    B, T, Gs = _law_points(np.linspace(0.1, 0.5, 9), np.linspace(1.2, 4.2, 6))
    exact = fit_coupling_law(zip(B, T, Gs), g=G_FACTOR)
    assert exact.alpha_N == pytest.approx(ALPHA_N, rel=1e-10)
    hits = 0
    for _ in range(100):
        noisy = Gs * (1.0 + 0.05 * rng.standard_normal(Gs.size))
        res = fit_coupling_law(zip(B, T, noisy), g=G_FACTOR)
        if abs(res.alpha_N - ALPHA_N) <= 1.96 * res.stderr:
            hits += 1
    assert hits >= 88
