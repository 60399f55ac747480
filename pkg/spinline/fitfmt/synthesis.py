"""Synthetic raw sweeps: model spectra dressed with a field-independent background and noise."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DomainError, ValidationError
from ..meanfield.model import MFParams
from ..physics.constants import CODATA, zeeman_frequency
from ..physics.quadrature import PsiQuadrature
from ..runtime.pool import CellPool
from ..transmission.models import (CouplingModel, Spectrum, collective_coupling, frequency_grid, gamma_total,
                                   paramagnetic_s_params)
from ..transmission.spinwave import powder_spinwave_s21
from .sweep import RawSweep

logger = logging.getLogger("spinline.fitfmt")

LINES = ("paramagnetic", "powder")
COUPLINGS = ("tanh_law", "fixed")


@dataclass(frozen=True)
class Background:
    """F(w) = gain (1 + sum_k a_k sin(2 pi f / P_k + phi_k)) exp(-2 pi i f tau); R is additive on S11."""

    ripple_amplitudes: Sequence[float] = (0.05, 0.03, 0.02)
    ripple_periods: Sequence[float] = (0.17e9, 0.31e9, 0.53e9)  # Hz
    ripple_phases: Sequence[float] = (0.3, 1.1, 2.0)
    delay: float = 2.0e-9  # s
    gain: float = 1.0
    reflection: complex = complex(0.05, -0.02)

    def __post_init__(self) -> None:
        n = len(self.ripple_amplitudes)
        if len(self.ripple_periods) != n or len(self.ripple_phases) != n:
            raise ValidationError("ripple amplitudes, periods and phases must have equal length")
        if any(p <= 0 for p in self.ripple_periods):
            raise ValidationError("ripple periods must be > 0")
        if not self.gain > 0 or sum(abs(a) for a in self.ripple_amplitudes) >= 1.0:
            raise ValidationError("background must keep |F| > 0: need gain > 0 and sum |a_k| < 1")

    @classmethod
    def identity(cls) -> "Background":
        return cls(ripple_amplitudes=(), ripple_periods=(), ripple_phases=(), delay=0.0, gain=1.0, reflection=0j)

    def transmission(self, frequencies: np.ndarray) -> np.ndarray:
        f = np.asarray(frequencies, dtype=float)
        ripple = np.ones_like(f)
        for a, p, phi in zip(self.ripple_amplitudes, self.ripple_periods, self.ripple_phases):
            ripple += a * np.sin(2.0 * np.pi * f / p + phi)
        return self.gain * ripple * np.exp(-2j * np.pi * f * self.delay)


def _clean_row(f: np.ndarray, B: float, T: float, line: str, model: CouplingModel, coupling: str,
               G: Optional[float], Gamma: Optional[float], params: Optional[MFParams], g: float,
               quadrature: Optional[PsiQuadrature], pool: Optional[CellPool]) -> Spectrum:
    if B < 0:
        raise DomainError(f"fields must be >= 0, got {B}")
    if B == 0:
        ones = np.ones_like(f, dtype=complex)
        return Spectrum(f, ones, ones - 1.0, {"model": "empty"})
    f_z = zeeman_frequency(B, g)
    if line == "powder":
        if params is None:
            raise ValidationError("powder synthesis needs mean-field parameters")
        return powder_spinwave_s21(f, params.with_(B=float(B), g=g), model, T, quadrature=quadrature, pool=pool)
    G_row = collective_coupling(model, f_z, T) if coupling == "tanh_law" else float(G)
    Gamma_row = gamma_total(model, f_z, T) if Gamma is None else float(Gamma)
    return paramagnetic_s_params(f, f_z, G_row, Gamma_row)


def synthesize_sweep(frequencies, fields, temperature: float, model: Optional[CouplingModel] = None,
                     line: str = "paramagnetic", coupling: str = "tanh_law", G: Optional[float] = None,
                     Gamma: Optional[float] = None, background: Optional[Background] = None,
                     noise: float = 0.0, seed: Optional[int] = None, params: Optional[MFParams] = None,
                     g: float = CODATA.g_S, quadrature: Optional[PsiQuadrature] = None,
                     pool: Optional[CellPool] = None) -> RawSweep:
    """Raw S21 = F S21_norm and S11 = F S11_norm + R for every field, plus complex Gaussian noise.

    Args:
        frequencies: grid in Hz (strictly ascending).
        fields: field values in T (>= 0; B = 0 rows carry no resonance).
        temperature: K.
        line: "paramagnetic" collective line or "powder" spin-wave spectrum.
        coupling: "tanh_law" G(B, T) from the coupling model, or "fixed" G for every field.
        noise: standard deviation of each of Re and Im.
        seed: seed of numpy's default_rng; identical seeds give identical sweeps.
    """
    if line not in LINES:
        raise ValidationError(f"line must be one of {LINES}, got {line!r}")
    if coupling not in COUPLINGS:
        raise ValidationError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
    if coupling == "fixed" and (G is None or G < 0):
        raise ValidationError("fixed coupling needs G >= 0")
    if noise < 0:
        raise ValidationError(f"noise must be >= 0, got {noise}")
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    f = frequency_grid(frequencies)
    B = np.atleast_1d(np.asarray(fields, dtype=float))
    model = model or CouplingModel()
    bg = background or Background.identity()

    F = bg.transmission(f)
    s21 = np.empty((B.size, f.size), dtype=complex)
    s11 = np.empty_like(s21)
    for k, b in enumerate(B):
        row = _clean_row(f, float(b), temperature, line, model, coupling, G, Gamma, params, g, quadrature, pool)
        s21[k] = F * row.s21
        s11[k] = F * row.s11 + bg.reflection
    if noise > 0:
        rng = np.random.default_rng(seed)
        s21 += noise * (rng.standard_normal(s21.shape) + 1j * rng.standard_normal(s21.shape))
        s11 += noise * (rng.standard_normal(s11.shape) + 1j * rng.standard_normal(s11.shape))
    logger.debug("synthesized %d x %d sweep (%s, %s coupling, noise %.3g)", B.size, f.size, line, coupling, noise)
    return RawSweep(frequencies=f, fields=B, s21=s21, s11=s11, temperature=float(temperature))
