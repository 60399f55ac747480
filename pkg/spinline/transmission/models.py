"""
Phổ S21/S11 theo lý thuyết vào-ra cho ống dẫn sóng một chiều.

Chức năng:
- CouplingModel: alpha_N = 2 pi alpha N, gamma_phi, N, Gamma_inh (mọi tốc độ theo Hz tuyến tính).
- gamma_total, collective_coupling: Gamma = gamma_phi + (2 n + 1) 2 pi lambda^2 + Gamma_inh, G = alpha_N f tanh(h f / 2 k_B T).
- single_spin_s_params, ensemble_s_params (ma trận truyền), paramagnetic_s_params (dạng tập thể).
- visibility, resonator_equivalent.

Ngữ cảnh sử dụng:
- Đường truyền lý tưởng: S11 = S21 - 1 tại mọi điểm cho mọi mô hình ở đây.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DomainError, ValidationError
from ..physics.constants import bose_occupation, spin_polarization


@dataclass(frozen=True)
class CouplingModel:
    alpha_N: float = 0.00441
    gamma_phi: float = 4.8e6  # Hz
    N: float = 5.0e16
    gamma_inh: float = 9.2e6  # Hz

    def __post_init__(self) -> None:
        if not self.alpha_N > 0:
            raise DomainError(f"alpha_N must be > 0, got {self.alpha_N}")
        if self.gamma_phi < 0 or self.gamma_inh < 0:
            raise DomainError("linewidth contributions must be >= 0")
        if not self.N > 0:
            raise DomainError(f"spin count N must be > 0, got {self.N}")

    def single_spin_rate(self, f: float) -> float:
        """2 pi lambda^2 per spin in Hz, with lambda^2 proportional to the frequency."""
        return self.alpha_N * f / self.N


@dataclass
class Spectrum:
    frequencies: np.ndarray  # Hz
    s21: np.ndarray
    s11: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def abs_s21(self) -> np.ndarray:
        return np.abs(self.s21)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "f_GHz": self.frequencies * 1e-9,
            "re_s21": self.s21.real,
            "im_s21": self.s21.imag,
            "abs_s21": np.abs(self.s21),
            "phase_s21_rad": np.angle(self.s21),
            "re_s11": self.s11.real,
            "im_s11": self.s11.imag,
        })


def frequency_grid(frequencies) -> np.ndarray:
    f = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if f.size == 0:
        raise ValidationError("frequency grid is empty")
    if not np.all(np.isfinite(f)):
        raise ValidationError("frequency grid must be finite")
    return f


def _positive(name: str, value: float) -> float:
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be > 0, got {value}")
    return float(value)


def gamma_total(model: CouplingModel, f: float, T: float) -> float:
    """Total single-spin decay rate in Hz."""
    f = _positive("f", f)
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T}")
    n = bose_occupation(f, T)
    return model.gamma_phi + (2.0 * n + 1.0) * model.single_spin_rate(f) + model.gamma_inh


def collective_coupling(model: CouplingModel, f: float, T: float) -> float:
    """Collective coupling G = alpha_N f tanh(h f / 2 k_B T) in Hz."""
    f = _positive("f", f)
    _positive("T", T)
    return model.alpha_N * f * spin_polarization(f, T)


def _lorentz_denominator(frequencies: np.ndarray, omega: float, width: float) -> np.ndarray:
    # i (Omega - w) + Gamma
    return 1j * (omega - frequencies) + width


def single_spin_s_params(frequencies, omega: float, model: CouplingModel, T: float,
                         gamma: Optional[float] = None, coupling: Optional[float] = None) -> Spectrum:
    """S21 = 1 - g / (i(Omega - w) + Gamma) with g = 2 pi lambda^2 <sigma_z>."""
    f = frequency_grid(frequencies)
    if coupling is None:
        coupling = model.single_spin_rate(omega) * spin_polarization(omega, T)
    if gamma is None:
        gamma = gamma_total(model, omega, T)
    s21 = 1.0 - coupling / _lorentz_denominator(f, omega, gamma)
    return Spectrum(f, s21, s21 - 1.0, {"model": "single_spin", "T_K": T, "g_Hz": coupling, "Gamma_Hz": gamma})


def ensemble_s_params(frequencies, spins: Sequence[Tuple[float, float]], gamma: float,
                      multiplicity: Optional[Sequence[float]] = None) -> Spectrum:
    """Transfer-matrix composition: S21 = 1 / (1 - sum theta_j), theta_j = S11_j / S21_j."""
    f = frequency_grid(frequencies)
    spins = list(spins)
    if multiplicity is None:
        multiplicity = np.ones(len(spins))
    mult = np.asarray(multiplicity, dtype=float)
    if mult.shape != (len(spins),):
        raise ValidationError("multiplicity must match the number of spins")
    theta = np.zeros(f.shape, dtype=complex)
    for (om, g), m in zip(spins, mult):
        if g < 0:
            raise DomainError(f"single-spin coupling must be >= 0, got {g}")
        theta += m * (-g / (_lorentz_denominator(f, om, gamma) - g))
    s21 = 1.0 / (1.0 - theta)
    return Spectrum(f, s21, s21 - 1.0, {"model": "ensemble", "Gamma_Hz": gamma, "n_spins": float(mult.sum())})


def paramagnetic_s_params(frequencies, omega: float, G: float, gamma: float) -> Spectrum:
    """Collective line shape S21 = 1 - G / (G + Gamma + i(Omega - w))."""
    f = frequency_grid(frequencies)
    if G < 0 or gamma < 0 or (G == 0 and gamma == 0):
        raise DomainError("need G, Gamma >= 0 and not both zero")
    s11 = -G / (G + _lorentz_denominator(f, omega, gamma))
    s21 = 1.0 + s11
    return Spectrum(f, s21, s11, {"model": "paramagnetic", "Omega_Hz": omega, "G_Hz": G, "Gamma_Hz": gamma})


def visibility(G: float, gamma: float) -> float:
    if G + gamma <= 0:
        raise DomainError("G + Gamma must be > 0")
    return G / (G + gamma)


def resonator_equivalent(G: float, f: float) -> float:
    """Equivalent cavity coupling sqrt(G f / pi) in Hz (linear units throughout)."""
    if G < 0 or f <= 0:
        raise DomainError("need G >= 0 and f > 0")
    return float(np.sqrt(G * f / np.pi))
