"""
Hằng số vật lý và quy ước đơn vị dùng chung.

Chức năng:
- PhysicalConstants: bộ hằng số CODATA-2018 cố định trong mã nguồn (SI).
- UnitPolicy: chuyển đổi tần số góc <-> tần số thường, GHz, Hz <-> K, T <-> K.
- zeeman_frequency, bose_occupation, spin_polarization: các hàm thuần dùng ở mọi module.

Ngữ cảnh sử dụng:
- Tính toán bên trong dùng SI và tần số thường (Hz); CSV/CLI dùng GHz, T, K.
- Năng lượng trao đổi J và các trường hiệu dụng được biểu diễn theo J/k_B (đơn vị K).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..errors import DomainError

CONSTANTS_VERSION = "CODATA-2018"

# Spin-1/2 operators are half the Pauli matrices (J sigma.sigma = 4 J s.s). Fields and
# frequencies of the mean-field model are measured against the spin-1/2 exchange:
# b = g mu_B B / (k_B kappa) in the free energy, laboratory Omega = kappa Omega_model.
SPIN_HALF_EXCHANGE_SCALE = 0.25


@dataclass(frozen=True)
class PhysicalConstants:
    g_S: float = 2.004
    mu_B: float = 9.2740100783e-24  # J/T
    k_B: float = 1.380649e-23  # J/K, exact
    h: float = 6.62607015e-34  # J s, exact
    N_A: float = 6.02214076e23  # 1/mol, exact

    @property
    def hbar(self) -> float:
        return self.h / (2.0 * math.pi)

    # CGS values for the emu exporter
    @property
    def mu_B_cgs(self) -> float:
        return self.mu_B * 1.0e3  # erg/G

    @property
    def k_B_cgs(self) -> float:
        return self.k_B * 1.0e7  # erg/K


CODATA = PhysicalConstants()


@dataclass(frozen=True)
class UnitPolicy:
    """Internal: angular frequency, SI. External: linear GHz, T, K."""

    constants: PhysicalConstants = CODATA

    @staticmethod
    def angular_to_linear(omega):
        return np.asarray(omega) / (2.0 * np.pi)

    @staticmethod
    def linear_to_angular(f):
        return np.asarray(f) * (2.0 * np.pi)

    @staticmethod
    def hz_to_ghz(f):
        return np.asarray(f) * 1.0e-9

    @staticmethod
    def ghz_to_hz(f_ghz):
        return np.asarray(f_ghz) * 1.0e9

    def hz_to_kelvin(self, f):
        """Linear frequency (Hz) to energy h f / k_B in K."""
        c = self.constants
        return np.asarray(f) * (c.h / c.k_B)

    def kelvin_to_hz(self, energy_k):
        c = self.constants
        return np.asarray(energy_k) * (c.k_B / c.h)

    def tesla_to_kelvin(self, B, g: float | None = None):
        """Zeeman energy g mu_B B / k_B in K."""
        c = self.constants
        g = c.g_S if g is None else g
        return np.asarray(B) * (g * c.mu_B / c.k_B)

    def kelvin_to_tesla(self, energy_k, g: float | None = None):
        c = self.constants
        g = c.g_S if g is None else g
        return np.asarray(energy_k) * (c.k_B / (g * c.mu_B))


UNITS = UnitPolicy()


def _check_nonnegative(name: str, value: np.ndarray) -> None:
    if np.any(~np.isfinite(value)) or np.any(value < 0):
        raise DomainError(f"{name} must be finite and >= 0, got {value!r}")


def zeeman_frequency(B: ArrayLike, g: float = CODATA.g_S):
    """Linear Zeeman frequency g mu_B B / h in Hz.

    Args:
        B: magnetic field in T (scalar or array), B >= 0.
        g: g-factor.

    Returns:
        float for scalar input, ndarray otherwise.
    """
    b = np.asarray(B, dtype=float)
    _check_nonnegative("B", b)
    f = b * (g * CODATA.mu_B / CODATA.h)
    return float(f) if f.ndim == 0 else f


def zeeman_energy_kelvin(B: ArrayLike, g: float = CODATA.g_S):
    b = np.asarray(B, dtype=float)
    _check_nonnegative("B", b)
    e = UNITS.tesla_to_kelvin(b, g)
    return float(e) if e.ndim == 0 else e


def _reduced_energy(f: np.ndarray, T: np.ndarray) -> np.ndarray:
    # x = h f / k_B T, +inf where T == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(T > 0, (CODATA.h * f) / (CODATA.k_B * np.where(T > 0, T, 1.0)), np.inf)


def bose_occupation(f: ArrayLike, T: ArrayLike):
    """Bose-Einstein occupation 1/(exp(hf/k_BT) - 1); 0 at T = 0."""
    fa = np.asarray(f, dtype=float)
    Ta = np.asarray(T, dtype=float)
    _check_nonnegative("T", Ta)
    _check_nonnegative("f", fa)
    fa, Ta = np.broadcast_arrays(fa, Ta)
    if np.any((fa == 0) & (Ta > 0)):
        raise DomainError("bose_occupation diverges at f = 0 for T > 0")
    x = _reduced_energy(fa, Ta)
    with np.errstate(over="ignore"):
        n = np.where(np.isinf(x), 0.0, 1.0 / np.expm1(np.where(np.isinf(x), 1.0, x)))
    n = np.where(Ta == 0, 0.0, n)
    return float(n) if n.ndim == 0 else n


def spin_polarization(f: ArrayLike, T: ArrayLike):
    """Thermal polarization <sigma_z> = tanh(h f / 2 k_B T) in [0, 1]."""
    fa = np.asarray(f, dtype=float)
    Ta = np.asarray(T, dtype=float)
    _check_nonnegative("f", fa)
    _check_nonnegative("T", Ta)
    fa, Ta = np.broadcast_arrays(fa, Ta)
    x = _reduced_energy(fa, Ta)
    p = np.where(fa == 0, 0.0, np.tanh(0.5 * np.where(np.isinf(x), 1.0e3, x)))
    return float(p) if p.ndim == 0 else p


def curie_constant_emu(g: float = CODATA.g_S) -> float:
    """Molar spin-1/2 Curie constant N_A g^2 mu_B^2 / (4 k_B) in emu K / (mol Oe)."""
    c = CODATA
    return c.N_A * g * g * c.mu_B_cgs ** 2 / (4.0 * c.k_B_cgs)
