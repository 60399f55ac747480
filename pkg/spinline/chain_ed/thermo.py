"""
Đại lượng nhiệt động từ phổ chéo hoá chính xác.

Chức năng:
- specific_heat: c = beta^2 Var(E) / n từ trị riêng (dịch theo năng lượng cơ bản).
- susceptibility: độ cảm nhiễu loạn chi = beta [Z2/Z0 - (Z1/Z0)^2] / n với K(X) = (e^X - 1)/X.
- magnetization, correlator_xx, entropy, free_energy.
- thermo_curves / powder_average_thermo: ThermoResult trên lưới nhiệt độ, trung bình theo psi.

Ngữ cảnh sử dụng:
- chi là dm/db với b = g mu_B B / k_B (đơn vị K), nên hằng số Curie mỗi spin bằng 1;
  ThermoResult.chi_t_emu(g) đổi sang emu K/(mol Oe).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from ..errors import DomainError, ValidationError
from ..physics.constants import curie_constant_emu, UNITS
from ..physics.quadrature import PsiQuadrature, psi_quadrature
from .hamiltonian import ChainSpec, SpectrumED, site_operator, solve_chain, total_spin_operator, Y_AXIS

logger = logging.getLogger("spinline.chain_ed")


def _check_temperature(T: float) -> float:
    T = float(T)
    if not np.isfinite(T) or T <= 0:
        raise DomainError(f"temperature must be > 0, got {T}")
    return T


def _boltzmann(energies: np.ndarray, T: float):
    """Shifted weights w_m = exp(-(E_m - E_0)/T) and their sum."""
    w = np.exp(-(energies - energies[0]) / T)
    return w, float(w.sum())


def specific_heat(spectrum: SpectrumED, T: float, n_states: Optional[int] = None) -> float:
    """Specific heat per spin in units of k_B.

    n_states keeps only the lowest states; the full spectrum is the physical answer.
    """
    T = _check_temperature(T)
    E = spectrum.eigenvalues if n_states is None else spectrum.eigenvalues[: int(n_states)]
    w, Z = _boltzmann(E, T)
    dE = E - E[0]
    mean = float(np.dot(w, dE)) / Z
    var = float(np.dot(w, (dE - mean) ** 2)) / Z
    return var / (T * T) / spectrum.n_spins


def free_energy(spectrum: SpectrumED, T: float) -> float:
    """F = -T ln Z in K (whole chain)."""
    T = _check_temperature(T)
    return -T * float(logsumexp(-spectrum.eigenvalues / T))


def entropy(spectrum: SpectrumED, T: float) -> float:
    """Entropy per spin in units of k_B."""
    T = _check_temperature(T)
    E = spectrum.eigenvalues
    w, Z = _boltzmann(E, T)
    mean = float(np.dot(w, E - E[0])) / Z
    return (np.log(Z) + mean / T) / spectrum.n_spins


def _probe_operator(spectrum: SpectrumED, axis) -> np.ndarray:
    key = ("Q", tuple(np.round(np.asarray(axis, dtype=float), 15)))
    cached = spectrum._ops.get(key)
    if cached is None:
        Q = total_spin_operator(spectrum.n_spins, axis)
        cached = (Q, spectrum.in_eigenbasis(Q))
        spectrum._ops[key] = cached
    return cached[1]


def susceptibility(spectrum: SpectrumED, T: float, probe_axis=None) -> float:
    """Per-spin susceptibility d<Q>/db / n along probe_axis (default: field axis)."""
    T = _check_temperature(T)
    if spectrum.eigenvectors is None:
        raise ValidationError("susceptibility needs eigenvectors")
    axis = spectrum.field_axis if probe_axis is None else probe_axis
    Qe = _probe_operator(spectrum, axis)
    E = spectrum.eigenvalues
    w, Z0 = _boltzmann(E, T)
    Z1 = float(np.dot(w, np.real(np.diag(Qe))))
    # X_mn = beta (E_m - E_n); term_mn = w_m K(X_mn)
    X = (E[:, None] - E[None, :]) / T
    wm = w[:, None]
    wn = w[None, :]
    small = np.abs(X) <= 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        k_small = np.where(X == 0.0, 1.0, np.expm1(np.where(small, X, 0.0)) / np.where(X == 0.0, 1.0, X))
        term = np.where(small, wm * k_small, (wn - wm) / np.where(small, 1.0, X))
    Z2 = float(np.sum(term * np.abs(Qe) ** 2))
    chi = (Z2 / Z0 - (Z1 / Z0) ** 2) / T
    return chi / spectrum.n_spins


def magnetization(spectrum: SpectrumED, T: float, probe_axis=None) -> float:
    """Per-spin thermal average of probe_axis . sigma (default: field axis)."""
    T = _check_temperature(T)
    if spectrum.eigenvectors is None:
        raise ValidationError("magnetization needs eigenvectors")
    axis = spectrum.field_axis if probe_axis is None else probe_axis
    Qe = _probe_operator(spectrum, axis)
    w, Z = _boltzmann(spectrum.eigenvalues, T)
    return float(np.dot(w, np.real(np.diag(Qe)))) / Z / spectrum.n_spins


def correlator_xx(spectrum: SpectrumED, T: float, i: int) -> float:
    """<sigma^x_i sigma^x_{i+1}> at temperature T."""
    T = _check_temperature(T)
    n = spectrum.n_spins
    if not 0 <= int(i) < n - 1:
        raise ValidationError(f"site {i} out of range for a {n}-spin chain")
    key = ("xx", int(i))
    cached = spectrum._ops.get(key)
    if cached is None:
        op = (site_operator(n, int(i), 0) @ site_operator(n, int(i) + 1, 0)).toarray()
        cached = (op, spectrum.in_eigenbasis(op))
        spectrum._ops[key] = cached
    w, Z = _boltzmann(spectrum.eigenvalues, T)
    return float(np.dot(w, np.real(np.diag(cached[1])))) / Z


def mean_correlator_xx(spectrum: SpectrumED, T: float) -> float:
    n = spectrum.n_spins
    if n < 2:
        return float("nan")
    return float(np.mean([correlator_xx(spectrum, T, i) for i in range(n - 1)]))


@dataclass
class ThermoResult:
    temperatures: np.ndarray
    specific_heat: np.ndarray
    chi: np.ndarray
    chi_T: np.ndarray
    magnetization: np.ndarray
    correlator_xx: np.ndarray
    field: float = 0.0
    n_spins: int = 1
    psi: float = float("nan")

    def chi_emu(self, g: float) -> np.ndarray:
        """Molar susceptibility in emu/(mol Oe)."""
        return self.chi * curie_constant_emu(g)

    def chi_t_emu(self, g: float) -> np.ndarray:
        return self.chi_T * curie_constant_emu(g)

    def to_frame(self) -> pd.DataFrame:
        T = self.temperatures
        return pd.DataFrame({
            "T_K": T,
            "B_T": np.full_like(T, self.field),
            "psi_rad": np.full_like(T, self.psi),
            "n": np.full(T.shape, self.n_spins, dtype=int),
            "c_per_spin": self.specific_heat,
            "chi": self.chi,
            "chiT": self.chi_T,
            "m": self.magnetization,
            "corr_xx": self.correlator_xx,
        })


def as_temperature_grid(temperatures: Iterable[float]) -> np.ndarray:
    T = np.atleast_1d(np.asarray(temperatures, dtype=float))
    if T.size == 0:
        raise ValidationError("temperature grid is empty")
    if np.any(~np.isfinite(T)) or np.any(T <= 0):
        raise DomainError("temperature grid must be finite and > 0")
    return T


def thermo_curves(spectrum: SpectrumED, temperatures: Iterable[float], probe_axis=None) -> ThermoResult:
    T = as_temperature_grid(temperatures)
    c = np.array([specific_heat(spectrum, t) for t in T])
    chi = np.array([susceptibility(spectrum, t, probe_axis) for t in T])
    m = np.array([magnetization(spectrum, t, probe_axis) for t in T])
    xx = np.array([mean_correlator_xx(spectrum, t) for t in T])
    psi = spectrum.spec.psi if spectrum.spec is not None else float("nan")
    return ThermoResult(temperatures=T, specific_heat=c, chi=chi, chi_T=chi * T, magnetization=m,
                        correlator_xx=xx, field=spectrum.field, n_spins=spectrum.n_spins, psi=psi)


def powder_average_thermo(template: ChainSpec, temperatures: Iterable[float], B: float = 0.0,
                          quadrature: Optional[PsiQuadrature] = None, pool=None) -> ThermoResult:
    """Average ThermoResult over psi with a uniform-measure Gauss-Legendre rule."""
    T = as_temperature_grid(temperatures)
    quad = quadrature or psi_quadrature(measure="uniform")
    if len(quad) < 8:
        raise ValidationError("powder average needs at least 8 quadrature nodes")

    def one(psi: float) -> ThermoResult:
        return thermo_curves(solve_chain(replace(template, psi=float(psi)), B, Y_AXIS), T)

    if pool is None:
        results = [one(p) for p in quad.nodes]
    else:
        cells = pool.map(one, [(float(p),) for p in quad.nodes])
        failed = [c for c in cells if c.error is not None]
        if failed:
            raise failed[0].error
        results = [c.value for c in cells]

    def avg(attr: str) -> np.ndarray:
        return quad.average(np.stack([getattr(r, attr) for r in results]))

    chi = avg("chi")
    logger.debug("powder average n=%d over %d psi nodes", template.n_spins, len(quad))
    return ThermoResult(temperatures=T, specific_heat=avg("specific_heat"), chi=chi, chi_T=chi * T,
                        magnetization=avg("magnetization"), correlator_xx=avg("correlator_xx"),
                        field=B, n_spins=template.n_spins)


def field_derivative_magnetization(spec: ChainSpec, T: float, B: float, delta: float = 1e-4) -> float:
    """Central difference dm/dB (1/T) of the exact magnetization along y."""
    m_plus = magnetization(solve_chain(spec, B + delta), T, Y_AXIS)
    m_minus = magnetization(solve_chain(spec, B - delta), T, Y_AXIS)
    return (m_plus - m_minus) / (2.0 * delta)


def chi_to_field_derivative(chi: float, g: float) -> float:
    """Convert dm/db (1/K) to dm/dB (1/T)."""
    return float(chi * UNITS.tesla_to_kelvin(1.0, g))
