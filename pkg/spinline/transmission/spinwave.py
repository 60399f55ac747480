"""Powder-averaged spin-wave transmission below the ordering temperature."""
from __future__ import annotations

import logging
from typing import Iterable, Optional

import numpy as np

from ..errors import ConvergenceError, DomainError, QuadratureError, ValidationError
from ..llg.dynamics import gilbert_from_linewidth, solve_modes, to_hz
from ..llg.powder import powder_mode_distribution, powder_neel_temperature
from ..meanfield.model import MFParams
from ..physics.constants import zeeman_frequency
from ..physics.quadrature import PsiQuadrature, psi_quadrature
from ..runtime.pool import CellPool
from .models import CouplingModel, Spectrum, collective_coupling, frequency_grid, gamma_total, paramagnetic_s_params

logger = logging.getLogger("spinline.transmission")

MODES = ("magnon", "classical_mf")


def _coupling(model: CouplingModel, f_z: float, T: float, T_N: float, mode: str) -> float:
    if mode not in MODES:
        raise ValidationError(f"statistics mode must be one of {MODES}, got {mode!r}")
    # magnons freeze the polarized spin number at its value at the ordering temperature
    t_eff = max(T, T_N) if mode == "magnon" else T
    return collective_coupling(model, f_z, t_eff)


def _reference_damping(params: MFParams, gamma: float) -> float:
    """|Im Omega| (Hz) of the isotropic linearization at the same (T, B)."""
    ref = solve_modes(params.with_(epsilon=0.0, psi=0.0), gamma)
    if not np.isfinite(ref.selected.imag):
        raise ConvergenceError("isotropic reference linearization has no resonance mode",
                               cell=(params.T, params.B, 0.0))
    return abs(to_hz(ref.selected).imag)


def powder_spinwave_s21(frequencies, params: MFParams, model: CouplingModel, T: float,
                        gamma_gilbert: Optional[float] = None, quadrature: Optional[PsiQuadrature] = None,
                        mode: str = "magnon", pool: Optional[CellPool] = None) -> Spectrum:
    """S21 = 1 / (1 + sum_j w_j G / (Gamma + dGamma_j + i(Re Omega_j - w))).

    Above the ordering temperature every node sits at the Zeeman frequency and the
    paramagnetic line shape is returned. Below it, G keeps the N_eff of the chosen
    statistics mode and dGamma_j is the damping in excess of the isotropic chain.
    Any failed node raises QuadratureError naming its (psi, T, B).
    """
    f = frequency_grid(frequencies)
    if T <= 0:
        raise DomainError(f"T must be > 0, got {T}")
    B = params.B
    f_z = zeeman_frequency(B, params.g)
    if f_z <= 0:
        raise DomainError("powder spectrum needs B > 0")
    T_N = powder_neel_temperature(params)
    G = _coupling(model, f_z, T, T_N, mode)
    Gamma = gamma_total(model, f_z, T)
    gamma = gilbert_from_linewidth(Gamma, f_z) if gamma_gilbert is None else float(gamma_gilbert)
    meta = {"model": f"powder_{mode}", "T_K": float(T), "B_T": float(B), "G_Hz": G, "Gamma_Hz": Gamma,
            "gilbert": gamma, "epsilon": params.epsilon, "J_K": params.J, "mean_excess_Hz": 0.0}

    if T >= T_N:
        spec = paramagnetic_s_params(f, f_z, G, Gamma)
        spec.metadata.update(meta)
        return spec

    quad = quadrature or psi_quadrature(measure="sin")
    modes = powder_mode_distribution(params, T, B, gamma, quad, pool)
    failed = [(m.psi, float(T), float(B), m.error or "no resonance mode") for m in modes if not m.ok]
    if failed:
        raise QuadratureError(f"{len(failed)} of {len(modes)} powder nodes failed at T={T} K, B={B} T", failed)
    w = np.array([m.weight for m in modes])
    w = w / w.sum()
    omega = np.array([m.omega_hz for m in modes], dtype=complex)
    ref_damping = _reference_damping(params.with_(T=float(T)), gamma)
    excess = np.maximum(0.0, np.abs(omega.imag) - ref_damping)

    denom = (Gamma + excess)[None, :] + 1j * (omega.real[None, :] - f[:, None])
    chi = np.sum(w[None, :] * G / denom, axis=1)
    s21 = 1.0 / (1.0 + chi)
    meta.update({"center_spread_Hz": float(np.ptp(omega.real)), "mean_excess_Hz": float(w @ excess)})
    return Spectrum(f, s21, s21 - 1.0, meta)


def spectrum_visibility(spec: Spectrum) -> float:
    """eta = G / (G + Gamma + <dGamma>) from the rates behind a powder spectrum.

    The orientation spread of Re Omega broadens the line but leaves eta alone; the
    excess damping averaged over the powder adds to Gamma.
    """
    meta = spec.metadata
    G = float(meta["G_Hz"])
    width = float(meta["Gamma_Hz"]) + float(meta.get("mean_excess_Hz", 0.0))
    W = G + width
    if not W > 0:
        raise DomainError("visibility needs G + Gamma > 0")
    return G / W


def visibility_vs_temperature(mode: str, temperatures: Iterable[float], B: float, params: MFParams,
                              model: CouplingModel, gamma_gilbert: Optional[float] = None,
                              quadrature: Optional[PsiQuadrature] = None, span=(0.8, 1.25), n_points: int = 401,
                              pool: Optional[CellPool] = None) -> np.ndarray:
    """Visibility eta = G / (G + Gamma + <dGamma>) of the powder line along a temperature grid."""
    if mode not in MODES:
        raise ValidationError(f"statistics mode must be one of {MODES}, got {mode!r}")
    T = np.atleast_1d(np.asarray(temperatures, dtype=float))
    if T.size == 0:
        raise ValidationError("temperature grid is empty")
    p = params.with_(B=float(B))
    f_z = zeeman_frequency(B, p.g)
    f = f_z * np.linspace(span[0], span[1], int(n_points))
    out = np.empty(T.size)
    for k, t in enumerate(T):
        spec = powder_spinwave_s21(f, p, model, float(t), gamma_gilbert, quadrature, mode, pool)
        out[k] = spectrum_visibility(spec)
    logger.debug("%s visibility at B=%.4g T: %s", mode, B, np.array2string(out, precision=4))
    return out
