"""Orientation-resolved resonance frequencies for the powder average."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..physics.quadrature import PsiQuadrature, psi_quadrature
from ..meanfield.model import MFParams
from ..meanfield.solver import PARAMAGNETIC, neel_temperature
from ..runtime.pool import CellPool
from .dynamics import solve_modes, to_hz

logger = logging.getLogger("spinline.llg")


@dataclass
class PowderMode:
    psi: float
    weight: float
    omega: complex  # K units
    phase: str = ""
    flags: Tuple[str, ...] = ()
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error and np.isfinite(self.omega.real)

    @property
    def omega_hz(self) -> complex:
        return to_hz(self.omega)


def powder_neel_temperature(params: MFParams) -> float:
    """Highest ordering temperature over orientations; J for every eps <= 0."""
    return max(neel_temperature(params.with_(psi=p)) for p in (0.0, 0.5 * np.pi))


def powder_mode_distribution(params: MFParams, T: float, B: float, gamma: float,
                             quadrature: Optional[PsiQuadrature] = None,
                             pool: Optional[CellPool] = None) -> List[PowderMode]:
    """Selected complex mode per psi node, in psi order, weights from a sin(psi) rule."""
    quad = quadrature or psi_quadrature(measure="sin")
    base = params.with_(T=float(T), B=float(B))
    if T >= powder_neel_temperature(base):
        b = base.zeeman
        omega = complex(b, -gamma * b)
        return [PowderMode(float(p), float(w), omega, PARAMAGNETIC) for p, w in zip(quad.nodes, quad.weights)]

    def one(psi: float):
        return solve_modes(base.with_(psi=psi), gamma)

    cells = [(float(p),) for p in quad.nodes]
    results = (pool or CellPool(1)).map(one, cells)
    out: List[PowderMode] = []
    for (psi, w), res in zip(zip(quad.nodes, quad.weights), results):
        if res.error is not None:
            logger.error("powder node psi=%.6g (T=%.6g K, B=%.6g T) failed: %s", psi, T, B, res.error)
            out.append(PowderMode(float(psi), float(w), complex(np.nan, np.nan), "", ("failed",), str(res.error)))
            continue
        modes = res.value
        out.append(PowderMode(float(psi), float(w), modes.selected, modes.phase, modes.flags))
    return out


def modes_to_frame(modes: List[PowderMode], T: float, B: float) -> pd.DataFrame:
    hz = np.array([m.omega_hz for m in modes], dtype=complex)
    return pd.DataFrame({
        "T_K": np.full(len(modes), float(T)),
        "B_T": np.full(len(modes), float(B)),
        "psi_rad": [m.psi for m in modes],
        "weight": [m.weight for m in modes],
        "re_omega_GHz": hz.real * 1e-9,
        "im_omega_GHz": hz.imag * 1e-9,
        "phase_label": [m.phase for m in modes],
        "flags": [";".join(m.flags) for m in modes],
    })
