"""Dimer + diluted-chain model of the molar susceptibility."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from ..errors import DomainError, ValidationError
from ..physics.constants import CODATA, curie_constant_emu
from .hamiltonian import ChainSpec, solve_chain
from .thermo import as_temperature_grid, susceptibility

logger = logging.getLogger("spinline.chain_ed")

MAX_CHAIN_LENGTH = 8
DEFAULT_OCCUPANCY = 0.85

Weights = Union[Mapping[int, float], Iterable[float]]


def dilution_weights(p: float = DEFAULT_OCCUPANCY, n_max: int = MAX_CHAIN_LENGTH) -> np.ndarray:
    """P(n) proportional to (1 - p)^2 p^n for n = 1..n_max, renormalized."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"site occupancy p must lie in (0, 1), got {p}")
    n = np.arange(1, int(n_max) + 1)
    w = (1.0 - p) ** 2 * p ** n
    return w / w.sum()


def _as_weight_vector(length_weights: Optional[Weights]) -> np.ndarray:
    if length_weights is None:
        return dilution_weights()
    if isinstance(length_weights, Mapping):
        w = np.zeros(MAX_CHAIN_LENGTH)
        for n, v in length_weights.items():
            if not 1 <= int(n) <= MAX_CHAIN_LENGTH:
                raise ValidationError(f"chain length {n} outside 1..{MAX_CHAIN_LENGTH}")
            w[int(n) - 1] = float(v)
    else:
        w = np.asarray(list(length_weights), dtype=float)
        if w.size > MAX_CHAIN_LENGTH:
            raise ValidationError(f"at most {MAX_CHAIN_LENGTH} chain-length weights allowed")
        w = np.pad(w, (0, MAX_CHAIN_LENGTH - w.size))
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("chain-length weights must be finite and >= 0")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError(f"chain-length weights must sum to 1, got {w.sum():.12g}")
    return w


@dataclass
class CompositeResult:
    temperatures: np.ndarray
    chi_t: np.ndarray  # per radical, Curie constant of a free spin = 1
    dimer_chi_t: np.ndarray
    chain_chi_t: np.ndarray
    radical_fraction: float
    g: float

    @property
    def chi_t_emu(self) -> np.ndarray:
        return self.chi_t * curie_constant_emu(self.g)


def _chi_t_curve(spec: ChainSpec, T: np.ndarray) -> np.ndarray:
    spectrum = solve_chain(spec, 0.0)
    return np.array([susceptibility(spectrum, t) * t for t in T])


def composite_susceptibility(temperatures: Iterable[float], dimer_J: float, chain_J: float,
                             radical_fraction: float, length_weights: Optional[Weights] = None,
                             g: float = CODATA.g_S, epsilon: float = 0.0, psi: float = 0.0) -> CompositeResult:
    """chi T = x [ chiT_dimer / 2 + sum_n w_n chiT_chain(n) / 2 ]."""
    T = as_temperature_grid(temperatures)
    if not 0.0 < radical_fraction <= 1.0:
        raise DomainError(f"radical_fraction must lie in (0, 1], got {radical_fraction}")
    w = _as_weight_vector(length_weights)

    dimer = _chi_t_curve(ChainSpec(2, dimer_J, epsilon, psi, g), T)
    chain = np.zeros_like(T)
    for n, wn in enumerate(w, start=1):
        if wn == 0.0:
            continue
        chain += wn * _chi_t_curve(ChainSpec(n, chain_J, epsilon, psi, g), T)
    total = radical_fraction * (0.5 * dimer + 0.5 * chain)
    logger.debug("composite chiT: x=%.3f, J_dimer=%.3g K, J_chain=%.3g K", radical_fraction, dimer_J, chain_J)
    return CompositeResult(temperatures=T, chi_t=total, dimer_chi_t=dimer, chain_chi_t=chain,
                           radical_fraction=radical_fraction, g=g)


def correlator_estimate(chi_t, c_b):
    """Nearest-neighbour correlator estimate -|1 - chi T / C_B| (same units for both)."""
    return -np.abs(1.0 - np.asarray(chi_t, dtype=float) / float(c_b))
