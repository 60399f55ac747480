"""Gauss-Legendre rules for orientation averages over the anisotropy angle psi."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import ValidationError

MIN_NODES = 8
DEFAULT_NODES = 64


@dataclass(frozen=True)
class PsiQuadrature:
    """Nodes psi_j and weights w_j with sum(w_j) == 1.

    measure="uniform": average over psi in [0, pi/2] with flat measure.
    measure="sin": average over psi in [0, pi/2] with weight sin(psi),
    Gauss-Legendre in x = cos(psi) on [0, 1] so the weight is exact.
    """

    nodes: np.ndarray
    weights: np.ndarray
    measure: str

    def __len__(self) -> int:
        return int(self.nodes.size)

    def average(self, values: np.ndarray) -> np.ndarray:
        """Weighted average along the first axis of values."""
        v = np.asarray(values)
        return np.tensordot(self.weights, v, axes=(0, 0))


def _legendre_unit(n: int):
    x, w = leggauss(n)
    # map [-1, 1] -> [0, 1]
    return 0.5 * (x + 1.0), 0.5 * w


def psi_quadrature(n_nodes: int = DEFAULT_NODES, measure: str = "uniform") -> PsiQuadrature:
    if int(n_nodes) < MIN_NODES:
        raise ValidationError(f"psi quadrature needs at least {MIN_NODES} nodes, got {n_nodes}")
    n = int(n_nodes)
    u, w = _legendre_unit(n)
    if measure == "uniform":
        nodes = 0.5 * np.pi * u
    elif measure == "sin":
        # x = cos(psi); ascending psi
        nodes = np.arccos(u)[::-1]
        w = w[::-1]
    else:
        raise ValidationError(f"unknown quadrature measure {measure!r}")
    return PsiQuadrature(nodes=np.ascontiguousarray(nodes), weights=np.ascontiguousarray(w), measure=measure)
