"""
Hamiltonian chuỗi Heisenberg dị hướng hữu hạn và chéo hoá chính xác.

Chức năng:
- ChainSpec: mô tả một chuỗi spin-1/2 (độ dài, J, epsilon, psi, g, biên).
- build_hamiltonian: ma trận Hermite 2^n x 2^n (đơn vị K) theo quy ước ma trận Pauli:
  H = sum_<ij> [Jx sx_i sx_j + Jy sy_i sy_j + Jz sz_i sz_j] - b sum_i (e . sigma_i),
  với (Jx, Jy, Jz) = J (1, 1 + eps sin psi, 1 + eps cos psi) và b = g mu_B B / k_B.
- diagonalize / solve_chain: phổ đầy đủ (scipy.linalg.eigh) kèm vector riêng.

Ngữ cảnh sử dụng:
- Giới hạn n <= 10 (2^10 = 1024 trạng thái) để bảo vệ bộ nhớ.
- Trục từ trường mặc định là y (hệ quy chiếu phòng thí nghiệm).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ..errors import DomainError, ValidationError
from ..physics.constants import CODATA, UNITS

logger = logging.getLogger("spinline.chain_ed")

MAX_SPINS = 10
Y_AXIS = (0.0, 1.0, 0.0)

_PAULI = (
    sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)),
    sp.csr_matrix(np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)),
    sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)),
)


@dataclass(frozen=True)
class ChainSpec:
    n_spins: int
    J: float
    epsilon: float = 0.0
    psi: float = 0.0
    g: float = CODATA.g_S
    boundary: str = "open"

    def __post_init__(self) -> None:
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValidationError(f"n_spins must be an integer >= 1, got {self.n_spins}")
        if self.n_spins > MAX_SPINS:
            raise DomainError(f"n_spins={self.n_spins} exceeds the {MAX_SPINS}-spin memory guard")
        if not abs(self.epsilon) < 1.0:
            raise DomainError(f"|epsilon| must be < 1, got {self.epsilon}")
        if not 0.0 <= self.psi <= np.pi:
            raise DomainError(f"psi must lie in [0, pi], got {self.psi}")
        if self.boundary not in ("open", "periodic"):
            raise ValidationError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if not np.isfinite(self.J):
            raise ValidationError("J must be finite")

    @property
    def dimension(self) -> int:
        return 2 ** self.n_spins

    @property
    def couplings(self) -> Tuple[float, float, float]:
        """Diagonal of the exchange tensor (Jx, Jy, Jz) in K."""
        J, e = self.J, self.epsilon
        return (J, J * (1.0 + e * np.sin(self.psi)), J * (1.0 + e * np.cos(self.psi)))

    def bonds(self) -> Tuple[Tuple[int, int], ...]:
        n = self.n_spins
        pairs = [(i, i + 1) for i in range(n - 1)]
        # a ring needs three sites, otherwise the closing bond duplicates (0, 1)
        if self.boundary == "periodic" and n >= 3:
            pairs.append((n - 1, 0))
        return tuple(pairs)


@dataclass
class SpectrumED:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    field: float = 0.0
    spec: Optional[ChainSpec] = None
    field_axis: Tuple[float, float, float] = Y_AXIS
    _ops: dict = dc_field(default_factory=dict, repr=False)

    @property
    def n_spins(self) -> int:
        if self.spec is not None:
            return self.spec.n_spins
        return int(round(np.log2(self.eigenvalues.size)))

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def in_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        """V^dagger op V, cached per operator identity."""
        if self.eigenvectors is None:
            raise ValidationError("spectrum carries no eigenvectors")
        key = id(op)
        hit = self._ops.get(key)
        if hit is not None and hit[0] is op:
            return hit[1]
        V = self.eigenvectors
        out = V.conj().T @ op @ V
        self._ops[key] = (op, out)
        return out


@lru_cache(maxsize=64)
def site_operator(n_spins: int, site: int, component: int) -> sp.csr_matrix:
    """sigma^component acting on one site of an n-spin register (site 0 leftmost)."""
    left = sp.identity(2 ** site, format="csr", dtype=complex)
    right = sp.identity(2 ** (n_spins - site - 1), format="csr", dtype=complex)
    return sp.kron(sp.kron(left, _PAULI[component]), right, format="csr")


def normalize_axis(axis) -> np.ndarray:
    a = np.asarray(axis, dtype=float).reshape(3)
    norm = np.linalg.norm(a)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValidationError(f"axis must be a finite nonzero 3-vector, got {axis!r}")
    if abs(norm - 1.0) > 1e-9:
        raise ValidationError(f"axis must be normalized, |axis| = {norm}")
    return a / norm


def total_spin_operator(n_spins: int, axis) -> np.ndarray:
    """Q = sum_i axis . sigma_i as a dense matrix."""
    a = normalize_axis(axis)
    dim = 2 ** n_spins
    Q = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(n_spins):
        for c in range(3):
            if a[c] != 0.0:
                Q = Q + a[c] * site_operator(n_spins, i, c)
    return Q.toarray()


def build_hamiltonian(spec: ChainSpec, B: float = 0.0, field_axis=Y_AXIS) -> np.ndarray:
    if spec.n_spins > MAX_SPINS:
        raise DomainError(f"n_spins={spec.n_spins} exceeds the memory guard")
    # B is a signed field along field_axis
    axis = normalize_axis(field_axis)
    n = spec.n_spins
    dim = spec.dimension
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for (i, j) in spec.bonds():
        for c, Jc in enumerate(spec.couplings):
            if Jc != 0.0:
                H = H + Jc * (site_operator(n, i, c) @ site_operator(n, j, c))
    b = float(UNITS.tesla_to_kelvin(B, spec.g))
    if b != 0.0:
        H = H - b * sp.csr_matrix(total_spin_operator(n, axis))
    return H.toarray()


def diagonalize(H: np.ndarray, spec: Optional[ChainSpec] = None, field: float = 0.0,
                field_axis=Y_AXIS) -> SpectrumED:
    """Full eigendecomposition of a Hermitian matrix.

    Raises ValidationError when H deviates from Hermitian by more than 1e-12
    relative to its largest entry.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"H must be square, got shape {H.shape}")
    scale = max(float(np.max(np.abs(H))) if H.size else 0.0, 1.0e-300)
    asym = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if asym > 1e-12 * scale:
        raise ValidationError(f"matrix is not Hermitian (relative asymmetry {asym / scale:.2e})")
    w, V = scipy.linalg.eigh(H)
    logger.debug("diagonalized dim=%d, E0=%.6g", H.shape[0], w[0] if w.size else float("nan"))
    return SpectrumED(eigenvalues=w, eigenvectors=V, field=field, spec=spec,
                      field_axis=tuple(np.asarray(field_axis, dtype=float)))


def solve_chain(spec: ChainSpec, B: float = 0.0, field_axis=Y_AXIS) -> SpectrumED:
    return diagonalize(build_hamiltonian(spec, B, field_axis), spec=spec, field=B, field_axis=field_axis)
