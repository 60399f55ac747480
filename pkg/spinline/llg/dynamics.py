"""
Tuyến tính hoá phương trình Landau-Lifshitz-Gilbert quanh trạng thái cân bằng trường trung bình.

Chức năng:
- linearize: ma trận động lực 4x4 cho (d theta1, d phi1, d theta2, d phi2), gồm khối tuế sai và khối tắt dần,
  lấy đạo hàm bậc hai của đúng năng lượng tự do mà solve_equilibrium cực tiểu hoá.
- resonance_modes: trị riêng lambda -> Omega = i kappa lambda (quy ước e^{-i Omega t}, mode tắt dần có Im <= 0).
- analytic_resonance: công thức bậc nhất theo eps sqrt(B_bar^2 - 2 (kappa J)^2 eps (sin psi - cos psi)).
- canted_resonance: nghiệm đóng chính xác của mode đồng pha cho trạng thái trong mặt phẳng yz.

Ngữ cảnh sử dụng:
- Độ lớn M_alpha giữ cố định theo giá trị nhiệt, các góc lấy thẳng từ MFState nên bước nhảy spin-flop
  của Omega trùng với ngưỡng và nhãn pha của trường trung bình.
- Omega tính theo đơn vị K (hbar Omega / k_B) đã nhân hệ số hiệu chuẩn kappa = exchange_scale;
  to_hz đổi sang Hz tuyến tính.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..errors import ConvergenceError, DomainError, LinearizationError
from ..meanfield.model import MFParams, exchange_tensor, free_energy_gradient, unit_vector
from ..meanfield.solver import MFState, solve_equilibrium
from ..physics.constants import UNITS

logger = logging.getLogger("spinline.llg")

FD_STEP = 1.0e-5  # rad
POLE_TOL = 1.0e-3
GRADIENT_TOL = 1.0e-8
ZERO_MODE_REL = 1.0e-6
CONDITION_LIMIT = 1.0e8
MIN_MOMENT = 1.0e-12

_Y = np.array([0.0, 1.0, 0.0])


@dataclass
class LinearizedDynamics:
    matrix: np.ndarray  # model units; multiply eigenvalues by frequency_scale
    equilibrium: MFState
    gilbert_gamma: float
    hessian: np.ndarray = field(repr=False)
    frame: np.ndarray = field(repr=False)  # rows: working axes in lab coordinates
    angles: np.ndarray = field(repr=False)  # working-frame (theta1, phi1, theta2, phi2)
    frequency_scale: float = 1.0
    params: Optional[MFParams] = field(default=None, repr=False)
    rotated: bool = False


@dataclass
class ResonanceModes:
    omegas: np.ndarray  # complex, K units, sorted by real part
    selected: complex
    psi: float
    flags: Tuple[str, ...] = ()
    eigvec_condition: float = 1.0
    phase: str = ""

    @property
    def selected_hz(self) -> complex:
        return to_hz(self.selected)


def to_hz(omega_k):
    """Angular frequency in K units (hbar Omega / k_B) to linear frequency in Hz."""
    factor = float(UNITS.kelvin_to_hz(1.0))
    return np.asarray(omega_k) * factor if np.ndim(omega_k) else complex(omega_k) * factor


def gilbert_from_linewidth(gamma_hz: float, f_hz: float) -> float:
    """Dimensionless damping Gamma / f_Z."""
    if f_hz <= 0:
        raise DomainError("Zeeman frequency must be > 0 to define the damping ratio")
    return float(gamma_hz) / float(f_hz)


# ---- energy in a working frame -------------------------------------------------


class _FrameEnergy:
    """Orientation energy -b sum M_a u_a . y + M1 M2 u1 . J u2 in a rotated frame."""

    def __init__(self, params: MFParams, magnitudes, frame: np.ndarray) -> None:
        self.M1, self.M2 = magnitudes
        self.field = params.b * (frame @ _Y)
        self.Jt = frame @ exchange_tensor(params) @ frame.T

    def gradient(self, x: np.ndarray) -> np.ndarray:
        u1, u2 = unit_vector(x[0], x[1]), unit_vector(x[2], x[3])
        h1 = -self.M1 * self.field + self.M1 * self.M2 * (self.Jt @ u2)
        h2 = -self.M2 * self.field + self.M1 * self.M2 * (self.Jt @ u1)
        out = np.empty(4)
        for k, (t, p, h) in enumerate(((x[0], x[1], h1), (x[2], x[3], h2))):
            ct, st, cp, sp = np.cos(t), np.sin(t), np.cos(p), np.sin(p)
            out[2 * k] = np.array([ct * cp, ct * sp, -st]) @ h
            out[2 * k + 1] = np.array([-st * sp, st * cp, 0.0]) @ h
        return out

    def hessian(self, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        """Central differences of the analytic gradient."""
        H = np.empty((4, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            H[:, j] = (self.gradient(x + e) - self.gradient(x - e)) / (2.0 * h)
        return H


def _spherical(u: np.ndarray) -> Tuple[float, float]:
    return float(np.arccos(np.clip(u[2], -1.0, 1.0))), float(np.arctan2(u[1], u[0]))


def _working_frame(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Rotation whose polar axis is perpendicular to both moments."""
    n = np.cross(u1, u2)
    if np.linalg.norm(n) < 1e-8:
        # collinear moments: any axis perpendicular to u1
        trial = np.eye(3)[int(np.argmin(np.abs(u1)))]
        n = trial - (trial @ u1) * u1
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise LinearizationError("could not build a polar axis perpendicular to the moments")
    n = n / norm
    e1 = u1 - (u1 @ n) * n
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    R = np.vstack([e1, e2, n])
    if abs(np.linalg.det(R) - 1.0) > 1e-9:
        raise LinearizationError("working frame is not a proper rotation")
    return R


# ---- linearization ------------------------------------------------------------


def _prefactor(M: float, sin_t: float, gamma: float) -> np.ndarray:
    # rows (d theta/dt, d phi/dt) against (F_theta, F_phi)
    return np.array([
        [-gamma / M, -1.0 / (M * sin_t)],
        [1.0 / (M * sin_t), -gamma / (M * sin_t * sin_t)],
    ])


def linearize(equilibrium: MFState, params: MFParams, gamma: float = 0.0,
              fd_step: float = FD_STEP) -> LinearizedDynamics:
    """Linear LLG dynamics about the mean-field equilibrium.

    theta_a' = -F_phi / (M sin theta) - gamma F_theta / M
    phi_a'   =  F_theta / (M sin theta) - gamma F_phi / (M sin^2 theta)
    """
    if gamma < 0:
        raise DomainError(f"Gilbert damping must be >= 0, got {gamma}")
    M1, M2 = equilibrium.M1, equilibrium.M2
    if min(M1, M2) < MIN_MOMENT:
        raise DomainError("linearization needs nonzero sublattice magnetizations")

    lab = equilibrium.angles
    if not np.all(np.isfinite(lab)):
        raise DomainError("equilibrium carries non-finite angles")
    grad = free_energy_gradient(params, (M1, M2), lab)
    if np.linalg.norm(grad) > GRADIENT_TOL:
        raise ConvergenceError("equilibrium is not stationary", best_residual=float(np.linalg.norm(grad)),
                               cell=(params.T, params.B, params.psi))

    u1, u2 = unit_vector(lab[0], lab[1]), unit_vector(lab[2], lab[3])
    rotated = min(abs(np.sin(lab[0])), abs(np.sin(lab[2]))) < POLE_TOL
    R = _working_frame(u1, u2) if rotated else np.eye(3)
    if rotated:
        logger.debug("moment near a coordinate pole, linearizing in a rotated frame")
    x = np.array([*_spherical(R @ u1), *_spherical(R @ u2)])
    if min(abs(np.sin(x[0])), abs(np.sin(x[2]))) < POLE_TOL:
        raise LinearizationError("frame rotation left a moment at a coordinate pole")

    energy = _FrameEnergy(params, (M1, M2), R)
    H = energy.hessian(x, fd_step)
    Hs = 0.5 * (H + H.T)
    P = np.zeros((4, 4))
    P[:2, :2] = _prefactor(M1, np.sin(x[0]), gamma)
    P[2:, 2:] = _prefactor(M2, np.sin(x[2]), gamma)
    D = P @ Hs
    if not np.all(np.isfinite(D)):
        raise LinearizationError("dynamical matrix has non-finite entries")
    return LinearizedDynamics(matrix=D, equilibrium=equilibrium, gilbert_gamma=float(gamma), hessian=H,
                              frame=R, angles=x, frequency_scale=params.exchange_scale, params=params,
                              rotated=rotated)


def resonance_modes(dyn: LinearizedDynamics) -> ResonanceModes:
    lam, V = np.linalg.eig(dyn.matrix)
    omegas = 1j * dyn.frequency_scale * lam
    order = np.lexsort((np.abs(omegas.imag), omegas.real))
    omegas = omegas[order]
    flags = []
    try:
        cond = float(np.linalg.cond(V))
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        flags.append("defective")
        logger.warning("near-defective dynamical matrix (eigenvector condition %.3g)", cond)

    params = dyn.params
    scale = 1.0
    if params is not None:
        scale = max(params.exchange_scale * params.J, params.zeeman, 1e-300)
    threshold = ZERO_MODE_REL * scale
    live = omegas[omegas.real > threshold]
    if live.size == 0:
        flags.append("no_mode")
        selected = complex(np.nan, np.nan)
    else:
        top = live.real.max()
        ties = live[np.abs(live.real - top) <= 1e-9 * max(abs(top), 1e-300)]
        selected = complex(ties[np.argmin(np.abs(ties.imag))])
    psi = params.psi if params is not None else float("nan")
    return ResonanceModes(omegas=omegas, selected=selected, psi=psi, flags=tuple(flags),
                          eigvec_condition=cond, phase=dyn.equilibrium.phase)


def solve_modes(params: MFParams, gamma: float = 0.0) -> ResonanceModes:
    """Equilibrium, linearization and mode selection for one (psi, T, B) cell."""
    eq = solve_equilibrium(params)
    return resonance_modes(linearize(eq, params, gamma))


# ---- closed forms ---------------------------------------------------------------


def analytic_resonance(params: MFParams) -> float:
    """T = 0 resonance sqrt(B_bar^2 - 2 (kappa J)^2 eps (sin psi - cos psi)) in K.

    First order in eps: it drops the (Jz + Jx) / (Jy + Jz) prefactor and the eps^2
    terms of canted_resonance, and is exact at B = 0 for psi = 0 and psi = pi/2.
    At B = 0 the orientation-symmetric gap sqrt(|2 (kappa J)^2 eps (sin psi - cos psi)|)
    is returned.
    """
    j = params.exchange_scale * params.J
    aniso = 2.0 * j * j * params.epsilon * (np.sin(params.psi) - np.cos(params.psi))
    b = params.zeeman
    if b == 0.0:
        return float(np.sqrt(abs(aniso)))
    rad = b * b - aniso
    if rad < 0:
        raise DomainError("negative radicand: the field is below the spin-flop threshold (collinear regime)")
    return float(np.sqrt(rad))


def canted_resonance(params: MFParams, magnetization: float = 1.0) -> float:
    """Exact uniform-mode frequency (K) of the in-plane equilibrium with equal moments M.

    With j = M (Jx, Jy, Jz) and the model field b, the laboratory value is kappa w where
    Canted (b < jy + jz): w^2 = (jz + jx) / (jy + jz) (b^2 + jz^2 - jy^2)
    Field-aligned (b >= jy + jz): w^2 = (b - jy + jx)(b - jy + jz)
    Collinear at b = 0 (jy > jz): w^2 = (jy + jx)(jy - jz)
    """
    jx, jy, jz = (magnetization * c for c in params.couplings)
    b = params.b
    if b >= jy + jz:
        w2 = (b - jy + jx) * (b - jy + jz)
    elif b == 0.0 and jy > jz:
        w2 = (jy + jx) * (jy - jz)
    elif jz >= jy or b * b >= jy * jy - jz * jz:
        w2 = (jz + jx) / (jy + jz) * (b * b + jz * jz - jy * jy)
    else:
        raise DomainError("collinear state in finite field: no single closed-form mode")
    if w2 < 0:
        raise DomainError("unstable in-plane state")
    return float(params.exchange_scale * np.sqrt(w2))
