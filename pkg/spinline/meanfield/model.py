"""
Mô hình trường trung bình hai phân mạng (biến phân Bogolyubov).

Chức năng:
- MFParams: J, epsilon, psi, g, B, T và exchange_scale của một ô tính.
- exchange_tensor: J_bar = diag(J, J(1 + eps sin psi), J(1 + eps cos psi)).
- free_energy_bound: F = -T [s(M1) + s(M2)] - b (M1 u1_y + M2 u2_y) + M1 M2 u1 . J_bar . u2,
  tương đương F0(lambda) + <H1>_0 khi M = tanh(lambda / T).
- free_energy_gradient: đạo hàm giải tích theo (M1, M2, theta1, phi1, theta2, phi2).

Ngữ cảnh sử dụng:
- Quy ước đơn vị: J ở dạng ma trận Pauli (J sigma . sigma = 4 J s . s) nên nhiệt độ Néel là J.
  Trường trong năng lượng là b = g mu_B B / (kappa k_B) với kappa = exchange_scale (mặc định 1/4);
  mọi tần số đưa ra phòng thí nghiệm được nhân lại với kappa, nên giới hạn thuận từ eps = 0
  cho đúng g mu_B B / h. Ngưỡng trường (B_c, spin-flop) vì thế có dạng công thức với kappa J.
- Góc 3D: u(theta, phi) = (sin theta cos phi, sin theta sin phi, cos theta); từ trường theo y.
- Góc trong mặt phẳng yz: u = (0, sin theta, cos theta), theta trong [0, 2 pi);
  plane_to_spherical chuyển sang (theta, phi) 3D.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy.special import xlogy

from ..errors import DomainError, ValidationError
from ..physics.constants import CODATA, SPIN_HALF_EXCHANGE_SCALE, UNITS

T_FLOOR = 1.0e-4  # K


@dataclass(frozen=True)
class MFParams:
    J: float
    epsilon: float = 0.0
    psi: float = 0.0
    g: float = CODATA.g_S
    B: float = 0.0
    T: float = 0.0
    exchange_scale: float = SPIN_HALF_EXCHANGE_SCALE

    def __post_init__(self) -> None:
        if not (np.isfinite(self.J) and self.J > 0):
            raise DomainError(f"J must be > 0 (antiferromagnetic), got {self.J}")
        if not abs(self.epsilon) < 1.0:
            raise DomainError(f"|epsilon| must be < 1, got {self.epsilon}")
        if not np.isfinite(self.psi):
            raise ValidationError("psi must be finite")
        if not (np.isfinite(self.B) and self.B >= 0):
            raise DomainError(f"B must be >= 0, got {self.B}")
        if not (np.isfinite(self.T) and self.T >= 0):
            raise DomainError(f"T must be >= 0, got {self.T}")
        if not (np.isfinite(self.exchange_scale) and self.exchange_scale > 0):
            raise DomainError(f"exchange_scale must be > 0, got {self.exchange_scale}")

    def with_(self, **changes) -> "MFParams":
        return replace(self, **changes)

    @property
    def zeeman(self) -> float:
        """Laboratory Zeeman energy g mu_B B / k_B in K."""
        return float(UNITS.tesla_to_kelvin(self.B, self.g))

    @property
    def b(self) -> float:
        """Field entering the free energy, in units of the Pauli-form exchange (K)."""
        return self.zeeman / self.exchange_scale

    @property
    def t_eff(self) -> float:
        return max(self.T, T_FLOOR)

    @property
    def couplings(self) -> Tuple[float, float, float]:
        J, e = self.J, self.epsilon
        return (J, J * (1.0 + e * np.sin(self.psi)), J * (1.0 + e * np.cos(self.psi)))


def exchange_tensor(params: MFParams) -> np.ndarray:
    return np.diag(params.couplings)


def unit_vector(theta: float, phi: float) -> np.ndarray:
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def _d_theta(theta: float, phi: float) -> np.ndarray:
    ct = np.cos(theta)
    return np.array([ct * np.cos(phi), ct * np.sin(phi), -np.sin(theta)])


def _d_phi(theta: float, phi: float) -> np.ndarray:
    st = np.sin(theta)
    return np.array([-st * np.sin(phi), st * np.cos(phi), 0.0])


def plane_vector(theta: float) -> np.ndarray:
    return np.array([0.0, np.sin(theta), np.cos(theta)])


def plane_to_spherical(theta_plane: float) -> Tuple[float, float]:
    """In-plane (yz) angle to (polar, azimuth) with the same unit vector."""
    t = float(np.mod(theta_plane, 2.0 * np.pi))
    if t <= np.pi:
        return t, 0.5 * np.pi
    return 2.0 * np.pi - t, -0.5 * np.pi


def spin_entropy(M) -> np.ndarray:
    """Entropy of a spin-1/2 with polarization M, in k_B."""
    M = np.asarray(M, dtype=float)
    p, q = 0.5 * (1.0 + M), 0.5 * (1.0 - M)
    return -(xlogy(p, p) + xlogy(q, q))


def _check_state(magnitudes, angles) -> Tuple[np.ndarray, np.ndarray]:
    Ms = np.asarray(magnitudes, dtype=float).reshape(2)
    ang = np.asarray(angles, dtype=float).reshape(4)
    if not np.all(np.isfinite(ang)):
        raise ValidationError("angles must be finite")
    if np.any(Ms < 0) or np.any(Ms > 1):
        raise DomainError(f"magnitudes must lie in [0, 1], got {Ms}")
    return Ms, ang


def free_energy_bound(params: MFParams, magnitudes, angles) -> float:
    """Variational free energy in K for magnitudes (M1, M2) and angles (theta1, phi1, theta2, phi2)."""
    (M1, M2), (t1, p1, t2, p2) = _check_state(magnitudes, angles)
    u1, u2 = unit_vector(t1, p1), unit_vector(t2, p2)
    Jt = exchange_tensor(params)
    T = params.t_eff
    entropy = float(spin_entropy(M1) + spin_entropy(M2))
    zeeman = params.b * (M1 * u1[1] + M2 * u2[1])
    return -T * entropy - zeeman + M1 * M2 * float(u1 @ Jt @ u2)


def free_energy_gradient(params: MFParams, magnitudes, angles) -> np.ndarray:
    """Analytic gradient d F / d(theta1, phi1, theta2, phi2) at fixed magnitudes."""
    (M1, M2), (t1, p1, t2, p2) = _check_state(magnitudes, angles)
    u1, u2 = unit_vector(t1, p1), unit_vector(t2, p2)
    Jt = exchange_tensor(params)
    h1 = M1 * M2 * (Jt @ u2)  # dF/du1 from the exchange
    h2 = M1 * M2 * (Jt @ u1)
    b = params.b
    out = np.empty(4)
    for k, (t, p, h, M) in enumerate(((t1, p1, h1, M1), (t2, p2, h2, M2))):
        dt, dp = _d_theta(t, p), _d_phi(t, p)
        out[2 * k] = dt @ h - b * M * dt[1]
        out[2 * k + 1] = dp @ h - b * M * dp[1]
    return out


def plane_energy(params: MFParams, magnitudes, plane_angles) -> float:
    t1, t2 = plane_angles
    s1, s2 = plane_to_spherical(t1), plane_to_spherical(t2)
    return free_energy_bound(params, magnitudes, (*s1, *s2))


def plane_gradient(params: MFParams, magnitudes, plane_angles) -> np.ndarray:
    """d F / d(theta1, theta2) for in-plane angles."""
    M1, M2 = magnitudes
    t1, t2 = plane_angles
    u1, u2 = plane_vector(t1), plane_vector(t2)
    d1 = np.array([0.0, np.cos(t1), -np.sin(t1)])
    d2 = np.array([0.0, np.cos(t2), -np.sin(t2)])
    Jt = exchange_tensor(params)
    b = params.b
    g1 = M1 * M2 * (d1 @ Jt @ u2) - b * M1 * d1[1]
    g2 = M1 * M2 * (u1 @ Jt @ d2) - b * M2 * d2[1]
    return np.array([g1, g2])


def molecular_fields(params: MFParams, magnitudes, angles) -> Tuple[float, float]:
    """Variational fields lambda_a = u_a . (b y_hat - M_b J_bar u_b) in K."""
    (M1, M2), (t1, p1, t2, p2) = _check_state(magnitudes, angles)
    u1, u2 = unit_vector(t1, p1), unit_vector(t2, p2)
    Jt = exchange_tensor(params)
    y = np.array([0.0, 1.0, 0.0])
    lam1 = float(u1 @ (params.b * y - M2 * (Jt @ u2)))
    lam2 = float(u2 @ (params.b * y - M1 * (Jt @ u1)))
    return lam1, lam2
