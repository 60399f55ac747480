"""
Bộ giải cân bằng trường trung bình và giản đồ pha.

Chức năng:
- solve_equilibrium: liệt kê các nhánh (thuận từ, nghiêng đối xứng theta1 + theta2 = pi,
  phản song song dọc trường), chọn nhánh có F nhỏ nhất; tuỳ chọn đánh bóng trong không gian 4 góc 3D.
- critical_field, spin_flop_field, neel_temperature: biểu thức đóng tại T = 0.
- phase_diagram: lưới (T, B) chạy song song theo ô qua CellPool, lỗi mang toạ độ ô.

Ngữ cảnh sử dụng:
- Nhiệt độ sàn 1e-4 K thay cho T = 0 trong tanh(lambda / T).
- Phân loại pha theo Delta theta = arccos(u1 . u2) với dung sai góc 1e-6 rad.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from ..errors import ConvergenceError, ValidationError
from ..physics.constants import UNITS
from ..runtime.pool import CellPool
from .model import (
    MFParams,
    free_energy_bound,
    free_energy_gradient,
    molecular_fields,
    plane_gradient,
    plane_to_spherical,
    unit_vector,
)

logger = logging.getLogger("spinline.meanfield")

ANGLE_TOL = 1.0e-6
RESIDUAL_TOL = 1.0e-10
MAX_ITER = 500

PARAMAGNETIC = "paramagnetic"
SPIN_FLOP = "spin_flop"
ANTIFERROMAGNETIC = "antiferromagnetic"


@dataclass
class MFState:
    M1: float
    M2: float
    theta1: float
    theta2: float
    phi1: float
    phi2: float
    lambda1: float
    lambda2: float
    free_energy: float
    phase: str
    branch: str
    residual: float
    plane_theta1: float = float("nan")
    plane_theta2: float = float("nan")
    params: Optional[MFParams] = field(default=None, repr=False)

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.theta1, self.phi1, self.theta2, self.phi2])

    @property
    def magnitudes(self) -> Tuple[float, float]:
        return (self.M1, self.M2)

    @property
    def dtheta(self) -> float:
        c = float(unit_vector(self.theta1, self.phi1) @ unit_vector(self.theta2, self.phi2))
        return float(np.arccos(np.clip(c, -1.0, 1.0)))


def classify_phase(dtheta: float, tol: float = ANGLE_TOL) -> str:
    if dtheta < tol:
        return PARAMAGNETIC
    if abs(dtheta - np.pi) < tol:
        return ANTIFERROMAGNETIC
    return SPIN_FLOP


def critical_field(params: MFParams) -> float:
    """T = 0 field above which the equilibrium is paramagnetic.

    g mu_B B_c = kappa J (2 + eps (sin psi + cos psi)), i.e. b = Jy + Jz in model units.
    """
    _, Jy, Jz = params.couplings
    return float(UNITS.kelvin_to_tesla(params.exchange_scale * (Jy + Jz), params.g))


def spin_flop_field(params: MFParams, exact: bool = False) -> Optional[float]:
    """Spin-flop threshold at T = 0, or None when the collinear state never wins.

    exact=False gives kappa J sqrt(2 eps (sin psi - cos psi)) / (g mu_B); exact=True the
    crossing b^2 = Jy^2 - Jz^2 of the collinear and canted branches.
    """
    _, Jy, Jz = params.couplings
    if exact:
        rad = Jy * Jy - Jz * Jz
        scale = 1.0
    else:
        rad = 2.0 * params.epsilon * (np.sin(params.psi) - np.cos(params.psi))
        scale = params.J
    if rad <= 0:
        return None
    return float(UNITS.kelvin_to_tesla(params.exchange_scale * scale * np.sqrt(rad), params.g))


def neel_temperature(params: MFParams) -> float:
    """Ordering temperature: the largest diagonal exchange, J / k_B for every eps <= 0.

    The in-plane branches order at max(Jy, Jz), which equals J at psi = 0 and
    psi = pi/2 and lies at most |eps| J / sqrt(2) below it in between.
    """
    return float(max(params.couplings))


# ---- branches ----------------------------------------------------------------


@dataclass
class _Candidate:
    branch: str
    M1: float
    M2: float
    t1: float  # in-plane angles
    t2: float
    F: float = float("nan")


def _self_consistent_magnitude(coupling: float, drive: float, T: float) -> float:
    """Root of M = tanh((drive + coupling M) / T) on [0, 1] for coupling <= 0, drive >= 0."""
    f = lambda M: M - np.tanh((drive + coupling * M) / T)  # noqa: E731
    if f(0.0) >= 0.0:
        return 0.0
    return float(optimize.brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER))


def _ordered_magnitude(coupling: float, T: float) -> Optional[float]:
    """Nonzero root of M = tanh(coupling M / T), or None above the ordering temperature."""
    if coupling <= T:
        return None
    f = lambda M: M - np.tanh(coupling * M / T)  # noqa: E731
    lo = 1.0e-12
    if f(lo) >= 0.0:
        return None
    return float(optimize.brentq(f, lo, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER))


def _paramagnetic(params: MFParams) -> _Candidate:
    _, Jy, _ = params.couplings
    M = _self_consistent_magnitude(-Jy, params.b, params.t_eff)
    return _Candidate(PARAMAGNETIC, M, M, 0.5 * np.pi, 0.5 * np.pi)


def _canted(params: MFParams) -> Optional[_Candidate]:
    _, Jy, Jz = params.couplings
    M = _ordered_magnitude(Jz, params.t_eff)
    if M is None or Jy + Jz <= 0:
        return None
    s = params.b / (M * (Jy + Jz))
    if s >= 1.0:
        return None
    t = float(np.arcsin(s))
    return _Candidate("canted", M, M, t, np.pi - t)


def _collinear_residual(x: np.ndarray, b: float, Jy: float, T: float) -> np.ndarray:
    M1, M2 = x
    return np.array([M1 - np.tanh((b + Jy * M2) / T), M2 - np.tanh((Jy * M1 - b) / T)])


def _collinear(params: MFParams) -> Optional[_Candidate]:
    """Sublattice 1 along +y, sublattice 2 along -y."""
    _, Jy, _ = params.couplings
    b, T = params.b, params.t_eff
    if Jy <= T:
        return None
    x = np.array([1.0, 1.0])
    seen = []
    for _ in range(MAX_ITER):
        nxt = np.array([np.tanh((b + Jy * x[1]) / T), np.tanh((Jy * x[0] - b) / T)])
        step = 0.5 * x + 0.5 * nxt
        if np.max(np.abs(step - x)) < 1e-14:
            x = step
            break
        # cycle detection on a coarse signature
        sig = tuple(np.round(step, 10))
        if sig in seen[-8:]:
            break
        seen.append(sig)
        x = step
    sol = optimize.root(_collinear_residual, x, args=(b, Jy, T), method="hybr", tol=1e-15)
    x = sol.x
    if not sol.success or np.max(np.abs(_collinear_residual(x, b, Jy, T))) > RESIDUAL_TOL:
        logger.debug("collinear fixed point stalled, falling back to direct minimization")

        def objective(v: np.ndarray) -> float:
            m = np.clip(v, 0.0, 1.0)
            return free_energy_bound(params, m, (0.5 * np.pi, 0.5 * np.pi, 0.5 * np.pi, -0.5 * np.pi))

        res = optimize.minimize(objective, np.clip(x, 0.0, 1.0), method="L-BFGS-B",
                                bounds=[(0.0, 1.0), (0.0, 1.0)])
        x = optimize.root(_collinear_residual, res.x, args=(b, Jy, T), method="hybr", tol=1e-15).x
    M1, M2 = float(x[0]), float(x[1])
    if not (1e-9 < M1 <= 1.0 and 1e-9 < M2 <= 1.0):
        return None
    if np.max(np.abs(_collinear_residual(x, b, Jy, T))) > RESIDUAL_TOL:
        return None
    return _Candidate("collinear", M1, M2, 0.5 * np.pi, 1.5 * np.pi)


def _finish(params: MFParams, cand: _Candidate) -> MFState:
    s1, s2 = plane_to_spherical(cand.t1), plane_to_spherical(cand.t2)
    angles = np.array([*s1, *s2])
    Ms = (cand.M1, cand.M2)
    lam1, lam2 = molecular_fields(params, Ms, angles)
    T = params.t_eff
    grad = free_energy_gradient(params, Ms, angles)
    residual = max(abs(cand.M1 - np.tanh(lam1 / T)), abs(cand.M2 - np.tanh(lam2 / T)),
                   float(np.max(np.abs(grad))) / max(params.J, 1.0))
    state = MFState(M1=cand.M1, M2=cand.M2, theta1=s1[0], theta2=s2[0], phi1=s1[1], phi2=s2[1],
                    lambda1=lam1, lambda2=lam2, free_energy=cand.F, phase=PARAMAGNETIC,
                    branch=cand.branch, residual=float(residual),
                    plane_theta1=cand.t1, plane_theta2=cand.t2, params=params)
    state.phase = classify_phase(state.dtheta)
    return state


def _polish_3d(params: MFParams, state: MFState) -> MFState:
    """Newton polish on the four spherical angles starting from the in-plane solution."""
    Ms = state.magnitudes
    sol = optimize.root(lambda a: free_energy_gradient(params, Ms, a), state.angles, method="hybr", tol=1e-14)
    angles = sol.x if sol.success else state.angles
    F = free_energy_bound(params, Ms, angles)
    if not np.isfinite(F) or abs(F - state.free_energy) > 1e-10 * max(1.0, abs(state.free_energy)):
        angles, F = state.angles, state.free_energy
    t1, p1, t2, p2 = angles
    lam1, lam2 = molecular_fields(params, Ms, angles)
    out = MFState(M1=state.M1, M2=state.M2, theta1=float(t1), phi1=float(p1), theta2=float(t2), phi2=float(p2),
                  lambda1=lam1, lambda2=lam2, free_energy=F, phase=state.phase, branch=state.branch,
                  residual=state.residual, plane_theta1=state.plane_theta1, plane_theta2=state.plane_theta2,
                  params=params)
    out.phase = classify_phase(out.dtheta)
    return out


def solve_equilibrium(params: MFParams, dims: int = 2) -> MFState:
    """Lowest-F self-consistent state; paramagnetic wins ties.

    dims=3 polishes the in-plane state on the full four-angle gradient. For
    epsilon < 0 the x axis carries the strongest exchange and the in-plane state
    is a saddle of the 3D bound; the polish keeps the stationary point.
    """
    if dims not in (2, 3):
        raise ValidationError(f"dims must be 2 or 3, got {dims}")
    candidates: List[_Candidate] = [_paramagnetic(params)]
    for make in (_canted, _collinear):
        c = make(params)
        if c is not None:
            candidates.append(c)
    for c in candidates:
        s1, s2 = plane_to_spherical(c.t1), plane_to_spherical(c.t2)
        c.F = free_energy_bound(params, (c.M1, c.M2), (*s1, *s2))
    best = candidates[0]
    for c in candidates[1:]:
        if c.F < best.F - 1e-12 * max(1.0, abs(best.F)):
            best = c
    state = _finish(params, best)
    if state.residual > RESIDUAL_TOL:
        raise ConvergenceError(f"mean-field branch {best.branch!r} did not converge",
                               best_residual=state.residual, cell=(params.T, params.B, params.psi))
    if dims == 3:
        state = _polish_3d(params, state)
    logger.debug("MF T=%.4g B=%.4g psi=%.4g -> %s (%s), F=%.10g", params.T, params.B, params.psi,
                 state.phase, state.branch, state.free_energy)
    return state


# ---- phase diagram -----------------------------------------------------------


def _ascending_grid(name: str, values: Sequence[float]) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValidationError(f"{name} grid is empty")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ValidationError(f"{name} grid must be strictly ascending")
    return arr


@dataclass
class PhaseDiagram:
    temperatures: np.ndarray
    fields: np.ndarray
    psi: float
    dtheta: np.ndarray  # (nT, nB)
    phase: np.ndarray  # object array of labels
    M: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    free_energy: np.ndarray
    errors: List[Tuple[float, float, str]]

    def to_frame(self) -> pd.DataFrame:
        TT, BB = np.meshgrid(self.temperatures, self.fields, indexing="ij")
        err = {(t, b): msg for t, b, msg in self.errors}
        return pd.DataFrame({
            "T_K": TT.ravel(),
            "B_T": BB.ravel(),
            "psi_rad": np.full(TT.size, self.psi),
            "M": self.M.ravel(),
            "theta1_rad": self.theta1.ravel(),
            "theta2_rad": self.theta2.ravel(),
            "dtheta_eq_rad": self.dtheta.ravel(),
            "F_K": self.free_energy.ravel(),
            "phase": self.phase.ravel(),
            "errors": [err.get((t, b), "") for t, b in zip(TT.ravel(), BB.ravel())],
        })


def phase_diagram(template: MFParams, temperatures: Sequence[float], fields: Sequence[float],
                  pool: Optional[CellPool] = None) -> PhaseDiagram:
    T = _ascending_grid("temperature", temperatures)
    B = _ascending_grid("field", fields)
    cells = [(float(t), float(b)) for t in T for b in B]

    def one(t: float, b: float) -> MFState:
        return solve_equilibrium(template.with_(T=t, B=b))

    results = (pool or CellPool(1)).map(one, cells)
    shape = (T.size, B.size)
    dtheta = np.full(shape, np.nan)
    phase = np.full(shape, "", dtype=object)
    M = np.full(shape, np.nan)
    th1 = np.full(shape, np.nan)
    th2 = np.full(shape, np.nan)
    F = np.full(shape, np.nan)
    errors: List[Tuple[float, float, str]] = []
    for k, res in enumerate(results):
        i, j = divmod(k, B.size)
        if res.error is not None:
            logger.error("mean-field cell T=%.6g K, B=%.6g T failed: %s", res.key[0], res.key[1], res.error)
            errors.append((res.key[0], res.key[1], str(res.error)))
            phase[i, j] = "error"
            continue
        st: MFState = res.value
        dtheta[i, j] = st.dtheta
        phase[i, j] = st.phase
        M[i, j] = 0.5 * (st.M1 + st.M2)
        th1[i, j] = st.plane_theta1
        th2[i, j] = st.plane_theta2
        F[i, j] = st.free_energy
    return PhaseDiagram(temperatures=T, fields=B, psi=template.psi, dtheta=dtheta, phase=phase, M=M,
                        theta1=th1, theta2=th2, free_energy=F, errors=errors)
