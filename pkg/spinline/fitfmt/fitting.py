"""
Khớp đường cộng hưởng và định luật tanh của hệ số ghép G(B, T).

Chức năng:
- CollectiveLineModel (lmfit.Model): S21 = 1 - G / (G + Gamma + i(Omega - f)), tuỳ chọn
  chia cho cùng đường tại Omega + offset để mô hình hoá thương chuẩn hoá (đỉnh ảo).
- fit_resonance: khớp phức (Re và Im cùng lúc) bằng leastsq của lmfit; chế độ chỉ biên độ.
- fit_coupling_law: G = alpha_N f_Z tanh(h f_Z / 2 k_B T), một tham số, trọng số tương đối
  hoặc tuyệt đối.

Ngữ cảnh sử dụng:
- Tần số được khớp theo GHz để các tham số có cùng bậc độ lớn; kết quả trả về theo Hz.
- Không hội tụ không ném lỗi: FitResult.converged = False kèm điểm tốt nhất.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import lmfit
import numpy as np

from ..errors import DomainError, ValidationError
from ..physics.constants import CODATA, spin_polarization, zeeman_frequency
from .metrics import parabolic_vertex
from .normalize import NormalizedSpectrum

logger = logging.getLogger("spinline.fitfmt")

MIN_POINTS = 20
MIRROR_EXCLUSION = 3.0  # in units of the guessed fwhm
FLAT_DIP = 1.0e-9
MIN_ETA = 1.0e-6
GHZ = 1.0e9
LEASTSQ_TOL = {"xtol": 1.0e-12, "ftol": 1.0e-12, "gtol": 1.0e-12}
MAX_NFEV = 20000
PARAM_ORDER = ("G", "gamma", "omega")


def collective_line(f, omega, G, gamma):
    return 1.0 - G / (G + gamma + 1j * (omega - f))


def collective_line_quotient(f, omega, G, gamma, offset):
    return collective_line(f, omega, G, gamma) / collective_line(f, omega + offset, G, gamma)


def collective_line_amplitude(f, omega, G, gamma):
    return np.abs(collective_line(f, omega, G, gamma))


def collective_line_quotient_amplitude(f, omega, G, gamma, offset):
    return np.abs(collective_line_quotient(f, omega, G, gamma, offset))


_LINE_SHAPES = {
    (False, False): collective_line,
    (True, False): collective_line_quotient,
    (False, True): collective_line_amplitude,
    (True, True): collective_line_quotient_amplitude,
}


def _guess_from_dip(f: np.ndarray, data: np.ndarray) -> Tuple[float, float, float]:
    """(omega, G, gamma) from the argmin, the half-depth width and the dip depth."""
    mag = np.abs(data)
    i = int(np.argmin(mag))
    omega = parabolic_vertex(f, mag, i) if 0 < i < f.size - 1 else float(f[i])
    depth = float(np.clip(1.0 - mag[i], 0.0, 0.999))
    span = float(f[-1] - f[0])
    if depth <= 0:
        width = span / 10.0
    else:
        inside = np.flatnonzero(1.0 - mag >= 0.5 * depth)
        width = max(float(f[inside[-1]] - f[inside[0]]), float(np.min(np.diff(f))))
    # the half-depth full width of 1 - |S21| is close to the full width 2 (G + Gamma)
    W = 0.5 * width
    return omega, depth * W, (1.0 - depth) * W


class CollectiveLineModel(lmfit.model.Model):
    __doc__ = "collective spin-photon line shape" + lmfit.models.COMMON_INIT_DOC

    def __init__(self, reference_offset: Optional[float] = None, amplitude_only: bool = False, *args, **kwargs):
        func = _LINE_SHAPES[(reference_offset is not None, bool(amplitude_only))]
        super().__init__(func, *args, independent_vars=["f"], **kwargs)
        self.reference_offset = reference_offset
        self.set_param_hint("G", min=0.0)
        self.set_param_hint("gamma", min=0.0)
        if reference_offset is not None:
            self.set_param_hint("offset", value=reference_offset, vary=False)

    def guess(self, data, f=None, **kwargs):
        if f is None:
            return None
        omega, G, gamma = _guess_from_dip(np.asarray(f, dtype=float), np.asarray(data))
        params = self.make_params(omega=omega, G=G, gamma=gamma)
        params[f"{self.prefix}omega"].set(min=float(np.min(f)), max=float(np.max(f)))
        return lmfit.models.update_param_vals(params, self.prefix, **kwargs)


@dataclass
class FitResult:
    G: float  # Hz
    Gamma: float  # Hz
    Omega: float  # Hz
    eta: float
    covariance: np.ndarray  # (G, Gamma, Omega) in Hz^2
    residual_rms: float
    converged: bool
    stderr: Tuple[float, float, float] = (float("nan"),) * 3
    n_points: int = 0
    message: str = ""
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def detuning(self, B: float, g: float = CODATA.g_S) -> float:
        """Shift Omega - g mu_B B / h of the fitted center from the Zeeman frequency."""
        return self.Omega - zeeman_frequency(B, g)


def _eta(G: float, gamma: float) -> float:
    W = G + gamma
    return float(G / W) if W > 0 else 0.0


def _fit_window(spectrum: NormalizedSpectrum, window: Optional[Tuple[float, float]], exclude_mirror: bool,
                fwhm_guess: float) -> np.ndarray:
    f = spectrum.frequencies
    mask = np.asarray(spectrum.valid, dtype=bool) & np.isfinite(spectrum.values)
    if window is not None:
        lo, hi = window
        if not lo < hi:
            raise ValidationError(f"fit window must satisfy lo < hi, got {window}")
        mask &= (f >= lo) & (f <= hi)
    near_mirror = np.abs(f - spectrum.mirror_center) < MIRROR_EXCLUSION * fwhm_guess
    if np.any(mask & near_mirror):
        if exclude_mirror:
            mask &= ~near_mirror
        else:
            logger.warning("fit window at B=%.6g T contains the normalization mirror peak at %.6g GHz",
                           spectrum.B, spectrum.mirror_center / GHZ)
    return mask


def fit_resonance(spectrum: NormalizedSpectrum, window: Optional[Tuple[float, float]] = None,
                  initial: Optional[dict] = None, model_reference: Optional[bool] = None, exclude_mirror: bool = True,
                  amplitude_only: bool = False) -> FitResult:
    """Least-squares fit of (G, Gamma, Omega) to a normalized transmission spectrum.

    Args:
        spectrum: output of normalize_transmission (or any NormalizedSpectrum with complex values).
        window: (lo, hi) frequency range in Hz; the whole grid when None.
        initial: optional starting values {"G", "Gamma", "Omega"} in Hz.
        model_reference: fit the quotient S(B)/S(B + dB), so the reference line is part of the model;
            by default on whenever the spectrum carries a finite nonzero field offset.
        exclude_mirror: drop points within 3 guessed widths of the mirror peak.
        amplitude_only: fit |S21| for data lacking phase.
    Returns:
        FitResult; converged is False (with the best point) when the optimizer fails
        or no dip is present.
    """
    if spectrum.kind != "transmission":
        raise ValidationError("resonance fits need a normalized transmission spectrum")
    f_all = spectrum.frequencies
    usable = np.asarray(spectrum.valid, dtype=bool) & np.isfinite(spectrum.values)
    if window is not None:
        usable &= (f_all >= window[0]) & (f_all <= window[1])
    if np.sum(usable) < MIN_POINTS:
        raise ValidationError(f"need at least {MIN_POINTS} valid points in the fit window, got {int(np.sum(usable))}")
    omega0, G0, gamma0 = _guess_from_dip(f_all[usable], np.asarray(spectrum.values)[usable])
    mask = _fit_window(spectrum, window, exclude_mirror, 2.0 * (G0 + gamma0))
    n = int(np.sum(mask))
    if n < MIN_POINTS:
        raise ValidationError(f"need at least {MIN_POINTS} points after mirror exclusion, got {n}")

    x = f_all[mask] / GHZ
    y = np.asarray(spectrum.values)[mask]
    if amplitude_only:
        y = np.abs(y)
    if model_reference is None:
        model_reference = bool(np.isfinite(spectrum.mirror_offset) and spectrum.mirror_offset != 0)
    offset = spectrum.mirror_offset / GHZ if model_reference else None
    model = CollectiveLineModel(reference_offset=offset, amplitude_only=amplitude_only)

    depth = 1.0 - np.min(np.abs(y))
    if depth < FLAT_DIP:
        logger.warning("no resonance dip at B=%.6g T; fit skipped", spectrum.B)
        return FitResult(G=0.0, Gamma=gamma0, Omega=omega0, eta=0.0, covariance=np.full((3, 3), np.nan),
                         residual_rms=float(np.sqrt(np.mean(np.abs(y - 1.0) ** 2))), converged=False,
                         n_points=n, message="no dip present", flags=("flat",))

    params = model.guess(np.asarray(spectrum.values)[mask], f=x)
    if initial:
        for key, name in (("G", "G"), ("Gamma", "gamma"), ("Omega", "omega")):
            if key in initial:
                params[name].set(value=float(initial[key]) / GHZ)

    result = model.fit(y, params, f=x, method="leastsq", fit_kws=LEASTSQ_TOL, max_nfev=MAX_NFEV,
                       nan_policy="raise")
    G = float(result.params["G"].value) * GHZ
    gamma = float(result.params["gamma"].value) * GHZ
    omega = float(result.params["omega"].value) * GHZ

    cov = np.full((3, 3), np.nan)
    if result.covar is not None:
        idx = [result.var_names.index(name) for name in PARAM_ORDER]
        cov = np.asarray(result.covar)[np.ix_(idx, idx)] * GHZ * GHZ
    stderr = tuple(float(np.sqrt(c)) if np.isfinite(c) and c >= 0 else float("nan") for c in np.diag(cov))
    resid = model.eval(result.params, f=x) - y
    eta = _eta(G, gamma)
    converged = bool(result.success) and result.covar is not None and eta > MIN_ETA
    if not converged:
        logger.warning("resonance fit at B=%.6g T did not converge: %s", spectrum.B, result.message)
    return FitResult(G=G, Gamma=gamma, Omega=omega, eta=eta, covariance=cov,
                     residual_rms=float(np.sqrt(np.mean(np.abs(resid) ** 2))), converged=converged,
                     stderr=stderr, n_points=n, message=str(result.message), flags=spectrum.flags)


# --- coupling law -----------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingLawResult:
    alpha_N: float
    stderr: float
    n_points: int
    residual_rms: float


def tanh_law_basis(B, T, g: float = CODATA.g_S) -> np.ndarray:
    """f_Z tanh(h f_Z / 2 k_B T) per point (Hz); G = alpha_N times this."""
    B = np.atleast_1d(np.asarray(B, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    out = np.empty(np.broadcast(B, T).shape)
    for k, (b, t) in enumerate(np.broadcast(B, T)):
        if not t > 0:
            raise DomainError(f"T must be > 0, got {t}")
        fz = zeeman_frequency(float(b), g)
        out[k] = fz * spin_polarization(fz, float(t))
    return out


def _tanh_law(x, alpha_N):
    return alpha_N * x


def fit_coupling_law(points: Iterable[Sequence[float]], g: float = CODATA.g_S,
                     weighting: str = "relative") -> CouplingLawResult:
    """Single-parameter weighted least squares of G(B, T) = alpha_N f_Z tanh(h f_Z / 2 k_B T)."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise ValidationError("points must be a non-empty list of (B, T, G)")
    B, T, G = pts.T
    if np.all(G == 0):
        raise ValidationError("all coupling values are zero")
    if np.any(G < 0):
        raise DomainError("coupling values must be >= 0")
    x = tanh_law_basis(B, T, g)
    if pts.shape[0] == 1:
        return CouplingLawResult(alpha_N=float(G[0] / x[0]), stderr=0.0, n_points=1, residual_rms=0.0)
    if weighting == "relative":
        if np.any(G == 0):
            raise ValidationError("relative weighting needs every G > 0")
        w = 1.0 / G
    elif weighting == "absolute":
        w = np.ones_like(G)
    else:
        raise ValidationError(f"weighting must be 'relative' or 'absolute', got {weighting!r}")
    if pts.shape[0] < 3:
        logger.warning("tanh-law fit from %d points; uncertainty is poorly determined", pts.shape[0])

    # linear in alpha_N: closed-form start, lmfit for the scaled uncertainty
    alpha0 = float(np.sum(w * w * x * G) / np.sum(w * w * x * x))
    model = lmfit.Model(_tanh_law, independent_vars=["x"])
    result = model.fit(G, model.make_params(alpha_N=alpha0), x=x, weights=w, method="leastsq",
                       fit_kws=LEASTSQ_TOL, max_nfev=MAX_NFEV)
    alpha = float(result.params["alpha_N"].value)
    err = result.params["alpha_N"].stderr
    resid = alpha * x - G
    return CouplingLawResult(alpha_N=alpha, stderr=float(err) if err is not None else float("nan"),
                             n_points=int(pts.shape[0]), residual_rms=float(np.sqrt(np.mean(resid ** 2))))
