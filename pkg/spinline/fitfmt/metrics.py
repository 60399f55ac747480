from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.signal import peak_widths

from ..errors import ValidationError

logger = logging.getLogger("spinline.fitfmt")

PROFILES = ("amplitude", "power")


@dataclass(frozen=True)
class LineMetrics:
    center: float  # Hz
    fwhm: float  # Hz
    visibility: float
    min_index: int
    flags: Tuple[str, ...] = ()


def _clean(frequencies, s21) -> Tuple[np.ndarray, np.ndarray]:
    f = np.asarray(frequencies, dtype=float)
    s = np.asarray(s21)
    if f.shape != s.shape or f.ndim != 1:
        raise ValidationError("frequencies and S21 must be 1-D arrays of equal length")
    keep = np.isfinite(f) & np.isfinite(s)
    f, s = f[keep], s[keep]
    if f.size < 3:
        raise ValidationError("need at least three finite points to locate a dip")
    if np.any(np.diff(f) <= 0):
        raise ValidationError("frequency grid must be strictly ascending")
    return f, s


def parabolic_vertex(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Abscissa of the parabola through (x, y)[i-1 : i+2]; x[i] when the curvature vanishes."""
    a, b, _ = np.polyfit(x[i - 1:i + 2] - x[i], y[i - 1:i + 2], 2)
    if not a > 0:
        return float(x[i])
    return float(x[i] - b / (2.0 * a))


def _dip_profile(s: np.ndarray, profile: str) -> np.ndarray:
    if profile == "amplitude":
        return 1.0 - np.abs(s)
    if profile == "power":
        return np.abs(1.0 - s) ** 2
    raise ValidationError(f"profile must be one of {PROFILES}, got {profile!r}")


def _half_prominence_width(f: np.ndarray, p: np.ndarray, peak: int) -> Tuple[float, bool]:
    # prominence measured from the unit-transmission baseline
    prominence = (np.array([p[peak]]), np.array([0], dtype=np.intp), np.array([p.size - 1], dtype=np.intp))
    _, _, left, right = peak_widths(p, np.array([peak], dtype=np.intp), rel_height=0.5,
                                    prominence_data=prominence)
    idx = np.arange(f.size, dtype=float)
    lo, hi = float(np.interp(left[0], idx, f)), float(np.interp(right[0], idx, f))
    truncated = left[0] <= 0.0 or right[0] >= f.size - 1
    return hi - lo, truncated


def extract_line_metrics(frequencies, s21, profile: str = "amplitude") -> LineMetrics:
    """Center, full width at half prominence and visibility of the deepest |S21| dip.

    Ties between equally deep dips resolve to the lowest frequency. The width is
    taken on 1 - |S21| ("amplitude") or on |1 - S21|^2 ("power"); the latter equals
    2 (G + Gamma) for the collective line shape.
    """
    f, s = _clean(frequencies, s21)
    mag = np.abs(s)
    i = int(np.argmin(mag))
    if i == 0 or i == f.size - 1:
        raise ValidationError(f"|S21| minimum sits on the grid boundary at {f[i]:.9g} Hz")
    center = parabolic_vertex(f, mag, i)
    p = _dip_profile(s, profile)
    peak = int(np.argmax(p))
    if peak == 0 or peak == f.size - 1:
        raise ValidationError(f"{profile} dip maximum sits on the grid boundary")
    fwhm, truncated = _half_prominence_width(f, p, peak)
    flags: Tuple[str, ...] = ()
    if truncated:
        logger.warning("half-prominence level not reached inside the grid; width is a lower bound")
        flags = ("width_truncated",)
    return LineMetrics(center=center, fwhm=fwhm, visibility=float(1.0 - mag[i]), min_index=i, flags=flags)


def center_shift(metrics: LineMetrics, reference: float) -> float:
    """Relative shift center / reference - 1."""
    if not reference > 0:
        raise ValidationError(f"reference frequency must be > 0, got {reference}")
    return metrics.center / reference - 1.0


def excess_width(metrics: LineMetrics, reference: LineMetrics) -> float:
    """Width broadening relative to a reference line: fwhm / fwhm_ref - 1."""
    if not reference.fwhm > 0:
        raise ValidationError("reference width must be > 0")
    return metrics.fwhm / reference.fwhm - 1.0


def amplitude_half_width(G: float, gamma: float) -> float:
    """Exact half width at half prominence of 1 - |S21| for the collective line shape."""
    W = G + gamma
    if not (G > 0 and W > 0):
        raise ValidationError("need G > 0 and G + Gamma > 0")
    a = (W + gamma) / (2.0 * W)
    return float(np.sqrt((a * a * W * W - gamma * gamma) / (1.0 - a * a)))
