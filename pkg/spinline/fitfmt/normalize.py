"""
Chuẩn hoá nền của phép quét thô bằng tỉ số giữa hai giá trị từ trường.

Chức năng:
- normalize_transmission: S21(B) / S21(B + dB), nền F(w) không phụ thuộc B bị triệt tiêu;
  để lại đỉnh ảo ("mirror peak") tại Omega(B) + g mu_B dB / h.
- normalize_reflection: |S11(B) - S11(B + dB)| / |S21(B + dB)|, nền cộng R triệt tiêu.

Ngữ cảnh sử dụng:
- dB có dấu; |dB| phải lớn hơn nhiều so với độ rộng vạch (chỉ cảnh báo khi vi phạm).
- Điểm có |S21(B + dB)| < 1e-12 bị đánh dấu không hợp lệ (NaN).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import ValidationError
from ..physics.constants import CODATA, zeeman_frequency
from .sweep import RawSweep

logger = logging.getLogger("spinline.fitfmt")

DIVISION_GUARD = 1.0e-12
OFFSET_MARGIN = 5.0


@dataclass
class NormalizedSpectrum:
    frequencies: np.ndarray  # Hz
    values: np.ndarray  # complex (transmission) or real amplitude (reflection)
    valid: np.ndarray
    B: float
    dB: float
    mirror_center: float  # Hz
    mirror_offset: float  # Hz, signed g mu_B dB / h
    kind: str = "transmission"
    flags: Tuple[str, ...] = field(default_factory=tuple)


def mirror_offset(dB: float, g: float = CODATA.g_S) -> float:
    """Signed frequency offset g mu_B dB / h of the reference-field resonance."""
    return float(np.sign(dB) * zeeman_frequency(abs(dB), g))


def _check_offset(dB: float, g: float, gamma_estimate: float) -> Tuple[str, ...]:
    if dB == 0:
        raise ValidationError("field offset dB must be nonzero")
    offset = abs(mirror_offset(dB, g))
    if offset < OFFSET_MARGIN * gamma_estimate:
        logger.warning("field offset %.4g T shifts the reference by %.4g Hz, not >> linewidth %.4g Hz",
                       dB, offset, gamma_estimate)
        return ("small_offset",)
    return ()


def _reference(sweep: RawSweep, B: float, dB: float) -> Tuple[int, int]:
    return sweep.field_index(B), sweep.field_index(B + dB)


def _guarded_ratio(num: np.ndarray, den: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    valid = np.abs(den) >= DIVISION_GUARD
    out = np.full(num.shape, np.nan, dtype=np.result_type(num, den))
    out[valid] = num[valid] / den[valid]
    return out, valid


def normalize_transmission(sweep: RawSweep, B: float, dB: float, g: float = CODATA.g_S,
                           gamma_estimate: float = 14.0e6) -> NormalizedSpectrum:
    i, j = _reference(sweep, B, dB)
    flags = _check_offset(dB, g, gamma_estimate)
    values, valid = _guarded_ratio(sweep.s21[i], sweep.s21[j])
    if not np.all(valid):
        logger.warning("%d points below the division guard at B=%.6g T", int(np.sum(~valid)), B)
    off = mirror_offset(dB, g)
    return NormalizedSpectrum(frequencies=sweep.frequencies.copy(), values=values, valid=valid, B=float(B),
                              dB=float(dB), mirror_center=zeeman_frequency(B, g) + off, mirror_offset=off,
                              kind="transmission", flags=flags)


def normalize_reflection(sweep: RawSweep, B: float, dB: float, g: float = CODATA.g_S,
                         gamma_estimate: float = 14.0e6) -> NormalizedSpectrum:
    if sweep.s11 is None:
        raise ValidationError("sweep carries no reflection data")
    i, j = _reference(sweep, B, dB)
    flags = _check_offset(dB, g, gamma_estimate)
    diff = np.abs(sweep.s11[i] - sweep.s11[j])
    values, valid = _guarded_ratio(diff, np.abs(sweep.s21[j]))
    off = mirror_offset(dB, g)
    return NormalizedSpectrum(frequencies=sweep.frequencies.copy(), values=values.real, valid=valid, B=float(B),
                              dB=float(dB), mirror_center=zeeman_frequency(B, g) + off, mirror_offset=off,
                              kind="reflection", flags=flags)


def as_normalized(frequencies, s21, B: float = float("nan")) -> NormalizedSpectrum:
    """Wrap an already background-free transmission trace (no reference field, no mirror peak)."""
    f = np.asarray(frequencies, dtype=float)
    values = np.asarray(s21, dtype=complex)
    if f.shape != values.shape or f.ndim != 1:
        raise ValidationError("frequencies and S21 must be 1-D arrays of equal length")
    return NormalizedSpectrum(frequencies=f, values=values, valid=np.isfinite(values), B=float(B),
                              dB=float("nan"), mirror_center=float("nan"), mirror_offset=float("nan"))
