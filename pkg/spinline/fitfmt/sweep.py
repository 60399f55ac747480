from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from ..errors import ValidationError

FIELD_ATOL = 1.0e-9  # T

RAW_COLUMNS = ("f_GHz", "B_T", "re_s21", "im_s21")
REFLECTION_COLUMNS = ("re_s11", "im_s11")


@dataclass
class RawSweep:
    """Raw complex S-parameters on a shared frequency grid, one row per field value.

    - frequencies: Hz, strictly ascending
    - fields: T
    - s21 (and optional s11): complex arrays of shape (len(fields), len(frequencies))
    """

    frequencies: np.ndarray
    fields: np.ndarray
    s21: np.ndarray
    s11: Optional[np.ndarray] = None
    temperature: float = float("nan")

    def __post_init__(self) -> None:
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.fields = np.atleast_1d(np.asarray(self.fields, dtype=float))
        self.s21 = np.atleast_2d(np.asarray(self.s21, dtype=complex))
        if self.s11 is not None:
            self.s11 = np.atleast_2d(np.asarray(self.s11, dtype=complex))
        f = self.frequencies
        if f.ndim != 1 or f.size < 2:
            raise ValidationError("frequency grid needs at least two points")
        if np.any(np.diff(f) <= 0):
            raise ValidationError("frequency grid must be strictly ascending")
        shape = (self.fields.size, f.size)
        if self.s21.shape != shape:
            raise ValidationError(f"s21 has shape {self.s21.shape}, expected {shape}")
        if np.any(~np.isfinite(self.s21)):
            raise ValidationError("s21 contains NaN or infinite values")
        if self.s11 is not None:
            if self.s11.shape != shape:
                raise ValidationError(f"s11 has shape {self.s11.shape}, expected {shape}")
            if np.any(~np.isfinite(self.s11)):
                raise ValidationError("s11 contains NaN or infinite values")

    def field_index(self, B: float) -> int:
        hits = np.flatnonzero(np.isclose(self.fields, B, rtol=0.0, atol=FIELD_ATOL))
        if hits.size == 0:
            raise ValidationError(f"field column B={B:.9g} T not present in the sweep")
        return int(hits[0])

    def to_frame(self) -> pd.DataFrame:
        nB, nf = self.s21.shape
        data = {
            "f_GHz": np.tile(self.frequencies * 1e-9, nB),
            "B_T": np.repeat(self.fields, nf),
            "re_s21": self.s21.real.ravel(),
            "im_s21": self.s21.imag.ravel(),
        }
        if self.s11 is not None:
            data["re_s11"] = self.s11.real.ravel()
            data["im_s11"] = self.s11.imag.ravel()
        return pd.DataFrame(data)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, temperature: float = float("nan")) -> "RawSweep":
        missing = [c for c in RAW_COLUMNS if c not in frame.columns]
        if missing:
            raise ValidationError(f"raw sweep table lacks columns {missing}")
        df = frame.sort_values(["B_T", "f_GHz"], kind="mergesort")
        fields = np.unique(df["B_T"].to_numpy(dtype=float))
        grids = [g["f_GHz"].to_numpy(dtype=float) for _, g in df.groupby("B_T", sort=True)]
        ref = grids[0]
        if any(g.shape != ref.shape or np.any(g != ref) for g in grids[1:]):
            raise ValidationError("frequency grid differs between field values")
        nB, nf = len(grids), ref.size

        def complex_block(re: str, im: str) -> np.ndarray:
            return (df[re].to_numpy(dtype=float) + 1j * df[im].to_numpy(dtype=float)).reshape(nB, nf)

        s11 = complex_block(*REFLECTION_COLUMNS) if all(c in df.columns for c in REFLECTION_COLUMNS) else None
        return cls(frequencies=ref * 1e9, fields=fields, s21=complex_block("re_s21", "im_s21"), s11=s11,
                   temperature=temperature)
