from __future__ import annotations

from typing import Optional, Sequence, Tuple


class SpinlineError(Exception):
    """Base class for every error raised by spinline."""


class DomainError(SpinlineError, ValueError):
    """Argument outside the physical domain (negative field, T <= 0, ...)."""


class ValidationError(SpinlineError, ValueError):
    """Malformed input: shapes, ordering, normalization, config values."""


class ConvergenceError(SpinlineError, RuntimeError):
    """A solver stopped without meeting its tolerance.

    best_residual là phần dư tốt nhất đạt được; cell là toạ độ ô (T, B, ...) nếu có.
    """

    def __init__(self, message: str, best_residual: float = float("nan"),
                 cell: Optional[Tuple[float, ...]] = None) -> None:
        super().__init__(message)
        self.best_residual = best_residual
        self.cell = cell

    def __str__(self) -> str:
        base = super().__str__()
        if self.cell is not None:
            base = f"{base} (cell={self.cell})"
        return f"{base} [best_residual={self.best_residual:.3e}]"


class LinearizationError(SpinlineError, RuntimeError):
    """Frame rotation away from a coordinate pole failed."""


class QuadratureError(SpinlineError, RuntimeError):
    """One or more powder nodes failed; failures holds (psi, T, B, message) per node."""

    def __init__(self, message: str, failures: Sequence[Tuple[float, float, float, str]] = ()) -> None:
        super().__init__(message)
        self.failures = list(failures)

    def __str__(self) -> str:
        base = super().__str__()
        if not self.failures:
            return base
        nodes = "; ".join(f"psi={p:.6g} T={t:.6g} K B={b:.6g} T: {msg}" for p, t, b, msg in self.failures)
        return f"{base} [{nodes}]"
