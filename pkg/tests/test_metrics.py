import numpy as np
import pytest

from spinline.errors import ValidationError
from spinline.fitfmt.metrics import (LineMetrics, amplitude_half_width, center_shift, excess_width,
                                     extract_line_metrics)
from spinline.transmission.models import paramagnetic_s_params, visibility

G, GAMMA, OMEGA = 12e6, 14e6, 14e9


def _line(step=5e4, half_span=2000):
    f = OMEGA + step * np.arange(-half_span, half_span + 1)
    return f, paramagnetic_s_params(f, OMEGA, G, GAMMA).s21


def test_center_and_visibility_of_collective_line():
    f, s = _line()
    m = extract_line_metrics(f, s)
    assert m.center == pytest.approx(OMEGA, abs=1.0)
    assert m.visibility == pytest.approx(visibility(G, GAMMA), abs=1e-10)
    assert m.flags == ()


def test_amplitude_width_matches_closed_form():
    f, s = _line()
    assert extract_line_metrics(f, s).fwhm == pytest.approx(2 * amplitude_half_width(G, GAMMA), rel=1e-4)


def test_power_width_is_twice_total_rate():
    f, s = _line()
    assert extract_line_metrics(f, s, profile="power").fwhm == pytest.approx(2 * (G + GAMMA), rel=1e-4)


def test_off_grid_center_is_refined():
    f, _ = _line(step=1e6, half_span=200)
    omega = OMEGA + 0.37e6
    s = paramagnetic_s_params(f, omega, G, GAMMA).s21
    m = extract_line_metrics(f, s)
    assert abs(m.center - omega) < 0.05e6


def test_truncated_width_is_flagged():
    f, s = _line(step=1e5, half_span=50)
    m = extract_line_metrics(f, s)
    assert "width_truncated" in m.flags


def test_boundary_minimum_raises():
    f = np.linspace(OMEGA + 50e6, OMEGA + 500e6, 400)
    with pytest.raises(ValidationError):
        extract_line_metrics(f, paramagnetic_s_params(f, OMEGA, G, GAMMA).s21)


def test_equal_dips_resolve_to_lower_frequency():
    f = np.linspace(1e9, 2e9, 101)
    s = np.ones(f.size, dtype=complex)
    for k in (30, 70):
        s[k - 1:k + 2] = [0.8, 0.5, 0.8]
    m = extract_line_metrics(f, s)
    assert m.min_index == 30
    assert m.center == pytest.approx(f[30])


def test_non_finite_points_are_ignored():
    f, s = _line(step=2e5, half_span=500)
    s = s.copy()
    s[10] = np.nan
    m = extract_line_metrics(f, s)
    assert m.center == pytest.approx(OMEGA, abs=1.0)


def test_input_validation():
    with pytest.raises(ValidationError):
        extract_line_metrics([1.0, 2.0], [1.0, 0.5])
    with pytest.raises(ValidationError):
        extract_line_metrics([3.0, 2.0, 1.0], [1.0, 0.5, 1.0])
    f, s = _line(step=1e6, half_span=100)
    with pytest.raises(ValidationError):
        extract_line_metrics(f, s, profile="phase")


def test_shift_and_excess_width():
    ref = LineMetrics(center=1.0e9, fwhm=20e6, visibility=0.5, min_index=10)
    m = LineMetrics(center=1.07e9, fwhm=200e6, visibility=0.1, min_index=12)
    assert center_shift(m, 1.0e9) == pytest.approx(0.07)
    assert excess_width(m, ref) == pytest.approx(9.0)
    with pytest.raises(ValidationError):
        center_shift(m, 0.0)
