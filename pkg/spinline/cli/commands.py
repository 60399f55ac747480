"""
Các lệnh của spinline: mỗi lệnh đọc một mục cấu hình, kiểm tra tham số, chạy lưới ô
song song qua CellPool và ghi bảng CSV kèm phần đầu '#' ghi nguồn gốc.

Chức năng:
- RunConfig: các mục cấu hình đã gộp (mặc định < YAML < cờ dòng lệnh), thư mục ra, jobs, seed.
- cmd_ed_thermo, cmd_mf_phase, cmd_resonance, cmd_transmit, cmd_synthesize, cmd_normalize_fit.

Ngữ cảnh sử dụng:
- Ô lỗi không bị bỏ qua: hàng tương ứng có cột 'errors' và lệnh trả về danh sách lỗi
  để run_spinline đặt mã thoát khác 0.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np
import pandas as pd

from ..chain_ed.composite import composite_susceptibility, correlator_estimate, dilution_weights
from ..chain_ed.hamiltonian import ChainSpec, solve_chain
from ..chain_ed.thermo import as_temperature_grid, powder_average_thermo, thermo_curves
from ..errors import DomainError, SpinlineError, ValidationError
from ..fitfmt.fitting import FitResult, fit_coupling_law, fit_resonance
from ..fitfmt.metrics import extract_line_metrics
from ..fitfmt.normalize import normalize_transmission
from ..fitfmt.sweep import RawSweep
from ..fitfmt.synthesis import Background, synthesize_sweep
from ..io.tables import provenance, read_table, write_table
from ..llg.dynamics import analytic_resonance, canted_resonance, solve_modes, to_hz
from ..meanfield.model import MFParams
from ..meanfield.solver import critical_field, neel_temperature, phase_diagram, spin_flop_field
from ..physics.constants import CODATA, SPIN_HALF_EXCHANGE_SCALE, zeeman_frequency
from ..physics.quadrature import psi_quadrature
from ..runtime.pool import CellPool
from ..transmission.models import CouplingModel
from ..transmission.spinwave import powder_spinwave_s21, spectrum_visibility, visibility_vs_temperature

logger = logging.getLogger("spinline.cli")

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "ed_thermo": {
        "n_spins": [1, 2, 3, 4, 5, 6, 7, 8], "J": 0.7, "epsilon": 0.0, "psi": 0.0, "boundary": "open",
        "B": 0.0, "temperatures": {"start": 0.01, "stop": 100.0, "num": 81, "spacing": "log"},
        "powder": False, "powder_nodes": 16, "composite": True, "dimer_J": 5.0, "chain_J": 0.7,
        "radical_fraction": 0.85, "occupancy": 0.85, "c_b": 0.1536,
    },
    "mf_phase": {
        "J": 0.7, "epsilon": -0.086, "psi": float(np.pi / 4),
        "temperatures": {"start": 0.01, "stop": 1.0, "num": 34},
        "fields": {"start": 0.0, "stop": 1.2, "num": 49}, "dims": 2, "exchange_scale": 0.25,
    },
    "resonance": {
        "J": 0.7, "epsilon": -0.086, "temperatures": [0.001], "fields": [0.125],
        "psi": {"start": 0.0, "stop": float(np.pi / 2), "num": 33}, "gamma": 0.0, "exchange_scale": 0.25,
    },
    "transmit": {
        "J": 0.7, "epsilon": -0.086, "temperatures": [0.01, 0.1, 0.3, 0.7, 1.5], "fields": [0.125],
        "exchange_scale": 0.25, "span": [0.8, 1.25], "n_freq": 801, "mode": "magnon", "quad_nodes": 64,
        "gamma_gilbert": None,
        "alpha_N": 0.00441, "gamma_phi_MHz": 4.8, "N": 5.0e16, "gamma_inh_MHz": 9.2,
        "visibility_modes": ["magnon", "classical_mf"],
    },
    "synthesize": {
        "output": "raw_sweep.csv", "frequencies_GHz": {"start": 10.5, "stop": 16.5, "num": 6001},
        "fields": [0.40, 0.45, 0.50, 0.55], "temperature": 2.0, "line": "paramagnetic",
        "coupling": "tanh_law", "G_MHz": 12.0, "Gamma_MHz": None, "J": 0.7, "epsilon": -0.086,
        "exchange_scale": 0.25, "quad_nodes": 64, "noise": 0.01, "ripple_amplitudes": [0.05, 0.03, 0.02],
        "ripple_periods_GHz": [0.17, 0.31, 0.53], "ripple_phases": [0.3, 1.1, 2.0], "delay_ns": 2.0,
        "gain": 1.0, "reflection": [0.05, -0.02], "alpha_N": 0.00441, "gamma_phi_MHz": 4.8, "N": 5.0e16,
        "gamma_inh_MHz": 9.2,
    },
    "normalize_fit": {
        "input": "raw_sweep.csv", "output": "fits.csv", "fields": None, "dB": 0.05, "window_MHz": 300.0,
        "gamma_estimate_MHz": 14.0, "model_reference": True, "exclude_mirror": True, "amplitude_only": False,
        "coupling_law": True, "weighting": "relative",
    },
}


@dataclass
class CommandOutcome:
    paths: List[Path] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class RunConfig:
    sections: Dict[str, Dict[str, Any]]
    out: Path
    jobs: int = 1
    seed: Optional[int] = None
    g: float = CODATA.g_S

    @classmethod
    def build(cls, raw: Optional[Mapping[str, Any]] = None,
              overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
              out: Optional[str] = None, jobs: Optional[int] = None, seed: Optional[int] = None) -> "RunConfig":
        """Merge built-in defaults, the YAML mapping and command-line overrides (in that order)."""
        raw = raw or {}
        sections = copy.deepcopy(COMMAND_DEFAULTS)
        for name, defaults in sections.items():
            from_file = raw.get(name) or {}
            unknown = set(from_file) - set(defaults)
            if unknown:
                raise ValidationError(f"unknown keys in section {name!r}: {sorted(unknown)}")
            defaults.update(from_file)
        for name, values in (overrides or {}).items():
            sections[name].update({k: v for k, v in values.items() if v is not None})
        runtime = raw.get("runtime", {}) or {}
        physics = raw.get("physics", {}) or {}
        run_seed = seed if seed is not None else runtime.get("seed")
        g = float(physics.get("g", CODATA.g_S))
        if not g > 0:
            raise DomainError(f"g must be > 0, got {g}")
        return cls(sections=sections, out=Path(out or runtime.get("out", "out")),
                   jobs=max(1, int(jobs if jobs is not None else runtime.get("jobs", 1))),
                   seed=None if run_seed is None else int(run_seed), g=g)

    def section(self, name: str) -> Dict[str, Any]:
        return self.sections[name]

    def pool(self, name: str) -> CellPool:
        return CellPool(self.jobs, name=name)

    def write(self, name: str, frame: pd.DataFrame, command: str, **extra: Any) -> Path:
        meta = provenance({"sections": self.sections, "g": self.g, "seed": self.seed}, command=command,
                          seed=self.seed, **extra)
        return write_table(self.out / name, frame, meta)


# ---- config value helpers ---------------------------------------------------------------------


def parse_grid(value: Any, name: str = "grid") -> np.ndarray:
    """Explicit list, scalar, or {start, stop, num, spacing: linear|log}."""
    if isinstance(value, Mapping):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{name}: grid mapping needs start, stop and num") from exc
        spacing = str(value.get("spacing", "linear"))
        if num < 1:
            raise ValidationError(f"{name}: num must be >= 1")
        if spacing == "linear":
            return np.linspace(start, stop, num)
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ValidationError(f"{name}: log spacing needs positive bounds")
            return np.geomspace(start, stop, num)
        raise ValidationError(f"{name}: spacing must be 'linear' or 'log', got {spacing!r}")
    try:
        arr = np.atleast_1d(np.asarray(value, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: grid values must be numbers, got {value!r}") from exc
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"{name}: grid must be a non-empty list")
    return arr


def _coupling_model(sec: Mapping[str, Any]) -> CouplingModel:
    return CouplingModel(alpha_N=float(sec["alpha_N"]), gamma_phi=float(sec["gamma_phi_MHz"]) * 1e6,
                         N=float(sec["N"]), gamma_inh=float(sec["gamma_inh_MHz"]) * 1e6)


def _mf_params(sec: Mapping[str, Any], g: float, **changes: float) -> MFParams:
    return MFParams(J=float(sec["J"]), epsilon=float(sec["epsilon"]), g=g,
                    exchange_scale=float(sec.get("exchange_scale", SPIN_HALF_EXCHANGE_SCALE)), **changes)


def _resolve_input(run: RunConfig, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else run.out / p


def _report(failures: List[str], label: str, key: Any, error: Any) -> str:
    msg = f"{label} {key}: {error}"
    logger.error("%s", msg)
    failures.append(msg)
    return str(error)


# ---- ed-thermo --------------------------------------------------------------------------------

ED_COLUMNS = ["T_K", "B_T", "psi_rad", "n", "c_per_spin", "chi", "chiT", "chiT_emu", "m", "corr_xx", "errors"]


def cmd_ed_thermo(run: RunConfig) -> CommandOutcome:
    sec = run.section("ed_thermo")
    T = as_temperature_grid(parse_grid(sec["temperatures"], "temperatures"))
    sizes = [int(n) for n in np.atleast_1d(sec["n_spins"])]
    specs = [ChainSpec(n, float(sec["J"]), float(sec["epsilon"]), float(sec["psi"]), run.g, str(sec["boundary"]))
             for n in sizes]
    B = float(sec["B"])
    quad = psi_quadrature(int(sec["powder_nodes"]), "uniform") if bool(sec["powder"]) else None

    def one(spec: ChainSpec):
        if quad is not None:
            return powder_average_thermo(spec, T, B, quad)
        return thermo_curves(solve_chain(spec, B), T)

    with run.pool("ed_thermo") as pool:
        results = pool.map(one, [(s,) for s in specs], keys=sizes)

    outcome = CommandOutcome()
    frames = []
    for res in results:
        if res.ok:
            fr = res.value.to_frame()
            fr["chiT_emu"] = res.value.chi_t_emu(run.g)
            fr["errors"] = ""
        else:
            msg = _report(outcome.failures, "ed_thermo n =", res.key, res.error)
            fr = pd.DataFrame({"T_K": T, "B_T": B, "n": res.key, "errors": msg})
        frames.append(fr)
    frame = pd.concat(frames, ignore_index=True).reindex(columns=ED_COLUMNS)
    outcome.paths.append(run.write("ed_thermo.csv", frame, "ed-thermo"))

    if bool(sec["composite"]):
        try:
            comp = composite_susceptibility(T, float(sec["dimer_J"]), float(sec["chain_J"]),
                                            float(sec["radical_fraction"]),
                                            dilution_weights(float(sec["occupancy"])), run.g)
        except SpinlineError as exc:
            _report(outcome.failures, "ed_thermo", "composite", exc)
        else:
            frame = pd.DataFrame({
                "T_K": comp.temperatures,
                "chiT": comp.chi_t,
                "chiT_emu": comp.chi_t_emu,
                "dimer_chiT": comp.dimer_chi_t,
                "chain_chiT": comp.chain_chi_t,
                "corr_estimate": correlator_estimate(comp.chi_t_emu, float(sec["c_b"])),
            })
            outcome.paths.append(run.write("composite.csv", frame, "ed-thermo"))
    return outcome


# ---- mf-phase ---------------------------------------------------------------------------------


def cmd_mf_phase(run: RunConfig) -> CommandOutcome:
    sec = run.section("mf_phase")
    T = parse_grid(sec["temperatures"], "temperatures")
    B = parse_grid(sec["fields"], "fields")
    psis = np.atleast_1d(np.asarray(sec["psi"], dtype=float))
    templates = [_mf_params(sec, run.g, psi=float(p)) for p in psis]

    outcome = CommandOutcome()
    frames = []
    with run.pool("mf_phase") as pool:
        for template in templates:
            diagram = phase_diagram(template, T, B, pool)
            fr = diagram.to_frame()
            sf = spin_flop_field(template)
            fr["B_c_T"] = critical_field(template)
            fr["B_sf_T"] = np.nan if sf is None else sf
            fr["T_N_K"] = neel_temperature(template)
            frames.append(fr)
            for t, b, msg in diagram.errors:
                _report(outcome.failures, "mf_phase cell", (t, b, template.psi), msg)
    outcome.paths.append(run.write("mf_phase.csv", pd.concat(frames, ignore_index=True), "mf-phase"))
    return outcome


# ---- resonance --------------------------------------------------------------------------------


def _ghz(omega_k: float) -> float:
    return float(np.real(to_hz(omega_k))) * 1e-9


def _closed_form(fn: Callable[..., float], params: MFParams) -> float:
    try:
        return _ghz(fn(params))
    except DomainError:
        return float("nan")


def cmd_resonance(run: RunConfig) -> CommandOutcome:
    sec = run.section("resonance")
    T = parse_grid(sec["temperatures"], "temperatures")
    B = parse_grid(sec["fields"], "fields")
    psis = parse_grid(sec["psi"], "psi")
    gamma = float(sec["gamma"])
    if gamma < 0:
        raise DomainError(f"Gilbert damping must be >= 0, got {gamma}")
    base = _mf_params(sec, run.g)
    cells = [(base.with_(T=float(t), B=float(b), psi=float(p)),) for t in T for b in B for p in psis]
    keys = [(c[0].T, c[0].B, c[0].psi) for c in cells]

    with run.pool("resonance") as pool:
        results = pool.map(lambda p: solve_modes(p, gamma), cells, keys=keys)

    outcome = CommandOutcome()
    rows = []
    for (params,), res in zip(cells, results):
        row = {"T_K": params.T, "B_T": params.B, "psi_rad": params.psi,
               "zeeman_GHz": zeeman_frequency(params.B, params.g) * 1e-9,
               "analytic_GHz": _closed_form(analytic_resonance, params),
               "canted_GHz": _closed_form(canted_resonance, params)}
        if res.ok:
            hz = res.value.selected_hz
            row.update({"re_omega_GHz": hz.real * 1e-9, "im_omega_GHz": hz.imag * 1e-9,
                        "phase": res.value.phase, "flags": ";".join(res.value.flags), "errors": ""})
        else:
            row.update({"re_omega_GHz": np.nan, "im_omega_GHz": np.nan, "phase": "", "flags": "",
                        "errors": _report(outcome.failures, "resonance cell", res.key, res.error)})
        rows.append(row)
    columns = ["T_K", "B_T", "psi_rad", "re_omega_GHz", "im_omega_GHz", "analytic_GHz", "canted_GHz",
               "zeeman_GHz", "phase", "flags", "errors"]
    outcome.paths.append(run.write("resonance.csv", pd.DataFrame(rows, columns=columns), "resonance"))
    return outcome


# ---- transmit ---------------------------------------------------------------------------------


def cmd_transmit(run: RunConfig) -> CommandOutcome:
    sec = run.section("transmit")
    T = as_temperature_grid(parse_grid(sec["temperatures"], "temperatures"))
    B = parse_grid(sec["fields"], "fields")
    if np.any(B <= 0):
        raise DomainError("transmission maps need fields > 0")
    lo, hi = (float(v) for v in sec["span"])
    if not 0 < lo < hi:
        raise ValidationError(f"span must satisfy 0 < lo < hi, got {sec['span']}")
    model = _coupling_model(sec)
    params = _mf_params(sec, run.g)
    quad = psi_quadrature(int(sec["quad_nodes"]), "sin")
    mode = str(sec["mode"])
    gamma = None if sec["gamma_gilbert"] is None else float(sec["gamma_gilbert"])
    n_freq = int(sec["n_freq"])

    def one(t: float, b: float):
        f = zeeman_frequency(b, run.g) * np.linspace(lo, hi, n_freq)
        return powder_spinwave_s21(f, params.with_(B=b), model, t, gamma, quad, mode)

    cells = [(float(t), float(b)) for t in T for b in B]
    with run.pool("transmit") as pool:
        results = pool.map(one, cells)

    outcome = CommandOutcome()
    spectra, metrics = [], []
    for (t, b), res in zip(cells, results):
        f_z = zeeman_frequency(b, run.g)
        row = {"T_K": t, "B_T": b, "zeeman_GHz": f_z * 1e-9, "eta": np.nan}
        if not res.ok:
            row["errors"] = _report(outcome.failures, "transmit cell", (t, b), res.error)
            metrics.append(row)
            continue
        fr = res.value.to_frame()
        fr.insert(0, "B_T", b)
        fr.insert(0, "T_K", t)
        spectra.append(fr)
        row["eta"] = spectrum_visibility(res.value)
        try:
            m = extract_line_metrics(res.value.frequencies, res.value.s21)
        except SpinlineError as exc:
            row["errors"] = _report(outcome.failures, "transmit metrics", (t, b), exc)
        else:
            row.update({"center_GHz": m.center * 1e-9, "shift": m.center / f_z - 1.0, "fwhm_MHz": m.fwhm * 1e-6,
                        "visibility": m.visibility, "flags": ";".join(m.flags), "errors": ""})
        metrics.append(row)
    metric_cols = ["T_K", "B_T", "zeeman_GHz", "center_GHz", "shift", "fwhm_MHz", "visibility", "eta", "flags",
                   "errors"]
    if spectra:
        outcome.paths.append(run.write("transmit.csv", pd.concat(spectra, ignore_index=True), "transmit", mode=mode))
    outcome.paths.append(run.write("transmit_metrics.csv", pd.DataFrame(metrics, columns=metric_cols),
                                   "transmit", mode=mode))

    vis_rows = []
    for vis_mode in list(sec["visibility_modes"] or []):
        for b in B:
            try:
                vis = visibility_vs_temperature(str(vis_mode), T, float(b), params, model, gamma, quad)
            except SpinlineError as exc:
                _report(outcome.failures, "visibility", (vis_mode, float(b)), exc)
                continue
            vis_rows.extend({"mode": vis_mode, "B_T": float(b), "T_K": float(t), "visibility": float(v)}
                            for t, v in zip(T, vis))
    if vis_rows:
        outcome.paths.append(run.write("visibility.csv", pd.DataFrame(vis_rows), "transmit"))
    return outcome


# ---- synthesize -------------------------------------------------------------------------------


def cmd_synthesize(run: RunConfig) -> CommandOutcome:
    sec = run.section("synthesize")
    f = parse_grid(sec["frequencies_GHz"], "frequencies_GHz") * 1e9
    B = parse_grid(sec["fields"], "fields")
    temperature = float(sec["temperature"])
    model = _coupling_model(sec)
    re_r, im_r = (float(v) for v in sec["reflection"])
    background = Background(ripple_amplitudes=tuple(float(a) for a in sec["ripple_amplitudes"]),
                            ripple_periods=tuple(float(p) * 1e9 for p in sec["ripple_periods_GHz"]),
                            ripple_phases=tuple(float(p) for p in sec["ripple_phases"]),
                            delay=float(sec["delay_ns"]) * 1e-9, gain=float(sec["gain"]),
                            reflection=complex(re_r, im_r))
    line = str(sec["line"])
    params = _mf_params(sec, run.g) if line == "powder" else None
    quad = psi_quadrature(int(sec["quad_nodes"]), "sin") if line == "powder" else None
    G = None if sec["G_MHz"] is None else float(sec["G_MHz"]) * 1e6
    Gamma = None if sec["Gamma_MHz"] is None else float(sec["Gamma_MHz"]) * 1e6

    with run.pool("synthesize") as pool:
        sweep = synthesize_sweep(f, B, temperature, model, line=line, coupling=str(sec["coupling"]), G=G,
                                 Gamma=Gamma, background=background, noise=float(sec["noise"]), seed=run.seed,
                                 params=params, g=run.g, quadrature=quad, pool=pool)
    outcome = CommandOutcome()
    outcome.paths.append(run.write(str(sec["output"]), sweep.to_frame(), "synthesize", temperature_K=temperature))
    return outcome


# ---- normalize-fit ----------------------------------------------------------------------------

FIT_COLUMNS = ["T_K", "B_T", "G_over_2pi_MHz", "Gamma_over_2pi_MHz", "Omega_GHz", "eta", "err_G", "err_Gamma",
               "err_Omega", "delta_Omega_MHz", "residual_rms", "converged", "errors"]


def _fit_row(T: float, B: float, fit: Optional[FitResult], g: float, error: str = "") -> Dict[str, Any]:
    if fit is None:
        return {"T_K": T, "B_T": B, "converged": False, "errors": error}
    return {"T_K": T, "B_T": B, "G_over_2pi_MHz": fit.G * 1e-6, "Gamma_over_2pi_MHz": fit.Gamma * 1e-6,
            "Omega_GHz": fit.Omega * 1e-9, "eta": fit.eta, "err_G": fit.stderr[0] * 1e-6,
            "err_Gamma": fit.stderr[1] * 1e-6, "err_Omega": fit.stderr[2] * 1e-9,
            "delta_Omega_MHz": fit.detuning(B, g) * 1e-6, "residual_rms": fit.residual_rms,
            "converged": fit.converged, "errors": error}


def cmd_normalize_fit(run: RunConfig) -> CommandOutcome:
    sec = run.section("normalize_fit")
    frame, meta = read_table(_resolve_input(run, str(sec["input"])))
    try:
        temperature = float(meta.get("temperature_K", "nan"))
    except ValueError as exc:
        raise ValidationError(f"bad temperature_K header: {meta.get('temperature_K')!r}") from exc
    sweep = RawSweep.from_frame(frame, temperature=temperature)
    dB = float(sec["dB"])
    half = float(sec["window_MHz"]) * 1e6
    gamma_est = float(sec["gamma_estimate_MHz"]) * 1e6
    if sec["fields"] is None:
        fields = [float(b) for b in sweep.fields if np.any(np.isclose(sweep.fields, b + dB, rtol=0.0, atol=1e-9))]
    else:
        fields = [float(b) for b in parse_grid(sec["fields"], "fields")]
    if not fields:
        raise ValidationError(f"no field in the sweep has a reference column at B + {dB} T")

    def one(b: float) -> FitResult:
        spec = normalize_transmission(sweep, b, dB, run.g, gamma_est)
        f_z = zeeman_frequency(b, run.g)
        return fit_resonance(spec, window=(f_z - half, f_z + half), model_reference=bool(sec["model_reference"]),
                             exclude_mirror=bool(sec["exclude_mirror"]), amplitude_only=bool(sec["amplitude_only"]))

    with run.pool("normalize_fit") as pool:
        results = pool.map(one, [(b,) for b in fields])

    outcome = CommandOutcome()
    rows, law_points = [], []
    for b, res in zip(fields, results):
        if not res.ok:
            rows.append(_fit_row(temperature, b, None, run.g,
                                 _report(outcome.failures, "fit at B =", b, res.error)))
            continue
        fit: FitResult = res.value
        rows.append(_fit_row(temperature, b, fit, run.g))
        if fit.converged:
            law_points.append((b, temperature, fit.G))
    outcome.paths.append(run.write(str(sec["output"]), pd.DataFrame(rows, columns=FIT_COLUMNS), "normalize-fit",
                                   temperature_K=temperature, dB_T=dB))

    if bool(sec["coupling_law"]) and law_points and np.isfinite(temperature):
        try:
            law = fit_coupling_law(law_points, run.g, str(sec["weighting"]))
        except SpinlineError as exc:
            _report(outcome.failures, "coupling law", len(law_points), exc)
        else:
            table = pd.DataFrame([{"alpha_N": law.alpha_N, "err_alpha_N": law.stderr, "n_points": law.n_points,
                                   "residual_rms_MHz": law.residual_rms * 1e-6}])
            outcome.paths.append(run.write("coupling_law.csv", table, "normalize-fit"))
    return outcome


COMMANDS: Dict[str, Callable[[RunConfig], CommandOutcome]] = {
    "ed-thermo": cmd_ed_thermo,
    "mf-phase": cmd_mf_phase,
    "resonance": cmd_resonance,
    "transmit": cmd_transmit,
    "synthesize": cmd_synthesize,
    "normalize-fit": cmd_normalize_fit,
}
