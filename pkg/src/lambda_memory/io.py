"""Configuration files, canonical parameter strings and result files.

Config files are flat INI. Every value is kept as the raw string it was
given in, so the canonical parameter string written into output headers
reproduces overrides verbatim.
"""
from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np

from . import __version__
from .model import (
    Config,
    ConfigError,
    ControlSchedule,
    DopplerSpec,
    LambdaSystem,
    MediumSpec,
    ProbeSpec,
    TimeGrid,
    validate_config,
)

# section -> key -> parser
SCHEMA: Dict[str, Dict[str, type]] = {
    "system": {"gamma": float, "delta_c": float, "ground_splitting": float, "gamma_g": float, "dipole_ratio": float},
    "schedule": {
        "mode": str,
        "rabi": float,
        "phase": float,
        "write_on": float,
        "write_off": float,
        "read_on": float,
        "read_off": float,
        "read_rabi": float,
    },
    "probe": {"spectral_width": float, "arrival_time": float, "carrier_offset": float},
    "medium": {"optical_depth": float, "n_z": int},
    "grid": {"t_start": float, "t_end": float, "n_t": int},
    "doppler": {"enabled": bool, "thermal_width": float, "n_quad": int},
    "run": {"solver": str},
}

DEFAULTS = {
    "system.gamma": "1",
    "system.delta_c": "0",
    "system.ground_splitting": "0",
    "system.gamma_g": "0",
    "system.dipole_ratio": "1",
    "schedule.mode": "cw",
    "schedule.phase": "0",
    "probe.carrier_offset": "0",
    "medium.n_z": "100",
    "doppler.enabled": "false",
    "doppler.thermal_width": "0",
    "doppler.n_quad": "1",
    "run.solver": "time",
}

SCHEDULE_MODES = ("cw", "write", "write-read")


@dataclass
class RawConfig:
    """Flat ``section.key -> raw string`` mapping plus the override log."""

    values: Dict[str, str] = field(default_factory=dict)
    overrides: List[str] = field(default_factory=list)
    path: Optional[str] = None

    def get(self, key: str) -> Optional[str]:
        return self.values.get(key, DEFAULTS.get(key))

    def canonical(self) -> str:
        """Sorted ``key=value`` pairs joined by ';' (only explicitly given keys)."""
        return ";".join(f"{k}={self.values[k]}" for k in sorted(self.values))


def _known(key: str) -> bool:
    sec, _, name = key.partition(".")
    return sec in SCHEMA and name in SCHEMA[sec]


def read_config(path) -> RawConfig:
    """Parse an INI file; unknown sections or keys are configuration errors."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    raw = RawConfig(path=str(path))
    errors = []
    for sec in cp.sections():
        for key, val in cp.items(sec):
            full = f"{sec}.{key}"
            if not _known(full):
                errors.append(f"unknown config key {full!r}")
            raw.values[full] = val.strip()
    if errors:
        raise ConfigError(errors)
    return raw


def apply_overrides(raw: RawConfig, overrides: Iterable[str]) -> RawConfig:
    """Apply ``section.key=value`` strings; keys must exist in the schema."""
    errors = []
    for item in overrides:
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep:
            errors.append(f"override {item!r} is not of the form key=value")
            continue
        if not _known(key):
            errors.append(f"override references unknown key {key!r}")
            continue
        raw.values[key] = val.strip()
        raw.overrides.append(f"{key}={val.strip()}")
    if errors:
        raise ConfigError(errors)
    return raw


def _parse(raw: RawConfig, key: str, errors: list, required=True):
    text = raw.get(key)
    if text is None:
        if required:
            errors.append(f"missing required key {key!r}")
        return None
    kind = SCHEMA[key.split(".")[0]][key.split(".")[1]]
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(text)
            return low in ("1", "true", "yes", "on")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        errors.append(f"{key}: cannot parse {text!r} as {kind.__name__}")
        return None


def build_config(raw: RawConfig, doppler_flag: bool = False) -> Config:
    """Turn raw strings into a validated :class:`Config`."""
    errors: list = []
    p = lambda key, required=True: _parse(raw, key, errors, required)  # noqa: E731
    system = LambdaSystem(
        gamma=p("system.gamma"),
        delta_c=p("system.delta_c"),
        ground_splitting=p("system.ground_splitting"),
        gamma_g=p("system.gamma_g"),
        dipole_ratio=p("system.dipole_ratio"),
    )
    mode = p("schedule.mode")
    rabi = p("schedule.rabi")
    phase = p("schedule.phase")
    schedule = None
    if mode not in SCHEDULE_MODES:
        errors.append(f"schedule.mode must be one of {SCHEDULE_MODES}, got {mode!r}")
    elif mode == "cw":
        schedule = ControlSchedule.cw(rabi, phase) if rabi is not None else None
    else:
        w_on, w_off = p("schedule.write_on"), p("schedule.write_off")
        windows = [(w_on, w_off, rabi, phase)]
        if mode == "write-read":
            r_rabi = p("schedule.read_rabi", required=False)
            windows.append((p("schedule.read_on"), p("schedule.read_off"), rabi if r_rabi is None else r_rabi, phase))
        if not errors:
            schedule = ControlSchedule.write_read(*windows) if len(windows) == 2 else ControlSchedule.write_only(*windows[0])
    probe = ProbeSpec(p("probe.spectral_width"), p("probe.arrival_time"), p("probe.carrier_offset"))
    medium = MediumSpec(p("medium.optical_depth"), p("medium.n_z"))
    grid = TimeGrid(p("grid.t_start"), p("grid.t_end"), p("grid.n_t"))
    enabled = p("doppler.enabled") or doppler_flag
    n_quad = p("doppler.n_quad")
    if doppler_flag and n_quad == 1:
        n_quad = 9
    doppler = DopplerSpec(bool(enabled), p("doppler.thermal_width"), n_quad)
    solver = p("run.solver")
    if solver not in ("time", "spectral"):
        errors.append(f"run.solver must be 'time' or 'spectral', got {solver!r}")
    if errors:
        raise ConfigError(errors)
    return validate_config(system, schedule, probe, medium, grid, doppler)


def config_to_ini(config: Config, solver: str = "time") -> str:
    """INI text that rebuilds ``config`` (used to ship the preset files)."""
    s, sch, pr, m, g, d = config.system, config.schedule, config.probe, config.medium, config.grid, config.doppler
    lines = ["[system]"]
    lines += [f"{k} = {_fmt(getattr(s, k))}" for k in SCHEMA["system"]]
    lines += ["", "[schedule]"]
    w = sch.write
    if sch.is_cw:
        lines += ["mode = cw", f"rabi = {_fmt(w.rabi)}", f"phase = {_fmt(w.phase)}"]
    else:
        lines += [
            f"mode = {'write-read' if sch.read is not None else 'write'}",
            f"rabi = {_fmt(w.rabi)}",
            f"phase = {_fmt(w.phase)}",
            f"write_on = {_fmt(w.t_on)}",
            f"write_off = {_fmt(w.t_off)}",
        ]
        if sch.read is not None:
            r = sch.read
            lines += [f"read_on = {_fmt(r.t_on)}", f"read_off = {_fmt(r.t_off)}", f"read_rabi = {_fmt(r.rabi)}"]
    lines += ["", "[probe]"] + [f"{k} = {_fmt(getattr(pr, k))}" for k in SCHEMA["probe"]]
    lines += ["", "[medium]", f"optical_depth = {_fmt(m.optical_depth)}", f"n_z = {m.n_z}"]
    lines += ["", "[grid]", f"t_start = {_fmt(g.t_start)}", f"t_end = {_fmt(g.t_end)}", f"n_t = {g.n_t}"]
    lines += [
        "",
        "[doppler]",
        f"enabled = {'true' if d.enabled else 'false'}",
        f"thermal_width = {_fmt(d.thermal_width)}",
        f"n_quad = {d.n_quad}",
    ]
    lines += ["", "[run]", f"solver = {solver}", ""]
    return "\n".join(lines)


def _fmt(x: float) -> str:
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def parse_scan(spec: str) -> List[float]:
    """``delta:<start>:<stop>:<step>`` with inclusive stop."""
    parts = spec.split(":")
    if len(parts) != 4 or parts[0] != "delta":
        raise ConfigError([f"scan must look like delta:start:stop:step, got {spec!r}"])
    try:
        a, b, h = (float(x) for x in parts[1:])
    except ValueError as exc:
        raise ConfigError([f"bad scan numbers in {spec!r}"]) from exc
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(h)) or h <= 0 or b < a:
        raise ConfigError([f"scan needs start <= stop and a positive step, got {spec!r}"])
    n = int(math.floor((b - a) / h + 1e-9)) + 1
    return [round(a + i * h, 10) + 0.0 for i in range(n)]


# ------------------------------------------------------------------ outputs


def header(scenario: str, params: str) -> str:
    return f"# lambda-memory-sim v{__version__}, scenario={scenario}, params={params}"


def point_filename(scenario: str, delta: float) -> str:
    return f"{scenario}_{delta + 0.0:+.2f}.csv"


def write_table(path: Path, head: str, columns: Dict[str, np.ndarray]) -> Path:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    with open(path, "w", newline="\n") as fh:
        fh.write(head + "\n")
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.10e")
    return path


def write_summary(path: Path, scenario: str, params: str, rows: List[dict]) -> Path:
    doc = {"version": __version__, "scenario": scenario, "params": params, "points": rows}
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


REPORT_KEYS = ("transmittance", "retrieval_efficiency", "delay", "oscillation_freq", "loss")


def write_outputs(results, output_dir, scenario: str, params: str, schedule: Optional[ControlSchedule] = None) -> List[Path]:
    """Write one CSV per scan point and a summary JSON; returns the file list.

    ``results`` are scenario points (transmission or store-retrieve) or
    spectral-overlap dicts carrying a ``carrier_offset`` entry.
    """
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    head = header(scenario, params)
    files: List[Path] = []
    rows = []
    for res in results:
        if isinstance(res, dict):
            delta = float(res["carrier_offset"])
            name = point_filename(scenario, delta)
            cols = {k: res[k] for k in ("Omega", "chi_prime", "chi_double_prime", "probe_spectrum_abs")}
            files.append(write_table(out / name, head, cols))
            rows.append({"carrier_offset": delta, "file": name})
            continue
        delta = res.carrier_offset
        name = point_filename(scenario, delta)
        t = res.input.t
        if hasattr(res, "read_output"):
            intensity_out = res.write_output.intensity + res.read_output.intensity
        else:
            intensity_out = res.output.intensity
        control = np.zeros(t.size) if schedule is None else (np.abs(schedule.rabi_at(t)) > 0).astype(float)
        cols = {"t": t, "intensity_out": intensity_out, "intensity_in": res.input.intensity, "control_on": control}
        files.append(write_table(out / name, head, cols))
        row = {"carrier_offset": delta}
        rep = res.report.as_dict()
        row.update({k: rep[k] for k in REPORT_KEYS})
        row["file"] = name
        rows.append(row)
    files.append(write_summary(out / "summary.json", scenario, params, rows))
    return files


def write_gnuplot(path: Path, scenario: str, files: List[Path]) -> Path:
    """Plain gnuplot script overlaying every per-point CSV."""
    csvs = [f.name for f in files if f.suffix == ".csv"]
    if scenario == "spectrum":
        xcol, ycol, xl, yl = 1, 3, "probe detuning from two-photon resonance (gamma)", "chi''"
    else:
        xcol, ycol, xl, yl = 1, 2, "t (1/gamma)", "output intensity"
    lines = [
        "set datafile separator ','",
        f"set xlabel '{xl}'",
        f"set ylabel '{yl}'",
        "plot " + ", \\\n     ".join(f"'{c}' skip 2 using {xcol}:{ycol} with lines title '{c}'" for c in csvs),
        "",
    ]
    path.write_text("\n".join(lines))
    return path


# ---------------------------------------------------------- debug exports


def export_field_csv(field2d, path, every: int = 1) -> Path:
    """Rows (slab, t, Re, Im, |.|^2) for a ComplexField2D or CoherenceField."""
    vals = field2d.values[:, ::every]
    t = field2d.t[::every]
    slab = np.repeat(np.arange(vals.shape[0]), t.size)
    flat = vals.ravel()
    cols = {"slab": slab, "t": np.tile(t, vals.shape[0]), "re": flat.real, "im": flat.imag, "abs2": np.abs(flat) ** 2}
    return write_table(Path(path), "# field history", cols)


def export_kernel_csv(table, path) -> Path:
    """Nonzero entries (t, t', Re K, Im K) of a dense kernel table."""
    i, j = np.nonzero(table.values)
    v = table.values[i, j]
    return write_table(Path(path), f"# kernel stage={table.stage}", {"t": table.t[i], "t_prime": table.t[j], "re": v.real, "im": v.imag})


def export_spectral_csv(resp, path) -> Path:
    return write_table(Path(path), "# spectral response", {"Omega": resp.omega, "re": resp.phi.real, "im": resp.phi.imag})


def export_spin_snapshot(coherence, t: float, path) -> Path:
    """Spin-wave profile (zeta, Re, Im, |sigma|^2) at the grid time nearest ``t``."""
    s = coherence.snapshot(t)
    cols = {"zeta": coherence.zeta, "re": s.real, "im": s.imag, "abs2": np.abs(s) ** 2}
    return write_table(Path(path), f"# spin wave at t={t:g}", cols)
