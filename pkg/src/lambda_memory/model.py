"""Configuration types for the Lambda-memory simulator.

Natural units throughout: the excited-state decay rate ``gamma`` sets the
frequency scale and ``1/gamma`` the time scale. All detunings, Rabi
frequencies and spectral widths are angular frequencies in units of gamma.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``errors`` holds every violation found, not only the first one.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ResolutionWarning(UserWarning):
    """The time grid under-resolves the fastest detuning-scale oscillation."""


@dataclass(frozen=True)
class LambdaSystem:
    gamma: float = 1.0
    delta_c: float = 0.0
    ground_splitting: float = 0.0
    gamma_g: float = 0.0
    dipole_ratio: float = 1.0


@dataclass(frozen=True)
class ControlWindow:
    """A rectangular coupling pulse on the half-open interval [t_on, t_off)."""

    t_on: float
    t_off: float
    rabi: float
    phase: float = 0.0

    @property
    def duration(self) -> float:
        return self.t_off - self.t_on

    def contains(self, t):
        t = np.asarray(t)
        return (t >= self.t_on) & (t < self.t_off)


@dataclass(frozen=True)
class ControlSchedule:
    windows: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))

    @classmethod
    def cw(cls, rabi: float, phase: float = 0.0) -> "ControlSchedule":
        """Stationary coupling field, on for all times."""
        return cls((ControlWindow(-math.inf, math.inf, rabi, phase),))

    @classmethod
    def write_only(cls, t_on: float, t_off: float, rabi: float, phase: float = 0.0):
        return cls((ControlWindow(t_on, t_off, rabi, phase),))

    @classmethod
    def write_read(cls, write: tuple, read: tuple) -> "ControlSchedule":
        return cls((ControlWindow(*write), ControlWindow(*read)))

    @property
    def is_cw(self) -> bool:
        return (
            len(self.windows) == 1
            and math.isinf(self.windows[0].t_on)
            and math.isinf(self.windows[0].t_off)
        )

    @property
    def write(self) -> ControlWindow:
        return self.windows[0]

    @property
    def read(self) -> Optional[ControlWindow]:
        return self.windows[1] if len(self.windows) > 1 else None

    @property
    def storage_delay(self) -> float:
        if self.read is None:
            raise ValueError("storage delay needs a write and a read window")
        return self.read.t_on - self.write.t_off

    def rabi_at(self, t):
        """Complex Rabi frequency rabi*exp(i*phase) at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for w in self.windows:
            out = np.where(w.contains(t), w.rabi * np.exp(1j * w.phase), out)
        return out


@dataclass(frozen=True)
class ProbeSpec:
    spectral_width: float
    arrival_time: float
    carrier_offset: float = 0.0

    @property
    def duration(self) -> float:
        """Rms width of the input intensity profile."""
        return 1.0 / self.spectral_width


@dataclass(frozen=True)
class MediumSpec:
    optical_depth: float
    n_z: int = 100
    density_profile: Optional[tuple] = None

    def __post_init__(self):
        if self.density_profile is not None:
            object.__setattr__(self, "density_profile", tuple(float(w) for w in self.density_profile))

    def weights(self) -> np.ndarray:
        if self.density_profile is None:
            return np.ones(self.n_z)
        return np.asarray(self.density_profile, dtype=float)


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_t: int

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_t - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_t)

    def index(self, t: float) -> int:
        """Nearest grid index of time ``t``."""
        return int(round((t - self.t_start) / self.dt))

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_start, self.t_end, factor * (self.n_t - 1) + 1)


@dataclass(frozen=True)
class DopplerSpec:
    enabled: bool = False
    thermal_width: float = 0.0
    n_quad: int = 1

    def nodes(self):
        """Gauss-Hermite Doppler shifts and normalized weights.

        A disabled spec, or zero width, yields the single node kv = 0.
        """
        if not self.enabled or self.thermal_width == 0.0:
            return np.zeros(1), np.ones(1)
        x, w = np.polynomial.hermite.hermgauss(self.n_quad)
        return math.sqrt(2.0) * self.thermal_width * x, w / math.sqrt(math.pi)


@dataclass(frozen=True)
class Config:
    system: LambdaSystem
    schedule: ControlSchedule
    probe: ProbeSpec
    medium: MediumSpec
    grid: TimeGrid
    doppler: DopplerSpec = field(default_factory=DopplerSpec)

    @property
    def carrier(self) -> float:
        """Probe detuning from the m-n transition (Delta + delta-Delta)."""
        return self.system.delta_c + self.probe.carrier_offset


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def _check_system(s: LambdaSystem, errors: list):
    if not (_finite(s.gamma) and s.gamma > 0):
        errors.append(f"gamma must be positive, got {s.gamma}")
    if not (_finite(s.gamma_g) and s.gamma_g >= 0):
        errors.append(f"gamma_g must be non-negative, got {s.gamma_g}")
    if not (_finite(s.dipole_ratio) and s.dipole_ratio > 0):
        errors.append(f"dipole_ratio must be positive, got {s.dipole_ratio}")
    for name in ("delta_c", "ground_splitting"):
        if not _finite(getattr(s, name)):
            errors.append(f"{name} must be finite")


def _check_schedule(sch: ControlSchedule, errors: list):
    if not 1 <= len(sch.windows) <= 2:
        errors.append(f"schedule needs one or two control windows, got {len(sch.windows)}")
    for k, w in enumerate(sch.windows):
        if not w.t_off > w.t_on:
            errors.append(f"window {k}: t_off must exceed t_on")
        if not (_finite(w.rabi) and w.rabi >= 0):
            errors.append(f"window {k}: rabi must be non-negative, got {w.rabi}")
    for a, b in zip(sch.windows, sch.windows[1:]):
        if b.t_on < a.t_off:
            errors.append("overlapping control windows")


def _check_grid(g: TimeGrid, errors: list):
    if not (isinstance(g.n_t, (int, np.integer)) and g.n_t >= 2):
        errors.append(f"n_t must be an integer >= 2, got {g.n_t}")
    if not (_finite(g.t_start) and _finite(g.t_end) and g.t_end > g.t_start):
        errors.append("t_end must exceed t_start")


def _snap(t: float, g: TimeGrid) -> float:
    if math.isinf(t):
        return t
    return g.t_start + round((t - g.t_start) / g.dt) * g.dt


def validate_config(
    system: LambdaSystem,
    schedule: ControlSchedule,
    probe: ProbeSpec,
    medium: MediumSpec,
    grid: TimeGrid,
    doppler: Optional[DopplerSpec] = None,
) -> Config:
    """Check every invariant and return an immutable :class:`Config`.

    Finite control-window edges are snapped onto the time grid so that the
    switching instants are grid points. All violations are collected and
    raised together as a :class:`ConfigError`.
    """
    doppler = doppler or DopplerSpec()
    errors: list = []
    _check_system(system, errors)
    _check_schedule(schedule, errors)
    _check_grid(grid, errors)

    if not (_finite(probe.spectral_width) and probe.spectral_width > 0):
        errors.append(f"spectral_width must be positive, got {probe.spectral_width}")
    if not (_finite(probe.arrival_time) and _finite(probe.carrier_offset)):
        errors.append("probe arrival_time and carrier_offset must be finite")

    if not (_finite(medium.optical_depth) and medium.optical_depth >= 0):
        errors.append(f"optical_depth must be non-negative, got {medium.optical_depth}")
    if not (isinstance(medium.n_z, (int, np.integer)) and medium.n_z >= 1):
        errors.append(f"n_z must be an integer >= 1, got {medium.n_z}")
    elif medium.density_profile is not None:
        prof = medium.density_profile
        if len(prof) != medium.n_z:
            errors.append("density_profile length must equal n_z")
        if any(not (math.isfinite(w) and w >= 0) for w in prof):
            errors.append("density weights must be non-negative")

    if not (_finite(doppler.thermal_width) and doppler.thermal_width >= 0):
        errors.append("thermal_width must be non-negative")
    if not (isinstance(doppler.n_quad, (int, np.integer)) and doppler.n_quad >= 1):
        errors.append("n_quad must be an integer >= 1")

    if errors:
        raise ConfigError(errors)

    # coverage checks need a sane grid and probe
    t0, t1 = grid.t_start, grid.t_end
    half = 4.0 * probe.duration
    if probe.arrival_time - half < t0 or probe.arrival_time + half > t1:
        errors.append(
            f"grid [{t0}, {t1}] does not cover probe support "
            f"[{probe.arrival_time - half:.4g}, {probe.arrival_time + half:.4g}]"
        )
    for k, w in enumerate(schedule.windows):
        for edge in (w.t_on, w.t_off):
            if math.isfinite(edge) and not t0 <= edge <= t1:
                errors.append(f"window {k} edge {edge} lies outside the grid")
    if errors:
        raise ConfigError(errors)

    snapped = ControlSchedule(
        tuple(replace(w, t_on=_snap(w.t_on, grid), t_off=_snap(w.t_off, grid)) for w in schedule.windows)
    )
    if any(not w.t_off > w.t_on for w in snapped.windows):
        raise ConfigError(["control window shorter than one grid step"])
    for a, b in zip(snapped.windows, snapped.windows[1:]):
        if b.t_on < a.t_off:
            raise ConfigError(["overlapping control windows"])

    fastest = max(
        [1.0, abs(system.delta_c + probe.carrier_offset)] + [w.rabi for w in schedule.windows]
    )
    if grid.dt > 0.1 / fastest:
        warnings.warn(
            f"dt = {grid.dt:.3g} exceeds 0.1/{fastest:.3g}; detuning-scale oscillations are under-resolved",
            ResolutionWarning,
            stacklevel=2,
        )

    return Config(system, snapped, probe, medium, grid, doppler)


def revalidate(config: Config) -> Config:
    return validate_config(
        config.system, config.schedule, config.probe, config.medium, config.grid, config.doppler
    )
