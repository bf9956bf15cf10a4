"""Probe envelopes, their spectra, and control envelopes."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from .model import ControlSchedule, ProbeSpec, TimeGrid


@dataclass(frozen=True)
class Envelope:
    t: np.ndarray
    samples: np.ndarray
    carrier_offset: float = 0.0

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        return float(trapezoid(self.intensity, self.t))

    def scaled(self, c: complex) -> "Envelope":
        return Envelope(self.t, c * self.samples, self.carrier_offset)


def gaussian_envelope(probe: ProbeSpec, grid: TimeGrid) -> Envelope:
    """Unit-energy Gaussian whose intensity has rms width 1/spectral_width."""
    t = grid.t
    dw = probe.spectral_width
    amp = math.sqrt(dw / math.sqrt(2.0 * math.pi)) * np.exp(-0.25 * dw**2 * (t - probe.arrival_time) ** 2)
    return Envelope(t, amp.astype(complex), probe.carrier_offset)


def gaussian_spectrum(probe: ProbeSpec, omega):
    """Fourier amplitude int alpha(t) exp(i omega t) dt of the Gaussian envelope."""
    omega = np.asarray(omega, dtype=float)
    dw = probe.spectral_width
    pref = (2.0 * math.pi) ** 0.25 / math.sqrt(0.5 * dw)
    return pref * np.exp(1j * omega * probe.arrival_time - omega**2 / dw**2)


def control_envelope(schedule: ControlSchedule, t):
    """Rabi frequency of the coupling field at time(s) t; zero outside windows."""
    return np.abs(schedule.rabi_at(t))


def load_envelope_csv(path, grid: TimeGrid, carrier_offset: float = 0.0) -> Envelope:
    """Read columns (t, Re alpha, Im alpha) and interpolate onto ``grid``.

    Samples outside the file's time range are zero.
    """
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row[:3]])
            except ValueError:
                continue  # header line
    data = np.asarray(rows)
    t = grid.t
    re = np.interp(t, data[:, 0], data[:, 1], left=0.0, right=0.0)
    im = np.interp(t, data[:, 0], data[:, 2], left=0.0, right=0.0)
    return Envelope(t, re + 1j * im, carrier_offset)
