import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from lambda_memory.model import ControlSchedule, ProbeSpec, TimeGrid
from lambda_memory.pulses import (
    control_envelope,
    gaussian_envelope,
    gaussian_spectrum,
    load_envelope_csv,
)


def _grid_for(probe, n_sigma=8.0, dt=None):
    half = n_sigma / probe.spectral_width
    dt = dt or 0.02 / probe.spectral_width
    n = int(round(2 * half / dt)) + 1
    return TimeGrid(probe.arrival_time - half, probe.arrival_time + half, n)


def test_peak_intensity():
    probe = ProbeSpec(2 * math.pi / 50, 25.0)
    env = gaussian_envelope(probe, TimeGrid(-25.0, 75.0, 4001))
    i = np.argmin(np.abs(env.t - 25.0))
    assert env.intensity[i] == pytest.approx(0.0501326, rel=1e-5)
    assert env.intensity[i] == pytest.approx(probe.spectral_width / math.sqrt(2 * math.pi), rel=1e-14)
    assert np.all(env.samples.imag == 0) and np.all(env.samples.real >= 0)


@settings(max_examples=30, deadline=None)
@given(dw=st.floats(0.05, 5.0), t0=st.floats(-20, 20))
def test_energy_normalized(dw, t0):
    probe = ProbeSpec(dw, t0)
    env = gaussian_envelope(probe, _grid_for(probe))
    assert abs(env.energy - 1.0) < 1e-8


@settings(max_examples=20, deadline=None)
@given(dw=st.floats(0.05, 5.0), t0=st.floats(-20, 20))
def test_parseval(dw, t0):
    probe = ProbeSpec(dw, t0)
    val, _ = quad(lambda w: abs(gaussian_spectrum(probe, w)) ** 2, -12 * dw, 12 * dw, epsrel=1e-13)
    assert abs(val / (2 * math.pi) - 1.0) < 1e-8


def test_dft_matches_closed_form():
    probe = ProbeSpec(2 * math.pi / 50, 25.0)
    grid = _grid_for(probe, n_sigma=10, dt=0.05)
    env = gaussian_envelope(probe, grid)
    t = env.t
    omega = np.linspace(-3 * probe.spectral_width, 3 * probe.spectral_width, 41)
    # direct Riemann sum of int alpha exp(i omega t) dt; spectrally exact for a Gaussian
    dft = np.array([np.sum(env.samples * np.exp(1j * w * t)) * grid.dt for w in omega])
    ref = gaussian_spectrum(probe, omega)
    assert np.max(np.abs(np.abs(dft) - np.abs(ref)) / np.abs(ref)) < 1e-6
    assert np.max(np.abs(dft - ref) / np.abs(ref)) < 1e-6


def test_spectrum_at_zero_and_symmetry():
    probe = ProbeSpec(0.7, 3.0)
    a0 = gaussian_spectrum(probe, 0.0)
    assert a0.imag == 0 and a0.real == pytest.approx((2 * math.pi) ** 0.25 / math.sqrt(0.35))
    w = np.linspace(0, 3, 7)
    assert np.allclose(np.abs(gaussian_spectrum(probe, w)), np.abs(gaussian_spectrum(probe, -w)))


@settings(max_examples=30, deadline=None)
@given(dw=st.floats(0.1, 3), t0=st.floats(-10, 10), shift=st.floats(-10, 10), w=st.floats(-5, 5))
def test_arrival_shift_is_a_phase(dw, t0, shift, w):
    a = gaussian_spectrum(ProbeSpec(dw, t0), w)
    b = gaussian_spectrum(ProbeSpec(dw, t0 + shift), w)
    assert abs(abs(a) - abs(b)) <= 1e-12 * max(1.0, abs(a))
    if abs(a) > 1e-200:
        assert b / a == pytest.approx(np.exp(1j * w * shift), rel=1e-9, abs=1e-12)


def test_control_envelope():
    sch = ControlSchedule.write_read((0.0, 10.0, 15.0), (20.0, 30.0, 12.0))
    t = np.array([-1.0, 0.0, 5.0, 10.0, 15.0, 20.0, 29.99, 30.0])
    assert list(control_envelope(sch, t)) == [0, 15, 15, 0, 0, 12, 12, 0]


def test_load_csv(tmp_path):
    path = tmp_path / "pulse.csv"
    path.write_text("# test\nt,re,im\n0,0,0\n1,1,2\n2,0,0\n")
    env = load_envelope_csv(path, TimeGrid(-1.0, 3.0, 9), carrier_offset=0.5)
    assert env.carrier_offset == 0.5
    assert env.samples[0] == 0 and env.samples[-1] == 0
    assert env.samples[4] == pytest.approx(1 + 2j)
    assert env.samples[3] == pytest.approx(0.5 + 1j)
