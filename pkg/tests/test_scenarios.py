import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambda_memory import scenarios as sc
from lambda_memory.model import ControlSchedule, LambdaSystem, MediumSpec, ProbeSpec, TimeGrid, validate_config
from lambda_memory.pulses import Envelope, gaussian_envelope
from lambda_memory.solver import SolverDomainError


def _gauss(t, t0, width=2.0):
    return Envelope(t, np.exp(-0.5 * ((t - t0) / width) ** 2).astype(complex))


T_AXIS = np.linspace(-20.0, 60.0, 8001)


def test_report_identity():
    env = _gauss(T_AXIS, 10.0)
    r = sc.compute_report(env, env)
    assert r.transmittance == pytest.approx(1.0, abs=1e-14)
    assert r.delay == pytest.approx(0.0, abs=1e-12)
    assert r.retrieval_efficiency == 0.0
    assert r.loss == pytest.approx(0.0, abs=1e-14)
    assert r.oscillation_freq == 0.0


def test_report_zero_output():
    env = _gauss(T_AXIS, 10.0)
    zero = Envelope(T_AXIS, np.zeros_like(env.samples))
    r = sc.compute_report(env, zero, zero, t_read=30.0)
    assert (r.transmittance, r.retrieval_efficiency, r.delay, r.oscillation_freq) == (0.0, 0.0, 0.0, 0.0)
    assert r.loss == 1.0


def test_report_pure_delay():
    dt = T_AXIS[1] - T_AXIS[0]
    r = sc.compute_report(_gauss(T_AXIS, 10.0), _gauss(T_AXIS, 20.0))
    assert abs(r.delay - 10.0) <= dt
    assert r.transmittance == pytest.approx(1.0, rel=1e-12)


def test_report_zero_input_is_an_error():
    zero = Envelope(T_AXIS, np.zeros(T_AXIS.size, complex))
    with pytest.raises(SolverDomainError):
        sc.compute_report(zero, zero)


def test_report_window_attribution():
    env = _gauss(T_AXIS, 5.0, 1.0)
    early = Envelope(T_AXIS, 0.6 * env.samples)
    late = Envelope(T_AXIS, math.sqrt(0.3) * _gauss(T_AXIS, 40.0, 1.0).samples)
    r = sc.compute_report(env, early, late, t_read=25.0)
    assert r.transmittance == pytest.approx(0.36, rel=1e-10)
    assert r.retrieval_efficiency == pytest.approx(0.3, rel=1e-10)
    assert r.loss == pytest.approx(0.34, rel=1e-9)
    assert r.delay == pytest.approx(0.0, abs=1e-9)


def test_oscillation_and_damping_on_synthetic_signal():
    t = np.linspace(0.0, 20.0, 4001)
    tau, w = 1.5, 15.0
    burst = np.exp(-(((t - 8.0) / 3.0) ** 2)) * (1.0 + 0.5 * np.cos(w * t))
    assert sc.oscillation_frequency(t, burst, min_freq=2.0) == pytest.approx(w, rel=0.01)
    ringing = np.exp(-t / 4.0) * (1.0 + 0.5 * np.exp(-t / tau) * np.cos(w * t))
    # the modulation term decays at the sum of both rates
    expected = 1.0 / (1.0 / 4.0 + 1.0 / tau)
    assert sc.damping_time(t, ringing - np.exp(-t / 4.0), w) == pytest.approx(expected, rel=0.01)


def test_smooth_envelope_has_no_oscillation():
    env = _gauss(T_AXIS, 10.0, 3.0)
    assert sc.oscillation_frequency(T_AXIS, env.intensity, min_freq=4.0 / 2.12) == 0.0
    assert math.isnan(sc.damping_time(T_AXIS, env.intensity, 0.0))


def test_peak_counting_and_overlap():
    two = _gauss(T_AXIS, 0.0, 1.0).samples + _gauss(T_AXIS, 8.0, 1.0).samples
    assert sc.count_peaks(T_AXIS, np.abs(two) ** 2) == 2
    assert sc.count_peaks(T_AXIS, np.zeros(T_AXIS.size)) == 0
    a = _gauss(T_AXIS, 10.0)
    b = Envelope(T_AXIS, np.exp(0.7j) * a.samples)
    assert sc.tail_overlap(a, 0.0, b, 0.0) == pytest.approx(1.0, abs=1e-12)
    shifted = _gauss(T_AXIS, 20.0)
    assert sc.tail_overlap(a, 0.0, shifted, 10.0) == pytest.approx(1.0, abs=1e-9)


def _small_cw(delta, rabi, d0, offset):
    return validate_config(
        LambdaSystem(delta_c=delta),
        ControlSchedule.cw(rabi),
        ProbeSpec(1.0, 6.0, offset),
        MediumSpec(d0, 40),
        TimeGrid(0.0, 40.0, 2001),
    )


@settings(max_examples=15, deadline=None)
@given(
    delta=st.floats(-20, 20),
    rabi=st.floats(0, 10),
    d0=st.floats(0, 10),
    offset=st.floats(-3, 3),
)
def test_report_ratios_are_bounded(delta, rabi, d0, offset):
    r = sc.run_transmission_scan(_small_cw(delta, rabi, d0, offset), [offset], workers=1)[0].report
    assert 0.0 <= r.transmittance <= 1.0 + 1e-9
    assert r.retrieval_efficiency == 0.0
    assert r.transmittance + r.retrieval_efficiency + r.loss == pytest.approx(1.0, abs=1e-12)


def test_store_retrieve_ratios_are_bounded():
    for pt in sc.run_store_retrieve(sc.fig7(dt=0.01, n_z=50), [-7.5, 0.0, 3.0], workers=1):
        r = pt.report
        assert 0 <= r.transmittance and 0 <= r.retrieval_efficiency
        assert r.transmittance + r.retrieval_efficiency <= 1.0 + 1e-9
        assert r.transmittance + r.retrieval_efficiency + r.loss == pytest.approx(1.0, abs=1e-12)


def test_empty_medium_scan():
    cfg = sc.fig4(dt=0.05, n_z=10)
    cfg = replace(cfg, medium=MediumSpec(0.0, 10))
    for p in sc.run_transmission_scan(cfg, [-2.0, -1.0, 0.0, 1.5], workers=1):
        assert p.report.transmittance == pytest.approx(1.0, abs=1e-12)
        assert p.report.delay == pytest.approx(0.0, abs=1e-9)


def test_scan_continuity_at_standard_spacing():
    # broadband probe: 0.5 gamma steps are fine against its spectral width
    deltas = np.round(np.arange(-15.0, 15.0 + 1e-9, 0.5), 6)
    T = [p.report.transmittance for p in sc.run_transmission_scan(sc.fig6(), deltas, solver="spectral")]
    assert np.max(np.abs(np.diff(T))) < 0.2


def test_scan_continuity_across_the_raman_line():
    # the field-pole line is far narrower than 0.5 gamma, so the scan is refined there
    deltas = np.round(np.arange(-1.5, -0.5 + 1e-9, 0.02), 6)
    T = [p.report.transmittance for p in sc.run_transmission_scan(sc.fig4(), deltas, solver="spectral")]
    assert np.max(np.abs(np.diff(T))) < 0.2


def test_time_and_spectral_scans_agree():
    cfg = sc.fig6(dt=0.01, n_z=100)
    deltas = [-7.5, 0.0, 4.0]
    a = sc.run_transmission_scan(cfg, deltas, workers=1)
    b = sc.run_transmission_scan(cfg, deltas, solver="spectral", workers=1)
    for p, q in zip(a, b):
        assert p.report.transmittance == pytest.approx(q.report.transmittance, abs=1e-3)


def test_on_resonance_carrier_splits_the_output():
    pt = sc.run_transmission_scan(sc.fig4(), [-1.10], workers=1)[0]
    assert sc.count_peaks(pt.output.t, pt.output.intensity) >= 2


def test_spectral_overlap_axis():
    cfg = sc.fig3()
    data = sc.spectral_overlap(cfg, -1.0)
    om = data["Omega"]
    i0 = int(np.argmin(np.abs(om)))
    assert om[i0] == pytest.approx(0.0, abs=1e-12)
    assert abs(data["chi_prime"][i0]) < 1e-12 and abs(data["chi_double_prime"][i0]) < 1e-12
    assert om[np.argmax(data["probe_spectrum_abs"])] == pytest.approx(-1.0, abs=1e-9)
    # field-associated absorption line just below the EIT point
    near = (om > -2.0) & (om < 0.0)
    assert om[near][np.argmax(data["chi_double_prime"][near])] == pytest.approx(-1.10, abs=0.01)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("LMS_THREADS", "3")
    assert sc.worker_count() == 3
    monkeypatch.setenv("LMS_THREADS", "0")
    assert sc.worker_count() >= 1
    monkeypatch.delenv("LMS_THREADS")
    assert sc.worker_count() >= 1


def test_parallel_scan_is_ordered_and_identical():
    cfg = _small_cw(-3.0, 4.0, 3.0, 0.0)
    deltas = [1.0, -2.0, 0.5, -0.5]
    seq = sc.run_transmission_scan(cfg, deltas, workers=1)
    par = sc.run_transmission_scan(cfg, deltas, workers=2)
    assert [p.carrier_offset for p in par] == deltas
    for p, q in zip(seq, par):
        assert np.array_equal(p.output.samples, q.output.samples)


def test_protocol_preconditions():
    with pytest.raises(SolverDomainError):
        sc.run_store_retrieve(sc.fig4(dt=0.05, n_z=10), [-1.0])
    with pytest.raises(SolverDomainError):
        sc.run_transmission_scan(sc.fig7(dt=0.01, n_z=10), [0.0], workers=1)
    with pytest.raises(ValueError):
        sc.run_transmission_scan(sc.fig4(dt=0.05, n_z=10), [0.0], solver="magic")


def test_uninterrupted_reference_keeps_the_write_coupling():
    cfg = sc.fig7(dt=0.01, n_z=20)
    ref = sc.uninterrupted_reference(cfg, -7.5)
    cw = replace(cfg, schedule=ControlSchedule.cw(15.0))
    direct = sc.run_transmission_scan(cw, [-7.5], workers=1)[0].output
    assert np.array_equal(ref.samples, direct.samples)


def test_best_delayed_and_fwhm():
    probe = ProbeSpec(2 * math.pi / 50, 25.0)
    fwhm = sc.fwhm_of_gaussian_probe(probe)
    env = gaussian_envelope(probe, TimeGrid(-25.0, 75.0, 10001))
    above = env.t[env.intensity >= 0.5 * env.intensity.max()]
    assert fwhm == pytest.approx(above[-1] - above[0], abs=2 * (env.t[1] - env.t[0]))

    def pt(T, d):
        return sc.TransmissionPoint(0.0, None, None, sc.EfficiencyReport(T, 0.0, d, 0.0, 1 - T))

    pts = [pt(0.9, 1.0), pt(0.7, 10.0), pt(0.5, 20.0)]
    assert sc.best_delayed(pts, 5.0).report.transmittance == 0.7
    assert sc.best_delayed(pts, 50.0) is None


def test_presets_are_valid():
    for name, make in sc.PRESETS.items():
        cfg = make()
        assert cfg.grid.t_start <= cfg.probe.arrival_time - 4 * cfg.probe.duration
