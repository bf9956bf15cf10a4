"""Named experiments, scan drivers and efficiency metrics."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks

from .coherence import CoherenceField, integrate_coherence_read, integrate_coherence_write
from .model import (
    Config,
    ControlSchedule,
    DopplerSpec,
    LambdaSystem,
    MediumSpec,
    ProbeSpec,
    TimeGrid,
    validate_config,
)
from .pulses import Envelope, gaussian_envelope, gaussian_spectrum
from .solver import (
    ComplexField2D,
    SolverDomainError,
    propagate_retrieval,
    propagate_spectral,
    propagate_writein,
)
from .susceptibility import DressedResponse, ReadoutResponse, spectral_response

TRANSIENT_EXCLUSION = 3.0


# ------------------------------------------------------------------ metrics


@dataclass(frozen=True)
class EfficiencyReport:
    transmittance: float
    retrieval_efficiency: float
    delay: float
    oscillation_freq: float
    loss: float

    def as_dict(self) -> dict:
        return asdict(self)


def centroid(t: np.ndarray, intensity: np.ndarray) -> float:
    norm = trapezoid(intensity, t)
    if norm <= 0:
        return float("nan")
    return float(trapezoid(t * intensity, t) / norm)


def oscillation_frequency(
    t, intensity, min_freq: float = 0.0, floor_factor: float = 3.0, pad: int = 8, relative_floor: float = 1e-2
) -> float:
    """Dominant angular frequency of the intensity modulation.

    Mean-removed, Hann-windowed, zero-padded FFT. Only interior local maxima
    above ``min_freq`` are candidates, so the monotone roll-off of a smooth
    envelope never counts. The strongest candidate must exceed
    ``floor_factor`` times the spectral floor, taken as the larger of the
    in-band median and ``relative_floor`` times the global spectral maximum.
    Returns 0 when nothing qualifies.
    """
    t = np.asarray(t)
    y = np.asarray(intensity, dtype=float)
    if y.size < 8 or not np.any(y):
        return 0.0
    dt = float(t[1] - t[0])
    x = (y - y.mean()) * np.hanning(y.size)
    n = 1 << int(math.ceil(math.log2(pad * y.size)))
    spec = np.abs(np.fft.rfft(x, n))
    w = 2.0 * math.pi * np.fft.rfftfreq(n, dt)
    band = w > min_freq
    peaks, _ = find_peaks(spec)
    peaks = peaks[band[peaks]]
    if not band.any() or peaks.size == 0:
        return 0.0
    k = int(peaks[np.argmax(spec[peaks])])
    floor = max(float(np.median(spec[band])), relative_floor * float(spec.max()))
    if spec[k] <= floor_factor * floor:
        return 0.0
    # parabolic refinement of the peak position
    a, b, c = spec[k - 1], spec[k], spec[k + 1]
    den = a - 2 * b + c
    shift = 0.5 * (a - c) / den if den != 0 else 0.0
    return float(w[k] + shift * (w[1] - w[0]))


def damping_time(t, intensity, freq: float, cutoff: float = 0.05) -> float:
    """Decay time of the modulation amplitude at angular frequency ``freq``.

    The intensity is demodulated at ``freq`` and smoothed over one period;
    log-amplitude is fitted by a straight line from its maximum until it
    first drops below ``cutoff`` of that maximum.
    """
    t = np.asarray(t)
    y = np.asarray(intensity, dtype=float)
    if freq <= 0:
        return float("nan")
    dt = float(t[1] - t[0])
    m = max(1, int(round(2 * math.pi / freq / dt)))
    z = np.convolve(y * np.exp(-1j * freq * t), np.ones(m) / m, mode="same")
    a = np.abs(z)
    i0 = int(np.argmax(a))
    below = np.flatnonzero(a[i0:] < cutoff * a[i0])
    i1 = i0 + (int(below[0]) if below.size else a.size - i0)
    if i1 - i0 < 3:
        return float("nan")
    slope = np.polyfit(t[i0:i1], np.log(a[i0:i1]), 1)[0]
    return float(-1.0 / slope) if slope < 0 else float("inf")


def count_peaks(t, intensity, prominence: float = 0.05) -> int:
    """Number of maxima with prominence above a fraction of the global peak."""
    y = np.asarray(intensity, dtype=float)
    if not np.any(y > 0):
        return 0
    peaks, _ = find_peaks(y, prominence=prominence * y.max())
    return int(peaks.size)


def tail_overlap(
    reference: Envelope,
    t_ref: float,
    retrieved: Envelope,
    t_ret: float,
    exclude: float = TRANSIENT_EXCLUSION,
    length: Optional[float] = None,
) -> float:
    """Normalized complex overlap between two envelopes after their switch times.

    Compares ``reference`` from ``t_ref + exclude`` with ``retrieved`` from
    ``t_ret + exclude`` over a common length (both must share dt). A global
    phase does not matter.
    """
    dt = float(reference.t[1] - reference.t[0])
    i_ref = int(np.searchsorted(reference.t, t_ref + exclude - 0.5 * dt))
    i_ret = int(np.searchsorted(retrieved.t, t_ret + exclude - 0.5 * dt))
    n = min(reference.t.size - i_ref, retrieved.t.size - i_ret)
    if length is not None:
        n = min(n, int(round(length / dt)) + 1)
    a = reference.samples[i_ref : i_ref + n]
    b = retrieved.samples[i_ret : i_ret + n]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(a, b)) / (na * nb))


def compute_report(
    input: Envelope,
    transmitted: Envelope,
    retrieved: Optional[Envelope] = None,
    t_read: Optional[float] = None,
    min_freq: Optional[float] = None,
) -> EfficiencyReport:
    """Energy ratios, delay and modulation frequency of a run.

    Energy before ``t_read`` counts as transmitted, energy from ``t_read``
    on (in either envelope) as retrieved. Without ``t_read`` everything is
    transmitted. The oscillation frequency is taken from the retrieved part
    when there is one, else from the transmitted output; ``min_freq``
    defaults to four times the input's spectral width so that the smooth
    envelope itself is not counted.
    """
    e_in = input.energy
    if not e_in > 0:
        raise SolverDomainError("input pulse carries no energy")
    t = transmitted.t
    I_out = transmitted.intensity
    if t_read is None:
        k = t.size - 1
        e_trans, e_ret = trapezoid(I_out, t), 0.0
        late = None
    else:
        # the sample at t_read closes the first piece and opens the second
        k = int(np.searchsorted(t, t_read))
        late = I_out.copy()
        if retrieved is not None:
            late = late + retrieved.intensity
        e_trans = trapezoid(I_out[: k + 1], t[: k + 1]) if k > 0 else 0.0
        e_ret = trapezoid(late[k:], t[k:])
    T = float(e_trans / e_in)
    R = float(e_ret / e_in)

    c_in = centroid(input.t, input.intensity)
    t_early, I_early = t[: k + 1], I_out[: k + 1]
    delay = float(centroid(t_early, I_early) - c_in) if np.any(I_early > 0) else 0.0

    if min_freq is None:
        var = trapezoid(input.intensity * (input.t - c_in) ** 2, input.t) / e_in
        min_freq = 4.0 / math.sqrt(var) if var > 0 else 0.0
    if late is not None and R > 0:
        freq = oscillation_frequency(t[k:], late[k:], min_freq=min_freq)
    else:
        freq = oscillation_frequency(t_early, I_early, min_freq=min_freq)
    return EfficiencyReport(T, R, delay, freq, 1.0 - T - R)


# ------------------------------------------------------------------ presets

RAMAN = dict(delta_c=-50.0, rabi=15.0, optical_depth=25.0, duration=50.0)
SHORT = dict(delta_c=0.0, rabi=15.0, optical_depth=25.0, duration=2.0)


def _grid(t0, t1, dt):
    return TimeGrid(t0, t1, int(round((t1 - t0) / dt)) + 1)


def fig3(carrier_offset: float = -1.0) -> Config:
    """Spectral overlap of a Raman-regime probe with the dressed susceptibility."""
    return fig4(carrier_offset)


def fig4(carrier_offset: float = -1.0, dt: float = 0.025, n_z: int = 100) -> Config:
    """Stationary coupling, far-detuned Raman configuration, long probe."""
    p = RAMAN
    T = p["duration"]
    return validate_config(
        LambdaSystem(delta_c=p["delta_c"]),
        ControlSchedule.cw(p["rabi"]),
        ProbeSpec(2 * math.pi / T, T / 2, carrier_offset),
        MediumSpec(p["optical_depth"], n_z),
        _grid(-25.0, 200.0, dt),
    )


def fig5(carrier_offset: float = -1.04, dt: float = 0.025, n_z: int = 100, storage: float = 50.0) -> Config:
    """Write for the probe duration, store in the dark, read with the same coupling."""
    p = RAMAN
    T = p["duration"]
    t_read = T + storage
    return validate_config(
        LambdaSystem(delta_c=p["delta_c"]),
        ControlSchedule.write_read((0.0, T, p["rabi"]), (t_read, t_read + 150.0, p["rabi"])),
        ProbeSpec(2 * math.pi / T, T / 2, carrier_offset),
        MediumSpec(p["optical_depth"], n_z),
        _grid(-25.0, t_read + 150.0, dt),
    )


def fig6(carrier_offset: float = -7.5, dt: float = 0.005, n_z: int = 200) -> Config:
    """Stationary resonant coupling, short probe tuned to an Autler-Townes line."""
    p = SHORT
    T = p["duration"]
    return validate_config(
        LambdaSystem(delta_c=p["delta_c"]),
        ControlSchedule.cw(p["rabi"]),
        ProbeSpec(2 * math.pi / T, T / 2, carrier_offset),
        MediumSpec(p["optical_depth"], n_z),
        _grid(-2.0, 20.0, dt),
    )


def fig7(carrier_offset: float = -7.5, dt: float = 0.005, n_z: int = 200, storage: float = 8.0) -> Config:
    """Short-pulse store and retrieve on resonance."""
    p = SHORT
    T = p["duration"]
    t_read = T + storage
    return validate_config(
        LambdaSystem(delta_c=p["delta_c"]),
        ControlSchedule.write_read((0.0, T, p["rabi"]), (t_read, t_read + 20.0, p["rabi"])),
        ProbeSpec(2 * math.pi / T, T / 2, carrier_offset),
        MediumSpec(p["optical_depth"], n_z),
        _grid(-2.0, t_read + 20.0, dt),
    )


PRESETS = {"fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7}


# ------------------------------------------------------------------ drivers


def worker_count() -> int:
    """Worker processes for scans; LMS_THREADS caps it, 0 or unset means auto."""
    raw = os.environ.get("LMS_THREADS", "0").strip() or "0"
    n = int(raw)
    return max(1, n if n > 0 else (os.cpu_count() or 1))


def _pool_map(fn, items, workers=None):
    items = list(items)
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))  # map preserves scan order


def with_offset(config: Config, carrier_offset: float) -> Config:
    probe = replace(config.probe, carrier_offset=float(carrier_offset))
    return replace(config, probe=probe)


@dataclass
class TransmissionPoint:
    carrier_offset: float
    input: Envelope
    output: Envelope
    report: EfficiencyReport
    field: Optional[ComplexField2D] = None


@dataclass
class StoreRetrievePoint:
    carrier_offset: float
    input: Envelope
    write_output: Envelope
    read_output: Envelope
    report: EfficiencyReport
    coherence: Optional[CoherenceField] = None
    write_field: Optional[ComplexField2D] = None
    read_field: Optional[ComplexField2D] = None


def _transmission_one(args):
    config, delta, solver, keep_field = args
    cfg = with_offset(config, delta)
    env = gaussian_envelope(cfg.probe, cfg.grid)
    field2d = None
    if solver == "spectral":
        out = propagate_spectral(env, cfg.system, cfg.schedule, cfg.medium, cfg.doppler)
    else:
        if cfg.schedule.read is not None:
            raise SolverDomainError("transmission scans take a cw or single-window schedule")
        kernel = DressedResponse(cfg.system, cfg.schedule, cfg.grid, delta, cfg.doppler)
        field2d = propagate_writein(env, kernel, cfg.medium)
        out = field2d.envelope(carrier_offset=delta)
    report = compute_report(env, out)
    return TransmissionPoint(float(delta), env, out, report, field2d if keep_field else None)


def run_transmission_scan(
    config: Config,
    delta_scan: Sequence[float],
    solver: str = "time",
    keep_fields: bool = False,
    workers: Optional[int] = None,
) -> list:
    """Propagate the probe for each carrier offset with the coupling as configured.

    ``solver`` is "time" (state-space Volterra march) or "spectral" (cw only).
    """
    if solver not in ("time", "spectral"):
        raise ValueError(f"unknown solver {solver!r}")
    jobs = [(config, float(d), solver, keep_fields) for d in delta_scan]
    return _pool_map(_transmission_one, jobs, workers)


def spectral_overlap(config: Config, carrier_offset: float, omega=None) -> dict:
    """Susceptibility and probe spectrum on an axis centred on two-photon resonance.

    The axis is the probe detuning minus the coupling detuning, so the EIT
    point sits at zero and the probe spectrum is centred at the carrier
    offset.
    """
    if omega is None:
        span = max(8.0 * config.probe.spectral_width, 4.0)
        omega = np.linspace(carrier_offset - span, carrier_offset + span, 2001)
    omega = np.asarray(omega, dtype=float)
    rabi = config.schedule.write.rabi
    resp = spectral_response(
        config.system, rabi, config.medium, config.system.delta_c, omega, config.doppler
    )
    probe = replace(config.probe, arrival_time=0.0)
    alpha = np.abs(gaussian_spectrum(probe, omega - carrier_offset))
    return {
        "Omega": omega,
        "chi_prime": resp.chi_prime,
        "chi_double_prime": resp.chi_double_prime,
        "probe_spectrum_abs": alpha,
    }


def _store_retrieve_one(args):
    config, delta, with_coherence, keep_fields = args
    cfg = with_offset(config, delta)
    sch = cfg.schedule
    if sch.read is None:
        raise SolverDomainError("store-retrieve needs a two-window schedule")
    env = gaussian_envelope(cfg.probe, cfg.grid)
    write_k = DressedResponse(cfg.system, ControlSchedule((sch.write,)), cfg.grid, delta, cfg.doppler)
    wf = propagate_writein(env, write_k, cfg.medium)
    read_k = ReadoutResponse(cfg.system, sch, cfg.grid, delta, cfg.doppler)
    rf = propagate_retrieval(wf, read_k, None, cfg.medium)
    coh = None
    if with_coherence:
        coh = integrate_coherence_write(wf, write_k, cfg.system, sch, delta)
        coh = integrate_coherence_read(coh, wf, rf, read_k, None, cfg.system, sch, delta)
    w_out = wf.envelope(carrier_offset=delta)
    r_out = rf.envelope(carrier_offset=delta)
    report = compute_report(env, w_out, r_out, t_read=sch.read.t_on)
    return StoreRetrievePoint(
        float(delta),
        env,
        w_out,
        r_out,
        report,
        coh,
        wf if keep_fields else None,
        rf if keep_fields else None,
    )


def run_store_retrieve(
    config: Config,
    delta_scan: Sequence[float],
    with_coherence: bool = True,
    keep_fields: bool = False,
    workers: Optional[int] = None,
) -> list:
    """Full write, dark storage and readout for each carrier offset."""
    if config.schedule.read is None:
        raise SolverDomainError("store-retrieve needs a two-window schedule")
    jobs = [(config, float(d), with_coherence, keep_fields) for d in delta_scan]
    return _pool_map(_store_retrieve_one, jobs, workers)


def uninterrupted_reference(config: Config, carrier_offset: float) -> Envelope:
    """Output of the same probe with the write coupling left on for the whole grid."""
    cw = replace(config, schedule=ControlSchedule.cw(config.schedule.write.rabi, config.schedule.write.phase))
    return run_transmission_scan(cw, [carrier_offset], workers=1)[0].output


def best_delayed(points: Sequence[TransmissionPoint], min_delay: float) -> Optional[TransmissionPoint]:
    """Highest-transmittance point whose centroid delay is at least ``min_delay``."""
    ok = [p for p in points if p.report.delay >= min_delay]
    return max(ok, key=lambda p: p.report.transmittance) if ok else None


def fwhm_of_gaussian_probe(probe: ProbeSpec) -> float:
    """Intensity full width at half maximum of the generated Gaussian probe."""
    return 2.0 * math.sqrt(2.0 * math.log(2.0)) / probe.spectral_width
