"""Retarded excited-state propagator dressed by the coupling field.

All values carry the free excited-state phase factored out, so they are
slowly varying on the detuning scale. The frame is rotating with the bare
excited-state energy; the m' level dressed by one coupling photon then sits
at ``delta_c`` (minus any Doppler shift) with width ``gamma_g``.

Inside a coupling window the pair (n, m') evolves under the 2x2 generator::

    H = [[-i gamma/2,            (Omega/2) e^{i phi}],
         [(Omega/2) e^{-i phi},  delta_c - kv - i gamma_g]]

and the propagator is ``-i [exp(-i H s)]_nn``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .model import ControlSchedule, ControlWindow, LambdaSystem


class PropagatorDomainError(ValueError):
    """The requested times fall outside the region where a closed form exists."""


@dataclass(frozen=True)
class QuasiEnergies:
    """Autler-Townes poles and their residues.

    ``mu_plus`` is the atom-associated pole (-i gamma/2 at zero drive),
    ``mu_minus`` the field-associated one (delta_c at zero drive).
    """

    mu_plus: complex
    mu_minus: complex
    w_plus: complex
    w_minus: complex

    @property
    def splitting(self) -> complex:
        return self.mu_plus - self.mu_minus


def _level(system: LambdaSystem, momentum_shift: float) -> complex:
    return complex(system.delta_c - momentum_shift, -system.gamma_g)


def hamiltonian(system: LambdaSystem, rabi: float, phase: float = 0.0, momentum_shift: float = 0.0):
    g = 0.5 * rabi
    return np.array(
        [
            [-0.5j * system.gamma, g * cmath.exp(1j * phase)],
            [g * cmath.exp(-1j * phase), _level(system, momentum_shift)],
        ]
    )


def quasi_energies(system: LambdaSystem, rabi: float, momentum_shift: float = 0.0) -> QuasiEnergies:
    """Roots of (x + i gamma/2)(x - delta_c) - rabi^2/4 with continuous labels.

    The square root is taken as c*sqrt(1 + rabi^2/c^2) with c = delta + i gamma/2,
    which is continuous along any path in rabi at fixed detuning and reduces to
    the bare poles at zero drive. At delta_c = 0 the branch is the limit from
    positive detuning.
    """
    lev = _level(system, momentum_shift)
    c = lev + 0.5j * system.gamma
    if abs(c) <= 1e-100 * (1.0 + rabi):
        # gamma_g = gamma/2 on two-photon resonance; c*c would underflow
        root = complex(rabi) if rabi > 0 else c
    else:
        z = 1.0 + (0.5 * rabi) ** 2 * 4.0 / (c * c)
        if z.imag == 0.0 and z.real < 0.0:
            z = complex(z.real, -0.0)
        root = c * cmath.sqrt(z)
    centre = lev - 0.5j * system.gamma
    mu_field = 0.5 * (centre + root)
    mu_atom = 0.5 * (centre - root)
    split = mu_atom - mu_field
    if split == 0:
        w_atom = w_field = 0.5 + 0j
    else:
        w_atom = (mu_atom - lev) / split
        w_field = (mu_field - lev) / (-split)
    return QuasiEnergies(mu_atom, mu_field, w_atom, w_field)


def _dressed_nn(system: LambdaSystem, rabi: float, phase: float, s, momentum_shift: float = 0.0):
    """[exp(-i H s)]_nn for s >= 0 (no -i prefactor)."""
    s = np.asarray(s, dtype=float)
    q = quasi_energies(system, rabi, momentum_shift)
    scale = abs(q.mu_plus) + abs(q.mu_minus) + system.gamma
    if abs(q.splitting) > 1e-5 * scale:
        return q.w_plus * np.exp(-1j * q.mu_plus * s) + q.w_minus * np.exp(-1j * q.mu_minus * s)
    # near the exceptional point the two-exponential form cancels badly
    h = hamiltonian(system, rabi, phase, momentum_shift)
    flat = np.array([expm(-1j * h * si)[0, 0] for si in s.ravel()])
    return flat.reshape(s.shape)


def _dressed_offdiag(system, rabi, phase, s, momentum_shift=0.0, upper=True):
    """Off-diagonal element of exp(-i H s): (n, m') if ``upper`` else (m', n)."""
    s = np.asarray(s, dtype=float)
    q = quasi_energies(system, rabi, momentum_shift)
    coupling = 0.5 * rabi * cmath.exp((1j if upper else -1j) * phase)
    scale = abs(q.mu_plus) + abs(q.mu_minus) + system.gamma
    if abs(q.splitting) > 1e-5 * scale:
        return coupling * (np.exp(-1j * q.mu_plus * s) - np.exp(-1j * q.mu_minus * s)) / q.splitting
    h = hamiltonian(system, rabi, phase, momentum_shift)
    i, j = (0, 1) if upper else (1, 0)
    flat = np.array([expm(-1j * h * si)[i, j] for si in s.ravel()])
    return flat.reshape(s.shape)


def _bare(system: LambdaSystem, s):
    return np.exp(-0.5 * system.gamma * np.asarray(s, dtype=float))


def green_cw(system: LambdaSystem, rabi: float, s, momentum_shift: float = 0.0, phase: float = 0.0):
    """Propagator under a stationary coupling field after elapsed time ``s``.

    Zero for s < 0; equal to -i at s = 0.
    """
    s = np.asarray(s, dtype=float)
    causal = s >= 0
    val = -1j * _dressed_nn(system, rabi, phase, np.where(causal, s, 0.0), momentum_shift)
    return np.where(causal, val, 0.0)


def green_rect(system: LambdaSystem, window: ControlWindow, t, t_prime, momentum_shift: float = 0.0):
    """Propagator for a single rectangular coupling pulse.

    Built by clipping bare and dressed evolution in the six time orderings
    relative to the window; continuous at both switching instants.
    """
    if isinstance(window, ControlSchedule):
        window = window.write
    t, t_prime = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(t_prime, dtype=float))
    if math.isinf(window.t_on) and math.isinf(window.t_off):
        return green_cw(system, window.rabi, t - t_prime, momentum_shift, window.phase)

    dressed = lambda s: _dressed_nn(system, window.rabi, window.phase, s, momentum_shift)  # noqa: E731
    bare = lambda s: _bare(system, s)  # noqa: E731
    T = window.duration
    tau = t - window.t_on
    tau_p = t_prime - window.t_on

    before_p = tau_p < 0
    inside_p = (tau_p >= 0) & (tau_p < T)
    after_p = tau_p >= T
    before = tau < 0
    inside = (tau >= 0) & (tau < T)
    after = tau >= T
    causal = tau >= tau_p

    # clip arguments so that unused branches never overflow
    tin = np.clip(tau, 0.0, T)
    tpin = np.clip(tau_p, 0.0, T)
    out = np.zeros(t.shape, dtype=complex)

    c11 = before_p & before & causal
    out = np.where(c11, bare(np.where(c11, tau - tau_p, 0.0)), out)
    c12 = before_p & inside
    out = np.where(c12, dressed(tin) * bare(np.where(c12, -tau_p, 0.0)), out)
    c13 = before_p & after
    out = np.where(
        c13, bare(np.where(c13, tau - T, 0.0)) * dressed(T) * bare(np.where(c13, -tau_p, 0.0)), out
    )
    c21 = inside_p & inside & causal
    out = np.where(c21, dressed(np.where(c21, tin - tpin, 0.0)), out)
    c22 = inside_p & after
    out = np.where(c22, bare(np.where(c22, tau - T, 0.0)) * dressed(T - tpin), out)
    c3 = after_p & after & causal
    out = np.where(c3, bare(np.where(c3, tau - tau_p, 0.0)), out)
    return -1j * out


def green_two_pulse(system: LambdaSystem, schedule: ControlSchedule, t, t_prime, momentum_shift: float = 0.0):
    """Propagator linking a time in the write pulse to a time in the read pulse.

    Product of the read-window transfer m' -> n, the free evolution of the
    stored m' amplitude across the dark interval, and the write-window
    transfer n -> m'. Only defined for t_prime inside the write window and t
    inside the read window.
    """
    write, read = schedule.write, schedule.read
    if read is None:
        raise PropagatorDomainError("two-pulse propagator needs a read window")
    t, t_prime = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(t_prime, dtype=float))
    # closed intervals: both transfer factors are continuous at the edges
    in_write = (t_prime >= write.t_on) & (t_prime <= write.t_off)
    in_read = (t >= read.t_on) & (t <= read.t_off)
    if not (np.all(in_write) and np.all(in_read)):
        raise PropagatorDomainError("t' must lie in the write window and t in the read window")
    to_store = _dressed_offdiag(system, write.rabi, write.phase, write.t_off - t_prime, momentum_shift, upper=False)
    dark = np.exp(-1j * _level(system, momentum_shift) * (read.t_on - write.t_off))
    to_light = _dressed_offdiag(system, read.rabi, read.phase, t - read.t_on, momentum_shift, upper=True)
    return -1j * to_light * dark * to_store
