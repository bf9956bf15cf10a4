"""Time-nonlocal susceptibility of the dressed medium.

Kernel normalization: the Maxwell equation is written as

    d eps / d zeta = i (d0/2) * w(zeta) * int K(t, t') eps(t') dt'

with ``K(t, t') = -(gamma/2) exp(i carrier (t - t')) G(t, t')`` and ``G`` the
slowly varying propagator. In the stationary limit this gives
``Phi(Omega) = (d0/2) chi(carrier + Omega)`` with ``chi = -(gamma/2)/(x - H)_nn``,
so the bare on-resonance amplitude exponent is ``i d0/2`` and the intensity
transmission ``exp(-d0)``.

Two interchangeable representations are provided. :class:`KernelTable` is the
dense lower-triangular matrix on the time grid. :class:`DressedResponse` is the
equivalent state-space form: because the coupling is piecewise constant, the
kernel is a finite sum of exponentials and the history integral can be
carried forward exactly step by step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from scipy.linalg import expm

from .model import ControlSchedule, DopplerSpec, LambdaSystem, MediumSpec, TimeGrid
from .propagator import _level, green_rect, green_two_pulse, hamiltonian, quasi_energies


class GridResolutionError(ValueError):
    pass


def chi(system: LambdaSystem, rabi: float, x, momentum_shift: float = 0.0):
    """Dimensionless stationary susceptibility at probe detuning ``x``.

    Normalized so that chi = i on the bare resonance; Im chi >= 0 is absorption.
    """
    x = np.asarray(x, dtype=complex) - momentum_shift
    lev = _level(system, 0.0) - momentum_shift
    if rabi == 0:
        # the m' level decouples; avoids 0/0 at x = lev
        return -0.5 * system.gamma / (x + 0.5j * system.gamma)
    num = x - lev
    q = 0.25 * rabi**2
    # Near the dark state keep num in the numerator; elsewhere divide by a
    # rescaled num so denormal detunings and underflowed q stay finite.
    dark = num == 0
    near = (np.abs(num) < q) | dark
    scale = np.maximum(np.abs(num.real), np.abs(num.imag))
    scale = np.where(near | (scale == 0), 1.0, scale)
    unit = np.where(near, 1.0, num.real / scale + 1j * (num.imag / scale))
    far = -0.5 * system.gamma / (x + 0.5j * system.gamma - (q / scale) / unit)
    close = -0.5 * system.gamma * num / np.where(near & ~dark, (x + 0.5j * system.gamma) * num - q, 1.0)
    return np.where(near, close, far)[()]


@dataclass(frozen=True)
class SpectralResponse:
    omega: np.ndarray
    phi: np.ndarray
    chi: np.ndarray

    @property
    def chi_prime(self):
        return self.chi.real

    @property
    def chi_double_prime(self):
        return self.chi.imag

    @property
    def transfer(self):
        return np.exp(1j * self.phi)


def spectral_response(
    system: LambdaSystem,
    rabi: float,
    medium: MediumSpec,
    carrier: float,
    omega,
    doppler: Optional[DopplerSpec] = None,
) -> SpectralResponse:
    """Whole-medium propagation exponent for a stationary coupling field.

    ``carrier`` is the probe detuning from the m-n transition; ``omega`` are
    sideband frequencies relative to it (complex values are allowed and
    give the analytic continuation into the upper half plane).
    """
    omega = np.asarray(omega)
    x = carrier + omega
    shifts, weights = (doppler or DopplerSpec()).nodes()
    c = sum(w * chi(system, rabi, x, kv) for kv, w in zip(shifts, weights))
    scale = 0.5 * medium.optical_depth * float(np.mean(medium.weights()))
    return SpectralResponse(omega, scale * c, c)


# ---------------------------------------------------------------- dense tables


@dataclass(frozen=True)
class KernelTable:
    """Dense kernel K[i, j] = K(t_i, t_j); zero above the diagonal."""

    stage: str
    t: np.ndarray
    values: np.ndarray
    support: tuple = (0, None)  # column index range [start, stop) of t'

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def _max_kernel_frequency(system, schedule, carrier):
    rabis = [0.0] + [w.rabi for w in schedule.windows]
    freqs = []
    for r in rabis:
        q = quasi_energies(system, r)
        freqs += [abs(q.mu_plus.real - carrier), abs(q.mu_minus.real - carrier)]
    return max(freqs)


def _check_resolution(system, schedule, grid, carrier):
    f = _max_kernel_frequency(system, schedule, carrier)
    if grid.dt * f > 0.5:
        raise GridResolutionError(
            f"dt*max-frequency = {grid.dt * f:.3g} > 0.5 (dt={grid.dt:.3g}, f={f:.3g}); "
            f"need n_t >= {int(math.ceil((grid.t_end - grid.t_start) * f / 0.5)) + 1}"
        )


def kernel_write(
    system: LambdaSystem,
    schedule: ControlSchedule,
    grid: TimeGrid,
    carrier_offset: float = 0.0,
    doppler: Optional[DopplerSpec] = None,
) -> KernelTable:
    """Dense write-stage kernel from the single-window propagator."""
    carrier = system.delta_c + carrier_offset
    _check_resolution(system, schedule, grid, carrier)
    t = grid.t
    tt, tp = np.meshgrid(t, t, indexing="ij")
    lower = tt >= tp
    s = np.where(lower, tt - tp, 0.0)
    shifts, weights = (doppler or DopplerSpec()).nodes()
    vals = np.zeros(tt.shape, dtype=complex)
    for kv, w in zip(shifts, weights):
        g = green_rect(system, schedule.write, tt, tp, momentum_shift=kv)
        if len(shifts) == 1:
            vals = np.exp(1j * (carrier - kv) * s) * g
        else:
            vals += w * np.exp(1j * (carrier - kv) * s) * g
    vals = np.where(lower, -0.5 * system.gamma * vals, 0.0)
    return KernelTable("write", t, vals)


def kernel_readout(
    system: LambdaSystem,
    schedule: ControlSchedule,
    grid: TimeGrid,
    carrier_offset: float = 0.0,
) -> KernelTable:
    """Dense recovery kernel linking write-window sources to read-window times."""
    if schedule.read is None:
        raise ValueError("readout kernel needs a two-window schedule")
    carrier = system.delta_c + carrier_offset
    _check_resolution(system, schedule, grid, carrier)
    t = grid.t
    rows = (t >= schedule.read.t_on) & (t <= schedule.read.t_off)
    cols = (t >= schedule.write.t_on) & (t <= schedule.write.t_off)
    vals = np.zeros((t.size, t.size), dtype=complex)
    if rows.any() and cols.any():
        tt, tp = np.meshgrid(t[rows], t[cols], indexing="ij")
        g = green_two_pulse(system, schedule, tt, tp)
        block = -0.5 * system.gamma * np.exp(1j * carrier * (tt - tp)) * g
        vals[np.ix_(rows, cols)] = block
    idx = np.flatnonzero(cols)
    return KernelTable("readout", t, vals, (int(idx[0]), int(idx[-1]) + 1))


def kernel_read_stage(
    system: LambdaSystem,
    schedule: ControlSchedule,
    grid: TimeGrid,
    carrier_offset: float = 0.0,
) -> KernelTable:
    """Write-stage form evaluated with the read window, for t' in and after it."""
    read_only = ControlSchedule((schedule.read,))
    k = kernel_write(system, read_only, grid, carrier_offset)
    start = grid.index(schedule.read.t_on)
    vals = k.values.copy()
    vals[:, :start] = 0.0
    return KernelTable("read", k.t, vals, (start, None))


def apply_kernel(table: KernelTable, eps: np.ndarray, start: int = 0) -> np.ndarray:
    """Trapezoidal history integral sum_j w_ij K_ij eps_j over j in [start, i]."""
    K = table.values
    e = np.zeros(eps.size, dtype=complex)
    e[start:] = eps[start:]
    # trapezoid: half weight at j = start and j = i
    out = table.dt * (K @ e - 0.5 * K[:, start] * e[start] - 0.5 * np.diagonal(K) * e)
    out[: start + 1] = 0.0
    return out


def apply_kernel_block(table: KernelTable, eps: np.ndarray) -> np.ndarray:
    """Trapezoidal integral over the table's whole column support (all rows)."""
    i0, i1 = table.support
    i1 = eps.size if i1 is None else i1
    if i1 - i0 < 2:
        return np.zeros(eps.size, dtype=complex)
    w = np.full(i1 - i0, table.dt)
    w[0] = w[-1] = 0.5 * table.dt
    return table.values[:, i0:i1] @ (w * eps[i0:i1])


# --------------------------------------------------------- state-space form


def _step_coefficients(gen: np.ndarray, dt: float):
    """One-step propagator for db/dt = -i gen b + e_n eps(t), eps linear in the step.

    Returns (E, alpha, beta) with b1 = E b0 + alpha eps0 + beta eps1.
    """
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = -1j * gen
    m[0, 2] = 1.0
    m[2, 3] = 1.0
    big = expm(m * dt)
    E = big[:2, :2]
    p = big[:2, 2]
    q = big[:2, 3] / dt
    return E, p - q, q


@numba.njit(cache=True)
def _march(E, alpha, beta, seg, eps, b0, start, states):
    n = eps.size
    nodes = E.shape[1]
    out = np.zeros(n, dtype=np.complex128)
    b = b0.copy()
    for k in range(nodes):
        out[start] += b[k, 0]
        if states.shape[0] > 0:
            states[start, k, 0] = b[k, 0]
            states[start, k, 1] = b[k, 1]
    for j in range(start, n - 1):
        s = seg[j]
        e0 = eps[j]
        e1 = eps[j + 1]
        acc = 0.0 + 0.0j
        for k in range(nodes):
            x0 = E[s, k, 0, 0] * b[k, 0] + E[s, k, 0, 1] * b[k, 1] + alpha[s, k, 0] * e0 + beta[s, k, 0] * e1
            x1 = E[s, k, 1, 0] * b[k, 0] + E[s, k, 1, 1] * b[k, 1] + alpha[s, k, 1] * e0 + beta[s, k, 1] * e1
            b[k, 0] = x0
            b[k, 1] = x1
            acc += x0
            if states.shape[0] > 0:
                states[j + 1, k, 0] = x0
                states[j + 1, k, 1] = x1
        out[j + 1] = acc
    return out


class DressedResponse:
    """Exact history integral for a piecewise-constant coupling schedule.

    The medium state per Doppler class is the pair (b_n, b_m') in the probe
    frame, driven by eps through the n component. ``polarization`` returns
    ``-(gamma/2) * sum_k w_k * (-i) b_n^k``, identical to the kernel integral
    with eps linearly interpolated between grid points.
    """

    def __init__(
        self,
        system: LambdaSystem,
        schedule: ControlSchedule,
        grid: TimeGrid,
        carrier_offset: float = 0.0,
        doppler: Optional[DopplerSpec] = None,
        stage: str = "write",
    ):
        self.system = system
        self.schedule = schedule
        self.grid = grid
        self.stage = stage
        self.carrier_offset = carrier_offset
        self.carrier = system.delta_c + carrier_offset
        self.shifts, self.weights = (doppler or DopplerSpec()).nodes()

        t = grid.t
        mid = 0.5 * (t[:-1] + t[1:])
        rabi = schedule.rabi_at(mid)
        keys, seg = np.unique(rabi, return_inverse=True)
        self.seg = seg.astype(np.int64)
        nk = len(self.shifts)
        self.E = np.zeros((keys.size, nk, 2, 2), dtype=complex)
        self.alpha = np.zeros((keys.size, nk, 2), dtype=complex)
        self.beta = np.zeros((keys.size, nk, 2), dtype=complex)
        for s, key in enumerate(keys):
            for k, kv in enumerate(self.shifts):
                gen = hamiltonian(system, abs(key), np.angle(key), kv) - (self.carrier - kv) * np.eye(2)
                self.E[s, k], self.alpha[s, k], self.beta[s, k] = _step_coefficients(gen, grid.dt)

    def _run(self, eps, initial=None, start=0, keep_states=False):
        eps = np.ascontiguousarray(eps, dtype=np.complex128)
        nk = len(self.shifts)
        b0 = np.zeros((nk, 2), dtype=np.complex128)
        if initial is not None:
            b0[:] = initial
        states = np.zeros((eps.size if keep_states else 0, nk, 2), dtype=np.complex128)
        # the march carries w_k * b_k so that the node sum is the quadrature
        aw = self.alpha * self.weights[None, :, None]
        bw = self.beta * self.weights[None, :, None]
        b0w = b0 * self.weights[:, None]
        acc = _march(self.E, aw, bw, self.seg, eps, b0w, start, states)
        pol = 0.5j * self.system.gamma * acc
        if start > 0:
            pol[:start] = 0.0
        if keep_states:
            states = states / self.weights[None, :, None]
            return pol, states
        return pol

    def polarization(self, eps, initial=None, start: int = 0):
        return self._run(eps, initial, start)

    def states(self, eps, initial=None, start: int = 0):
        """Polarization and the full (n_t, n_nodes, 2) medium-state history."""
        return self._run(eps, initial, start, keep_states=True)

    def dense(self) -> KernelTable:
        """Reference dense table of the same kernel (for small grids)."""
        return kernel_write(self.system, self.schedule, self.grid, self.carrier_offset)


class ReadoutResponse:
    """Recovery pathway: write-stage storage followed by read-stage emission.

    ``source`` gives the first history integral of the retrieval equation
    (spin coherence left by the write pulse radiating under the read pulse);
    ``response`` gives the read-window self-interaction of the recovered field.
    """

    stage = "readout"

    def __init__(
        self,
        system: LambdaSystem,
        schedule: ControlSchedule,
        grid: TimeGrid,
        carrier_offset: float = 0.0,
        doppler: Optional[DopplerSpec] = None,
    ):
        if schedule.read is None:
            raise ValueError("readout needs a two-window schedule")
        self.system = system
        self.schedule = schedule
        self.grid = grid
        self.write = DressedResponse(system, ControlSchedule((schedule.write,)), grid, carrier_offset, doppler)
        self.read = DressedResponse(
            system, ControlSchedule((schedule.read,)), grid, carrier_offset, doppler, stage="read"
        )
        self.i_read = grid.index(schedule.read.t_on)

    def stored_state(self, eps_write):
        """Per-node (0, b_m') at the read onset; the excited part is dropped."""
        _, st = self.write.states(eps_write)
        b = np.zeros((len(self.write.shifts), 2), dtype=complex)
        b[:, 1] = st[self.i_read, :, 1]
        return b

    def source(self, eps_write):
        zero = np.zeros(self.grid.n_t, dtype=complex)
        return self.read.polarization(zero, initial=self.stored_state(eps_write), start=self.i_read)

    def response(self, eps_out):
        return self.read.polarization(eps_out, start=self.i_read)
