"""Marching the probe envelope through the medium.

Retarded frame: zeta in [0, 1] is the fractional depth, the time axis is
t - z/c, and free propagation is the identity. Each slab is advanced with the
explicit midpoint rule in zeta; the history integral in t is either the
trapezoidal sum over a dense :class:`KernelTable` or the exact state-space
march of a :class:`DressedResponse`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from .model import ControlSchedule, DopplerSpec, LambdaSystem, MediumSpec
from .pulses import Envelope
from .susceptibility import (
    DressedResponse,
    KernelTable,
    ReadoutResponse,
    apply_kernel,
    apply_kernel_block,
    spectral_response,
)


class NumericalError(RuntimeError):
    pass


class SolverDomainError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class ComplexField2D:
    """Envelope history eps[slab, time]; row 0 is the input face."""

    t: np.ndarray
    values: np.ndarray
    frame: str = "retarded"

    @property
    def n_z(self) -> int:
        return self.values.shape[0] - 1

    @property
    def zeta(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.shape[0])

    @property
    def output(self) -> np.ndarray:
        return self.values[-1]

    def energies(self) -> np.ndarray:
        """Pulse energy carried through every slab face."""
        return trapezoid(np.abs(self.values) ** 2, self.t, axis=1)

    def envelope(self, slab: int = -1, carrier_offset: float = 0.0) -> Envelope:
        return Envelope(self.t, self.values[slab].copy(), carrier_offset)


Kernel = Union[KernelTable, DressedResponse]


def _history(kernel: Kernel, start: int = 0):
    if isinstance(kernel, KernelTable):
        return lambda eps: apply_kernel(kernel, eps, start)
    return lambda eps: kernel.polarization(eps, start=start)


def _check_finite(row, slab):
    if not np.all(np.isfinite(row)):
        bad = int(np.flatnonzero(~np.isfinite(row))[0])
        raise NumericalError(f"non-finite envelope at slab {slab}, time index {bad}")


def _march(eps0, history, medium: MediumSpec, source=None):
    n_z = medium.n_z
    h = 1.0 / n_z
    weights = medium.weights()
    out = np.empty((n_z + 1, eps0.size), dtype=complex)
    out[0] = eps0
    eps = eps0.astype(complex)
    for j in range(n_z):
        g = 0.5j * medium.optical_depth * weights[j]
        if source is None:
            k1 = g * history(eps)
            k2 = g * history(eps + 0.5 * h * k1)
        else:
            s0, s1 = source(j), source(j + 1)
            k1 = g * (s0 + history(eps))
            k2 = g * (0.5 * (s0 + s1) + history(eps + 0.5 * h * k1))
        eps = eps + h * k2
        _check_finite(eps, j + 1)
        out[j + 1] = eps
    return out


def propagate_writein(
    envelope: Envelope,
    kernel: Kernel,
    medium: MediumSpec,
    check_convergence: bool = False,
    tolerance: float = 1e-3,
) -> ComplexField2D:
    """Solve the write-stage Maxwell equation slab by slab.

    With ``check_convergence`` the march is repeated with half the slab
    thickness and a :class:`ConvergenceWarning` is issued when the output
    faces differ by more than ``tolerance`` (relative L2).
    """
    if getattr(kernel, "stage", "write") != "write":
        raise SolverDomainError(f"write-in needs a write-stage kernel, got {kernel.stage!r}")
    values = _march(np.asarray(envelope.samples), _history(kernel), medium)
    if check_convergence:
        fine_medium = MediumSpec(
            medium.optical_depth,
            2 * medium.n_z,
            None if medium.density_profile is None else tuple(np.repeat(medium.weights(), 2)),
        )
        fine = _march(np.asarray(envelope.samples), _history(kernel), fine_medium)[-1]
        err = np.linalg.norm(fine - values[-1]) / max(np.linalg.norm(fine), 1e-300)
        if err > tolerance:
            warnings.warn(f"zeta step-halving changes the output by {err:.2e}", ConvergenceWarning, stacklevel=2)
    return ComplexField2D(envelope.t, values)


def propagate_retrieval(
    stored_field: Optional[ComplexField2D],
    kernel_read: Union[KernelTable, ReadoutResponse],
    kernel_out: Optional[KernelTable],
    medium: MediumSpec,
) -> ComplexField2D:
    """Solve for the recovered envelope under the read pulse.

    The source term is the recovery kernel applied to the stored write-in
    field (t' in the write window); the self term is the read-stage kernel
    applied to the recovered field itself (t' from the read onset). Nothing
    is incident on the input face.
    """
    if stored_field is None:
        raise SolverDomainError("retrieval needs the write-in field history")
    if stored_field.n_z != medium.n_z:
        raise SolverDomainError("stored field and medium have different slab counts")
    rows = stored_field.values
    if isinstance(kernel_read, ReadoutResponse):
        sources = [kernel_read.source(r) for r in rows]
        history = kernel_read.response
    else:
        if kernel_out is None:
            raise SolverDomainError("dense retrieval needs the read-stage kernel table")
        sources = [apply_kernel_block(kernel_read, r) for r in rows]
        history = _history(kernel_out, kernel_out.support[0])
    zero = np.zeros(rows.shape[1], dtype=complex)
    values = _march(zero, history, medium, source=lambda j: sources[j])
    return ComplexField2D(stored_field.t, values)


def propagate_spectral(
    envelope: Envelope,
    system: LambdaSystem,
    schedule: ControlSchedule,
    medium: MediumSpec,
    doppler: Optional[DopplerSpec] = None,
    pad_factor: int = 8,
    damping: Optional[float] = None,
) -> Envelope:
    """Exact whole-medium solution for a stationary coupling field.

    Every Fourier component is multiplied by exp(i Phi(Omega)). The input is
    zero-padded, and additionally weighted by exp(-a t) with the transfer
    evaluated at Omega + i a, which is legitimate because the response is
    causal; this suppresses wrap-around of long-lived tails by exp(-a L)
    over the padded length L. ``damping`` sets a directly (default 30/L).
    """
    if not schedule.is_cw:
        raise SolverDomainError("the spectral solver needs a stationary (cw) coupling field")
    t = envelope.t
    dt = float(t[1] - t[0])
    n = t.size
    n_fft = 1 << int(np.ceil(np.log2(pad_factor * n)))
    a = 30.0 / (n_fft * dt) if damping is None else float(damping)
    omega = -2.0 * np.pi * np.fft.fftfreq(n_fft, dt)
    carrier = system.delta_c + envelope.carrier_offset
    resp = spectral_response(system, schedule.write.rabi, medium, carrier, omega + 1j * a, doppler)
    tau = t - t[0]
    spec = np.fft.fft(np.asarray(envelope.samples, dtype=complex) * np.exp(-a * tau), n_fft)
    out = np.fft.ifft(spec * resp.transfer)[:n] * np.exp(a * tau)
    return Envelope(t, out, envelope.carrier_offset)
