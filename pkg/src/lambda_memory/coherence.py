"""Ground-state spin coherence accumulated during write-in and readout.

The coherence is a diagnostic: it is integrated from the optical polarization
that the field solution already determines, and never fed back into the
Maxwell march. It is kept in the frame where the ground-state precession is
removed, so with the control field off and no ground decay it is constant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from .model import ControlSchedule, LambdaSystem, MediumSpec
from .solver import ComplexField2D, SolverDomainError
from .susceptibility import (
    DressedResponse,
    KernelTable,
    ReadoutResponse,
    apply_kernel,
    apply_kernel_block,
)


@dataclass
class CoherenceField:
    t: np.ndarray
    values: np.ndarray
    polarization: np.ndarray
    frame_phase: dict = field(default_factory=dict)
    # write-stage polarization still decaying after the read onset; an
    # independent channel, so its energy adds to that of ``polarization``
    residual: Optional[np.ndarray] = None

    @property
    def zeta(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.shape[0])

    def snapshot(self, t: float) -> np.ndarray:
        """Spin-wave profile sigma(zeta) at the grid time nearest ``t``."""
        i = int(np.argmin(np.abs(self.t - t)))
        return self.values[:, i].copy()


def _polarizations(kernel, rows, start=0):
    if isinstance(kernel, KernelTable):
        return np.array([apply_kernel(kernel, r, start) for r in rows])
    return np.array([kernel.polarization(r, start=start) for r in rows])


def _accumulate(t, pol, lam_mid, carrier_offset, gamma_g, sigma0=None, start=0):
    """sigma(t) = sigma(t_start) + int Lambda(t'') exp(-i dDelta t'') P(t'') dt''.

    Lambda is taken per interval (control value at the interval midpoint) so
    a switching instant on a grid point is integrated without smearing.
    """
    f = np.exp(-1j * carrier_offset * t)[None, :] * pol
    if gamma_g:
        f = f * np.exp(gamma_g * (t - t[start]))[None, :]
    dt = np.diff(t)
    inc = lam_mid[None, :] * 0.5 * (f[:, :-1] + f[:, 1:]) * dt[None, :]
    inc[:, :start] = 0.0
    out = np.zeros_like(pol)
    out[:, 1:] = np.cumsum(inc, axis=1)
    if sigma0 is not None:
        out[:, start:] += sigma0[:, None]
    if gamma_g:
        out[:, start:] *= np.exp(-gamma_g * (t[start:] - t[start]))[None, :]
    return out


def _lambda_mid(t, schedule: ControlSchedule, system: LambdaSystem):
    mid = 0.5 * (t[:-1] + t[1:])
    return 0.5 * system.dipole_ratio * np.conj(schedule.rabi_at(mid))


def integrate_coherence_write(
    field2d: ComplexField2D,
    kernel: Union[KernelTable, DressedResponse],
    system: LambdaSystem,
    schedule: ControlSchedule,
    carrier_offset: float = 0.0,
) -> CoherenceField:
    """Spin coherence driven by the write-stage polarization at every slab."""
    t = field2d.t
    if isinstance(kernel, KernelTable) and kernel.t.size != t.size:
        raise SolverDomainError("kernel grid does not match the field grid")
    if isinstance(kernel, DressedResponse) and kernel.grid.n_t != t.size:
        raise SolverDomainError("kernel grid does not match the field grid")
    write_only = ControlSchedule((schedule.write,))
    pol = _polarizations(kernel, field2d.values)
    lam = _lambda_mid(t, write_only, system)
    sigma = _accumulate(t, pol, lam, carrier_offset, system.gamma_g)
    frame = {"carrier_offset": carrier_offset, "ground_splitting": system.ground_splitting, "k_mismatch_z": 0.0}
    return CoherenceField(t, sigma, pol, frame)


def integrate_coherence_read(
    write_coherence: CoherenceField,
    field_in: ComplexField2D,
    field_out: ComplexField2D,
    kernel_read: Union[KernelTable, ReadoutResponse],
    kernel_out: Optional[KernelTable],
    system: LambdaSystem,
    schedule: ControlSchedule,
    carrier_offset: float = 0.0,
) -> CoherenceField:
    """Continue the coherence through the read window.

    Up to the read onset the write-stage values are kept; afterwards both
    recovery sources (stored field through the recovery kernel, recovered
    field through the read-stage kernel) drive it.
    """
    t = field_in.t
    read = schedule.read
    if read is None:
        raise SolverDomainError("readout coherence needs a two-window schedule")
    i2 = int(np.argmin(np.abs(t - read.t_on)))
    if isinstance(kernel_read, ReadoutResponse):
        pol = np.array(
            [kernel_read.source(a) + kernel_read.response(b) for a, b in zip(field_in.values, field_out.values)]
        )
    else:
        pol = np.array(
            [
                apply_kernel_block(kernel_read, a) + apply_kernel(kernel_out, b, kernel_out.support[0])
                for a, b in zip(field_in.values, field_out.values)
            ]
        )
    pol[:, :i2] = 0.0
    lam = _lambda_mid(t, ControlSchedule((read,)), system)
    sigma = _accumulate(t, pol, lam, carrier_offset, system.gamma_g, write_coherence.values[:, i2], start=i2)
    values = write_coherence.values.copy()
    values[:, i2:] = sigma[:, i2:]
    total_pol = write_coherence.polarization.copy()
    total_pol[:, i2:] = pol[:, i2:]
    residual = np.zeros_like(total_pol)
    residual[:, i2:] = write_coherence.polarization[:, i2:]
    return CoherenceField(t, values, total_pol, dict(write_coherence.frame_phase), residual)


def spin_wave_energy(coherence: CoherenceField, system: LambdaSystem, medium: MediumSpec) -> np.ndarray:
    """Excitation stored in the ground coherence, in units of the probe energy.

    Time series of (d0/gamma) * int w(zeta) |sigma|^2 dzeta / dipole_ratio^2.
    """
    w = _face_weights(medium)
    dens = np.abs(coherence.values) ** 2 * w[:, None]
    return medium.optical_depth / system.gamma * trapezoid(dens, coherence.zeta, axis=0) / system.dipole_ratio**2


def scattered_energy(coherence: CoherenceField, system: LambdaSystem, medium: MediumSpec) -> np.ndarray:
    """Cumulative energy lost to spontaneous scattering up to each time."""
    w = _face_weights(medium)
    rate = medium.optical_depth * _pol_sq(coherence) * w[:, None]
    rate = trapezoid(rate, coherence.zeta, axis=0)
    out = np.zeros_like(rate)
    out[1:] = np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(coherence.t))
    return out


def excited_energy(coherence: CoherenceField, system: LambdaSystem, medium: MediumSpec) -> np.ndarray:
    """Instantaneous energy held in the optical polarization."""
    w = _face_weights(medium)
    dens = _pol_sq(coherence) * w[:, None]
    return medium.optical_depth / system.gamma * trapezoid(dens, coherence.zeta, axis=0)


def _pol_sq(coherence: CoherenceField) -> np.ndarray:
    sq = np.abs(coherence.polarization) ** 2
    if coherence.residual is not None:
        sq = sq + np.abs(coherence.residual) ** 2
    return sq


def _face_weights(medium: MediumSpec) -> np.ndarray:
    w = medium.weights()
    faces = np.empty(w.size + 1)
    faces[0], faces[-1] = w[0], w[-1]
    faces[1:-1] = 0.5 * (w[:-1] + w[1:])
    return faces
