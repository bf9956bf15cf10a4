"""Independent reference computations used by the tests.

Nothing here imports the closed forms under test: the propagator oracle
integrates the two-state amplitude equations with a general-purpose ODE
solver, and the transmission oracle integrates the stationary spectrum by
adaptive quadrature.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad, solve_ivp


def generator(gamma, level, rabi, phase):
    g = 0.5 * rabi
    return np.array([[-0.5j * gamma, g * np.exp(1j * phase)], [g * np.exp(-1j * phase), level]])


def ode_amplitudes(gamma, level, windows, t_prime, t, a0=(1.0, 0.0), project_n_at=None):
    """Amplitudes (a_n, a_m') at ``t`` from ``a0`` at ``t_prime``.

    ``windows`` is a list of (t_on, t_off, rabi, phase); outside them the
    coupling is zero. With ``project_n_at`` the excited amplitude is zeroed
    at that instant (used for the storage pathway only).
    """
    edges = sorted(
        {t_prime, t}
        | {e for w in windows for e in (w[0], w[1]) if t_prime < e < t}
        | ({project_n_at} if project_n_at is not None and t_prime < project_n_at < t else set())
    )
    a = np.array(a0, dtype=complex)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if project_n_at is not None and abs(lo - project_n_at) < 1e-15:
            a[0] = 0.0
        mid = 0.5 * (lo + hi)
        rabi, phase = 0.0, 0.0
        for w in windows:
            if w[0] <= mid < w[1]:
                rabi, phase = w[2], w[3]
        h = generator(gamma, level, rabi, phase)
        sol = solve_ivp(
            lambda _s, y: -1j * (h @ y),
            (lo, hi),
            a,
            method="DOP853",
            rtol=1e-12,
            atol=1e-14,
        )
        a = sol.y[:, -1]
    return a


def gaussian_transmission(d0, spectral_width, transfer):
    """Energy transmission of the unit Gaussian probe through exp(i Phi).

    ``transfer(Omega)`` returns Phi; |alpha_Omega|^2 = sqrt(2 pi)*2/dw *
    exp(-2 Omega^2/dw^2) and the energy is (1/2pi) int |alpha_Omega|^2 dOmega.
    """
    dw = spectral_width

    def integrand(w):
        a2 = math.sqrt(2.0 * math.pi) * 2.0 / dw * math.exp(-2.0 * w * w / dw / dw)
        return a2 * math.exp(-2.0 * complex(transfer(w)).imag) / (2.0 * math.pi)

    val, _ = quad(integrand, -8 * dw, 8 * dw, epsabs=0, epsrel=1e-12, limit=200)
    return val


def poly_roots(gamma, level, rabi):
    """Roots of (x + i gamma/2)(x - level) - rabi^2/4 via numpy.roots."""
    c2 = 1.0
    c1 = 0.5j * gamma - level
    c0 = -0.5j * gamma * level - 0.25 * rabi * rabi
    return np.roots([c2, c1, c0])
