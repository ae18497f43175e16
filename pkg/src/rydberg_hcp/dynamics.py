"""Finite half-cycle pulse and split-operator propagation in a bound basis.

The pulse shape, with s = (t - t_start) / tau, is

    E(t) = 29.56 E_peak [17.75 s^3 exp(-8.87 s) - 0.412 s^5 exp(-4.73 s)],   s >= 0,

and zero before onset. The Hamiltonian in the basis is H(t) = H0 + sign E(t) Z
with H0 diagonal and Z the dipole matrix ``<b'|z|b>``. The step

    psi <- exp(-i H0 dt/2) W exp(-i sign E(t_mid) d dt) W^T exp(-i H0 dt/2) psi

uses the eigendecomposition Z = W diag(d) W^T, computed once per basis.
``INTERACTION_SIGN`` is chosen so that an ultrashort pulse of area Q acts
as exp(+iQz), the kick convention of :mod:`rydberg_hcp.kick`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

from .basis import BasisSet
from .constants import AU_TIME_FS, DT_NOMINAL_FS, fs_to_au
from .output import write_csv
from .register import WavePacket, free_evolve
from .special import dipole_angular

A1, B1, C1 = 17.75, 8.87, 3
A2, B2, C2 = 0.412, 4.73, 5
PREFACTOR = 29.56

#: int_0^inf E dt = IMPULSE_COEFF * E_peak * tau
IMPULSE_COEFF = PREFACTOR * (A1 * math.factorial(C1) / B1 ** (C1 + 1) - A2 * math.factorial(C2) / B2 ** (C2 + 1))
#: Field-weighted mean time after onset, in units of tau.
CENTROID_COEFF = (
    PREFACTOR * (A1 * math.factorial(C1 + 1) / B1 ** (C1 + 2) - A2 * math.factorial(C2 + 1) / B2 ** (C2 + 2))
) / IMPULSE_COEFF

INTERACTION_SIGN = -1.0
DEFAULT_WINDOW_TAUS = 20.0
TAIL_TOLERANCE = 1e-6


def shape(s):
    """Dimensionless pulse shape E / E_peak at s = (t - t_start) / tau."""
    s = np.asarray(s, dtype=float)
    sp = np.clip(s, 0.0, None)
    val = PREFACTOR * (A1 * sp**C1 * np.exp(-B1 * sp) - A2 * sp**C2 * np.exp(-B2 * sp))
    return np.where(s < 0, 0.0, val)


def _shape_derivative(s: float) -> float:
    return PREFACTOR * (
        A1 * (C1 * s ** (C1 - 1) - B1 * s**C1) * math.exp(-B1 * s)
        - A2 * (C2 * s ** (C2 - 1) - B2 * s**C2) * math.exp(-B2 * s)
    )


@lru_cache(maxsize=None)
def shape_peak() -> tuple[float, float]:
    """(s*, E(s*)/E_peak) of the main positive lobe."""
    s_star = optimize.brentq(_shape_derivative, 0.05, 1.0, xtol=1e-15)
    return s_star, float(shape(s_star))


@lru_cache(maxsize=None)
def fwhm_ratio() -> float:
    """FWHM of the main lobe divided by tau (a property of the shape alone)."""
    s_star, peak = shape_peak()
    half = lambda s: float(shape(s)) - 0.5 * peak
    left = optimize.brentq(half, 1e-6, s_star, xtol=1e-15)
    right = optimize.brentq(half, s_star, 5.0, xtol=1e-15)
    return right - left


def _tail_fraction(window_taus: float) -> float:
    """|int_window^inf shape ds| relative to the full pulse area."""
    x = window_taus
    t1 = A1 * math.factorial(C1) / B1 ** (C1 + 1) * special.gammaincc(C1 + 1, B1 * x)
    t2 = A2 * math.factorial(C2) / B2 ** (C2 + 1) * special.gammaincc(C2 + 1, B2 * x)
    return abs(PREFACTOR * (t1 - t2)) / IMPULSE_COEFF


@dataclass(frozen=True)
class HcpPulse:
    """Half-cycle pulse; all quantities in atomic units."""

    e_peak: float
    tau: float
    t_start: float = 0.0
    window: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.e_peak) and math.isfinite(self.t_start)):
            raise ValueError("pulse parameters must be finite")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.window is None:
            object.__setattr__(self, "window", DEFAULT_WINDOW_TAUS * self.tau)
        if not self.window > 0:
            raise ValueError("window must be positive")

    @classmethod
    def from_targets(
        cls,
        Q: float | None = None,
        fwhm: float | None = None,
        e_peak: float | None = None,
        tau: float | None = None,
        t_start: float = 0.0,
        window_taus: float = DEFAULT_WINDOW_TAUS,
    ) -> "HcpPulse":
        """Pulse from exactly one of (e_peak, Q) and one of (tau, fwhm)."""
        if (Q is None) == (e_peak is None):
            raise ValueError("give exactly one of e_peak and Q")
        if (fwhm is None) == (tau is None):
            raise ValueError("give exactly one of tau and fwhm")
        if tau is None:
            tau = fwhm / fwhm_ratio()
        if e_peak is None:
            e_peak = Q / (IMPULSE_COEFF * tau)
        return cls(e_peak, tau, t_start, window_taus * tau)

    @property
    def t_end(self) -> float:
        return self.t_start + self.window

    @property
    def centroid(self) -> float:
        """Field-weighted mean time, where the equivalent sudden kick sits."""
        return self.t_start + CENTROID_COEFF * self.tau

    def centered_at(self, t: float) -> "HcpPulse":
        """Same pulse shifted so that its centroid is at ``t``."""
        return HcpPulse(self.e_peak, self.tau, t - CENTROID_COEFF * self.tau, self.window)

    def scaled(self, factor: float) -> "HcpPulse":
        """Compress by ``factor`` in time at fixed area (tau / factor, e_peak * factor)."""
        return HcpPulse(self.e_peak * factor, self.tau / factor, self.t_start, self.window / factor)


def hcp_field(pulse: HcpPulse, t):
    """Field in a.u. at time(s) ``t``."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("time must be finite")
    val = pulse.e_peak * shape((t - pulse.t_start) / pulse.tau)
    return float(val) if val.ndim == 0 else val


def pulse_impulse(pulse: HcpPulse) -> float:
    """Area under the field over the pulse window, by adaptive quadrature."""
    if pulse.e_peak == 0.0:
        return 0.0
    window_taus = pulse.window / pulse.tau
    if _tail_fraction(window_taus) > TAIL_TOLERANCE:
        raise ValueError(
            f"window of {window_taus:g} tau truncates more than {TAIL_TOLERANCE:g} of the pulse area"
        )
    val, _ = integrate.quad(
        lambda s: float(shape(s)), 0.0, window_taus, points=[0.2, 0.5, 1.0, 2.0, 5.0], epsabs=0.0, epsrel=1e-13, limit=200
    )
    return pulse.e_peak * pulse.tau * val


def pulse_fwhm(pulse: HcpPulse) -> float:
    return fwhm_ratio() * pulse.tau


# ---------------------------------------------------------------------------
# Dipole operator and propagation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DipoleMatrix:
    basis: BasisSet
    elements: np.ndarray

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """(d, W) with Z = W diag(d) W^T."""
        d, w = np.linalg.eigh(self.elements)
        d.setflags(write=False)
        w.setflags(write=False)
        return d, w


def dipole_matrix(basis: BasisSet) -> DipoleMatrix:
    """<b'| z |b> = <R_b'| r |R_b> <l'0| cos theta |l0>."""
    ls = basis.l_values
    radial = basis.integral_matrix(basis.grid.points)
    ang = np.array([[dipole_angular(int(a), int(b)) for b in ls] for a in ls])
    z = radial * ang
    z = 0.5 * (z + z.T)
    z.setflags(write=False)
    return DipoleMatrix(basis, z)


@dataclass(frozen=True, eq=False)
class Propagator:
    dipole: DipoleMatrix
    dt: float = fs_to_au(DT_NOMINAL_FS)
    sign: float = INTERACTION_SIGN

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")

    @property
    def basis(self) -> BasisSet:
        return self.dipole.basis

    @classmethod
    def for_basis(cls, basis: BasisSet, dt: float = fs_to_au(DT_NOMINAL_FS)) -> "Propagator":
        return cls(dipole_matrix(basis), dt)

    def step(self, amps: np.ndarray, field_value: float, h: float) -> np.ndarray:
        """One symmetric split step of signed length ``h`` with field sampled at its midpoint.

        ``amps`` is a state vector or a matrix whose columns are states.
        """
        col = (slice(None),) + (None,) * (amps.ndim - 1)
        half = np.exp(-0.5j * h * self.basis.energies)[col]
        amps = half * amps
        if field_value != 0.0:
            d, w = self.dipole.eigh
            amps = w @ (np.exp(-1j * self.sign * field_value * h * d)[col] * (w.T @ amps))
        return half * amps


def _step_sizes(span: float, dt: float) -> list[float]:
    n_full = int(math.floor(abs(span) / dt * (1 + 1e-12)))
    rest = abs(span) - n_full * dt
    steps = [dt] * n_full
    if rest > 1e-9 * dt:
        steps.append(rest)
    return steps


def propagate(
    packet: WavePacket,
    pulse: HcpPulse,
    prop: Propagator,
    t0: float,
    t1: float,
    observer: Callable[[float, float, np.ndarray], None] | None = None,
) -> WavePacket:
    """Integrate from ``t0`` to ``t1`` (backward if t1 < t0).

    Steps of ``prop.dt`` start at ``t0``; a shorter final step absorbs any
    remainder. ``observer(t, field, amplitudes)`` is called after each step.
    """
    packet.check_basis(prop.basis)
    span = t1 - t0
    if not math.isfinite(span):
        raise ValueError("propagation bounds must be finite")
    direction = 1.0 if span >= 0 else -1.0
    amps = packet.amplitudes
    t = t0
    for h in _step_sizes(span, prop.dt):
        h = direction * h
        e = hcp_field(pulse, t + 0.5 * h)
        amps = prop.step(amps, e, h)
        t += h
        if observer is not None:
            observer(t, e, amps)
    return packet.with_amplitudes(amps, packet.time_stamp + span)


def propagate_through(packet: WavePacket, pulse: HcpPulse, prop: Propagator, observer=None) -> WavePacket:
    """Free evolution to the pulse onset, then split-operator steps across the window.

    ``packet.time_stamp`` is taken as the current time.
    """
    if pulse.t_start > packet.time_stamp:
        packet = free_evolve(packet, pulse.t_start - packet.time_stamp)
    start = max(packet.time_stamp, pulse.t_start)
    return propagate(packet, pulse, prop, start, pulse.t_end, observer)


def evolution_operator(pulse: HcpPulse, prop: Propagator) -> np.ndarray:
    """Split-operator evolution matrix from pulse onset to the end of its window.

    Column j is the propagated basis state j, with the same step sequence as
    :func:`propagate`. H0 is time independent, so the matrix does not depend
    on ``pulse.t_start``.
    """
    amps = np.eye(len(prop.basis), dtype=complex)
    t = pulse.t_start
    for h in _step_sizes(pulse.window, prop.dt):
        amps = prop.step(amps, hcp_field(pulse, t + 0.5 * h), h)
        t += h
    return amps


class TrajectoryRecorder:
    """Observer collecting (t, field, register populations, norm) per step."""

    def __init__(self, indices):
        self.indices = np.asarray(indices)
        self.rows: list[tuple] = []

    def __call__(self, t, field_value, amps):
        p = np.abs(amps) ** 2
        self.rows.append((t, field_value, p[self.indices].copy(), float(np.sqrt(p.sum()))))

    def write_csv(self, path, labels, header_lines=()):
        columns = ["t_fs", "field_au", *[f"P_{x}" for x in labels], "norm"]
        rows = ((t * AU_TIME_FS, e, *map(float, p), nrm) for t, e, p, nrm in self.rows)
        return write_csv(path, header_lines, columns, rows)
