"""Wave packets over a basis and the phase-encoded data register."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .basis import BasisError, BasisSet, state_label

#: Amplitude weights of the Gaussian packet over 24p ... 29p, the default register.
GAUSSIAN_WEIGHTS = (0.5, 1.0, 1.2, 1.0, 0.7, 0.5)
DEFAULT_REGISTER_STATES = tuple((n, 1) for n in range(24, 30))


class RegisterError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WavePacket:
    basis: BasisSet
    amplitudes: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise RegisterError(f"need {len(self.basis)} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def single(cls, basis: BasisSet, n: int, l: int) -> "WavePacket":
        amps = np.zeros(len(basis), dtype=complex)
        amps[basis.index(n, l)] = 1.0
        return cls(basis, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, n: int, l: int) -> complex:
        return complex(self.amplitudes[self.basis.index(n, l)])

    def with_amplitudes(self, amplitudes: np.ndarray, time_stamp: float | None = None) -> "WavePacket":
        return replace(self, amplitudes=amplitudes, time_stamp=self.time_stamp if time_stamp is None else time_stamp)

    def check_basis(self, basis: BasisSet) -> None:
        if basis is not self.basis:
            raise RegisterError("wave packet and operator are defined on different bases")


@dataclass(frozen=True)
class RegisterSpec:
    """N-state register: ordered (n, l) labels, positive real weights, marked subset."""

    register_states: tuple[tuple[int, int], ...] = DEFAULT_REGISTER_STATES
    base_amplitudes: tuple[float, ...] = GAUSSIAN_WEIGHTS
    marked: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        states = tuple((int(n), int(l)) for n, l in self.register_states)
        weights = tuple(float(w) for w in self.base_amplitudes)
        marked = frozenset((int(n), int(l)) for n, l in self.marked)
        if len(set(states)) != len(states):
            raise RegisterError("register states must be distinct")
        if len(weights) != len(states):
            raise RegisterError(f"{len(states)} register states but {len(weights)} weights")
        if any(not (w > 0 and math.isfinite(w)) for w in weights):
            raise RegisterError("register weights must be positive and finite")
        if not marked <= set(states):
            extra = sorted(marked - set(states))
            raise RegisterError(f"marked states {[state_label(*k) for k in extra]} are not register states")
        object.__setattr__(self, "register_states", states)
        object.__setattr__(self, "base_amplitudes", weights)
        object.__setattr__(self, "marked", marked)

    @classmethod
    def uniform(cls, states: Sequence[tuple[int, int]] = DEFAULT_REGISTER_STATES, marked: Iterable = ()) -> "RegisterSpec":
        return cls(tuple(states), (1.0,) * len(states), frozenset(marked))

    @classmethod
    def gaussian(cls, marked: Iterable = ()) -> "RegisterSpec":
        return cls(DEFAULT_REGISTER_STATES, GAUSSIAN_WEIGHTS, frozenset(marked))

    def with_marked(self, marked: Iterable) -> "RegisterSpec":
        return replace(self, marked=frozenset(marked))

    @property
    def labels(self) -> list[str]:
        return [state_label(n, l) for n, l in self.register_states]

    def __len__(self):
        return len(self.register_states)

    def indices(self, basis: BasisSet) -> np.ndarray:
        try:
            return np.array([basis.index(n, l) for n, l in self.register_states])
        except BasisError as exc:
            raise RegisterError(f"unknown register state: {exc}") from None


def load_register(spec: RegisterSpec, basis: BasisSet) -> WavePacket:
    """Place the register in ``basis``: marked entries sign-reversed, unit norm, t = 0."""
    idx = spec.indices(basis)
    amps = np.zeros(len(basis), dtype=complex)
    for i, key, w in zip(idx, spec.register_states, spec.base_amplitudes):
        amps[i] = -w if key in spec.marked else w
    amps /= np.linalg.norm(amps)
    return WavePacket(basis, amps, 0.0)


def phase_flip(packet: WavePacket, state: tuple[int, int]) -> WavePacket:
    try:
        i = packet.basis.index(*state)
    except BasisError as exc:
        raise RegisterError(str(exc)) from None
    amps = packet.amplitudes.copy()
    amps[i] = -amps[i]
    return packet.with_amplitudes(amps)


def free_evolve(packet: WavePacket, t: float) -> WavePacket:
    """Field-free evolution a_b -> a_b exp(-i E_b t) for a duration ``t`` (a.u.)."""
    if not math.isfinite(t):
        raise RegisterError("evolution time must be finite")
    phases = np.exp(-1j * packet.basis.energies * t)
    return packet.with_amplitudes(packet.amplitudes * phases, packet.time_stamp + t)


def populations(packet: WavePacket) -> dict[tuple[int, int], float]:
    probs = np.abs(packet.amplitudes) ** 2
    return {s.key: float(p) for s, p in zip(packet.basis.states, probs)}


def population_vector(packet: WavePacket) -> np.ndarray:
    return np.abs(packet.amplitudes) ** 2


def register_populations(packet: WavePacket, spec: RegisterSpec) -> np.ndarray:
    return population_vector(packet)[spec.indices(packet.basis)]


@dataclass(frozen=True)
class ReadoutBin:
    lower: float
    upper: float
    members: tuple[tuple[int, int], ...]
    probability: float
    label: str


def readout_binned(
    packet: WavePacket, width: float | None = 0.5, edges: Sequence[float] | None = None
) -> list[ReadoutBin]:
    """Group states by effective quantum number, emulating finite SSFI resolution.

    Give either a bin ``width`` (bins of that size aligned to multiples of
    the width) or explicit increasing ``edges`` that must cover every
    state's n_star. Each bin is labeled by its most populated member.
    """
    basis = packet.basis
    n_star = basis.n_star
    probs = population_vector(packet)
    if edges is not None:
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise RegisterError("bin edges must be strictly increasing (overlapping bins are not allowed)")
        if n_star.min() < edges[0] or n_star.max() >= edges[-1]:
            raise RegisterError("bin edges do not cover every basis state")
    else:
        if width is None or not width > 0:
            raise RegisterError("bin width must be positive")
        lo = math.floor(n_star.min() / width)
        hi = math.floor(n_star.max() / width) + 1
        edges = np.arange(lo, hi + 1) * width
    which = np.searchsorted(edges, n_star, side="right") - 1
    bins = []
    for k in range(len(edges) - 1):
        members = np.flatnonzero(which == k)
        if members.size == 0:
            continue
        p = probs[members]
        top = members[np.argmax(p)]
        bins.append(
            ReadoutBin(
                float(edges[k]),
                float(edges[k + 1]),
                tuple(basis.states[i].key for i in members),
                float(p.sum()),
                basis.states[top].label,
            )
        )
    return bins
