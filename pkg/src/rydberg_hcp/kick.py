"""Impulsive half-cycle-pulse kick exp(iQz) in a Rydberg basis.

The plane wave is expanded in Legendre polynomials,

    exp(i Q r cos(theta)) = sum_lam i**lam (2 lam + 1) j_lam(Q r) P_lam(cos(theta)),

so every matrix element is a finite sum over lam of an angular weight times
a radial integral of j_lam(Q r). The sum stops at lam = l + l' by the
triangle rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import BasisSet
from .output import write_csv
from .register import WavePacket
from .special import angular_weight, spherical_bessel_all


@dataclass(frozen=True)
class KickSpec:
    """Momentum transfer Q (hbar / bohr) along +z. Negative Q reverses the field."""

    Q: float

    def __post_init__(self):
        if not math.isfinite(self.Q):
            raise ValueError(f"Q must be finite, got {self.Q}")
        object.__setattr__(self, "Q", float(self.Q))


@dataclass(frozen=True, eq=False)
class KickMatrix:
    q: KickSpec
    basis: BasisSet
    elements: np.ndarray

    def unitarity_defect(self) -> float:
        """max |M^dagger M - I|; nonzero only through basis truncation."""
        m = self.elements
        return float(np.max(np.abs(m.conj().T @ m - np.eye(len(m)))))

    def element(self, final: tuple[int, int], initial: tuple[int, int]) -> complex:
        return complex(self.elements[self.basis.index(*final), self.basis.index(*initial)])

    def write_csv(self, path, header_lines=()):
        """Dump as rows (n', l', n, l, Re, Im) in canonical order."""
        states = self.basis.states
        rows = (
            (sf.n, sf.l, si.n, si.l, float(self.elements[i, j].real), float(self.elements[i, j].imag))
            for i, sf in enumerate(states)
            for j, si in enumerate(states)
        )
        return write_csv(path, header_lines, ["n_final", "l_final", "n", "l", "re", "im"], rows)


def _bessel_table(basis: BasisSet, Q: float, order_max: int) -> np.ndarray:
    """j_lam(|Q| r) on the basis grid for lam = 0 .. order_max."""
    return spherical_bessel_all(order_max, abs(Q) * basis.grid.points)


def kick_matrix(basis: BasisSet, q: KickSpec | float) -> KickMatrix:
    """<b'| exp(iQz) |b> for all basis pairs."""
    q = q if isinstance(q, KickSpec) else KickSpec(q)
    n = len(basis)
    if q.Q == 0.0:
        return KickMatrix(q, basis, np.eye(n, dtype=complex))
    ls = basis.l_values
    l_top = int(ls.max())
    jl = _bessel_table(basis, q.Q, 2 * l_top)
    # j_lam(-x) = (-1)^lam j_lam(x), so negative Q just conjugates i^lam.
    unit = 1j if q.Q > 0 else -1j
    out = np.zeros((n, n), dtype=complex)
    l_idx = {l: np.flatnonzero(ls == l) for l in np.unique(ls)}
    for lam in range(2 * l_top + 1):
        coupling = np.zeros((n, n))
        for lf, rows in l_idx.items():
            for li, cols in l_idx.items():
                g = angular_weight(int(lf), int(li), lam)
                if g != 0.0:
                    coupling[np.ix_(rows, cols)] = (2 * lam + 1) * g
        if not coupling.any():
            continue
        radial = basis.integral_matrix(jl[lam])
        out += unit**lam * coupling * radial
    return KickMatrix(q, basis, out)


def p_state_kick_row(basis: BasisSet, n: int, q: KickSpec | float) -> np.ndarray:
    """Closed-form amplitudes <n'l'0| exp(iQz) |n p 0> for every basis state.

    f = i^(l'-1) sqrt(3 / (2l'+1)) <R_n'l'| l' j_(l'-1)(Qr) - (l'+1) j_(l'+1)(Qr) |R_np>
    """
    q = q if isinstance(q, KickSpec) else KickSpec(q)
    col = basis.index(n, 1)
    out = np.zeros(len(basis), dtype=complex)
    if q.Q == 0.0:
        out[col] = 1.0
        return out
    ls = basis.l_values
    l_top = int(ls.max())
    jl = _bessel_table(basis, q.Q, l_top + 1)
    sign = 1.0 if q.Q > 0 else -1.0
    u_init = basis.u_matrix[:, col] * basis.grid.weights
    for lf in np.unique(ls):
        lf = int(lf)
        rows = np.flatnonzero(ls == lf)
        kernel = -(lf + 1) * jl[lf + 1]
        if lf >= 1:
            kernel = kernel + lf * jl[lf - 1]
        radial = basis.u_matrix[:, rows].T @ (kernel * u_init)
        # Both Bessel orders share the parity of l' - 1.
        phase = (1j) ** (lf - 1) * sign ** (lf - 1)
        out[rows] = phase * math.sqrt(3.0 / (2 * lf + 1)) * radial
    return out


def apply_kick(packet: WavePacket, kick: KickMatrix) -> WavePacket:
    """Sudden kick c' = M c; the time stamp is unchanged."""
    packet.check_basis(kick.basis)
    return packet.with_amplitudes(kick.elements @ packet.amplitudes)

