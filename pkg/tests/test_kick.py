import math

import numpy as np
import pytest
from scipy.special import eval_legendre

from conftest import hydrogen_R
from rydberg_hcp.basis import build_basis
from rydberg_hcp.constants import Q_NOMINAL
from rydberg_hcp.kick import KickSpec, apply_kick, kick_matrix, p_state_kick_row
from rydberg_hcp.register import RegisterSpec, WavePacket, load_register

# Gauss-Legendre panels in r and a single rule in cos(theta).
_XR, _WR = np.polynomial.legendre.leggauss(200)
_EDGES = np.linspace(0.0, 120.0, 25)
_R = np.concatenate([(b - a) / 2 * _XR + (a + b) / 2 for a, b in zip(_EDGES[:-1], _EDGES[1:])])
_W = np.concatenate([(b - a) / 2 * _WR for a, b in zip(_EDGES[:-1], _EDGES[1:])])
_MU, _WMU = np.polynomial.legendre.leggauss(120)


def _ylm0(l, mu):
    return math.sqrt((2 * l + 1) / (4 * math.pi)) * eval_legendre(l, mu)


def quadrature_element(nf, lf, ni, li, Q):
    """<nf lf 0| exp(iQ r cos theta) |ni li 0> by direct 2D quadrature over analytic hydrogen states."""
    phase = np.exp(1j * Q * np.outer(_R, _MU)) * (_ylm0(lf, _MU) * _ylm0(li, _MU))[None, :]
    radial = hydrogen_R(nf, lf, _R) * hydrogen_R(ni, li, _R) * _R**2
    return 2 * math.pi * np.sum(_W[:, None] * _WMU[None, :] * radial[:, None] * phase)


@pytest.mark.parametrize("Q", [0.1, 0.5])
def test_matches_2d_quadrature(hydrogen3, Q):
    m = kick_matrix(hydrogen3, Q).elements
    for i, sf in enumerate(hydrogen3.states):
        for j, si in enumerate(hydrogen3.states):
            ref = quadrature_element(sf.n, sf.l, si.n, si.l, Q)
            assert abs(m[i, j] - ref) <= 1e-6 * abs(ref), (sf.label, si.label)


def test_zero_q_is_identity(basis187):
    k = kick_matrix(basis187, 0.0)
    assert np.array_equal(k.elements, np.eye(len(basis187)))
    assert k.unitarity_defect() == 0.0


def test_negative_q_is_complex_conjugate(hydrogen3):
    # Real radial and angular functions: <b'|exp(-iQz)|b> = conj(<b'|exp(iQz)|b>).
    plus = kick_matrix(hydrogen3, 0.3).elements
    minus = kick_matrix(hydrogen3, -0.3).elements
    np.testing.assert_allclose(minus, plus.conj(), atol=1e-14)


def test_small_q_is_dipole_limit(hydrogen3):
    # exp(iQz) = 1 + iQz + O(Q^2); <1s|z|2p0> = 128 sqrt(2) / 243.
    Q = 1e-4
    m = kick_matrix(hydrogen3, Q)
    val = m.element((2, 1), (1, 0))
    assert abs(val.imag / Q - 2**7.5 / 3**5) < 1e-4
    assert abs(val.real) < 1e-7


def test_symmetric_under_transpose(kick187):
    # <a|exp(iQz)|b> = <b|exp(iQz)|a> for real basis functions.
    np.testing.assert_allclose(kick187.elements, kick187.elements.T, atol=1e-14)


def test_p_state_row_matches_columns(basis187, kick187):
    for n in range(24, 30):
        row = p_state_kick_row(basis187, n, Q_NOMINAL)
        np.testing.assert_allclose(row, kick187.elements[:, basis187.index(n, 1)], atol=1e-12, rtol=0)


def test_p_state_row_s_term_sign(hydrogen3):
    # l' = 0 amplitude is +i sqrt(3) <R_s| j1 |R_p> (the j1 kernel with coefficient -(l'+1) = -1, phase i^-1).
    Q = 0.5
    row = p_state_kick_row(hydrogen3, 2, Q)
    ref = quadrature_element(1, 0, 2, 1, Q)
    assert abs(row[hydrogen3.index(1, 0)] - ref) < 1e-6 * abs(ref)
    assert ref.imag > 0


def test_p_state_row_negative_q(hydrogen3):
    row = p_state_kick_row(hydrogen3, 3, -0.2)
    col = kick_matrix(hydrogen3, -0.2).elements[:, hydrogen3.index(3, 1)]
    np.testing.assert_allclose(row, col, atol=1e-13)


def test_phase_structure(basis187, kick187):
    ls = basis187.l_values
    m = kick187.elements
    for lf in range(0, 6):
        for li in range(0, 6):
            block = m[np.ix_(ls == lf, ls == li)]
            # i^(l'-l) phase: even difference real, odd imaginary.
            if (lf - li) % 2 == 0:
                assert np.max(np.abs(block.imag)) < 1e-10
            else:
                assert np.max(np.abs(block.real)) < 1e-10


def test_unitarity_defect_below_bound(kick187):
    assert kick187.unitarity_defect() < 0.1


def test_unitarity_defect_decreases_with_l_max():
    defects = [kick_matrix(build_basis(l_max=lm), Q_NOMINAL).unitarity_defect() for lm in range(8, 17)]
    assert all(a > b for a, b in zip(defects, defects[1:])), defects


def test_register_columns_do_not_leak_more_with_larger_l_max():
    spec = RegisterSpec.gaussian()
    out = []
    for lm in (8, 12, 16):
        b = build_basis(l_max=lm)
        m = kick_matrix(b, Q_NOMINAL).elements
        idx = spec.indices(b)
        d = m[:, idx].conj().T @ m[:, idx] - np.eye(len(idx))
        out.append(float(np.max(np.abs(d))))
    assert out[0] >= out[1] >= out[2]
    assert out[2] < 0.11


def test_register_norm_retained(basis187, kick187):
    # The kick restricted to the basis is a compression of a unitary, so it cannot add norm.
    packet = apply_kick(load_register(RegisterSpec.gaussian(), basis187), kick187)
    assert 0.9 < packet.norm() <= 1.0 + 1e-9


def test_apply_kick_rejects_foreign_basis(hydrogen3, kick187):
    with pytest.raises(ValueError):
        apply_kick(WavePacket.single(hydrogen3, 2, 1), kick187)


def test_kick_spec_validation():
    with pytest.raises(ValueError):
        KickSpec(float("nan"))
    assert KickSpec(1).Q == 1.0


def test_csv_dump(tmp_path, hydrogen3):
    k = kick_matrix(hydrogen3, 0.5)
    path = k.write_csv(tmp_path / "k.csv", ["test"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# test"
    assert lines[1] == "n_final,l_final,n,l,re,im"
    assert len(lines) == 2 + len(hydrogen3) ** 2


def test_small_q_linearization(basis187, dipole187):
    Q = 1e-5
    deriv = (kick_matrix(basis187, Q).elements - kick_matrix(basis187, -Q).elements) / (2 * Q)
    z = dipole187.elements
    err = np.max(np.abs(deriv - 1j * z))
    assert err <= 1e-4 * np.max(np.abs(z))


def test_parity_phase_rule(basis187, kick187):
    m = kick187.elements
    ls = basis187.l_values
    odd = (ls[:, None] - ls[None, :]) % 2 == 1
    mag = np.abs(m)
    nz = mag > 1e-12 * mag.max()
    # Even change: real (phase 0 or pi); odd change: imaginary (phase +-pi/2).
    assert np.max((np.abs(m.imag) / np.where(nz, mag, 1))[nz & ~odd]) < 1e-10
    assert np.max((np.abs(m.real) / np.where(nz, mag, 1))[nz & odd]) < 1e-10


def test_conjugation_symmetry_187(basis187, kick187):
    minus = kick_matrix(basis187, -Q_NOMINAL).elements
    assert np.max(np.abs(minus - kick187.elements.conj())) < 1e-12


def test_26p_column_against_grid_quadrature(basis187, kick187):
    # Brute force over (r, cos theta) with the basis' own radial functions, no Bessel functions.
    from scipy.special import eval_legendre

    mu, wmu = np.polynomial.legendre.leggauss(48)
    r = basis187.grid.points
    col = basis187.index(26, 1)
    ls = basis187.l_values
    y1 = math.sqrt(3 / (4 * math.pi)) * mu
    phase = np.exp(1j * Q_NOMINAL * np.outer(r, mu))
    ref = np.empty(len(basis187), dtype=complex)
    for lf in np.unique(ls):
        ang = 2 * math.pi * (phase * (wmu * y1 * math.sqrt((2 * lf + 1) / (4 * math.pi)) * eval_legendre(lf, mu))).sum(axis=1)
        rows = np.flatnonzero(ls == lf)
        ref[rows] = basis187.u_matrix[:, rows].T @ (basis187.grid.weights * ang * basis187.u_matrix[:, col])
    np.testing.assert_allclose(kick187.elements[:, col], ref, atol=1e-12)
    survival = abs(ref[col]) ** 2
    assert 0.1 < survival < 1.0
