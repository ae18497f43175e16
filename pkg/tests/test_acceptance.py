"""Acceptance criteria 1-13, each at its stated tolerance.

Every test logs one PASS/FAIL line (shown in the terminal summary) before
asserting.
"""
import math
import time

import numpy as np

from conftest import hydrogen_R
from rydberg_hcp.analysis import (
    REFERENCE_ENTROPY,
    REFERENCE_TARGETS,
    carpet_scan,
    entropy,
    entropy_table,
    match_ridges,
    ridge_predictions,
)
from rydberg_hcp.basis import build_basis, radial_integral
from rydberg_hcp.constants import Q_NOMINAL, fs_to_au, ps_to_au
from rydberg_hcp.dynamics import (
    A1, A2, B1, B2, C1, C2, PREFACTOR,
    HcpPulse,
    hcp_field,
    Propagator,
    propagate,
    propagate_through,
    pulse_fwhm,
    pulse_impulse,
)
from rydberg_hcp.kick import apply_kick, kick_matrix, p_state_kick_row
from rydberg_hcp.register import RegisterSpec, free_evolve, load_register
from rydberg_hcp.special import dipole_angular
from test_kick import quadrature_element


def sampled_fwhm(pulse: HcpPulse) -> float:
    """Width above half maximum from a dense field sampling (independent of the library's root finding)."""
    t = pulse.t_start + np.linspace(0.0, 3.0 * pulse.tau, 300001)
    e = hcp_field(pulse, t)
    above = t[e >= 0.5 * e.max()]
    return float(above[-1] - above[0])


def test_criterion_01_basis_count(record):
    t0 = time.perf_counter()
    basis = build_basis()
    elapsed = time.perf_counter() - t0
    ok = len(basis) == 187 and elapsed < 30.0
    record("criterion 1: basis count", ok, f"states={len(basis)} build={elapsed:.2f}s")
    assert len(basis) == 187
    assert elapsed < 30.0


def test_criterion_02_hydrogen_oracles(record, hydrogen6):
    r = hydrogen6.grid.points
    worst = 0.0
    for s, wf in zip(hydrogen6.states, hydrogen6.wavefunctions):
        worst = max(worst, float(np.max(np.abs(wf.values - hydrogen_R(s.n, s.l, r)))))
    b = hydrogen6
    z = radial_integral(b.wavefunctions[b.index(1, 0)], b.wavefunctions[b.index(2, 1)], r) * dipole_angular(0, 1)
    exact = 2**7.5 / 3**5  # 128 sqrt(2) / 243
    ok = worst <= 1e-6 and abs(z - 0.74494) <= 1e-4
    record("criterion 2: hydrogen oracles", ok, f"max|R-R_exact|={worst:.2e} <1s|z|2p0>={z:.6f} (exact {exact:.6f})")
    assert worst <= 1e-6
    assert abs(z - 0.74494) <= 1e-4


def test_criterion_03_kick_quadrature(record, hydrogen3):
    t0 = time.perf_counter()
    worst = 0.0
    for Q in (0.1, 0.5):
        m = kick_matrix(hydrogen3, Q).elements
        for i, sf in enumerate(hydrogen3.states):
            for j, si in enumerate(hydrogen3.states):
                ref = quadrature_element(sf.n, sf.l, si.n, si.l, Q)
                worst = max(worst, abs(m[i, j] - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 60
    record("criterion 3: kick matrix vs 2D quadrature", ok, f"max rel err={worst:.2e} ({elapsed:.1f}s)")
    assert worst <= 1e-6
    assert elapsed < 60


def test_criterion_04_p_state_row(record, basis187, kick187):
    worst = 0.0
    for n in range(24, 30):
        row = p_state_kick_row(basis187, n, Q_NOMINAL)
        col = kick187.elements[:, basis187.index(n, 1)]
        worst = max(worst, float(np.max(np.abs(row - col))))
    record("criterion 4: p-state closed form vs kick columns", worst <= 1e-12, f"max abs diff={worst:.2e}")
    assert worst <= 1e-12


def test_criterion_05_phase_structure(record, basis187, kick187):
    ls = basis187.l_values
    m = kick187.elements
    p = np.flatnonzero(ls == 1)
    d = np.flatnonzero(ls == 2)
    pp_imag = float(np.max(np.abs(m[np.ix_(p, p)].imag)))
    pd_real = max(float(np.max(np.abs(m[np.ix_(d, p)].real))), float(np.max(np.abs(m[np.ix_(p, d)].real))))
    ok = pp_imag <= 1e-10 and pd_real <= 1e-10
    record("criterion 5: p-p real, p-d imaginary", ok, f"max|Im pp|={pp_imag:.1e} max|Re pd|={pd_real:.1e}")
    assert pp_imag <= 1e-10
    assert pd_real <= 1e-10


def test_criterion_06_propagator_order(record, basis187, dipole187, nominal_pulse):
    packet = load_register(RegisterSpec.gaussian(), basis187)
    pulse = nominal_pulse
    dt = fs_to_au(10.0)

    def run(h):
        return propagate(packet, pulse, Propagator(dipole187, h), pulse.t_start, pulse.t_end)

    out = run(dt)
    n_steps = math.ceil(pulse.window / dt)
    drift_per_1000 = abs(out.norm() - 1.0) / (n_steps / 1000.0)
    ref = run(dt / 16).amplitudes
    e1 = np.linalg.norm(out.amplitudes - ref)
    e2 = np.linalg.norm(run(dt / 2).amplitudes - ref)
    ratio = e1 / e2
    ok = drift_per_1000 <= 1e-12 and 3.5 <= ratio <= 4.5
    record("criterion 6: unitarity and second order", ok,
           f"norm drift/1000 steps={drift_per_1000:.1e} halving ratio={ratio:.3f}")
    assert drift_per_1000 <= 1e-12
    assert 3.5 <= ratio <= 4.5


def test_criterion_07_impulse_limit(record, basis187, kick187, prop187, nominal_pulse):
    spec = RegisterSpec.gaussian()
    packet = load_register(spec, basis187)
    idx = spec.indices(basis187)
    t_kick = ps_to_au(1.0)
    sudden = np.abs(apply_kick(free_evolve(packet, t_kick), kick187).amplitudes[idx]) ** 2
    pulse = nominal_pulse.scaled(100.0).centered_at(t_kick)
    out = propagate_through(packet, pulse, Propagator(prop187.dipole, prop187.dt / 100.0))
    l1 = float(np.abs(np.abs(out.amplitudes[idx]) ** 2 - sudden).sum())
    record("criterion 7: impulse limit at tau/100", l1 <= 0.05, f"L1={l1:.4f}")
    assert l1 <= 0.05


def test_criterion_08_marked_bit(record, basis187, kick187):
    ratios = []
    ok = True
    for mark in RegisterSpec.uniform().register_states:
        spec = RegisterSpec.uniform(marked=[mark])
        idx = spec.indices(basis187)
        p = np.abs(apply_kick(load_register(spec, basis187), kick187).amplitudes[idx]) ** 2
        i = spec.register_states.index(mark)
        ratio = p[i] / np.delete(p, i).mean()
        ratios.append(ratio)
        ok &= int(np.argmax(p)) == i and ratio >= 2.0
    record("criterion 8: marked-bit retrieval", bool(ok), "ratios=" + " ".join(f"{r:.1f}" for r in ratios))
    assert ok


def test_criterion_09_table_impulse(record, basis187, kick187):
    t0 = time.perf_counter()
    rows = entropy_table(basis187, RegisterSpec.gaussian(), Q_NOMINAL, mode="impulse", kick=kick187)
    elapsed = time.perf_counter() - t0
    ok = elapsed < 120
    parts = []
    for row, (target, _), ref in zip(rows, REFERENCE_TARGETS, REFERENCE_ENTROPY["impulse"]):
        good = row.found and row.argmax == row.label and abs(row.entropy - ref) <= 0.2
        ok &= good
        parts.append(f"{row.label}@{row.delay / ps_to_au(1):.3f}ps S={row.entropy:.3f} (ref {ref})")
    record("criterion 9: entropy table, impulse", bool(ok), "; ".join(parts) + f" [{elapsed:.1f}s]")
    assert ok


def test_criterion_10_table_full(record, basis187, prop187, nominal_pulse):
    t0 = time.perf_counter()
    rows = entropy_table(basis187, RegisterSpec.gaussian(), Q_NOMINAL, pulse=nominal_pulse, mode="full",
                         propagator=prop187)
    elapsed = time.perf_counter() - t0
    ok = elapsed < 600
    parts = []
    for row, ref in zip(rows, REFERENCE_ENTROPY["full"]):
        good = row.found and row.argmax == row.label and abs(row.entropy - ref) <= 0.25
        ok &= good
        parts.append(f"{row.label}@{row.delay / ps_to_au(1):.3f}ps S={row.entropy:.3f} (ref {ref})")
    record("criterion 10: entropy table, full integration", bool(ok), "; ".join(parts) + f" [{elapsed:.1f}s]")
    assert ok


def test_criterion_11_entropy_units(record):
    s_uniform = entropy(np.full(6, 1 / 6)).entropy
    s_det = entropy(np.array([1.0, 0, 0, 0, 0, 0])).entropy
    ok = abs(s_uniform - 1.792) <= 1e-3 and s_det == 0.0
    record("criterion 11: entropy unit values", ok, f"S_uniform={s_uniform:.5f} S_deterministic={s_det!r}")
    assert abs(s_uniform - 1.792) <= 1e-3
    assert s_det == 0.0


def test_criterion_12_carpet_ridges(record, basis187, kick187):
    spec = RegisterSpec.gaussian()
    delays = np.arange(401) * fs_to_au(20.0)
    scan = carpet_scan(load_register(spec, basis187), kick187, delays, spec)
    preds = ridge_predictions(26, 1, basis187.defects, k_max=2)
    matches = match_ridges(scan, preds)
    ok = all(m.within(0.15) for m in matches)
    detail = " ".join(
        f"k={k}: pred {m.predicted / ps_to_au(1):.3f}ps peak {m.nearest_peak / ps_to_au(1):.3f}ps ({m.relative_offset:.1%})"
        for k, m in enumerate(matches)
    )
    record("criterion 12: carpet ridges at half Kepler multiples", ok, detail)
    assert ok, detail


def test_criterion_13_pulse_calibration(record):
    closed = PREFACTOR * (A1 * math.factorial(C1) / B1 ** (C1 + 1) - A2 * math.factorial(C2) / B2 ** (C2 + 1))
    worst = 0.0
    for e_peak, tau in [(1.0, 1.0), (2.7e-7, 41072.5), (3.3e-5, 812.0)]:
        q = pulse_impulse(HcpPulse(e_peak, tau))
        worst = max(worst, abs(q / (closed * e_peak * tau) - 1))
    base = sampled_fwhm(HcpPulse(1.0, 1000.0))
    linear = abs(sampled_fwhm(HcpPulse(1.0, 3000.0)) / base - 3.0) < 1e-4
    no_epeak = abs(sampled_fwhm(HcpPulse(5.0, 1000.0)) / base - 1.0) < 1e-9
    consistent = abs(pulse_fwhm(HcpPulse(1.0, 1000.0)) / base - 1.0) < 1e-4
    printed_gap = abs(closed / 0.37815 - 1)
    ok = worst <= 1e-6 and linear and no_epeak and consistent
    record("criterion 13: pulse calibration", ok,
           f"closed form={closed:.6f} max rel err={worst:.1e} fwhm linear={linear} "
           f"e_peak independent={no_epeak} (printed 0.37815 differs from the closed form by {printed_gap:.1e})")
    assert worst <= 1e-6
    assert linear and no_epeak and consistent
