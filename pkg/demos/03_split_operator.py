"""Finite half-cycle pulse and the split-operator propagator."""
import time

import numpy as np

from rydberg_hcp.basis import build_basis
from rydberg_hcp.constants import AU_FIELD_KV_PER_CM, AU_TIME_FS, Q_NOMINAL, fs_to_au, ps_to_au
from rydberg_hcp.dynamics import (
    IMPULSE_COEFF,
    HcpPulse,
    Propagator,
    fwhm_ratio,
    propagate,
    propagate_through,
    pulse_impulse,
    shape_peak,
)
from rydberg_hcp.kick import apply_kick, kick_matrix
from rydberg_hcp.register import RegisterSpec, free_evolve, load_register

print("impulse coefficient", IMPULSE_COEFF, " FWHM/tau", fwhm_ratio(), " peak", shape_peak())

pulse = HcpPulse.from_targets(Q=Q_NOMINAL, fwhm=fs_to_au(440))
print(f"tau = {pulse.tau * AU_TIME_FS:.1f} fs, E_peak = {pulse.e_peak * AU_FIELD_KV_PER_CM:.3f} kV/cm")
print("area by quadrature:", pulse_impulse(pulse))

basis = build_basis()
prop = Propagator.for_basis(basis)
spec = RegisterSpec.gaussian()
packet = load_register(spec, basis)

t = time.perf_counter()
out = propagate(packet, pulse, prop, pulse.t_start, pulse.t_end)
print(f"{pulse.window / prop.dt:.0f} steps in {time.perf_counter() - t:.2f}s, norm - 1 = {out.norm() - 1:.1e}")

# Error ratio under dt halving (second order -> about 4)
ref = propagate(packet, pulse, Propagator(prop.dipole, prop.dt / 16), pulse.t_start, pulse.t_end)
e = [np.linalg.norm(propagate(packet, pulse, Propagator(prop.dipole, prop.dt / k), pulse.t_start, pulse.t_end).amplitudes
                    - ref.amplitudes) for k in (1, 2)]
print("halving ratio:", e[0] / e[1])

# Shrinking the pulse at fixed area approaches the sudden kick
kick = kick_matrix(basis, Q_NOMINAL)
idx = spec.indices(basis)
tk = ps_to_au(1.0)
sudden = np.abs(apply_kick(free_evolve(packet, tk), kick).amplitudes[idx]) ** 2
for f in (1, 10, 100):
    short = pulse.scaled(f).centered_at(tk)
    res = propagate_through(packet, short, Propagator(prop.dipole, prop.dt / f))
    print(f"tau/{f}: L1 to sudden = {np.abs(np.abs(res.amplitudes[idx]) ** 2 - sudden).sum():.4f}")
