"""Retrieval entropies for the Gaussian register, both models."""
from rydberg_hcp.analysis import REFERENCE_ENTROPY, entropy, entropy_table
from rydberg_hcp.basis import build_basis
from rydberg_hcp.constants import AU_TIME_PS, Q_NOMINAL, fs_to_au
from rydberg_hcp.dynamics import HcpPulse, Propagator
from rydberg_hcp.register import RegisterSpec, load_register, register_populations

basis = build_basis()
spec = RegisterSpec.gaussian()
print("S_initial =", entropy(register_populations(load_register(spec, basis), spec)).entropy)

pulse = HcpPulse.from_targets(Q=Q_NOMINAL, fwhm=fs_to_au(440))
prop = Propagator.for_basis(basis)

for mode in ("impulse", "full"):
    rows = entropy_table(basis, spec, Q_NOMINAL, pulse=pulse, mode=mode, propagator=prop)
    print(mode)
    for row, ref in zip(rows, REFERENCE_ENTROPY[mode]):
        print(f"  {row.label}  tau={row.delay * AU_TIME_PS:.3f} ps  S={row.entropy:.3f}  ref {ref}  "
              f"P_res={row.report.reservoir:.3f}")

# Renormalized register probabilities instead of a reservoir
rows = entropy_table(basis, spec, Q_NOMINAL, include_reservoir=False)
print("renormalized:", [round(r.entropy, 3) for r in rows])
