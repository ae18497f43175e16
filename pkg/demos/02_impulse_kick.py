"""The sudden kick exp(iQz): matrix structure and marked-bit retrieval."""
import numpy as np

from rydberg_hcp.analysis import amplification_report
from rydberg_hcp.basis import build_basis
from rydberg_hcp.constants import Q_NOMINAL
from rydberg_hcp.kick import apply_kick, kick_matrix, p_state_kick_row
from rydberg_hcp.register import RegisterSpec, load_register

basis = build_basis()
kick = kick_matrix(basis, Q_NOMINAL)

# p -> p elements are real, p -> d imaginary
m = kick.elements
p = basis.l_values == 1
d = basis.l_values == 2
print("max |Im| p-p:", np.abs(m[np.ix_(p, p)].imag).max())
print("max |Re| p-d:", np.abs(m[np.ix_(d, p)].real).max())

# Closed-form p-state column against the general expansion
col = p_state_kick_row(basis, 26, Q_NOMINAL)
print("closed form vs matrix:", np.abs(col - m[:, basis.index(26, 1)]).max())

# Truncation shows up as a unitarity defect
print("unitarity defect:", kick.unitarity_defect())

# Where does 26p go?
out = np.abs(col) ** 2
for i in np.argsort(out)[::-1][:6]:
    print(f"  {basis.labels[i]:>4}  {out[i]:.4f}")

# One flipped bit in a uniform register lights up at tau = 0
for mark in RegisterSpec.uniform().register_states:
    spec = RegisterSpec.uniform(marked=[mark])
    before = load_register(spec, basis)
    rep = amplification_report(before, apply_kick(before, kick), mark, spec)
    print(f"marked {rep.marked}: argmax {rep.argmax}, marked / mean unmarked = {rep.ratio_after:.1f}")
