"""Walk through the Rydberg basis: grid, energies, radial functions."""
import numpy as np

from rydberg_hcp.basis import QuantumDefectTable, build_basis, build_grid, kepler_time_s
from rydberg_hcp.constants import HARTREE_CM1

# Default basis: n = 21..31, l = 0..16, m = 0
basis = build_basis()
print(len(basis), "states")
print(basis.grid.describe())

cs = QuantumDefectTable.cesium()
print("defects:", cs.defects)

# Energies of the register states, in cm^-1 below threshold
for n in range(24, 30):
    s = basis.states[basis.index(n, 1)]
    print(f"{s.label:>4}  n*={s.n_star:.3f}  E={s.energy * HARTREE_CM1:9.3f} cm^-1")

# Kepler time of the packet center; half multiples of it mark the carpet ridges
print("t_K(26p) =", kepler_time_s(26, 1, cs) * 1e12, "ps")

# Same-l overlaps: the core cutoff spoils exact orthogonality only for the penetrating s, p, d
g = basis.gram()
ls = basis.l_values
for l in range(5):
    block = g[np.ix_(ls == l, ls == l)]
    print(f"l={l} max |overlap - delta| = {np.abs(block - np.eye(len(block))).max():.1e}")

# 26p density peaks a little inside 2 n*^2
wf = basis.wavefunctions[basis.index(26, 1)]
r = basis.grid.points
print("peak of u^2 at r =", r[np.argmax(wf.u**2)], " 2 n*^2 =", 2 * wf.state.n_star**2)

# Hydrogen check on a finer inner grid
h = build_basis((1, 3), 2, grid=build_grid(1e-4, 200, 20000), mode="hydrogenic")
print(h.labels, [wf.count_nodes() for wf in h.wavefunctions])
