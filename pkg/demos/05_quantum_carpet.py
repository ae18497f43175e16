"""Delay scan ("carpet") and the half-Kepler ridges."""
from pathlib import Path

import numpy as np

from rydberg_hcp.analysis import carpet_scan, match_ridges, ridge_predictions
from rydberg_hcp.basis import build_basis
from rydberg_hcp.constants import AU_TIME_PS, Q_NOMINAL, fs_to_au
from rydberg_hcp.kick import kick_matrix
from rydberg_hcp.output import write_pgm
from rydberg_hcp.register import RegisterSpec, load_register

basis = build_basis()
spec = RegisterSpec.gaussian()
kick = kick_matrix(basis, Q_NOMINAL)

delays = np.arange(401) * fs_to_au(20)
scan = carpet_scan(load_register(spec, basis), kick, delays, spec, threads=2)
print(scan.populations.shape)

# Which register state wins as a function of delay
winner = np.array(spec.labels)[np.argmax(scan.populations, axis=1)]
changes = np.flatnonzero(winner[1:] != winner[:-1]) + 1
for i in changes[:15]:
    print(f"{delays[i] * AU_TIME_PS:5.2f} ps -> {winner[i]}")

for k, m in enumerate(match_ridges(scan, ridge_predictions(26, 1, basis.defects, 2))):
    print(f"k={k}: predicted {m.predicted * AU_TIME_PS:.3f} ps, nearest contrast max "
          f"{m.nearest_peak * AU_TIME_PS:.3f} ps ({m.relative_offset:.1%})")

out = Path("carpet_demo.pgm")
write_pgm(out, scan.populations.T, ["rows = " + " ".join(scan.labels)])
print("wrote", out)
