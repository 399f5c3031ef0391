# %% [markdown]
# Quantum levels and piston coupling
#
# The deformed box is mapped onto a rectangle, so the Hamiltonian becomes a
# dense matrix in the sine basis.  Diagonalising it in an energy window gives
# the levels and the matrix F of the piston force; the bandprofile is the
# mean of |F_nm|^2 along each diagonal.

# %%
import math

import numpy as np

from billiard_slrt import BilliardConfig, derive_scales
from billiard_slrt.classical import analytic_Cinf
from billiard_slrt.matrixstats import band_profile
from billiard_slrt.quantum import build_F, solve, weyl_count

cfg = BilliardConfig(E=3750.0)
sc = derive_scales(cfg)
basis, sw = solve(cfg, (3500.0, 4000.0))
cm = build_F(sw, basis, cfg)
print(f"{len(cm.energies)} levels, Weyl expects {weyl_count(cfg, 3500, 4000):.1f}")
print("mean spacing", round(np.diff(cm.energies).mean(), 3), "vs Delta0", round(sc.Delta0, 3))

# %% Quantum C(omega) = (2 pi / Delta0) <|F|^2> compared with the classical plateau
bp = band_profile(cm.X, r_max=30, delta0=sc.Delta0)
Cq = 2 * math.pi / sc.Delta0 * bp.mean
for r, c in zip(bp.r[::3], Cq[::3]):
    print(f"r={r:3d}  omega={r * sc.Delta0:6.1f}  C/C_inf={c / analytic_Cinf(cfg):5.2f}")
