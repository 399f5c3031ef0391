# %% [markdown]
# Classical power spectrum of the piston force
#
# A point particle bounces in a box whose left wall is a circular arc.  Each
# hit on the right wall (the piston) is an impulse 2 m v cos(theta); the
# power spectrum of that impulse train is the classical correlation function
# C(omega) that sets the wall-formula absorption.

# %%
import numpy as np

from billiard_slrt import BilliardConfig, derive_scales
from billiard_slrt.classical import analytic_Cinf, first_minimum, power_spectrum, simulate

cfg = BilliardConfig()  # Lx=1.5, Ly=1, R=8, E=4000
sc = derive_scales(cfg)
print(f"vE={sc.vE:.2f}  1/tL={1 / sc.tL:.1f}  1/tR={1 / sc.tR:.1f}  Delta0={sc.Delta0:.3f}")

# %%
train = simulate(cfg, n_collisions=200_000, seed=0)
omega = np.linspace(2.0, 20 / sc.tL, 400)
spec = power_spectrum(train, omega, segment_time=20.0)
Cinf = analytic_Cinf(cfg)

# %% The high-frequency plateau approaches the wall-formula value
hi = omega > 5 / sc.tL
print("plateau / C_inf:", round(spec.value[hi].mean() / Cinf, 3))

# %% The first dip marks the band-matching driving frequency
print("first minimum at omega =", round(first_minimum(spec), 1))
for w, c in zip(omega[:160:8], spec.value[:160:8]):
    print(f"{w:8.1f} {c / Cinf:6.3f} " + "#" * int(20 * c / Cinf))
