# %% [markdown]
# Is the effect observable with cold atoms?
#
# The driving amplitude must be large enough to heat the cloud within the
# hold time, and small enough that the golden-rule picture still holds.

# %%
import numpy as np

from billiard_slrt.response import amplitude_window

win = amplitude_window(hbar=0.1, b=10.0, DeltaL_over_Delta0=30.0, hold_bounces=1000.0)
print("exact window eps/L:", np.round(win.exact, 4), "nonempty" if win.exact_nonempty else "empty")
print("rough window eps/L:", np.round(win.rough, 4))

# %% The window closes if the hold time is too short
for hold in (30, 100, 300, 1000, 3000):
    w = amplitude_window(0.1, 10.0, 30.0, hold)
    print(f"hold={hold:5d}  {np.round(w.exact, 4)}  {'ok' if w.exact_nonempty else 'closed'}")
