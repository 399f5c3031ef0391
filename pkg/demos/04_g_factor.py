# %% [markdown]
# Semilinear suppression factor g
#
# Energy absorption is a random walk on the ladder of levels.  The rates
# X_nm w(E_n - E_m) form a resistor network; its conductance, relative to a
# network with the same profile but uniform elements, is gs.  Sparse matrices
# give gs < 1 while the Gaussian surrogate stays close to 1.

# %%
from billiard_slrt import BilliardConfig
from billiard_slrt.experiments import ResponseSettings, response_point

settings = ResponseSettings(n_windows=5, n_surrogates=2, min_collisions=100_000)
cfg = BilliardConfig(R=10.0)
p = response_point(cfg, hbar=0.1, settings=settings, seed=0)
print(f"u={p.u:.3f}  hbar={p.hbar:.3f}  omega_c={p.omega_c:.1f} (b={p.b:.1f})")
print(f"gs={p.gs:.3f}  gc={p.gc:.3f}  g={p.g:.3f}")
print(f"untextured gs={p.gs_untextured:.3f}  gaussian gs={p.gs_gaussian:.3f}")
print(f"rough estimate u^2/hbar={p.wqc:.3f}, with hopping correction {p.wqc_vrh:.3f}")
