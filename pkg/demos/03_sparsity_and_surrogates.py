# %% [markdown]
# Sparsity of the coupling matrix
#
# In the weakly deformed billiard most elements within the band are tiny and
# a few are large.  Two surrogates keep the bandprofile but remove structure:
# "untextured" shuffles elements along each diagonal, "gaussian-band" draws
# fresh Gaussian elements with the same profile.

# %%
import numpy as np

from billiard_slrt import BilliardConfig
from billiard_slrt.matrixstats import SurrogateSpec, make_surrogate, size_histogram
from billiard_slrt.quantum import build_F, solve

cfg = BilliardConfig(E=3750.0)
basis, sw = solve(cfg, (3500.0, 4000.0))
X = build_F(sw, basis, cfg).X

# %% Median over mean along the first diagonals: 1 would mean no sparsity
for k in (1, 3, 6, 10):
    d = np.diagonal(X, k)
    print(f"r={k:2d}  median/mean={np.median(d) / d.mean():.3f}")

# %% Log-size histogram within the band
h = size_histogram(X, (1, 10))
for c, n in zip(h.centers[::4], h.counts[::4]):
    print(f"{c:7.2f} {'#' * int(60 * n / h.counts.max())}")

# %% The surrogates keep the diagonal means
for kind in ("untextured", "gaussian-band"):
    S = make_surrogate(X, SurrogateSpec(kind, seed=0))
    print(kind, np.round([np.diagonal(S, k).mean() / np.diagonal(X, k).mean() for k in (1, 5, 10)], 2))
