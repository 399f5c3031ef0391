"""Bandprofile, size distribution and surrogate ensembles of X = |F_nm|^2."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ZERO_FLOOR = 1e-280


@dataclass
class BandProfile:
    r: np.ndarray
    mean: np.ndarray
    median: np.ndarray
    omega: np.ndarray
    count: np.ndarray


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    n_zero: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


@dataclass(frozen=True)
class SurrogateSpec:
    kind: str = "untextured"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("untextured", "gaussian-band"):
            raise ValueError(f"unknown surrogate kind {self.kind!r}")


def _check_square(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("X must be a square matrix")
    return X


def _window_slice(n, energies, window):
    if window is None:
        return slice(0, n)
    if energies is None:
        raise ValueError("an energy window needs the level energies")
    energies = np.asarray(energies)
    lo = int(np.searchsorted(energies, window[0], side="left"))
    hi = int(np.searchsorted(energies, window[1], side="right"))
    return slice(lo, hi)


def band_profile(X, window=None, energies=None, r_max: int | None = None,
                 delta0: float = 1.0) -> BandProfile:
    """Mean and median of ``X`` along each diagonal ``n - m = r``.

    Only levels inside ``window`` (needs ``energies``) enter.  The frequency
    axis is ``r * delta0``.
    """
    X = _check_square(X)
    sl = _window_slice(len(X), energies, window)
    X = X[sl, sl]
    n = len(X)
    if n < 2:
        raise ValueError("band profile needs at least two levels")
    r_max = n - 1 if r_max is None else min(r_max, n - 1)
    r = np.arange(1, r_max + 1)
    diags = [np.diagonal(X, k) for k in r]
    return BandProfile(
        r=r,
        mean=np.array([d.mean() for d in diags]),
        median=np.array([np.median(d) for d in diags]),
        omega=r * delta0,
        count=np.array([len(d) for d in diags]),
    )


def band_elements(X, r_lo: int, r_hi: int) -> np.ndarray:
    """All upper-triangle elements with ``r_lo <= n - m <= r_hi``."""
    X = _check_square(X)
    if not 1 <= r_lo <= r_hi < len(X):
        raise ValueError("band outside the matrix")
    return np.concatenate([np.diagonal(X, k) for k in range(r_lo, r_hi + 1)])


def size_histogram(X, band: tuple, bins=40, floor: float = ZERO_FLOOR) -> Histogram:
    """Histogram of ``ln X_nm`` over the diagonals in ``band = (r_lo, r_hi)``.

    Elements below ``floor`` are counted separately in ``n_zero``.
    """
    vals = band_elements(X, *band)
    small = vals < floor
    logs = np.log(vals[~small])
    if np.isscalar(bins) and len(logs) and np.ptp(logs) == 0:
        edges = np.array([logs[0] - 0.5, logs[0] + 0.5])
        return Histogram(edges=edges, counts=np.array([len(logs)]), n_zero=int(small.sum()))
    counts, edges = np.histogram(logs, bins=bins)
    return Histogram(edges=edges, counts=counts, n_zero=int(small.sum()))


def make_surrogate(X, spec: SurrogateSpec) -> np.ndarray:
    """Random matrix sharing the bandprofile of ``X``.

    ``untextured`` shuffles the elements within every diagonal, keeping each
    diagonal's multiset (hence bandprofile and sparsity) while destroying
    the arrangement.  ``gaussian-band`` draws ``C_a(r) * z**2`` with standard
    normal ``z``: same mean bandprofile, no sparsity.
    """
    X = _check_square(X)
    n = len(X)
    rng = np.random.default_rng(spec.seed)
    out = np.zeros_like(X)
    np.fill_diagonal(out, np.diagonal(X))
    for k in range(1, n):
        d = np.diagonal(X, k)
        if spec.kind == "untextured":
            new = rng.permutation(d)
        else:
            new = d.mean() * rng.standard_normal(len(d)) ** 2
        idx = np.arange(n - k)
        out[idx, idx + k] = new
        out[idx + k, idx] = new
    return out


def scaled_band_profile(X, energies, E_ref: float, mass: float, delta0: float,
                        r_max: int) -> BandProfile:
    """Bandprofile of a wide window with every pair rescaled to the speed at ``E_ref``.

    A pair (n, m) has speed ``v`` set by its mean energy.  The classical
    spectrum scales as ``v**3 f(omega/v)``, so the pair is moved to frequency
    ``(E_n - E_m) v_ref/v`` and its element multiplied by ``(v_ref/v)**3``.
    Pairs are then binned on ``r = round(omega/delta0)``.  Without this the
    sharp structure near ``pi v/Lx`` smears over a window hundreds of levels wide.
    """
    X = _check_square(X)
    E = np.asarray(energies, dtype=float)
    i, j = np.triu_indices(len(E), 1)
    v = np.sqrt((E[i] + E[j]) / mass)
    v_ref = np.sqrt(2 * E_ref / mass)
    om = np.abs(E[j] - E[i]) * v_ref / v
    xs = X[i, j] * (v_ref / v) ** 3
    rb = np.rint(om / delta0).astype(int)
    r = np.arange(1, r_max + 1)
    mean = np.full(len(r), np.nan)
    median = np.full(len(r), np.nan)
    count = np.zeros(len(r), dtype=int)
    for k, rr in enumerate(r):
        sel = xs[rb == rr]
        count[k] = len(sel)
        if len(sel):
            mean[k], median[k] = sel.mean(), np.median(sel)
    return BandProfile(r=r, mean=mean, median=median, omega=r * delta0, count=count)
