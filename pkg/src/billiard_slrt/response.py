"""Linear (Kubo) and semi-linear (resistor network) absorption.

Both theories average the in-band elements of ``X = |F_nm|^2``: LRT uses the
plain algebraic average, SLRT treats the Fermi-golden-rule rates
``2 w(n-m) X_nm / (n-m)^2`` as conductors of a network and measures how
well the strip conducts.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
import scipy.sparse.linalg

from .classical import analytic_Cinf
from .errors import ConvergenceError
from .geometry import BilliardConfig, ScaleSet, derive_scales, mean_level_spacing, speed


@dataclass(frozen=True)
class DrivingSpec:
    """Noisy piston driving with spectrum ``eps^2/(2 wc) exp(-|w|/wc)``."""

    epsilon: float
    omega_c: float

    def __post_init__(self):
        if self.epsilon < 0 or not self.omega_c > 0:
            raise ValueError("need epsilon >= 0 and omega_c > 0")

    def spectral_function(self, omega):
        return self.epsilon ** 2 / (2 * self.omega_c) * np.exp(-np.abs(omega) / self.omega_c)


@dataclass
class WeightFunction:
    """Symmetric weights over level offsets ``+-1 .. +-r_max``.

    ``weights[k]`` is the weight of offset ``r = k + 1`` (and of ``-r``), so
    ``2 * weights.sum() == 1``.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) == 0 or np.any(w < 0):
            raise ValueError("weights must be a nonempty nonnegative vector")
        self.weights = w / (2 * w.sum())

    @property
    def r_max(self) -> int:
        return len(self.weights)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=int))
        out = np.zeros(r.shape)
        ok = (r >= 1) & (r <= self.r_max)
        out[ok] = self.weights[r[ok] - 1]
        return out


def weight_from_driving(drv: DrivingSpec, Delta0: float, r_max: int) -> WeightFunction:
    """Normalised driving spectrum sampled at the level offsets, ``~exp(-|r| Delta0/wc)``."""
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    if r_max * Delta0 < 5 * drv.omega_c:
        warnings.warn(f"r_max*Delta0 = {r_max * Delta0:.3g} < 5*omega_c: weight tail is truncated",
                      stacklevel=2)
    r = np.arange(1, r_max + 1)
    return WeightFunction(np.exp(-r * Delta0 / drv.omega_c))


def box_weights(r_max: int) -> WeightFunction:
    return WeightFunction(np.ones(r_max))


def conductance_matrix(X, w: WeightFunction) -> np.ndarray:
    """Network conductors ``2 w(n-m) X_nm / (n-m)^2``; zero on the diagonal."""
    X = np.asarray(X, dtype=float)
    n = len(X)
    r = np.subtract.outer(np.arange(n), np.arange(n))
    g = np.zeros_like(X)
    band = (r != 0) & (np.abs(r) <= w.r_max)
    g[band] = 2 * w(r[band]) * X[band] / r[band] ** 2
    return g


def _kron_reduce(g, s: int, t: int) -> float:
    """Eliminate every node except ``s`` and ``t`` (star-mesh transform).

    This is Gaussian elimination on the Laplacian with each pivot formed as a
    sum of positive conductances instead of a difference, so the result keeps
    full relative accuracy however wide the spread of conductances.
    """
    g = np.array(g, dtype=float)
    np.fill_diagonal(g, 0.0)
    for k in range(len(g)):
        if k in (s, t):
            continue
        row = g[k].copy()
        S = row.sum()
        g[k, :] = 0.0
        g[:, k] = 0.0
        if S > 0:
            row[k] = 0.0
            g += np.outer(row, row) / S
            np.fill_diagonal(g, 0.0)
    return float(g[s, t])


def two_probe_conductance(g, source: int = 0, sink: int = -1, rtol: float = 1e-12) -> float:
    """Effective conductance between two nodes of a network with conductor matrix ``g``.

    Returns 0 when the nodes are not connected.  Up to 1000 nodes the network
    is reduced exactly; larger ones use conjugate gradients on the grounded
    Laplacian.
    """
    g = np.asarray(g, dtype=float)
    n = len(g)
    source, sink = source % n, sink % n
    if source == sink:
        raise ValueError("source and sink must differ")
    scale = np.abs(g).max()
    if scale == 0:
        return 0.0
    g = g / scale
    _, labels = scipy.sparse.csgraph.connected_components(scipy.sparse.csr_matrix(g > 0), directed=False)
    if labels[source] != labels[sink]:
        return 0.0
    keep = np.flatnonzero(labels == labels[source])
    g = g[np.ix_(keep, keep)]
    s, t = int(np.searchsorted(keep, source)), int(np.searchsorted(keep, sink))
    if len(keep) <= 1000:
        return scale * _kron_reduce(g, s, t)
    lap = np.diag(g.sum(axis=1)) - g
    rest = np.delete(np.arange(len(keep)), t)
    lap = lap[np.ix_(rest, rest)]
    rhs = np.zeros(len(rest))
    rhs[s if s < t else s - 1] = 1.0
    v, info = scipy.sparse.linalg.cg(scipy.sparse.csr_matrix(lap), rhs, rtol=rtol, maxiter=20 * len(rest))
    if info != 0:
        raise ConvergenceError(f"conjugate gradient did not converge (info={info})")
    resistance = v[s if s < t else s - 1]
    return float(scale / resistance)


def network_average(X, w: WeightFunction) -> float:
    """Resistor-network average of ``X``, calibrated so that a uniform matrix returns its value."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("X must be square")
    if len(X) < 10:
        raise ValueError("network average needs at least 10 levels")
    G = two_probe_conductance(conductance_matrix(X, w))
    G1 = two_probe_conductance(conductance_matrix(np.ones_like(X), w))
    return G / G1


def algebraic_average(X, w: WeightFunction) -> float:
    """Weighted mean of the diagonal averages, ``sum_r w(r) C_a(r)`` over ``r != 0``."""
    X = np.asarray(X, dtype=float)
    r = np.arange(1, min(w.r_max, len(X) - 1) + 1)
    wr = w(r)
    means = np.array([np.diagonal(X, k).mean() for k in r])
    return float(np.sum(wr * means) / np.sum(wr))


@dataclass
class ResponseResult:
    gs: float
    gc: float
    g: float
    G0: float
    G_LRT: float
    G_SLRT: float
    scales: ScaleSet
    network_size: int
    X_s: float
    X_a: float


def g_factors(X, w: WeightFunction, cfg: BilliardConfig, E: float | None = None,
              T: float = 1.0, omega_c: float | None = None) -> ResponseResult:
    """Sparsity factor ``gs``, correlation factor ``gc`` and the absorption coefficients.

    ``E`` is the energy of the window (defaults to ``cfg.E``); the flat
    hard-chaos reference is ``(Delta0/2pi) C_inf(E)`` per matrix element.
    """
    E = cfg.E if E is None else E
    cfg_E = cfg.with_(E=E)
    X_s = network_average(X, w)
    X_a = algebraic_average(X, w)
    c_inf = analytic_Cinf(cfg_E)
    flat = mean_level_spacing(cfg) / (2 * math.pi) * c_inf
    gs = X_s / X_a if X_a > 0 else 0.0
    gc = X_a / flat
    G0 = c_inf / (2 * T)
    G_LRT = gc * G0
    return ResponseResult(gs=gs, gc=gc, g=gs * gc, G0=G0, G_LRT=G_LRT, G_SLRT=gs * G_LRT,
                          scales=derive_scales(cfg_E, omega_c), network_size=len(X),
                          X_s=X_s, X_a=X_a)


def wqc_estimate(u: float, hbar: float) -> float:
    """Median-over-mean estimate ``g ~ u^2/hbar`` in the weak-quantum-chaos regime."""
    if u <= 0 or hbar <= 0:
        raise ValueError("u and hbar must be positive")
    return u * u / hbar


def vrh_correct(g: float, b: float) -> float:
    """Variable-range-hopping correction ``g exp(sqrt(-ln b ln g))``, capped at 1.

    Applied only for ``g < 1``; larger values are returned unchanged.
    """
    if g <= 0:
        raise ValueError("g must be positive")
    if g >= 1:
        return g
    if b <= 1:
        raise ValueError("bandwidth b must exceed 1")
    return min(1.0, g * math.exp(math.sqrt(-math.log(b) * math.log(g))))


@dataclass
class FeasibilityReport:
    heating_ok: bool
    fgr_ok: bool
    heating_value: float
    fgr_value: float
    amplitude: float
    rough_heating_ok: bool
    rough_fgr_ok: bool


def feasibility(drv: DrivingSpec, cfg: BilliardConfig, T: float, hold_bounces: float) -> FeasibilityReport:
    """Check that driving heats measurably yet stays in the golden-rule regime.

    Heating: ``G0 eps^2 / (T DeltaL) > 1/hold_bounces``.
    Golden rule: ``T G0 eps^2 / Delta0^3 < b^3`` with ``b = omega_c/Delta0``.
    The rough forms use the amplitude ``eps tL / L = eps / vE``:
    ``amp^2 > 1/hold_bounces`` and ``amp < 1/b``.
    """
    if T <= 0 or hold_bounces <= 0:
        raise ValueError("T and hold_bounces must be positive")
    sc = derive_scales(cfg, drv.omega_c)
    G0 = analytic_Cinf(cfg) / (2 * T)
    eps2 = drv.epsilon ** 2
    heating = G0 * eps2 / (T * sc.DeltaL)
    fgr = T * G0 * eps2 / sc.Delta0 ** 3
    amp = drv.epsilon / speed(cfg)
    return FeasibilityReport(
        heating_ok=heating > 1 / hold_bounces,
        fgr_ok=fgr < sc.b ** 3,
        heating_value=heating,
        fgr_value=fgr,
        amplitude=amp,
        rough_heating_ok=amp ** 2 > 1 / hold_bounces,
        rough_fgr_ok=amp < 1 / sc.b,
    )


@dataclass
class AmplitudeWindow:
    exact: tuple
    rough: tuple

    @staticmethod
    def _nonempty(iv):
        return iv[0] < iv[1]

    @property
    def exact_nonempty(self) -> bool:
        return self._nonempty(self.exact)

    @property
    def rough_nonempty(self) -> bool:
        return self._nonempty(self.rough)


def amplitude_window(hbar: float, b: float, DeltaL_over_Delta0: float,
                     hold_bounces: float) -> AmplitudeWindow:
    """Range of the dimensionless driving amplitude ``eps/vE`` that satisfies both conditions.

    Square billiard of side L, thermal scale T equal to the particle energy.
    With these choices the heating condition reads
    ``(8/3pi^2) amp^2 > 1/hold_bounces`` and the golden-rule condition
    ``(2/3pi^2) (DeltaL/Delta0)^3 amp^2 / hbar^2 < b^3``.
    """
    lo = math.sqrt(3 * math.pi ** 2 / (8 * hold_bounces))
    hi = math.sqrt(1.5 * math.pi ** 2 * b ** 3 * hbar ** 2 / DeltaL_over_Delta0 ** 3)
    return AmplitudeWindow(exact=(lo, hi), rough=(1 / math.sqrt(hold_bounces), 1 / b))
