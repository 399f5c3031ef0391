"""Acceptance checks shared by the test suite and the ``validate`` command.

Each check runs at the tolerance it is specified with and returns a
:class:`CheckResult`; nothing here relaxes a threshold after the fact.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .classical import analytic_Cinf, bin_average, low_freq_slope, power_spectrum, simulate
from .experiments import ResponseSettings, coupling_matrix, response_point
from .geometry import BilliardConfig, derive_scales, mean_level_spacing
from .matrixstats import scaled_band_profile
from .quantum import weyl_count
from .response import (DrivingSpec, WeightFunction, algebraic_average, amplitude_window, box_weights,
                       network_average, weight_from_driving)


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    value: object
    target: str
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.id:2d} {self.name}: {self.value} (target {self.target})"

    def as_dict(self) -> dict:
        return asdict(self)


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = round(time.perf_counter() - t0, 2)
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


_TRAIN_CACHE = {}


def _default_train(seed: int, n: int = 1_000_000):
    key = (seed, n)
    if key not in _TRAIN_CACHE:
        _TRAIN_CACHE.clear()
        _TRAIN_CACHE[key] = simulate(BilliardConfig(), n_collisions=n, seed=seed)
    return _TRAIN_CACHE[key]


@_timed
def check_plateau(seed: int = 0) -> CheckResult:
    """Mean spectrum over (5/tL, 20/tL) against the hard-wall plateau."""
    cfg = BilliardConfig()
    sc = derive_scales(cfg)
    train = _default_train(seed)
    omega = np.linspace(5 / sc.tL, 20 / sc.tL, 202)[1:-1]
    spec = power_spectrum(train, omega, segment_time=20.0)
    ref = analytic_Cinf(cfg)
    ratio = float(spec.value.mean() / ref)
    return CheckResult(1, "classical plateau", abs(ratio - 1) <= 0.10, round(ratio, 4),
                       "|mean/C_inf - 1| <= 0.10", {"C_inf": ref, "collisions": 1_000_000})


@_timed
def check_log_divergence(seed: int = 0) -> CheckResult:
    """Regression of the spectrum on ln(1/omega) over (0.2/tR, 0.5/tL)."""
    cfg = BilliardConfig()
    sc = derive_scales(cfg)
    train = _default_train(seed)
    omega = np.geomspace(0.2 / sc.tR, 0.5 / sc.tL, 62)[1:-1]
    spec = power_spectrum(train, omega, segment_time=20.0)
    slope = -np.polyfit(np.log(omega), spec.value, 1)[0]
    target = low_freq_slope(cfg)
    ratio = float(slope / target)
    return CheckResult(2, "log divergence slope", abs(ratio - 1) <= 0.25, round(ratio, 4),
                       "|slope/(m^2 vE^3 R/(2 Lx^2)) - 1| <= 0.25",
                       {"slope": float(slope), "predicted": target, "slope_over_Cinf": float(slope / analytic_Cinf(cfg))})


@_timed
def check_qcc(seed: int = 0) -> CheckResult:
    """Quantum bandprofile of a 300-level window near E=3500 against the classical spectrum."""
    E_ref = 3500.0
    cfg = BilliardConfig(E=E_ref)
    sc = derive_scales(cfg)
    d0 = sc.Delta0
    cm = coupling_matrix(cfg, (2150.0, 4850.0))
    n_levels = len(cm.energies)
    r_hi = int(math.ceil(3 * sc.DeltaR / d0)) - 1
    bp = scaled_band_profile(cm.X, cm.energies, E_ref, cfg.mass, d0, r_hi)
    r = bp.r[bp.r >= 2]
    quantum = 2 * math.pi / d0 * bp.mean[bp.r >= 2]
    train = simulate(cfg, n_collisions=400_000, seed=seed)
    fine = np.arange(1.5 * d0, (r_hi + 0.5) * d0, 0.25)
    spec = power_spectrum(train, fine, segment_time=20.0)
    classical = bin_average(spec, r * d0, d0)
    ratio = quantum / classical
    ok = n_levels >= 300 and bool(np.all((ratio >= 0.5) & (ratio <= 2.0)))
    return CheckResult(3, "QCC bandprofile", ok, f"ratio in [{ratio.min():.2f}, {ratio.max():.2f}]",
                       "0.5 <= quantum/classical <= 2 for Delta0 < r Delta0 < 3 DeltaR",
                       {"levels": n_levels, "r": r.tolist(), "ratio": np.round(ratio, 3).tolist()})


def _weight_zoo(r_max: int, rng) -> list[WeightFunction]:
    return [
        box_weights(r_max),
        box_weights(1),
        weight_from_driving(DrivingSpec(1.0, r_max / 5), 1.0, r_max),
        weight_from_driving(DrivingSpec(1.0, 0.5), 1.0, r_max),
        WeightFunction(rng.random(r_max)),
    ]


@_timed
def check_uniform_identity(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (10, 100, 500):
        for w in _weight_zoo(min(n - 1, 40), rng):
            x0 = float(rng.uniform(0.1, 10))
            val = network_average(np.full((n, n), x0), w)
            worst = max(worst, abs(val - x0) / x0)
    return CheckResult(4, "uniform identity", worst <= 1e-10, f"{worst:.2e}", "relative error <= 1e-10")


def random_ensembles(n: int, rng) -> dict:
    """Generators of symmetric nonnegative test matrices."""
    def sym(A):
        A = np.triu(A, 1)
        return A + A.T + np.diag(rng.random(n))

    def banded(A, b=8):
        r = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        return A * np.exp(-r / b)

    return {
        "uniform": lambda: sym(rng.random((n, n))),
        "porter-thomas": lambda: sym(rng.standard_normal((n, n)) ** 2),
        "log-wide": lambda: sym(rng.lognormal(0.0, 2.0, (n, n))),
        "sparse": lambda: sym((rng.random((n, n)) < 0.2) * rng.exponential(1.0, (n, n)) + 1e-6),
        "banded": lambda: sym(banded(rng.exponential(1.0, (n, n)))),
    }


@_timed
def check_domination_linearity(seed: int = 0, n_matrices: int = 100, n: int = 40) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_dom, worst_lin, fails = -np.inf, 0.0, []
    for name, gen in random_ensembles(n, rng).items():
        for k in range(n_matrices):
            X = gen()
            w = weight_from_driving(DrivingSpec(1.0, float(rng.uniform(1, (n - 1) / 5))), 1.0, n - 1)
            s, a = network_average(X, w), algebraic_average(X, w)
            excess = s / a - 1
            worst_dom = max(worst_dom, excess)
            if excess > 1e-9:
                fails.append((name, k, float(excess)))
            c = float(rng.uniform(0.01, 100))
            worst_lin = max(worst_lin, abs(network_average(c * X, w) - c * s) / (c * s))
    ok = not fails and worst_lin <= 1e-9
    return CheckResult(5, "domination and linearity", ok,
                       f"max(s/a-1)={worst_dom:.2e}, linearity err={worst_lin:.2e}",
                       "s <= a(1+1e-9), linearity 1e-9", {"violations": fails[:10], "n_violations": len(fails)})


@_timed
def check_ensemble_ordering(seed: int = 0, settings: ResponseSettings = ResponseSettings()) -> CheckResult:
    p = response_point(BilliardConfig(R=8.0), hbar=0.1, settings=settings, seed=seed)
    ok = p.gs < p.gs_untextured <= p.gs_gaussian and p.gs < 0.5 and p.gs_gaussian > 0.3
    frac = float(np.mean(np.array(p.gs_windows) < p.gs_untextured))
    return CheckResult(6, "surrogate ordering", ok,
                       f"billiard={p.gs:.3f}, untextured={p.gs_untextured:.3f}, gaussian={p.gs_gaussian:.3f}",
                       "billiard < untextured <= gaussian, billiard < 0.5, gaussian > 0.3",
                       {"u": p.u, "hbar": p.hbar, "omega_c": p.omega_c, "b": p.b, "gs_windows": p.gs_windows,
                        "windows_below_untextured_median": frac})


def wqc_u_grid(hbar: float, n: int = 7) -> np.ndarray:
    return np.geomspace(3 * hbar ** 2, 0.8 * math.sqrt(hbar), n)


@_timed
def check_wqc_scaling(seed: int = 0, hbar: float = 0.105,
                      settings: ResponseSettings = ResponseSettings()) -> CheckResult:
    us = wqc_u_grid(hbar)
    base = BilliardConfig()
    pts = [response_point(base.with_(R=base.Ly / u), hbar=hbar, settings=settings, seed=seed, surrogates=False)
           for u in us]
    g = np.array([p.g for p in pts])
    slope = float(np.polyfit(np.log(us), np.log(g), 1)[0])
    return CheckResult(7, "WQC u^2 scaling", abs(slope - 2) <= 0.5, round(slope, 3), "slope 2 +- 0.5",
                       {"hbar": hbar, "u": us.tolist(), "g": g.tolist(), "gs": [p.gs for p in pts],
                        "gc": [p.gc for p in pts]})


@_timed
def check_magnitude(seed: int = 0, settings: ResponseSettings = ResponseSettings()) -> CheckResult:
    p = response_point(BilliardConfig(R=10.0), hbar=0.1, settings=settings, seed=seed, surrogates=False)
    ok = 0.1 / 3 <= p.gs <= 0.3
    return CheckResult(8, "gs magnitude", ok, round(p.gs, 4), "0.1/3 <= gs <= 0.3",
                       {"omega_c": p.omega_c, "gs_windows": p.gs_windows})


@_timed
def check_spectral_bookkeeping(seed: int = 0) -> CheckResult:
    cfg = BilliardConfig()
    counts = {}
    ok = True
    for lo, hi in ((1000.0, 4000.0), (3500.0, 4000.0), (10000.0, 14000.0)):
        cm = coupling_matrix(cfg, (lo, hi))
        n, weyl = len(cm.energies), weyl_count(cfg, lo, hi)
        counts[f"{lo:g}-{hi:g}"] = (n, round(weyl, 1))
        ok &= abs(n / weyl - 1) <= 0.05
        if (lo, hi) == (10000.0, 14000.0):
            E = cm.energies
            spacing = float(np.polyfit(np.arange(len(E)), E, 1)[0])
    d0 = mean_level_spacing(cfg)
    ok &= abs(spacing / d0 - 1) <= 0.03
    return CheckResult(9, "spectral bookkeeping", bool(ok), f"spacing={spacing:.4f} vs {d0:.5f}",
                       "counts within 5% of Weyl, spacing within 3%", {"counts": counts})


@_timed
def check_feasibility_window(seed: int = 0) -> CheckResult:
    win = amplitude_window(hbar=0.1, b=10.0, DeltaL_over_Delta0=30.0, hold_bounces=1000.0)
    lo, hi = 10 ** -1.5, 0.1
    inside = lo * (1 - 1e-12) <= win.exact[0] and win.exact[1] <= hi * (1 + 1e-12)
    ok = win.exact_nonempty and win.rough_nonempty and inside
    return CheckResult(10, "feasibility window", ok,
                       f"exact=({win.exact[0]:.4f}, {win.exact[1]:.4f}), rough=({win.rough[0]:.4f}, {win.rough[1]:.4f})",
                       "nonempty, inside (10^-1.5, 10^-1)")


ALL_CHECKS = (check_plateau, check_log_divergence, check_qcc, check_uniform_identity,
              check_domination_linearity, check_ensemble_ordering, check_wqc_scaling,
              check_magnitude, check_spectral_bookkeeping, check_feasibility_window)


def run_all(seed: int = 0, only=None) -> list[CheckResult]:
    out = []
    for k, fn in enumerate(ALL_CHECKS, start=1):
        if only and k not in only:
            continue
        out.append(fn(seed=seed))
    return out
