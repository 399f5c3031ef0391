"""End-to-end runs: band profiles, g-factor sweeps and their on-disk outputs.

A *response point* is one (hbar, u) pair.  Its sparsity factor comes from a
small energy ensemble: ``n_windows`` overlapping windows of ``n_levels``
levels, spaced by ``window_step`` levels around the target energy.  The
reported gs and gc are medians over the ensemble.  A single window is not
enough: its two-probe conductance is set by the two end levels, and one
weakly coupled end level can pull gs down by orders of magnitude.
"""
from __future__ import annotations

import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .classical import PowerSpectrum, analytic_Cinf, first_minimum, power_spectrum, simulate
from .errors import ConfigError
from .geometry import BilliardConfig, config_hash, derive_scales, energy_for_hbar, speed
from .io import ArtifactCache, provenance, write_csv
from .matrixstats import SurrogateSpec, band_profile, make_surrogate, scaled_band_profile
from .quantum import CouplingMatrix, build_F, solve
from .response import (DrivingSpec, box_weights, g_factors, vrh_correct, weight_from_driving,
                       wqc_estimate)


@dataclass(frozen=True)
class ClassicalSettings:
    n_collisions: int = 1_000_000
    segment_time: float = 20.0
    omega_max_over_v: float = 2.5
    n_omega: int = 500


@dataclass(frozen=True)
class ResponseSettings:
    omega_c: object = "first-minimum"  # or "DeltaR" or a number
    weight: str = "driving"  # or "box"
    r_max: int = 99
    n_levels: int = 100
    n_windows: int = 21
    window_step: int = 4
    n_surrogates: int = 4
    min_collisions: int = 200_000
    T: float = 1.0

    def __post_init__(self):
        if self.weight not in ("driving", "box"):
            raise ConfigError(f"weight must be 'driving' or 'box', got {self.weight!r}")
        if isinstance(self.omega_c, str):
            if self.omega_c not in ("first-minimum", "DeltaR"):
                raise ConfigError(f"omega_c must be 'first-minimum', 'DeltaR' or a number, got {self.omega_c!r}")
        elif not (isinstance(self.omega_c, (int, float)) and self.omega_c > 0):
            raise ConfigError("numeric omega_c must be positive")
        if self.n_levels < 10 or self.n_windows < 1 or self.window_step < 1 or self.r_max < 1:
            raise ConfigError("n_levels >= 10, n_windows >= 1, window_step >= 1, r_max >= 1 required")


@dataclass(frozen=True)
class ExperimentPlan:
    config: BilliardConfig = BilliardConfig()
    classical: ClassicalSettings = ClassicalSettings()
    response: ResponseSettings = ResponseSettings()
    quantum_window: tuple = (3500.0, 4000.0)
    fig3_windows: tuple = ((100.0, 4000.0), (10000.0, 14000.0))
    fig3_radii: tuple = (8.0, 2.0)
    sweep_inv_hbar: tuple = (5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    sweep_u: tuple = (0.033, 0.05, 0.071, 0.1, 0.143, 0.2, 0.26)
    sweep_u_hbar: float = 0.105
    hbar: float = 0.1
    hold_bounces: float = 1000.0
    feas_b: float = 10.0
    feas_DeltaL_over_Delta0: float = 30.0
    outputs: str = "out"
    seed: int = 0

    def __post_init__(self):
        if not self.sweep_inv_hbar or not self.sweep_u:
            raise ConfigError("sweeps must be nonempty")
        if any(x <= 0 for x in self.sweep_inv_hbar) or any(x <= 0 for x in self.sweep_u):
            raise ConfigError("sweep values must be positive")

    def hash(self) -> str:
        d = asdict(self)
        d.pop("outputs")
        return config_hash(d)


_SECTIONS = {"billiard", "classical", "response", "quantum", "figure3", "sweep", "feasibility", "seed"}


def plan_from_dict(d: dict, outputs: str | None = None, seed: int | None = None) -> ExperimentPlan:
    """Build a plan from the JSON config layout; unknown keys raise ConfigError."""
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kw = {}
    try:
        if "billiard" in d:
            kw["config"] = BilliardConfig.from_dict(d["billiard"])
        if "classical" in d:
            kw["classical"] = ClassicalSettings(**d["classical"])
        if "response" in d:
            kw["response"] = ResponseSettings(**d["response"])
        q = d.get("quantum", {})
        if "window" in q:
            kw["quantum_window"] = tuple(float(x) for x in q["window"])
        if set(q) - {"window"}:
            raise ConfigError(f"unknown quantum keys: {sorted(set(q) - {'window'})}")
        f3 = d.get("figure3", {})
        if "windows" in f3:
            kw["fig3_windows"] = tuple(tuple(float(x) for x in w) for w in f3["windows"])
        if "radii" in f3:
            kw["fig3_radii"] = tuple(float(r) for r in f3["radii"])
        sw = d.get("sweep", {})
        mapping = {"inv_hbar": "sweep_inv_hbar", "u": "sweep_u", "u_hbar": "sweep_u_hbar", "hbar": "hbar"}
        for k, v in sw.items():
            if k not in mapping:
                raise ConfigError(f"unknown sweep key {k!r}")
            kw[mapping[k]] = tuple(float(x) for x in v) if isinstance(v, list) else float(v)
        fe = d.get("feasibility", {})
        fmap = {"hold_bounces": "hold_bounces", "b": "feas_b", "deltaL_over_delta0": "feas_DeltaL_over_Delta0"}
        for k, v in fe.items():
            if k not in fmap:
                raise ConfigError(f"unknown feasibility key {k!r}")
            kw[fmap[k]] = float(v)
        if "seed" in d:
            kw["seed"] = int(d["seed"])
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if outputs is not None:
        kw["outputs"] = outputs
    if seed is not None:
        kw["seed"] = seed
    return ExperimentPlan(**kw)


def load_plan(path, outputs=None, seed=None) -> ExperimentPlan:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return plan_from_dict(d, outputs, seed)


# -- classical -----------------------------------------------------------

def classical_spectrum(cfg: BilliardConfig, settings: ClassicalSettings = ClassicalSettings(),
                       seed: int = 0) -> PowerSpectrum:
    vE = speed(cfg)
    omega = np.linspace(0, settings.omega_max_over_v * vE / cfg.Ly, settings.n_omega + 1)[1:]
    train = simulate(cfg, n_collisions=settings.n_collisions, seed=seed)
    return power_spectrum(train, omega, settings.segment_time)


@functools.lru_cache(maxsize=64)
def band_matching_omega(cfg: BilliardConfig, n_collisions: int = 200_000, seed: int = 0) -> float:
    """Cutoff frequency matched to the first minimum of the classical spectrum."""
    spec = classical_spectrum(cfg, ClassicalSettings(n_collisions=n_collisions, n_omega=250), seed)
    return first_minimum(spec, smooth=5)


def resolve_omega_c(cfg: BilliardConfig, settings: ResponseSettings, seed: int = 0) -> float:
    if settings.omega_c == "first-minimum":
        return band_matching_omega(cfg, settings.min_collisions, seed)
    if settings.omega_c == "DeltaR":
        return derive_scales(cfg).DeltaR
    return float(settings.omega_c)


# -- quantum -------------------------------------------------------------

def coupling_matrix(cfg: BilliardConfig, window: tuple, cache: ArtifactCache | None = None,
                    seed=None) -> CouplingMatrix:
    """Piston coupling in the eigenbasis of ``window``, reused from ``cache`` when present."""
    window = (float(window[0]), float(window[1]))
    cutoff = 2 * window[1]
    key = config_hash({"cfg": cfg.to_dict(), "window": window, "cutoff": cutoff})
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            F, E, _ = hit
            return CouplingMatrix(F=F, energies=E)
    basis, sw = solve(cfg, window, cutoff)
    cm = build_F(sw, basis, cfg)
    if cache is not None:
        cache.put(key, cm.F, cm.energies,
                  provenance(cfg.hash(), seed, window=list(window), cutoff=cutoff, basis_size=len(basis)))
    return cm


# -- response ------------------------------------------------------------

@dataclass
class PointResult:
    hbar: float
    u: float
    E: float
    R: float
    omega_c: float
    b: float
    gs: float
    gc: float
    g: float
    gs_untextured: float
    gs_gaussian: float
    gs_windows: list = field(default_factory=list)
    gc_windows: list = field(default_factory=list)
    wqc: float = math.nan
    wqc_vrh: float = math.nan

    @property
    def g_untextured(self):
        return self.gs_untextured * self.gc

    @property
    def g_gaussian(self):
        return self.gs_gaussian * self.gc


def _weights(settings: ResponseSettings, omega_c: float, delta0: float):
    if settings.weight == "box":
        return box_weights(max(1, min(settings.r_max, int(round(omega_c / delta0)))))
    return weight_from_driving(DrivingSpec(1.0, omega_c), delta0, settings.r_max)


def response_point(cfg: BilliardConfig, hbar: float | None = None,
                   settings: ResponseSettings = ResponseSettings(), seed: int = 0,
                   cache: ArtifactCache | None = None, surrogates: bool = True) -> PointResult:
    """g-factors of the billiard (and its surrogates) at ``hbar`` for the shape ``cfg``."""
    import warnings
    if hbar is not None:
        cfg = cfg.with_(E=energy_for_hbar(hbar, cfg))
    sc = derive_scales(cfg)
    d0 = sc.Delta0
    omega_c = resolve_omega_c(cfg, settings, seed)
    w = _weights(settings, omega_c, d0)
    half = (settings.window_step * (settings.n_windows - 1) / 2 + settings.n_levels / 2 + 20) * d0
    cm = coupling_matrix(cfg, (max(cfg.E - half, 1.0), cfg.E + half), cache, seed)
    offsets = (np.arange(settings.n_windows) - (settings.n_windows - 1) / 2) * settings.window_step
    gs, gc, gu, gg = [], [], [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for k, off in enumerate(offsets):
            X = cm.centered(cfg.E + off * d0, settings.n_levels).X
            res = g_factors(X, w, cfg, T=settings.T, omega_c=omega_c)
            gs.append(res.gs)
            gc.append(res.gc)
            if surrogates:
                base = seed * 100_003 + 1000 * k
                gu.append(np.mean([g_factors(make_surrogate(X, SurrogateSpec("untextured", base + s)), w, cfg).gs
                                   for s in range(settings.n_surrogates)]))
                gg.append(np.mean([g_factors(make_surrogate(X, SurrogateSpec("gaussian-band", base + s)), w, cfg).gs
                                   for s in range(settings.n_surrogates)]))
    gs_m, gc_m = float(np.median(gs)), float(np.median(gc))
    wqc = wqc_estimate(sc.u, sc.hbar) if math.isfinite(cfg.R) else math.nan
    return PointResult(
        hbar=sc.hbar, u=sc.u, E=cfg.E, R=cfg.R, omega_c=omega_c, b=omega_c / d0,
        gs=gs_m, gc=gc_m, g=gs_m * gc_m,
        gs_untextured=float(np.median(gu)) if gu else math.nan,
        gs_gaussian=float(np.median(gg)) if gg else math.nan,
        gs_windows=[float(x) for x in gs], gc_windows=[float(x) for x in gc],
        wqc=wqc, wqc_vrh=vrh_correct(wqc, omega_c / d0) if 0 < wqc < 1 and omega_c > d0 else wqc,
    )


def _point_job(args):
    cfg, hbar, settings, seed = args
    return response_point(cfg, hbar, settings, seed)


def sweep(points, settings: ResponseSettings, seed: int = 0, threads: int = 1) -> list[PointResult]:
    """Evaluate ``[(cfg, hbar), ...]`` independently, optionally in a process pool; order is kept."""
    jobs = [(cfg, hbar, settings, seed) for cfg, hbar in points]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(_point_job, jobs))
    return [_point_job(j) for j in jobs]


SWEEP_COLUMNS = ("hbar", "inv_hbar", "u", "R", "E", "omega_c", "b", "gs", "gc", "g",
                 "G_LRT_over_G0", "G_SLRT_over_G0", "gs_untextured", "g_untextured",
                 "gs_gaussian", "g_gaussian", "wqc", "wqc_vrh")


def sweep_columns(results: list[PointResult]) -> dict:
    row = {
        "hbar": [p.hbar for p in results], "inv_hbar": [1 / p.hbar for p in results],
        "u": [p.u for p in results], "R": [p.R for p in results], "E": [p.E for p in results],
        "omega_c": [p.omega_c for p in results], "b": [p.b for p in results],
        "gs": [p.gs for p in results], "gc": [p.gc for p in results], "g": [p.g for p in results],
        "G_LRT_over_G0": [p.gc for p in results], "G_SLRT_over_G0": [p.g for p in results],
        "gs_untextured": [p.gs_untextured for p in results], "g_untextured": [p.g_untextured for p in results],
        "gs_gaussian": [p.gs_gaussian for p in results], "g_gaussian": [p.g_gaussian for p in results],
        "wqc": [p.wqc for p in results], "wqc_vrh": [p.wqc_vrh for p in results],
    }
    return {k: row[k] for k in SWEEP_COLUMNS}


# -- figures -------------------------------------------------------------

def run_figure3(plan: ExperimentPlan, cache: ArtifactCache | None = None) -> list[Path]:
    """Quantum bandprofiles of each energy window next to the classical spectrum, on an omega/v axis."""
    out = Path(plan.outputs)
    paths = []
    for R in plan.fig3_radii:
        cfg = plan.config.with_(R=R)
        for k, (lo, hi) in enumerate(plan.fig3_windows, start=1):
            E_mid = 0.5 * (lo + hi)
            cfg_w = cfg.with_(E=E_mid)
            sc = derive_scales(cfg_w)
            cm = coupling_matrix(cfg, (lo, hi), cache, plan.seed)
            v = sc.vE
            r_max = max(2, min(len(cm.energies) - 1, int(math.ceil(2.5 * v / cfg.Ly / sc.Delta0))))
            bp = scaled_band_profile(cm.X, cm.energies, E_mid, cfg.mass, sc.Delta0, r_max)
            plain = band_profile(cm.X, r_max=r_max, delta0=sc.Delta0)
            meta = provenance(cfg_w.hash(), plan.seed, kind="bandprofile", window=[lo, hi], R=R,
                              levels=len(cm.energies), markers=_markers(sc))
            paths.append(write_csv(out / f"bandprofile_R{R:g}_EW{k}.csv", {
                "r": bp.r, "omega": bp.omega, "omega_over_v": bp.omega / v,
                "C_quantum": 2 * math.pi / sc.Delta0 * bp.mean,
                "C_quantum_over_v3": 2 * math.pi / sc.Delta0 * bp.mean / v ** 3,
                "median": bp.median, "count": bp.count, "mean_unscaled": plain.mean,
            }, meta))
        cfg_c = cfg.with_(E=plan.config.E)
        spec = classical_spectrum(cfg_c, plan.classical, plan.seed)
        paths.append(write_spectrum(out / f"classical_R{R:g}.csv", cfg_c, spec, plan.seed))
    return paths


def _markers(sc) -> dict:
    return {"1/tL": 1 / sc.tL, "1/tR": 1 / sc.tR, "Delta0": sc.Delta0,
            "1/tL_over_v": 1 / sc.tL / sc.vE, "1/tR_over_v": 1 / sc.tR / sc.vE, "Delta0_over_v": sc.Delta0 / sc.vE}


def write_spectrum(path, cfg: BilliardConfig, spec: PowerSpectrum, seed) -> Path:
    sc = derive_scales(cfg)
    meta = provenance(cfg.hash(), seed, kind="classical-spectrum", n_segments=spec.n_segments,
                      segment_time=spec.segment_time, C_inf=analytic_Cinf(cfg), markers=_markers(sc))
    return write_csv(path, {
        "omega": spec.omega, "omega_over_v": spec.omega / sc.vE, "C": spec.value, "stderr": spec.stderr,
        "C_over_v3": spec.value / sc.vE ** 3,
    }, meta)


def run_figure4(plan: ExperimentPlan, threads: int = 1) -> list[Path]:
    """g versus 1/hbar at the plan's shape, and g versus u at fixed hbar."""
    out = Path(plan.outputs)
    cfg = plan.config
    upper = sweep([(cfg, 1 / x) for x in plan.sweep_inv_hbar], plan.response, plan.seed, threads)
    lower = sweep([(cfg.with_(R=cfg.Ly / u), plan.sweep_u_hbar) for u in plan.sweep_u],
                  plan.response, plan.seed, threads)
    meta = provenance(plan.hash(), plan.seed, kind="g-sweep", response=asdict(plan.response))
    return [
        write_csv(out / "g_vs_hbar.csv", sweep_columns(upper), dict(meta, sweep="inv_hbar", R=cfg.R)),
        write_csv(out / "g_vs_u.csv", sweep_columns(lower), dict(meta, sweep="u", hbar=plan.sweep_u_hbar)),
    ]


def with_outputs(plan: ExperimentPlan, outputs) -> ExperimentPlan:
    return replace(plan, outputs=str(outputs))
