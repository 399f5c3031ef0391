"""Classical billiard dynamics and the power spectrum of the piston force.

The force on the piston is a train of impulses ``2 m v cos(theta_j)`` at the
collision times ``t_j``; its power spectrum controls the classical (Kubo)
absorption.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, GeometryError, InsufficientDataError
from .geometry import BilliardConfig, deformation_profile, derive_scales, speed

# wall labels
PISTON, BOTTOM, TOP, ARC = 0, 1, 2, 3
_T_GUARD = 1e-12


@dataclass
class ImpulseTrain:
    """Piston collisions of a single trajectory."""

    times: np.ndarray
    theta: np.ndarray
    total_time: float
    vE: float
    mass: float
    wall_counts: dict = field(default_factory=dict)
    final_state: tuple = ()

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.times.shape != self.theta.shape:
            raise ValueError("times and theta must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("collision times must be strictly increasing")
        if np.any(np.abs(self.theta) >= math.pi / 2):
            raise ValueError("collision angles must satisfy |theta| < pi/2")

    def __len__(self):
        return len(self.times)

    @property
    def impulses(self) -> np.ndarray:
        return 2 * self.mass * self.vE * np.cos(self.theta)


@dataclass
class PowerSpectrum:
    omega: np.ndarray
    value: np.ndarray
    stderr: np.ndarray
    n_segments: int
    segment_time: float


class _Walls:
    """Precomputed geometry used by the collision stepper."""

    def __init__(self, cfg: BilliardConfig):
        self.Lx, self.Ly = cfg.Lx, cfg.Ly
        self.flat = not math.isfinite(cfg.R)
        self.R = cfg.R
        self.cy = cfg.yc
        self.cx = 0.0 if self.flat else -math.sqrt(cfg.R ** 2 - cfg.yc ** 2)

    def inside(self, x, y, tol=1e-9):
        if not (-tol <= y <= self.Ly + tol and x <= self.Lx + tol):
            return False
        if self.flat:
            return x >= -tol
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 >= self.R ** 2 * (1 - tol)

    def next_hit(self, x, y, vx, vy):
        """Time to the next wall, the wall label, and the reflected velocity."""
        t, wall = math.inf, -1
        if vx > 0:
            t, wall = (self.Lx - x) / vx, PISTON
        if vy > 0:
            tt = (self.Ly - y) / vy
            if tt < t:
                t, wall = tt, TOP
        elif vy < 0:
            tt = -y / vy
            if tt < t:
                t, wall = tt, BOTTOM
        if self.flat:
            if vx < 0:
                tt = -x / vx
                if tt < t:
                    t, wall = tt, ARC
        else:
            dx, dy = x - self.cx, y - self.cy
            b = dx * vx + dy * vy
            if b < 0:
                a = vx * vx + vy * vy
                disc = b * b - a * (dx * dx + dy * dy - self.R * self.R)
                if disc > 0:
                    tt = (-b - math.sqrt(disc)) / a
                    if _T_GUARD < tt < t:
                        t, wall = tt, ARC
        if wall < 0:
            raise GeometryError(f"no wall ahead of ({x}, {y}) moving ({vx}, {vy})")
        return t, wall


def _reflect(walls: _Walls, wall, x, y, vx, vy):
    if wall == PISTON:
        return -vx, vy
    if wall in (TOP, BOTTOM):
        return vx, -vy
    if walls.flat:
        return -vx, vy
    nx, ny = (x - walls.cx) / walls.R, (y - walls.cy) / walls.R
    # renormalise n so that |v| is preserved to roundoff
    nn = math.hypot(nx, ny)
    nx, ny = nx / nn, ny / nn
    p = 2 * (vx * nx + vy * ny)
    return vx - p * nx, vy - p * ny


def random_initial_condition(cfg: BilliardConfig, rng: np.random.Generator):
    """Uniform position inside the billiard and uniform direction."""
    walls = _Walls(cfg)
    while True:
        x, y = rng.uniform(0, cfg.Lx), rng.uniform(0, cfg.Ly)
        if walls.inside(x, y, tol=0.0) and x > deformation_profile(y, cfg):
            return x, y, rng.uniform(0, 2 * math.pi)


def bounce_sequence(cfg: BilliardConfig, state, n_bounces: int):
    """Follow ``n_bounces`` wall collisions from ``state = (x, y, vx, vy)``.

    Returns an array of hit points (rows ``x, y``), the wall labels and the
    final state just after the last reflection.
    """
    walls = _Walls(cfg)
    x, y, vx, vy = map(float, state)
    pts = np.empty((n_bounces, 2))
    labels = np.empty(n_bounces, dtype=int)
    for k in range(n_bounces):
        t, wall = walls.next_hit(x, y, vx, vy)
        x += vx * t
        y += vy * t
        vx, vy = _reflect(walls, wall, x, y, vx, vy)
        pts[k] = x, y
        labels[k] = wall
    return pts, labels, (x, y, vx, vy)


def simulate(cfg: BilliardConfig, x0=None, y0=None, dir0=None, n_collisions: int = 10_000,
             seed: int = 0, max_bounces: int | None = None) -> ImpulseTrain:
    """Run one trajectory until ``n_collisions`` piston hits are recorded.

    Missing initial-condition components are drawn from the ergodic measure
    using ``seed``.  ``dir0`` is the angle of the velocity with the x axis.
    The recorded angle is measured from the piston normal, so that
    ``cos(theta) = |vx|/vE`` at impact.
    """
    if n_collisions < 1:
        raise ValueError("n_collisions must be >= 1")
    rng = np.random.default_rng(seed)
    if x0 is None or y0 is None or dir0 is None:
        rx, ry, rd = random_initial_condition(cfg, rng)
        x0 = rx if x0 is None else x0
        y0 = ry if y0 is None else y0
        dir0 = rd if dir0 is None else dir0
    walls = _Walls(cfg)
    if not (walls.inside(x0, y0, tol=0.0) and 0 < y0 < cfg.Ly and x0 < cfg.Lx
            and x0 > deformation_profile(y0, cfg)):
        raise ValueError(f"initial point ({x0}, {y0}) is not strictly inside the billiard")

    vE = speed(cfg)
    x, y = float(x0), float(y0)
    vx, vy = vE * math.cos(dir0), vE * math.sin(dir0)
    max_bounces = 1000 * n_collisions + 1000 if max_bounces is None else max_bounces

    times = np.empty(n_collisions)
    theta = np.empty(n_collisions)
    counts = [0, 0, 0, 0]
    next_hit = walls.next_hit
    t_now = 0.0
    n = 0
    for _ in range(max_bounces):
        t, wall = next_hit(x, y, vx, vy)
        t_now += t
        x += vx * t
        y += vy * t
        counts[wall] += 1
        if wall == PISTON:
            times[n] = t_now
            theta[n] = math.atan2(vy, vx)
            n += 1
            x = walls.Lx
            vx = -vx
            if n == n_collisions:
                break
        elif wall == TOP or wall == BOTTOM:
            y = walls.Ly if wall == TOP else 0.0
            vy = -vy
        else:
            vx, vy = _reflect(walls, wall, x, y, vx, vy)
            if not walls.inside(x, y, tol=1e-9):
                raise GeometryError(f"trajectory escaped at ({x}, {y})")
    if n < n_collisions:
        raise GeometryError(f"only {n} piston hits in {max_bounces} bounces")
    return ImpulseTrain(
        times=times, theta=theta, total_time=t_now, vE=vE, mass=cfg.mass,
        wall_counts=dict(zip(("piston", "bottom", "top", "arc"), counts)),
        final_state=(x, y, vx, vy),
    )


def segment_periodogram(times, weights, t0, T, omega) -> np.ndarray:
    """``|sum_j w_j exp(i omega (t_j - t0))|**2 / T`` with the mean force removed.

    The constant part ``sum(w)/T`` of the force over ``[t0, t0 + T)`` is
    subtracted before transforming, which nulls the estimate at
    ``omega = 2 pi k / T``.
    """
    omega = np.asarray(omega, dtype=float)
    tau = np.asarray(times, dtype=float) - t0
    w = np.asarray(weights, dtype=float)
    amp = np.exp(1j * np.outer(omega, tau)) @ w
    mean_force = w.sum() / T
    # transform of a constant force over the segment
    amp -= mean_force * np.expm1(1j * omega * T) / (1j * omega)
    return np.abs(amp) ** 2 / T


def power_spectrum(train: ImpulseTrain, omega_grid, segment_time: float,
                   min_segments: int = 8) -> PowerSpectrum:
    """Bartlett-averaged estimate of the force power spectrum.

    The train is cut into consecutive segments of length ``segment_time``;
    each contributes one periodogram and the standard error comes from the
    scatter between segments.
    """
    omega = np.asarray(omega_grid, dtype=float)
    if np.any(omega <= 0) or np.any(np.diff(omega) <= 0):
        raise ValueError("omega grid must be positive and strictly increasing")
    n_seg = int(train.total_time // segment_time)
    if n_seg < min_segments:
        raise InsufficientDataError(
            f"{n_seg} segments of length {segment_time} (need {min_segments})")
    q = train.impulses
    edges = np.searchsorted(train.times, np.arange(n_seg + 1) * segment_time)
    acc = np.zeros_like(omega)
    acc2 = np.zeros_like(omega)
    for k in range(n_seg):
        lo, hi = edges[k], edges[k + 1]
        p = segment_periodogram(train.times[lo:hi], q[lo:hi], k * segment_time,
                                segment_time, omega)
        acc += p
        acc2 += p * p
    mean = acc / n_seg
    var = np.maximum(acc2 / n_seg - mean ** 2, 0.0)
    stderr = np.sqrt(var / max(n_seg - 1, 1))
    return PowerSpectrum(omega=omega, value=mean, stderr=stderr, n_segments=n_seg,
                         segment_time=segment_time)


def analytic_Cinf(cfg: BilliardConfig, E: float | None = None) -> float:
    """High-frequency plateau (8/3pi) m^2 v^3 / Lx of uncorrelated collisions."""
    v = speed(cfg, E)
    return 8 / (3 * math.pi) * cfg.mass ** 2 * v ** 3 / cfg.Lx


def low_freq_slope(cfg: BilliardConfig, E: float | None = None) -> float:
    """Coefficient of ln(1/omega) in the low-frequency spectrum."""
    v = speed(cfg, E)
    return cfg.mass ** 2 * v ** 3 * cfg.R / (2 * cfg.Lx ** 2)


def analytic_low_freq(cfg: BilliardConfig, omega):
    """Bouncing-enhanced spectrum m^2 v^3 R/(2 Lx^2) ln(2/(omega tR)), omega << 1/tL."""
    sc = derive_scales(cfg)
    om = np.asarray(omega, dtype=float)
    if np.any(om <= 0) or np.any(om >= 1 / sc.tL):
        raise ValueError("analytic_low_freq requires 0 < omega < 1/tL")
    out = low_freq_slope(cfg) * np.log(2 / (om * sc.tR))
    return float(out) if np.ndim(omega) == 0 else out


def bin_average(spec: PowerSpectrum, centers, width: float) -> np.ndarray:
    """Mean of the spectrum over ``[c - width/2, c + width/2)`` for each centre ``c``."""
    out = np.full(len(centers), np.nan)
    for k, c in enumerate(np.asarray(centers, dtype=float)):
        m = (spec.omega >= c - width / 2) & (spec.omega < c + width / 2)
        if m.any():
            out[k] = spec.value[m].mean()
    return out


def first_minimum(spec: PowerSpectrum, smooth: int = 5) -> float:
    """Frequency of the first local minimum of a (smoothed) spectrum."""
    v = spec.value
    if smooth > 1:
        kernel = np.ones(smooth) / smooth
        v = np.convolve(np.pad(v, smooth // 2, mode="edge"), kernel, mode="valid")
    for i in range(1, len(v) - 1):
        if v[i] < v[i - 1] and v[i] <= v[i + 1]:
            return float(spec.omega[i])
    raise FitError("spectrum has no interior local minimum on this grid")


def angle_diffusion(train: ImpulseTrain, max_lag: int = 5, min_collisions: int = 10_000) -> float:
    """Diffusion coefficient of the piston collision angle per collision.

    Slope of ``var(|theta_{j+tau}| - |theta_j|) / 2`` against ``tau`` for
    ``tau = 1 .. max_lag``.  ``|theta|`` is used because top/bottom walls
    flip the sign of the angle without changing the motion's slope.
    """
    if len(train) < min_collisions:
        raise InsufficientDataError(f"need >= {min_collisions} piston collisions")
    th = np.abs(train.theta)
    lags = np.arange(1, max_lag + 1)
    half_var = np.array([0.5 * np.mean((th[k:] - th[:-k]) ** 2) for k in lags])
    if np.all(half_var == 0):
        return 0.0
    saturation = np.var(th)
    if half_var[-1] > 0.5 * saturation or np.any(np.diff(half_var) <= 0):
        raise FitError("angle variance saturates before the fit window ends")
    slope = np.polyfit(lags, half_var, 1)[0]
    return float(slope)
