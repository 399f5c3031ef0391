"""Billiard shape, left-wall deformation and the derived classical/quantum scales.

Units follow the usual quantum-billiard convention: Planck's constant is 1 and
the default mass is 1/2, so that an unperturbed level is E = kx**2 + ky**2.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class BilliardConfig:
    """Rectangle ``Lx x Ly`` whose left wall is replaced by a circular arc.

    The arc has radius ``R`` and its centre of curvature sits at height
    ``Ly/2 + dy``.  The right wall (``x = Lx``) is the driven piston.
    ``R = inf`` gives the undeformed rectangle.
    """

    Lx: float = 1.5
    Ly: float = 1.0
    R: float = 8.0
    dy: float = 0.1
    mass: float = 0.5
    E: float = 4000.0

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ConfigError(f"box sides must be positive, got Lx={self.Lx}, Ly={self.Ly}")
        if not (self.mass > 0 and self.E > 0):
            raise ConfigError("mass and energy must be positive")
        if not self.R > self.Ly:
            raise ConfigError(f"arc radius R={self.R} must exceed Ly={self.Ly}")
        yc = self.yc
        if math.isfinite(self.R):
            if abs(yc) >= self.R or abs(self.Ly - yc) >= self.R:
                raise ConfigError("arc does not span the full wall")
            d = deformation_profile(np.linspace(0.0, self.Ly, 513), self)
            if d.min() < -1e-14 or d.max() >= self.Lx / 2:
                raise ConfigError("deformation must satisfy 0 <= D(y) < Lx/2")

    @property
    def yc(self) -> float:
        """Height of the arc's centre of curvature."""
        return self.Ly / 2 + self.dy

    @property
    def area(self) -> float:
        return self.Lx * self.Ly - deformed_area(self)

    def with_(self, **changes) -> "BilliardConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"lx": self.Lx, "ly": self.Ly, "r": self.R, "dy": self.dy,
                "mass": self.mass, "energy": self.E}

    @classmethod
    def from_dict(cls, d: dict) -> "BilliardConfig":
        """Build from the JSON config block (keys lx, ly, r, dy, mass, energy)."""
        keys = {"lx": "Lx", "ly": "Ly", "r": "R", "dy": "dy", "mass": "mass", "energy": "E"}
        unknown = set(d) - set(keys)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            kw = {keys[k]: float(v) for k, v in d.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config values must be numbers: {exc}") from None
        return cls(**kw)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def config_hash(obj) -> str:
    """Short stable hash of a JSON-serialisable object."""
    blob = json.dumps(obj, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def deformation_profile(y, cfg: BilliardConfig):
    """Inward displacement D(y) of the left wall.

    The arc is pinned at the lower-left corner, D(0) = 0, and bulges into
    the billiard.  Accepts scalars or arrays; raises ValueError outside
    ``[0, Ly]``.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0) or np.any(y_arr > cfg.Ly):
        raise ValueError(f"y must lie in [0, {cfg.Ly}]")
    if not math.isfinite(cfg.R):
        out = np.zeros_like(y_arr)
    else:
        R, yc = cfg.R, cfg.yc
        out = np.sqrt(R * R - (y_arr - yc) ** 2) - math.sqrt(R * R - yc * yc)
    return float(out) if np.ndim(y) == 0 else out


def deformation_slope(y, cfg: BilliardConfig):
    """dD/dy of the wall profile."""
    y_arr = np.asarray(y, dtype=float)
    if not math.isfinite(cfg.R):
        out = np.zeros_like(y_arr)
    else:
        out = -(y_arr - cfg.yc) / np.sqrt(cfg.R ** 2 - (y_arr - cfg.yc) ** 2)
    return float(out) if np.ndim(y) == 0 else out


def deformed_area(cfg: BilliardConfig) -> float:
    """Area cut off the rectangle by the bulging wall."""
    if not math.isfinite(cfg.R):
        return 0.0
    x, w = np.polynomial.legendre.leggauss(64)
    y = 0.5 * cfg.Ly * (x + 1)
    return float(0.5 * cfg.Ly * np.sum(w * deformation_profile(y, cfg)))


def arc_length(cfg: BilliardConfig) -> float:
    if not math.isfinite(cfg.R):
        return cfg.Ly
    R, yc = cfg.R, cfg.yc
    return R * (math.asin((cfg.Ly - yc) / R) + math.asin(yc / R))


def perimeter(cfg: BilliardConfig) -> float:
    """Boundary length of the deformed billiard."""
    top = cfg.Lx - deformation_profile(cfg.Ly, cfg)
    return cfg.Lx + top + cfg.Ly + arc_length(cfg)


@dataclass(frozen=True)
class ScaleSet:
    vE: float
    lambdaE: float
    hbar: float
    u: float
    Delta0: float
    DeltaL: float
    DeltaR: float
    tL: float
    tR: float
    tH: float
    tE: float
    ub: float
    uc: float
    us: float
    b: float

    def as_dict(self) -> dict:
        return asdict(self)


def speed(cfg: BilliardConfig, E: float | None = None) -> float:
    E = cfg.E if E is None else E
    return math.sqrt(2 * E / cfg.mass)


def mean_level_spacing(cfg: BilliardConfig) -> float:
    """Leading-order (Weyl) mean level spacing 2*pi/(m*Lx*Ly)."""
    return 2 * math.pi / (cfg.mass * cfg.Lx * cfg.Ly)


def derive_scales(cfg: BilliardConfig, omega_c: float | None = None) -> ScaleSet:
    """All characteristic scales at energy ``cfg.E``.

    The billiard's linear size is taken to be ``Ly``; the deformation is
    ``u = Ly/R``.  When ``omega_c`` is omitted the bandwidth uses the
    Lyapunov frequency ``DeltaR``.
    """
    if omega_c is not None and not omega_c > 0:
        raise ValueError("omega_c must be positive")
    L = cfg.Ly
    vE = speed(cfg)
    lam = 2 * math.pi / (cfg.mass * vE)
    hbar = lam / L
    u = L / cfg.R
    d0 = mean_level_spacing(cfg)
    tL = L / vE
    tR = cfg.R / vE
    DeltaR = 2 * math.pi / tR
    omega_c = DeltaR if omega_c is None else omega_c
    return ScaleSet(
        vE=vE, lambdaE=lam, hbar=hbar, u=u, Delta0=d0,
        DeltaL=2 * math.pi / tL, DeltaR=DeltaR,
        tL=tL, tR=tR, tH=2 * math.pi / d0, tE=math.log(1 / hbar) * tR,
        ub=hbar, uc=hbar ** 2, us=math.sqrt(hbar),
        b=omega_c / d0,
    )


def energy_for_hbar(hbar: float, cfg: BilliardConfig = BilliardConfig()) -> float:
    """Energy at which the dimensionless Planck constant equals ``hbar``."""
    vE = 2 * math.pi / (cfg.mass * hbar * cfg.Ly)
    return 0.5 * cfg.mass * vE ** 2
