"""Truncated-basis diagonalisation of the deformed billiard and the piston coupling.

The deformed domain ``D(y) < x < Lx`` is mapped onto the rectangle by
``x = D(y) + s * a(y)`` with ``a = 1 - D/Lx``.  Writing the wavefunction as
``psi = chi / sqrt(a)`` keeps the rectangle's L2 inner product, so the
kinetic energy becomes an ordinary symmetric matrix in the sine basis of the
rectangle.  The map leaves the piston at ``s = Lx`` and only rescales the
normal derivative there by ``a(y)**-1.5``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import QuadratureError, TruncationWarning
from .geometry import BilliardConfig, deformation_profile, deformation_slope, mean_level_spacing


@dataclass
class RectBasis:
    nx: np.ndarray
    ny: np.ndarray
    energies: np.ndarray
    cutoff: float
    Lx: float
    Ly: float
    mass: float

    def __len__(self):
        return len(self.nx)


@dataclass
class SpectrumWindow:
    energies: np.ndarray
    vectors: np.ndarray
    window: tuple
    cutoff: float

    def __len__(self):
        return len(self.energies)


@dataclass
class CouplingMatrix:
    F: np.ndarray
    energies: np.ndarray

    @property
    def X(self) -> np.ndarray:
        return self.F ** 2

    def sub(self, start: int, stop: int) -> "CouplingMatrix":
        return CouplingMatrix(self.F[start:stop, start:stop].copy(), self.energies[start:stop].copy())

    def centered(self, E: float, n_levels: int) -> "CouplingMatrix":
        """``n_levels`` consecutive levels centred on energy ``E``."""
        if n_levels > len(self.energies):
            raise ValueError(f"window holds only {len(self.energies)} levels")
        mid = int(np.searchsorted(self.energies, E))
        start = min(max(mid - n_levels // 2, 0), len(self.energies) - n_levels)
        return self.sub(start, start + n_levels)


def rect_basis(cfg: BilliardConfig, cutoff: float) -> RectBasis:
    """All Dirichlet rectangle modes with unperturbed energy <= cutoff, sorted by energy."""
    c = 1 / (2 * cfg.mass)
    kx, ky = math.pi / cfg.Lx, math.pi / cfg.Ly
    nx_max = int(math.sqrt(cutoff / c) / kx) + 1
    ny_max = int(math.sqrt(cutoff / c) / ky) + 1
    NX, NY = np.meshgrid(np.arange(1, nx_max + 1), np.arange(1, ny_max + 1), indexing="ij")
    E0 = c * ((kx * NX) ** 2 + (ky * NY) ** 2)
    keep = E0 <= cutoff
    nx, ny, E0 = NX[keep], NY[keep], E0[keep]
    order = np.lexsort((ny, nx, E0))
    if len(order) == 0:
        raise ValueError(f"no rectangle mode below cutoff {cutoff}")
    return RectBasis(nx=nx[order], ny=ny[order], energies=E0[order], cutoff=cutoff,
                     Lx=cfg.Lx, Ly=cfg.Ly, mass=cfg.mass)


def _gauss(n, length):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * length * (x + 1), 0.5 * length * w


def _sines(n_max, length, pts):
    k = np.arange(1, n_max + 1)[:, None] * math.pi / length
    norm = math.sqrt(2 / length)
    return norm * np.sin(k * pts), norm * k * np.cos(k * pts)


def _factor_matrices(cfg: BilliardConfig, nx_max: int, ny_max: int, n_s: int, n_y: int) -> dict:
    s, ws = _gauss(n_s, cfg.Lx)
    u, du = _sines(nx_max, cfg.Lx, s)
    w = cfg.Lx - s
    y, wy = _gauss(n_y, cfg.Ly)
    v, dv = _sines(ny_max, cfg.Ly, y)
    D = deformation_profile(y, cfg)
    p = deformation_slope(y, cfg)
    a = 1 - D / cfg.Lx
    alpha = p / (2 * cfg.Lx * a)
    gamma = p / (cfg.Lx * a)

    def yint(f, left, right):
        return (left * (wy * f)) @ right.T

    return {
        "S_ww_dd": (du * (ws * w * w)) @ du.T,
        "S_w_0d": (u * (ws * w)) @ du.T,
        "Y_a2": yint(a ** -2, v, v),
        "Y_a3": yint(a ** -3, v, v),
        "Y_alpha2": yint(alpha ** 2, v, v),
        "Y_gamma2": yint(gamma ** 2, v, v),
        "Y_alpha_vdv": yint(alpha, v, dv),
        "Y_gamma_dvv": yint(gamma, dv, v),
        "Y_alphagamma": yint(alpha * gamma, v, v),
    }


def _converged_factors(cfg, nx_max, ny_max, rtol=1e-8):
    n_s = 2 * nx_max + 64
    n_y = 2 * ny_max + 64
    coarse = _factor_matrices(cfg, nx_max, ny_max, n_s, n_y)
    for _ in range(4):
        fine = _factor_matrices(cfg, nx_max, ny_max, n_s + 48, n_y + 48)
        worst = 0.0
        for key, m in fine.items():
            scale = max(np.abs(m).max(), 1e-300)
            worst = max(worst, np.abs(m - coarse[key]).max() / scale)
        if worst <= rtol:
            return fine
        coarse, n_s, n_y = fine, n_s + 48, n_y + 48
    raise QuadratureError(f"matrix-element quadrature stalled at relative change {worst:.2e}")


def build_H(basis: RectBasis, cfg: BilliardConfig) -> np.ndarray:
    """Full Hamiltonian of the deformed billiard in the rectangle basis."""
    i, k = basis.nx - 1, basis.ny - 1
    f = _converged_factors(cfg, int(basis.nx.max()), int(basis.ny.max()))
    kx2 = (math.pi * basis.nx / cfg.Lx) ** 2
    ky2 = (math.pi * basis.ny / cfg.Ly) ** 2
    same_x = basis.nx[:, None] == basis.nx[None, :]

    def kron(S, Y):
        return S[np.ix_(i, i)] * Y[np.ix_(k, k)]

    H = kx2[:, None] * same_x * f["Y_a2"][np.ix_(k, k)]
    H += np.diag(ky2)
    H += same_x * f["Y_alpha2"][np.ix_(k, k)]
    H += kron(f["S_ww_dd"], f["Y_gamma2"])
    Ya = f["Y_alpha_vdv"]
    H += same_x * (Ya + Ya.T)[np.ix_(k, k)]
    Sw, Yg = f["S_w_0d"], f["Y_gamma_dvv"]
    H -= kron(Sw, Yg) + kron(Sw.T, Yg.T)
    H -= kron(Sw + Sw.T, f["Y_alphagamma"])
    H *= 1 / (2 * cfg.mass)
    return 0.5 * (H + H.T)


def build_U(basis: RectBasis, cfg: BilliardConfig) -> np.ndarray:
    """Deformation part ``H - H0`` of the Hamiltonian in the rectangle basis."""
    if len(basis) == 0:
        raise ValueError("empty basis")
    if not math.isfinite(cfg.R):
        return np.zeros((len(basis), len(basis)))
    return build_H(basis, cfg) - np.diag(basis.energies)


def wall_displacement_U(basis: RectBasis, cfg: BilliardConfig, n_quad: int | None = None) -> np.ndarray:
    """First-order wall-displacement matrix ``(1/2m) int D(y) dphi_n dphi_m dy`` at x = 0.

    Positive ``D`` pushes the wall inward and raises the levels.  Correct to
    first order in ``D`` only; used to check the exact ``build_U``.
    """
    n_quad = n_quad or 2 * int(basis.ny.max()) + 64
    y, wy = _gauss(n_quad, cfg.Ly)
    v, _ = _sines(int(basis.ny.max()), cfg.Ly, y)
    D = deformation_profile(y, cfg)
    Y = (v * (wy * D)) @ v.T
    dx0 = math.sqrt(2 / cfg.Lx) * math.pi * basis.nx / cfg.Lx
    k = basis.ny - 1
    return (1 / (2 * cfg.mass)) * np.outer(dx0, dx0) * Y[np.ix_(k, k)]


def diagonalize(basis: RectBasis, U: np.ndarray, window: tuple, check_cfg: BilliardConfig | None = None,
                residual_tol: float = 1e-8) -> SpectrumWindow:
    """Eigenpairs of ``diag(E0) + U`` with eigenvalue inside ``window``.

    If ``check_cfg`` is given the solve is repeated with a 25 % larger
    cutoff and a ``TruncationWarning`` is issued when any window level moves
    by more than a tenth of the mean level spacing.
    """
    E_lo, E_hi = window
    if basis.cutoff < 2 * E_hi:
        raise ValueError(f"cutoff {basis.cutoff} must be at least 2*E_hi = {2 * E_hi}")
    H = np.diag(basis.energies) + U
    E, V = scipy.linalg.eigh(H, subset_by_value=(E_lo, E_hi), driver="evr")
    res = np.linalg.norm(H @ V - V * E, axis=0)
    if len(E) and np.any(res > residual_tol * np.maximum(np.abs(E), 1.0)):
        raise np.linalg.LinAlgError(f"eigen-residual {res.max():.2e} exceeds tolerance")
    # fixed sign convention: largest component positive
    idx = np.argmax(np.abs(V), axis=0)
    V *= np.sign(V[idx, np.arange(V.shape[1])])
    out = SpectrumWindow(energies=E, vectors=V, window=(E_lo, E_hi), cutoff=basis.cutoff)
    if check_cfg is not None:
        shift = truncation_shift(check_cfg, out)
        if shift > 0.1 * mean_level_spacing(check_cfg):
            warnings.warn(f"cutoff {basis.cutoff:g}: window levels move by {shift:.3g} "
                          "when the basis grows by 25%", TruncationWarning, stacklevel=2)
    return out


def truncation_shift(cfg: BilliardConfig, sw: SpectrumWindow) -> float:
    """Largest eigenvalue shift in the window when the cutoff grows by 25 %."""
    big = rect_basis(cfg, 1.25 * sw.cutoff)
    H = np.diag(big.energies) + build_U(big, cfg)
    pad = 5 * mean_level_spacing(cfg)
    E2 = scipy.linalg.eigvalsh(H, subset_by_value=(sw.window[0] - pad, sw.window[1] + pad))
    if len(sw.energies) == 0:
        return 0.0
    # align on the lowest window level; the spectrum only moves down as the basis grows
    j = int(np.argmin(np.abs(E2 - sw.energies[0])))
    E2 = E2[j:j + len(sw.energies)]
    if len(E2) < len(sw.energies):
        return math.inf
    return float(np.abs(E2 - sw.energies).max())


def solve(cfg: BilliardConfig, window: tuple, cutoff: float | None = None,
          check: bool = False) -> tuple[RectBasis, SpectrumWindow]:
    """Basis, deformation matrix and windowed eigenpairs in one call."""
    cutoff = 2 * window[1] if cutoff is None else cutoff
    basis = rect_basis(cfg, cutoff)
    U = build_U(basis, cfg)
    return basis, diagonalize(basis, U, window, check_cfg=cfg if check else None)


def piston_derivatives(basis: RectBasis, cfg: BilliardConfig) -> np.ndarray:
    """d/ds of each basis mode at the piston, ``sqrt(2/Lx) (pi nx/Lx) (-1)**nx``."""
    return math.sqrt(2 / cfg.Lx) * (math.pi * basis.nx / cfg.Lx) * (-1.0) ** basis.nx


def basis_F(basis: RectBasis, cfg: BilliardConfig) -> np.ndarray:
    """Piston coupling ``-(1/2m) int dphi_n dphi_m dy`` in the rectangle basis."""
    d = piston_derivatives(basis, cfg)
    ny_max = int(basis.ny.max())
    y, wy = _gauss(2 * ny_max + 64, cfg.Ly)
    v, _ = _sines(ny_max, cfg.Ly, y)
    a = 1 - deformation_profile(y, cfg) / cfg.Lx
    Y = (v * (wy * a ** -3)) @ v.T
    k = basis.ny - 1
    return -(1 / (2 * cfg.mass)) * np.outer(d, d) * Y[np.ix_(k, k)]


def build_F(sw: SpectrumWindow, basis: RectBasis, cfg: BilliardConfig) -> CouplingMatrix:
    """Rotate the basis-space piston coupling into the eigenbasis of the window."""
    F0 = basis_F(basis, cfg)
    F = sw.vectors.T @ F0 @ sw.vectors
    F = 0.5 * (F + F.T)
    return CouplingMatrix(F=F, energies=sw.energies.copy())


def weyl_count(cfg: BilliardConfig, E_lo: float, E_hi: float) -> float:
    """Leading Weyl estimate of the number of levels in ``(E_lo, E_hi)``."""
    return cfg.mass * cfg.Lx * cfg.Ly * (E_hi - E_lo) / (2 * math.pi)
