import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from billiard_slrt.errors import TruncationWarning
from billiard_slrt.geometry import BilliardConfig, deformation_profile, mean_level_spacing
from billiard_slrt.quantum import (CouplingMatrix, basis_F, build_F, build_U, diagonalize, rect_basis, solve,
                                   truncation_shift, wall_displacement_U, weyl_count)


def test_rect_basis_contents():
    c = BilliardConfig()
    b = rect_basis(c, 2000.0)
    assert np.all(b.nx >= 1) and np.all(b.ny >= 1)
    assert np.all(np.diff(b.energies) >= 0) and b.energies.max() <= 2000.0
    E0 = (np.pi * b.nx / c.Lx) ** 2 + (np.pi * b.ny / c.Ly) ** 2
    assert np.allclose(b.energies, E0)
    # brute-force enumeration of the same set
    count = sum(1 for i in range(1, 100) for j in range(1, 100)
                if (np.pi * i / c.Lx) ** 2 + (np.pi * j / c.Ly) ** 2 <= 2000.0)
    assert len(b) == count


def test_undeformed_spectrum():
    c = BilliardConfig(R=math.inf)
    b = rect_basis(c, 400.0)
    U = build_U(b, c)
    assert not U.any()
    sw = diagonalize(b, U, (0.0, 200.0))
    assert sw.energies[0] == pytest.approx(np.pi ** 2 * (1 / 2.25 + 1), rel=1e-12)
    assert sw.energies[0] == pytest.approx(14.26, abs=0.01)
    assert np.allclose(sw.energies, b.energies[b.energies <= 200.0])


def _fd_levels(cfg, h, k=5):
    nx, ny = int(round(cfg.Lx / h)) - 1, int(round(cfg.Ly / h)) - 1
    X, Y = np.meshgrid(np.arange(1, nx + 1) * h, np.arange(1, ny + 1) * h, indexing="ij")
    keep = np.flatnonzero((X > deformation_profile(Y, cfg)).ravel())
    lap = lambda n: sp.diags([2 * np.ones(n), -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1]) / h ** 2
    A = (sp.kron(lap(nx), sp.eye(ny)) + sp.kron(sp.eye(nx), lap(ny))).tocsr()[keep][:, keep]
    return np.sort(spl.eigsh(A, k=k, sigma=0, return_eigenvectors=False))


def test_low_levels_against_finite_differences():
    # staircase finite differences converge like h; extrapolate from two grids
    c = BilliardConfig(R=2.0)
    _, sw = solve(c, (0.0, 70.0), cutoff=3000.0)
    fd = 2 * _fd_levels(c, 1 / 200) - _fd_levels(c, 1 / 100)
    assert np.allclose(sw.energies[:5], fd, rtol=1e-3)


def test_U_symmetric_and_levels_rise():
    c = BilliardConfig()
    b = rect_basis(c, 1500.0)
    U = build_U(b, c)
    assert np.array_equal(U, U.T)
    # an inward bulge shrinks the domain, so every level goes up
    _, sw = solve(c, (0.0, 700.0))
    E0 = b.energies[b.energies <= 700.0]
    assert np.all(sw.energies[:len(E0) - 3] >= E0[:len(E0) - 3])


def test_parity_selection_without_shift():
    c = BilliardConfig(dy=0.0)
    b = rect_basis(c, 1500.0)
    U = build_U(b, c)
    odd = (b.ny[:, None] - b.ny[None, :]) % 2 == 1
    assert np.abs(U[odd]).max() < 1e-9 * np.abs(U).max()
    assert np.abs(U[~odd]).max() > 0


def test_dominant_elements_have_large_nx_small_dny():
    c = BilliardConfig()
    b = rect_basis(c, 4000.0)
    U = build_U(b, c)
    i, j = np.triu_indices(len(b), 1)
    top = np.argsort(np.abs(U[i, j]))[-len(i) // 100:]
    assert np.median(np.abs(b.ny[i[top]] - b.ny[j[top]])) < np.median(np.abs(b.ny[i] - b.ny[j]))
    assert np.median(b.nx[i[top]]) > np.median(b.nx)


def test_exact_map_matches_first_order_wall_formula_for_small_deformation():
    c = BilliardConfig(R=400.0)
    b = rect_basis(c, 800.0)
    U, U1 = build_U(b, c), wall_displacement_U(b, c)
    assert np.allclose(np.diag(U), np.diag(U1), rtol=0.02)


def test_first_order_perturbation_theory_when_u_below_uc():
    # u = 0.0025, far below hbar^2 ~ 0.1 at these energies
    c = BilliardConfig(R=400.0)
    b = rect_basis(c, 800.0)
    U = build_U(b, c)
    sw = diagonalize(b, U, (0.0, 400.0))
    E0 = b.energies[:len(sw.energies)]
    gaps = np.minimum(np.diff(E0, prepend=-np.inf), np.diff(E0, append=np.inf))
    ok = gaps > 50 * np.abs(U[:len(E0)]).max()
    assert ok.sum() >= 5
    shift, first = (sw.energies - E0)[ok], np.diag(U)[:len(E0)][ok]
    assert np.allclose(shift, first, rtol=0.1)


def test_diagonalize_contract(window_3500):
    basis, sw, _ = window_3500
    assert np.all(np.diff(sw.energies) >= 0)
    assert np.allclose(np.linalg.norm(sw.vectors, axis=0), 1.0, atol=1e-10)
    with pytest.raises(ValueError):
        diagonalize(rect_basis(BilliardConfig(), 7000.0), np.zeros((1, 1)), (3500.0, 4000.0))


def test_window_level_count(window_3500):
    _, sw, _ = window_3500
    c = BilliardConfig()
    assert weyl_count(c, 3500, 4000) == pytest.approx(59.7, abs=0.05)
    assert len(sw.energies) == pytest.approx(59.7, rel=0.05)


def test_truncation_is_small_at_default_window(window_3500):
    _, sw, _ = window_3500
    assert truncation_shift(BilliardConfig(), sw) < 0.1 * mean_level_spacing(BilliardConfig())


def test_truncation_warning_for_strong_deformation():
    c = BilliardConfig(R=1.5, dy=0.0)
    with pytest.warns(TruncationWarning):
        solve(c, (1500.0, 2000.0), check=True)


def test_F_undeformed_closed_form():
    c = BilliardConfig(R=math.inf)
    b, sw = solve(c, (0.0, 600.0))
    cm = build_F(sw, b, c)
    nx = b.nx[:len(sw.energies)]
    ny = b.ny[:len(sw.energies)]
    assert np.allclose(np.diag(cm.F), -np.pi ** 2 * nx ** 2 / (c.mass * c.Lx ** 3))
    off = ny[:, None] != ny[None, :]
    assert np.abs(cm.F[off]).max() < 1e-9 * np.abs(cm.F).max()


def test_F_against_direct_y_quadrature(window_3500):
    # normal derivative at the piston: a^{-3/2} d chi/ds, integrated on a fine trapezoid grid
    basis, sw, cm = window_3500
    c = BilliardConfig()
    y = np.linspace(0, c.Ly, 8001)
    a = 1 - deformation_profile(y, c) / c.Lx
    ds = math.sqrt(2 / c.Lx) * (np.pi * basis.nx / c.Lx) * (-1.0) ** basis.nx
    modes = math.sqrt(2 / c.Ly) * np.sin(np.pi * np.outer(basis.ny, y) / c.Ly)
    dpsi = (sw.vectors.T * ds) @ modes * a ** -1.5
    w = np.full(len(y), y[1] - y[0])
    w[[0, -1]] /= 2
    F = -(1 / (2 * c.mass)) * (dpsi * w) @ dpsi.T
    assert np.allclose(cm.F, F, atol=1e-6 * np.abs(F).max())


def test_F_rotation_identity(window_3500):
    basis, sw, cm = window_3500
    c = BilliardConfig()
    assert np.array_equal(cm.F, cm.F.T)
    F0 = basis_F(basis, c)
    assert np.trace(cm.F) == pytest.approx(np.trace(sw.vectors.T @ F0 @ sw.vectors), rel=1e-8)
    assert np.all(np.diag(cm.X) > 0)


def test_coupling_matrix_windows():
    F = np.arange(36.0).reshape(6, 6)
    cm = CouplingMatrix(F + F.T, np.arange(6.0) * 10)
    sub = cm.centered(25.0, 2)
    assert np.array_equal(sub.energies, [20.0, 30.0])
    assert cm.centered(-5.0, 3).energies[0] == 0.0
    assert cm.centered(99.0, 3).energies[-1] == 50.0
    with pytest.raises(ValueError):
        cm.centered(0.0, 7)
    assert np.array_equal(cm.X, (F + F.T) ** 2)
