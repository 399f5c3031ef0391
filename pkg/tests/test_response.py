import math

import numpy as np
import pytest
import scipy.integrate
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from billiard_slrt.classical import analytic_Cinf
from billiard_slrt.geometry import BilliardConfig, derive_scales, energy_for_hbar, speed
from billiard_slrt.matrixstats import SurrogateSpec, make_surrogate
from billiard_slrt.response import (DrivingSpec, WeightFunction, _kron_reduce, algebraic_average,
                                    amplitude_window, box_weights, conductance_matrix, feasibility, g_factors,
                                    network_average, two_probe_conductance, vrh_correct, weight_from_driving,
                                    wqc_estimate)


def _sym(A):
    A = np.triu(A, 1)
    return A + A.T


def _nn_weights():
    return box_weights(1)


# -- driving and weights ---------------------------------------------------

def test_spectral_function_integrates_to_eps_squared():
    d = DrivingSpec(epsilon=0.7, omega_c=3.0)
    val, _ = scipy.integrate.quad(d.spectral_function, -np.inf, np.inf, epsabs=1e-12)
    assert val == pytest.approx(0.49, rel=1e-6)
    with pytest.raises(ValueError):
        DrivingSpec(-1.0, 1.0)
    with pytest.raises(ValueError):
        DrivingSpec(1.0, 0.0)


def test_weight_normalisation_and_symmetry():
    w = weight_from_driving(DrivingSpec(1.0, 4.0), 1.0, 40)
    r = np.arange(-40, 41)
    vals = w(r)
    assert vals[r == 0] == 0
    assert np.allclose(vals, vals[::-1])
    assert vals.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(vals >= 0)
    assert w(41) == 0


def test_flat_limit():
    with pytest.warns(UserWarning):
        w = weight_from_driving(DrivingSpec(1.0, 1e9), 1.0, 20)
    assert np.allclose(w(np.arange(1, 21)), 1 / 40, rtol=1e-6)


def test_geometric_weights_closed_form():
    M = 50
    w = weight_from_driving(DrivingSpec(1.0, 1.0), 1.0, M)
    e = math.exp(-1)
    assert w(1) == pytest.approx((1 - e) / (2 * (1 - e ** M)), rel=1e-12)
    assert w(3) / w(2) == pytest.approx(e)


def test_weight_tail_warning_and_errors():
    with pytest.warns(UserWarning):
        weight_from_driving(DrivingSpec(1.0, 10.0), 1.0, 20)
    with pytest.raises(ValueError):
        weight_from_driving(DrivingSpec(1.0, 1.0), 1.0, 0)
    with pytest.raises(ValueError):
        WeightFunction(np.array([1.0, -1.0]))


# -- network ---------------------------------------------------------------

def test_series_resistors_harmonic_mean():
    a, b = 2.0, 5.0
    X = np.zeros((3, 3))
    X[0, 1] = X[1, 0] = a
    X[1, 2] = X[2, 1] = b
    g = conductance_matrix(X, _nn_weights())
    # nearest-neighbour weight is 1/2 on each side, so conductors are a and b
    assert two_probe_conductance(g) == pytest.approx(a * b / (a + b))
    X10 = np.ones((10, 10))
    for i in range(9):
        X10[i, i + 1] = X10[i + 1, i] = a if i % 2 == 0 else b
    # nine links alternate a, b: calibrated value is the harmonic mean of the links
    links = [a if i % 2 == 0 else b for i in range(9)]
    assert network_average(X10, _nn_weights()) == pytest.approx(len(links) / sum(1 / x for x in links))


def test_broken_chain_is_zero():
    X = np.ones((12, 12))
    X[5, :] = X[:, 5] = 0.0
    assert network_average(X, _nn_weights()) == 0.0
    assert two_probe_conductance(np.zeros((4, 4))) == 0.0


def test_network_needs_ten_levels_and_square():
    with pytest.raises(ValueError):
        network_average(np.ones((9, 9)), _nn_weights())
    with pytest.raises(ValueError):
        network_average(np.ones((10, 11)), _nn_weights())


def test_kron_reduction_matches_laplacian_solve():
    rng = np.random.default_rng(0)
    g = _sym(rng.lognormal(0, 2, (60, 60)))
    lap = np.diag(g.sum(1)) - g
    red = lap[1:, 1:]
    rhs = np.zeros(59)
    rhs[-1] = 1.0  # current into node 59, node 0 grounded
    v = np.linalg.solve(red, rhs)
    assert _kron_reduce(g, 0, 59) == pytest.approx(1 / v[-1], rel=1e-10)


def test_iterative_path_for_large_networks():
    n = 1200
    rng = np.random.default_rng(1)
    diags = [rng.uniform(0.5, 2.0, n - k) for k in (1, 2, 3)]
    g = sp.diags(diags + diags, [1, 2, 3, -1, -2, -3]).toarray()
    g = 0.5 * (g + g.T)
    G = two_probe_conductance(g)
    lap = sp.csr_matrix(np.diag(g.sum(1)) - g)[1:, 1:]
    rhs = np.zeros(n - 1)
    rhs[-1] = 1.0
    assert G == pytest.approx(1 / spl.spsolve(lap.tocsc(), rhs)[-1], rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(10, 80), x0=st.floats(1e-6, 1e6), wc=st.floats(0.3, 20.0))
def test_uniform_identity(n, x0, wc):
    w = weight_from_driving(DrivingSpec(1.0, wc), 1.0, n - 1) if 5 * wc <= n - 1 else box_weights(n - 1)
    assert network_average(np.full((n, n), x0), w) == pytest.approx(x0, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(arrays(float, (14, 14), elements=st.floats(1e-3, 1e3)), st.floats(1e-3, 1e3))
def test_linearity(A, c):
    X = _sym(A) + np.eye(14)
    w = weight_from_driving(DrivingSpec(1.0, 2.0), 1.0, 13)
    assert network_average(c * X, w) == pytest.approx(c * network_average(X, w), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(arrays(float, (12, 12), elements=st.floats(1e-3, 1e3)), st.integers(0, 11), st.integers(0, 11),
       st.floats(1.0, 100.0))
def test_rayleigh_monotonicity(A, i, j, factor):
    assume(i != j)
    X = _sym(A)
    w = box_weights(11)
    before = network_average(X, w)
    X[i, j] *= factor
    X[j, i] = X[i, j]
    assert network_average(X, w) >= before * (1 - 1e-12)


def _thomson_average(X, w):
    # X averaged with the dissipation of the uniform network as weights
    n = len(X)
    g1 = conductance_matrix(np.ones_like(X), w)
    lap = np.diag(g1.sum(1)) - g1
    rhs = np.zeros(n - 1)
    rhs[0] = 1.0
    v = np.concatenate([np.linalg.solve(lap[:-1, :-1], rhs), [0.0]])
    p = g1 * np.subtract.outer(v, v) ** 2
    return float((p * X).sum() / p.sum())


@settings(max_examples=40, deadline=None)
@given(arrays(float, (15, 15), elements=st.floats(1e-4, 1e4)), st.floats(0.5, 2.8))
def test_thomson_bound(A, wc):
    # Thomson's principle: the network average never exceeds the dissipation-weighted mean
    X = _sym(A)
    w = weight_from_driving(DrivingSpec(1.0, wc), 1.0, 14)
    assert network_average(X, w) <= _thomson_average(X, w) * (1 + 1e-9)


def test_end_effects_can_lift_network_average_above_algebraic():
    # a profile decaying in r helps the short links the uniform network lacks at its ends
    n = 40
    r = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    X = np.exp(-r / 2.0)
    w = weight_from_driving(DrivingSpec(1.0, 7.0), 1.0, n - 1)
    assert network_average(X, w) > algebraic_average(X, w)
    assert network_average(X, w) <= _thomson_average(X, w) * (1 + 1e-12)


def test_algebraic_average_cases():
    w = weight_from_driving(DrivingSpec(1.0, 3.0), 1.0, 19)
    assert algebraic_average(np.full((20, 20), 4.0), w) == pytest.approx(4.0)
    X = np.zeros((20, 20))
    idx = np.arange(19)
    X[idx, idx + 1] = X[idx + 1, idx] = 2.5
    assert algebraic_average(X, w) == pytest.approx(2 * w(1) * 2.5)


def test_billiard_network_below_algebraic(window_3500):
    _, _, cm = window_3500
    sc = derive_scales(BilliardConfig())
    w = weight_from_driving(DrivingSpec(1.0, sc.DeltaR / 5), sc.Delta0, 58)
    assert network_average(cm.X, w) < 0.5 * algebraic_average(cm.X, w)


# -- g factors ---------------------------------------------------------------

def test_flat_spectrum_gives_wall_formula():
    c = BilliardConfig()
    sc = derive_scales(c)
    X = np.full((60, 60), sc.Delta0 / (2 * math.pi) * analytic_Cinf(c))
    res = g_factors(X, weight_from_driving(DrivingSpec(1.0, 3 * sc.Delta0), sc.Delta0, 59), c, T=2.0)
    assert res.gs == pytest.approx(1.0) and res.gc == pytest.approx(1.0) and res.g == pytest.approx(1.0)
    assert res.G0 == pytest.approx(analytic_Cinf(c) / 4.0)
    assert res.G_SLRT == res.gs * res.gc * res.G0
    assert res.network_size == 60


def test_billiard_and_gaussian_gs(window_3500):
    _, _, cm = window_3500
    c = BilliardConfig()
    sc = derive_scales(c)
    w = weight_from_driving(DrivingSpec(1.0, 45.0), sc.Delta0, 58)
    res = g_factors(cm.X, w, c, E=3750.0)
    assert 0 <= res.gs <= 1 + 1e-9
    assert res.G_SLRT == pytest.approx(res.gs * res.gc * res.G0, rel=1e-15)
    gauss = np.median([g_factors(make_surrogate(cm.X, SurrogateSpec("gaussian-band", s)), w, c).gs
                       for s in range(5)])
    assert 0.3 < gauss <= 1.0
    assert res.gs < gauss


# -- estimates and feasibility -----------------------------------------------

def test_wqc_estimate_and_vrh():
    assert wqc_estimate(0.1, 0.1) == pytest.approx(0.1)
    assert vrh_correct(1.0, 10.0) == 1.0
    assert vrh_correct(0.01, 10.0) == pytest.approx(0.01 * math.exp(math.sqrt(math.log(10) * math.log(100))))
    assert vrh_correct(0.01, 10.0) == pytest.approx(0.2598, abs=1e-3)
    assert vrh_correct(1e-6, 1e6) == pytest.approx(1.0)
    assert vrh_correct(3.0, 10.0) == 3.0
    for bad in ((0.0, 10.0), (0.5, 1.0)):
        with pytest.raises(ValueError):
            vrh_correct(*bad)
    with pytest.raises(ValueError):
        wqc_estimate(0.0, 0.1)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-8, 0.999), st.floats(1.01, 1e4))
def test_vrh_never_lowers_g(g, b):
    assert g <= vrh_correct(g, b) <= 1.0


def test_feasibility_limits():
    c = BilliardConfig()
    sc = derive_scales(c)
    rep = feasibility(DrivingSpec(1e-3, 10 * sc.Delta0), c, T=c.E, hold_bounces=1e300)
    assert rep.heating_ok
    rep = feasibility(DrivingSpec(50.0, 1e12 * sc.Delta0), c, T=c.E, hold_bounces=1000)
    assert rep.fgr_ok
    assert rep.amplitude == pytest.approx(50.0 / speed(c))
    with pytest.raises(ValueError):
        feasibility(DrivingSpec(1.0, 1.0), c, T=0.0, hold_bounces=10)


def test_square_billiard_matches_dimensionless_window():
    # square box, T = E: the general conditions reduce to the closed forms of amplitude_window,
    # with DeltaL/Delta0 = 2 pi/hbar for this geometry
    hbar, b, hold = 0.1, 10.0, 1000.0
    sq = BilliardConfig(Lx=1.0, Ly=1.0, R=math.inf, E=1.0)
    sq = sq.with_(E=energy_for_hbar(hbar, sq))
    sc = derive_scales(sq)
    win = amplitude_window(hbar, b, sc.DeltaL / sc.Delta0, hold)
    for amp in np.geomspace(win.exact[0] / 3, win.exact[1] * 3, 25):
        rep = feasibility(DrivingSpec(amp * sc.vE, b * sc.Delta0), sq, T=sq.E, hold_bounces=hold)
        assert rep.heating_ok == (amp > win.exact[0])
        assert rep.fgr_ok == (amp < win.exact[1])
        assert rep.rough_heating_ok == (amp > win.rough[0])
        assert rep.rough_fgr_ok == (amp < win.rough[1])


def test_cold_atom_window():
    win = amplitude_window(0.1, 10.0, 30.0, 1000.0)
    assert win.exact_nonempty and win.rough_nonempty
    assert 10 ** -1.5 < win.exact[0] < win.exact[1] < 0.1
    assert not amplitude_window(0.1, 10.0, 30.0, 10.0).exact_nonempty
