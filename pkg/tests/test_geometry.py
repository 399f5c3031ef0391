import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from billiard_slrt.errors import ConfigError
from billiard_slrt.geometry import (BilliardConfig, arc_length, config_hash, deformation_profile,
                                    deformation_slope, deformed_area, derive_scales, energy_for_hbar,
                                    mean_level_spacing, perimeter, speed)


def test_defaults():
    c = BilliardConfig()
    assert (c.Lx, c.Ly, c.R, c.dy, c.mass) == (1.5, 1.0, 8.0, 0.1, 0.5)


def test_profile_pinned_and_peak():
    c = BilliardConfig()
    assert deformation_profile(0.0, c) == 0.0
    assert deformation_profile(0.6, c) == pytest.approx(8 - math.sqrt(64 - 0.36), rel=1e-12)
    assert deformation_profile(0.6, c) == pytest.approx(0.022531, abs=1e-6)


def test_profile_symmetric_without_shift():
    c = BilliardConfig(dy=0.0)
    y = np.linspace(0, 1, 41)
    d = deformation_profile(y, c)
    assert np.allclose(d, d[::-1], atol=1e-15)
    assert d[0] == d[-1] == 0.0


def test_profile_domain():
    c = BilliardConfig()
    with pytest.raises(ValueError):
        deformation_profile(-0.01, c)
    with pytest.raises(ValueError):
        deformation_profile(np.array([0.5, 1.01]), c)


def test_flat_wall():
    c = BilliardConfig(R=math.inf)
    assert np.all(deformation_profile(np.linspace(0, 1, 5), c) == 0)
    assert deformed_area(c) == 0 and arc_length(c) == 1.0
    assert perimeter(c) == pytest.approx(2 * (1.5 + 1.0))


def test_slope_matches_finite_difference():
    c = BilliardConfig()
    y = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (deformation_profile(y + h, c) - deformation_profile(y - h, c)) / (2 * h)
    assert np.allclose(deformation_slope(y, c), fd, atol=1e-8)


def test_area_and_arc_length_by_quadrature():
    c = BilliardConfig()
    y = np.linspace(0, 1, 200001)
    d = deformation_profile(y, c)
    assert deformed_area(c) == pytest.approx(np.trapezoid(d, y), rel=1e-8)
    s = np.trapezoid(np.sqrt(1 + deformation_slope(y, c) ** 2), y)
    assert arc_length(c) == pytest.approx(s, rel=1e-8)


@pytest.mark.parametrize("kw", [dict(Lx=0), dict(Ly=-1), dict(R=0.9), dict(mass=0), dict(E=-1),
                                dict(R=1.05, dy=0.0, Lx=0.2)])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        BilliardConfig(**kw)


def test_dict_round_trip_and_unknown_keys():
    c = BilliardConfig(R=10.0, E=3000.0)
    assert BilliardConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ConfigError):
        BilliardConfig.from_dict({"lx": 1.5, "radius": 3})
    with pytest.raises(ConfigError):
        BilliardConfig.from_dict({"lx": "wide"})


def test_hash_is_stable_and_sensitive():
    assert BilliardConfig().hash() == BilliardConfig().hash()
    assert BilliardConfig().hash() != BilliardConfig(R=9.0).hash()
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})


def test_scales_at_default_energy():
    sc = derive_scales(BilliardConfig())
    assert sc.vE == pytest.approx(126.4911, abs=1e-4)
    assert sc.Delta0 == pytest.approx(8.37758, abs=1e-5)
    assert sc.u == 0.125
    assert sc.hbar == pytest.approx(0.09934, abs=1e-5)
    assert sc.lambdaE == pytest.approx(2 * math.pi / (0.5 * sc.vE))
    assert sc.tH == pytest.approx(2 * math.pi / sc.Delta0)
    assert sc.tE == pytest.approx(math.log(1 / sc.hbar) * sc.tR)


def test_bandwidth_examples():
    c = BilliardConfig()
    sc = derive_scales(c)
    assert derive_scales(c, 1 / sc.tR).b == pytest.approx(1.9, abs=0.05)
    assert derive_scales(c, sc.DeltaR).b == pytest.approx(11.9, abs=0.05)
    assert derive_scales(c).b == pytest.approx(sc.DeltaR / sc.Delta0)
    with pytest.raises(ValueError):
        derive_scales(c, 0.0)


def test_energy_scaling():
    a = derive_scales(BilliardConfig(E=1000.0))
    b = derive_scales(BilliardConfig(E=4000.0))
    assert b.hbar == pytest.approx(a.hbar / 2)
    assert b.Delta0 == a.Delta0


def test_energy_for_hbar_inverts():
    for h in (0.05, 0.1, 0.2):
        c = BilliardConfig(E=energy_for_hbar(h))
        assert derive_scales(c).hbar == pytest.approx(h, rel=1e-12)


def test_speed_and_spacing():
    c = BilliardConfig()
    assert speed(c) == pytest.approx(math.sqrt(16000))
    assert mean_level_spacing(c) == pytest.approx(2 * math.pi / 0.75)


@settings(max_examples=60, deadline=None)
@given(st.floats(10.0, 1e5), st.floats(10.0, 1e5))
def test_hbar_decreasing_in_energy(e1, e2):
    lo, hi = sorted((e1, e2))
    if hi - lo < 1e-6 * hi:
        return
    h_lo = derive_scales(BilliardConfig(E=lo)).hbar
    h_hi = derive_scales(BilliardConfig(E=hi)).hbar
    assert h_hi < h_lo


@settings(max_examples=60, deadline=None)
@given(st.floats(1.0, 1e6))
def test_regime_ordering(E):
    sc = derive_scales(BilliardConfig(E=E))
    if sc.hbar < 1:
        assert sc.uc < sc.ub < sc.us < 1


@settings(max_examples=80, deadline=None)
@given(R=st.floats(1.5, 100.0), dy=st.floats(-0.3, 0.3), y=st.floats(0.0, 1.0))
def test_profile_bounds(R, dy, y):
    try:
        c = BilliardConfig(R=R, dy=dy)
    except ConfigError:
        return
    d = deformation_profile(y, c)
    assert d >= -1e-14
    assert d < 1.0 / (4 * R) + abs(dy) / R + 1e-12
