import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arraysim.config import ConfigError
from arraysim.geometry import (
    ArrayPose,
    far_field_min_height,
    fraunhofer_distance,
    geometry_view,
    movement_bounds,
    place_devices,
    ula_length,
    wrap_angle,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_place_devices_default_area():
    pts = place_devices(10, 100.0, np.random.default_rng(1))
    assert pts.shape == (10, 2)
    assert np.all((pts >= 0) & (pts <= 100))


@pytest.mark.parametrize("count,side", [(1, 0.0), (1, -5.0), (0, 100.0), (2.5, 100.0)])
def test_place_devices_rejects_degenerate_input(count, side):
    with pytest.raises(ConfigError):
        place_devices(count, side, np.random.default_rng(0))


def test_place_devices_mean_is_center():
    pts = place_devices(10_000, 100.0, np.random.default_rng(2))
    # std of the mean is 100/sqrt(12)/100 ~= 0.29
    assert abs(pts[:, 0].mean() - 50) < 1


@pytest.mark.parametrize(
    "area,move,expected",
    [(100, 50, (25, 75)), (100, 100, (0, 100)), (100, 0, (50, 50))],
)
def test_movement_bounds(area, move, expected):
    b = movement_bounds(area, move)
    assert (b.lower, b.upper) == expected


def test_movement_bounds_rejects_oversized_square():
    with pytest.raises(ConfigError):
        movement_bounds(100, 120)


@given(st.floats(0.1, 1e4), st.floats(0, 1))
def test_movement_bounds_symmetric(area, frac):
    b = movement_bounds(area, frac * area)
    assert b.lower + b.upper == pytest.approx(area)
    assert b.lower <= b.upper


def test_geometry_view_hand_example():
    view = geometry_view(ArrayPose(50, 50, 0), (50, 60), 12.0, 1.5)
    assert view.distance == pytest.approx(14.5)
    assert view.azimuth == pytest.approx(math.pi / 2)


def test_geometry_view_east_is_zero():
    view = geometry_view(ArrayPose(50, 50, 0), (70, 50), 12.0, 1.5)
    assert view.azimuth == pytest.approx(0.0)


@pytest.mark.parametrize("theta", [0.0, 0.7, math.pi])
def test_device_under_array_has_zero_raw_azimuth(theta):
    view = geometry_view(ArrayPose(50, 50, theta), (50, 50), 12.0, 1.5)
    assert view.distance == pytest.approx(10.5)
    assert view.azimuth == pytest.approx(wrap_angle(theta))


def test_rotation_by_pi_flips_sine():
    devices = np.random.default_rng(3).uniform(0, 100, (20, 2))
    a = geometry_view(ArrayPose(40, 55, 0.3), devices, 12, 1.5).azimuth
    b = geometry_view(ArrayPose(40, 55, 0.3 + math.pi), devices, 12, 1.5).azimuth
    np.testing.assert_allclose(np.sin(b), -np.sin(a), atol=1e-12)


@given(finite, finite, st.floats(0, math.pi), st.floats(0, math.pi))
def test_distance_invariant_under_rotation(dx, dy, t1, t2):
    dev = (50 + dx, 50 + dy)
    a = geometry_view(ArrayPose(50, 50, t1), dev, 12, 1.5)
    b = geometry_view(ArrayPose(50, 50, t2), dev, 12, 1.5)
    assert a.distance == b.distance
    assert -math.pi < a.azimuth <= math.pi


def test_far_field_closed_forms():
    assert ula_length(16, 3.5e9) == pytest.approx(0.64, abs=0.01)
    assert fraunhofer_distance(16, 3.5e9) == pytest.approx(9.64, abs=0.01)
    assert far_field_min_height(16, 3.5e9, 1.5) == pytest.approx(11.14, abs=0.01)


def test_far_field_two_antennas():
    lam = 299_792_458.0 / 2.4e9
    assert far_field_min_height(2, 2.4e9, 1.0) == pytest.approx(lam / 2 + 1.0)


def test_far_field_monotone():
    heights = [far_field_min_height(m, 3.5e9, 1.5) for m in range(2, 40)]
    assert np.all(np.diff(heights) > 0)
    heights = [far_field_min_height(16, f, 1.5) for f in (1e9, 2e9, 3.5e9, 28e9)]
    assert np.all(np.diff(heights) < 0)
