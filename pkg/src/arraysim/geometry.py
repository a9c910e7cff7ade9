"""Device drops, array poses and the plan-view geometry between them.

Axis convention: at ``theta = 0`` the array boresight points along +x and
azimuths are measured counter-clockwise in the horizontal plane. A rotation
``theta`` of the array enters the device azimuth as ``phi + theta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import SPEED_OF_LIGHT, ConfigError

#: Plan-view separations below this are treated as "device under the array".
DEGENERATE_HORIZONTAL = 1e-9


@dataclass(frozen=True)
class ArrayPose:
    x: float
    y: float
    theta: float = 0.0

    def as_tuple(self):
        return (self.x, self.y, self.theta)


@dataclass(frozen=True)
class MovementBounds:
    lower: float
    upper: float

    @property
    def is_fixed(self) -> bool:
        return self.upper <= self.lower

    def contains(self, x, y) -> bool:
        return bool(self.lower <= x <= self.upper and self.lower <= y <= self.upper)


class GeometryView(NamedTuple):
    distance: np.ndarray
    azimuth: np.ndarray


def place_devices(count: int, area_side: float, rng: np.random.Generator) -> np.ndarray:
    """Drop ``count`` devices uniformly over the square ``[0, area_side]^2``.

    Returns a ``(count, 2)`` array of ``(x, y)`` coordinates in meters.
    """
    if int(count) != count or count < 1:
        raise ConfigError(f"device count must be a positive integer, got {count!r}", "k_devices")
    if not area_side > 0:
        raise ConfigError(f"area side must be positive, got {area_side!r}", "area_side")
    return rng.uniform(0.0, area_side, size=(int(count), 2))


def movement_bounds(area_side: float, movement_side: float) -> MovementBounds:
    if movement_side < 0 or movement_side > area_side:
        raise ConfigError(
            f"movement side {movement_side} must lie in [0, {area_side}]", "movement_side"
        )
    return MovementBounds((area_side - movement_side) / 2, (area_side + movement_side) / 2)


def center_pose(area_side: float) -> ArrayPose:
    return ArrayPose(area_side / 2, area_side / 2, 0.0)


def wrap_angle(angle):
    """Map angles onto (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2 * np.pi)


def distances_and_azimuths(x, y, theta, devices, height_diff):
    """Broadcasting core of :func:`geometry_view`.

    ``x``, ``y`` and ``theta`` may be arrays of shape ``(P,)`` describing P
    candidate poses; ``devices`` is ``(K, 2)``. Outputs have shape
    ``(P, K)`` (or ``(K,)`` for scalar poses).
    """
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    theta = np.asarray(theta, dtype=float)[..., None]
    devices = np.asarray(devices, dtype=float)
    dx = devices[:, 0] - x
    dy = devices[:, 1] - y
    horizontal = np.hypot(dx, dy)
    distance = np.sqrt(horizontal**2 + height_diff**2)
    raw = np.where(horizontal < DEGENERATE_HORIZONTAL, 0.0, np.arctan2(dy, dx))
    return distance, wrap_angle(raw + theta)


def geometry_view(pose: ArrayPose, devices, h_ap: float, h_device: float) -> GeometryView:
    """3-D distance and boresight-relative azimuth from the array to devices.

    ``devices`` is either a single ``(x, y)`` pair or a ``(K, 2)`` array.
    """
    devices = np.asarray(devices, dtype=float)
    single = devices.ndim == 1
    distance, azimuth = distances_and_azimuths(
        pose.x, pose.y, pose.theta, np.atleast_2d(devices), h_ap - h_device
    )
    if single:
        return GeometryView(float(distance[0]), float(azimuth[0]))
    return GeometryView(distance, azimuth)


def ula_length(m_antennas: int, carrier_hz: float) -> float:
    """Aperture of a half-wavelength ULA, (M - 1) * lambda / 2."""
    return (m_antennas - 1) * SPEED_OF_LIGHT / carrier_hz / 2


def fraunhofer_distance(m_antennas: int, carrier_hz: float) -> float:
    wavelength = SPEED_OF_LIGHT / carrier_hz
    return 2 * ula_length(m_antennas, carrier_hz) ** 2 / wavelength


def far_field_min_height(m_antennas: int, carrier_hz: float, h_device: float) -> float:
    """Lowest AP height keeping a device right below the array in the far field."""
    if m_antennas < 2:
        raise ConfigError("far-field bound needs at least two antennas", "m_antennas")
    if not carrier_hz > 0:
        raise ConfigError("carrier frequency must be positive", "carrier_hz")
    wavelength = SPEED_OF_LIGHT / carrier_hz
    return wavelength / 2 * (m_antennas - 1) ** 2 + h_device
