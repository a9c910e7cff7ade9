"""System-wide simulation parameters.

Defaults reproduce the indoor single-AP scenario: a 16-element half-wavelength
ULA at 12 m serving 10 devices in a 100 m x 100 m area at 3.5 GHz.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Optional

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Invalid or inconsistent simulation parameters.

    ``key`` names the offending parameter when one can be identified.
    """

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class FarFieldWarning(UserWarning):
    pass


def db_to_linear(value_db):
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value):
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class SystemConfig:
    """Physical and protocol constants for one scenario.

    ``movement_side`` of ``None`` lets movable arrays roam the whole
    coverage area (L_B = L_A). Angles are given in degrees, powers in
    watts, and ``kappa_db`` / ``sigma_e_sq_db`` in dB.
    """

    m_antennas: int = 16
    k_devices: int = 10
    area_side: float = 100.0
    movement_side: Optional[float] = None
    tx_power: float = 0.1
    noise_psd: float = 4e-21
    bandwidth: float = 20e6
    noise_figure_db: float = 9.0
    pilot_len: int = 10
    slot_len: int = 200
    h_ap: float = 12.0
    h_device: float = 1.5
    carrier_hz: float = 3.5e9
    spacing: float = 0.5
    pathloss_exp: float = 2.0
    ref_distance: float = 1.0
    kappa_db: float = 10.0
    sigma_e_sq_db: float = -10.0
    cluster_count: int = 6
    cluster_halfwidth_deg: float = 40.0
    asd_deg: float = 5.0
    n_channel_realizations: int = 100

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        positive = (
            "area_side", "tx_power", "noise_psd", "bandwidth", "h_ap",
            "carrier_hz", "spacing", "pathloss_exp", "ref_distance", "asd_deg",
        )
        for name in positive:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}", name)
        for name in ("m_antennas", "k_devices", "pilot_len", "slot_len",
                     "cluster_count", "n_channel_realizations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", name)
        if self.h_device < 0:
            raise ConfigError("h_device must be non-negative", "h_device")
        if self.cluster_halfwidth_deg < 0:
            raise ConfigError("cluster_halfwidth_deg must be non-negative", "cluster_halfwidth_deg")
        if self.k_devices > self.m_antennas:
            raise ConfigError("zero forcing needs K <= M", "k_devices")
        if self.pilot_len < self.k_devices:
            raise ConfigError(
                f"orthogonal pilots need tau_p >= K (tau_p={self.pilot_len}, K={self.k_devices})",
                "pilot_len",
            )
        if self.pilot_len >= self.slot_len:
            raise ConfigError("pilot_len must be shorter than slot_len", "pilot_len")
        if self.movement_side is not None and not 0 <= self.movement_side <= self.area_side:
            raise ConfigError(
                f"movement_side must lie in [0, area_side], got {self.movement_side}",
                "movement_side",
            )
        if self.h_ap <= self.h_device:
            raise ConfigError("the AP must be mounted above the devices", "h_ap")
        if math.isnan(self.kappa_db) or self.kappa_db == math.inf:
            raise ConfigError("kappa_db must be finite or -inf", "kappa_db")
        if not math.isfinite(self.sigma_e_sq_db) and self.sigma_e_sq_db != -math.inf:
            raise ConfigError("sigma_e_sq_db must be finite or -inf", "sigma_e_sq_db")

        from .geometry import far_field_min_height

        if self.m_antennas >= 2:
            h_min = far_field_min_height(self.m_antennas, self.carrier_hz, self.h_device)
            if self.h_ap < h_min:
                warnings.warn(
                    f"h_ap={self.h_ap} m is below the far-field minimum of {h_min:.2f} m",
                    FarFieldWarning,
                    stacklevel=3,
                )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def movement_side_m(self) -> float:
        return self.area_side if self.movement_side is None else self.movement_side

    @property
    def kappa(self) -> float:
        return db_to_linear(self.kappa_db)

    @property
    def sigma_e_sq(self) -> float:
        return db_to_linear(self.sigma_e_sq_db)

    @property
    def noise_figure(self) -> float:
        return db_to_linear(self.noise_figure_db)

    @property
    def frame_fraction(self) -> float:
        return (self.slot_len - self.pilot_len) / self.slot_len

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)
