"""Location-based pose objective.

The access point only knows noisy device positions. For a candidate pose it
predicts pure-LoS "pseudo" channels from those positions, builds the ZF
combiner from them and scores the pose by the predicted mean per-user SE.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import PathLossParams, RicianParams, los_matrix, noise_power, path_loss_linear
from .combining import sinr_per_user, zf_combiner_masked
from .config import SystemConfig
from .geometry import ArrayPose, MovementBounds, distances_and_azimuths, movement_bounds


class ApType(enum.Enum):
    FAA = "FAA"
    RAA = "RAA"
    MAA = "MAA"
    MRAA = "MRAA"

    @property
    def moves(self) -> bool:
        return self in (ApType.MAA, ApType.MRAA)

    @property
    def rotates(self) -> bool:
        return self in (ApType.RAA, ApType.MRAA)


AP_ORDER = {t: i for i, t in enumerate(ApType)}


def perturb_locations(truth, sigma_e_sq: float, rng: np.random.Generator) -> np.ndarray:
    """Location estimates ``p_hat = p + e`` with ``e ~ N(0, sigma_e_sq * I2)``.

    Estimates are not clipped to the coverage area.
    """
    if sigma_e_sq < 0:
        raise ValueError("sigma_e_sq must be non-negative")
    truth = np.asarray(truth, dtype=float)
    return truth + np.sqrt(sigma_e_sq) * rng.standard_normal(truth.shape)


def pseudo_channels_at(x, y, theta, estimates, config: SystemConfig):
    """Pure-LoS channels predicted from estimated positions, ``(..., M, K)``."""
    distance, azimuth = distances_and_azimuths(
        x, y, theta, estimates, config.h_ap - config.h_device
    )
    beta = path_loss_linear(distance, PathLossParams.from_config(config))
    params = RicianParams(config.kappa, config.m_antennas, config.spacing)
    return los_matrix(beta, azimuth, params)


def pseudo_channels(estimates, pose: ArrayPose, config: SystemConfig) -> np.ndarray:
    return pseudo_channels_at(pose.x, pose.y, pose.theta, estimates, config)


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    """Everything the objective needs besides the free pose variables.

    ``free`` lists the optimised coordinates among ``("x", "y", "theta")``.
    Translation is only free when the movement square has positive size;
    fixed coordinates sit at the area center with ``theta = 0``.
    """

    estimates: np.ndarray
    config: SystemConfig
    bounds: MovementBounds
    ap_type: ApType

    @classmethod
    def build(cls, estimates, config: SystemConfig, ap_type: ApType) -> "ObjectiveContext":
        bounds = movement_bounds(config.area_side, config.movement_side_m)
        return cls(np.asarray(estimates, dtype=float), config, bounds, ap_type)

    @property
    def free(self) -> tuple:
        names = []
        if self.ap_type.moves and not self.bounds.is_fixed:
            names += ["x", "y"]
        if self.ap_type.rotates:
            names.append("theta")
        return tuple(names)

    @property
    def n_vars(self) -> int:
        return len(self.free)

    def search_box(self):
        box = {"x": (self.bounds.lower, self.bounds.upper),
               "y": (self.bounds.lower, self.bounds.upper),
               "theta": (0.0, np.pi)}
        lower = np.array([box[name][0] for name in self.free], dtype=float)
        upper = np.array([box[name][1] for name in self.free], dtype=float)
        return lower, upper

    @property
    def periodic(self):
        """Rotation repeats every pi: flipping the sign of every sine only
        conjugates the pseudo-channels and leaves the predicted SE unchanged."""
        return np.array([name == "theta" for name in self.free], dtype=bool)

    def expand(self, pose_vectors):
        """Map free-variable vectors ``(P, n_vars)`` to full ``(x, y, theta)`` arrays."""
        pv = np.asarray(pose_vectors, dtype=float)
        rows = pv.shape[0] if pv.ndim == 2 else max(1, pv.size // max(self.n_vars, 1))
        pv = pv.reshape(rows, self.n_vars)
        center = self.config.area_side / 2
        full = {"x": np.full(len(pv), center), "y": np.full(len(pv), center),
                "theta": np.zeros(len(pv))}
        for i, name in enumerate(self.free):
            full[name] = pv[:, i]
        return full["x"], full["y"], full["theta"]

    def pose(self, pose_vector) -> ArrayPose:
        x, y, theta = self.expand(np.reshape(pose_vector, (1, self.n_vars)))
        return ArrayPose(float(x[0]), float(y[0]), float(theta[0]))


def objective_batch(pose_vectors, ctx: ObjectiveContext) -> np.ndarray:
    """Predicted mean per-user SE for each row of ``pose_vectors``.

    Degenerate pseudo-channel matrices score ``-inf``.
    """
    x, y, theta = ctx.expand(pose_vectors)
    config = ctx.config
    h = pseudo_channels_at(x, y, theta, ctx.estimates, config)
    v, degenerate = zf_combiner_masked(h)
    with np.errstate(invalid="ignore"):
        sinr = sinr_per_user(v, h, config.tx_power, noise_power(config))
        value = config.frame_fraction * np.mean(np.log2(1 + sinr), axis=-1)
    return np.where(degenerate, -np.inf, value)


def objective(pose_vector, ctx: ObjectiveContext) -> float:
    return float(objective_batch(np.reshape(pose_vector, (1, ctx.n_vars)), ctx)[0])
