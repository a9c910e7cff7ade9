"""Network realizations, pose optimisation and Monte Carlo SE sweeps.

Seeding: every (swept value, realization) pair owns a root entropy tuple
``(master_seed, value_index, realization_index)``. Independent streams for
the device drop, cluster angles, localisation error, channel draws and the
optimiser hang off that root, so all AP types see the same network and the
same fading; only the pose differs.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import pso
from .channel import (
    PathLossParams,
    RicianParams,
    ScatteringParams,
    add_csi_error,
    draw_cluster_angles,
    link_budget,
    los_matrix,
    path_loss_linear,
    sample_channel_matrices,
    scattering_covariance,
)
from .combining import DegenerateChannel, se_from_sinr_samples, sinr_per_user, zf_combiner_masked
from .config import ConfigError, SystemConfig
from .geometry import ArrayPose, center_pose, distances_and_azimuths, place_devices, wrap_angle
from .locopt import AP_ORDER, ApType, ObjectiveContext, objective, objective_batch, perturb_locations

SWEEPABLE = ("kappa_db", "movement_side", "sigma_e_sq_db", "area_side")
MAX_RESAMPLES = 10

_DROP, _CLUSTERS, _LOCATION, _CHANNEL, _PSO = range(5)
_FREE_CODE = {"x": 1, "y": 2, "theta": 4}


@dataclass(frozen=True)
class ApVariant:
    """An AP type, optionally pinned to its own movement-square side.

    Written as ``"MAA"`` or ``"MAA@25"`` (movement side 25 m).
    """

    kind: ApType
    movement_side: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "ApVariant":
        m = re.fullmatch(r"\s*([A-Za-z]+)\s*(?:@\s*([0-9.eE+-]+))?\s*", text)
        if not m:
            raise ConfigError(f"cannot parse AP type {text!r}", "ap_types")
        try:
            kind = ApType(m.group(1).upper())
        except ValueError:
            raise ConfigError(f"unknown AP type {m.group(1)!r}", "ap_types") from None
        side = None
        if m.group(2) is not None:
            try:
                side = float(m.group(2))
            except ValueError:
                raise ConfigError(f"bad movement side in {text!r}", "ap_types") from None
        return cls(kind, side)

    @property
    def label(self) -> str:
        if self.movement_side is None:
            return self.kind.value
        return f"{self.kind.value}@{self.movement_side:g}"

    def sort_key(self):
        side = -1.0 if self.movement_side is None else self.movement_side
        return (AP_ORDER[self.kind], side)

    def apply(self, config: SystemConfig) -> SystemConfig:
        if self.movement_side is None:
            return config
        return config.replace(movement_side=self.movement_side)


@dataclass(frozen=True)
class SweepSpec:
    ap_types: tuple
    swept_parameter: str
    values: tuple
    n_network_realizations: int = 100
    n_channel_realizations: int = 100
    master_seed: int = 0

    def __post_init__(self):
        variants = tuple(
            v if isinstance(v, ApVariant) else ApVariant.parse(v) if isinstance(v, str)
            else ApVariant(ApType(v)) for v in self.ap_types
        )
        object.__setattr__(self, "ap_types", variants)
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not variants:
            raise ConfigError("at least one AP type is required", "ap_types")
        if self.swept_parameter not in SWEEPABLE:
            raise ConfigError(
                f"swept_parameter must be one of {', '.join(SWEEPABLE)}", "swept_parameter"
            )
        if not self.values:
            raise ConfigError("values must be non-empty", "values")
        if self.n_network_realizations < 1:
            raise ConfigError("n_network_realizations must be >= 1", "n_network_realizations")
        if self.n_channel_realizations < 1:
            raise ConfigError("n_channel_realizations must be >= 1", "n_channel_realizations")
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ConfigError("master_seed must be a non-negative integer", "master_seed")


@dataclass(frozen=True)
class NetworkRealization:
    devices: np.ndarray
    estimates: np.ndarray
    cluster_angles: np.ndarray  # world frame, (K, N)


@dataclass(frozen=True)
class SweepRecord:
    swept_param: str
    swept_value: float
    ap_type: str
    realization_index: int
    pose: ArrayPose
    predicted_objective: float
    mean_se: float
    devices: np.ndarray = field(default=None, compare=False, repr=False)


def _stream(root, tag, *extra):
    return np.random.default_rng([*root, tag, *extra])


def _root(realization_seed) -> tuple:
    if isinstance(realization_seed, (int, np.integer)):
        return (int(realization_seed),)
    return tuple(int(s) for s in realization_seed)


def draw_network(config: SystemConfig, realization_seed) -> NetworkRealization:
    """Device drop, world-frame cluster angles and location estimates.

    Cluster angles spread around the azimuth each device has from the
    array's initial pose (area center, ``theta = 0``).
    """
    root = _root(realization_seed)
    devices = place_devices(config.k_devices, config.area_side, _stream(root, _DROP))
    c = center_pose(config.area_side)
    _, azimuth0 = distances_and_azimuths(c.x, c.y, c.theta, devices, config.h_ap - config.h_device)
    clusters = draw_cluster_angles(
        azimuth0, ScatteringParams.from_config(config), _stream(root, _CLUSTERS)
    )
    estimates = perturb_locations(devices, config.sigma_e_sq, _stream(root, _LOCATION))
    return NetworkRealization(devices, estimates, clusters)


def _pso_rng(root, free):
    code = sum(_FREE_CODE[name] for name in free)
    return _stream(root, _PSO, code)


def _run_pso(ctx: ObjectiveContext, root, initial_positions=None):
    lower, upper = ctx.search_box()
    return pso.optimize(
        lambda swarm: objective_batch(swarm, ctx),
        lower,
        upper,
        pso.PsoParams(n_vars=ctx.n_vars),
        rng=_pso_rng(root, ctx.free),
        vectorized=True,
        initial_positions=initial_positions,
        periodic=ctx.periodic,
    )


def optimize_pose(network: NetworkRealization, config: SystemConfig, ap_type: ApType,
                  realization_seed, warm_start: bool = True):
    """Pose maximising the location-based objective, and its predicted SE.

    With ``warm_start`` the MRAA swarm is seeded with the optima of the
    rotation-only and translation-only problems (solved with the same
    streams they use on their own), so the MRAA prediction never falls below
    either of them.
    """
    root = _root(realization_seed)
    ctx = ObjectiveContext.build(network.estimates, config, ap_type)
    if ctx.n_vars == 0:
        pose_vector = np.empty(0)
        return ctx.pose(pose_vector), objective(pose_vector, ctx)

    seeds = []
    if warm_start and ap_type is ApType.MRAA:
        for sub_type in (ApType.RAA, ApType.MAA):
            sub = ObjectiveContext.build(network.estimates, config, sub_type)
            if sub.n_vars == 0 or sub.free == ctx.free:
                continue
            best = _run_pso(sub, root).best_position
            x, y, theta = sub.expand(best[None, :])
            full = {"x": x[0], "y": y[0], "theta": theta[0]}
            seeds.append([full[name] for name in ctx.free])
    result = _run_pso(ctx, root, initial_positions=seeds or None)
    return ctx.pose(result.best_position), result.best_value


def evaluate_se(network: NetworkRealization, pose: ArrayPose, config: SystemConfig,
                channel_rng: np.random.Generator, n_channel_realizations: Optional[int] = None):
    """Monte Carlo SE at ``pose`` with imperfect CSI and ZF combining.

    Degenerate channel draws are redrawn up to ``MAX_RESAMPLES`` times.
    """
    n = config.n_channel_realizations if n_channel_realizations is None else n_channel_realizations
    distance, azimuth = distances_and_azimuths(
        pose.x, pose.y, pose.theta, network.devices, config.h_ap - config.h_device
    )
    beta = path_loss_linear(distance, PathLossParams.from_config(config))
    params = RicianParams(config.kappa, config.m_antennas, config.spacing)
    los_h = los_matrix(beta, azimuth, params)
    asd = math.radians(config.asd_deg)
    clusters = wrap_angle(network.cluster_angles + pose.theta)
    factors = np.stack([
        scattering_covariance(b, psi, asd, config.m_antennas).factor
        for b, psi in zip(beta, clusters)
    ])
    budget = link_budget(config)

    def draw(count):
        h = sample_channel_matrices(los_h, factors, config.kappa, channel_rng, count)
        h_est = add_csi_error(h, budget.csi_var, channel_rng)
        v, bad = zf_combiner_masked(h_est)
        return h, v, bad

    h, v, bad = draw(n)
    for _ in range(MAX_RESAMPLES):
        if not bad.any():
            break
        idx = np.flatnonzero(bad)
        h[idx], v[idx], bad[idx] = draw(idx.size)
    if bad.any():
        raise DegenerateChannel(
            f"{int(bad.sum())} channel realization(s) stayed degenerate after "
            f"{MAX_RESAMPLES} redraws"
        )
    sinr = sinr_per_user(v, h, budget.tx_power, budget.noise_power)
    return se_from_sinr_samples(sinr, config.pilot_len, config.slot_len)


def run_realization(config: SystemConfig, ap_type, realization_seed, *,
                    swept_param: str = "", swept_value: float = math.nan,
                    realization_index: int = 0, warm_start: bool = True) -> SweepRecord:
    """One network drop: optimise the pose for ``ap_type`` and measure SE."""
    variant = ap_type if isinstance(ap_type, ApVariant) else ApVariant.parse(str(
        ap_type.value if isinstance(ap_type, ApType) else ap_type))
    config = variant.apply(config)
    root = _root(realization_seed)
    network = draw_network(config, root)
    pose, predicted = optimize_pose(network, config, variant.kind, root, warm_start)
    report = evaluate_se(network, pose, config, _stream(root, _CHANNEL))
    return SweepRecord(
        swept_param=swept_param,
        swept_value=float(swept_value),
        ap_type=variant.label,
        realization_index=realization_index,
        pose=pose,
        predicted_objective=float(predicted),
        mean_se=report.mean_se,
        devices=network.devices,
    )


def _task(args):
    config, variant, root, param, value, index = args
    return run_realization(config, variant, root, swept_param=param, swept_value=value,
                           realization_index=index)


def sweep_tasks(spec: SweepSpec, base: SystemConfig):
    tasks = []
    base = base.replace(n_channel_realizations=spec.n_channel_realizations)
    for vi, value in enumerate(spec.values):
        changes = {spec.swept_parameter: value}
        config = base.replace(**changes)
        for variant in spec.ap_types:
            for r in range(spec.n_network_realizations):
                root = (int(spec.master_seed), vi, r)
                tasks.append((config, variant, root, spec.swept_parameter, value, r))
    return tasks


def run_sweep(spec: SweepSpec, base: SystemConfig, workers: int = 1) -> list:
    """All records of a sweep, ordered by value, AP type, then realization.

    The output does not depend on ``workers``.
    """
    tasks = sweep_tasks(spec, base)
    if workers <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


@dataclass(frozen=True)
class SummaryRow:
    swept_param: str
    swept_value: float
    ap_type: str
    mean: float
    stderr: float
    n: int


def summarize(records: Sequence[SweepRecord]) -> list:
    """Mean and standard error of ``mean_se`` per (swept value, AP type)."""
    if not records:
        raise ValueError("no records to summarize")
    groups = {}
    for rec in records:
        groups.setdefault((rec.swept_param, rec.swept_value, rec.ap_type), []).append(rec.mean_se)
    rows = []
    for (param, value, label), values in groups.items():
        arr = np.asarray(values, dtype=float)
        stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        rows.append(SummaryRow(param, value, label, float(arr.mean()), stderr, arr.size))
    rows.sort(key=lambda row: (row.swept_param, row.swept_value,
                               ApVariant.parse(row.ap_type).sort_key()))
    return rows
