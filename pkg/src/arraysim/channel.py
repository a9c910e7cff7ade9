"""Spatially correlated Rician fading between single-antenna devices and a ULA.

Channel vectors are M-dimensional complex arrays; channel matrices stack the
K device columns into ``(M, K)`` (with optional leading batch axes for
independent realizations).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, ConfigError, SystemConfig

#: Rician factors at or above this are treated as pure LoS.
KAPPA_LOS_ONLY = 1e12


class NearReferenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PathLossParams:
    exponent: float = 2.0
    ref_distance: float = 1.0
    carrier_hz: float = 3.5e9

    @classmethod
    def from_config(cls, config: SystemConfig) -> "PathLossParams":
        return cls(config.pathloss_exp, config.ref_distance, config.carrier_hz)

    @property
    def reference_loss_db(self) -> float:
        """Friis free-space loss at the reference distance."""
        wavelength = SPEED_OF_LIGHT / self.carrier_hz
        return 20 * math.log10(4 * math.pi * self.ref_distance / wavelength)


@dataclass(frozen=True)
class ScatteringParams:
    cluster_count: int = 6
    angle_spread_halfwidth: float = math.radians(40)
    asd: float = math.radians(5)

    @classmethod
    def from_config(cls, config: SystemConfig) -> "ScatteringParams":
        return cls(
            config.cluster_count,
            math.radians(config.cluster_halfwidth_deg),
            math.radians(config.asd_deg),
        )


@dataclass(frozen=True)
class RicianParams:
    kappa: float = 10.0
    m_antennas: int = 16
    spacing: float = 0.5


@dataclass(frozen=True, eq=False)
class Covariance:
    """NLoS spatial covariance ``R`` together with its sampling factor.

    ``factor`` satisfies ``factor @ factor.conj().T == matrix`` and is
    built from the eigendecomposition, so singular matrices are fine.
    """

    matrix: np.ndarray
    beta: float
    factor: np.ndarray


@dataclass(frozen=True)
class LinkBudget:
    tx_power: float
    noise_power: float
    snr: float
    pilot_len: int
    csi_var: float
    noise_psd: float
    bandwidth: float
    noise_figure: float


def path_loss_db(distance, params: PathLossParams):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance < params.ref_distance):
        warnings.warn(
            f"distance below the {params.ref_distance} m reference; clamped",
            NearReferenceWarning,
            stacklevel=2,
        )
        distance = np.maximum(distance, params.ref_distance)
    return -params.reference_loss_db - 10 * params.exponent * np.log10(
        distance / params.ref_distance
    )


def path_loss_linear(distance, params: PathLossParams):
    """Large-scale power gain beta for the log-distance model (linear scale)."""
    return 10.0 ** (path_loss_db(distance, params) / 10.0)


def steering_phases(azimuth, m_antennas: int, spacing: float = 0.5):
    """Unit-modulus ULA response, shape ``azimuth.shape + (M,)``."""
    azimuth = np.asarray(azimuth, dtype=float)
    m = np.arange(m_antennas)
    return np.exp(-2j * np.pi * spacing * np.sin(azimuth)[..., None] * m)


def los_vector(beta, azimuth, params: RicianParams):
    """Deterministic LoS component sqrt(beta) * a(azimuth).

    Broadcasts over ``beta`` and ``azimuth``; the antenna axis is last.
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise ValueError("beta must be non-negative")
    return np.sqrt(beta)[..., None] * steering_phases(azimuth, params.m_antennas, params.spacing)


def los_matrix(betas, azimuths, params: RicianParams):
    """Stack LoS columns into ``(..., M, K)`` from ``(..., K)`` inputs."""
    return np.swapaxes(los_vector(betas, azimuths, params), -1, -2)


def _local_scattering_matrix(beta, nominal_azimuths, asd, m_antennas):
    psi = np.asarray(nominal_azimuths, dtype=float).reshape(-1)
    if psi.size == 0:
        raise ValueError("at least one cluster angle is required")
    lag = np.subtract.outer(np.arange(m_antennas), np.arange(m_antennas))[..., None]
    terms = np.exp(1j * np.pi * lag * np.sin(psi)) * np.exp(
        -(asd**2) / 2 * (np.pi * lag * np.cos(psi)) ** 2
    )
    return beta / psi.size * terms.sum(axis=-1)


def scattering_covariance(beta, nominal_azimuths, asd, m_antennas) -> Covariance:
    """Gaussian local-scattering covariance averaged over scattering clusters.

    Element ``(s, m)`` is ``beta / N * sum_n exp(j*pi*(s-m)*sin(psi_n)) *
    exp(-asd^2/2 * (pi*(s-m)*cos(psi_n))^2)``, so every diagonal entry is
    ``beta``. Round-off negative eigenvalues are clamped to zero without
    renormalising.
    """
    r = _local_scattering_matrix(beta, nominal_azimuths, asd, m_antennas)
    r = (r + r.conj().T) / 2
    eigvals, eigvecs = np.linalg.eigh(r)
    if eigvals.size and eigvals.min() < -1e-10 * max(eigvals.max(), 0.0):
        raise np.linalg.LinAlgError(
            f"covariance has a significantly negative eigenvalue ({eigvals.min():.3g})"
        )
    if eigvals.min() < 0:
        eigvals = np.clip(eigvals, 0.0, None)
        r = (eigvecs * eigvals) @ eigvecs.conj().T
        r = (r + r.conj().T) / 2
    factor = eigvecs * np.sqrt(eigvals)
    return Covariance(r, float(beta), factor)


def draw_cluster_angles(device_azimuth, params: ScatteringParams, rng: np.random.Generator):
    """Nominal cluster angles uniform within +-halfwidth of each device azimuth.

    A scalar azimuth yields ``(N,)`` angles; an array of shape ``(K,)``
    yields ``(K, N)``.
    """
    center = np.asarray(device_azimuth, dtype=float)
    offsets = rng.uniform(
        -params.angle_spread_halfwidth,
        params.angle_spread_halfwidth,
        size=center.shape + (params.cluster_count,),
    )
    return center[..., None] + offsets


def rician_weights(kappa: float):
    """Amplitude weights (LoS, NLoS) for Rician factor ``kappa``."""
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    if kappa >= KAPPA_LOS_ONLY:
        return 1.0, 0.0
    return math.sqrt(kappa / (1 + kappa)), math.sqrt(1 / (1 + kappa))


def complex_normal(rng: np.random.Generator, size):
    """Standard circularly-symmetric complex Gaussian samples, CN(0, 1)."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)


def sample_channel(los, cov: Covariance, kappa: float, rng: np.random.Generator, size=None):
    """Draw h ~ CN(sqrt(kappa/(1+kappa)) * los, R / (1 + kappa)).

    With ``size=n`` returns ``(n, M)`` independent draws.
    """
    los = np.asarray(los)
    w_los, w_nlos = rician_weights(kappa)
    shape = los.shape if size is None else (size,) + los.shape
    z = complex_normal(rng, shape)
    nlos = z @ cov.factor.T
    return w_los * los + w_nlos * nlos


def sample_channel_matrices(los_h, factors, kappa: float, rng: np.random.Generator, n: int):
    """Draw ``n`` channel matrices for K devices at once.

    ``los_h`` is ``(M, K)``; ``factors`` is ``(K, M, M)`` with the per-device
    covariance factors. Returns ``(n, M, K)``.
    """
    m, k = los_h.shape
    w_los, w_nlos = rician_weights(kappa)
    z = complex_normal(rng, (n, k, m))
    nlos = np.einsum("kab,nkb->nak", factors, z)
    return w_los * los_h + w_nlos * nlos


def noise_power(config: SystemConfig) -> float:
    return config.noise_psd * config.bandwidth * config.noise_figure


def link_budget(config: SystemConfig) -> LinkBudget:
    if config.pilot_len < config.k_devices:
        raise ConfigError("orthogonal pilots need tau_p >= K", "pilot_len")
    sigma2 = noise_power(config)
    snr = config.tx_power / sigma2
    return LinkBudget(
        tx_power=config.tx_power,
        noise_power=sigma2,
        snr=snr,
        pilot_len=config.pilot_len,
        csi_var=1.0 / (config.pilot_len * snr),
        noise_psd=config.noise_psd,
        bandwidth=config.bandwidth,
        noise_figure=config.noise_figure,
    )


def add_csi_error(true_h, csi_var: float, rng: np.random.Generator):
    """Estimated channels: true channels plus i.i.d. CN(0, csi_var) errors."""
    if csi_var < 0:
        raise ValueError("csi_var must be non-negative")
    true_h = np.asarray(true_h)
    if csi_var == 0:
        return true_h.copy()
    return true_h + math.sqrt(csi_var) * complex_normal(rng, true_h.shape)
