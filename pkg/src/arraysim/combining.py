"""Zero-forcing receive combining, per-user SINR and spectral efficiency.

All functions accept leading batch axes: channel matrices are ``(..., M, K)``
and per-user quantities come back as ``(..., K)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Largest acceptable condition number of the Gram matrix H^H H.
MAX_GRAM_CONDITION = 1e12


class DegenerateChannel(np.linalg.LinAlgError):
    """The estimated channel Gram matrix is (numerically) singular."""


@dataclass(frozen=True)
class SeReport:
    per_user_se: np.ndarray
    mean_se: float
    frame_fraction: float


def zf_combiner_masked(estimated_h, max_condition: float = MAX_GRAM_CONDITION):
    """ZF combiner ``V = H (H^H H)^-1`` plus a mask of degenerate inputs.

    Computed from the thin SVD ``H = U S W^H`` as ``V = U S^-1 W^H``, which
    never forms the Gram matrix. Entries flagged in the returned boolean
    mask have ``cond(H^H H) > max_condition`` and their combiner is NaN.
    """
    h = np.asarray(estimated_h)
    if h.shape[-1] > h.shape[-2]:
        raise ValueError(f"zero forcing needs K <= M, got shape {h.shape}")
    u, s, wh = np.linalg.svd(h, full_matrices=False)
    s_max = s[..., 0]
    s_min = s[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        gram_cond = (s_max / s_min) ** 2
    degenerate = ~(gram_cond <= max_condition)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (u / s[..., None, :]) @ wh
    if np.any(degenerate):
        v = np.where(degenerate[..., None, None], np.nan, v)
    return v, degenerate


def zf_combiner(estimated_h, max_condition: float = MAX_GRAM_CONDITION):
    v, degenerate = zf_combiner_masked(estimated_h, max_condition)
    if np.any(degenerate):
        raise DegenerateChannel(
            f"{int(np.count_nonzero(degenerate))} channel matrix(es) with "
            f"Gram condition number above {max_condition:g}"
        )
    return v


def sinr_per_user(combiner, true_h, tx_power: float, noise_power: float):
    """Post-combining SINR of each user.

    ``gamma_k = p |v_k^H h_k|^2 / (p sum_{k' != k} |v_k^H h_k'|^2 + sigma^2 ||v_k||^2)``
    with the combiner from the channel estimate and the true channel.
    """
    v = np.asarray(combiner)
    h = np.asarray(true_h)
    if v.shape != h.shape:
        raise ValueError(f"combiner {v.shape} and channel {h.shape} shapes differ")
    # gains[..., k, k'] = |v_k^H h_k'|^2
    gains = np.abs(np.swapaxes(v, -1, -2).conj() @ h) ** 2
    desired = np.diagonal(gains, axis1=-2, axis2=-1)
    k = gains.shape[-1]
    interference = np.where(np.eye(k, dtype=bool), 0.0, gains).sum(axis=-1)
    noise = noise_power * np.sum(np.abs(v) ** 2, axis=-2)
    return tx_power * desired / (tx_power * interference + noise)


def se_from_sinr_samples(sinr_samples, tau_p: int, tau_c: int) -> SeReport:
    """Average achievable SE from SINR samples of shape ``(n_samples, K)``."""
    if not 0 <= tau_p < tau_c:
        raise ValueError(f"need 0 <= tau_p < tau_c, got tau_p={tau_p}, tau_c={tau_c}")
    samples = np.asarray(sinr_samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.size == 0 or samples.shape[0] == 0:
        raise ValueError("no SINR samples")
    fraction = (tau_c - tau_p) / tau_c
    per_user = fraction * np.mean(np.log2(1 + samples), axis=0)
    return SeReport(per_user, float(np.mean(per_user)), fraction)
