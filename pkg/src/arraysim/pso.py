"""Bounded particle swarm maximisation over a handful of continuous variables."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import ConfigError


class Termination(enum.Enum):
    MAX_ITERATIONS = "MaxIterations"
    STALL_TOLERANCE = "StallTolerance"


@dataclass(frozen=True)
class PsoParams:
    n_vars: int = 1
    inertia_range: tuple = (0.1, 1.1)
    cognitive: float = 1.49
    social: float = 1.49
    swarm_size: Optional[int] = None
    max_iterations: Optional[int] = None
    max_stall: int = 20
    tolerance: float = 1e-6
    inertia_schedule: str = "adaptive"
    velocity_scale: float = 0.25

    def __post_init__(self):
        # swarm size and iteration cap scale with the number of variables
        if self.swarm_size is None:
            object.__setattr__(self, "swarm_size", min(100, 10 * self.n_vars))
        if self.max_iterations is None:
            object.__setattr__(self, "max_iterations", 200 * self.n_vars)
        if self.swarm_size < 2:
            raise ConfigError("swarm needs at least two particles", "swarm_size")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1", "max_iterations")
        w_min, w_max = self.inertia_range
        if not 0 <= w_min <= w_max:
            raise ConfigError("inertia range must satisfy 0 <= w_min <= w_max", "inertia_range")
        if self.inertia_schedule not in ("adaptive", "linear"):
            raise ConfigError("inertia_schedule must be 'adaptive' or 'linear'", "inertia_schedule")
        if self.velocity_scale < 0:
            raise ConfigError("velocity_scale must be >= 0", "velocity_scale")

    def inertia(self, iteration: int) -> float:
        """Linear schedule: w_max at iteration 1 down to w_min at the cap."""
        w_min, w_max = self.inertia_range
        if self.max_iterations == 1:
            return w_max
        frac = (iteration - 1) / (self.max_iterations - 1)
        return w_max - (w_max - w_min) * frac


@dataclass
class PsoResult:
    best_position: np.ndarray
    best_value: float
    iterations_used: int
    termination: Termination
    history: list = field(default_factory=list, repr=False)


def _relative_change(new: float, old: float) -> float:
    if new == old:
        return 0.0
    if not (math.isfinite(new) and math.isfinite(old)):
        return math.inf
    return abs(new - old) / max(abs(new), 1e-30)


def optimize(
    f: Callable,
    lower,
    upper,
    params: Optional[PsoParams] = None,
    rng: Optional[np.random.Generator] = None,
    vectorized: bool = False,
    initial_positions=None,
    periodic=None,
) -> PsoResult:
    """Maximise ``f`` over the box ``[lower, upper]`` with a particle swarm.

    Parameters
    ----------
    f : callable
        Objective. Called with one position vector at a time, or with the
        whole ``(swarm_size, n_vars)`` swarm when ``vectorized`` is true (in
        which case it must return ``swarm_size`` values).
    lower, upper : array_like
        Per-variable bounds with ``lower < upper``.
    params : PsoParams, optional
        Defaults derive from the number of variables.
    rng : numpy.random.Generator, optional
        Source of all randomness; the run is reproducible given its state.
    vectorized : bool
        Whether ``f`` takes the whole swarm at once.
    initial_positions : array_like, optional
        Rows that replace the first particles of the random initial swarm.
    periodic : array_like of bool, optional
        Variables whose objective repeats with period ``upper - lower``.
        These wrap around instead of hitting a wall.

    Returns
    -------
    PsoResult
        Global best and termination details. ``history`` holds the global
        best value after initialisation and after every iteration.

    Notes
    -----
    The default ``"adaptive"`` inertia starts at ``w_max``. A streak counter
    goes up on every non-improving iteration and down on every improving
    one; ``w`` doubles while the counter is below 2 and halves while it is
    above 5, clamped to ``inertia_range``. Under a fixed linear decay the
    stall rule tends to fire while ``w > 1`` still makes the swarm diverge.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != upper.shape or lower.ndim != 1 or lower.size == 0:
        raise ConfigError("bounds must be matching non-empty 1-D arrays")
    if not np.all(np.isfinite(lower) & np.isfinite(upper)) or np.any(lower >= upper):
        raise ConfigError("each lower bound must be finite and below its upper bound")
    n_vars = lower.size
    periodic = np.zeros(n_vars, bool) if periodic is None else np.asarray(periodic, bool)
    if periodic.shape != (n_vars,):
        raise ConfigError("periodic mask must have one entry per variable")
    if params is None:
        params = PsoParams(n_vars=n_vars)
    if rng is None:
        rng = np.random.default_rng()
    n = params.swarm_size
    span = upper - lower

    if vectorized:
        def evaluate(pos):
            return np.asarray(f(pos), dtype=float).reshape(n)
    else:
        def evaluate(pos):
            return np.array([float(f(p)) for p in pos])

    pos = lower + span * rng.random((n, n_vars))
    vel = params.velocity_scale * span * rng.uniform(-1.0, 1.0, size=(n, n_vars))
    if initial_positions is not None:
        seeds = np.atleast_2d(np.asarray(initial_positions, dtype=float))[:n]
        pos[: len(seeds)] = np.clip(seeds, lower, upper)

    values = evaluate(pos)
    best_pos = pos.copy()
    best_val = values.copy()
    g = int(np.argmax(best_val))
    g_pos = best_pos[g].copy()
    g_val = float(best_val[g])
    history = [g_val]

    w_min, w_max = params.inertia_range
    w = w_max
    streak = 0
    stall = 0
    termination = Termination.MAX_ITERATIONS
    iteration = 0
    for iteration in range(1, params.max_iterations + 1):
        if params.inertia_schedule == "linear":
            w = params.inertia(iteration)
        r = rng.random((n, 2, n_vars))
        vel = (
            w * vel
            + params.cognitive * r[:, 0] * (best_pos - pos)
            + params.social * r[:, 1] * (g_pos - pos)
        )
        pos = pos + vel
        wrapped = np.where(periodic, lower + np.mod(pos - lower, span), pos)
        # absorbing walls on the non-periodic variables
        outside = ~periodic & ((pos < lower) | (pos > upper))
        pos = np.clip(wrapped, lower, upper)
        vel[outside] = 0.0

        values = evaluate(pos)
        improved = values > best_val
        best_pos[improved] = pos[improved]
        best_val[improved] = values[improved]

        previous = g_val
        g = int(np.argmax(best_val))
        if best_val[g] > g_val:
            g_pos = best_pos[g].copy()
            g_val = float(best_val[g])
        history.append(g_val)

        if _relative_change(g_val, previous) < params.tolerance:
            stall += 1
            streak += 1
        else:
            stall = 0
            streak = max(0, streak - 1)
        if streak < 2:
            w = min(2 * w, w_max)
        elif streak > 5:
            w = max(w / 2, w_min)
        if stall > params.max_stall:
            termination = Termination.STALL_TOLERANCE
            break

    return PsoResult(g_pos, g_val, iteration, termination, history)
