"""Fixed-step rollouts of many independent scenes at once."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import Trajectory
from ..diffeo import SingularityWarning


@dataclass(frozen=True)
class RolloutConfig:
    dt: float = 0.02
    max_steps: int = 1500
    goal_tol: float = 1e-2
    stall_tol: float = 1e-3

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Rollout:
    """One rollout: visited states, applied velocities and the events that occurred.

    ``status`` is "goal", "stalled", "collision" or "max_steps".
    """

    traj: Trajectory
    velocities: np.ndarray
    status: str
    events: list = field(default_factory=list)


def rollout_batch(velocity, starts, goal, cfg: RolloutConfig, field=None, offsets=None,
                  t_save: float = 0.0, sat_level: float | None = None) -> list[Rollout]:
    """Euler rollouts x <- x + dt v(x) for K starts, each stopped independently.

    ``velocity(X, offsets)`` evaluates the K active rows. A rollout stops at
    ``goal`` (within goal_tol), when its speed falls below stall_tol times its
    initial speed, when the state enters the obstacle (Gamma < 0, a collision)
    or after max_steps. With ``field`` set, Gamma is tracked per row in the
    obstacle frame ``x - offsets`` and shell entries (Gamma < t_save) and
    barrier saturations (Gamma <= sat_level) are logged.
    """
    X = np.array(starts, dtype=float)
    K, D = X.shape
    off = np.zeros((K, D)) if offsets is None else np.broadcast_to(np.asarray(offsets, dtype=float), (K, D))
    goal = np.asarray(goal, dtype=float)
    states = [[x.copy()] for x in X]
    vels = [[] for _ in range(K)]
    events = [[] for _ in range(K)]
    status = ["max_steps"] * K
    flags = {"shell_entry": np.zeros(K, bool), "saturation": np.zeros(K, bool)}
    v0 = np.zeros(K)
    active = np.arange(K)
    stats = getattr(getattr(velocity, "__self__", None), "flow", None)
    stats = getattr(stats, "stats", None)

    def log_gamma(idx, step):
        g = np.asarray(field.eval(X[idx] - off[idx]), dtype=float)
        hit = []
        for j, k in enumerate(idx):
            if g[j] < 0:
                events[k].append({"step": step, "kind": "collision", "gamma": float(g[j])})
                status[k] = "collision"
                hit.append(k)
                continue
            for name, level in (("shell_entry", t_save), ("saturation", sat_level)):
                if level is not None and g[j] < level and not flags[name][k]:
                    flags[name][k] = True
                    events[k].append({"step": step, "kind": name, "gamma": float(g[j])})
        return hit

    if field is not None:
        done = log_gamma(active, 0)
        active = np.array([k for k in active if k not in done], dtype=int)
    for step in range(cfg.max_steps):
        if len(active) == 0:
            break
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SingularityWarning)
            V = np.asarray(velocity(X[active], off[active]), dtype=float)
        for w in caught:
            if not issubclass(w.category, SingularityWarning):
                warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
        if any(issubclass(w.category, SingularityWarning) for w in caught):
            conds = None if stats is None else stats.last_conditions
            for j, k in enumerate(active):
                if conds is None or (j < len(conds) and conds[j] > 1e8):
                    events[k].append({"step": step, "kind": "singularity"})
        speed = np.linalg.norm(V, axis=1)
        if step == 0:
            v0[active] = speed
        keep = []
        for j, k in enumerate(active):
            if not np.all(np.isfinite(V[j])):
                events[k].append({"step": step, "kind": "non_finite"})
                status[k] = "stalled"
                continue
            vels[k].append(V[j].copy())
            X[k] = X[k] + cfg.dt * V[j]
            states[k].append(X[k].copy())
            keep.append(k)
        active = np.array(keep, dtype=int)
        if field is not None and len(active):
            done = log_gamma(active, step + 1)
            active = np.array([k for k in active if k not in done], dtype=int)
        keep = []
        for k in active:
            if np.linalg.norm(X[k] - goal) < cfg.goal_tol:
                status[k] = "goal"
            elif np.linalg.norm(vels[k][-1]) < cfg.stall_tol * max(v0[k], 1e-300):
                status[k] = "stalled"
                events[k].append({"step": step + 1, "kind": "stalled"})
            else:
                keep.append(k)
        active = np.array(keep, dtype=int)
    out = []
    for k in range(K):
        S = np.array(states[k])
        Vk = np.array(vels[k]) if vels[k] else np.zeros((0, D))
        out.append(Rollout(Trajectory.uniform(S, cfg.dt), Vk, status[k], events[k]))
    return out
