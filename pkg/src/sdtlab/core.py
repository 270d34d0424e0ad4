"""Trajectories, fixed-step ODE solvers and small linear-algebra checks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

VectorField = Callable[[np.ndarray], np.ndarray]

SOLVER_VARIANTS = ("convex", "euler", "rk4", "rk4_classic")


class IntegrationError(RuntimeError):
    """Raised when a solver produces a non-finite state."""

    def __init__(self, message: str, partial: np.ndarray | None = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SolverKind:
    """Fixed-step solver selection.

    ``rk4`` is the 3/8-rule tableau, ``rk4_classic`` the textbook one.
    ``convex`` ignores ``steps`` and takes a single full-horizon Euler step.
    """

    variant: str = "rk4"
    steps: int = 10

    def __post_init__(self):
        if self.variant not in SOLVER_VARIANTS:
            raise ValueError(f"unknown solver {self.variant!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def n_steps(self) -> int:
        return 1 if self.variant == "convex" else self.steps

    @property
    def evals_per_step(self) -> int:
        return 4 if self.variant.startswith("rk4") else 1

    def to_dict(self) -> dict:
        return {"variant": self.variant, "steps": self.steps}

    @classmethod
    def from_dict(cls, d: dict) -> "SolverKind":
        return cls(d.get("variant", "rk4"), int(d.get("steps", 10)))


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    failed: bool = False
    error: str | None = None
    events: tuple = field(default_factory=tuple)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.states, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if t.ndim != 1 or len(t) != len(x):
            raise ValueError("t and states must have matching length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "states", x)

    @classmethod
    def uniform(cls, states, dt: float, t0: float = 0.0, **kw) -> "Trajectory":
        states = np.asarray(states, dtype=float)
        return cls(t0 + dt * np.arange(len(states)), states, **kw)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def path_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.states, axis=0), axis=1)))

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    header = ["t"] + [f"x{i + 1}" for i in range(traj.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for ti, xi in zip(traj.t, traj.states):
            w.writerow([repr(float(ti))] + [repr(float(v)) for v in xi])


def read_trajectory_csv(path) -> Trajectory:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [r for r in rows[1:] if r]
    if not header or header[0].strip() != "t":
        raise ValueError(f"{path}: expected header 't,x1,...,xD'")
    data = np.array([[float(v) for v in r] for r in body], dtype=float)
    return Trajectory(data[:, 0], data[:, 1:])


def _step(field: VectorField, x: np.ndarray, h: float, variant: str) -> np.ndarray:
    if variant in ("euler", "convex"):
        return x + h * field(x)
    if variant == "rk4":
        # 3/8 rule
        k1 = field(x)
        k2 = field(x + h * k1 / 3.0)
        k3 = field(x + h * (k2 - k1 / 3.0))
        k4 = field(x + h * (k1 - k2 + k3))
        return x + h * (k1 + 3.0 * k2 + 3.0 * k3 + k4) / 8.0
    k1 = field(x)
    k2 = field(x + 0.5 * h * k1)
    k3 = field(x + 0.5 * h * k2)
    k4 = field(x + h * k3)
    return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def propagate(field: VectorField, x0, horizon: float, solver: SolverKind) -> np.ndarray:
    """Final state of ``x' = field(x)`` after ``horizon``.

    ``x0`` may carry leading batch dimensions; ``field`` must broadcast over
    them. A negative horizon integrates backwards in time.
    """
    x = np.array(x0, dtype=float)
    n = solver.n_steps
    h = horizon / n
    for i in range(n):
        x = _step(field, x, h, solver.variant)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state after step {i + 1}", x)
    return x


def integrate_ode(field: VectorField, x0, horizon: float, solver: SolverKind) -> Trajectory:
    """Roll out ``x' = field(x)`` on ``[0, horizon]`` and keep every step.

    A non-finite field value stops the integration; the samples computed so
    far are returned with ``failed=True``.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    x = np.array(x0, dtype=float).reshape(-1)
    n = solver.n_steps
    h = horizon / n
    states = [x]
    for i in range(n):
        with np.errstate(all="ignore"):
            nxt = _step(field, states[-1], h, solver.variant)
        if not np.all(np.isfinite(nxt)):
            return Trajectory.uniform(states, h, failed=True, error=f"non-finite state at step {i + 1}")
        states.append(nxt)
    return Trajectory.uniform(states, h)


def default_fd_step(x) -> float:
    return 1e-5 * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0)


def finite_diff_jacobian(f: VectorField, x, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``; entry (i, j) = df_i/dx_j."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if h is None:
        h = default_fd_step(x)
    if h <= 0:
        raise ValueError("h must be positive")
    cols = []
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        fp = np.atleast_1d(np.asarray(f(x + e), dtype=float))
        fm = np.atleast_1d(np.asarray(f(x - e), dtype=float))
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise FloatingPointError(f"non-finite evaluation along axis {j}")
        cols.append((fp - fm) / (2.0 * h))
    return np.stack(cols, axis=-1)


def sym_max_eig(J) -> float:
    """Largest eigenvalue of the symmetric part of a square matrix."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {J.shape}")
    return float(np.linalg.eigvalsh(0.5 * (J + J.T))[-1])
