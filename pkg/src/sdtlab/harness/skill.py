"""Base dynamics for scenarios: trained NCDS checkpoints, analytic fields and rescaling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..ncds import NCDSModel


@dataclass(frozen=True)
class LinearSkill:
    """f(x) = -rate (x - target)."""

    target: tuple = (0.0, 0.0)
    rate: float = 1.0

    @property
    def goal(self) -> np.ndarray:
        return np.asarray(self.target, dtype=float)

    def __call__(self, x):
        return -self.rate * (np.asarray(x, dtype=float) - self.goal)


@dataclass(frozen=True)
class ScaledSkill:
    """f(x) = (L / T) g(x / L): the skill ``g`` stretched by L in space and T in time.

    Contraction is kept with the rate divided by T, so a desk-scale model can
    drive a larger workspace without retraining.
    """

    base: Callable[[np.ndarray], np.ndarray]
    length_scale: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self):
        if self.length_scale <= 0 or self.time_scale <= 0:
            raise ValueError("scales must be positive")

    @property
    def goal(self) -> np.ndarray:
        return self.length_scale * skill_goal(self.base)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.length_scale / self.time_scale) * np.asarray(self.base(x / self.length_scale))


def skill_goal(f) -> np.ndarray:
    """Equilibrium of a skill: the anchor of an NCDS, or the skill's own ``goal``."""
    if isinstance(f, NCDSModel):
        if np.any(f.xdot0 != 0):
            raise ValueError("NCDS anchored with nonzero velocity has no known equilibrium")
        return f.x0.copy()
    goal = getattr(f, "goal", None)
    if goal is None:
        raise ValueError("skill exposes no goal")
    return np.asarray(goal, dtype=float)


ANALYTIC = {"linear": LinearSkill}
