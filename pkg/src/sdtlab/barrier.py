"""Barrier functions on the SDF gradient and the flow generator built from them."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .sdf import SdfField

SWEPT_MODES = ("none", "robot", "scene")


@dataclass(frozen=True)
class BarrierConfig:
    s_grad: float = 0.1
    t_save: float = 0.1
    swept: str = "none"
    combine: bool = True
    b_cap: float = 1e3

    def __post_init__(self):
        if self.s_grad <= 0:
            raise ValueError("s_grad must be positive")
        if self.t_save < 0:
            raise ValueError("t_save must be non-negative")
        if self.b_cap <= 0:
            raise ValueError("b_cap must be positive")
        if self.swept not in SWEPT_MODES:
            raise ValueError(f"swept must be one of {SWEPT_MODES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BarrierConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def b_inv(gamma, cfg: BarrierConfig):
    """s_grad / (gamma - t_save) clipped to [0, b_cap]; saturated at or below t_save."""
    gap = np.asarray(gamma, dtype=float) - cfg.t_save
    # s / max(gap, s / cap) equals the clipped barrier and is b_cap for gap <= 0
    b = cfg.s_grad / np.maximum(gap, cfg.s_grad / cfg.b_cap)
    return float(b) if b.ndim == 0 else b


def b_swept(v, g, mode: str):
    """Cosine weighting of the barrier by the motion direction.

    robot: (1 + cos)/2, scene: (1 - cos)/2, with cos the angle between v and g.
    A zero v or g carries no direction and gives 1.
    """
    if mode not in ("robot", "scene"):
        raise ValueError("mode must be 'robot' or 'scene'")
    v = np.asarray(v, dtype=float)
    g = np.asarray(g, dtype=float)
    nv = np.linalg.norm(v, axis=-1)
    ng = np.linalg.norm(g, axis=-1)
    ok = (nv > 0) & (ng > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.clip(np.sum(v * g, axis=-1) / np.where(ok, nv * ng, 1.0), -1.0, 1.0)
    w = 0.5 * (1.0 + cos) if mode == "robot" else 0.5 * (1.0 - cos)
    w = np.where(ok, w, 1.0)
    return float(w) if w.ndim == 0 else w


def barrier_value(gamma, grad, cfg: BarrierConfig, v_base=None):
    """Combined scalar b for the configured barrier.

    With a swept mode set, b = b_inv * b_swept when ``combine`` is true and
    b_swept alone otherwise. ``v_base`` of None disables the swept factor.
    """
    b = b_inv(gamma, cfg)
    if cfg.swept != "none" and v_base is not None:
        w = b_swept(np.broadcast_to(v_base, np.shape(grad)), grad, cfg.swept)
        b = b * w if cfg.combine else w
    return b


def generator(field: SdfField, cfg: BarrierConfig, q, v_base=None, with_info: bool = False):
    """V(q) = -b(q) grad Gamma(q), batched over leading dimensions of ``q``.

    ``with_info`` also returns (gamma, saturated mask).
    """
    q = np.asarray(q, dtype=float)
    gamma, grad = field.eval_and_gradient(q)
    b = np.asarray(barrier_value(gamma, grad, cfg, v_base))
    V = -b[..., None] * grad
    if with_info:
        return V, gamma, np.asarray(gamma) <= cfg.t_save + cfg.s_grad / cfg.b_cap
    return V
