"""Named benchmark scenarios: the sine skill with obstacles placed on its path."""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..barrier import BarrierConfig
from ..core import finite_diff_jacobian, sym_max_eig
from ..diffeo import FlowMap
from ..modulate import ModulatedSystem, ModulationMethod
from .config import ObstacleConfig, ScenarioConfig
from .scenario import ScenarioReport, run_scenario

CIRCLE = {"kind": "circle", "center": [0.0, 0.0], "radius": 0.9}
BOX = {"kind": "box", "center": [0.0, 0.0], "half_extents": [0.8, 0.6]}


def sine_config(variant: str = "sdc", s_grad: float = 0.1, swept: str = "none", trials: int = 40, seed: int = 0,
                shapes=(CIRCLE,), t_save: float = 0.1, scenario_id: str | None = None) -> ScenarioConfig:
    """Sine skill at 3x desk scale; each trial places an obstacle astride the path.

    The obstacle centre sits at 30-60 % of the path's arc length, shifted by
    up to one circle radius on each axis.
    """
    sid = scenario_id or f"sine_{variant}_{swept}_s{s_grad:g}"
    return ScenarioConfig(
        scenario_id=sid, seed=seed, trials=trials,
        obstacle=ObstacleConfig(shapes=tuple(shapes), sdf_kind="analytic"),
        method=ModulationMethod(variant),
        barrier=BarrierConfig(s_grad=s_grad, t_save=t_save, swept=swept),
    )


def convex_scenes(variant: str, trials: int = 50, seed: int = 0) -> ScenarioConfig:
    """Alternating circle and box obstacles on the sine path."""
    return sine_config(variant, trials=trials, seed=seed, shapes=(CIRCLE, BOX), scenario_id=f"convex_{variant}")


GAIN_SWEEP = (0.05, 0.1, 0.2)
SWEPT_COMPARISON = {
    "sdc_inv": ("sdc", 0.1, "none"),
    "sdc_swept": ("sdc", 0.1, "scene"),
    "sddc_inv": ("sddc", 0.05, "none"),
    "sddc_swept": ("sddc", 0.05, "scene"),
}


def gain_sweep_runs(trials: int = 40, seed: int = 0) -> dict[float, ScenarioReport]:
    """SDC with the inverse barrier at each s_grad."""
    return {s: run_scenario(sine_config("sdc", s, trials=trials, seed=seed), timing_samples=0) for s in GAIN_SWEEP}


def swept_comparison_runs(trials: int = 40, seed: int = 0) -> dict[str, ScenarioReport]:
    """SDC and SDDC, with and without the swept barrier."""
    return {name: run_scenario(sine_config(v, s, sw, trials=trials, seed=seed), timing_samples=0)
            for name, (v, s, sw) in SWEPT_COMPARISON.items()}


def with_trials(cfg: ScenarioConfig, trials: int) -> ScenarioConfig:
    return replace(cfg, trials=trials)


def naive_counterexample(path=None) -> dict:
    """The shipped scene for the naive-reactive contraction violation: f_c = -alpha x, one circle."""
    from ..sdf import field_from_dict
    from .config import builtin_path

    d = json.loads(Path(path or builtin_path("naive_counterexample")).read_text())
    return {"alpha": float(d["alpha"]), "obstacle": field_from_dict(d["obstacle"]),
            "barrier": BarrierConfig.from_dict(d["barrier"]), "grid": d["grid"]}


def scan_naive_violation(scene: dict) -> dict:
    """Largest symmetric-Jacobian eigenvalue of the naive field and of f_c over the scene grid.

    Grid points inside the saturated shell (Gamma <= t_save) are skipped since
    b is not differentiable there.
    """
    alpha, obstacle, barrier = scene["alpha"], scene["obstacle"], scene["barrier"]
    g = scene["grid"]
    axes = [np.linspace(lo, hi, g["n"]) for lo, hi in zip(g["lo"], g["hi"])]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    pts = pts[obstacle.eval(pts) > barrier.t_save + 1e-3]
    base = lambda x: -alpha * np.asarray(x)  # noqa: E731
    system = ModulatedSystem(base, FlowMap(obstacle, barrier), ModulationMethod("naive"))
    naive = np.array([sym_max_eig(finite_diff_jacobian(system.velocity, x)) for x in pts])
    # f_c is linear, so its Jacobian -alpha I is exact at every point
    base_eig = np.full(len(pts), sym_max_eig(-alpha * np.eye(pts.shape[1])))
    k = int(np.argmax(naive))
    return {"max_eig": float(naive[k]), "at": pts[k], "violations": int(np.sum(naive > 0)),
            "points": len(pts), "base_max_eig": float(base_eig.max())}
