"""Synthetic 2D demonstration families and CSV ingestion."""

from __future__ import annotations

import numpy as np

from ..core import read_trajectory_csv
from ..ncds import DemoBatch

KINDS = ("sine", "line", "arc", "s_curve")


def _shape(kind: str, s: np.ndarray, start: np.ndarray, target: np.ndarray, amplitude: float):
    """Nominal path from ``start`` to ``target`` for path parameter s in [0, 1]."""
    base = start[None, :] * (1 - s[:, None]) + target[None, :] * s[:, None]
    chord = target - start
    normal = np.array([-chord[1], chord[0]]) / (np.linalg.norm(chord) + 1e-12)
    if kind == "line":
        lateral = np.zeros_like(s)
    elif kind == "sine":
        lateral = amplitude * np.sin(2.0 * np.pi * s) * (1 - s)
    elif kind == "arc":
        lateral = amplitude * 2.0 * s * (1 - s)
    elif kind == "s_curve":
        lateral = amplitude * np.sin(np.pi * s) * np.cos(np.pi * s)
    else:
        raise ValueError(f"unknown demo kind {kind!r}; choose from {KINDS}")
    return base + lateral[:, None] * normal[None, :]


def synth_demos(
    kind: str = "sine",
    n_demos: int = 4,
    noise: float = 0.0,
    seed: int = 0,
    n_points: int = 200,
    duration: float = 5.0,
    start=(-4.0, 0.0),
    target=(0.0, 0.0),
    amplitude: float = 1.2,
    start_jitter: float = 0.25,
) -> DemoBatch:
    """Smooth 2D demonstrations that decelerate into a common target.

    Each demo starts from ``start`` shifted by a seeded offset; the offset and
    optional sample noise are tapered so every demo ends exactly on ``target``.
    """
    if n_demos < 1:
        raise ValueError("n_demos must be >= 1")
    rng = np.random.default_rng(seed)
    start = np.asarray(start, dtype=float)
    target = np.asarray(target, dtype=float)
    tau = np.linspace(0.0, 1.0, n_points)
    s = 1.0 - (1.0 - tau) ** 2
    nominal = _shape(kind, s, start, target, amplitude)
    taper = ((1.0 - s) ** 2)[:, None]
    demos = []
    for _ in range(n_demos):
        offset = rng.uniform(-start_jitter, start_jitter, size=2)
        demo = nominal + taper * offset
        if noise > 0:
            demo = demo + noise * taper * rng.normal(size=demo.shape)
        demo[-1] = target
        demos.append(demo)
    return DemoBatch(demos, duration / (n_points - 1))


def load_demos(paths) -> DemoBatch:
    """Demonstrations from trajectory CSVs; the time step of the first file is used."""
    trajs = [read_trajectory_csv(p) for p in paths]
    dt = float(np.mean(np.diff(trajs[0].t)))
    return DemoBatch([t.states for t in trajs], dt)
