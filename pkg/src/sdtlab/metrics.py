"""Trajectory comparison metrics: curvature, RFC, VM, DTWD, MJ and D_min."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .core import Trajectory

ZERO_SPEED = 1e-9


class MetricError(ValueError):
    pass


@dataclass
class MetricReport:
    rfc: float
    vm: float
    dtwd: float
    mj: float
    d_min: float
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        # NaN marks a metric that is undefined for the trial (e.g. too few samples)
        if not np.isnan(self.vm) and not 0.0 <= self.vm <= np.pi:
            raise MetricError("vm must lie in [0, pi]")
        if self.dtwd < 0:
            raise MetricError("dtwd must be non-negative")
        if not np.isfinite(self.d_min):
            raise MetricError("d_min must be finite")

    def to_dict(self) -> dict:
        return asdict(self)


def _states_and_time(traj) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(traj, Trajectory):
        return traj.states, traj.t
    raise TypeError("expected a Trajectory")


def _scale(X: np.ndarray) -> float:
    ext = float(np.max(np.ptp(X, axis=0))) if len(X) > 1 else 0.0
    return max(ext, 1.0)


def curvature(traj: Trajectory) -> np.ndarray:
    """Per-sample curvature |x'' x x'| / |x'|^3 by central differences.

    Samples with speed below 1e-9 times the path scale are set to NaN;
    ``np.isnan`` on the result gives the flagged samples.
    """
    X, t = _states_and_time(traj)
    if len(X) < 4:
        raise MetricError("curvature needs at least 4 samples")
    if X.shape[1] not in (2, 3):
        raise MetricError("curvature is defined for 2D or 3D paths")
    d1 = np.gradient(X, t, axis=0, edge_order=2)
    d2 = np.gradient(d1, t, axis=0, edge_order=2)
    speed = np.linalg.norm(d1, axis=1)
    if X.shape[1] == 2:
        cross = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    else:
        cross = np.linalg.norm(np.cross(d1, d2), axis=1)
    ok = speed > ZERO_SPEED * _scale(X)
    return np.where(ok, cross / np.where(ok, speed, 1.0) ** 3, np.nan)


def _max_curvature(traj: Trajectory) -> float:
    k = curvature(traj)
    if np.all(np.isnan(k)):
        raise MetricError("every sample has zero speed")
    return float(np.nanmax(k))


def rfc(traj_base: Trajectory, traj_mod: Trajectory) -> float:
    """Difference of the maximal curvatures."""
    return abs(_max_curvature(traj_base) - _max_curvature(traj_mod))


def vm_samples(fc: np.ndarray, fm: np.ndarray) -> tuple[float, int]:
    """Mean angle between paired velocity samples and the number of skipped pairs."""
    fc = np.atleast_2d(np.asarray(fc, dtype=float))
    fm = np.atleast_2d(np.asarray(fm, dtype=float))
    nc = np.linalg.norm(fc, axis=1)
    nm = np.linalg.norm(fm, axis=1)
    tiny = ZERO_SPEED * max(float(np.max(nc, initial=0.0)), float(np.max(nm, initial=0.0)), 1e-300)
    ok = (nc > tiny) & (nm > tiny)
    if not np.any(ok):
        raise MetricError("all velocity samples are degenerate")
    u = fc[ok] / nc[ok, None]
    w = fm[ok] / nm[ok, None]
    # same angle as arccos of the clamped cosine, but exact at 0 and pi
    angle = 2.0 * np.arctan2(np.linalg.norm(u - w, axis=1), np.linalg.norm(u + w, axis=1))
    return float(np.mean(angle)), int(np.sum(~ok))


def _eval_field(f, X: np.ndarray) -> np.ndarray:
    batch = getattr(f, "velocity_batch", None)
    if batch is not None:
        return np.asarray(batch(X), dtype=float)
    out = np.asarray(f(X), dtype=float)
    if out.shape == X.shape:
        return out
    return np.array([f(x) for x in X], dtype=float)


def vm(f_c, f_m, traj_mod: Trajectory) -> float:
    """Mean angle between f_c and f_m over the states of ``traj_mod``."""
    X = traj_mod.states if isinstance(traj_mod, Trajectory) else np.atleast_2d(traj_mod)
    return vm_samples(_eval_field(f_c, X), _eval_field(f_m, X))[0]


def dtwd(a, b) -> float:
    """Symmetric nearest-neighbour distance sum between two sample sets."""
    A = a.states if isinstance(a, Trajectory) else np.atleast_2d(np.asarray(a, dtype=float))
    B = b.states if isinstance(b, Trajectory) else np.atleast_2d(np.asarray(b, dtype=float))
    if A.size == 0 or B.size == 0:
        raise MetricError("dtwd needs nonempty inputs")
    if A.shape[1] != B.shape[1]:
        raise MetricError("dimension mismatch")
    d = cdist(A, B)
    return float(d.min(axis=0).sum() + d.min(axis=1).sum())


def max_jerk(traj: Trajectory) -> float:
    X, t = _states_and_time(traj)
    if len(X) < 5:
        raise MetricError("jerk needs at least 5 samples")
    d = X
    for _ in range(3):
        # second-order end stencils; first-order ones blow up under repetition
        d = np.gradient(d, t, axis=0, edge_order=2)
    return float(np.max(np.linalg.norm(d, axis=1)))


def mj(traj_base: Trajectory, traj_mod: Trajectory) -> float:
    """Difference of the maximal jerk magnitudes."""
    return abs(max_jerk(traj_base) - max_jerk(traj_mod))


def d_min(traj_mod, field) -> float:
    X = traj_mod.states if isinstance(traj_mod, Trajectory) else np.atleast_2d(traj_mod)
    return float(np.min(field.eval(X)))


def report(traj_base: Trajectory, traj_mod: Trajectory, fc: np.ndarray, fm: np.ndarray, field) -> MetricReport:
    """All metrics for one trial from the two rollouts and the velocity samples along the modulated one."""
    angle, skipped = vm_samples(fc, fm)
    flags = {
        "vm_skipped": skipped,
        "curvature_skipped_base": int(np.sum(np.isnan(curvature(traj_base)))),
        "curvature_skipped_mod": int(np.sum(np.isnan(curvature(traj_mod)))),
    }
    return MetricReport(
        rfc=rfc(traj_base, traj_mod), vm=angle, dtwd=dtwd(traj_base, traj_mod), mj=mj(traj_base, traj_mod),
        d_min=d_min(traj_mod, field), flags=flags,
    )
