"""Scenario execution: obstacle placement, batched rollouts, metrics, timings and reports."""

from __future__ import annotations

import csv
import json
import logging
import timeit
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import metrics as M
from ..core import SolverKind, Trajectory
from ..diffeo import FlowMap, FlowStats, SingularityWarning
from ..modulate import ConfigError, ModulatedSystem
from ..ncds import load_model
from ..sdf import load_field
from ..sdf.io import FORMAT_VERSION, field_from_dict
from .config import ScenarioConfig, resolve_checkpoint
from .demos import load_demos, synth_demos
from .rollout import Rollout, rollout_batch
from .skill import ANALYTIC, ScaledSkill, skill_goal

log = logging.getLogger(__name__)

REPORT_VERSION = 1
CSV_COLUMNS = ["scenario_id", "method", "sdf_kind", "s_grad", "mj", "rfc", "vm", "dtwd", "d_min",
               "t_step_ms", "t_flow_ms", "t_jac_ms"]


@dataclass
class TrialRecord:
    index: int
    offset: list
    shape: int
    status: str
    failed: bool
    metrics: dict
    timing: dict
    events: list
    trajectory: list


@dataclass
class ScenarioReport:
    scenario_id: str
    method: str
    sdf_kind: str
    s_grad: float
    config: dict
    base_trajectory: list
    trials: list
    flow_stats: dict = field(default_factory=dict)
    version: int = REPORT_VERSION

    def metric(self, name: str) -> np.ndarray:
        return np.array([t.metrics[name] for t in self.trials], dtype=float)

    def summary(self) -> dict:
        """Means over all trials plus outcome counts."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out = {name: float(np.nanmean(self.metric(name))) for name in ("rfc", "vm", "dtwd", "mj", "d_min")}
        statuses = [t.status for t in self.trials]
        out.update(trials=len(self.trials), failed=sum(t.failed for t in self.trials),
                   **{f"n_{s}": statuses.count(s) for s in sorted(set(statuses))})
        for key in ("t_step_ms", "t_flow_ms", "t_jac_ms"):
            out[key] = float(np.median([t.timing[key] for t in self.trials]))
        return out

    def to_dict(self) -> dict:
        """Plain JSON types; NaN metrics become None."""
        return _denan(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioReport":
        d = dict(d)
        for t in d.get("trials", []):
            t["metrics"] = {k: (float("nan") if v is None else v) for k, v in t["metrics"].items()}
        if d.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported report version {d.get('version')}")
        d["trials"] = [TrialRecord(**t) for t in d["trials"]]
        return cls(**d)


def _denan(obj):
    if isinstance(obj, dict):
        return {k: _denan(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_denan(v) for v in obj]
    if isinstance(obj, float) and np.isnan(obj):
        return None
    return obj


# -- building blocks -----------------------------------------------------------


def build_skill(cfg: ScenarioConfig):
    dyn = cfg.dynamics
    if dyn.checkpoint:
        base = load_model(resolve_checkpoint(dyn.checkpoint))
    elif dyn.analytic:
        if dyn.analytic not in ANALYTIC:
            raise ConfigError(f"unknown analytic skill {dyn.analytic!r}; choose from {sorted(ANALYTIC)}")
        base = ANALYTIC[dyn.analytic](**dyn.analytic_params)
    else:
        raise ConfigError("dynamics needs a checkpoint or an analytic skill")
    return ScaledSkill(base, dyn.length_scale, dyn.time_scale)


def build_demos(cfg: ScenarioConfig):
    src = cfg.demos
    if src.csv:
        return load_demos(src.csv)
    return synth_demos(src.kind, src.n_demos, noise=src.noise, seed=src.seed)


def start_state(cfg: ScenarioConfig) -> np.ndarray:
    if cfg.start is not None:
        return np.asarray(cfg.start, dtype=float)
    return build_demos(cfg).demos[0][0] * cfg.dynamics.length_scale


def shape_field(d: dict):
    """Obstacle field from a shape entry: an inline field dict or ``{"kind": "checkpoint", "path": ...}``."""
    if d.get("kind") == "checkpoint":
        path = Path(d["path"])
        if not path.is_file():
            raise ConfigError(f"SDF checkpoint not found: {path}")
        return load_field(path)
    return field_from_dict({"format_version": FORMAT_VERSION, **d})


def place_obstacles(cfg: ScenarioConfig, base_path: np.ndarray) -> np.ndarray:
    """Per-trial obstacle offsets (trials, D), seeded by ``cfg.seed``."""
    ob = cfg.obstacle
    rng = np.random.default_rng(cfg.seed)
    D = base_path.shape[1]
    jitter = np.broadcast_to(np.asarray(ob.jitter, dtype=float), (D,))
    arc = np.r_[0.0, np.cumsum(np.linalg.norm(np.diff(base_path, axis=0), axis=1))]
    out = np.empty((cfg.trials, D))
    for k in range(cfg.trials):
        if ob.placement == "path":
            u = rng.uniform(*ob.along) * arc[-1]
            anchor = base_path[min(np.searchsorted(arc, u), len(base_path) - 1)]
        else:
            anchor = np.asarray(ob.pose, dtype=float)
        out[k] = anchor + rng.uniform(-jitter, jitter)
    return out


def make_system(cfg: ScenarioConfig, skill, obstacle, stats: FlowStats | None = None) -> ModulatedSystem:
    fmap = FlowMap(obstacle, cfg.barrier, cfg.flow.horizon, cfg.flow.solver, cfg.flow.jac_method, stats=stats)
    return ModulatedSystem(skill, fmap, cfg.method)


def _median_ms(fn, reps: int) -> float:
    """Median per-call time over ``reps`` samples, looping fast calls so each sample spans >= 0.2 ms."""
    if reps == 0:
        return 0.0
    timer = timeit.Timer(fn)
    number = 1
    while timer.timeit(number) < 2e-4:
        number *= 2
    return float(np.median(timer.repeat(repeat=reps, number=number))) / number * 1e3


def step_timings(system: ModulatedSystem, y, offset, reps: int) -> dict:
    """Median wall times of one modulation step, one flow solve and one flow Jacobian at ``y``."""
    y = np.asarray(y, dtype=float)
    off = np.asarray(offset, dtype=float)
    z = (y - off)[None]
    fmap = system.flow
    if fmap.barrier.swept != "none":
        fmap = fmap.with_v_base(np.asarray(system.base(y), dtype=float)[None])
    flows = system.method.variant in ("sdc", "sddc", "dt")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularityWarning)
        return {
            "t_step_ms": _median_ms(lambda: system.velocity_batch(y[None], off[None]), reps),
            "t_flow_ms": _median_ms(lambda: fmap.forward(z), reps) if flows else 0.0,
            "t_jac_ms": _median_ms(lambda: fmap.forward_and_jacobian_batch(z), reps) if flows else 0.0,
        }


def _trial_metrics(skill, base: Rollout, mod: Rollout, obstacle, offset) -> dict:
    X = mod.traj.states
    nan = float("nan")
    angle, skipped = nan, 0
    if len(mod.velocities):
        angle, skipped = M.vm_samples(np.asarray(skill(X[:-1]), dtype=float), mod.velocities)
    long_enough = len(X) >= 5
    rep = M.MetricReport(
        rfc=M.rfc(base.traj, mod.traj) if long_enough else nan, vm=angle, dtwd=M.dtwd(base.traj, mod.traj),
        mj=M.mj(base.traj, mod.traj) if long_enough else nan, d_min=float(np.min(obstacle.eval(X - offset))),
        flags={"vm_skipped": skipped},
    )
    return rep.to_dict()


# -- entry points ----------------------------------------------------------------


def run_scenario(cfg: ScenarioConfig, timing_samples: int | None = None) -> ScenarioReport:
    """Obstacle-free rollout, then one modulated rollout per trial with its metrics.

    Trials that share an obstacle shape differ only by where the obstacle is
    placed, so they are rolled out together in one batch.
    """
    skill = build_skill(cfg)
    goal = skill_goal(skill)
    x0 = start_state(cfg)
    rc = cfg.rollout
    rc = replace(rc, goal_tol=rc.goal_tol * max(float(np.linalg.norm(x0 - goal)), 1.0))
    base = rollout_batch(lambda X, off: skill(X), x0[None], goal, rc)[0]
    offsets = place_obstacles(cfg, base.traj.states)
    shapes = [shape_field(d) for d in cfg.obstacle.shapes]
    reps = cfg.timing_samples if timing_samples is None else timing_samples
    stats = FlowStats()
    sat = cfg.barrier.t_save + cfg.barrier.s_grad / cfg.barrier.b_cap
    records: list[TrialRecord | None] = [None] * cfg.trials
    for si, obstacle in enumerate(shapes):
        idx = np.arange(si, cfg.trials, len(shapes))
        if len(idx) == 0:
            continue
        system = make_system(cfg, skill, obstacle, stats)
        starts = np.stack([system.entry_state(x0, offsets[k]) for k in idx])
        rolls = rollout_batch(system.velocity_batch, starts, goal, rc, field=obstacle, offsets=offsets[idx],
                              t_save=cfg.barrier.t_save, sat_level=sat)
        for k, r in zip(idx, rolls):
            mets = _trial_metrics(skill, base, r, obstacle, offsets[k])
            if mets["d_min"] < cfg.barrier.t_save and not any(e["kind"] == "shell_entry" for e in r.events):
                r.events.append({"step": -1, "kind": "shell_entry", "gamma": mets["d_min"]})
            probe = r.traj.states[len(r.traj) // 2]
            records[k] = TrialRecord(
                index=int(k), offset=offsets[k].tolist(), shape=si, status=r.status,
                failed=r.status == "collision" or mets["d_min"] <= 0.0, metrics=mets,
                timing=step_timings(system, probe, offsets[k], reps), events=r.events,
                trajectory=r.traj.states.tolist(),
            )
    return ScenarioReport(
        scenario_id=cfg.scenario_id, method=_method_label(cfg), sdf_kind=cfg.obstacle.sdf_kind,
        s_grad=cfg.barrier.s_grad, config=cfg.to_dict(), base_trajectory=base.traj.states.tolist(),
        trials=records, flow_stats=stats.to_dict(),
    )


def _method_label(cfg: ScenarioConfig) -> str:
    label = cfg.method.variant
    if cfg.method.variant in ("sdc", "sddc", "dt", "naive"):
        label += "_swept_" + cfg.barrier.swept if cfg.barrier.swept != "none" else "_inv"
    return label


def export_report(report: ScenarioReport, path, fmt: str = "json") -> Path:
    """Write the report as JSON (everything) or CSV (one metrics row per trial)."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report.to_dict(), allow_nan=False))
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for t in report.trials:
                w.writerow([report.scenario_id, report.method, report.sdf_kind, report.s_grad,
                            *(t.metrics[k] for k in ("mj", "rfc", "vm", "dtwd", "d_min")),
                            *(t.timing[k] for k in ("t_step_ms", "t_flow_ms", "t_jac_ms"))])
    else:
        raise ValueError("fmt must be 'json' or 'csv'")
    return path


def load_report(path) -> ScenarioReport:
    return ScenarioReport.from_dict(json.loads(Path(path).read_text()))


def read_report_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in CSV_COLUMNS[3:]:
            row[k] = float(row[k])
    return rows


def schema_path() -> Path:
    return Path(__file__).resolve().parent.parent / "schemas" / "report.schema.json"


def validate_report(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, json.loads(schema_path().read_text()))


def trajectory_csvs(report: ScenarioReport, out_dir, dt: float) -> list[Path]:
    """One trajectory CSV per trial plus the obstacle-free rollout."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "base.csv"]
    Trajectory.uniform(np.array(report.base_trajectory), dt).to_csv(paths[0])
    for t in report.trials:
        p = out_dir / f"trial_{t.index:03d}.csv"
        Trajectory.uniform(np.array(t.trajectory), dt).to_csv(p)
        paths.append(p)
    return paths


# -- timing benchmark --------------------------------------------------------------

BENCH_COLUMNS = ["sdf_kind", "solver", "steps", "t_step_ms", "t_flow_ms", "t_jac_ms"]


def bench_timing(cfg: ScenarioConfig, repeats: int = 20, solvers=None, obstacles=None, steps: int | None = None):
    """Median per-call wall times per solver kind and obstacle field.

    ``obstacles`` maps an sdf_kind label to a field (defaults to the
    configured shape). Every solver gets the same step budget.
    """
    if repeats < 10:
        raise ValueError("repeats must be >= 10")
    skill = build_skill(cfg)
    x0 = start_state(cfg)
    n = steps if steps is not None else cfg.flow.solver.steps
    solvers = solvers or [SolverKind("convex", n), SolverKind("euler", n), SolverKind("rk4", n)]
    if obstacles is None:
        obstacles = {cfg.obstacle.sdf_kind: shape_field(cfg.obstacle.shapes[0])}
    goal = skill_goal(skill)
    probe = x0 + 0.5 * (goal - x0)
    rows = []
    for kind, obstacle in obstacles.items():
        offset = probe + np.array([0.0, obstacle_clearance(obstacle)])
        for solver in solvers:
            sub = replace(cfg, flow=replace(cfg.flow, solver=solver))
            system = make_system(sub, skill, obstacle)
            system.velocity_batch(probe[None], offset[None])  # warm-up
            t = step_timings(system, probe, offset, repeats)
            rows.append({"sdf_kind": kind, "solver": solver.variant, "steps": solver.n_steps, **t})
    return rows


def obstacle_clearance(obstacle) -> float:
    """Offset that puts the obstacle's surface about one unit from the probe point."""
    g = float(obstacle.eval(np.zeros(obstacle.dim)))
    return 1.0 - g if g < 0 else 1.0


def write_bench_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    return path
