"""Scenario configuration: JSON-backed dataclasses and their validation."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

from ..barrier import BarrierConfig
from ..core import SolverKind
from ..modulate import ConfigError, ModulationMethod
from .rollout import RolloutConfig

SEED_ENV = "SDTLAB_SEED"
BUILTIN_PREFIX = "builtin:"
PLACEMENTS = ("path", "fixed")


def builtin_path(name: str) -> Path:
    """Location of a checkpoint shipped with the package."""
    return Path(str(resources.files("sdtlab") / "data" / f"{name}.json"))


def resolve_checkpoint(ref: str) -> Path:
    path = builtin_path(ref[len(BUILTIN_PREFIX):]) if ref.startswith(BUILTIN_PREFIX) else Path(ref)
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {ref}")
    return path


@dataclass(frozen=True)
class DemoSource:
    """Synthetic family (``kind`` ...) or, when ``csv`` is nonempty, trajectory files."""

    kind: str = "sine"
    n_demos: int = 4
    noise: float = 0.0
    seed: int = 0
    csv: tuple = ()


@dataclass(frozen=True)
class DynamicsConfig:
    """``checkpoint`` (a path or ``builtin:<name>``) or an ``analytic`` skill id, then rescaled."""

    checkpoint: str | None = "builtin:sine_ncds"
    analytic: str | None = None
    analytic_params: dict = field(default_factory=dict)
    length_scale: float = 3.0
    time_scale: float = 2.0


@dataclass(frozen=True)
class ObstacleConfig:
    """Obstacle shape in its own frame and how each trial places it.

    ``placement="path"`` centres it on the obstacle-free rollout at an
    arc-length fraction drawn from ``along``; ``"fixed"`` uses ``pose``.
    A uniform offset in [-jitter, jitter] per axis is added either way.
    ``shapes`` cycles over the trials, so mixed scenes are possible.
    """

    shapes: tuple = ({"kind": "circle", "center": [0.0, 0.0], "radius": 0.9},)
    sdf_kind: str = "analytic"
    placement: str = "path"
    along: tuple = (0.3, 0.6)
    pose: tuple = (0.0, 0.0)
    jitter: tuple = (0.9, 0.9)

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement must be one of {PLACEMENTS}")
        if not self.shapes:
            raise ConfigError("at least one obstacle shape is required")
        lo, hi = self.along
        if not 0 <= lo <= hi <= 1:
            raise ConfigError("along must satisfy 0 <= lo <= hi <= 1")


@dataclass(frozen=True)
class FlowConfig:
    horizon: float = 1.0
    solver: SolverKind = SolverKind("rk4", 10)
    jac_method: str = "finite_difference"


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str = "sine_circle"
    seed: int = 0
    trials: int = 40
    demos: DemoSource = DemoSource()
    dynamics: DynamicsConfig = DynamicsConfig()
    obstacle: ObstacleConfig = ObstacleConfig()
    method: ModulationMethod = ModulationMethod()
    barrier: BarrierConfig = BarrierConfig()
    flow: FlowConfig = FlowConfig()
    rollout: RolloutConfig = RolloutConfig()
    start: tuple | None = None
    timing_samples: int = 5

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.timing_samples < 0:
            raise ConfigError("timing_samples must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.to_dict()
        d["flow"]["solver"] = self.flow.solver.to_dict()
        return _jsonable(d)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        try:
            flow = dict(d.pop("flow", {}))
            if "solver" in flow:
                flow["solver"] = SolverKind.from_dict(flow["solver"])
            obstacle = dict(d.pop("obstacle", {}))
            for key in ("shapes", "along", "pose", "jitter"):
                if key in obstacle:
                    obstacle[key] = tuple(obstacle[key])
            demos = dict(d.pop("demos", {}))
            if "csv" in demos:
                demos["csv"] = tuple(demos["csv"])
            start = d.pop("start", None)
            return cls(
                demos=DemoSource(**demos),
                dynamics=DynamicsConfig(**d.pop("dynamics", {})),
                obstacle=ObstacleConfig(**obstacle),
                method=ModulationMethod.from_dict(d.pop("method", {})),
                barrier=BarrierConfig.from_dict(d.pop("barrier", {})),
                flow=FlowConfig(**flow),
                rollout=RolloutConfig(**d.pop("rollout", {})),
                start=None if start is None else tuple(start),
                **d,
            )
        except TypeError as exc:
            raise ConfigError(f"invalid scenario config: {exc}") from exc

    def with_env_seed(self) -> "ScenarioConfig":
        """Apply the ``SDTLAB_SEED`` override to the placement and demo seeds."""
        raw = os.environ.get(SEED_ENV)
        if raw is None or raw == "":
            return self
        try:
            seed = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
        return replace(self, seed=seed, demos=replace(self.demos, seed=seed))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def load_config(path) -> ScenarioConfig:
    return ScenarioConfig.from_dict(json.loads(Path(path).read_text())).with_env_seed()


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2))
