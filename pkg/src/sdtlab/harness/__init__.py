from .config import (DemoSource, DynamicsConfig, FlowConfig, ObstacleConfig, ScenarioConfig, load_config,
                     save_config)
from .demos import load_demos, synth_demos
from .rollout import Rollout, RolloutConfig, rollout_batch
from .scenario import (ScenarioReport, TrialRecord, bench_timing, export_report, load_report, read_report_csv,
                       run_scenario, validate_report, write_bench_csv)
from .skill import LinearSkill, ScaledSkill

__all__ = [
    "DemoSource", "DynamicsConfig", "FlowConfig", "LinearSkill", "ObstacleConfig", "Rollout", "RolloutConfig",
    "ScaledSkill", "ScenarioConfig", "ScenarioReport", "TrialRecord", "bench_timing", "export_report",
    "load_config", "load_demos", "load_report", "read_report_csv", "rollout_batch", "run_scenario",
    "save_config", "synth_demos", "validate_report", "write_bench_csv",
]
