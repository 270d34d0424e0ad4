"""Contraction-preserving obstacle avoidance for learned dynamical systems."""

from . import barrier, core, diffeo, metrics, modulate, ncds, nnet, sdf
from .barrier import BarrierConfig, b_inv, b_swept, generator
from .core import IntegrationError, SolverKind, Trajectory, integrate_ode, propagate, sym_max_eig
from .diffeo import FlowMap, FlowStats, SingularityWarning
from .modulate import ConfigError, FrictionConfig, ModulatedSystem, ModulationMethod
from .ncds import NCDSModel

__version__ = "0.1.0"

__all__ = [
    "BarrierConfig", "ConfigError", "FlowMap", "FlowStats", "FrictionConfig", "IntegrationError", "ModulatedSystem",
    "ModulationMethod", "NCDSModel", "SingularityWarning", "SolverKind", "Trajectory", "b_inv", "b_swept",
    "barrier", "core", "diffeo", "generator", "integrate_ode", "metrics", "modulate", "ncds", "nnet", "propagate",
    "sdf", "sym_max_eig",
]
