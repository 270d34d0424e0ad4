"""Contraction-preserving modulation (SDC, SDDC), friction and the baselines."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .barrier import barrier_value, b_inv
from .diffeo import FlowMap

VARIANTS = ("sddc", "sdc", "naive", "mm", "dt", "arpf")
ETA_MODES = ("constant", "distance")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FrictionConfig:
    enabled: bool = False
    mode: str = "distance"
    eta_f: float = 1.0
    beta_f: float = 5.0

    def __post_init__(self):
        if self.mode not in ETA_MODES:
            raise ConfigError(f"friction mode must be one of {ETA_MODES}")
        if self.beta_f <= 0:
            raise ConfigError("beta_f must be positive")
        if not 0 < self.eta_f <= 1:
            raise ConfigError("constant eta_f must lie in (0, 1]")

    def eta(self, gamma):
        """eta_f, or 1 - 1/(1 + beta_f max(Gamma, 0))^2 in distance mode; follows the shape of ``gamma``."""
        g = np.asarray(gamma, dtype=float)
        if self.mode == "constant":
            out = np.full(g.shape, self.eta_f)
        else:
            out = 1.0 - 1.0 / (1.0 + self.beta_f * np.maximum(g, 0.0)) ** 2
        return float(out) if out.ndim == 0 else out


ENTRY_MODES = ("direct", "remap")


@dataclass(frozen=True)
class ModulationMethod:
    """Which modulation to apply and its parameters.

    ``entry`` controls rollout starts for the flow-based variants: "direct"
    starts at the given state, "remap" at its preimage under psi.
    """

    variant: str = "sdc"
    p: float = 1.0
    eta: float = 1e-4
    t_safe: float = 0.1
    friction: FrictionConfig = FrictionConfig()
    entry: str = "direct"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown method {self.variant!r}; choose from {VARIANTS}")
        if self.p < 1:
            raise ConfigError("MM exponent p must be >= 1")
        if self.eta < 0:
            raise ConfigError("ARPF eta must be non-negative")
        if self.entry not in ENTRY_MODES:
            raise ConfigError(f"entry must be one of {ENTRY_MODES}")
        fr = self.friction
        if self.variant == "sddc" and fr.enabled and fr.mode == "constant" and fr.eta_f == 1.0:
            raise ConfigError("eta_f = 1 keeps the base speed and is not allowed with SDDC")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModulationMethod":
        d = dict(d)
        fr = FrictionConfig(**d.pop("friction", {}))
        return cls(friction=fr, **{k: d[k] for k in ("variant", "p", "eta", "t_safe", "entry") if k in d})


def friction(v_mod, v_base_norm, gamma, cfg: FrictionConfig, variant: str = "sdc"):
    """Rescale the modulated velocity to eta_f times the base speed, keeping its direction.

    Batched over leading dimensions of ``v_mod``; a zero velocity stays zero.
    """
    if variant == "sddc" and cfg.mode == "constant" and cfg.eta_f == 1.0:
        raise ConfigError("eta_f = 1 keeps the base speed and is not allowed with SDDC")
    v_mod = np.asarray(v_mod, dtype=float)
    n = np.linalg.norm(v_mod, axis=-1)
    scale = np.asarray(cfg.eta(gamma)) * np.asarray(v_base_norm, dtype=float) / np.where(n > 0, n, 1.0)
    return np.where((n > 0)[..., None], scale[..., None] * v_mod, 0.0)


def _tangent_basis(nrm: np.ndarray) -> np.ndarray:
    """Orthonormal E with first column ``nrm``."""
    D = len(nrm)
    if D == 2:
        return np.array([[nrm[0], -nrm[1]], [nrm[1], nrm[0]]])
    A = np.eye(D)
    A[:, 0] = nrm
    k = int(np.argmax(np.abs(nrm)))
    if k != 0:
        A[:, k] = np.eye(D)[:, 0]
    Q, _ = np.linalg.qr(A)
    return Q * np.sign(Q[:, 0] @ nrm)


def modulation_matrix(grad, gamma: float, p: float = 1.0) -> np.ndarray:
    """M = E diag(1 - 1/G, 1 + 1/G, ...) E^-1 with G = (gamma + 1)^(2p)."""
    gm = (float(gamma) + 1.0) ** (2.0 * p)
    if not gm > 0:
        raise ValueError("modulation distance must be positive (state inside the obstacle)")
    g = np.asarray(grad, dtype=float)
    ng = np.linalg.norm(g)
    if ng == 0:
        return np.eye(len(g))
    E = _tangent_basis(g / ng)
    lam = np.full(len(g), 1.0 + 1.0 / gm)
    lam[0] = 1.0 - 1.0 / gm
    return E @ np.diag(lam) @ np.linalg.inv(E)


def arpf_slope(gamma, eta: float, t_safe: float, cap: float):
    """dV/dGamma of V = eta/2 (1/(Gamma - t_safe) - 1)^2, zero once Gamma - t_safe >= 1, floored at -cap (when eta > 0)."""
    gap = np.asarray(gamma, dtype=float) - t_safe
    safe = np.where(gap > 0, gap, 1.0)
    raw = -eta * (1.0 / safe - 1.0) / safe**2
    floor = -cap if eta > 0 else 0.0
    out = np.where(gap >= 1.0, 0.0, np.where(gap <= 0, floor, np.maximum(raw, -cap)))
    return float(out) if out.ndim == 0 else out


def arpf_potential(gamma: float, eta: float, t_safe: float) -> float:
    gap = float(gamma) - t_safe
    if gap >= 1.0:
        return 0.0
    return 0.5 * eta * (1.0 / gap - 1.0) ** 2


@dataclass
class StepTiming:
    t_step: list = field(default_factory=list)
    t_flow: list = field(default_factory=list)
    t_jac: list = field(default_factory=list)

    def medians_ms(self) -> dict:
        med = lambda v: float(np.median(v)) * 1e3 if v else 0.0  # noqa: E731
        return {"t_step_ms": med(self.t_step), "t_flow_ms": med(self.t_flow), "t_jac_ms": med(self.t_jac)}


@dataclass(frozen=True)
class ModulatedSystem:
    """f_m: base field ``base`` reshaped around the obstacle described by ``flow``."""

    base: Callable[[np.ndarray], np.ndarray]
    flow: FlowMap
    method: ModulationMethod = ModulationMethod()
    timing: StepTiming | None = field(default=None, compare=False)

    @property
    def field(self):
        return self.flow.field

    def _frozen_flow(self, fc_y):
        if self.flow.barrier.swept != "none":
            return self.flow.with_v_base(fc_y)
        return self.flow

    def velocity(self, y) -> np.ndarray:
        t0 = time.perf_counter()
        y = np.asarray(y, dtype=float).reshape(1, -1)
        v = self.velocity_batch(y)[0]
        if self.timing is not None:
            self.timing.t_step.append(time.perf_counter() - t0)
        return v

    __call__ = velocity

    def velocity_batch(self, Y, offsets=None) -> np.ndarray:
        """Modulated velocities for K states ``Y`` (K, D).

        ``offsets`` (K, D) translates the obstacle per row: row k sees
        ``field(x - offsets[k])``. Flows commute with translations, so K
        independent scenes sharing one obstacle shape run as a single batch.
        """
        Y = np.asarray(Y, dtype=float)
        off = np.zeros_like(Y) if offsets is None else np.broadcast_to(np.asarray(offsets, dtype=float), Y.shape)
        fc_y = np.asarray(self.base(Y), dtype=float).reshape(Y.shape)
        Z = Y - off
        v = self._raw(Z, off, fc_y)
        fr = self.method.friction
        if fr.enabled:
            v = friction(v, np.linalg.norm(fc_y, axis=-1), self.field.eval(Z), fr, self.method.variant)
        return v

    def entry_state(self, x0, offsets=None):
        """Rollout start for ``x0``: itself, or psi^-1(x0) with entry="remap" for flow variants."""
        x0 = np.asarray(x0, dtype=float)
        if self.method.entry == "direct" or self.method.variant not in ("sdc", "sddc", "dt"):
            return x0.copy()
        off = 0.0 if offsets is None else np.asarray(offsets, dtype=float)
        fmap = self.flow
        if self.flow.barrier.swept != "none":
            fmap = fmap.with_v_base(np.asarray(self.base(x0), dtype=float)[..., None, :] if x0.ndim > 1
                                    else self.base(x0))
        return off + fmap.inverse(x0 - off)

    def _raw(self, Z, off, fc_y):
        var = self.method.variant
        if var in ("sdc", "sddc", "dt"):
            t0 = time.perf_counter()
            v_base = fc_y if self.flow.barrier.swept != "none" else None
            Q, J = self.flow.forward_and_jacobian_batch(Z, v_base)
            if self.timing is not None:
                self.timing.t_jac.append(time.perf_counter() - t0)
            if var == "sddc":
                rhs = fc_y
            else:
                rhs = np.asarray(self.base(Q + off), dtype=float).reshape(fc_y.shape)
                if var == "dt":
                    return np.linalg.solve(np.swapaxes(J, 1, 2) @ J, rhs[..., None])[..., 0]
            return np.linalg.solve(J, rhs[..., None])[..., 0]
        gamma, grad = self.field.eval_and_gradient(Z)
        gamma = np.asarray(gamma, dtype=float)
        if var == "naive":
            b = np.asarray(barrier_value(gamma, grad, self.flow.barrier, fc_y))
            return fc_y - b[:, None] * grad
        if var == "mm":
            return np.stack([modulation_matrix(g, gm, self.method.p) @ f for g, gm, f in zip(grad, gamma, fc_y)])
        slope = np.asarray(arpf_slope(gamma, self.method.eta, self.method.t_safe, self.flow.barrier.b_cap))
        return fc_y - slope[:, None] * grad

    def flow_time(self, y) -> float:
        """Wall time of one forward flow solve from ``y``."""
        t0 = time.perf_counter()
        self.flow.forward(y)
        dt = time.perf_counter() - t0
        if self.timing is not None:
            self.timing.t_flow.append(dt)
        return dt

    def with_timing(self) -> "ModulatedSystem":
        return replace(self, timing=StepTiming())


def sdc_velocity(sys: ModulatedSystem, y):
    return _as(sys, "sdc").velocity(y)


def sddc_velocity(sys: ModulatedSystem, y):
    return _as(sys, "sddc").velocity(y)


def dt_velocity(sys: ModulatedSystem, y):
    return _as(sys, "dt").velocity(y)


def naive_velocity(sys: ModulatedSystem, q):
    return _as(sys, "naive").velocity(q)


def mm_velocity(sys: ModulatedSystem, x):
    return _as(sys, "mm").velocity(x)


def arpf_velocity(sys: ModulatedSystem, x):
    return _as(sys, "arpf").velocity(x)


def _as(sys: ModulatedSystem, variant: str) -> ModulatedSystem:
    if sys.method.variant == variant:
        return sys
    return replace(sys, method=replace(sys.method, variant=variant))


__all__ = [
    "ConfigError", "FrictionConfig", "ModulatedSystem", "ModulationMethod", "StepTiming", "arpf_potential",
    "arpf_slope", "arpf_velocity", "b_inv", "dt_velocity", "friction", "mm_velocity", "modulation_matrix",
    "naive_velocity", "sdc_velocity", "sddc_velocity",
]
