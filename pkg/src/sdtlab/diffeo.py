"""Fixed-time flow of the barrier generator: forward map, inverse and Jacobian."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .barrier import BarrierConfig, generator
from .core import IntegrationError, SolverKind, default_fd_step, propagate
from .sdf import SdfField

JAC_METHODS = ("finite_difference", "forward_sensitivity")
COND_LIMIT = 1e8


class SingularityWarning(RuntimeWarning):
    pass


@dataclass
class FlowStats:
    """Mutable counters a caller may attach to collect diagnostics."""

    flow_calls: int = 0
    jac_calls: int = 0
    substeps: int = 0
    saturation_hits: int = 0
    condition_warnings: int = 0
    max_condition: float = 1.0
    last_conditions: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("last_conditions")
        return d


@dataclass(frozen=True)
class FlowMap:
    """psi = flow of V = -b grad Gamma for time ``horizon``.

    ``field`` is the distance as a function of the state being mapped, e.g. an
    obstacle SDF for a point robot or a joint-space field for a chain.
    ``v_base`` freezes the velocity used by a swept barrier.
    """

    field: SdfField
    barrier: BarrierConfig = BarrierConfig()
    horizon: float = 1.0
    solver: SolverKind = SolverKind("rk4", 10)
    jac_method: str = "finite_difference"
    x_query: tuple | None = None
    v_base: np.ndarray | None = None
    fd_step: float | None = None
    stats: FlowStats | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.jac_method not in JAC_METHODS:
            raise ValueError(f"jac_method must be one of {JAC_METHODS}")

    @property
    def dim(self) -> int:
        return self.field.dim

    def with_v_base(self, v_base) -> "FlowMap":
        return replace(self, v_base=None if v_base is None else np.asarray(v_base, dtype=float))

    def velocity(self, q):
        V, _, sat = generator(self.field, self.barrier, q, self.v_base, with_info=True)
        if self.stats is not None:
            self.stats.saturation_hits += int(np.sum(sat))
        return V

    def _run(self, y, t):
        if t == 0:
            return np.array(y, dtype=float)
        if self.stats is not None:
            self.stats.flow_calls += 1
            self.stats.substeps += self.solver.n_steps
        return propagate(self.velocity, y, t, self.solver)

    def forward(self, y):
        """psi(y); ``y`` may be batched over leading dimensions."""
        return self._run(y, self.horizon)

    def inverse(self, q):
        return self._run(q, -self.horizon)

    __call__ = forward

    def forward_and_jacobian(self, y):
        """(psi(y), J_psi(y)) for a single state."""
        q, J = self.forward_and_jacobian_batch(np.asarray(y, dtype=float).reshape(1, -1))
        return q[0], J[0]

    def jacobian(self, y):
        return self.forward_and_jacobian(y)[1]

    def forward_and_jacobian_batch(self, Y, v_base=None):
        """psi and J_psi for K states ``Y`` (K, D); ``v_base`` (K, D) overrides the frozen velocity."""
        Y = np.asarray(Y, dtype=float)
        if self.stats is not None:
            self.stats.jac_calls += len(Y)
        fmap = self if v_base is None else self.with_v_base(np.asarray(v_base, dtype=float)[:, None, :])
        if self.horizon == 0:
            return Y.copy(), np.broadcast_to(np.eye(self.dim), (len(Y), self.dim, self.dim)).copy()
        if self.jac_method == "finite_difference":
            Q, J = fmap._fd(Y)
        else:
            Q, J = np.empty_like(Y), np.empty((len(Y), self.dim, self.dim))
            for k, y in enumerate(Y):
                sub = fmap if v_base is None else self.with_v_base(v_base[k])
                Q[k], J[k] = sub._sensitivity(y)
        self._check(J)
        return Q, J

    def _fd(self, Y):
        K, D = Y.shape
        # per-row step so a row's Jacobian does not depend on the rest of the batch
        if self.fd_step:
            h = np.full(K, float(self.fd_step))
        else:
            h = 1e-5 * np.maximum(1.0, np.max(np.abs(Y), axis=1))
        E = h[:, None, None] * np.eye(D)
        stencil = np.concatenate([Y[:, None], Y[:, None] + E, Y[:, None] - E], axis=1)  # (K, 2D+1, D)
        out = self._run(stencil, self.horizon)
        J = np.swapaxes(out[:, 1:D + 1] - out[:, D + 1:], 1, 2) / (2 * h[:, None, None])
        return out[:, 0], J

    def _sensitivity(self, y):
        """Integrate the variational equation Phi' = (dV/dq) Phi with the flow."""
        D = len(y)
        h = self.fd_step or default_fd_step(y)
        E = h * np.eye(D)

        def aug(z):
            q, Phi = z[:D], z[D:].reshape(D, D)
            pts = np.concatenate([q[None], q + E, q - E], axis=0)
            V = self.velocity(pts)
            A = (V[1:D + 1] - V[D + 1:]).T / (2 * h)
            return np.concatenate([V[0], (A @ Phi).ravel()])

        z0 = np.concatenate([y, np.eye(D).ravel()])
        if self.horizon == 0:
            return y.copy(), np.eye(D)
        if self.stats is not None:
            self.stats.flow_calls += 1
            self.stats.substeps += self.solver.n_steps
        z = propagate(aug, z0, self.horizon, self.solver)
        return z[:D], z[D:].reshape(D, D)

    def _check(self, J):
        """Raise on non-finite Jacobians, warn once per call on condition numbers above 1e8."""
        if not np.all(np.isfinite(J)):
            raise IntegrationError("non-finite flow Jacobian")
        cond = np.linalg.cond(J)
        bad = int(np.sum(cond > COND_LIMIT))
        if self.stats is not None:
            self.stats.last_conditions = cond
            self.stats.max_condition = max(self.stats.max_condition, float(np.max(cond)))
            self.stats.condition_warnings += bad
        if bad:
            warnings.warn(f"flow Jacobian condition number {float(np.max(cond)):.3g} exceeds {COND_LIMIT:g}",
                          SingularityWarning, stacklevel=3)


def flow_forward(fmap: FlowMap, y):
    return fmap.forward(y)


def flow_inverse(fmap: FlowMap, q):
    return fmap.inverse(q)


def flow_jacobian(fmap: FlowMap, y):
    return fmap.jacobian(y)
