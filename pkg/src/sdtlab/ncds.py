"""Neural contractive dynamical system (NCDS).

The network outputs a D x D matrix J_theta(x). The system Jacobian is
``-(J_theta^T J_theta + diag(eps))`` and the velocity is its line integral
from the anchor ``x0`` (where the velocity is ``xdot0``) to ``x``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import nnet
from .nnet import AdamState, Mlp

log = logging.getLogger(__name__)

LOSS_SIGN_MODES = ("corrected", "paper_verbatim")


@dataclass
class NCDSModel:
    jac_net: Mlp
    eps: np.ndarray
    x0: np.ndarray
    xdot0: np.ndarray
    quad_steps: int = 2
    loss_history: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float)
        self.xdot0 = np.asarray(self.xdot0, dtype=float)
        d = self.dim
        if np.any(self.eps <= 0):
            raise ValueError("eps entries must be positive")
        if self.eps.shape != (d,) or self.x0.shape != (d,) or self.xdot0.shape != (d,):
            raise ValueError("eps, x0 and xdot0 must all have dimension D")
        if self.jac_net.in_dim != d or self.jac_net.out_dim != d * d:
            raise ValueError("jac_net must map R^D -> R^(D*D)")
        if self.quad_steps < 1:
            raise ValueError("quad_steps must be >= 1")

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    def __call__(self, x):
        return velocity(self, x)


@dataclass
class DemoBatch:
    demos: list[np.ndarray]
    dt: float

    def __post_init__(self):
        self.demos = [np.asarray(d, dtype=float) for d in self.demos]
        if not self.demos:
            raise ValueError("empty demonstration batch")
        dims = {d.shape[1] for d in self.demos}
        if len(dims) != 1 or any(len(d) < 2 for d in self.demos):
            raise ValueError("demos must share dimension and have >= 2 samples")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def dim(self) -> int:
        return self.demos[0].shape[1]

    def pairs(self):
        """Stacked (x_t, x_{t+1}) over all demonstrations."""
        xs = np.concatenate([d[:-1] for d in self.demos])
        ys = np.concatenate([d[1:] for d in self.demos])
        return xs, ys

    def resampled(self, n_points: int) -> "DemoBatch":
        """Linear interpolation in time to ``n_points`` samples per demo."""
        out = []
        for d in self.demos:
            s_old = np.linspace(0.0, 1.0, len(d))
            s_new = np.linspace(0.0, 1.0, n_points)
            out.append(np.stack([np.interp(s_new, s_old, d[:, i]) for i in range(d.shape[1])], axis=1))
        # every demo shares the time step of the first one after resampling
        duration = self.dt * (len(self.demos[0]) - 1)
        return DemoBatch(out, duration / (n_points - 1))


def quadrature(n_steps: int):
    """Nodes and weights on [0, 1] for composite 3/8-rule RK4 on a time-only integrand."""
    h = 1.0 / n_steps
    nodes = np.linspace(0.0, 1.0, 3 * n_steps + 1)
    w = np.zeros_like(nodes)
    for i in range(n_steps):
        w[3 * i: 3 * i + 4] += h * np.array([1.0, 3.0, 3.0, 1.0]) / 8.0
    return nodes, w


def _sqrt_jac(model: NCDSModel, pts: np.ndarray):
    n = pts.shape[0]
    out, _, cache = nnet._forward_cache(model.jac_net, pts)
    d = model.dim
    return out.reshape(n, d, d), cache


def jacobian_hat(model: NCDSModel, x) -> np.ndarray:
    """The negative-definite-by-construction Jacobian at ``x`` (batched)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x.reshape(-1, model.dim)
    J, _ = _sqrt_jac(model, X)
    S = np.einsum("nji,njk->nik", J, J)
    out = -(S + np.diag(model.eps))
    return out[0] if single else out.reshape(*x.shape[:-1], model.dim, model.dim)


def _velocity_cache(model: NCDSModel, X: np.ndarray):
    nodes, w = quadrature(model.quad_steps)
    n, d = X.shape
    delta = X - model.x0
    C = model.x0 + nodes[None, :, None] * delta[:, None, :]  # (n, K, d)
    J, cache = _sqrt_jac(model, C.reshape(-1, d))
    J = J.reshape(n, len(nodes), d, d)
    S = np.einsum("nkji,nkjl->nkil", J, J)
    M = -(np.einsum("k,nkij->nij", w, S) + np.diag(model.eps))
    v = model.xdot0 + np.einsum("nij,nj->ni", M, delta)
    return v, (J, cache, delta, w)


def velocity(model: NCDSModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x.reshape(-1, model.dim)
    v, _ = _velocity_cache(model, X)
    return v[0] if single else v.reshape(x.shape)


def _velocity_backward(model: NCDSModel, aux, g: np.ndarray):
    """Gradients of <g, v> w.r.t. network params and eps."""
    J, cache, delta, w = aux
    n, K, d, _ = J.shape
    Gbar = w[None, :, None, None] * np.einsum("ni,nj->nij", g, delta)[:, None]
    Jbar = -np.einsum("nkij,nkjl->nkil", J, Gbar + np.swapaxes(Gbar, -1, -2))
    grads, _ = nnet.backward(model.jac_net, cache, Jbar.reshape(n * K, d * d))
    eps_bar = -np.sum(g * delta, axis=0) * w.sum()
    return grads, eps_bar


def _orthogonal_noise(xdot: np.ndarray, sigma: float, rng):
    """Isotropic noise projected onto the complement of each motion direction."""
    n, d = xdot.shape
    xi = rng.normal(scale=sigma, size=(n, d))
    norm = np.linalg.norm(xdot, axis=1, keepdims=True)
    degenerate = norm[:, 0] < 1e-12
    u = np.where(degenerate[:, None], np.eye(d)[0], xdot / np.where(norm > 0, norm, 1.0))
    return xi - np.sum(xi * u, axis=1, keepdims=True) * u, int(degenerate.sum())


@dataclass
class LossBreakdown:
    total: float
    jac: float
    eps: float
    noise: float
    degenerate_steps: int = 0


def loss_total(
    model: NCDSModel,
    batch: DemoBatch,
    beta_eps: float = 1e-3,
    beta_noise: float = 1.0,
    noise_sigma: float = 0.0,
    loss_sign_mode: str = "corrected",
    rng=None,
    pairs=None,
):
    """Reconstruction + eps-spread + orthogonal-noise loss and its gradients.

    Returns ``(LossBreakdown, grads, eps_grad)`` where ``grads`` align with
    ``model.jac_net.params()``.
    """
    if loss_sign_mode not in LOSS_SIGN_MODES:
        raise ValueError(f"unknown loss_sign_mode {loss_sign_mode!r}")
    if beta_eps < 0 or beta_noise < 0:
        raise ValueError("loss weights must be non-negative")
    sign = 1.0 if loss_sign_mode == "corrected" else -1.0
    rng = np.random.default_rng(0) if rng is None else rng
    xs, ys = batch.pairs() if pairs is None else pairs
    dt = batch.dt
    n = len(xs)

    v, aux = _velocity_cache(model, xs)
    r = ys - xs - dt * v
    l_jac = float(np.sum(r * r) / n)
    grads, eps_bar = _velocity_backward(model, aux, -2.0 * dt * r / n)

    e = model.eps
    diff = e[0] - e[1:]
    l_eps = sign * float(np.sum(diff**2))
    g = np.zeros_like(e)
    g[0] = 2.0 * np.sum(diff)
    g[1:] = -2.0 * diff
    eps_bar = eps_bar + beta_eps * sign * g

    l_noise = 0.0
    n_degenerate = 0
    if beta_noise > 0 and noise_sigma > 0:
        xdot = (ys - xs) / dt
        perturb, n_degenerate = _orthogonal_noise(xdot, noise_sigma, rng)
        xt = xs + perturb
        vt, aux_t = _velocity_cache(model, xt)
        rt = ys - xt - dt * vt
        l_noise = sign * float(np.sum(rt * rt) / n)
        g_n, eps_n = _velocity_backward(model, aux_t, sign * beta_noise * (-2.0 * dt * rt / n))
        grads = [a + b for a, b in zip(grads, g_n)]
        eps_bar = eps_bar + eps_n

    total = l_jac + beta_eps * l_eps + beta_noise * l_noise
    return LossBreakdown(total, l_jac, l_eps, l_noise, n_degenerate), grads, eps_bar


def init_model(batch: DemoBatch, hidden=(100, 100), eps=0.1, quad_steps=2, anchor="goal", seed=0) -> NCDSModel:
    """Fresh model anchored at the demonstrations' goal or at the first start.

    ``anchor="start"`` puts x0 at the first demo's initial state with the
    matching finite-difference velocity; ``"goal"`` uses the mean final state
    with zero velocity.
    """
    d = batch.dim
    net = nnet.init_mlp([d, *hidden, d * d], "tanh", seed=seed)
    if anchor == "start":
        first = batch.demos[0]
        x0, xdot0 = first[0], (first[1] - first[0]) / batch.dt
    elif anchor == "goal":
        x0, xdot0 = np.mean([dm[-1] for dm in batch.demos], axis=0), np.zeros(d)
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    return NCDSModel(net, np.full(d, float(eps)), x0, xdot0, quad_steps)


def train(
    model: NCDSModel,
    batch: DemoBatch,
    epochs: int = 1000,
    lr: float = 1e-3,
    decay_every: int = 250,
    decay_factor: float = 0.1,
    loss_sign_mode: str = "corrected",
    beta_eps: float = 1e-3,
    beta_noise: float = 1.0,
    noise_sigma: float = 0.0,
    batch_size: int | None = None,
    seed: int = 0,
) -> NCDSModel:
    """Adam on the total loss. ``eps`` is optimised in log space so it stays positive.

    The returned model carries the per-epoch total loss in ``loss_history``.
    A non-finite loss stops training and returns the last finite model.
    """
    if epochs < 0 or lr <= 0 or decay_every <= 0 or decay_factor <= 0:
        raise ValueError("hyperparameters must be positive")
    if epochs == 0:
        return model
    rng = np.random.default_rng(seed)
    xs, ys = batch.pairs()
    n = len(xs)
    bs = n if batch_size is None else min(batch_size, n)

    params = model.jac_net.params() + [np.log(model.eps)]
    state = AdamState.zeros_like(params, lr=lr)
    best = model
    history = list(model.loss_history)
    for epoch in range(epochs):
        state = replace(state, lr=lr * decay_factor ** (epoch // decay_every))
        order = rng.permutation(n) if bs < n else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, bs):
            idx = order[start: start + bs]
            cur = replace(model, jac_net=model.jac_net.with_params(params[:-1]), eps=np.exp(params[-1]))
            lb, grads, eps_bar = loss_total(
                cur, batch, beta_eps, beta_noise, noise_sigma, loss_sign_mode, rng, pairs=(xs[idx], ys[idx])
            )
            if not np.isfinite(lb.total) or not all(np.all(np.isfinite(g)) for g in grads):
                log.warning("non-finite loss at epoch %d; returning last finite model", epoch)
                return replace(best, loss_history=history)
            best = cur
            epoch_loss += lb.total * len(idx) / n
            params, state = nnet.adam_step(params, grads + [eps_bar * np.exp(params[-1])], state)
        history.append(epoch_loss)
    final = replace(model, jac_net=model.jac_net.with_params(params[:-1]), eps=np.exp(params[-1]))
    final.loss_history = history
    return final


# -- checkpoints -------------------------------------------------------------


def model_to_dict(model: NCDSModel) -> dict:
    d = nnet.mlp_to_dict(model.jac_net)
    d.update(
        kind="ncds",
        eps=model.eps.tolist(),
        x0=model.x0.tolist(),
        xdot0=model.xdot0.tolist(),
        quad_steps=model.quad_steps,
    )
    return d


def model_from_dict(d: dict) -> NCDSModel:
    if d.get("kind") != "ncds":
        raise ValueError("not an NCDS checkpoint")
    return NCDSModel(nnet.mlp_from_dict(d), d["eps"], d["x0"], d["xdot0"], int(d["quad_steps"]))


def save_model(model: NCDSModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)))


def load_model(path) -> NCDSModel:
    return model_from_dict(json.loads(Path(path).read_text()))
