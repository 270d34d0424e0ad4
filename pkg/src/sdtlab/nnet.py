"""Small dense networks in numpy with hand-written reverse-mode gradients.

Parameters are kept as a flat list ``[W0, b0, W1, b1, ...]`` so optimizers can
treat any model (MLP, Bernstein coefficients, NCDS eps) the same way.
Weights are stored ``(out, in)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
ACTIVATIONS = ("tanh", "relu", "identity", "softplus")


def _act(name: str, z: np.ndarray):
    """Return activation value and its first and second derivatives."""
    if name == "tanh":
        a = np.tanh(z)
        d1 = 1.0 - a * a
        return a, d1, -2.0 * a * d1
    if name == "relu":
        a = np.maximum(z, 0.0)
        return a, (z > 0).astype(z.dtype), np.zeros_like(z)
    if name == "softplus":
        a = np.logaddexp(0.0, z)
        s = 0.5 * (1.0 + np.tanh(0.5 * z))
        return a, s, s * (1.0 - s)
    if name == "identity":
        return z, np.ones_like(z), np.zeros_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class Mlp:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]
    n_freq: int = 0

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("weights, biases and activations must have equal length")
        if self.activations[-1] != "identity":
            raise ValueError("final layer activation must be identity")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (W.shape[0],):
                raise ValueError(f"layer {i}: bias shape {b.shape} vs weight {W.shape}")
            if i and W.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input {W.shape[1]} != previous output")
        if self.weights[0].shape[1] != self.encoded_dim(self.in_dim):
            raise ValueError("first layer does not match encoded input size")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1] // (1 + 2 * self.n_freq)

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def encoded_dim(self, d: int) -> int:
        return d * (1 + 2 * self.n_freq)

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def with_params(self, flat: list[np.ndarray]) -> "Mlp":
        return replace(self, weights=list(flat[0::2]), biases=list(flat[1::2]))

    def __call__(self, x):
        return forward(self, x)


def init_mlp(sizes, hidden_act: str = "tanh", seed=0, n_freq: int = 0) -> Mlp:
    """Glorot-uniform weights, zero biases. ``sizes`` = [in, h1, ..., out]."""
    rng = np.random.default_rng(seed)
    sizes = list(sizes)
    sizes[0] = sizes[0] * (1 + 2 * n_freq)
    Ws, bs, acts = [], [], []
    for i, (fi, fo) in enumerate(zip(sizes[:-1], sizes[1:])):
        r = np.sqrt(6.0 / (fi + fo))
        Ws.append(rng.uniform(-r, r, size=(fo, fi)))
        bs.append(np.zeros(fo))
        acts.append("identity" if i == len(sizes) - 2 else hidden_act)
    return Mlp(Ws, bs, acts, n_freq)


def _encode(mlp: Mlp, x: np.ndarray, tangents: bool):
    """Positional encoding [x, sin(2^k pi x), cos(2^k pi x)] and its input Jacobian."""
    n, d = x.shape
    if mlp.n_freq == 0:
        return x, (np.broadcast_to(np.eye(d), (n, d, d)) if tangents else None)
    feats = [x]
    dfeats = [np.broadcast_to(np.eye(d), (n, d, d))] if tangents else None
    for k in range(mlp.n_freq):
        w = np.pi * 2.0**k
        s, c = np.sin(w * x), np.cos(w * x)
        feats += [s, c]
        if tangents:
            dfeats.append(np.einsum("ni,ij->nji", w * c, np.eye(d)))
            dfeats.append(np.einsum("ni,ij->nji", -w * s, np.eye(d)))
    h = np.concatenate(feats, axis=1)
    return h, (np.concatenate(dfeats, axis=2) if tangents else None)


def _forward_cache(mlp: Mlp, X: np.ndarray, tangents: bool = False):
    h, dh = _encode(mlp, X, tangents)
    eye = tangents and mlp.n_freq == 0
    cache = []
    for W, b, act in zip(mlp.weights, mlp.biases, mlp.activations):
        z = h @ W.T + b
        a, s1, s2 = _act(act, z)
        entry = {"h": h, "s1": s1, "s2": None if act in ("relu", "identity") else s2}
        if tangents:
            if eye:
                dz = np.broadcast_to(W.T, (len(X),) + W.T.shape)  # (n, d, out)
            else:
                dz = (dh.reshape(-1, W.shape[1]) @ W.T).reshape(dh.shape[0], dh.shape[1], -1)
            entry["dh"], entry["dz"], entry["eye"] = dh, dz, eye
            dh = s1[:, None, :] * dz
            eye = False
        cache.append(entry)
        h = a
    return h, dh, cache


def _as_batch(mlp: Mlp, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x.reshape(-1, x.shape[-1])
    if X.shape[1] != mlp.in_dim:
        raise ValueError(f"input dimension {X.shape[1]} != network input {mlp.in_dim}")
    return X, single, x.shape[:-1]


def forward(mlp: Mlp, x) -> np.ndarray:
    X, single, lead = _as_batch(mlp, x)
    out, _, _ = _forward_cache(mlp, X)
    return out[0] if single else out.reshape(*lead, mlp.out_dim)


def backward(mlp: Mlp, cache, d_out: np.ndarray, d_grad: np.ndarray | None = None):
    """Parameter gradients given adjoints of the output and of its input-Jacobian.

    ``d_out`` has shape (n, out); ``d_grad`` (n, d, out) is the adjoint of the
    forward tangents and requires a cache built with ``tangents=True``.
    Returns (flat parameter gradients, adjoint of the encoded input).
    """
    grads = [None] * (2 * len(mlp.weights))
    a_bar = d_out
    da_bar = d_grad
    for li in range(len(mlp.weights) - 1, -1, -1):
        W = mlp.weights[li]
        c = cache[li]
        z_bar = a_bar * c["s1"]
        if da_bar is not None:
            if c["s2"] is not None:
                z_bar = z_bar + (da_bar * c["dz"]).sum(axis=1) * c["s2"]
            dz_bar = da_bar * c["s1"][:, None, :]
        gW = z_bar.T @ c["h"]
        if da_bar is not None:
            if c["eye"]:
                gW = gW + dz_bar.sum(axis=0).T
            else:
                gW = gW + dz_bar.reshape(-1, W.shape[0]).T @ c["dh"].reshape(-1, W.shape[1])
        grads[2 * li] = gW
        grads[2 * li + 1] = z_bar.sum(axis=0)
        a_bar = z_bar @ W
        if da_bar is not None and li > 0:
            da_bar = (dz_bar.reshape(-1, W.shape[0]) @ W).reshape(dz_bar.shape[0], dz_bar.shape[1], -1)
    return grads, a_bar


def grad_params(mlp: Mlp, x, loss):
    """Value and parameter gradient of ``loss(output)``.

    ``loss`` maps the (batched) network output to ``(value, d value / d output)``.
    """
    X, single, _ = _as_batch(mlp, x)
    out, _, cache = _forward_cache(mlp, X)
    value, d_out = loss(out[0] if single else out)
    d_out = np.asarray(d_out, dtype=float).reshape(out.shape)
    grads, _ = backward(mlp, cache, d_out)
    return value, grads


def grad_input(mlp: Mlp, x) -> np.ndarray:
    """Jacobian d output / d input by reverse mode, one sweep per output."""
    X, single, lead = _as_batch(mlp, x)
    out, _, cache = _forward_cache(mlp, X)
    n, d = X.shape
    rows = []
    for k in range(mlp.out_dim):
        seed = np.zeros_like(out)
        seed[:, k] = 1.0
        _, h_bar = backward(mlp, cache, seed)
        rows.append(_encoding_vjp(mlp, X, h_bar))
    J = np.stack(rows, axis=1)  # (n, out, d)
    return J[0] if single else J.reshape(*lead, mlp.out_dim, d)


def _encoding_vjp(mlp: Mlp, X: np.ndarray, h_bar: np.ndarray) -> np.ndarray:
    if mlp.n_freq == 0:
        return h_bar
    d = X.shape[1]
    g = h_bar[:, :d].copy()
    for k in range(mlp.n_freq):
        w = np.pi * 2.0**k
        s_bar = h_bar[:, d * (1 + 2 * k): d * (2 + 2 * k)]
        c_bar = h_bar[:, d * (2 + 2 * k): d * (3 + 2 * k)]
        g += w * (np.cos(w * X) * s_bar - np.sin(w * X) * c_bar)
    return g


def value_and_input_grad(mlp: Mlp, X):
    """Scalar-output helper: values (n,), input gradients (n, d) and the tangent cache."""
    X = np.asarray(X, dtype=float)
    out, dout, cache = _forward_cache(mlp, X, tangents=True)
    return out[:, 0], dout[:, :, 0], cache


# -- optimizer ---------------------------------------------------------------


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, lr: float = 1e-3, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], lr=lr, **kw)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState):
    """One bias-corrected Adam update. Returns new params and new state."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and optimizer state must align")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        new_p.append(p - state.lr * mhat / (np.sqrt(vhat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, replace(state, m=new_m, v=new_v, step=t)


# -- checkpoints -------------------------------------------------------------


def mlp_to_dict(mlp: Mlp) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "mlp",
        "n_freq": mlp.n_freq,
        "layers": [
            {
                "shape": list(W.shape),
                "weights": W.ravel().tolist(),
                "bias": b.tolist(),
                "activation": act,
            }
            for W, b, act in zip(mlp.weights, mlp.biases, mlp.activations)
        ],
    }


def mlp_from_dict(d: dict) -> Mlp:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('format_version')}")
    Ws, bs, acts = [], [], []
    for layer in d["layers"]:
        Ws.append(np.array(layer["weights"], dtype=float).reshape(layer["shape"]))
        bs.append(np.array(layer["bias"], dtype=float))
        acts.append(layer["activation"])
    return Mlp(Ws, bs, acts, int(d.get("n_freq", 0)))


def save_mlp(mlp: Mlp, path) -> None:
    Path(path).write_text(json.dumps(mlp_to_dict(mlp)))


def load_mlp(path) -> Mlp:
    return mlp_from_dict(json.loads(Path(path).read_text()))
