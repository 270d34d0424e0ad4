"""Training sets, the four-term SDF loss and trainable MLP / Bernstein fields."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .. import nnet
from .primitives import SdfField


# -- training data -----------------------------------------------------------


@dataclass(frozen=True)
class SdfTrainSet:
    x: np.ndarray
    d: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        d = np.asarray(self.d, dtype=float).reshape(-1)
        g = np.asarray(self.g, dtype=float).reshape(x.shape)
        if len(d) != len(x):
            raise ValueError("x, d and g must have the same number of records")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "g", g)

    def __len__(self) -> int:
        return len(self.d)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def bounds(self):
        return self.x.min(axis=0), self.x.max(axis=0)

    def subset(self, idx) -> "SdfTrainSet":
        return SdfTrainSet(self.x[idx], self.d[idx], self.g[idx])

    def to_csv(self, path) -> None:
        D = self.dim
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(D)] + ["d"] + [f"g{i + 1}" for i in range(D)])
            for xi, di, gi in zip(self.x, self.d, self.g):
                w.writerow([repr(float(v)) for v in (*xi, di, *gi)])

    @classmethod
    def from_csv(cls, path) -> "SdfTrainSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header = rows[0]
        D = (len(header) - 1) // 2
        if len(header) != 2 * D + 1 or header[D] != "d":
            raise ValueError(f"{path}: expected header x1..xD,d,g1..gD")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        return cls(data[:, :D], data[:, D], data[:, D + 1:])


def sample_train_set(shape: SdfField, bounds, n: int, seed=0) -> SdfTrainSet:
    """``n`` grid-jittered points in the box ``bounds = (lo, hi)`` labelled by ``shape``.

    The box is split into at least ``n`` equal cells; ``n`` distinct cells are
    drawn at random and one uniform point is placed in each.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    D = len(lo)
    rng = np.random.default_rng(seed)
    m = int(np.ceil(n ** (1.0 / D) - 1e-9))
    while m**D < n:
        m += 1
    cells = rng.choice(m**D, size=n, replace=False)
    idx = np.stack(np.unravel_index(cells, (m,) * D), axis=1)
    x = lo + (idx + rng.uniform(size=(n, D))) * (hi - lo) / m
    g, _ = shape.gradient_and_flag(x)
    return SdfTrainSet(x, shape.eval(x), g)


# -- loss --------------------------------------------------------------------


@dataclass(frozen=True)
class SdfLossWeights:
    w_sdf: float = 10.0
    w_grad: float = 0.1
    w_eik: float = 0.01
    w_ten: float = 0.01

    def __post_init__(self):
        if min(self.w_sdf, self.w_grad, self.w_eik, self.w_ten) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class SdfLossParts:
    total: float
    sdf: float
    grad: float
    eik: float
    ten: float


def _clamp(v, delta):
    return np.clip(v, -delta, delta)


def loss_terms(f, G, H, d, g, weights: SdfLossWeights, delta: float):
    """Loss value and adjoints w.r.t. predicted values f (n,), gradients G (n, D)
    and Hessians H (n, D, D). ``H`` may be None to skip the tension term."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = len(f)
    r = _clamp(f, delta) - _clamp(d, delta)
    l_sdf = np.mean(np.abs(r))
    df = weights.w_sdf * np.sign(r) * (np.abs(f) < delta) / n

    gn = np.linalg.norm(G, axis=1)
    gn_safe = np.maximum(gn, 1e-12)
    tn = np.maximum(np.linalg.norm(g, axis=1), 1e-12)
    u = np.sum(G * g, axis=1)
    cos = u / (gn_safe * tn)
    l_grad = np.mean(1.0 - cos)
    dG = -weights.w_grad / n * (g / (gn_safe * tn)[:, None] - (u / (gn_safe**3 * tn))[:, None] * G)

    e = gn - 1.0
    l_eik = np.mean(np.abs(e))
    dG = dG + weights.w_eik / n * (np.sign(e) / gn_safe)[:, None] * G

    if H is None:
        l_ten, dH = 0.0, None
    else:
        l_ten = float(np.mean(np.sum(H * H, axis=(1, 2))))
        dH = weights.w_ten * 2.0 * H / len(H)
    total = weights.w_sdf * l_sdf + weights.w_grad * l_grad + weights.w_eik * l_eik + weights.w_ten * l_ten
    parts = SdfLossParts(float(total), float(l_sdf), float(l_grad), float(l_eik), float(l_ten))
    return parts, df, dG, dH


def tension_step(x: np.ndarray) -> float:
    """Hessian finite-difference step: 1e-3 of the sample extent."""
    ext = float(np.max(np.ptp(x, axis=0))) if len(x) > 1 else 1.0
    return 1e-3 * max(ext, 1e-6)


def _stencil(X: np.ndarray, h: float) -> np.ndarray:
    """[X, X + h e_0, X - h e_0, X + h e_1, ...] stacked along the first axis."""
    parts = [X]
    for j in range(X.shape[1]):
        e = np.zeros(X.shape[1])
        e[j] = h
        parts += [X + e, X - e]
    return np.concatenate(parts, axis=0)


def _hessian_from_stencil(Gs: np.ndarray, n: int, D: int, h: float) -> np.ndarray:
    H = np.empty((n, D, D))
    for j in range(D):
        gp = Gs[(1 + 2 * j) * n:(2 + 2 * j) * n]
        gm = Gs[(2 + 2 * j) * n:(3 + 2 * j) * n]
        H[:, :, j] = (gp - gm) / (2 * h)
    return H


def _stencil_adjoint(dH: np.ndarray, n: int, D: int, h: float) -> np.ndarray:
    dGs = np.zeros(((1 + 2 * D) * n, D))
    for j in range(D):
        dGs[(1 + 2 * j) * n:(2 + 2 * j) * n] = dH[:, :, j] / (2 * h)
        dGs[(2 + 2 * j) * n:(3 + 2 * j) * n] = -dH[:, :, j] / (2 * h)
    return dGs


def sdf_loss(pred: SdfField, records: SdfTrainSet, weights: SdfLossWeights = SdfLossWeights(),
             delta: float = 1.0, h: float | None = None) -> SdfLossParts:
    """Weighted clamped-L1, cosine, Eikonal and tension loss of any field."""
    X = records.x
    n, D = X.shape
    h = tension_step(X) if h is None else h
    Xs = _stencil(X, h)
    Gs = pred.gradient(Xs)
    f = pred.eval(X)
    H = _hessian_from_stencil(Gs, n, D, h)
    parts, *_ = loss_terms(f, Gs[:n], H, records.d, records.g, weights, delta)
    return parts


# -- trainable fields --------------------------------------------------------


@dataclass(frozen=True)
class MlpSdf(SdfField):
    """Scalar MLP on inputs normalised as (x - center) / scale."""

    mlp: nnet.Mlp = None
    center: tuple = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if self.mlp is None or self.mlp.out_dim != 1:
            raise ValueError("MlpSdf needs a scalar-output network")
        object.__setattr__(self, "dim", self.mlp.in_dim)

    def _norm(self, X):
        return (X - np.asarray(self.center)) / self.scale

    def _eval(self, X):
        return nnet.forward(self.mlp, self._norm(X))[:, 0]

    def _grad(self, X):
        J = nnet.grad_input(self.mlp, self._norm(X))  # reverse mode
        return J[:, 0, :] / self.scale, np.zeros(len(X), bool)

    def eval_and_gradient(self, x):
        X, lead = self._batch(x)
        f, G, _ = nnet.value_and_input_grad(self.mlp, self._norm(X))
        return f.reshape(lead), (G / self.scale).reshape(*lead, self.dim)

    # training hooks: values, gradients and a pullback to parameters
    def _fg(self, X):
        f, G, cache = nnet.value_and_input_grad(self.mlp, self._norm(X))
        return f, G / self.scale, cache

    def _pullback(self, cache, df, dG):
        grads, _ = nnet.backward(self.mlp, cache, df[:, None], (dG / self.scale)[:, :, None])
        return grads

    def params(self):
        return self.mlp.params()

    def with_params(self, flat) -> "MlpSdf":
        return MlpSdf(self.mlp.with_params(flat), self.center, self.scale)


def bernstein_basis(u: np.ndarray, degree: int):
    """Values and derivatives of the degree-n Bernstein basis at u in [0, 1]: (m, n+1) each."""
    u = np.asarray(u, dtype=float)[:, None]
    n = degree
    i = np.arange(n + 1)[None, :]
    c = np.array([comb(n, k) for k in range(n + 1)], dtype=float)[None, :]
    B = c * u**i * (1 - u) ** (n - i)
    if n == 0:
        return B, np.zeros_like(B)
    j = np.arange(n)[None, :]
    cm = np.array([comb(n - 1, k) for k in range(n)], dtype=float)[None, :]
    Bm = cm * u**j * (1 - u) ** (n - 1 - j)
    dB = np.zeros_like(B)
    dB[:, 1:] += n * Bm
    dB[:, :-1] -= n * Bm
    return B, dB


@dataclass(frozen=True)
class BernsteinSdf(SdfField):
    """Tensor-product Bernstein polynomial over the box [lo, hi].

    Outside the box the value is continued by the distance to the box, which
    keeps the field Lipschitz and its sign correct far away.
    """

    coeffs: np.ndarray = None  # shape (degree + 1,) * D
    lo: tuple = (0.0, 0.0)
    hi: tuple = (1.0, 1.0)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim < 1 or len(set(c.shape)) != 1:
            raise ValueError("coefficient tensor must be hyper-cubic")
        if len(self.lo) != c.ndim or len(self.hi) != c.ndim:
            raise ValueError("bounds must match coefficient tensor rank")
        if np.any(np.asarray(self.hi) <= np.asarray(self.lo)):
            raise ValueError("hi must exceed lo on every axis")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "dim", c.ndim)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def features(self, X):
        """Basis products Phi (n, K) and their x-derivatives dPhi (n, D, K) for X inside."""
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        U = (X - lo) / (hi - lo)
        n, D = X.shape
        vals, ders = zip(*(bernstein_basis(U[:, a], self.degree) for a in range(D)))
        Phi = np.ones((n, 1))
        dPhi = np.ones((n, D, 1))
        for a in range(D):
            Phi_new = (Phi[:, :, None] * vals[a][:, None, :]).reshape(n, -1)
            parts = []
            for b in range(D):
                fac = ders[a] / (hi[a] - lo[a]) if a == b else vals[a]
                parts.append((dPhi[:, b, :, None] * fac[:, None, :]).reshape(n, -1))
            dPhi = np.stack(parts, axis=1)
            Phi = Phi_new
        return Phi, dPhi

    def _split(self, X):
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        Xc = np.clip(X, lo, hi)
        return Xc, X - Xc

    def _eval(self, X):
        Xc, off = self._split(X)
        Phi, _ = self.features(Xc)
        return Phi @ self.coeffs.ravel() + np.linalg.norm(off, axis=1)

    def _grad(self, X):
        Xc, off = self._split(X)
        _, dPhi = self.features(Xc)
        G = dPhi @ self.coeffs.ravel()
        G = np.where(off != 0, 0.0, G)
        on = np.linalg.norm(off, axis=1)
        G = G + np.where(on[:, None] > 0, off / np.maximum(on, 1e-300)[:, None], 0.0)
        return G, np.zeros(len(X), bool)

    def _fg(self, X):
        Phi, dPhi = self.features(np.clip(X, self.lo, self.hi))
        c = self.coeffs.ravel()
        return Phi @ c, dPhi @ c, (Phi, dPhi)

    def _pullback(self, cache, df, dG):
        Phi, dPhi = cache
        g = Phi.T @ df + np.einsum("ndk,nd->k", dPhi, dG)
        return [g.reshape(self.coeffs.shape)]

    def params(self):
        return [self.coeffs]

    def with_params(self, flat) -> "BernsteinSdf":
        return BernsteinSdf(np.asarray(flat[0]), self.lo, self.hi)


# -- training ----------------------------------------------------------------


@dataclass
class TrainLog:
    losses: list = field(default_factory=list)
    seconds: float = 0.0
    best_epoch: int = -1
    diverged: bool = False


def _step_loss(model, X, d, g, weights, delta, h, ten_idx):
    """Loss and parameter gradients on one batch; tension on the rows ``ten_idx``."""
    n, D = X.shape
    use_ten = weights.w_ten > 0 and len(ten_idx) > 0
    if use_ten:
        Xt = X[ten_idx]
        m = len(Xt)
        Xs = np.concatenate([X, _stencil(Xt, h)[m:]], axis=0)
    else:
        Xs = X
    f, G, cache = model._fg(Xs)
    H = _hessian_from_stencil(np.concatenate([G[ten_idx], G[n:]]), m, D, h) if use_ten else None
    parts, df, dG, dH = loss_terms(f[:n], G[:n], H, d, g, weights, delta)
    df_all = np.zeros(len(Xs))
    df_all[:n] = df
    dG_all = np.zeros_like(G)
    dG_all[:n] = dG
    if use_ten:
        dGs = _stencil_adjoint(dH, m, D, h)
        dG_all[n:] += dGs[m:]
    return parts, model._pullback(cache, df_all, dG_all)


def _full_loss(model, train_set, weights, delta, h, bs, ten_fraction) -> float:
    n = len(train_set)
    total = 0.0
    for s in range(0, n, bs):
        idx = np.arange(s, min(s + bs, n))
        k = max(1, int(round(ten_fraction * len(idx))))
        parts, _ = _step_loss(model, train_set.x[idx], train_set.d[idx], train_set.g[idx], weights, delta, h,
                              np.arange(k))
        total += parts.total * len(idx) / n
    return total if np.isfinite(total) else np.inf


def fit(model, train_set: SdfTrainSet, epochs: int, lr: float, weights: SdfLossWeights,
        delta: float, seed=0, batch_size: int | None = None, ten_fraction: float = 0.25,
        time_budget: float | None = None):
    """Adam on the four-term loss. Returns (best model seen, TrainLog).

    The best model is judged by the epoch-mean batch loss; a non-finite loss
    stops training and the best finite model is kept.
    """
    rng = np.random.default_rng(seed)
    n = len(train_set)
    bs = n if batch_size is None else min(batch_size, n)
    h = tension_step(train_set.x)
    state = nnet.AdamState.zeros_like(model.params(), lr=lr)
    log = TrainLog()
    t0 = time.perf_counter()
    # the starting model competes too, so a well-initialised fit is never made worse
    best, best_loss = model, _full_loss(model, train_set, weights, delta, h, bs, ten_fraction)
    for ep in range(epochs):
        perm = rng.permutation(n)
        ep_loss = 0.0
        for s in range(0, n, bs):
            idx = perm[s:s + bs]
            k = max(1, int(round(ten_fraction * len(idx))))
            parts, grads = _step_loss(model, train_set.x[idx], train_set.d[idx], train_set.g[idx],
                                      weights, delta, h, np.arange(k))
            if not np.isfinite(parts.total) or not all(np.all(np.isfinite(gr)) for gr in grads):
                log.diverged = True
                break
            ep_loss += parts.total * len(idx) / n
            params, state = nnet.adam_step(model.params(), grads, state)
            model = model.with_params(params)
        if log.diverged:
            break
        log.losses.append(ep_loss)
        if ep_loss < best_loss:
            best_loss, best, log.best_epoch = ep_loss, model, ep
        if time_budget is not None and time.perf_counter() - t0 > time_budget:
            break
    log.seconds = time.perf_counter() - t0
    return best, log


def default_delta(train_set: SdfTrainSet) -> float:
    """Clamp bound wide enough that no record in the box is clipped."""
    lo, hi = train_set.bounds()
    return float(np.linalg.norm(hi - lo))


def train_mlp_sdf(train_set: SdfTrainSet, arch=(64, 32, 16), epochs: int = 300, lr: float = 1e-3,
                  weights: SdfLossWeights = SdfLossWeights(), seed=0, delta: float | None = None,
                  activation: str = "relu", batch_size: int = 2048, ten_fraction: float = 0.1,
                  time_budget: float | None = None):
    lo, hi = train_set.bounds()
    init = nnet.init_mlp([train_set.dim, *arch, 1], hidden_act=activation, seed=seed)
    model = MlpSdf(init, tuple(0.5 * (lo + hi)), float(0.5 * np.max(hi - lo)))
    delta = default_delta(train_set) if delta is None else delta
    best, log = fit(model, train_set, epochs, lr, weights, delta, seed, batch_size, ten_fraction, time_budget)
    return best, log


def fit_bernstein_lstsq(train_set: SdfTrainSet, degree: int, lo, hi, grad_weight: float = 1.0) -> BernsteinSdf:
    """Least-squares fit of values and gradients."""
    K = (degree + 1) ** train_set.dim
    probe = BernsteinSdf(np.zeros((degree + 1,) * train_set.dim), tuple(lo), tuple(hi))
    Phi, dPhi = probe.features(np.clip(train_set.x, lo, hi))
    A = [Phi] + [grad_weight * dPhi[:, a, :] for a in range(train_set.dim)]
    b = [train_set.d] + [grad_weight * train_set.g[:, a] for a in range(train_set.dim)]
    c, *_ = np.linalg.lstsq(np.concatenate(A), np.concatenate(b), rcond=None)
    return probe.with_params([c.reshape((degree + 1,) * train_set.dim)]) if K else probe


def train_bernstein_sdf(train_set: SdfTrainSet, degree: int = 8, epochs: int = 200, lr: float = 1e-3,
                        seed=0, weights: SdfLossWeights = SdfLossWeights(), delta: float | None = None,
                        bounds=None, batch_size: int | None = None):
    """Least-squares initialisation followed by Adam on the full loss."""
    if len(train_set) == 0:
        raise ValueError("empty training set")
    if bounds is None:
        # pad so the tension stencil never leaves the polynomial patch
        pad = 2.0 * tension_step(train_set.x)
        lo, hi = (b + s * pad for b, s in zip(train_set.bounds(), (-1, 1)))
    else:
        lo, hi = (np.asarray(b, float) for b in bounds)
    model = fit_bernstein_lstsq(train_set, degree, lo, hi)
    delta = default_delta(train_set) if delta is None else delta
    return fit(model, train_set, epochs, lr, weights, delta, seed, batch_size)
