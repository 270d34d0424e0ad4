"""Exact signed distance functions of simple shapes.

Sign convention: negative inside, zero on the surface, positive outside.
All fields accept points with arbitrary leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TIE_TOL = 1e-12


class SdfField:
    """Base class. Subclasses implement ``_eval`` and ``_grad`` on (n, D) batches."""

    dim: int = 2

    def _batch(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"point dimension {x.shape[-1]} != field dimension {self.dim}")
        return x.reshape(-1, self.dim), x.shape[:-1]

    def eval(self, x) -> np.ndarray:
        X, lead = self._batch(x)
        return self._eval(X).reshape(lead)

    __call__ = eval

    def gradient(self, x) -> np.ndarray:
        return self.gradient_and_flag(x)[0]

    def gradient_and_flag(self, x):
        """Gradient plus a boolean mask marking medial-axis / tie-broken queries."""
        X, lead = self._batch(x)
        g, flag = self._grad(X)
        return g.reshape(*lead, self.dim), flag.reshape(lead)

    def eval_and_gradient(self, x):
        return self.eval(x), self.gradient(x)

    def _eval(self, X):
        raise NotImplementedError

    def _grad(self, X):
        return fd_gradient(self._eval, X), np.zeros(len(X), dtype=bool)


def fd_gradient(f, X: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a batched scalar function."""
    n, d = X.shape
    g = np.empty((n, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        g[:, j] = (f(X + e) - f(X - e)) / (2 * h)
    return g


def _unit(v: np.ndarray, fallback_axis: int = 0):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    bad = n[..., 0] < TIE_TOL
    e = np.zeros(v.shape[-1])
    e[fallback_axis] = 1.0
    return np.where(bad[..., None], e, v / np.where(bad[..., None], 1.0, n)), bad


@dataclass(frozen=True)
class Circle(SdfField):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "dim", len(self.center))

    def _eval(self, X):
        return np.linalg.norm(X - np.asarray(self.center), axis=1) - self.radius

    def _grad(self, X):
        return _unit(X - np.asarray(self.center))

    def eval_and_gradient(self, x):
        x = np.asarray(x, dtype=float)
        p = x - self.center
        n = np.sqrt(np.sum(p * p, axis=-1))
        safe = np.maximum(n, TIE_TOL)[..., None]
        g = p / safe
        if np.any(n < TIE_TOL):
            g = self.gradient(x)
        return n - self.radius, g

    def moved(self, offset) -> "Circle":
        return Circle(tuple(np.asarray(self.center) + offset), self.radius)


@dataclass(frozen=True)
class Box(SdfField):
    center: tuple = (0.0, 0.0)
    half_extents: tuple = (1.0, 1.0)

    def __post_init__(self):
        if len(self.center) != len(self.half_extents) or min(self.half_extents) <= 0:
            raise ValueError("half extents must be positive and match the center dimension")
        object.__setattr__(self, "dim", len(self.center))

    def _q(self, X):
        p = X - np.asarray(self.center)
        return p, np.abs(p) - np.asarray(self.half_extents)

    def _eval(self, X):
        _, q = self._q(X)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return outside + inside

    def _grad(self, X):
        p, q = self._q(X)
        s = np.where(p >= 0, 1.0, -1.0)
        qp = np.maximum(q, 0.0)
        out_n = np.linalg.norm(qp, axis=1, keepdims=True)
        is_out = out_n[:, 0] > 0
        g_out = s * qp / np.where(is_out[:, None], out_n, 1.0)
        k = np.argmax(q, axis=1)
        g_in = np.zeros_like(X)
        g_in[np.arange(len(X)), k] = s[np.arange(len(X)), k]
        srt = np.sort(q, axis=1)
        tie = (srt[:, -1] - srt[:, -2] < TIE_TOL) if X.shape[1] > 1 else np.zeros(len(X), bool)
        flag = ~is_out & tie
        return np.where(is_out[:, None], g_out, g_in), flag

    def moved(self, offset) -> "Box":
        return Box(tuple(np.asarray(self.center) + offset), self.half_extents)


def _cross2(a, b):
    """z-component of the 2D cross product, broadcast over leading axes."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _segment_closest(X, a, b):
    """Closest points on segment [a, b] and squared distances, batched over X."""
    ab = b - a
    t = np.clip(((X - a) @ ab) / (ab @ ab), 0.0, 1.0)
    c = a + t[:, None] * ab
    return c, np.sum((X - c) ** 2, axis=1)


@dataclass(frozen=True)
class Capsule(SdfField):
    a: tuple = (0.0, 0.0)
    b: tuple = (1.0, 0.0)
    radius: float = 0.1

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "dim", len(self.a))

    def _closest(self, X):
        return _segment_closest(X, np.asarray(self.a, float), np.asarray(self.b, float))

    def _eval(self, X):
        _, d2 = self._closest(X)
        return np.sqrt(d2) - self.radius

    def _grad(self, X):
        c, _ = self._closest(X)
        return _unit(X - c)

    def moved(self, offset) -> "Capsule":
        return Capsule(tuple(np.asarray(self.a) + offset), tuple(np.asarray(self.b) + offset), self.radius)


@dataclass(frozen=True)
class Triangle(SdfField):
    vertices: tuple = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (3, 2):
            raise ValueError("triangle needs three 2D vertices")
        area = 0.5 * _cross2(v[1] - v[0], v[2] - v[0])
        if abs(area) < 1e-12:
            raise ValueError("degenerate triangle")

    def _parts(self, X):
        v = np.asarray(self.vertices, dtype=float)
        closest, d2 = [], []
        for i in range(3):
            c, dd = _segment_closest(X, v[i], v[(i + 1) % 3])
            closest.append(c)
            d2.append(dd)
        d2 = np.stack(d2, axis=1)
        k = np.argmin(d2, axis=1)
        c = np.stack(closest, axis=1)[np.arange(len(X)), k]
        orient = np.sign(_cross2(v[1] - v[0], v[2] - v[0]))
        crosses = np.stack(
            [_cross2(v[(i + 1) % 3] - v[i], X - v[i]) * orient for i in range(3)], axis=1
        )
        inside = np.all(crosses > 0, axis=1)
        srt = np.sort(d2, axis=1)
        return c, np.sqrt(d2[np.arange(len(X)), k]), inside, srt

    def _eval(self, X):
        _, dist, inside, _ = self._parts(X)
        return np.where(inside, -dist, dist)

    def _grad(self, X):
        c, _, inside, srt = self._parts(X)
        u, degenerate = _unit(X - c)
        tie = inside & (np.sqrt(srt[:, 1]) - np.sqrt(srt[:, 0]) < TIE_TOL)
        return np.where(inside[:, None], -u, u), degenerate | tie

    def moved(self, offset) -> "Triangle":
        return Triangle(tuple(tuple(np.asarray(v) + offset) for v in self.vertices))


@dataclass(frozen=True)
class Arc(SdfField):
    """Circular band of width ``thickness`` along an arc, with round end caps.

    ``span`` is (start, end) angle in radians, measured counter-clockwise.
    """

    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    span: tuple = (0.0, np.pi)
    thickness: float = 0.2

    def __post_init__(self):
        if self.radius <= 0 or self.thickness <= 0:
            raise ValueError("radius and thickness must be positive")
        if not 0 < self.span[1] - self.span[0] <= 2 * np.pi:
            raise ValueError("span must satisfy 0 < end - start <= 2 pi")

    def _closest(self, X):
        c = np.asarray(self.center, dtype=float)
        a0, a1 = self.span
        p = X - c
        phi = np.arctan2(p[:, 1], p[:, 0])
        rel = np.mod(phi - a0, 2 * np.pi)
        on_span = rel <= (a1 - a0)
        ends = c + self.radius * np.array([[np.cos(a0), np.sin(a0)], [np.cos(a1), np.sin(a1)]])
        d_end = np.linalg.norm(X[:, None, :] - ends[None], axis=2)
        end_pt = ends[np.argmin(d_end, axis=1)]
        on_arc = c + self.radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
        at_center = np.linalg.norm(p, axis=1) < TIE_TOL
        closest = np.where((on_span & ~at_center)[:, None], on_arc, end_pt)
        return closest, at_center

    def _eval(self, X):
        closest, _ = self._closest(X)
        return np.linalg.norm(X - closest, axis=1) - 0.5 * self.thickness

    def _grad(self, X):
        closest, at_center = self._closest(X)
        radial, _ = _unit(X - np.asarray(self.center, dtype=float))
        d = X - closest
        n = np.linalg.norm(d, axis=1)
        on_line = n < TIE_TOL
        g = np.where(on_line[:, None], radial, d / np.where(on_line, 1.0, n)[:, None])
        return g, on_line | at_center

    def moved(self, offset) -> "Arc":
        return Arc(tuple(np.asarray(self.center) + offset), self.radius, self.span, self.thickness)


@dataclass(frozen=True)
class HalfPlane(SdfField):
    """``normal . x - offset`` with a unit normal; free space on the normal side."""

    normal: tuple = (1.0, 0.0)
    offset: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        nn = np.linalg.norm(n)
        if abs(nn - 1.0) > 4 * np.finfo(float).eps:  # leave stored unit normals bit-exact
            n = n / nn
        object.__setattr__(self, "normal", tuple(float(v) for v in n))
        object.__setattr__(self, "dim", len(n))

    def _eval(self, X):
        return X @ np.asarray(self.normal) - self.offset

    def _grad(self, X):
        return np.broadcast_to(np.asarray(self.normal), X.shape).copy(), np.zeros(len(X), bool)

    def moved(self, offset) -> "HalfPlane":
        return HalfPlane(self.normal, self.offset + float(np.dot(self.normal, offset)))
