"""Min-union composition, rigid offsets and a planar articulated body."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .primitives import TIE_TOL, SdfField, _segment_closest, _unit

_OMEGA = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class Union(SdfField):
    """Pointwise minimum of component fields; ties go to the lowest index."""

    fields: tuple = ()

    def __post_init__(self):
        if not self.fields:
            raise ValueError("union needs at least one field")
        dims = {f.dim for f in self.fields}
        if len(dims) != 1:
            raise ValueError(f"components have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "dim", dims.pop())

    def _values(self, X):
        return np.stack([f._eval(X) for f in self.fields], axis=1)

    def _eval(self, X):
        return self._values(X).min(axis=1)

    def _grad(self, X):
        vals = self._values(X)
        k = np.argmin(vals, axis=1)  # first minimum = lowest index
        grads, flags = zip(*(f._grad(X) for f in self.fields))
        rows = np.arange(len(X))
        g = np.stack(grads, axis=1)[rows, k]
        srt = np.sort(vals, axis=1)
        tie = (srt[:, 1] - srt[:, 0] < TIE_TOL) if vals.shape[1] > 1 else np.zeros(len(X), bool)
        return g, np.stack(flags, axis=1)[rows, k] | tie

    def winner(self, x) -> np.ndarray:
        X, lead = self._batch(x)
        return np.argmin(self._values(X), axis=1).reshape(lead)


def union_min(fields) -> Union:
    return Union(tuple(fields))


@dataclass(frozen=True)
class Translated(SdfField):
    """``field`` shifted by ``offset``: value at x is field(x - offset)."""

    field: SdfField = None
    offset: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.field is None or len(self.offset) != self.field.dim:
            raise ValueError("offset must match the wrapped field dimension")
        object.__setattr__(self, "dim", self.field.dim)

    def _eval(self, X):
        return self.field._eval(X - np.asarray(self.offset))

    def _grad(self, X):
        return self.field._grad(X - np.asarray(self.offset))

    def eval_and_gradient(self, x):
        return self.field.eval_and_gradient(np.asarray(x, dtype=float) - np.asarray(self.offset))


@dataclass(frozen=True)
class ArticulatedBody:
    """Planar revolute chain of capsule links.

    ``base`` is (x, y, heading). Joint k sits at the start of link k and its
    angle is relative to link k - 1.
    """

    link_lengths: tuple = (1.0, 1.0)
    radii: tuple = (0.1, 0.1)
    base: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.link_lengths) < 1:
            raise ValueError("need at least one link")
        if len(self.radii) != len(self.link_lengths):
            raise ValueError("one radius per link")
        if min(self.radii) <= 0 or min(self.link_lengths) <= 0:
            raise ValueError("link lengths and radii must be positive")

    @property
    def n_links(self) -> int:
        return len(self.link_lengths)

    def _check_q(self, q):
        q = np.asarray(q, dtype=float).reshape(-1)
        if len(q) != self.n_links:
            raise ValueError(f"q has {len(q)} entries for {self.n_links} links")
        return q

    def joints(self, q) -> np.ndarray:
        """Forward kinematics: (n_links + 1, 2) joint positions, last is the tip."""
        q = self._check_q(q)
        phi = self.base[2] + np.cumsum(q)
        steps = np.asarray(self.link_lengths)[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return np.vstack([np.asarray(self.base[:2], float), np.asarray(self.base[:2], float) + np.cumsum(steps, axis=0)])

    def _per_link(self, q, X):
        P = self.joints(q)
        closest, dist = [], []
        for k in range(self.n_links):
            c, d2 = _segment_closest(X, P[k], P[k + 1])
            closest.append(c)
            dist.append(np.sqrt(d2) - self.radii[k])
        return P, np.stack(closest, axis=1), np.stack(dist, axis=1)

    def eval(self, q, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        X = x.reshape(-1, 2)
        _, _, dist = self._per_link(q, X)
        return dist.min(axis=1).reshape(x.shape[:-1])

    def grad_x(self, q, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        X = x.reshape(-1, 2)
        _, closest, dist = self._per_link(q, X)
        k = np.argmin(dist, axis=1)
        u, _ = _unit(X - closest[np.arange(len(X)), k])
        return u.reshape(x.shape)

    def grad_q(self, q, x) -> np.ndarray:
        """d(distance)/dq for each query point: (..., n_links).

        Only joints at or before the nearest link move it; rotating joint j
        moves the closest point c by Omega (c - p_j).
        """
        x = np.asarray(x, dtype=float)
        X = x.reshape(-1, 2)
        P, closest, dist = self._per_link(q, X)
        rows = np.arange(len(X))
        k = np.argmin(dist, axis=1)
        c = closest[rows, k]
        n, _ = _unit(X - c)
        G = np.zeros((len(X), self.n_links))
        for j in range(self.n_links):
            dc = (c - P[j]) @ _OMEGA.T
            G[:, j] = np.where(j <= k, -np.sum(n * dc, axis=1), 0.0)
        return G.reshape(*x.shape[:-1], self.n_links)

    def nearest_query_point(self, q, points) -> np.ndarray:
        """Scene point closest to the body surface."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return points[int(np.argmin(self.eval(q, points)))]

    def capsules(self, q):
        from .primitives import Capsule

        P = self.joints(q)
        return [Capsule(tuple(P[k]), tuple(P[k + 1]), self.radii[k]) for k in range(self.n_links)]


def articulated_eval(body: ArticulatedBody, q, x):
    return body.eval(q, x)


def articulated_grad_q(body: ArticulatedBody, q, x):
    return body.grad_q(q, x)


@dataclass(frozen=True)
class JointSpaceField(SdfField):
    """Body-to-point distance viewed as a field over joint configurations."""

    body: ArticulatedBody = None
    x_query: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "dim", self.body.n_links)

    def _eval(self, Q):
        return np.array([self.body.eval(q, np.asarray(self.x_query)) for q in Q], dtype=float)

    def _grad(self, Q):
        g = np.array([self.body.grad_q(q, np.asarray(self.x_query)) for q in Q], dtype=float)
        return g, np.zeros(len(Q), bool)
