"""Tensor Gauss-Legendre quadrature on the box, used by oracles and projections.

This path evaluates basis functions pointwise and never touches the midpoint
grids or the closed-form Gram matrices of :mod:`nlacoustics.operators`.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import trig
from .fields import FieldSpace


@lru_cache(maxsize=None)
def gauss(n: int, L: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, L]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * L * (x + 1.0), 0.5 * L * w


def default_order(space: FieldSpace, factor: int = 3, extra: int = 16) -> int:
    return factor * max(space.cutoff) + extra


class QuadratureEngine:
    """Evaluate and project fields at tensor Gauss nodes.

    Parameters
    ----------
    space : FieldSpace
    nq : int, optional
        Nodes per axis; exact for trigonometric integrands of total
        frequency below ``~ nq`` per axis.
    """

    def __init__(self, space: FieldSpace, nq: int | None = None):
        self.space = space
        self.nq = default_order(space) if nq is None else int(nq)
        self.d = space.dim
        L = space.domain.extents
        self.nodes, self.wts = zip(*(gauss(self.nq, La) for La in L))
        self.V, self.D = [], []
        for b in space.bases:
            V, D = [], []
            for a, (p, m) in enumerate(zip(b.parities, b.cutoff)):
                k = trig.modes(p, m)
                V.append(trig.evaluate(p, k, self.nodes[a], L[a]))
                D.append(trig.evaluate(p, k, self.nodes[a], L[a], deriv=1))
            self.V.append(V)
            self.D.append(D)

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.nodes, indexing="ij"), axis=-1)

    def weight_tensor(self) -> np.ndarray:
        w = self.wts[0]
        for wa in self.wts[1:]:
            w = np.multiply.outer(w, wa)
        return w

    def values(self, c: np.ndarray) -> list[np.ndarray]:
        ts = self.space.tensors(c)
        return [trig.apply_axes(t, self.V[i]) for i, t in enumerate(ts)]

    def gradients(self, c: np.ndarray) -> list[list[np.ndarray]]:
        ts = self.space.tensors(c)
        out = []
        for i, t in enumerate(ts):
            g = []
            for ax in range(self.d):
                mats = [self.D[i][a] if a == ax else self.V[i][a] for a in range(self.d)]
                g.append(trig.apply_axes(t, mats))
            out.append(g)
        return out

    def project(self, arrays) -> np.ndarray:
        """L2 projection of node values (one array per component)."""
        ts = []
        for i, arr in enumerate(arrays):
            mats = [(self.V[i][a] * self.wts[a][:, None]).T for a in range(self.d)]
            ts.append(trig.apply_axes(np.asarray(arr, dtype=float)
                                      * np.ones([self.nq] * self.d), mats))
        return self.space.from_tensors(ts)

    def project_function(self, func) -> np.ndarray:
        """Project ``func(points) -> (ncomp, *nodes)``."""
        return self.project(func(self.points()))

    def bilinear_nodes(self, ops, u: np.ndarray, z: np.ndarray) -> list[np.ndarray]:
        """Pointwise ``B[u, z]`` at the nodes."""
        gu = self.gradients(u)
        zv = self.values(z)
        return bilinear_pointwise(ops, gu, zv)

    def apply_bilinear(self, ops, u, z) -> np.ndarray:
        return self.project(self.bilinear_nodes(ops, u, z))

    def l2_inner(self, f, g) -> float:
        return float(np.sum(self.weight_tensor() * f * g))


def bilinear_pointwise(ops, grads, zvals) -> list[np.ndarray]:
    """``B[u, z]`` from gradients of ``u`` and values of ``z`` (lists per component)."""
    d = len(zvals) - 1
    div = sum(grads[1 + i][i] for i in range(d))
    p_out = ops.alpha * zvals[0] * div + ops.beta * sum(zvals[1 + i] * grads[0][i]
                                                       for i in range(d))
    out = [p_out]
    for j in range(d):
        out.append(ops.gamma * zvals[0] * grads[0][j]
                   + ops.delta * sum(grads[1 + j][i] * zvals[1 + i] for i in range(d)))
    return out
