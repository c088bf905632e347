"""Diffusion, skew coupling and bilinear operators on a field space.

Skew blocks come from closed-form one-dimensional integrals tensorised across
axes.  The bilinear term is evaluated on a padded midpoint grid: factors are
synthesised in their natural (possibly mixed) parities, multiplied pointwise,
grouped by the parity pattern of the product and projected back onto each
component basis.  With ``dealias=True`` the grid has ``2m+1`` points per axis,
which makes the projection exact for the quadratic term.
"""

from __future__ import annotations

import warnings
from collections import defaultdict

import numpy as np
from scipy.sparse.linalg import LinearOperator, svds

from . import trig
from .fields import FieldSpace, StateU


class OperatorSet:
    """Galerkin operators ``A``, ``S`` (skew) and ``B`` for one field space.

    Parameters
    ----------
    space : FieldSpace
        Component bases and diffusion coefficients.
    alpha, beta, gamma, delta : float
        Coefficients of the bilinear term
        ``B[u,z] = (alpha q div v + beta w.grad p, gamma q grad p + delta (grad v) w)``.
    dealias : bool
        Use the exact padded grid (``2m+1`` points per axis).  ``False`` uses
        ``m+1`` points and aliases; kept as a negative control.
    allow_zero : bool
        Permit zero nonlinearity coefficients (diagnostic linear mode).
    """

    def __init__(self, space: FieldSpace, alpha: float = 1.2, beta: float = 1.0,
                 gamma: float = 1.0, delta: float = 1.0, dealias: bool = True,
                 allow_zero: bool = False):
        coeffs = (alpha, beta, gamma, delta)
        if not allow_zero and any(c == 0 for c in coeffs):
            raise ValueError("nonlinearity coefficients must be nonzero")
        if alpha == 1.0:
            warnings.warn("alpha equals 1; the model assumes lambda != 1", stacklevel=2)
        self.space = space
        self.alpha, self.beta, self.gamma, self.delta = (float(c) for c in coeffs)
        self.dealias = bool(dealias)
        self.d = space.dim
        self.L = space.domain.extents
        self.m = space.cutoff
        self.N = tuple((2 * m + 1) if dealias else (m + 1) for m in self.m)
        self.par = [b.parities for b in space.bases]
        self._skew_mats = self._build_skew_mats()
        self._terms = self._bilinear_terms()

    # ------------------------------------------------------------------ A
    def apply_diffusion(self, u):
        """``A u = (-zeta Lap p, -mu Lap v)`` as a diagonal multiplier."""
        if isinstance(u, StateU):
            return StateU(u.space, self.space.multipliers * u.coefficients, u.sigma)
        return self.space.multipliers * u

    # --------------------------------------------------------------- skew
    def _axis_block(self, out_par, in_par, a, deriv):
        m, L = self.m[a], self.L[a]
        tk = trig.modes(out_par, m)
        if not deriv:
            return trig.gram(out_par, tk, in_par, trig.modes(in_par, m), L)
        fp = trig.flip(in_par)
        D = trig.differentiate(np.eye(trig.length(in_par, m)), in_par, L, axis=0)
        return trig.gram(out_par, tk, fp, trig.modes(fp, m), L) @ D

    def _build_skew_mats(self):
        mats = {}
        for i in range(self.d):
            v = 1 + i
            mats[(0, v)] = [self._axis_block(self.par[0][a], self.par[v][a], a, a == i)
                            for a in range(self.d)]
            mats[(v, 0)] = [self._axis_block(self.par[v][a], self.par[0][a], a, a == i)
                            for a in range(self.d)]
        return mats

    def apply_skew(self, u):
        """Matrix-free ``P(div v, grad p)``."""
        c = u.coefficients if isinstance(u, StateU) else np.asarray(u)
        sp = self.space
        ts = sp.tensors(c)
        out = [np.zeros(b.shape) for b in sp.bases]
        for (o, i), mats in self._skew_mats.items():
            out[o] = out[o] + trig.apply_axes(ts[i], mats, offset=ts[i].ndim - self.d)
        r = sp.from_tensors(out)
        return StateU(sp, r, u.sigma) if isinstance(u, StateU) else r

    def assemble_skew(self) -> np.ndarray:
        """Dense skew block matrix ``S`` with ``S c = P A_skew c``."""
        sp = self.space
        S = np.zeros((sp.n_dof, sp.n_dof))
        for (o, i), mats in self._skew_mats.items():
            K = mats[0]
            for M in mats[1:]:
                K = np.kron(K, M)
            bo, bi = sp.bases[o], sp.bases[i]
            S[sp.slice(o), sp.slice(i)] = K[np.ix_(bo.flat, bi.flat)]
        return S

    def skew_norm(self) -> float:
        """Spectral norm of ``S``."""
        return _opnorm(self.space.n_dof, self.apply_skew, self.apply_skew_transpose)

    def apply_skew_transpose(self, c):
        return -self.apply_skew(c)

    def skew_constant(self) -> float:
        """``C_skew = ||S A^{-1/2}||_2``, the bound ``||S u|| <= C ||A^{1/2} u||``."""
        w = self.space.multipliers ** -0.5
        return _opnorm(self.space.n_dof, lambda c: self.apply_skew(w * c),
                       lambda c: w * self.apply_skew_transpose(c))

    # ----------------------------------------------------------- bilinear
    def _bilinear_terms(self):
        """Terms ``(out, coef, (u_comp, axis), z_comp)`` of ``B[u, z]``."""
        d = self.d
        t = []
        for i in range(d):
            t.append((0, self.alpha, (1 + i, i), 0))
            t.append((0, self.beta, (0, i), 1 + i))
        for j in range(d):
            t.append((1 + j, self.gamma, (0, j), 0))
            for i in range(d):
                t.append((1 + j, self.delta, (1 + j, i), 1 + i))
        return [x for x in t if x[1] != 0.0]

    def _synth(self, tensor, pattern):
        mats = [trig.synthesis(p, m, N, L)
                for p, m, N, L in zip(pattern, self.m, self.N, self.L)]
        return trig.apply_axes(tensor, mats)

    def grid_values(self, c: np.ndarray) -> dict:
        """Lazily evaluated grid samples of components and first derivatives."""
        return _GridState(self, c)

    def _project(self, groups) -> np.ndarray:
        sp = self.space
        out = [np.zeros(b.shape) for b in sp.bases]
        for (o, pattern), arr in groups.items():
            mats = [trig.projection(po, m, pn, N, L)
                    for po, pn, m, N, L in zip(self.par[o], pattern, self.m, self.N, self.L)]
            out[o] = out[o] + trig.apply_axes(arr, mats)
        return sp.from_tensors(out)

    def bilinear_sum(self, states, pairs) -> np.ndarray:
        """``sum w * B[states[i], states[j]]`` for ``(w, i, j)`` in ``pairs``.

        Grid samples of each state are computed once and products are summed
        on the grid before projection.
        """
        gs = [self.grid_values(np.asarray(s)) for s in states]
        groups = defaultdict(lambda: 0.0)
        for w, iu, iz in pairs:
            if w == 0.0:
                continue
            gu, gz = gs[iu], gs[iz]
            for o, coef, (uc, ax), zc in self._terms:
                pu = gu.deriv_pattern(uc, ax)
                pz = self.par[zc]
                pat = tuple(trig.xor(a, b) for a, b in zip(pu, pz))
                groups[(o, pat)] = groups[(o, pat)] + (w * coef) * gu.deriv(uc, ax) * gz.value(zc)
        return self._project(groups)

    def apply_bilinear(self, u, z):
        """``P B[u, z]`` (derivatives on ``u``, values of ``z``)."""
        if isinstance(u, StateU):
            return StateU(self.space, self.bilinear_sum([u.coefficients, z.coefficients],
                                                        [(1.0, 0, 1)]), u.sigma)
        return self.bilinear_sum([u, z], [(1.0, 0, 1)])

    def apply_frozen(self, c, s) -> np.ndarray:
        """Linearisation ``B[c, s] + B[s, c]`` at the frozen state ``s``."""
        return self.bilinear_sum([c, s], [(1.0, 0, 1), (1.0, 1, 0)])

    # -------------------------------------------------------------- probes
    def holder_probe(self, sigma: float, samples: int = 200, seed: int = 0,
                     decay: float = 5.0, ref_cutoff: int | None = None) -> float:
        """Empirical constant of ``|<B[u,w],v>| <= C ||u||_{(1+s)/2} ||w||_{s/2} ||v||_{(1-s)/2}``."""
        from .fractional import frac_norm
        rng = np.random.default_rng(seed)
        sp = self.space
        best = 0.0
        for _ in range(samples):
            u, w, v = (sp.random(rng, decay=decay, ref_cutoff=ref_cutoff) for _ in range(3))
            num = abs(self.apply_bilinear(u, w) @ v)
            den = (frac_norm(u, 0.5 * (1 + sigma), sp) * frac_norm(w, 0.5 * sigma, sp)
                   * frac_norm(v, 0.5 * (1 - sigma), sp))
            if den > 0:
                best = max(best, num / den)
        return float(best)


class _GridState:
    """Cache of grid samples for one coefficient vector."""

    def __init__(self, ops: OperatorSet, c: np.ndarray):
        self.ops = ops
        self.ts = ops.space.tensors(c)
        self._val = {}
        self._der = {}

    def value(self, comp):
        if comp not in self._val:
            self._val[comp] = self.ops._synth(self.ts[comp], self.ops.par[comp])
        return self._val[comp]

    def deriv_pattern(self, comp, axis):
        p = list(self.ops.par[comp])
        p[axis] = trig.flip(p[axis])
        return tuple(p)

    def deriv(self, comp, axis):
        key = (comp, axis)
        if key not in self._der:
            ops = self.ops
            t = trig.differentiate(self.ts[comp], ops.par[comp][axis], ops.L[axis], axis=axis)
            self._der[key] = ops._synth(t, self.deriv_pattern(comp, axis))
        return self._der[key]


def _opnorm(n, matvec, rmatvec) -> float:
    if n <= 1500:
        M = np.column_stack([matvec(e) for e in np.eye(n)])
        return float(np.linalg.norm(M, 2))
    op = LinearOperator((n, n), matvec=matvec, rmatvec=rmatvec, dtype=float)
    v0 = np.ones(n) / np.sqrt(n)
    s = svds(op, k=1, return_singular_vectors=False, v0=v0, tol=1e-10)
    return float(s[0])
