"""Harmonic lifting of band-limited boundary data on the box.

Each face-mode of the boundary data is lifted by separation of variables: a
product of tangential sines (Dirichlet data) or cosines (Neumann data) times
a hyperbolic profile in the normal direction.  Every lift is a short sum of
separable terms, so Galerkin couplings with the eigenbasis reduce to
Kronecker products of one-dimensional integrals.

Neumann data use the outward normal derivative.  Face-constant Neumann
modes are projected to zero net boundary flux and lifted by a harmonic
quadratic polynomial; all pressure lifts under Neumann conditions are shifted
to zero mean.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import trig
from .evolution import LinearProblem, solve_linear
from .fields import FAMILIES, FieldSpace, Trajectory, time_grid
from .fractional import w_norm, y_norm
from .quadrature import gauss


# ----------------------------------------------------------------- envelopes
@dataclass(frozen=True)
class Envelope:
    """Smooth scalar time profile.

    ``kind`` is ``'const'`` (1), ``'exp'`` (``exp(rate t)``), ``'sin'``
    (``sin(omega t + phase)``), ``'ramp'`` (``1 - exp(-rate t)``) or
    ``'poly'`` (``sum c_i t^i``).
    """

    kind: str = "const"
    rate: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("const", "exp", "sin", "ramp", "poly"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "const":
            return np.ones_like(t)
        if k == "exp":
            return np.exp(self.rate * t)
        if k == "sin":
            return np.sin(self.omega * t + self.phase)
        if k == "ramp":
            return 1.0 - np.exp(-self.rate * t)
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "const":
            return np.zeros_like(t)
        if k == "exp":
            return self.rate * np.exp(self.rate * t)
        if k == "sin":
            return self.omega * np.cos(self.omega * t + self.phase)
        if k == "ramp":
            return self.rate * np.exp(-self.rate * t)
        return np.polynomial.polynomial.polyval(
            t, np.polynomial.polynomial.polyder(self.coeffs)) if len(self.coeffs) > 1 \
            else np.zeros_like(t)


# ----------------------------------------------------------- 1D factors
@dataclass(frozen=True)
class Factor:
    """One-dimensional factor on ``[0, L]``.

    ``kind``: ``'sin'``/``'cos'`` with wavenumber ``k`` (``sin(k pi x / L)``),
    ``'sinhp'``/``'coshp'`` normal profiles with decay ``kappa`` measured
    from face ``side``, or ``'poly'`` with coefficients ``c``.
    """

    kind: str
    L: float
    k: int = 0
    kappa: float = 0.0
    side: int = 0
    c: tuple[float, ...] = ()

    def __call__(self, x, deriv: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        L = self.L
        if self.kind in ("sin", "cos"):
            w = self.k * np.pi / L
            ph = 0.0 if self.kind == "sin" else 0.5 * np.pi
            return w**deriv * np.sin(w * x + ph + 0.5 * np.pi * deriv)
        if self.kind == "poly":
            c = np.array(self.c, dtype=float)
            for _ in range(deriv):
                c = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1)
            return np.polynomial.polynomial.polyval(x, c) * np.ones_like(x)
        # normal profiles in xi = distance from the face
        xi = x if self.side == 0 else L - x
        sgn = 1.0 if self.side == 0 else -1.0
        kap = self.kappa
        e0 = np.exp(-kap * xi)
        e1 = np.exp(-2 * kap * (L - xi))
        den = 1.0 - np.exp(-2 * kap * L)
        # sinh(kap(L-xi))/sinh(kap L) and cosh(kap(L-xi))/(kap sinh(kap L))
        sh = e0 * (1.0 - e1) / den
        ch = e0 * (1.0 + e1) / den
        if self.kind == "sinhp":
            vals = [sh, -kap * ch, kap**2 * sh]
        else:
            vals = [ch / kap, -sh, kap * ch]
        return vals[deriv] * sgn**deriv


@dataclass
class SepTerm:
    coef: float
    factors: tuple[Factor, ...]

    def __call__(self, pts, derivs=None):
        d = len(self.factors)
        derivs = derivs or (0,) * d
        out = self.coef
        for a, f in enumerate(self.factors):
            out = out * f(pts[..., a], derivs[a])
        return out


@dataclass
class LiftFunction:
    """Spatial part of one lifted face-mode for a single component."""

    comp: int
    envelope: Envelope
    terms: list[SepTerm]

    def __call__(self, pts, derivs=None):
        return sum(t(pts, derivs) for t in self.terms)


# ------------------------------------------------------------ boundary data
@dataclass(frozen=True)
class FaceMode:
    """One trigonometric mode of boundary data on face ``x_axis = side * L``.

    ``k`` lists tangential wavenumbers for the remaining axes in increasing
    axis order.  Dirichlet data use sine products (``k >= 1``), Neumann data
    cosine products (``k >= 0``).
    """

    component: int
    axis: int
    side: int
    k: tuple[int, ...]
    amplitude: float
    envelope: Envelope = Envelope()


@dataclass
class BoundaryData:
    """Per-face band-limited boundary data for a field space."""

    modes: list[FaceMode] = field(default_factory=list)

    def is_zero(self) -> bool:
        return all(m.amplitude == 0 for m in self.modes)

    def validate(self, space: FieldSpace):
        d = space.dim
        pk, vk = FAMILIES[space.family]
        for m in self.modes:
            if not 0 <= m.component <= d:
                raise ValueError(f"component {m.component} out of range")
            if not 0 <= m.axis < d or m.side not in (0, 1) or len(m.k) != d - 1:
                raise ValueError(f"malformed face mode {m}")
            kind = pk if m.component == 0 else vk
            if kind == "freeslip":
                if m.amplitude != 0:
                    raise ValueError("nonzero free-slip (Hodge) velocity data is not supported")
                continue
            lo = 1 if kind == "dirichlet" else 0
            tang = [a for a in range(d) if a != m.axis]
            for a, k in zip(tang, m.k):
                if k < lo or k > space.cutoff[a]:
                    raise ValueError(f"face mode {m.k} outside the admissible band "
                                     f"[{lo}, {space.cutoff[a]}]")

    def kinds(self, space: FieldSpace):
        pk, vk = FAMILIES[space.family]
        return [pk if m.component == 0 else vk for m in self.modes]


def _face_lift(space: FieldSpace, m: FaceMode, kind: str) -> LiftFunction:
    L = space.domain.extents
    d = space.dim
    tang = [a for a in range(d) if a != m.axis]
    facs = [None] * d
    kap2 = 0.0
    for a, k in zip(tang, m.k):
        facs[a] = Factor("sin" if kind == "dirichlet" else "cos", L[a], k=k)
        kap2 += (k * np.pi / L[a]) ** 2
    kap = np.sqrt(kap2)
    prof = "sinhp" if kind == "dirichlet" else "coshp"
    facs[m.axis] = Factor(prof, L[m.axis], kappa=kap, side=m.side)
    return LiftFunction(m.component, m.envelope, [SepTerm(m.amplitude, tuple(facs))])


def _flux_poly_lift(space: FieldSpace, m: FaceMode) -> LiftFunction:
    """Lift of a face-constant Neumann mode after zero-net-flux projection."""
    L = np.asarray(space.domain.extents)
    d = space.dim
    vol = float(np.prod(L))
    area = vol / L
    total = 2.0 * area.sum()
    # data c on face (axis, side) minus the uniform correction on all faces
    corr = m.amplitude * area[m.axis] / total
    c = np.full((d, 2), -corr)
    c[m.axis, m.side] += m.amplitude
    terms = []
    mean = 0.0
    for b in range(d):
        B = -c[b, 0]
        A = (c[b, 0] + c[b, 1]) / (2 * L[b])
        facs = tuple(Factor("poly", L[a], c=(0.0, B, A) if a == b else (1.0,))
                     for a in range(d))
        terms.append(SepTerm(1.0, facs))
        mean += A * L[b] ** 2 / 3 + B * L[b] / 2
    terms.append(SepTerm(-mean, tuple(Factor("poly", L[a], c=(1.0,)) for a in range(d))))
    return LiftFunction(m.component, m.envelope, terms)


# -------------------------------------------------------------- the lift
@dataclass
class KronTerm:
    out: int
    inp: int
    coef: float
    mats: list[np.ndarray]


class HarmonicLift:
    """Closed-form harmonic extension and its Galerkin couplings.

    Parameters
    ----------
    space : FieldSpace
    data : BoundaryData
    ops : OperatorSet, optional
        Needed for the bilinear couplings.
    nq : int, optional
        Gauss nodes for one-dimensional integrals.
    """

    def __init__(self, space: FieldSpace, data: BoundaryData, ops=None, nq: int | None = None):
        data.validate(space)
        self.space = space
        self.data = data
        self.ops = ops
        self.d = space.dim
        self.nq = nq or max(96, 8 * max(space.cutoff) + 64)
        self.funcs: list[LiftFunction] = []
        for m, kind in zip(data.modes, data.kinds(space)):
            if m.amplitude == 0 or kind == "freeslip":
                continue
            if kind == "neumann" and not any(m.k):
                self.funcs.append(_flux_poly_lift(space, m))
            else:
                self.funcs.append(_face_lift(space, m, kind))
        self._build()

    # -- evaluation --------------------------------------------------------
    def envelopes(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.funcs:
            return np.zeros((len(t), 0))
        return np.stack([f.envelope(t) for f in self.funcs], axis=1)

    def envelope_derivs(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.funcs:
            return np.zeros((len(t), 0))
        return np.stack([f.envelope.deriv(t) for f in self.funcs], axis=1)

    def evaluate(self, pts: np.ndarray, t: float, derivs=None) -> np.ndarray:
        """Values (or partial derivatives) of all components at ``pts``."""
        out = np.zeros((self.d + 1,) + pts.shape[:-1])
        e = self.envelopes(t)[0]
        for j, f in enumerate(self.funcs):
            out[f.comp] += e[j] * f(pts, derivs)
        return out

    def gradient(self, pts, t) -> np.ndarray:
        return np.stack([self.evaluate(pts, t, tuple(int(a == b) for b in range(self.d)))
                         for a in range(self.d)], axis=1)

    def laplacian(self, pts, t) -> np.ndarray:
        return sum(self.evaluate(pts, t, tuple(2 * int(a == b) for b in range(self.d)))
                   for a in range(self.d))

    # -- Galerkin couplings --------------------------------------------------
    def _nodes(self, a):
        return gauss(self.nq, self.space.domain.extents[a])

    def _basis1d(self, comp, a, deriv=0):
        b = self.space.bases[comp]
        p, m = b.parities[a], b.cutoff[a]
        x, _ = self._nodes(a)
        return trig.evaluate(p, trig.modes(p, m), x, self.space.domain.extents[a], deriv)

    def _project_sep(self, comp, factor_vals) -> np.ndarray:
        """Project a separable function (values per axis at nodes) onto component ``comp``."""
        t = None
        for a in range(self.d):
            _, w = self._nodes(a)
            v = self._basis1d(comp, a).T @ (w * factor_vals[a])
            t = v if t is None else np.multiply.outer(t, v)
        return self.space.bases[comp].from_tensor(t)

    def _fvals(self, term: SepTerm, derivs):
        return [term.factors[a](self._nodes(a)[0], derivs[a]) for a in range(self.d)]

    def _project_func(self, comp, func: LiftFunction, derivs) -> np.ndarray:
        sp = self.space
        out = np.zeros(sp.n_dof)
        sl = sp.slice(comp)
        for term in func.terms:
            v = self._fvals(term, derivs)
            v[0] = term.coef * v[0]
            out[sl] += self._project_sep(comp, v)
        return out

    def _build(self):
        sp, d = self.space, self.d
        nf = len(self.funcs)
        self.proj = np.zeros((nf, sp.n_dof))
        self.skewproj = np.zeros((nf, sp.n_dof))
        unit = (0,) * d
        for j, f in enumerate(self.funcs):
            self.proj[j] = self._project_func(f.comp, f, unit)
            for i in range(d):
                der = tuple(int(a == i) for a in range(d))
                if f.comp == 0:
                    self.skewproj[j] += self._project_func(1 + i, f, der)
                elif f.comp == 1 + i:
                    self.skewproj[j] += self._project_func(0, f, der)
        self.couplings = [self._coupling(f) for f in self.funcs] if self.ops is not None else []
        self.pair = np.zeros((nf, nf, sp.n_dof))
        if self.ops is not None:
            for j, fj in enumerate(self.funcs):
                for l, fl in enumerate(self.funcs):
                    self.pair[j, l] = self._pair(fj, fl)

    def _mat(self, out, inp, a, f: Factor, fd: int, sd: int):
        x, w = self._nodes(a)
        T = self._basis1d(out, a)
        S = self._basis1d(inp, a, sd)
        return (T * (w * f(x, fd))[:, None]).T @ S

    def _coupling(self, func: LiftFunction) -> list[KronTerm]:
        """Kronecker terms of ``c -> P(B[c, H] + B[H, c])``."""
        ops, d = self.ops, self.d
        terms = []
        for out, coef, (uc, ax), zc in ops._terms:
            for st in func.terms:
                if func.comp == zc:      # B[c, H]: derivative on c
                    mats = [self._mat(out, uc, a, st.factors[a], 0, int(a == ax)) for a in range(d)]
                    terms.append(KronTerm(out, uc, coef * st.coef, mats))
                if func.comp == uc:      # B[H, c]: derivative on H
                    mats = [self._mat(out, zc, a, st.factors[a], int(a == ax), 0) for a in range(d)]
                    terms.append(KronTerm(out, zc, coef * st.coef, mats))
        return _merge(terms)

    def _pair(self, fu: LiftFunction, fz: LiftFunction) -> np.ndarray:
        """``P B[H_u, H_z]``."""
        ops, d, sp = self.ops, self.d, self.space
        out_vec = np.zeros(sp.n_dof)
        for out, coef, (uc, ax), zc in ops._terms:
            if fu.comp != uc or fz.comp != zc:
                continue
            for su in fu.terms:
                for sz in fz.terms:
                    vals = []
                    for a in range(d):
                        x, _ = self._nodes(a)
                        vals.append(su.factors[a](x, int(a == ax)) * sz.factors[a](x))
                    vals[0] = coef * su.coef * sz.coef * vals[0]
                    out_vec[sp.slice(out)] += self._project_sep(out, vals)
        return out_vec

    def apply_coupling(self, j: int, c: np.ndarray) -> np.ndarray:
        sp = self.space
        ts = sp.tensors(c)
        out = [np.zeros(b.shape) for b in sp.bases]
        for kt in self.couplings[j]:
            out[kt.out] = out[kt.out] + kt.coef * trig.apply_axes(ts[kt.inp], kt.mats)
        return sp.from_tensors(out)

    def coupling_at(self, t: float, c: np.ndarray) -> np.ndarray:
        """``P(B[c, h(t)] + B[h(t), c])``."""
        e = self.envelopes(t)[0]
        out = np.zeros(self.space.n_dof)
        for j in range(len(self.funcs)):
            if e[j] != 0:
                out += e[j] * self.apply_coupling(j, c)
        return out

    def self_term(self, t: float) -> np.ndarray:
        """``P B[h(t), h(t)]``."""
        e = self.envelopes(t)[0]
        return np.einsum("j,l,jlk->k", e, e, self.pair)

    def projected(self, times) -> np.ndarray:
        """``P h(t_n)`` (L2 projection of the lift onto the homogeneous basis)."""
        return self.envelopes(times) @ self.proj

    def source(self, times) -> np.ndarray:
        """``P(dh/dt + skew h)`` at the sample times (diffusion of ``h`` vanishes)."""
        return self.envelope_derivs(times) @ self.proj + self.envelopes(times) @ self.skewproj

    # -- diagnostics ----------------------------------------------------------
    def harmonicity_residual(self, t: float = 0.0, n: int = 17) -> float:
        pts = _box_grid(self.space, n)
        return float(np.abs(self.laplacian(pts, t)).max()) if self.funcs else 0.0

    def trace_error(self, t: float = 0.0, n: int = 17) -> float:
        """Max mismatch of boundary values/normal derivatives against the data."""
        sp = self.space
        L = np.asarray(sp.domain.extents)
        d = self.d
        err = 0.0
        kinds = self.data.kinds(sp)
        for comp in range(d + 1):
            kind = FAMILIES[sp.family][0 if comp == 0 else 1]
            if kind == "freeslip":
                continue
            for axis in range(d):
                for side in (0, 1):
                    pts = _face_grid(sp, axis, side, n)
                    if kind == "dirichlet":
                        got = self.evaluate(pts, t)[comp]
                    else:
                        der = tuple(int(a == axis) for a in range(d))
                        got = self.evaluate(pts, t, der)[comp] * (-1.0 if side == 0 else 1.0)
                    want = np.zeros(pts.shape[:-1])
                    flux = 0.0
                    for m, mk in zip(self.data.modes, kinds):
                        if m.component != comp or mk == "freeslip":
                            continue
                        amp = m.amplitude * m.envelope(t)
                        if mk == "neumann" and not any(m.k):
                            flux += amp * float(np.prod(L)) / L[m.axis]
                        if m.axis != axis or m.side != side:
                            continue
                        val = amp
                        tang = [a for a in range(d) if a != axis]
                        for a, k in zip(tang, m.k):
                            f = np.sin if kind == "dirichlet" else np.cos
                            val = val * f(k * np.pi * pts[..., a] / L[a])
                        want = want + val
                    if kind == "neumann":
                        want = want - flux / (2.0 * (float(np.prod(L)) / L).sum())
                    err = max(err, float(np.abs(got - want).max()))
        return err


def _merge(terms: list[KronTerm]) -> list[KronTerm]:
    return [t for t in terms if t.coef != 0.0]


def _box_grid(space: FieldSpace, n: int) -> np.ndarray:
    axes = [trig.grid(n, L) for L in space.domain.extents]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _face_grid(space: FieldSpace, axis: int, side: int, n: int) -> np.ndarray:
    L = space.domain.extents
    axes = [trig.grid(n, La) if a != axis else np.array([side * La]) for a, La in enumerate(L)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def harmonic_extension(data: BoundaryData, space: FieldSpace, t: float = 0.0,
                       points: np.ndarray | None = None, ops=None):
    """Closed-form harmonic extension; returns ``(lift, values at points)``."""
    lift = HarmonicLift(space, data, ops)
    if points is None:
        return lift, None
    return lift, lift.evaluate(np.asarray(points, dtype=float), t)


# -------------------------------------------------------------- u_Z problem
@dataclass
class LiftedState:
    """``u~ = u_Z + h~``: spectral trajectory plus the closed-form lift."""

    lift: HarmonicLift
    u_z: Trajectory

    @property
    def spectral(self) -> Trajectory:
        return self.u_z


def initial_mismatch(lift: HarmonicLift, g, tol: float = 1e-8, n: int = 17) -> np.ndarray:
    """Coefficients of ``g - h(0)`` in the homogeneous basis.

    ``g`` is either a coefficient vector (already the homogeneous part) or a
    callable ``g(points) -> (ncomp, ...)`` for the full initial field, whose
    compatibility with the boundary data is checked on the faces.
    """
    sp = lift.space
    if not callable(g):
        return np.asarray(g, dtype=float)
    from .quadrature import QuadratureEngine
    d = sp.dim
    for comp in range(d + 1):
        kind = FAMILIES[sp.family][0 if comp == 0 else 1]
        for axis in range(d):
            for side in (0, 1):
                pts = _face_grid(sp, axis, side, n)
                if kind == "dirichlet" or (kind == "freeslip" and comp == 1 + axis):
                    mis = g(pts)[comp] - lift.evaluate(pts, 0.0)[comp]
                    if np.abs(mis).max() > tol:
                        raise ValueError(f"initial data incompatible with boundary data on "
                                         f"face (axis {axis}, side {side}), component {comp}: "
                                         f"mismatch {np.abs(mis).max():.3e}")
    q = QuadratureEngine(sp)
    return q.project_function(lambda x: g(x) - lift.evaluate(x, 0.0))


def solve_uz(lift: HarmonicLift, g, ops, T: float, dt: float, sigma: float = 1.0,
             **kw) -> tuple[Trajectory, object]:
    """Solve ``u_Z' + A u_Z + S u_Z = -P(dh/dt + skew h)``, ``u_Z(0) = P(g - h(0))``."""
    times = time_grid(T, dt)
    g0 = initial_mismatch(lift, g)
    F = -lift.source(times)
    return solve_linear(LinearProblem(ops, g0, T, dt, sigma, forcing=F, **kw))


def lifted_residual(w: Trajectory, lift: HarmonicLift | None, ops, forcing: np.ndarray | None,
                    g: np.ndarray, sigma: float, nonlinear: bool = True,
                    derivative: str = "stored") -> tuple[float, float]:
    """Residual of ``u = w + h`` in ``Y x W`` for the full nonhomogeneous problem.

    ``derivative='fd'`` replaces stored time derivatives by finite
    differences of the samples, which exposes the time-discretisation error.
    """
    sp = w.space
    times = w.times
    C = w.coeffs
    D = w.derivs if (derivative == "stored" and w.derivs is not None) else \
        np.gradient(C, times, axis=0, edge_order=2)
    R = D + sp.multipliers * C
    for n in range(len(times)):
        R[n] += ops.apply_skew(C[n])
        if nonlinear:
            R[n] += ops.apply_bilinear(C[n], C[n])
            if lift is not None and lift.funcs:
                R[n] += lift.coupling_at(times[n], C[n]) + lift.self_term(times[n])
    if lift is not None and lift.funcs:
        R += lift.source(times)
    if forcing is not None:
        R -= forcing
    return y_norm(sp, times, R, sigma), w_norm(sp, C[0] - g, sigma)


def compose_nonhomogeneous(u0: Trajectory, utilde: LiftedState) -> Trajectory:
    """``u = u0 + u~`` as spectral part ``u0 + u_Z`` with the lift attached."""
    out = u0 + utilde.u_z
    out.lift = utilde.lift
    return out
