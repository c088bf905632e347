"""Independent oracles, manufactured solutions, convergence studies and property checks.

The oracles here avoid the production code paths: Galerkin matrices and the
quadratic tensor are assembled from Gauss-Legendre quadrature of pointwise
basis values, and the reference integrator is adaptive DOP853.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp_
from scipy.integrate import solve_ivp
from scipy.special import i0

from . import trig
from .basis import BoxDomain
from .fields import FieldSpace, Trajectory
from .lifting import BoundaryData, Envelope, FaceMode, HarmonicLift
from .operators import OperatorSet
from .quadrature import QuadratureEngine, bilinear_pointwise, gauss


@dataclass
class OracleConfig:
    """Settings of the oracle path."""

    resolution: int = 4
    rtol: float = 1e-12
    atol: float = 1e-14
    seed: int = 0
    cutoffs: tuple[int, ...] = (4, 8, 16)
    sigmas: tuple[float, ...] = (0.5, 0.75, 1.0)

    def __post_init__(self):
        if self.resolution < 4:
            raise ValueError("quadrature resolution multiplier must be >= 4")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")


# ----------------------------------------------------------- dense Galerkin
def _axis_index(basis) -> np.ndarray:
    off = np.array([0 if p == "S" else 1 for p in basis.parities])
    return basis.kidx - 1 + off


class DenseGalerkin:
    """Quadrature-assembled ``S`` and quadratic tensor ``T[j,k,l] = <B[phi_k, phi_l], phi_j>``."""

    def __init__(self, ops: OperatorSet, resolution: int = 4):
        space = ops.space
        self.ops = ops
        self.space = space
        d = space.dim
        nq = resolution * max(space.cutoff) + 16
        L = space.domain.extents
        V, D = [], []
        for b in space.bases:
            V.append([trig.evaluate(p, trig.modes(p, m), gauss(nq, L[a])[0], L[a])
                      for a, (p, m) in enumerate(zip(b.parities, b.cutoff))])
            D.append([trig.evaluate(p, trig.modes(p, m), gauss(nq, L[a])[0], L[a], 1)
                      for a, (p, m) in enumerate(zip(b.parities, b.cutoff))])
        W = [gauss(nq, L[a])[1] for a in range(d)]
        idx = [_axis_index(b) for b in space.bases]
        n = space.n_dof
        self.S = np.zeros((n, n))
        skew_terms = []
        for i in range(d):
            skew_terms.append((0, 1 + i, i))
            skew_terms.append((1 + i, 0, i))
        for o, c, ax in skew_terms:
            blk = np.ones((space.sizes[o], space.sizes[c]))
            for a in range(d):
                M = (V[o][a] * W[a][:, None]).T @ (D[c][a] if a == ax else V[c][a])
                blk = blk * M[np.ix_(idx[o][:, a], idx[c][:, a])]
            self.S[space.slice(o), space.slice(c)] += blk
        self.T = np.zeros((n, n, n))
        for o, coef, (uc, ax), zc in ops._terms:
            blk = np.full((space.sizes[o], space.sizes[uc], space.sizes[zc]), coef)
            for a in range(d):
                I = np.einsum("q,qj,qk,ql->jkl", W[a], V[o][a],
                              D[uc][a] if a == ax else V[uc][a], V[zc][a])
                blk = blk * I[np.ix_(idx[o][:, a], idx[uc][:, a], idx[zc][:, a])]
            self.T[space.slice(o), space.slice(uc), space.slice(zc)] += blk

    def quadratic(self, u: np.ndarray, z: np.ndarray) -> np.ndarray:
        return np.einsum("jkl,k,l->j", self.T, u, z)

    def rhs(self, t, c, forcing_fn, nonlinear=True):
        r = -self.space.multipliers * c - self.S @ c
        if nonlinear:
            r -= self.quadratic(c, c)
        if forcing_fn is not None:
            r += forcing_fn(t)
        return r


def dense_galerkin_oracle(ops: OperatorSet, g: np.ndarray, times: np.ndarray,
                          forcing_fn: Callable[[float], np.ndarray] | None = None,
                          nonlinear: bool = True, config: OracleConfig | None = None,
                          sigma: float = 1.0) -> Trajectory:
    """Reference trajectory of the dense Galerkin ODE by adaptive DOP853."""
    config = config or OracleConfig()
    if max(ops.space.cutoff) > 4:
        raise ValueError("dense oracle is limited to cutoff <= 4 per axis")
    dg = DenseGalerkin(ops, config.resolution)
    sol = solve_ivp(lambda t, c: dg.rhs(t, c, forcing_fn, nonlinear), (times[0], times[-1]),
                    np.asarray(g, dtype=float), method="DOP853", t_eval=times,
                    rtol=config.rtol, atol=config.atol)
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    C = sol.y.T
    D = np.array([dg.rhs(t, c, forcing_fn, nonlinear) for t, c in zip(times, C)])
    return Trajectory(ops.space, times, C, D, sigma)


# ---------------------------------------------------- manufactured solutions
_X = sp_.symbols("x0:3", real=True)


def _hom_expressions(family: str, dim: int, kind: str):
    """Sympy expressions of the homogeneous part on ``[0, pi]^d``."""
    from .fields import FAMILIES
    pk, vk = FAMILIES[family]
    x = _X[:dim]
    eps = sp_.Rational(4, 5)

    def S(a, k=1):
        return sp_.sin(k * x[a]) * (sp_.exp(eps * sp_.cos(x[a])) if kind == "analytic" else 1)

    def C(a, k=1):
        return sp_.exp(eps * sp_.cos(x[a])) if kind == "analytic" else sp_.cos(k * x[a])

    exprs = []
    amps = [1, sp_.Rational(1, 2), sp_.Rational(-1, 3), sp_.Rational(1, 4)]
    for comp in range(dim + 1):
        kd = pk if comp == 0 else vk
        if kd == "dirichlet":
            e = sp_.Mul(*[S(a, 1 + (a + comp) % 2) for a in range(dim)])
        elif kd == "neumann":
            if kind == "analytic":
                e = sp_.Mul(*[C(a) for a in range(dim)]) - sp_.Float(i0(0.8)) ** dim
            else:
                e = sp_.cos(x[0]) * sp_.cos(x[1]) + sp_.cos(2 * x[dim - 1])
        else:
            i = comp - 1
            e = S(i) * sp_.Mul(*[C(a) for a in range(dim) if a != i])
        exprs.append(amps[comp] * e)
    return exprs


def _default_boundary(family: str, dim: int, amplitude: float, envelope: Envelope):
    from .fields import FAMILIES
    pk, vk = FAMILIES[family]
    modes = []
    t1 = (1,) * (dim - 1)
    if pk == "dirichlet":
        modes.append(FaceMode(0, 1, 0, t1, amplitude, envelope))
    else:
        modes.append(FaceMode(0, 1, 0, t1, amplitude, envelope))
        modes.append(FaceMode(0, 0, 1, (0,) * (dim - 1), 0.5 * amplitude, envelope))
    if vk == "dirichlet":
        modes.append(FaceMode(1, 0, 1, (2,) + (1,) * (dim - 2), 0.5 * amplitude, envelope))
        modes.append(FaceMode(2, 1, 1, t1, -amplitude / 3, envelope))
    return BoundaryData(modes)


class ManufacturedSolution:
    """``u_ms = e_h(t) H(x) + lift(x, t)`` on ``[0, pi]^d``.

    ``H`` satisfies homogeneous conditions of the family (single modes for
    ``kind='modes'``, analytic non-band-limited fields for
    ``kind='analytic'``, or explicit sympy ``fields`` in the symbols
    ``x0, x1, x2``); the lift carries nonhomogeneous boundary data.
    The forcing ``f_ms = u_t + A u + S u + B[u,u]`` is evaluated pointwise
    (symbolic derivatives of ``H``, closed-form derivatives of the lift) and
    projected by Gauss quadrature.
    """

    def __init__(self, family: str, sigma: float = 1.0, dim: int | None = None,
                 kind: str = "modes", nonhomogeneous: bool = False, amplitude: float = 0.05,
                 envelope: Envelope | None = None, static: bool = False,
                 boundary: BoundaryData | None = None, zero: bool = False,
                 fields: Sequence | None = None):
        from .fields import canonical_family
        self.family = canonical_family(family)
        self.dim = dim or (3 if self.family in ("NeuHodge", "DirHodge") else 2)
        self.sigma = sigma
        self.kind = kind
        env = Envelope("const") if static else (envelope or Envelope("exp", rate=-1.0))
        self.envelope = env
        self.amplitude = 0.0 if zero else amplitude
        if fields is not None:
            if len(fields) != self.dim + 1:
                raise ValueError("need one expression per component")
            self.exprs = [sp_.sympify(e, locals={f"x{i}": _X[i] for i in range(3)})
                          for e in fields]
        else:
            self.exprs = _hom_expressions(self.family, self.dim, kind)
        if nonhomogeneous and boundary is None:
            benv = Envelope("const") if static else Envelope("exp", rate=-0.5)
            boundary = _default_boundary(self.family, self.dim, self.amplitude, benv)
        self.boundary = boundary if (boundary is not None and not zero) else BoundaryData()
        x = _X[: self.dim]
        lam = lambda e: sp_.lambdify(x, e, "numpy")
        self._H = [lam(e) for e in self.exprs]
        self._dH = [[lam(sp_.diff(e, xa)) for xa in x] for e in self.exprs]
        self._lapH = [lam(sum(sp_.diff(e, xa, 2) for xa in x)) for e in self.exprs]

    @property
    def domain(self) -> BoxDomain:
        return BoxDomain.cube(self.dim)

    def space(self, cutoff, zeta=1.0, mu=1.0) -> FieldSpace:
        return FieldSpace(self.domain, self.family, cutoff, zeta, mu)

    def _ev(self, f, pts):
        args = [pts[..., a] for a in range(self.dim)]
        return np.broadcast_to(np.asarray(f(*args), dtype=float), pts.shape[:-1]).copy()

    def hom_values(self, pts):
        return [self.amplitude * self._ev(f, pts) for f in self._H]

    def hom_grads(self, pts):
        return [[self.amplitude * self._ev(f, pts) for f in row] for row in self._dH]

    def hom_lap(self, pts):
        return [self.amplitude * self._ev(f, pts) for f in self._lapH]

    def values(self, pts, t):
        """Full ``u_ms(x, t)`` at points, shape ``(ncomp, ...)``."""
        e = float(self.envelope(t))
        out = np.array(self.hom_values(pts)) * e
        if not self.boundary.is_zero():
            out += HarmonicLift(self.space(2), self.boundary).evaluate(pts, t)
        return out

    def setup(self, ops: OperatorSet, nq: int | None = None) -> "MMSDiscrete":
        return MMSDiscrete(self, ops, nq)


class MMSDiscrete:
    """Projected pieces of a manufactured solution on one field space."""

    def __init__(self, ms: ManufacturedSolution, ops: OperatorSet, nq: int | None = None):
        self.ms = ms
        self.ops = ops
        sp = ops.space
        self.space = sp
        d = sp.dim
        q = QuadratureEngine(sp, nq or max(40, 4 * max(sp.cutoff) + 24))
        self.quad = q
        pts = q.points()
        self.lift = HarmonicLift(sp, ms.boundary, ops) if not ms.boundary.is_zero() else None
        # pieces U_a with envelopes e_a: the homogeneous part then each lift function
        vals = [ms.hom_values(pts)]
        grads = [ms.hom_grads(pts)]
        laps = [ms.hom_lap(pts)]
        self.envs = [ms.envelope]
        if self.lift is not None:
            for f in self.lift.funcs:
                v = [np.zeros(pts.shape[:-1]) for _ in range(d + 1)]
                g = [[np.zeros(pts.shape[:-1]) for _ in range(d)] for _ in range(d + 1)]
                lp = [np.zeros(pts.shape[:-1]) for _ in range(d + 1)]
                v[f.comp] = f(pts)
                for a in range(d):
                    g[f.comp][a] = f(pts, tuple(int(a == b) for b in range(d)))
                    lp[f.comp] = lp[f.comp] + f(pts, tuple(2 * int(a == b) for b in range(d)))
                vals.append(v)
                grads.append(g)
                laps.append(lp)
                self.envs.append(f.envelope)
        coef = [sp.zeta] + [sp.mu] * d
        self.PU = np.array([q.project(v) for v in vals])
        PA = []
        for v, g, lp in zip(vals, grads, laps):
            a = [-coef[0] * lp[0] + sum(g[1 + i][i] for i in range(d))]
            a += [-coef[1 + i] * lp[1 + i] + g[0][i] for i in range(d)]
            PA.append(q.project(a))
        self.PA = np.array(PA)
        n = len(vals)
        self.PB = np.zeros((n, n, sp.n_dof))
        for i in range(n):
            for j in range(n):
                self.PB[i, j] = q.project(bilinear_pointwise(ops, grads[i], vals[j]))

    def env(self, times):
        return np.stack([e(np.asarray(times, dtype=float)) for e in self.envs], axis=1)

    def denv(self, times):
        return np.stack([e.deriv(np.asarray(times, dtype=float)) for e in self.envs], axis=1)

    def forcing(self, times) -> np.ndarray:
        """``P f_ms(t_n)``."""
        E, dE = self.env(times), self.denv(times)
        return dE @ self.PU + E @ self.PA + np.einsum("ta,tb,abk->tk", E, E, self.PB)

    def forcing_fn(self, t: float) -> np.ndarray:
        return self.forcing(np.array([t]))[0]

    def exact(self, times, sigma=None) -> Trajectory:
        """Projected homogeneous part ``P(u_ms - h)`` with exact time derivative."""
        times = np.asarray(times, dtype=float)
        e = self.ms.envelope(times)[:, None]
        de = self.ms.envelope.deriv(times)[:, None]
        return Trajectory(self.space, times, e * self.PU[0], de * self.PU[0],
                          self.ms.sigma if sigma is None else sigma)

    @property
    def g(self) -> np.ndarray:
        return float(self.ms.envelope(0.0)) * self.PU[0]


def manufactured_solution(bc_family: str, sigma: float = 1.0, **kw):
    """Return ``(u_ms, f_ms, g_ms, h_ms)`` callables/data for a boundary family.

    ``u_ms(x, t)`` and ``f_ms(x, t)`` are pointwise callables, ``g_ms(x)`` the
    initial field and ``h_ms`` the boundary data.
    """
    ms = ManufacturedSolution(bc_family, sigma, **kw)

    def f_ms(pts, t, ops=None):
        ops = ops or OperatorSet(ms.space(2))
        sp = ops.space
        d = ms.dim
        e, de = float(ms.envelope(t)), float(ms.envelope.deriv(t))
        v = np.array(ms.hom_values(pts))
        g = ms.hom_grads(pts)
        lp = ms.hom_lap(pts)
        uv = [e * v[c] for c in range(d + 1)]
        ug = [[e * g[c][a] for a in range(d)] for c in range(d + 1)]
        ut = [de * v[c] for c in range(d + 1)]
        lap = [e * lp[c] for c in range(d + 1)]
        if not ms.boundary.is_zero():
            lift = HarmonicLift(sp, ms.boundary)
            lv = lift.evaluate(pts, t)
            lg = lift.gradient(pts, t)
            dl = np.zeros_like(lv)
            E = lift.envelope_derivs(t)[0]
            for j, fn in enumerate(lift.funcs):
                dl[fn.comp] += E[j] * fn(pts)
            for c in range(d + 1):
                uv[c] = uv[c] + lv[c]
                ut[c] = ut[c] + dl[c]
                for a in range(d):
                    ug[c][a] = ug[c][a] + lg[c, a]
        coef = [sp.zeta] + [sp.mu] * d
        B = bilinear_pointwise(ops, ug, uv)
        out = [ut[0] - coef[0] * lap[0] + sum(ug[1 + i][i] for i in range(d)) + B[0]]
        out += [ut[1 + i] - coef[1 + i] * lap[1 + i] + ug[0][i] + B[1 + i] for i in range(d)]
        return np.array(out)

    return (ms.values, f_ms, lambda pts: ms.values(pts, 0.0), ms.boundary), ms


# -------------------------------------------------------- convergence study
@dataclass
class RateTable:
    axis: str
    levels: list
    errors: list[float]
    rate: float
    ratios: list[float]
    monotone: bool
    super_algebraic: bool = False

    def rows(self):
        out = []
        for i, (lv, e) in enumerate(zip(self.levels, self.errors)):
            r = self.ratios[i - 1] if i > 0 else float("nan")
            out.append((lv, e, r))
        return out

    def to_csv(self) -> str:
        import csv
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.axis, "error", "ratio"])
        for lv, e, r in self.rows():
            w.writerow([repr(lv), f"{e:.12e}", f"{r:.6e}"])
        w.writerow(["fitted_rate", f"{self.rate:.6f}", ""])
        return buf.getvalue()


def convergence_study(runner: Callable[[object], float], levels: Sequence, axis: str = "dt"):
    """Errors per level and fitted rate.

    For ``axis='dt'`` the rate is the least-squares slope of ``log error``
    against ``log dt``; for ``axis='cutoff'`` per-level error ratios are
    reported and ``super_algebraic`` flags ratios ``>= 10`` throughout.
    Non-monotone sequences are flagged, not hidden.
    """
    if len(levels) < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    errs = [float(runner(lv)) for lv in levels]
    ratios = [errs[i] / errs[i + 1] if errs[i + 1] > 0 else float("inf")
              for i in range(len(errs) - 1)]
    if axis == "dt":
        monotone = all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))
        x = np.log(np.asarray(levels, dtype=float))
        y = np.log(np.asarray(errs))
        rate = float(np.polyfit(x, y, 1)[0])
        return RateTable(axis, list(levels), errs, rate, ratios, monotone)
    monotone = all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))
    x = np.log(np.asarray(levels, dtype=float))
    rate = float(-np.polyfit(x, np.log(errs), 1)[0])
    sa = all(r >= 10 for r in ratios)
    return RateTable(axis, list(levels), errs, rate, ratios, monotone, sa)


# --------------------------------------------------------------- properties
@dataclass
class PropertyResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


def _kron_rows(mats_list, idx, rows):
    """Rows of ``sum_t prod_a mats_list[t][a]`` restricted to retained modes."""
    out = 0.0
    for mats in mats_list:
        blk = 1.0
        for a, M in enumerate(mats):
            blk = blk * M[np.ix_(idx[rows, a], idx[:, a])]
        out = out + blk
    return out


def eigen_structure(space: FieldSpace, chunk: int = 512) -> tuple[float, float]:
    """Max deviation of the Gram matrix from I and of the stiffness from diag(lambda).

    One-dimensional Gauss quadrature at twice the band limit, combined over
    axes by Fubini (every basis function is a tensor product).
    """
    L = space.domain.extents
    gerr = serr = 0.0
    for b in space.bases:
        idx = _axis_index(b)
        G, K = [], []
        for a, (p, m) in enumerate(zip(b.parities, b.cutoff)):
            x, w = gauss(2 * (m + 1) + 24, L[a])
            V = trig.evaluate(p, trig.modes(p, m), x, L[a])
            V2 = trig.evaluate(p, trig.modes(p, m), x, L[a], 2)
            G.append((V * w[:, None]).T @ V)
            K.append(-(V * w[:, None]).T @ V2)
        d = len(L)
        stiff = [[K[a] if a == c else G[a] for a in range(d)] for c in range(d)]
        for s in range(0, b.size, chunk):
            rows = np.arange(s, min(s + chunk, b.size))
            Gb = _kron_rows([G], idx, rows)
            Gb[np.arange(len(rows)), rows] -= 1.0
            gerr = max(gerr, float(np.abs(Gb).max()))
            Sb = _kron_rows(stiff, idx, rows)
            Sb[np.arange(len(rows)), rows] -= b.eigenvalues[rows]
            serr = max(serr, float(np.abs(Sb).max()))
    return gerr, serr


def freeslip_trace(space: FieldSpace, n: int = 9) -> float:
    """Max of ``|v . n|`` over boundary samples of all velocity basis functions."""
    from .basis import eval_mode
    L = space.domain.extents
    d = space.dim
    worst = 0.0
    for i in range(d):
        b = space.bases[1 + i]
        for side in (0, 1):
            axes = [trig.grid(n, La) if a != i else np.array([side * La]) for a, La in enumerate(L)]
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
            for k in b.kidx:
                worst = max(worst, float(np.abs(eval_mode(b, tuple(k), pts)).max()))
    return worst


def skew_check(ops: OperatorSet, samples: int = 100, seed: int = 0) -> tuple[float, float]:
    """``||S + S^T||_max`` and ``max |<S u, u>| / ||u||^2`` over random states."""
    S = ops.assemble_skew()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        u = rng.standard_normal(ops.space.n_dof)
        worst = max(worst, abs(ops.apply_skew(u) @ u) / (u @ u))
    return float(np.abs(S + S.T).max()), float(worst)


def bilinear_oracle_error(ops: OperatorSet, samples: int = 3, seed: int = 0) -> float:
    """Relative max difference of production ``B`` against quadrature projection."""
    q = QuadratureEngine(ops.space)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        u = rng.standard_normal(ops.space.n_dof)
        z = rng.standard_normal(ops.space.n_dof)
        ref = q.apply_bilinear(ops, u, z)
        worst = max(worst, float(np.abs(ops.apply_bilinear(u, z) - ref).max()
                                 / max(np.abs(ref).max(), 1e-300)))
    return worst


def property_suite(ops: OperatorSet, boundary: BoundaryData | None = None, seed: int = 0,
                   samples: int = 100) -> list[PropertyResult]:
    """Run the structural property checks on one operator set."""
    from .fractional import apply_frac_power
    from .fields import SpectralField
    sp = ops.space
    out = []
    g, s = eigen_structure(sp)
    out.append(PropertyResult("gram_identity", g <= 1e-10, g, 1e-10))
    out.append(PropertyResult("eigen_relation", s <= 1e-8, s, 1e-8))
    mono = all(np.all(np.diff(b.eigenvalues) >= 0) and b.eigenvalues[0] > 0 for b in sp.bases)
    out.append(PropertyResult("eigenvalue_order", mono, float(min(b.eigenvalues[0]
                                                                   for b in sp.bases)), 0.0))
    if "freeslip" in [b.kind.tag for b in sp.bases]:
        fs = freeslip_trace(sp)
        out.append(PropertyResult("freeslip_normal_trace", fs <= 1e-12, fs, 1e-12))
    sym, q = skew_check(ops, samples, seed)
    out.append(PropertyResult("skew_symmetry", sym <= 1e-12, sym, 1e-12))
    out.append(PropertyResult("skew_energy_neutral", q <= 1e-10, q, 1e-10))
    rng = np.random.default_rng(seed)
    u, w = rng.standard_normal(sp.n_dof), rng.standard_normal(sp.n_dof)
    sa = abs(ops.apply_diffusion(u) @ w - u @ ops.apply_diffusion(w)) / (np.linalg.norm(u)
                                                                         * np.linalg.norm(w))
    out.append(PropertyResult("diffusion_self_adjoint", sa <= 1e-12, sa, 1e-12))
    f = SpectralField(sp.bases[0], rng.standard_normal(sp.bases[0].size))
    grp = np.abs(apply_frac_power(apply_frac_power(f, 0.3, sp.zeta), 0.45, sp.zeta).coefficients
                 - apply_frac_power(f, 0.75, sp.zeta).coefficients).max() / np.abs(
        apply_frac_power(f, 0.75, sp.zeta).coefficients).max()
    out.append(PropertyResult("multiplier_group", grp <= 1e-12, grp, 1e-12))
    be = bilinear_oracle_error(ops, seed=seed)
    out.append(PropertyResult("bilinear_oracle", be <= 1e-10, be, 1e-10,
                              "dealias" if ops.dealias else "dealias disabled"))
    if boundary is not None and not boundary.is_zero():
        lift = HarmonicLift(sp, boundary, ops)
        h = lift.harmonicity_residual()
        t = lift.trace_error()
        out.append(PropertyResult("lift_harmonicity", h <= 1e-8, h, 1e-8))
        out.append(PropertyResult("lift_trace", t <= 1e-8, t, 1e-8))
    return out


def oracle_comparison(family: str, cutoff: int = 3, dim: int | None = None, nonlinear: bool = True,
                      dt: float = 1e-4, T: float = 0.2, amplitude: float = 0.1, seed: int = 0,
                      sigma: float = 1.0, config: OracleConfig | None = None) -> float:
    """X-norm difference between the production solver and the dense oracle.

    Random smooth data: initial state and cosine-in-time forcing, scaled to
    ``amplitude``. Nonlinear runs go through Newton, linear ones through the
    IMEX integrator directly.
    """
    from .evolution import LinearProblem, smooth_time_profiles, solve_linear
    from .fields import canonical_family
    from .fractional import x_norm
    from .newton import NonlinearProblem, newton_solve
    fam = canonical_family(family)
    dim = dim or (3 if fam in ("NeuHodge", "DirHodge") else 2)
    sp = FieldSpace(BoxDomain.cube(dim), fam, cutoff)
    ops = OperatorSet(sp)
    rng = np.random.default_rng(seed)
    g = amplitude * sp.random(rng, 2.0)
    a = amplitude * np.stack([sp.random(rng, 2.0) for _ in range(3)])
    times = np.linspace(0.0, T, int(round(T / dt)) + 1)
    F = smooth_time_profiles(times) @ a

    def fn(t):
        return np.cos(np.arange(3) * np.pi * t / T) @ a

    if nonlinear:
        prob = NonlinearProblem(ops, T, dt, sigma, g=g, forcing=F, tol=1e-12)
        prod, _ = newton_solve(prob, certify=False)
    else:
        prod, _ = solve_linear(LinearProblem(ops, g, T, dt, sigma, forcing=F), report=False)
    ref = dense_galerkin_oracle(ops, g, prod.times, fn, nonlinear, config, sigma)
    return float(x_norm(prod - ref, sigma))
