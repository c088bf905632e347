"""Field containers: component bases per boundary family, states and trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import Basis, BasisKind, BoxDomain, build_basis

#: pressure kind, velocity kind for each boundary family
FAMILIES = {
    "DirDir": ("dirichlet", "dirichlet"),
    "NeuHodge": ("neumann", "freeslip"),
    "NeuDir": ("neumann", "dirichlet"),
    "DirHodge": ("dirichlet", "freeslip"),
}

#: aliases matching the boundary families (2a)-(2d)
FAMILY_ALIASES = {"2a": "DirDir", "2b": "NeuHodge", "2c": "NeuDir", "2d": "DirHodge"}


def canonical_family(name: str) -> str:
    name = FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ValueError(f"unknown boundary family {name!r}; expected one of {sorted(FAMILIES)}")
    return name


def sigma_range(family: str) -> tuple[float, float, bool]:
    """Admissible ``sigma`` as ``(low, high, low_inclusive)``."""
    family = canonical_family(family)
    if family == "DirDir":
        return 0.5, 1.0, True
    if family == "NeuDir":
        return 0.5, 1.0, False
    return 1.0, 1.0, True


def check_sigma(family: str, sigma: float) -> float:
    lo, hi, incl = sigma_range(family)
    ok = (sigma >= lo if incl else sigma > lo) and sigma <= hi
    if not ok:
        lb = "[" if incl else "("
        raise ValueError(f"sigma={sigma} outside the admissible range {lb}{lo}, {hi}] "
                         f"for family {canonical_family(family)}")
    return float(sigma)


def check_dimension(family: str, dim: int):
    family = canonical_family(family)
    if family in ("NeuHodge", "DirHodge") and dim != 3:
        raise ValueError(f"family {family} is only supported in three dimensions")


class FieldSpace:
    """Bases of ``(p, v_1, .., v_d)`` for a boundary family with a common cutoff.

    The state vector concatenates the flat coefficient vectors of all
    components in that order.
    """

    def __init__(self, domain: BoxDomain, family: str, cutoff, zeta: float = 1.0,
                 mu: float = 1.0, check_dim: bool = True):
        self.domain = domain
        self.family = canonical_family(family)
        if check_dim:
            check_dimension(self.family, domain.dim)
        if not (zeta > 0 and mu > 0):
            raise ValueError("diffusion coefficients must be positive")
        self.zeta = float(zeta)
        self.mu = float(mu)
        pk, vk = FAMILIES[self.family]
        d = domain.dim
        kinds = [BasisKind(pk)] + [BasisKind(vk, i if vk == "freeslip" else None)
                                   for i in range(d)]
        self.bases = tuple(build_basis(domain, k, cutoff) for k in kinds)
        self.cutoff = self.bases[0].cutoff
        self.sizes = np.array([b.size for b in self.bases])
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.n_dof = int(self.offsets[-1])

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def ncomp(self) -> int:
        return self.dim + 1

    def __repr__(self):
        return (f"FieldSpace({self.family}, extents={self.domain.extents}, "
                f"cutoff={self.cutoff}, n_dof={self.n_dof})")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([b.eigenvalues for b in self.bases])

    @cached_property
    def multipliers(self) -> np.ndarray:
        """Diagonal of the diffusion operator, ``zeta*lambda`` and ``mu*lambda``."""
        c = np.concatenate([np.full(b.size, self.zeta if i == 0 else self.mu)
                            for i, b in enumerate(self.bases)])
        return c * self.eigenvalues

    @property
    def lambda_min(self) -> float:
        return float(self.multipliers.min())

    def slice(self, comp: int) -> slice:
        return slice(int(self.offsets[comp]), int(self.offsets[comp + 1]))

    def split(self, c: np.ndarray) -> list[np.ndarray]:
        return [c[..., self.slice(i)] for i in range(self.ncomp)]

    def tensors(self, c: np.ndarray) -> list[np.ndarray]:
        return [b.to_tensor(c[..., self.slice(i)]) for i, b in enumerate(self.bases)]

    def from_tensors(self, ts) -> np.ndarray:
        return np.concatenate([b.from_tensor(t) for b, t in zip(self.bases, ts)], axis=-1)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n_dof)

    def index(self, comp: int, k) -> int:
        return int(self.offsets[comp]) + self.bases[comp].index_of(k)

    def with_cutoff(self, cutoff) -> "FieldSpace":
        return FieldSpace(self.domain, self.family, cutoff, self.zeta, self.mu)

    def transfer(self, c: np.ndarray, other: "FieldSpace") -> np.ndarray:
        """Coefficients of ``c`` on ``other`` (truncate or zero-pad shared modes)."""
        out = np.zeros(c.shape[:-1] + (other.n_dof,))
        for i, (b, ob) in enumerate(zip(self.bases, other.bases)):
            src = {tuple(k): j for j, k in enumerate(b.kidx.tolist())}
            dst = [(j, src.get(tuple(k))) for j, k in enumerate(ob.kidx.tolist())]
            jd = np.array([j for j, s in dst if s is not None], dtype=int)
            js = np.array([s for j, s in dst if s is not None], dtype=int)
            out[..., other.offsets[i] + jd] = c[..., self.offsets[i] + js]
        return out

    def random(self, rng: np.random.Generator, decay: float = 1.0,
               ref_cutoff: int | None = None, band: int | None = None) -> np.ndarray:
        """Random coefficients with ``(1+lambda)^(-decay/2)`` weights.

        Draws are made on a reference cutoff and truncated, so that the low
        modes of a draw do not depend on the cutoff of the space.
        """
        ref = max(self.cutoff) if ref_cutoff is None else int(ref_cutoff)
        refspace = self if ref == max(self.cutoff) and len(set(self.cutoff)) == 1 \
            else self.with_cutoff(ref)
        c = rng.standard_normal(refspace.n_dof)
        c = c * (1.0 + refspace.eigenvalues) ** (-0.5 * decay)
        if band is not None:
            for i, b in enumerate(refspace.bases):
                mask = (b.kidx > band).any(axis=1)
                c[refspace.offsets[i] + np.flatnonzero(mask)] = 0.0
        return refspace.transfer(c, self) if refspace is not self else c


@dataclass(frozen=True)
class SpectralField:
    """Scalar field as coefficients on one basis."""

    basis: Basis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.basis.size,):
            raise ValueError("coefficient length must equal the mode count")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        object.__setattr__(self, "coefficients", c)


@dataclass(frozen=True)
class StateU:
    """State ``u = (p, v)`` on a field space."""

    space: FieldSpace
    coefficients: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.space.n_dof,):
            raise ValueError("state vector length mismatch")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        check_sigma(self.space.family, self.sigma)
        object.__setattr__(self, "coefficients", c)

    @property
    def bc_family(self) -> str:
        return self.space.family

    @property
    def p(self) -> SpectralField:
        return SpectralField(self.space.bases[0], self.coefficients[self.space.slice(0)])

    @property
    def v(self) -> list[SpectralField]:
        return [SpectralField(self.space.bases[i], self.coefficients[self.space.slice(i)])
                for i in range(1, self.space.ncomp)]

    @classmethod
    def from_fields(cls, p: SpectralField, v, space: FieldSpace, sigma: float = 1.0):
        for f, b in zip([p, *v], space.bases):
            if f.basis.kind != b.kind or f.basis.cutoff != b.cutoff:
                raise ValueError("component bases do not match the field space")
        return cls(space, np.concatenate([p.coefficients] + [f.coefficients for f in v]), sigma)

    def __add__(self, other):
        return StateU(self.space, self.coefficients + other.coefficients, self.sigma)

    def __mul__(self, a: float):
        return StateU(self.space, a * self.coefficients, self.sigma)

    __rmul__ = __mul__


def _check_aligned(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape or not np.allclose(a, b, rtol=0.0, atol=1e-12 * max(1.0, a[-1])):
        raise ValueError("misaligned time grids")


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    dt = np.diff(times)
    w = np.zeros_like(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


@dataclass
class Trajectory:
    """Coefficient samples ``coeffs[n]`` at ``times[n]`` on a field space.

    ``derivs`` optionally stores the time derivative evaluated from the
    equation.  ``lift`` optionally carries a boundary lifting whose values
    are added to the spectral part to form the full field.
    """

    space: FieldSpace
    times: np.ndarray
    coeffs: np.ndarray
    derivs: np.ndarray | None = None
    sigma: float = 1.0
    lift: object | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        t = self.times
        if t.ndim != 1 or len(t) < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        if self.coeffs.shape != (len(t), self.space.n_dof):
            raise ValueError("coefficient array shape mismatch")
        if self.derivs is not None and self.derivs.shape != self.coeffs.shape:
            raise ValueError("derivative array shape mismatch")

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @cached_property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.times)

    def state(self, n: int) -> StateU:
        return StateU(self.space, self.coeffs[n], self.sigma)

    def time_derivative(self) -> np.ndarray:
        """Stored derivative, else second-order finite differences on the grid."""
        if self.derivs is not None:
            return self.derivs
        return np.gradient(self.coeffs, self.times, axis=0, edge_order=2)

    def interpolate(self, times: np.ndarray) -> np.ndarray:
        """Piecewise linear interpolation of the coefficients in time."""
        times = np.asarray(times, dtype=float)
        if len(times) == len(self.times) and np.array_equal(times, self.times):
            return self.coeffs
        idx = np.clip(np.searchsorted(self.times, times, side="right") - 1, 0, len(self.times) - 2)
        t0, t1 = self.times[idx], self.times[idx + 1]
        th = ((times - t0) / (t1 - t0))[:, None]
        return (1 - th) * self.coeffs[idx] + th * self.coeffs[idx + 1]

    def __add__(self, other: "Trajectory") -> "Trajectory":
        _check_aligned(self.times, other.times)
        d = None
        if self.derivs is not None and other.derivs is not None:
            d = self.derivs + other.derivs
        return Trajectory(self.space, self.times, self.coeffs + other.coeffs, d, self.sigma,
                          self.lift if self.lift is not None else other.lift)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        _check_aligned(self.times, other.times)
        d = None
        if self.derivs is not None and other.derivs is not None:
            d = self.derivs - other.derivs
        return Trajectory(self.space, self.times, self.coeffs - other.coeffs, d, self.sigma)

    def scaled(self, a: float) -> "Trajectory":
        d = None if self.derivs is None else a * self.derivs
        return Trajectory(self.space, self.times, a * self.coeffs, d, self.sigma)

    @classmethod
    def zeros(cls, space: FieldSpace, times, sigma: float = 1.0) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        z = np.zeros((len(times), space.n_dof))
        return cls(space, times, z, z.copy(), sigma)


def time_grid(T: float, dt: float) -> np.ndarray:
    """Uniform grid on ``[0, T]``; ``T/dt`` must be an integer up to rounding."""
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ValueError("T must be an integer multiple of dt")
    return np.linspace(0.0, T, n + 1)
