"""Tensor-product Laplace eigenbases on a box ``[0, L_1] x ... x [0, L_d]``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import trig


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with one corner at the origin."""

    extents: tuple[float, ...]

    def __post_init__(self):
        ext = tuple(float(e) for e in self.extents)
        if len(ext) not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if any(not np.isfinite(e) or e <= 0 for e in ext):
            raise ValueError("extents must be positive")
        object.__setattr__(self, "extents", ext)

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @classmethod
    def cube(cls, dim: int, L: float = np.pi) -> "BoxDomain":
        return cls((L,) * dim)


@dataclass(frozen=True)
class BasisKind:
    """Boundary condition of one scalar component.

    ``tag`` is ``'dirichlet'``, ``'neumann'`` or ``'freeslip'``; free-slip
    applies to velocity component ``axis`` (normal component vanishes,
    tangential components satisfy homogeneous Neumann conditions).
    """

    tag: str
    axis: int | None = None

    def __post_init__(self):
        if self.tag not in ("dirichlet", "neumann", "freeslip"):
            raise ValueError(f"unknown basis kind {self.tag!r}")
        if self.tag == "freeslip" and self.axis is None:
            raise ValueError("free-slip kind needs the component axis")

    def parities(self, dim: int) -> tuple[str, ...]:
        if self.tag == "dirichlet":
            return ("S",) * dim
        if self.tag == "neumann":
            return ("C",) * dim
        return tuple("S" if a == self.axis else "C" for a in range(dim))

    @property
    def excludes_constant(self) -> bool:
        return self.tag == "neumann"


@dataclass(frozen=True)
class ModeSpec:
    """One eigenmode: multi-index and eigenvalue of ``-Laplace``."""

    k: tuple[int, ...]
    eigenvalue: float


def _cutoff_tuple(cutoff, dim: int) -> tuple[int, ...]:
    if np.isscalar(cutoff):
        cutoff = (int(cutoff),) * dim
    cutoff = tuple(int(c) for c in cutoff)
    if len(cutoff) != dim or any(c < 1 for c in cutoff):
        raise ValueError("cutoff must be a positive integer per axis")
    return cutoff


@dataclass(eq=False)
class Basis:
    """Retained eigenmodes of one scalar component, ordered by eigenvalue.

    Coefficients live either as a flat vector in mode order or as a dense
    tensor with one axis per space direction (``'S'`` axes index ``k-1``,
    ``'C'`` axes index ``k``).
    """

    domain: BoxDomain
    kind: BasisKind
    cutoff: tuple[int, ...]
    kidx: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def parities(self) -> tuple[str, ...]:
        return self.kind.parities(self.domain.dim)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(trig.length(p, m) for p, m in zip(self.parities, self.cutoff))

    @cached_property
    def flat(self) -> np.ndarray:
        off = np.array([0 if p == "S" else 1 for p in self.parities])
        idx = self.kidx - 1 + off
        return np.ravel_multi_index(tuple(idx.T), self.shape)

    @property
    def modes(self) -> list[ModeSpec]:
        return [ModeSpec(tuple(int(v) for v in k), float(lam))
                for k, lam in zip(self.kidx, self.eigenvalues)]

    def to_tensor(self, coef: np.ndarray) -> np.ndarray:
        """Scatter flat coefficients (trailing axis) into dense tensors."""
        coef = np.asarray(coef)
        lead = coef.shape[:-1]
        out = np.zeros(lead + (int(np.prod(self.shape)),), dtype=coef.dtype)
        out[..., self.flat] = coef
        return out.reshape(lead + self.shape)

    def from_tensor(self, tensor: np.ndarray) -> np.ndarray:
        d = self.domain.dim
        lead = tensor.shape[: tensor.ndim - d]
        return tensor.reshape(lead + (-1,))[..., self.flat]

    def index_of(self, k: Sequence[int]) -> int:
        hit = np.flatnonzero((self.kidx == np.asarray(k)).all(axis=1))
        if hit.size == 0:
            raise KeyError(f"mode {tuple(k)} not retained")
        return int(hit[0])


def build_basis(domain: BoxDomain, kind: BasisKind, cutoff) -> Basis:
    """Enumerate retained modes of ``kind`` with per-axis cutoff.

    Modes are sorted by eigenvalue with ties broken lexicographically on the
    multi-index, so the ordering is deterministic.
    """
    d = domain.dim
    cutoff = _cutoff_tuple(cutoff, d)
    if kind.tag == "freeslip" and not 0 <= kind.axis < d:
        raise ValueError("free-slip axis out of range")
    ranges = [trig.modes(p, m) for p, m in zip(kind.parities(d), cutoff)]
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d)
    if kind.excludes_constant:
        grid = grid[grid.any(axis=1)]
    L = np.asarray(domain.extents)
    lam = ((grid * np.pi / L) ** 2).sum(axis=1)
    order = np.lexsort(tuple(grid[:, a] for a in reversed(range(d))) + (lam,))
    return Basis(domain, kind, cutoff, grid[order], lam[order])


def _check_inside(x: np.ndarray, domain: BoxDomain, tol: float = 1e-12):
    L = np.asarray(domain.extents)
    if np.any(x < -tol * L) or np.any(x > L * (1 + tol)):
        raise ValueError("evaluation point outside the domain")


def eval_mode(basis: Basis, mode: ModeSpec | Sequence[int], x) -> np.ndarray:
    """Value of one normalized eigenfunction at points ``x`` (shape ``(..., d)``)."""
    k = mode.k if isinstance(mode, ModeSpec) else tuple(mode)
    x = np.asarray(x, dtype=float)
    _check_inside(x, basis.domain)
    out = np.ones(x.shape[:-1])
    for a, (p, L) in enumerate(zip(basis.parities, basis.domain.extents)):
        out = out * trig.evaluate(p, [k[a]], x[..., a].ravel(), L)[:, 0].reshape(x.shape[:-1])
    return out


def default_grid(basis: Basis, padding: int = 1) -> tuple[int, ...]:
    return tuple(padding * m + 1 for m in basis.cutoff)


def forward_transform(samples: np.ndarray, basis: Basis, method: str = "fft") -> np.ndarray:
    """Eigenbasis coefficients of samples on the tensor midpoint grid.

    The result is exact for fields in the span of the natural band of the
    grid.  ``method='direct'`` uses quadrature matrices instead of FFTs.
    """
    samples = np.asarray(samples, dtype=float)
    d = basis.domain.dim
    if samples.ndim != d:
        raise ValueError("grid/basis size mismatch")
    for N, m in zip(samples.shape, basis.cutoff):
        if N < m + 1:
            raise ValueError("grid/basis size mismatch")
    t = samples
    for a, (p, m, L) in enumerate(zip(basis.parities, basis.cutoff, basis.domain.extents)):
        if method == "fft":
            t = trig.forward(t, p, m, L, axis=a)
        elif method == "direct":
            M = trig.projection(p, m, p, samples.shape[a], L)
            t = trig.apply_axes(t, [M if b == a else None for b in range(d)])
        else:
            raise ValueError(f"unknown transform method {method!r}")
    return basis.from_tensor(t)


def inverse_transform(coef: np.ndarray, basis: Basis, grid: Sequence[int] | None = None,
                      method: str = "fft") -> np.ndarray:
    """Samples on the tensor midpoint grid from eigenbasis coefficients."""
    grid = tuple(grid) if grid is not None else default_grid(basis)
    t = basis.to_tensor(np.asarray(coef, dtype=float))
    for a, (p, L) in enumerate(zip(basis.parities, basis.domain.extents)):
        if method == "fft":
            t = trig.inverse(t, p, grid[a], L, axis=a)
        else:
            E = trig.synthesis(p, basis.cutoff[a], grid[a], L)
            t = trig.apply_axes(t, [E if b == a else None for b in range(len(grid))])
    return t


def midpoint_points(domain: BoxDomain, grid: Sequence[int]) -> np.ndarray:
    """Tensor midpoint grid as an array of shape ``grid + (d,)``."""
    axes = [trig.grid(N, L) for N, L in zip(grid, domain.extents)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
