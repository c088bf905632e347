"""One-dimensional sine/cosine machinery on ``[0, L]``.

Parity ``'S'`` denotes the normalized sines ``sqrt(2/L) sin(k pi x / L)``
with ``k = 1..m`` and parity ``'C'`` the normalized cosines with
``k = 0..m`` (``c_0 = sqrt(1/L)``).  Coefficient arrays along one axis are
stored with length ``m`` for ``'S'`` and ``m + 1`` for ``'C'``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import fft as sfft

PARITIES = ("S", "C")


def flip(parity: str) -> str:
    """Parity of the derivative of a function of the given parity."""
    return "C" if parity == "S" else "S"


def xor(a: str, b: str) -> str:
    """Parity of a pointwise product."""
    return "C" if a == b else "S"


def modes(parity: str, m: int) -> np.ndarray:
    """Mode numbers stored along one axis for cutoff ``m``."""
    if parity == "S":
        return np.arange(1, m + 1)
    return np.arange(0, m + 1)


def length(parity: str, m: int) -> int:
    return m if parity == "S" else m + 1


def norms(parity: str, k: np.ndarray, L: float) -> np.ndarray:
    k = np.asarray(k)
    out = np.full(k.shape, np.sqrt(2.0 / L))
    if parity == "C":
        out = np.where(k == 0, np.sqrt(1.0 / L), out)
    return out


def evaluate(parity: str, k, x, L: float, deriv: int = 0) -> np.ndarray:
    """Matrix ``E[n, j]`` of the ``deriv``-th derivative of mode ``k[j]`` at ``x[n]``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = k * np.pi / L
    th = np.outer(x, w)
    c = norms(parity, k, L)
    # derivatives cycle sin -> cos -> -sin -> -cos
    if parity == "S":
        base = [np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)][deriv % 4]
    else:
        base = [np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin][deriv % 4]
    return base(th) * (c * w**deriv)


def derivative_scale(parity: str, m: int, L: float) -> np.ndarray:
    """Scale factors ``d/dx mode_k = scale_k * flipped_mode_k`` for stored modes."""
    k = modes(parity, m)
    s = k * np.pi / L * norms(parity, k, L) / norms(flip(parity), k, L)
    return s if parity == "S" else -s


def differentiate(coef: np.ndarray, parity: str, L: float, axis: int = 0) -> np.ndarray:
    """Differentiate coefficient arrays along ``axis``; the result has flipped parity."""
    coef = np.moveaxis(coef, axis, 0)
    if parity == "S":
        m = coef.shape[0]
        k = np.arange(1, m + 1)
        sc = (k * np.pi / L) * norms("S", k, L) / norms("C", k, L)
        out = np.zeros((m + 1,) + coef.shape[1:], dtype=coef.dtype)
        out[1:] = coef * sc.reshape((-1,) + (1,) * (coef.ndim - 1))
    else:
        m = coef.shape[0] - 1
        k = np.arange(1, m + 1)
        sc = -(k * np.pi / L) * norms("C", k, L) / norms("S", k, L)
        out = coef[1:] * sc.reshape((-1,) + (1,) * (coef.ndim - 1))
    return np.moveaxis(out, 0, axis)


def gram(tpar: str, tk, spar: str, sk, L: float) -> np.ndarray:
    """Closed-form ``G[j, l] = int_0^L t_j(x) s_l(x) dx``."""
    tk = np.asarray(tk)
    sk = np.asarray(sk)
    if tpar == spar:
        return (tk[:, None] == sk[None, :]).astype(float)
    if tpar == "S":
        j, k = tk[:, None].astype(float), sk[None, :].astype(float)
        nrm = norms("S", tk, L)[:, None] * norms("C", sk, L)[None, :]
    else:
        j, k = sk[None, :].astype(float), tk[:, None].astype(float)
        nrm = norms("C", tk, L)[:, None] * norms("S", sk, L)[None, :]
    odd = ((j + k) % 2 == 1)
    den = np.where(odd, j * j - k * k, 1.0)
    val = np.where(odd, 2.0 * j / den, 0.0)
    return nrm * (L / np.pi) * val


def grid(N: int, L: float) -> np.ndarray:
    """Midpoint grid ``x_n = (n + 1/2) L / N``."""
    return (np.arange(N) + 0.5) * L / N


@lru_cache(maxsize=None)
def synthesis(parity: str, m: int, N: int, L: float) -> np.ndarray:
    """Values on the midpoint grid of the stored modes, shape ``(N, len)``."""
    return evaluate(parity, modes(parity, m), grid(N, L), L)


@lru_cache(maxsize=None)
def natural_analysis(parity: str, N: int, L: float) -> np.ndarray:
    """Exact coefficients of grid samples in the natural band of ``parity``.

    For ``'C'`` the band is ``k = 0..N-1``; for ``'S'`` it is ``k = 1..N``.
    """
    k = np.arange(N) if parity == "C" else np.arange(1, N + 1)
    A = evaluate(parity, k, grid(N, L), L).T * (L / N)
    if parity == "S":
        A[-1] *= 0.5
    return A


@lru_cache(maxsize=None)
def projection(tpar: str, m: int, natpar: str, N: int, L: float) -> np.ndarray:
    """Map grid samples of a ``natpar`` band-limited function to ``tpar`` coefficients.

    Exact when the sampled function lies in the natural band of the grid.
    """
    A = natural_analysis(natpar, N, L)
    tk = modes(tpar, m)
    if tpar == natpar:
        nk = np.arange(N) if natpar == "C" else np.arange(1, N + 1)
        if tk.max(initial=0) > nk.max():
            raise ValueError("grid too coarse for requested band")
        return A[tk - nk[0]]
    nk = np.arange(N) if natpar == "C" else np.arange(1, N + 1)
    return gram(tpar, tk, natpar, nk, L) @ A


def forward(samples: np.ndarray, parity: str, m: int, L: float, axis: int = 0) -> np.ndarray:
    """Fast transform of midpoint samples to stored coefficients along ``axis``."""
    N = samples.shape[axis]
    if parity == "C":
        if m + 1 > N:
            raise ValueError("grid/basis size mismatch")
        y = sfft.dct(samples, type=2, axis=axis) * (L / N)
        y = np.moveaxis(y, axis, 0)[: m + 1]
        k = np.arange(m + 1)
        y = y * (0.5 * norms("C", k, L)).reshape((-1,) + (1,) * (y.ndim - 1))
    else:
        if m > N:
            raise ValueError("grid/basis size mismatch")
        y = sfft.dst(samples, type=2, axis=axis) * (L / N)
        y = np.moveaxis(y, axis, 0)[:m]
        k = np.arange(1, m + 1)
        sc = 0.5 * norms("S", k, L)
        if m == N:
            sc[-1] *= 0.5
        y = y * sc.reshape((-1,) + (1,) * (y.ndim - 1))
    return np.moveaxis(y, 0, axis)


def inverse(coef: np.ndarray, parity: str, N: int, L: float, axis: int = 0) -> np.ndarray:
    """Fast synthesis of stored coefficients on an ``N``-point midpoint grid."""
    c = np.moveaxis(coef, axis, 0)
    m = c.shape[0] if parity == "S" else c.shape[0] - 1
    pad = np.zeros((N,) + c.shape[1:])
    if parity == "C":
        if m + 1 > N:
            raise ValueError("grid/basis size mismatch")
        k = np.arange(m + 1)
        pad[: m + 1] = c * norms("C", k, L).reshape((-1,) + (1,) * (c.ndim - 1))
        pad[0] *= 2.0
        out = sfft.dct(pad, type=3, axis=0) * 0.5
    else:
        if m > N:
            raise ValueError("grid/basis size mismatch")
        k = np.arange(1, m + 1)
        pad[:m] = c * norms("S", k, L).reshape((-1,) + (1,) * (c.ndim - 1))
        if m == N:
            pad[-1] *= 2.0
        out = sfft.dst(pad, type=3, axis=0) * 0.5
    return np.moveaxis(out, 0, axis)


def apply_axes(tensor: np.ndarray, mats, offset: int = 0) -> np.ndarray:
    """Apply matrix ``mats[a]`` along axis ``offset + a`` (``None`` skips)."""
    for a, M in enumerate(mats):
        if M is None:
            continue
        ax = offset + a
        tensor = np.moveaxis(np.tensordot(M, tensor, axes=([1], [ax])), 0, ax)
    return tensor
