import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlacoustics import trig
from nlacoustics.basis import (BasisKind, BoxDomain, build_basis, eval_mode, forward_transform,
                               inverse_transform, midpoint_points)

PI = np.pi
SQ = BoxDomain.cube(2)


def test_dirichlet_cutoff2_eigenvalues():
    b = build_basis(SQ, BasisKind("dirichlet"), 2)
    assert b.size == 4
    assert np.allclose(b.eigenvalues, [2, 5, 5, 8])
    assert [m.k for m in b.modes][:3] == [(1, 1), (1, 2), (2, 1)]


def test_neumann_excludes_constant():
    b = build_basis(SQ, BasisKind("neumann"), 1)
    assert sorted(m.k for m in b.modes) == [(0, 1), (1, 0), (1, 1)]
    assert np.allclose(b.eigenvalues, [1, 1, 2])


def test_freeslip_component():
    b = build_basis(BoxDomain.cube(3), BasisKind("freeslip", axis=0), 1)
    assert all(k[0] == 1 for k in b.kidx)
    assert {tuple(k[1:]) for k in b.kidx} == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert b.eigenvalues[b.index_of((1, 0, 0))] == 1.0


def test_eval_mode_values():
    d = build_basis(SQ, BasisKind("dirichlet"), 2)
    n = build_basis(SQ, BasisKind("neumann"), 2)
    assert eval_mode(d, (1, 1), [PI / 2, PI / 2]) == pytest.approx(2 / PI)
    assert abs(eval_mode(d, (1, 1), [0.0, 0.7])) < 1e-15
    assert eval_mode(n, (1, 0), [0.0, 0.4]) == pytest.approx(np.sqrt(2) / PI)


def test_eval_outside_domain():
    d = build_basis(SQ, BasisKind("dirichlet"), 2)
    with pytest.raises(ValueError):
        eval_mode(d, (1, 1), [4.0, 1.0])


def test_invalid_cutoff():
    with pytest.raises(ValueError):
        build_basis(SQ, BasisKind("dirichlet"), 0)


@pytest.mark.parametrize("method", ["fft", "direct"])
def test_forward_unit_mode_and_zero(method):
    b = build_basis(SQ, BasisKind("dirichlet"), 4)
    pts = midpoint_points(SQ, (9, 9))
    c = forward_transform(eval_mode(b, (1, 1), pts), b, method)
    e = np.zeros(b.size)
    e[b.index_of((1, 1))] = 1
    assert np.abs(c - e).max() < 1e-13
    assert not forward_transform(np.zeros((9, 9)), b, method).any()


def test_forward_two_term_field():
    b = build_basis(SQ, BasisKind("dirichlet"), 4)
    pts = midpoint_points(SQ, (9, 9))
    x, y = pts[..., 0], pts[..., 1]
    c = forward_transform(np.sin(x) * np.sin(2 * y) + 0.5 * np.sin(3 * x) * np.sin(y), b)
    assert c[b.index_of((1, 2))] == pytest.approx(PI / 2)
    assert c[b.index_of((3, 1))] == pytest.approx(PI / 4)
    mask = np.ones(b.size, bool)
    mask[[b.index_of((1, 2)), b.index_of((3, 1))]] = False
    assert np.abs(c[mask]).max() <= 1e-12


def test_grid_size_mismatch():
    b = build_basis(SQ, BasisKind("dirichlet"), 4)
    with pytest.raises(ValueError, match="mismatch"):
        forward_transform(np.zeros((3, 3)), b)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["dirichlet", "neumann", "fs0", "fs1"]), st.integers(1, 7),
       st.integers(0, 2**31 - 1))
def test_roundtrip(tag, m, seed):
    kind = BasisKind("freeslip", int(tag[-1])) if tag.startswith("fs") else BasisKind(tag)
    dom = BoxDomain((PI, 2.0))
    b = build_basis(dom, kind, m)
    c = np.random.default_rng(seed).standard_normal(b.size)
    for method in ("fft", "direct"):
        s = inverse_transform(c, b, method=method)
        assert np.abs(forward_transform(s, b, method) - c).max() < 1e-12


@pytest.mark.parametrize("par", ["S", "C"])
def test_1d_orthonormality(par):
    from nlacoustics.quadrature import gauss
    x, w = gauss(60, 2.5)
    V = trig.evaluate(par, trig.modes(par, 8), x, 2.5)
    assert np.abs((V * w[:, None]).T @ V - np.eye(V.shape[1])).max() < 1e-13


def test_cross_gram_closed_form():
    from nlacoustics.quadrature import gauss
    x, w = gauss(80, PI)
    kS, kC = trig.modes("S", 6), trig.modes("C", 6)
    ref = (trig.evaluate("C", kC, x, PI) * w[:, None]).T @ trig.evaluate("S", kS, x, PI)
    assert np.abs(trig.gram("C", kC, "S", kS, PI) - ref).max() < 1e-13
