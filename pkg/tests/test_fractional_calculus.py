import numpy as np
import pytest

from nlacoustics.basis import BoxDomain
from nlacoustics.fields import FieldSpace, SpectralField, Trajectory, time_grid
from nlacoustics.fractional import (apply_frac_power, embedding_constant_exact,
                                    embedding_constant_probe, frac_norm, time_embedding_exact,
                                    time_embedding_probe, w_norm, x_norm, y_norm)

SP = FieldSpace(BoxDomain.cube(2), "DirDir", 4)


def unit(comp, k, space=SP):
    c = space.zeros()
    c[space.index(comp, k)] = 1.0
    return c


def test_frac_power_examples():
    b = SP.bases[0]
    f = SpectralField(b, unit(0, (1, 1))[SP.slice(0)])
    assert apply_frac_power(f, 0.5, 1.0).coefficients[0] == pytest.approx(np.sqrt(2))
    g = SpectralField(b, np.random.default_rng(0).standard_normal(b.size))
    assert np.array_equal(apply_frac_power(g, 0.0, 1.0).coefficients, g.coefficients)
    back = apply_frac_power(apply_frac_power(g, 0.7, 2.0), -0.7, 2.0)
    assert np.abs(back.coefficients - g.coefficients).max() < 1e-12


def test_frac_power_rejects_bad_coeff():
    f = SpectralField(SP.bases[0], np.ones(SP.bases[0].size))
    with pytest.raises(ValueError):
        apply_frac_power(f, 0.5, 0.0)


def test_frac_norm_examples():
    c = unit(0, (1, 1))
    assert frac_norm(c, 1.0, SP) == pytest.approx(2.0)
    assert frac_norm(c, -0.5, SP) == pytest.approx(2 ** -0.5)


def test_x_norm_constant_and_zero():
    times = time_grid(1.0, 1e-2)
    c = unit(0, (1, 1)) / 2.0  # lambda c = 1
    tr = Trajectory(SP, times, np.tile(c, (len(times), 1)), np.zeros((len(times), SP.n_dof)))
    assert x_norm(tr, 1.0) == pytest.approx(1.0)
    assert x_norm(Trajectory.zeros(SP, times), 1.0) == 0.0


def test_x_norm_decay_closed_form():
    # lambda = c = 1: both parts contribute (1 - e^-2)/2
    sp = FieldSpace(BoxDomain.cube(2), "NeuDir", 3)
    times = time_grid(1.0, 1e-4)
    c = unit(0, (1, 0), sp)
    e = np.exp(-times)[:, None]
    tr = Trajectory(sp, times, e * c, -e * c)
    assert x_norm(tr, 1.0) ** 2 == pytest.approx(1 - np.exp(-2), rel=1e-7)
    # lambda = 2, c = 1/2: the derivative part is a quarter of the spatial part
    c = unit(0, (1, 1)) / 2.0
    tr = Trajectory(SP, times, e * c, -e * c)
    assert x_norm(tr, 1.0) ** 2 == pytest.approx(1.25 * (1 - np.exp(-2)) / 2, rel=1e-7)


def test_y_w_norms():
    times = time_grid(1.0, 0.5)
    f = np.tile(unit(0, (1, 1)), (3, 1))
    assert y_norm(SP, times, f, 1.0) == pytest.approx(1.0)
    assert y_norm(SP, times, f, 0.5) == pytest.approx(2 ** -0.25)
    assert w_norm(SP, unit(0, (1, 1)), 1.0) == pytest.approx(np.sqrt(2))


def test_embedding_constants():
    assert embedding_constant_exact(SP, 1.0, 0.0) == pytest.approx(0.5)
    assert embedding_constant_probe(SP, 0.6, 0.6, samples=10) == pytest.approx(1.0)
    p = embedding_constant_probe(SP, 1.0, 0.0, samples=50, include_modes=True)
    assert p <= 0.5 + 1e-12 and p == pytest.approx(0.5)
    rnd = embedding_constant_probe(SP, 1.0, 0.0, samples=50, seed=3)
    assert rnd <= 0.5 + 1e-12
    assert rnd == embedding_constant_probe(SP, 1.0, 0.0, samples=50, seed=3)


def test_time_embedding():
    exact = time_embedding_exact(SP, 1.0)
    assert exact == pytest.approx(np.sqrt(1 / np.tanh(2.0)))
    probe = time_embedding_probe(SP, 1.0, 1.0, samples=20)
    assert probe <= exact * (1 + 1e-3)
    assert probe == pytest.approx(exact, rel=1e-3)
