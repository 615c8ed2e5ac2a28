import numpy as np
import pytest

from nematic.coefficients import LeslieCoefficients, small_data_functional
from nematic.grid import Field, PeriodicGrid
from nematic.initial import InitialSpec, PresetError, make_initial_data, random_pair

PARODI = LeslieCoefficients(1.0, -1.5, 0.5, 2.0, 1.0, 0.0, eta=0.5)


def test_equilibrium():
    g = PeriodicGrid(2, 8)
    s = make_initial_data("equilibrium", g)
    assert np.max(np.abs(s.u.values)) == 0
    assert np.allclose(s.d.values[0], 1) and np.allclose(s.d.values[1:], 0)
    assert np.allclose(s.rho.values, 1)


def test_director_wave_and_shear():
    g = PeriodicGrid(2, 16)
    x, y = g.mesh()
    s = make_initial_data("director-wave+shear-wave", g, spec=InitialSpec(shear_amplitude=0.7))
    assert np.max(np.abs(s.d.values[0] - np.cos(2 * np.pi * x))) < 1e-14
    assert np.max(np.abs(s.d.values[1] - np.sin(2 * np.pi * x))) < 1e-14
    assert np.max(np.abs(s.u.values[0] - 0.7 * np.sin(2 * np.pi * y))) < 1e-14
    assert np.max(np.abs(np.sum(s.d.values**2, axis=0) - 1)) < 1e-14


def test_density_modulation_within_bounds():
    g = PeriodicGrid(2, 16)
    spec = InitialSpec(rho_amplitude=0.15)
    s = make_initial_data("shear-wave", g, spec=spec, M1=0.8, M2=1.2)
    rho = s.rho.values
    assert rho.min() == pytest.approx(0.85) and rho.max() == pytest.approx(1.15)
    with pytest.raises(PresetError, match="density range"):
        make_initial_data("shear-wave", g, spec=spec, M1=0.9, M2=1.1)


@pytest.mark.parametrize("dim", [2, 3])
def test_random_smooth_is_admissible(dim):
    g = PeriodicGrid(dim, 8 if dim == 3 else 16)
    s = make_initial_data("random-smooth", g, seed=4, spec=InitialSpec(kmax=3), M1=0.8, M2=1.2)
    assert np.max(np.abs(g.ifft(g.div_hat(s.u_hat)))) < 1e-13
    rho = s.rho.values
    assert 0.8 <= rho.min() and rho.max() <= 1.2
    assert s.rho_hat[(0,) * dim].real == pytest.approx(1.0)
    assert np.max(np.abs(s.u_hat[(slice(None),) + (0,) * dim])) == 0


def test_random_data_shared_across_resolutions():
    spec = InitialSpec(kmax=3)
    a = make_initial_data("random-smooth", PeriodicGrid(2, 16), seed=1, spec=spec)
    b = make_initial_data("random-smooth", PeriodicGrid(2, 32), seed=1, spec=spec)
    c = make_initial_data("random-smooth", PeriodicGrid(2, 16), seed=2, spec=spec)
    # the box spectrum fits on both grids, so the finer state resamples onto the coarser one exactly
    back = b.resample(a.grid)
    assert np.max(np.abs(back.d_hat - a.d_hat)) < 1e-14
    assert np.max(np.abs(back.u_hat - a.u_hat)) < 1e-14
    assert np.max(np.abs(c.d_hat - a.d_hat)) > 1e-3


@pytest.mark.parametrize("eps", [1e-3, 0.05])
def test_small_data_hits_target(eps):
    g = PeriodicGrid(2, 16)
    s = make_initial_data("small-data", g, seed=3, spec=InitialSpec(epsilon=eps, kmax=3), M1=0.9, M2=1.1,
                          coefficients=PARODI)
    val = small_data_functional(PARODI, 1.1, Field(g, s.rho_hat, True), Field(g, s.u_hat, True),
                                Field(g, s.d_hat, True))
    assert val == pytest.approx(eps, rel=1e-10)


def test_preset_errors():
    g = PeriodicGrid(2, 8)
    for bad in ("vortex", "", "small-data+shear-wave"):
        with pytest.raises(PresetError):
            make_initial_data(bad, g)
    with pytest.raises(PresetError):
        make_initial_data("equilibrium", g, M1=0.0)
    with pytest.raises(PresetError):
        make_initial_data("small-data", g, spec=InitialSpec(epsilon=0.0))
    with pytest.raises(PresetError):
        make_initial_data("random-smooth", g, spec=InitialSpec(kmax=0))


def test_random_pair_shape_and_scale():
    g = PeriodicGrid(2, 16)
    u, d = random_pair(g, np.random.default_rng(0), 2, amplitude=0.0)
    assert u.shape == (2, 16, 16) and d.shape == (3, 16, 16)
    assert np.max(np.abs(u)) == 0
    assert np.max(np.abs(d - d.mean(axis=(1, 2), keepdims=True))) < 1e-14
