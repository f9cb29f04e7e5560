import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicelab.errors import ConfigError
from slicelab.grid import (COS, SIN, Geometry, dealias, differentiate,
                           derivative_multi, from_modes, gaussian_lowpass,
                           integrate, make_grid, scalar_field, to_modes)
from slicelab.norms import l2
from slicelab.state import random_scalar_values

PI = np.pi
seeds = st.integers(min_value=0, max_value=2**31 - 1)


def random_field(grid, seed, max_mode=8, basis=None):
    rng = np.random.default_rng(seed)
    if grid.geometry is Geometry.SQUARE and basis is None:
        basis = ("sin", "sin")
    vals = random_scalar_values(grid, rng, max_mode, 1.0, basis=basis)
    return scalar_field(grid, vals, basis)


# -- construction -----------------------------------------------------------

def test_torus_wavenumbers():
    g = make_grid("torus", 64, 64, 2 * PI, 2 * PI)
    assert set(g.modes_x) == set(range(-32, 32))
    assert np.allclose(np.sort(g.kx), np.arange(-32, 32))


def test_square_wavenumbers():
    g = make_grid("square", 32, 32, PI, PI)
    assert list(g.modes_x) == list(range(1, 33))
    assert np.allclose(g.kx_sin, np.arange(1, 33))


@pytest.mark.parametrize("nx,nz", [(7, 64), (64, 48), (4, 64)])
def test_non_power_of_two_rejected(nx, nz):
    with pytest.raises(ConfigError):
        make_grid("torus", nx, nz, 2 * PI, 2 * PI)


def test_nonpositive_extent_rejected():
    with pytest.raises(ConfigError):
        make_grid("square", 32, 32, -1.0, PI)


# -- transforms -------------------------------------------------------------

@given(seeds)
def test_round_trip_torus(seed):
    g = make_grid("torus", 32, 32, 2 * PI, 2 * PI)
    vals = np.random.default_rng(seed).standard_normal((32, 32))
    back = from_modes(g, to_modes(g, vals, None), None)
    assert np.max(np.abs(back - vals)) <= 1e-12 * max(1.0, np.max(np.abs(vals)))


@given(seeds, st.sampled_from([(SIN, SIN), (SIN, COS), (COS, SIN), (COS, COS)]))
def test_round_trip_square(seed, basis):
    g = make_grid("square", 32, 32, PI, PI)
    vals = np.random.default_rng(seed).standard_normal((32, 32))
    back = from_modes(g, to_modes(g, vals, basis), basis)
    assert np.max(np.abs(back - vals)) <= 1e-12 * max(1.0, np.max(np.abs(vals)))


# -- derivatives ------------------------------------------------------------

def test_derivative_sin_torus(tor64):
    f = scalar_field(tor64, np.sin(tor64.x_mesh))
    df = differentiate(f, "x")
    assert np.max(np.abs(df.values - np.cos(tor64.x_mesh))) <= 1e-12


def test_derivative_constant(any_grid):
    basis = ("cos", "cos") if any_grid.geometry is Geometry.SQUARE else None
    f = scalar_field(any_grid, np.full((any_grid.nz, any_grid.nx), 3.7), basis)
    for ax in ("x", "z"):
        assert np.max(np.abs(differentiate(f, ax).values)) <= 1e-12


def test_derivative_mixed_torus(tor64):
    X, Z = tor64.x_mesh, tor64.z_mesh
    f = scalar_field(tor64, np.sin(2 * X) * np.cos(3 * Z))
    df = differentiate(f, "z")
    assert np.max(np.abs(df.values + 3 * np.sin(2 * X) * np.sin(3 * Z))) <= 1e-11


def test_derivative_square_parity_flip(sq64):
    X, Z = sq64.x_mesh, sq64.z_mesh
    f = scalar_field(sq64, np.sin(2 * X) * np.sin(3 * Z), (SIN, SIN))
    dx = differentiate(f, "x")
    assert dx.basis == (COS, SIN)
    assert np.max(np.abs(dx.values - 2 * np.cos(2 * X) * np.sin(3 * Z))) <= 1e-11


def test_derivative_multi_square(sq64):
    X, Z = sq64.x_mesh, sq64.z_mesh
    f = scalar_field(sq64, np.sin(2 * X) * np.sin(3 * Z), (SIN, SIN))
    d = derivative_multi(f, 1, 2)
    want = 2 * np.cos(2 * X) * (-9) * np.sin(3 * Z)
    assert np.max(np.abs(d.values - want)) <= 1e-10


def test_invalid_axis(tor64):
    f = scalar_field(tor64, np.zeros((64, 64)))
    with pytest.raises(ConfigError):
        differentiate(f, "y")


# -- dealias ----------------------------------------------------------------

def test_dealias_keeps_low_modes(any_grid):
    f = random_field(any_grid, 5, max_mode=any_grid.nx // 3 - 1)
    d = dealias(f)
    assert np.max(np.abs(d.values - f.values)) <= 1e-14 * max(1.0, np.max(np.abs(f.values)))


def test_dealias_kills_nyquist(tor64):
    coef = np.zeros((64, 64), dtype=complex)
    coef[0, 32] = 1.0  # mode k_x = nx/2
    f = scalar_field(tor64, np.real(np.fft.ifft2(coef) * 64 * 64))
    assert np.max(np.abs(dealias(f).values)) <= 1e-13


@given(seeds)
def test_dealias_idempotent(seed):
    g = make_grid("torus", 32, 32, 2 * PI, 2 * PI)
    f = scalar_field(g, np.random.default_rng(seed).standard_normal((32, 32)))
    once = dealias(f)
    twice = dealias(once)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-13


@given(seeds)
def test_dealias_commutes_with_derivative(seed):
    g = make_grid("square", 32, 32, PI, PI)
    f = random_field(g, seed, max_mode=14)
    a = dealias(differentiate(f, "x"))
    b = differentiate(dealias(f), "x")
    assert l2(scalar_field(g, a.values - b.values, a.basis)) <= 1e-12 * max(1.0, l2(f))


# -- smoothing and quadrature -----------------------------------------------

def test_gaussian_lowpass_single_mode(tor64):
    f = scalar_field(tor64, np.sin(tor64.x_mesh))
    for j in (2, 8):
        m = gaussian_lowpass(f, j)
        want = np.exp(-1.0 / j**2) * np.sin(tor64.x_mesh)
        assert np.max(np.abs(m.values - want)) <= 1e-13


def test_integrate_sin_squared(tor64):
    val = integrate(tor64, np.sin(tor64.x_mesh) ** 2)
    assert abs(val - 2 * PI**2) <= 1e-10


def test_parseval_torus(tor64):
    f = random_field(tor64, 11)
    coef = to_modes(tor64, f.values, None)
    phys = integrate(tor64, f.values**2)
    spec = np.sum(np.abs(coef) ** 2) / (64 * 64) * tor64.cell_area
    assert abs(phys - spec) <= 1e-10 * max(1.0, phys)
