"""Solution state, physical parameters, tendencies, and initial data.

The state triple is (u_S, u_T, theta_S): slice-plane velocity, transverse
velocity, and the potential-temperature slice component, all sharing one
grid, plus the model time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .grid import (Grid, Geometry, ScalarField, VectorField, VX_BASIS,
                   VZ_BASIS, from_modes, scalar_field, vector_field,
                   zero_scalar, zero_vector)


@dataclass(frozen=True)
class Params:
    """Physical constants: Coriolis f, gravity g, reference temperature
    theta0, transverse temperature gradient s, noise amplitude alpha.

    Defaults are the unit parameters of the model's standard simplification.
    """

    f: float = 1.0
    g: float = 1.0
    theta0: float = 1.0
    s: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        vals = (self.f, self.g, self.theta0, self.s, self.alpha)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"non-finite parameter in {vals}")
        if self.theta0 <= 0:
            raise ConfigError(f"theta0 must be positive, got {self.theta0}")

    @property
    def buoyancy(self) -> float:
        return self.g / self.theta0


@dataclass(frozen=True)
class SimState:
    t: float
    u_s: VectorField
    u_t: ScalarField
    theta_s: ScalarField

    @property
    def grid(self) -> Grid:
        return self.u_s.grid


@dataclass(frozen=True)
class Tendency:
    du_s: VectorField
    du_t: ScalarField
    dtheta_s: ScalarField


def scalar_bases(grid: Grid):
    """Square parity classes for (u_T, theta_S); None pair on the torus.

    The f-coupling (du_x gains f u_T, du_T loses f u_x) forces u_T into the
    x-velocity class sin(x)cos(z); the buoyancy coupling (du_z gains
    (g/theta0) theta_S) forces theta_S into the z-velocity class
    cos(x)sin(z).  With these the vorticity equation closes in sin.sin.
    """
    if grid.geometry is Geometry.SQUARE:
        return VX_BASIS, VZ_BASIS
    return None, None


def make_state(grid: Grid, t, ux, uz, ut, theta) -> SimState:
    """Wrap raw value arrays in a state with the canonical square bases."""
    ut_basis, th_basis = scalar_bases(grid)
    return SimState(float(t), vector_field(grid, ux, uz),
                    scalar_field(grid, ut, ut_basis),
                    scalar_field(grid, theta, th_basis))


def zero_state(grid: Grid, t: float = 0.0) -> SimState:
    ut_basis, th_basis = scalar_bases(grid)
    return SimState(float(t), zero_vector(grid), zero_scalar(grid, ut_basis),
                    zero_scalar(grid, th_basis))


def state_arrays(state: SimState):
    """The four value arrays (ux, uz, u_t, theta_s), in checkpoint order."""
    return (state.u_s.x.values, state.u_s.z.values,
            state.u_t.values, state.theta_s.values)


def tendency_arrays(tend: Tendency):
    return (tend.du_s.x.values, tend.du_s.z.values,
            tend.du_t.values, tend.dtheta_s.values)


def state_is_finite(state: SimState) -> bool:
    return all(np.isfinite(a).all() for a in state_arrays(state))


def scale_state(state: SimState, factor: float) -> SimState:
    ux, uz, ut, th = state_arrays(state)
    return make_state(state.grid, state.t, factor * ux, factor * uz,
                      factor * ut, factor * th)


def states_close(a: SimState, b: SimState, tol: float) -> bool:
    return all(np.max(np.abs(x - y)) <= tol
               for x, y in zip(state_arrays(a), state_arrays(b)))


def state_max_abs_diff(a: SimState, b: SimState) -> float:
    return max(float(np.max(np.abs(x - y))) if x.size else 0.0
               for x, y in zip(state_arrays(a), state_arrays(b)))


def with_time(state: SimState, t: float) -> SimState:
    return replace(state, t=float(t))


# ---------------------------------------------------------------------------
# manufactured initial data
# ---------------------------------------------------------------------------

def random_scalar_values(grid: Grid, rng: np.random.Generator, max_mode: int,
                         amplitude: float, basis=None) -> np.ndarray:
    """Random smooth field supported on modes with |m| <= max_mode,
    normalised to the requested max amplitude.  Mean-free on the torus."""
    if grid.geometry is Geometry.TORUS:
        coef = np.zeros((grid.nz, grid.nx), dtype=complex)
        mx = grid.modes_x
        mz = grid.modes_z
        box = ((np.abs(mz)[:, None] <= max_mode)
               & (np.abs(mx)[None, :] <= max_mode))
        box[0, 0] = False  # mean-free
        coef[box] = rng.standard_normal(box.sum()) + 1j * rng.standard_normal(box.sum())
        vals = np.real(np.fft.ifft2(coef))
    else:
        if basis is None:
            basis = ("sin", "sin")
        coef = np.zeros((grid.nz, grid.nx))
        keep_x = (np.arange(grid.nx) + (1 if basis[0] == "sin" else 0)) <= max_mode
        keep_z = (np.arange(grid.nz) + (1 if basis[1] == "sin" else 0)) <= max_mode
        box = keep_z[:, None] & keep_x[None, :]
        coef[box] = rng.standard_normal(box.sum())
        vals = from_modes(grid, coef, basis)
    peak = np.max(np.abs(vals))
    if peak > 0:
        vals = vals * (amplitude / peak)
    return vals


def random_state(grid: Grid, seed: int, max_mode: int = 3,
                 amplitude: float = 0.5, t: float = 0.0) -> SimState:
    """Random band-limited state: u_S = grad-perp of a random streamfunction
    (divergence-free and wall-tangent by construction), random u_T, theta_S."""
    from .grid import derivative_multi  # local import keeps module load light

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    psi_vals = random_scalar_values(grid, rng, max_mode, 1.0)
    psi = scalar_field(grid, psi_vals)
    ux = -derivative_multi(psi, 0, 1).values
    uz = derivative_multi(psi, 1, 0).values
    speed = np.max(np.hypot(ux, uz))
    if speed > 0:
        ux = ux * (amplitude / speed)
        uz = uz * (amplitude / speed)
    ut_basis, th_basis = scalar_bases(grid)
    ut = random_scalar_values(grid, rng, max_mode, amplitude, basis=ut_basis)
    th = random_scalar_values(grid, rng, max_mode, amplitude, basis=th_basis)
    return make_state(grid, t, ux, uz, ut, th)
