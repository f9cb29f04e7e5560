"""Slice-model tendencies and explicit time stepping.

The deterministic system for (u_S, u_T, theta_S) with Leray projector P:

    du_S/dt     = -P[(u_S.grad)u_S] + P[f u_T xhat] + P[(g/theta0) theta_S zhat]
    du_T/dt     = -(u_S.grad)u_T - f u_S.xhat - (g/theta0) z s
    dtheta_S/dt = -(u_S.grad)theta_S - u_T s

All advection products are dealiased by the 2/3 rule, which doubles as the
finite-mode Galerkin truncation of the truncated system.  The truncated
tendency multiplies each advection term by the smooth cutoff of the matching
running norm; linear couplings are never truncated.

The internal RHS core accepts per-equation advection scales and a source
scale so the truncated and exponentially-transformed systems share one code
path with the plain one; with all scales at 1.0 the float operation sequence
is identical, which the bit-equality contracts of the steppers rely on.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, DivergedError
from .grid import (Geometry, Grid, ScalarField, VX_BASIS, VZ_BASIS,
                   axis_derivative_modes, dealias_values, from_modes,
                   gaussian_lowpass, scalar_field, to_modes, vector_field)
from .incompressible import project_values, velocity_from_vorticity
from .norms import W1INF, norm
from .state import (Params, SimState, Tendency, make_state, scalar_bases,
                    state_arrays, state_is_finite, tendency_arrays)


# ---------------------------------------------------------------------------
# tendencies
# ---------------------------------------------------------------------------

def _state_bases(grid: Grid):
    """Bases of (u_x, u_z, u_T, theta_S) value arrays."""
    if grid.geometry is Geometry.SQUARE:
        ut_basis, th_basis = scalar_bases(grid)
        return VX_BASIS, VZ_BASIS, ut_basis, th_basis
    return None, None, None, None


def _advect(grid: Grid, ux, uz, coef, basis):
    """(u.grad) of the field with raw coefficients `coef`, dealiased.

    Structural advection preserves the advected field's parity class, so
    the product is transformed back in `basis` itself.
    """
    cx, bx = axis_derivative_modes(grid, coef, basis, "x")
    cz, bz = axis_derivative_modes(grid, coef, basis, "z")
    prod = ux * from_modes(grid, cx, bx) + uz * from_modes(grid, cz, bz)
    return dealias_values(grid, prod, basis)


def _rhs_arrays(grid: Grid, params: Params, ux, uz, ut, th,
                adv_us: float = 1.0, adv_ut: float = 1.0,
                adv_th: float = 1.0, source_scale: float = 1.0):
    """Tendency value arrays (dux, duz, dut, dth).

    The scales multiply unconditionally: callers with scale 1.0 get the
    bitwise-plain tendency.
    """
    bx, bz, bt, bth = _state_bases(grid)
    cux = to_modes(grid, ux, bx)
    cuz = to_modes(grid, uz, bz)
    cut = to_modes(grid, ut, bt)
    cth = to_modes(grid, th, bth)

    adv_x = _advect(grid, ux, uz, cux, bx)
    adv_z = _advect(grid, ux, uz, cuz, bz)
    adv_t = _advect(grid, ux, uz, cut, bt)
    adv_s = _advect(grid, ux, uz, cth, bth)

    buoy = params.buoyancy
    rx = params.f * ut - adv_us * adv_x
    rz = buoy * th - adv_us * adv_z
    dux, duz = project_values(grid, rx, rz)

    dut = -adv_ut * adv_t - params.f * ux \
        - (source_scale * buoy * params.s) * grid.z_weight
    dth = -adv_th * adv_s - params.s * ut
    return dux, duz, dut, dth


def _wrap_tendency(grid: Grid, arrays) -> Tendency:
    dux, duz, dut, dth = arrays
    ut_basis, th_basis = scalar_bases(grid)
    return Tendency(vector_field(grid, dux, duz),
                    scalar_field(grid, dut, ut_basis),
                    scalar_field(grid, dth, th_basis))


def rhs_deterministic(state: SimState, params: Params) -> Tendency:
    """Drift tendency of the slice model."""
    if not state_is_finite(state):
        raise DivergedError(f"non-finite state at t={state.t:.6g}",
                            last_state=state)
    g = state.grid
    return _wrap_tendency(g, _rhs_arrays(g, params, *state_arrays(state)))


def cutoff(x: float, radius: float) -> float:
    """Smooth non-increasing truncation profile: 1 on [0, R], 0 on [2R, inf).

    The bump is the exponential blend h(2-y)/(h(2-y)+h(y-1)) with
    h(t) = exp(-1/t) on t > 0, evaluated at y = x/R; by symmetry the value
    at y = 1.5 is exactly one half.
    """
    if radius <= 0:
        raise ConfigError(f"cutoff radius must be positive, got {radius}")
    y = float(x) / float(radius)
    a = _bump(2.0 - y)
    if a == 0.0:
        return 0.0
    return a / (a + _bump(y - 1.0))


def _bump(t: float) -> float:
    if t <= 0.0:
        return 0.0
    return math.exp(-1.0 / t)


def cutoff_factors(state: SimState, radius: float):
    """The three advection cutoffs (u_S equation, u_T equation, theta_S
    equation), from W^{1,inf} norms; pair norms combine with max."""
    n_us = norm(state.u_s, W1INF)
    n_ut = norm(state.u_t, W1INF)
    n_th = norm(state.theta_s, W1INF)
    return (cutoff(n_us, radius),
            cutoff(max(n_us, n_ut), radius),
            cutoff(max(n_us, n_th), radius))


def rhs_truncated(state: SimState, params: Params, radius: float) -> Tendency:
    """Tendency with each advection term scaled by its running-norm cutoff.

    Inside the cutoff plateau every factor is exactly 1.0 and the result is
    bitwise the plain tendency; beyond twice the radius the advection terms
    are exactly zero and only linear couplings remain.
    """
    if not state_is_finite(state):
        raise DivergedError(f"non-finite state at t={state.t:.6g}",
                            last_state=state)
    c_us, c_ut, c_th = cutoff_factors(state, radius)
    g = state.grid
    arrays = _rhs_arrays(g, params, *state_arrays(state),
                         adv_us=c_us, adv_ut=c_ut, adv_th=c_th)
    return _wrap_tendency(g, arrays)


def rhs_vorticity(omega: ScalarField, u_t: ScalarField, theta_s: ScalarField,
                  params: Params):
    """Vorticity-form tendencies (domega, du_T, dtheta_S).

    u_S is recovered from omega by the Biot-Savart solve; the couplings are
    the curl of the primitive ones: domega = -(u.grad)omega - f d_z u_T
    + (g/theta0) d_x theta_S.
    """
    g = omega.grid
    u = velocity_from_vorticity(omega)
    ux, uz = u.x.values, u.z.values

    co = to_modes(g, omega.values, omega.basis)
    ct = to_modes(g, u_t.values, u_t.basis)
    cs = to_modes(g, theta_s.values, theta_s.basis)

    dz_ut, bz = axis_derivative_modes(g, ct, u_t.basis, "z")
    dx_th, bx = axis_derivative_modes(g, cs, theta_s.basis, "x")

    domega = (-_advect(g, ux, uz, co, omega.basis)
              - params.f * from_modes(g, dz_ut, bz)
              + params.buoyancy * from_modes(g, dx_th, bx))
    dut = (-_advect(g, ux, uz, ct, u_t.basis) - params.f * ux
           - params.buoyancy * params.s * g.z_weight)
    dth = -_advect(g, ux, uz, cs, theta_s.basis) - params.s * u_t.values

    return (scalar_field(g, domega, omega.basis),
            scalar_field(g, dut, u_t.basis),
            scalar_field(g, dth, theta_s.basis))


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------

def _axpy(y, k, c: float):
    return tuple(a + c * b for a, b in zip(y, k))


def _rk4_arrays(y, f, t: float, dt: float):
    """Classical RK4 stage combination over tuples of arrays.

    Shared verbatim by the deterministic and transformed steppers; any
    change here changes both bitwise.
    """
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, _axpy(y, k1, 0.5 * dt))
    k3 = f(t + 0.5 * dt, _axpy(y, k2, 0.5 * dt))
    k4 = f(t + dt, _axpy(y, k3, dt))
    return tuple(a + (dt / 6.0) * (b + 2.0 * (c + d) + e)
                 for a, b, c, d, e in zip(y, k1, k2, k3, k4))


def _finish_step(prev: SimState, arrays, t_new: float) -> SimState:
    g = prev.grid
    ux, uz, ut, th = arrays
    px, pz = project_values(g, ux, uz)
    new = make_state(g, t_new, px, pz, ut, th)
    if not state_is_finite(new):
        raise DivergedError(f"non-finite state after step to t={t_new:.6g}",
                            last_state=prev)
    return new


def _check_dt(dt: float):
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigError(f"time step must be positive and finite, got {dt}")


def _tendency_fn(grid: Grid, params: Params, rhs):
    def f(t, y):
        return tendency_arrays(rhs(make_state(grid, t, *y), params))
    return f


def step_rk4(state: SimState, params: Params, dt: float,
             rhs=rhs_deterministic) -> SimState:
    """One classical RK4 step; u_S re-projected afterwards."""
    _check_dt(dt)
    f = _tendency_fn(state.grid, params, rhs)
    y1 = _rk4_arrays(state_arrays(state), f, state.t, dt)
    return _finish_step(state, y1, state.t + dt)


def step_euler(state: SimState, params: Params, dt: float,
               rhs=rhs_deterministic) -> SimState:
    """One explicit Euler step (the drift half of Euler-Maruyama)."""
    _check_dt(dt)
    f = _tendency_fn(state.grid, params, rhs)
    y1 = _axpy(state_arrays(state), f(state.t, state_arrays(state)), dt)
    return _finish_step(state, y1, state.t + dt)


def step_rk4_vorticity(omega: ScalarField, u_t: ScalarField,
                       theta_s: ScalarField, params: Params, dt: float):
    """One RK4 step of the (omega, u_T, theta_S) triple.

    Exists to cross-check the primitive stepper: the two formulations solve
    the same flow through different discrete operators, so their
    trajectories agree only to discretization accuracy, not bitwise.
    """
    _check_dt(dt)
    g = omega.grid
    bases = (omega.basis, u_t.basis, theta_s.basis)

    def f(t, y):
        fields = [scalar_field(g, v, b) for v, b in zip(y, bases)]
        out = rhs_vorticity(*fields, params)
        return tuple(o.values for o in out)

    y0 = (omega.values, u_t.values, theta_s.values)
    y1 = _rk4_arrays(y0, f, 0.0, dt)
    if not all(np.isfinite(v).all() for v in y1):
        raise DivergedError("non-finite vorticity-form state after step",
                            last_state=None)
    return tuple(scalar_field(g, v, b) for v, b in zip(y1, bases))


def cfl_number(state: SimState, dt: float) -> float:
    """dt * max|u_S| / min grid spacing; above 0.5 is advisory trouble."""
    g = state.grid
    speed = float(np.max(np.hypot(state.u_s.x.values, state.u_s.z.values)))
    return dt * speed / min(g.lx / g.nx, g.lz / g.nz)


def mollify(state: SimState, j: float) -> SimState:
    """Scale every mode of every component by exp(-|k|^2/j^2); re-project."""
    if j < 1:
        raise ConfigError(f"mollifier level must be >= 1, got {j}")
    g = state.grid
    ux = gaussian_lowpass(state.u_s.x, j).values
    uz = gaussian_lowpass(state.u_s.z, j).values
    px, pz = project_values(g, ux, uz)
    return SimState(state.t, vector_field(g, px, pz),
                    gaussian_lowpass(state.u_t, j),
                    gaussian_lowpass(state.theta_s, j))
