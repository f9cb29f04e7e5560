"""Conservation diagnostics: energy, potential vorticity, generalized
enstrophy, material-loop circulation, and the BKM-type continuation bound.

Potential vorticity is evaluated in the expanded form

    q = s*omega - (d_x u_T + f) d_z theta_S + d_z u_T d_x theta_S,

algebraically identical to curl(s u_S - (u_T + f x) grad theta_S) (the mixed
second-derivative terms cancel) but free of the non-periodic factor f*x, so
one expression serves both geometries.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, LoopDomainError
from .grid import (Geometry, Grid, NEUMANN_BASIS, ScalarField, VectorField,
                   differentiate, integrate, scalar_field)
from .incompressible import curl
from .norms import ZKP_DEFAULT, l2, norm
from .state import Params, SimState, state_arrays


class EnergyAccountingWarning(UserWarning):
    """Torus energy with a non-mean-free theta_S: the z-weighted term is
    coordinate-dependent there."""


def energy(state: SimState, params: Params) -> float:
    """E = integral of (|u_S|^2 + u_T^2)/2 - (g/theta0) z theta_S."""
    g = state.grid
    ux, uz, ut, th = state_arrays(state)
    if g.geometry is Geometry.TORUS:
        mean = float(np.mean(th))
        scale = max(1.0, float(np.max(np.abs(th))))
        if abs(mean) > 1e-13 * scale:
            warnings.warn("torus energy with non-mean-free theta_S: the "
                          "z-weighted term depends on the coordinate origin",
                          EnergyAccountingWarning)
    dens = 0.5 * (ux * ux + uz * uz + ut * ut) \
        - params.buoyancy * g.z_weight * th
    return integrate(g, dens)


def potential_vorticity(state: SimState, params: Params) -> ScalarField:
    """q as above.  On the square the returned basis is cos.cos, the parity
    class of the s = 0 expression; values are exact for any s."""
    g = state.grid
    om = curl(state.u_s)
    dx_ut = differentiate(state.u_t, "x").values
    dz_ut = differentiate(state.u_t, "z").values
    dx_th = differentiate(state.theta_s, "x").values
    dz_th = differentiate(state.theta_s, "z").values
    q = params.s * om.values - (dx_ut + params.f) * dz_th + dz_ut * dx_th
    basis = NEUMANN_BASIS if g.geometry is Geometry.SQUARE else None
    return scalar_field(g, q, basis)


def generalized_enstrophy(state: SimState, params: Params, phi) -> float:
    """Quadrature of phi(q) for a pointwise-evaluable phi."""
    q = potential_vorticity(state, params)
    vals = np.asarray(phi(q.values), dtype=float)
    if vals.shape != q.values.shape:
        vals = np.vectorize(phi)(q.values).astype(float)
    return integrate(state.grid, vals)


def bkm_bound(state: SimState, params: Params, c2: float = 1.0) -> float:
    """C2 ||u_S||_L2 + C2 ||omega||_inf (1 + log+ (||u_S||_Zkp/||omega||_inf))."""
    if c2 <= 0:
        raise ConfigError(f"BKM constant must be positive, got {c2}")
    u_l2 = l2(state.u_s)
    om_inf = float(np.max(np.abs(curl(state.u_s).values)))
    if om_inf == 0.0:
        return c2 * u_l2
    ratio = norm(state.u_s, ZKP_DEFAULT) / om_inf
    return c2 * u_l2 + c2 * om_inf * (1.0 + max(0.0, math.log(ratio)))


# ---------------------------------------------------------------------------
# material loops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialLoop:
    """Closed polygon of material points, columns (x, z); the closing edge
    from the last point back to the first is implicit."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError(f"loop points must have shape (n, 2), "
                              f"got {pts.shape}")
        if pts.shape[0] < 16:
            raise ConfigError(f"a material loop needs at least 16 points, "
                              f"got {pts.shape[0]}")
        object.__setattr__(self, "points", pts)


def circle_loop(cx: float, cz: float, radius: float,
                n_points: int = 256) -> MaterialLoop:
    ang = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    return MaterialLoop(np.column_stack([cx + radius * np.cos(ang),
                                         cz + radius * np.sin(ang)]))


def _check_inside(grid: Grid, pts: np.ndarray, slack: float = 0.0):
    """On the square every point must lie in [0,Lx]x[0,Lz] (up to slack)."""
    if grid.geometry is not Geometry.SQUARE:
        return pts
    bad = ((pts[:, 0] < -slack) | (pts[:, 0] > grid.lx + slack)
           | (pts[:, 1] < -slack) | (pts[:, 1] > grid.lz + slack))
    if bad.any():
        i = int(np.argmax(bad))
        raise LoopDomainError("loop point left the domain", tuple(pts[i]))
    # tolerated overshoot is clamped back onto the wall
    out = np.clip(pts, [0.0, 0.0], [grid.lx, grid.lz])
    return out


def _interp_torus(grid: Grid, values: np.ndarray, pts: np.ndarray):
    hx = grid.lx / grid.nx
    hz = grid.lz / grid.nz
    fx = pts[:, 0] / hx
    fz = pts[:, 1] / hz
    ix = np.floor(fx).astype(int)
    iz = np.floor(fz).astype(int)
    tx = fx - ix
    tz = fz - iz
    ix0 = np.mod(ix, grid.nx)
    ix1 = np.mod(ix + 1, grid.nx)
    iz0 = np.mod(iz, grid.nz)
    iz1 = np.mod(iz + 1, grid.nz)
    v00 = values[iz0, ix0]
    v01 = values[iz0, ix1]
    v10 = values[iz1, ix0]
    v11 = values[iz1, ix1]
    return ((1 - tz) * ((1 - tx) * v00 + tx * v01)
            + tz * ((1 - tx) * v10 + tx * v11))


def _pad_square(values: np.ndarray, parity_x: str | None,
                parity_z: str | None):
    """One ghost layer per side: odd parity reflects with sign flip (the
    field crosses zero on the wall), even parity mirrors, None repeats."""
    def edge(sl, parity):
        if parity == "sin":
            return -sl
        return sl  # "cos" mirror and generic edge-repeat coincide here

    top = edge(values[:1, :], parity_z)
    bot = edge(values[-1:, :], parity_z)
    v = np.concatenate([top, values, bot], axis=0)
    left = edge(v[:, :1], parity_x)
    right = edge(v[:, -1:], parity_x)
    return np.concatenate([left, v, right], axis=1)


def _interp_square(grid: Grid, values: np.ndarray, pts: np.ndarray,
                   parity_x: str | None = None, parity_z: str | None = None):
    hx = grid.lx / grid.nx
    hz = grid.lz / grid.nz
    padded = _pad_square(values, parity_x, parity_z)
    # ghost-extended node coordinates start at -h/2, so node i sits at
    # (i - 1/2) h; a domain point always falls between two nodes
    fx = pts[:, 0] / hx + 0.5
    fz = pts[:, 1] / hz + 0.5
    ix = np.clip(np.floor(fx).astype(int), 0, grid.nx)
    iz = np.clip(np.floor(fz).astype(int), 0, grid.nz)
    tx = fx - ix
    tz = fz - iz
    v00 = padded[iz, ix]
    v01 = padded[iz, ix + 1]
    v10 = padded[iz + 1, ix]
    v11 = padded[iz + 1, ix + 1]
    return ((1 - tz) * ((1 - tx) * v00 + tx * v01)
            + tz * ((1 - tx) * v10 + tx * v11))


def _interp_velocity(u: VectorField, pts: np.ndarray):
    g = u.grid
    if g.geometry is Geometry.TORUS:
        vx = _interp_torus(g, u.x.values, pts)
        vz = _interp_torus(g, u.z.values, pts)
    else:
        vx = _interp_square(g, u.x.values, pts, "sin", "cos")
        vz = _interp_square(g, u.z.values, pts, "cos", "sin")
    return np.column_stack([vx, vz])


def circulation(state: SimState, params: Params, loop: MaterialLoop) -> float:
    """Trapezoidal line integral of v_S = s u_S - (u_T + f x) grad theta_S
    around the loop, with bilinear sampling of the integrand fields."""
    g = state.grid
    pts = loop.points
    if g.geometry is Geometry.SQUARE:
        _check_inside(g, pts)
    dx_th = differentiate(state.theta_s, "x").values
    dz_th = differentiate(state.theta_s, "z").values
    coef = state.u_t.values + params.f * g.x_mesh
    vx_vals = params.s * state.u_s.x.values - coef * dx_th
    vz_vals = params.s * state.u_s.z.values - coef * dz_th
    if g.geometry is Geometry.TORUS:
        vx = _interp_torus(g, vx_vals, pts)
        vz = _interp_torus(g, vz_vals, pts)
    else:
        vx = _interp_square(g, vx_vals, pts)
        vz = _interp_square(g, vz_vals, pts)
    v = np.column_stack([vx, vz])
    nxt = np.roll(np.arange(pts.shape[0]), -1)
    seg = pts[nxt] - pts
    mid = 0.5 * (v + v[nxt])
    return float(np.sum(mid[:, 0] * seg[:, 0] + mid[:, 1] * seg[:, 1]))


def advect_loop(loop: MaterialLoop, u: VectorField, dt: float) -> MaterialLoop:
    """Move every loop point one RK4 step through the frozen velocity."""
    g = u.grid
    p = loop.points

    def vel(q):
        if g.geometry is Geometry.SQUARE:
            q = np.clip(q, [0.0, 0.0], [g.lx, g.lz])
        return _interp_velocity(u, q)

    k1 = vel(p)
    k2 = vel(p + 0.5 * dt * k1)
    k3 = vel(p + 0.5 * dt * k2)
    k4 = vel(p + dt * k3)
    new = p + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    slack = 1e-9 * max(g.lx, g.lz)
    new = _check_inside(g, new, slack)
    return MaterialLoop(new)
