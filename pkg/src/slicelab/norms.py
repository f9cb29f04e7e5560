"""Discrete Sobolev norms W^{k,p} and the product-space norms over states.

The W^{k,p} norm is the l^p combination over all multi-indices |alpha| <= k
of the L^p norms of the spectral derivatives, with L^p by uniform
cell-weight quadrature.  For p = infinity the max over alpha is taken (the
two natural conventions differ by a bounded factor only; this module uses
the max).  Vector fields use the pointwise Euclidean magnitude of the
derivative pair per multi-index.

The state norm Z^{k,p} combines the three component norms (u_S counted as
one vector field) by an l^p sum, or a max when p = infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import (Grid, ScalarField, VectorField, axis_derivative_modes,
                   from_modes, to_modes)
from .state import SimState

INF = math.inf


@dataclass(frozen=True)
class NormSpec:
    k: int
    p: float  # a real >= 2, or math.inf

    def __post_init__(self):
        if self.k not in (0, 1, 2, 3):
            raise ConfigError(f"unsupported derivative order k = {self.k}")
        if not (self.p == INF or self.p >= 2):
            raise ConfigError(f"unsupported p = {self.p} (need p >= 2 or inf)")


#: The blow-up monitor index of the stopping-time criterion.
W1INF = NormSpec(1, INF)
#: Default Sobolev monitor: smallest integer k with k > 1 + 2/p at p = 2.
ZKP_DEFAULT = NormSpec(3, 2)


def _multi_indices(k: int):
    return [(ax, az) for ax in range(k + 1) for az in range(k + 1 - ax)]


def _derivative_values(grid: Grid, coef, basis, ax: int, az: int):
    c, b = coef, basis
    if ax:
        c, b = axis_derivative_modes(grid, c, b, "x", ax)
    if az:
        c, b = axis_derivative_modes(grid, c, b, "z", az)
    return from_modes(grid, c, b)


def _field_norm(components: list[ScalarField], spec: NormSpec) -> float:
    """W^{k,p} of a scalar (1 component) or vector (2 components) field."""
    grid = components[0].grid
    coefs = [to_modes(grid, f.values, f.basis) for f in components]
    bases = [f.basis for f in components]
    total = 0.0
    worst = 0.0
    for ax, az in _multi_indices(spec.k):
        if ax == 0 and az == 0:
            derivs = [f.values for f in components]
        else:
            derivs = [_derivative_values(grid, c, b, ax, az)
                      for c, b in zip(coefs, bases)]
        mag = np.abs(derivs[0]) if len(derivs) == 1 else np.hypot(*derivs)
        if spec.p == INF:
            worst = max(worst, float(mag.max()))
        else:
            total += float(np.sum(mag ** spec.p)) * grid.cell_area
    return worst if spec.p == INF else total ** (1.0 / spec.p)


def combine(parts, p: float) -> float:
    """l^p combination of already-computed component norms."""
    parts = [float(v) for v in parts]
    if p == INF:
        return max(parts) if parts else 0.0
    return sum(v ** p for v in parts) ** (1.0 / p)


def norm(obj, spec: NormSpec) -> float:
    """W^{k,p} of a field, or Z^{k,p} of a state."""
    if isinstance(obj, ScalarField):
        return _field_norm([obj], spec)
    if isinstance(obj, VectorField):
        return _field_norm([obj.x, obj.z], spec)
    if isinstance(obj, SimState):
        return combine((norm(obj.u_s, spec), norm(obj.u_t, spec),
                        norm(obj.theta_s, spec)), spec.p)
    raise ConfigError(f"cannot take a norm of {type(obj).__name__}")


def l2(obj) -> float:
    return norm(obj, NormSpec(0, 2))


def state_component_norms(state: SimState, spec: NormSpec):
    """(u_S, u_T, theta_S) norms as a tuple, for monitors and diagnostics."""
    return (norm(state.u_s, spec), norm(state.u_t, spec),
            norm(state.theta_s, spec))
