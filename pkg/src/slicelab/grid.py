"""Grids, fields, fast trigonometric transforms, differentiation, dealiasing.

Two desk-scale geometries stand in for a smooth bounded domain:

* a periodic torus [0,Lx) x [0,Lz), handled with complex Fourier modes on
  the lattice x_i = i*Lx/nx, z_j = j*Lz/nz;
* a free-slip square [0,Lx] x [0,Lz], handled with sine/cosine bases on the
  cell-centred lattice x_i = (i+1/2)*Lx/nx so that no sample sits on a wall
  and both parities share one set of nodes.

Square fields carry a per-axis parity tag ("sin" or "cos").  The velocity
components use the mixed bases forced by the free-slip condition u.n = 0:
u_x is sine-in-x/cosine-in-z (vanishes on the x-walls), u_z is
cosine-in-x/sine-in-z (vanishes on the z-walls).  Scalars default to
sine products, pressure-like fields to cosine products.

Values arrays have shape (nz, nx) -- row-major with x fastest, so
flattening gives index iz*nx + ix.  Spectral coefficients live in the raw
DST-II/DCT-II (or FFT) layout; all coefficient-space maps below are written
against that layout and never need the analytic normalisation factors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError

SIN = "sin"
COS = "cos"

#: Default square bases by role: scalars (u_T, theta_S, psi, omega) are
#: sine products; the velocity components are the mixed bases that make
#: u.n = 0 structural; pressure-like fields are cosine products so the
#: homogeneous Neumann condition holds termwise.
SCALAR_BASIS = (SIN, SIN)
VX_BASIS = (SIN, COS)
VZ_BASIS = (COS, SIN)
NEUMANN_BASIS = (COS, COS)


class Geometry(enum.Enum):
    TORUS = "torus"
    SQUARE = "square"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Geometry, resolution, extents, and cached spectral tables."""

    geometry: Geometry
    nx: int
    nz: int
    lx: float
    lz: float

    # -- sample coordinates -------------------------------------------------
    @cached_property
    def x(self) -> np.ndarray:
        h = self.lx / self.nx
        if self.geometry is Geometry.TORUS:
            return h * np.arange(self.nx)
        return h * (np.arange(self.nx) + 0.5)

    @cached_property
    def z(self) -> np.ndarray:
        h = self.lz / self.nz
        if self.geometry is Geometry.TORUS:
            return h * np.arange(self.nz)
        return h * (np.arange(self.nz) + 0.5)

    @cached_property
    def x_mesh(self) -> np.ndarray:
        return np.broadcast_to(self.x[None, :], (self.nz, self.nx))

    @cached_property
    def z_mesh(self) -> np.ndarray:
        return np.broadcast_to(self.z[:, None], (self.nz, self.nx))

    @cached_property
    def z_weight(self) -> np.ndarray:
        """The z coordinate as the model sees it.

        Square: the L2 projection of the ramp onto the resolved sine-z
        modes, sum of 2 Lz (-1)^(l+1)/(l pi) sin(l pi z/Lz).  Against any
        sine-z-band-limited field this weight integrates z exactly under
        the midpoint sum, and using the same weight in the z-dependent
        source makes the energy exchange cancel identically.  Torus: the
        raw ramp (no compatible projection exists; torus accounting is
        restricted anyway).
        """
        if self.geometry is Geometry.TORUS:
            return self.z_mesh
        ell = np.arange(1, self.nz + 1)
        coef = 2.0 * self.lz * np.where(ell % 2 == 1, 1.0, -1.0) / (ell * np.pi)
        ramp = np.sin(np.pi * np.outer(self.z, ell) / self.lz) @ coef
        return np.broadcast_to(ramp[:, None], (self.nz, self.nx))

    @property
    def cell_area(self) -> float:
        return (self.lx / self.nx) * (self.lz / self.nz)

    # -- mode tables --------------------------------------------------------
    @cached_property
    def modes_x(self) -> np.ndarray:
        """Integer mode numbers along x (torus: signed; square: sine modes)."""
        if self.geometry is Geometry.TORUS:
            return np.rint(sfft.fftfreq(self.nx) * self.nx).astype(int)
        return np.arange(1, self.nx + 1)

    @cached_property
    def modes_z(self) -> np.ndarray:
        if self.geometry is Geometry.TORUS:
            return np.rint(sfft.fftfreq(self.nz) * self.nz).astype(int)
        return np.arange(1, self.nz + 1)

    # Angular wavenumbers. Torus: 2*pi*m/L signed; square: pi*m/L with the
    # slot-to-mode maps m = slot+1 (sine) and m = slot (cosine).
    @cached_property
    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * self.modes_x / self.lx

    @cached_property
    def kz(self) -> np.ndarray:
        return 2.0 * np.pi * self.modes_z / self.lz

    # First-derivative wavenumbers: the Nyquist mode -n/2 is its own
    # conjugate partner and its sampled derivative is identically zero, so
    # odd-order operators must treat its wavenumber as 0 (even orders keep
    # the full k; cos(n x /2) does have a sampled second derivative).
    @cached_property
    def kx_diff(self) -> np.ndarray:
        return np.where(self.modes_x == -self.nx // 2, 0.0, self.kx)

    @cached_property
    def kz_diff(self) -> np.ndarray:
        return np.where(self.modes_z == -self.nz // 2, 0.0, self.kz)

    @cached_property
    def kx_sin(self) -> np.ndarray:
        return np.pi * np.arange(1, self.nx + 1) / self.lx

    @cached_property
    def kz_sin(self) -> np.ndarray:
        return np.pi * np.arange(1, self.nz + 1) / self.lz

    @cached_property
    def kx_cos(self) -> np.ndarray:
        return np.pi * np.arange(self.nx) / self.lx

    @cached_property
    def kz_cos(self) -> np.ndarray:
        return np.pi * np.arange(self.nz) / self.lz

    # -- dealias masks (2/3 rule on integer mode numbers) -------------------
    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Torus keep-mask: |m_x| <= nx/3 and |m_z| <= nz/3."""
        keep_x = np.abs(self.modes_x) <= self.nx / 3.0
        keep_z = np.abs(self.modes_z) <= self.nz / 3.0
        return keep_z[:, None] & keep_x[None, :]

    def keep_1d(self, axis: str, parity: str) -> np.ndarray:
        """Square keep-vector for one axis in the given parity's slot layout."""
        n = self.nx if axis == "x" else self.nz
        slots = np.arange(n)
        modes = slots + 1 if parity == SIN else slots
        return modes <= n / 3.0

    def __repr__(self) -> str:  # keep dataclass repr free of cached arrays
        return (f"Grid({self.geometry.value}, {self.nx}x{self.nz}, "
                f"Lx={self.lx:g}, Lz={self.lz:g})")


def make_grid(geometry: Geometry | str, nx: int, nz: int,
              lx: float, lz: float) -> Grid:
    """Validate and build a grid.

    nx, nz must be powers of two >= 8 (fast-transform friendliness);
    extents must be positive.
    """
    if isinstance(geometry, str):
        try:
            geometry = Geometry(geometry)
        except ValueError:
            raise ConfigError(f"unknown geometry {geometry!r}") from None
    for name, n in (("nx", nx), ("nz", nz)):
        if not (_is_pow2(n) and n >= 8):
            raise ConfigError(
                f"{name} = {n} is not a power of two >= 8")
    if not (lx > 0 and lz > 0):
        raise ConfigError(f"domain extents must be positive (got {lx}, {lz})")
    return Grid(geometry, int(nx), int(nz), float(lx), float(lz))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray
    basis: tuple[str, str] | None = None  # (x-parity, z-parity); None on torus

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.grid.nz, self.grid.nx):
            raise ConfigError(
                f"field shape {vals.shape} does not match grid "
                f"({self.grid.nz}, {self.grid.nx})")
        object.__setattr__(self, "values", vals)
        if self.grid.geometry is Geometry.SQUARE:
            if self.basis is None:
                object.__setattr__(self, "basis", SCALAR_BASIS)
            elif self.basis[0] not in (SIN, COS) or self.basis[1] not in (SIN, COS):
                raise ConfigError(f"bad square basis {self.basis!r}")
        else:
            object.__setattr__(self, "basis", None)


@dataclass(frozen=True)
class VectorField:
    x: ScalarField
    z: ScalarField

    def __post_init__(self):
        if self.x.grid is not self.z.grid and self.x.grid != self.z.grid:
            raise ConfigError("vector components on different grids")

    @property
    def grid(self) -> Grid:
        return self.x.grid


def scalar_field(grid: Grid, values, basis: tuple[str, str] | None = None) -> ScalarField:
    return ScalarField(grid, values, basis)


def vector_field(grid: Grid, x_values, z_values) -> VectorField:
    """Velocity-like vector field; square components get the u.n = 0 bases."""
    if grid.geometry is Geometry.SQUARE:
        return VectorField(ScalarField(grid, x_values, VX_BASIS),
                           ScalarField(grid, z_values, VZ_BASIS))
    return VectorField(ScalarField(grid, x_values),
                       ScalarField(grid, z_values))


def zero_scalar(grid: Grid, basis: tuple[str, str] | None = None) -> ScalarField:
    return ScalarField(grid, np.zeros((grid.nz, grid.nx)), basis)


def zero_vector(grid: Grid) -> VectorField:
    return vector_field(grid, np.zeros((grid.nz, grid.nx)),
                        np.zeros((grid.nz, grid.nx)))


# ---------------------------------------------------------------------------
# transforms (raw coefficient layout)
# ---------------------------------------------------------------------------

def to_modes(grid: Grid, values: np.ndarray, basis) -> np.ndarray:
    if grid.geometry is Geometry.TORUS:
        return sfft.fft2(values)
    coef = values
    # axis 1 is x, axis 0 is z
    coef = sfft.dst(coef, type=2, axis=1) if basis[0] == SIN else sfft.dct(coef, type=2, axis=1)
    coef = sfft.dst(coef, type=2, axis=0) if basis[1] == SIN else sfft.dct(coef, type=2, axis=0)
    return coef


def from_modes(grid: Grid, coef: np.ndarray, basis) -> np.ndarray:
    if grid.geometry is Geometry.TORUS:
        return sfft.ifft2(coef).real
    vals = coef
    vals = sfft.idst(vals, type=2, axis=0) if basis[1] == SIN else sfft.idct(vals, type=2, axis=0)
    vals = sfft.idst(vals, type=2, axis=1) if basis[0] == SIN else sfft.idct(vals, type=2, axis=1)
    return vals


def _flip(parity: str) -> str:
    return COS if parity == SIN else SIN


def axis_derivative_modes(grid: Grid, coef: np.ndarray, basis, axis: str,
                          order: int = 1):
    """d^order/d(axis)^order in coefficient space.

    Returns (coef, basis).  Torus: multiply by (i*k)^order.  Square: an even
    order is diagonal, (-k^2)^(order/2) in the current parity; an odd order
    additionally shifts slots by one and flips the parity (sine slot m-1
    holds mode m, cosine slot m holds mode m).  The top mode falling outside
    the flipped basis is dropped; dealiased fields never populate it.
    """
    if grid.geometry is Geometry.TORUS:
        if order % 2:
            k = grid.kx_diff[None, :] if axis == "x" else grid.kz_diff[:, None]
        else:
            k = grid.kx[None, :] if axis == "x" else grid.kz[:, None]
        return coef * (1j * k) ** order, basis

    ax = 1 if axis == "x" else 0      # array axis (arrays are [z, x])
    bi = 0 if axis == "x" else 1      # basis-tuple slot (tuples are (x, z))
    parity = basis[bi]
    ksin = grid.kx_sin if axis == "x" else grid.kz_sin
    kcos = grid.kx_cos if axis == "x" else grid.kz_cos

    def along(vec):
        return vec[None, :] if ax == 1 else vec[:, None]

    half, rem = divmod(order, 2)
    out = coef
    if half:
        k = ksin if parity == SIN else kcos
        out = out * along((-(k ** 2)) ** half)
    if rem:
        shifted = np.zeros_like(out)
        if parity == SIN:
            # sin mode m -> +k_m * cos mode m: cos slot m <- sin slot m-1
            src = out[:, :-1] if ax == 1 else out[:-1, :]
            k = along(kcos[1:])
            if ax == 1:
                shifted[:, 1:] = k * src
            else:
                shifted[1:, :] = k * src
        else:
            # cos mode m -> -k_m * sin mode m: sin slot m-1 <- cos slot m
            src = out[:, 1:] if ax == 1 else out[1:, :]
            k = along(ksin[:-1])
            if ax == 1:
                shifted[:, :-1] = -k * src
            else:
                shifted[:-1, :] = -k * src
        out = shifted
        parity = _flip(parity)
    new_basis = (parity, basis[1]) if bi == 0 else (basis[0], parity)
    return out, new_basis


def differentiate(field: ScalarField, axis: str) -> ScalarField:
    """Spectral first derivative along "x" or "z"."""
    if axis not in ("x", "z"):
        raise ConfigError(f"axis must be 'x' or 'z', got {axis!r}")
    g = field.grid
    coef = to_modes(g, field.values, field.basis)
    coef, basis = axis_derivative_modes(g, coef, field.basis, axis)
    return ScalarField(g, from_modes(g, coef, basis), basis)


def derivative_multi(field: ScalarField, order_x: int, order_z: int) -> ScalarField:
    """Mixed derivative d^ax d^az with a single transform round trip."""
    g = field.grid
    coef = to_modes(g, field.values, field.basis)
    basis = field.basis
    if order_x:
        coef, basis = axis_derivative_modes(g, coef, basis, "x", order_x)
    if order_z:
        coef, basis = axis_derivative_modes(g, coef, basis, "z", order_z)
    return ScalarField(g, from_modes(g, coef, basis), basis)


def dealias_modes(grid: Grid, coef: np.ndarray, basis) -> np.ndarray:
    if grid.geometry is Geometry.TORUS:
        return coef * grid.dealias_mask
    keep_x = grid.keep_1d("x", basis[0])
    keep_z = grid.keep_1d("z", basis[1])
    return coef * (keep_z[:, None] & keep_x[None, :])


def dealias(field: ScalarField) -> ScalarField:
    """2/3-rule truncation: zero every mode with |m_x| > nx/3 or |m_z| > nz/3."""
    g = field.grid
    coef = dealias_modes(g, to_modes(g, field.values, field.basis), field.basis)
    return ScalarField(g, from_modes(g, coef, field.basis), field.basis)


def dealias_values(grid: Grid, values: np.ndarray, basis) -> np.ndarray:
    """Array-level dealias for hot paths (no field wrapping)."""
    return from_modes(grid, dealias_modes(grid, to_modes(grid, values, basis),
                                          basis), basis)


def gaussian_lowpass(field: ScalarField, j: float) -> ScalarField:
    """Multiply every mode coefficient by exp(-|k|^2 / j^2).

    |k| is the angular wavenumber (equal to the integer mode number on the
    2*pi torus and on the unit-pi square).
    """
    g = field.grid
    if g.geometry is Geometry.TORUS:
        k2 = g.kx[None, :] ** 2 + g.kz[:, None] ** 2
    else:
        kx = g.kx_sin if field.basis[0] == SIN else g.kx_cos
        kz = g.kz_sin if field.basis[1] == SIN else g.kz_cos
        k2 = kx[None, :] ** 2 + kz[:, None] ** 2
    coef = to_modes(g, field.values, field.basis) * np.exp(-k2 / float(j) ** 2)
    return ScalarField(g, from_modes(g, coef, field.basis), field.basis)


def integrate(grid: Grid, values: np.ndarray) -> float:
    """Domain integral by uniform cell-weight quadrature."""
    return float(values.sum()) * grid.cell_area
