"""Spectral core: grids, transforms, calculus, Biot-Savart, and norms.

The domain is a horizontally periodic box of side L (a surrogate for the
infinite plane) times the unit vertical torus.  Fields are represented by
their trigonometric-interpolation coefficients c_n(k), indexed by the
horizontal wavevector k = 2*pi*(m1, m2)/L and the vertical wavenumber
2*pi*n, in FFT-standard frequency ordering.  A constant field c has the
single coefficient c at (k=0, n=0).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "SpectralVectorField",
    "FieldDecomposition",
    "forward_transform",
    "inverse_transform",
    "forward_vector",
    "inverse_vector",
    "forward_transform_2d",
    "inverse_transform_2d",
    "vertical_average",
    "leray_project",
    "curl",
    "gradient",
    "biot_savart_2d",
    "biot_savart_u3bar",
    "biot_savart_3d",
    "dealias",
    "dealias_coeffs",
    "norm_l2",
    "norm_dhs",
    "norm_dhs_2d",
    "norm_hs",
    "norm_physical",
    "norm_l2_2d",
    "norm_hs_2d",
    "norm_physical_2d",
    "x_norm",
    "l2_inner",
]

REALITY_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Discrete domain: nx*ny horizontal modes on a box of side `box`,
    nz vertical modes on the unit torus."""

    nx: int
    ny: int
    nz: int
    box: float

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if n < 4 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 4, got {n}")
        if self.box <= 0:
            raise ValueError(f"box side must be positive, got {self.box}")

    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nx, d=1.0 / self.nx) / self.box

    @cached_property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.ny, d=1.0 / self.ny) / self.box

    @cached_property
    def kz(self) -> np.ndarray:
        # vertical wavenumbers 2*pi*n, period 1
        return 2 * np.pi * np.fft.fftfreq(self.nz, d=1.0 / self.nz)

    @cached_property
    def kappa(self) -> np.ndarray:
        """Real frequency vector (k1, k2, 2*pi*n), shape (3, nx, ny, nz)."""
        k1, k2, k3 = np.meshgrid(self.kx, self.ky, self.kz, indexing="ij")
        return np.stack([k1, k2, k3])

    @cached_property
    def xi(self) -> np.ndarray:
        """Symbol of the gradient, xi = (i k1, i k2, 2*pi*i*n)."""
        return 1j * self.kappa

    @cached_property
    def xi_sq(self) -> np.ndarray:
        """|k|^2 + 4*pi^2*n^2 per mode."""
        return np.sum(self.kappa**2, axis=0)

    @cached_property
    def kh_sq(self) -> np.ndarray:
        """|k|^2 of the horizontal wavevector, shape (nx, ny)."""
        k1, k2 = np.meshgrid(self.kx, self.ky, indexing="ij")
        return k1**2 + k2**2

    @cached_property
    def x(self) -> np.ndarray:
        """Horizontal sample coordinates in [-L/2, L/2), shape (2, nx, ny)."""
        xs = self.box * (np.arange(self.nx) / self.nx - 0.5)
        ys = self.box * (np.arange(self.ny) / self.ny - 0.5)
        x1, x2 = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([x1, x2])

    @cached_property
    def z(self) -> np.ndarray:
        return np.arange(self.nz) / self.nz

    @property
    def size(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell_volume(self) -> float:
        """Quadrature weight of one sample: L^2/(nx*ny) * 1/nz."""
        return self.box**2 / self.size

    @property
    def cell_area(self) -> float:
        return self.box**2 / (self.nx * self.ny)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mx = np.abs(np.fft.fftfreq(self.nx, d=1.0 / self.nx)) <= self.nx / 3
        my = np.abs(np.fft.fftfreq(self.ny, d=1.0 / self.ny)) <= self.ny / 3
        mz = np.abs(np.fft.fftfreq(self.nz, d=1.0 / self.nz)) <= self.nz / 3
        return mx[:, None, None] & my[None, :, None] & mz[None, None, :]

    def with_box(self, box: float) -> "Grid":
        return Grid(self.nx, self.ny, self.nz, box)


def _conjugate_reflection(coeffs: np.ndarray) -> np.ndarray:
    """conj(c) evaluated at the negated frequency index on every axis."""
    out = coeffs
    for ax in range(out.ndim - 3, out.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


@dataclass
class SpectralField:
    """Scalar field in coefficient space, shape (nx, ny, nz)."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (self.grid.nx, self.grid.ny, self.grid.nz)
        if self.coeffs.shape != expected:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {expected}"
            )

    def reality_defect(self) -> float:
        scale = np.max(np.abs(self.coeffs)) or 1.0
        return float(np.max(np.abs(self.coeffs - _conjugate_reflection(self.coeffs))) / scale)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())


@dataclass
class SpectralVectorField:
    """Three-component field in coefficient space, shape (3, nx, ny, nz)."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (3, self.grid.nx, self.grid.ny, self.grid.nz)
        if self.coeffs.shape != expected:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {expected}"
            )

    def component(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i])

    def divergence_defect(self) -> float:
        """max |xi . u| relative to the field scale."""
        div = np.sum(self.grid.xi * self.coeffs, axis=0)
        scale = np.max(np.sqrt(self.grid.xi_sq) * np.max(np.abs(self.coeffs), axis=0))
        return float(np.max(np.abs(div)) / (scale or 1.0))

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs.copy())

    def __add__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, a * self.coeffs)

    __rmul__ = __mul__


@dataclass
class FieldDecomposition:
    """Split of a field into its vertical average (bar) and the
    zero-mean fluctuation (tilde)."""

    bar: SpectralVectorField
    tilde: SpectralVectorField


# ---------------------------------------------------------------------------
# transforms

def forward_transform(grid: Grid, values: np.ndarray) -> SpectralField:
    """Physical samples -> interpolation coefficients."""
    if values.shape != (grid.nx, grid.ny, grid.nz):
        raise ValueError(
            f"sample shape {values.shape} does not match grid "
            f"{(grid.nx, grid.ny, grid.nz)}"
        )
    return SpectralField(grid, np.fft.fftn(values) / grid.size)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Coefficients -> real physical samples; rejects non-real fields."""
    defect = field.reality_defect()
    if defect > REALITY_TOL:
        raise ValueError(f"coefficients violate reality symmetry (defect {defect:.2e})")
    return np.real(np.fft.ifftn(field.coeffs) * field.grid.size)


def forward_vector(grid: Grid, values: np.ndarray) -> SpectralVectorField:
    coeffs = np.stack([np.fft.fftn(values[i]) / grid.size for i in range(3)])
    return SpectralVectorField(grid, coeffs)


def inverse_vector(field: SpectralVectorField) -> np.ndarray:
    return np.stack(
        [inverse_transform(field.component(i)) for i in range(3)]
    )


def forward_transform_2d(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Horizontal samples (nx, ny) -> 2D coefficients."""
    return np.fft.fft2(values) / (grid.nx * grid.ny)


def inverse_transform_2d(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return np.real(np.fft.ifft2(coeffs) * (grid.nx * grid.ny))


# ---------------------------------------------------------------------------
# calculus

def vertical_average(u: SpectralVectorField) -> FieldDecomposition:
    """Split u into its n=0 part and the complementary fluctuation."""
    bar = np.zeros_like(u.coeffs)
    bar[..., 0] = u.coeffs[..., 0]
    tilde = u.coeffs - bar
    return FieldDecomposition(
        bar=SpectralVectorField(u.grid, bar),
        tilde=SpectralVectorField(u.grid, tilde),
    )


def leray_project(f: SpectralVectorField) -> SpectralVectorField:
    """Orthogonal projection onto divergence-free fields; the (0,0,0)
    mode is passed through unchanged."""
    grid = f.grid
    denom = grid.xi_sq.copy()
    denom[0, 0, 0] = 1.0
    xi_dot_f = np.sum(grid.xi * f.coeffs, axis=0)
    out = f.coeffs + (xi_dot_f / denom) * grid.xi
    out[:, 0, 0, 0] = f.coeffs[:, 0, 0, 0]
    return SpectralVectorField(grid, out)


def curl(u: SpectralVectorField) -> SpectralVectorField:
    """Mode-wise xi ^ u with xi = (i k1, i k2, 2*pi*i*n)."""
    xi = u.grid.xi
    c = u.coeffs
    out = np.stack([
        xi[1] * c[2] - xi[2] * c[1],
        xi[2] * c[0] - xi[0] * c[2],
        xi[0] * c[1] - xi[1] * c[0],
    ])
    return SpectralVectorField(u.grid, out)


def gradient(f: SpectralField) -> SpectralVectorField:
    return SpectralVectorField(f.grid, f.grid.xi * f.coeffs[None])


# ---------------------------------------------------------------------------
# Biot-Savart inversions

def biot_savart_2d(grid: Grid, w3: np.ndarray) -> np.ndarray:
    """Horizontal velocity (2, nx, ny) with curl equal to the mean-free
    part of the planar vorticity w3 (2D coefficients, shape (nx, ny)).

    The k=0 coefficient of w3 is ignored and the mean velocity is set
    to zero.
    """
    denom = grid.kh_sq.copy()
    denom[0, 0] = 1.0
    k1 = grid.kx[:, None]
    k2 = grid.ky[None, :]
    psi = -w3 / denom         # stream function, Lap psi = w3
    u1 = -1j * k2 * psi
    u2 = 1j * k1 * psi
    u1[0, 0] = 0.0
    u2[0, 0] = 0.0
    return np.stack([u1, u2])


def biot_savart_u3bar(grid: Grid, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """Vertical velocity component of a planar field from the horizontal
    vorticity pair, solving Lap u3 = d2 w1 - d1 w2 with zero mean."""
    denom = grid.kh_sq.copy()
    denom[0, 0] = 1.0
    k1 = grid.kx[:, None]
    k2 = grid.ky[None, :]
    rhs = 1j * k2 * w1 - 1j * k1 * w2
    u3 = rhs / (-denom)
    u3[0, 0] = 0.0
    return u3


def biot_savart_3d(w: SpectralVectorField) -> SpectralVectorField:
    """Velocity of a vertically fluctuating vorticity field: u = xi ^ w / |xi|^2.

    Requires all n=0 modes of w to vanish.
    """
    grid = w.grid
    n0 = np.max(np.abs(w.coeffs[..., 0]))
    scale = np.max(np.abs(w.coeffs)) or 1.0
    if n0 > 1e-12 * scale:
        raise ValueError(
            f"vorticity has nonzero vertical-mean modes (max {n0:.2e})"
        )
    xi = grid.xi
    c = w.coeffs
    cross = np.stack([
        xi[1] * c[2] - xi[2] * c[1],
        xi[2] * c[0] - xi[0] * c[2],
        xi[0] * c[1] - xi[1] * c[0],
    ])
    denom = grid.xi_sq.copy()
    denom[0, 0, 0] = 1.0
    out = cross / denom
    out[..., 0] = 0.0
    return SpectralVectorField(grid, out)


# ---------------------------------------------------------------------------
# dealiasing

def dealias_coeffs(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return coeffs * grid.dealias_mask


def dealias(field):
    """2/3-rule truncation of a SpectralField or SpectralVectorField."""
    return type(field)(field.grid, field.coeffs * field.grid.dealias_mask)


# ---------------------------------------------------------------------------
# norms

def norm_l2(grid: Grid, coeffs: np.ndarray) -> float:
    """Spectral L2 norm; leading axes (components) are summed over."""
    return float(grid.box * np.sqrt(np.sum(np.abs(coeffs) ** 2)))


def norm_hs(grid: Grid, coeffs: np.ndarray, s: float) -> float:
    if s < 0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    weight = (1.0 + grid.xi_sq) ** s
    return float(grid.box * np.sqrt(np.sum(weight * np.abs(coeffs) ** 2)))


def norm_dhs(grid: Grid, coeffs: np.ndarray, order: int) -> float:
    """Homogeneous seminorm |xi|^order weighted L2 (e.g. grad, Laplacian)."""
    weight = grid.xi_sq**order
    return float(grid.box * np.sqrt(np.sum(weight * np.abs(coeffs) ** 2)))


def _pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    if values.ndim == 4:
        return np.sqrt(np.sum(values**2, axis=0))
    return np.abs(values)


def norm_physical(grid: Grid, values: np.ndarray, which: str) -> float:
    """L1 / L4 / Linf norm from physical samples (vector fields use the
    pointwise Euclidean magnitude)."""
    mag = _pointwise_magnitude(values)
    if which == "l1":
        return float(np.sum(mag) * grid.cell_volume)
    if which == "l2":
        return float(np.sqrt(np.sum(mag**2) * grid.cell_volume))
    if which == "l4":
        return float(np.sum(mag**4) * grid.cell_volume) ** 0.25
    if which == "linf":
        return float(np.max(mag))
    raise ValueError(f"unknown norm {which!r}")


def norm_l2_2d(grid: Grid, coeffs: np.ndarray) -> float:
    return float(grid.box * np.sqrt(np.sum(np.abs(coeffs) ** 2)))


def norm_hs_2d(grid: Grid, coeffs: np.ndarray, s: float) -> float:
    if s < 0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    weight = (1.0 + grid.kh_sq) ** s
    return float(grid.box * np.sqrt(np.sum(weight * np.abs(coeffs) ** 2)))


def norm_dhs_2d(grid: Grid, coeffs: np.ndarray, order: int) -> float:
    weight = grid.kh_sq**order
    return float(grid.box * np.sqrt(np.sum(weight * np.abs(coeffs) ** 2)))


def norm_physical_2d(grid: Grid, values: np.ndarray, which: str) -> float:
    if values.ndim == 3:
        mag = np.sqrt(np.sum(values**2, axis=0))
    else:
        mag = np.abs(values)
    if which == "l1":
        return float(np.sum(mag) * grid.cell_area)
    if which == "l2":
        return float(np.sqrt(np.sum(mag**2) * grid.cell_area))
    if which == "l4":
        return float(np.sum(mag**4) * grid.cell_area) ** 0.25
    if which == "linf":
        return float(np.max(mag))
    raise ValueError(f"unknown norm {which!r}")


def l2_inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Real L2 pairing of two coefficient arrays."""
    return float(grid.box**2 * np.real(np.sum(a * np.conj(b))))


def x_norm(u: SpectralVectorField) -> float:
    """H1 of the fluctuation + H1 of the planar vertical velocity
    + L1 and L2 of the planar vertical vorticity."""
    grid = u.grid
    dec = vertical_average(u)
    h1_tilde = norm_hs(grid, dec.tilde.coeffs, 1.0)
    u3bar = dec.bar.coeffs[2, :, :, 0]
    h1_u3bar = norm_hs_2d(grid, u3bar, 1.0)
    wbar = curl(dec.bar)
    w3bar = wbar.coeffs[2, :, :, 0]
    w3_phys = inverse_transform_2d(grid, w3bar)
    l1_w3 = norm_physical_2d(grid, w3_phys, "l1")
    l2_w3 = norm_l2_2d(grid, w3bar)
    return h1_tilde + h1_u3bar + l1_w3 + l2_w3
