"""Linear rotating-flow propagator and dispersive-kernel diagnostics.

The vertical-mean-zero part of the velocity obeys, mode by mode,
d/dt u_n(k) = -M u_n(k) with the normal matrix

    M = |xi|^2 I + (2*pi*i*n*Omega/|xi|^2) (xi ^ .),   xi = i(k1, k2, 2*pi*n),

whose eigenvalues are |xi|^2 and |xi|^2 +/- i*Omega*eta with
eta = 2*pi*n/|xi|.  The solution therefore combines heat decay with
unimodular phases on the two wave eigenvectors, which this module
diagonalizes exactly.  On top of the propagator it provides smooth
Fourier cutoffs, the oscillatory kernel K[A,B] behind the dispersive
decay estimate, and a sweep measuring how the time-integrated sup-norm
of the filtered linear evolution shrinks as the rotation rate grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
import scipy.fft as _fft

from rotlayer.spectral import (
    Grid,
    SpectralVectorField,
    forward_vector,
    leray_project,
    norm_hs,
    norm_l2,
    inverse_transform,
    SpectralField,
)

__all__ = [
    "CoriolisEigenData",
    "CutoffSpec",
    "KernelEvaluation",
    "smoothstep_cutoff",
    "coriolis_symbol",
    "eigen_data",
    "coriolis_operator",
    "rossby_propagate",
    "fourier_cutoff",
    "dispersive_filter",
    "kernel_K",
    "lemma_b2_check",
    "strichartz_experiment",
    "localized_wave_data",
]


# ---------------------------------------------------------------------------
# cutoff profile


def smoothstep_cutoff(x):
    """C^2 radial profile: 1 on [0,1/2], 0 on [1,inf), smoothstep between."""
    x = np.abs(np.asarray(x, dtype=float))
    r = np.clip(2.0 - 2.0 * x, 0.0, 1.0)
    q = r**3 * (10.0 - 15.0 * r + 6.0 * r**2)
    return np.where(x <= 0.5, 1.0, q)


@dataclass(frozen=True)
class CutoffSpec:
    """Radius and transition profile of a low-pass Fourier cutoff."""

    R: float
    chi: object = field(default=smoothstep_cutoff)

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("cutoff radius must be positive")


# ---------------------------------------------------------------------------
# single-mode eigenstructure


@dataclass
class CoriolisEigenData:
    """Eigenstructure of the rotation symbol at one Fourier mode."""

    xi_sq: float
    eta: float
    wplus: np.ndarray
    wminus: np.ndarray


def coriolis_symbol(k, n, Omega):
    """3x3 symbol of heat plus Coriolis at wavevector (k, 2*pi*n)."""
    k1, k2 = float(k[0]), float(k[1])
    xi_sq = k1 * k1 + k2 * k2 + 4.0 * np.pi**2 * n * n
    if xi_sq == 0.0:
        raise ValueError("symbol undefined at the zero mode")
    cross = np.array(
        [
            [0.0, -2j * np.pi * n, 1j * k2],
            [2j * np.pi * n, 0.0, -1j * k1],
            [-1j * k2, 1j * k1, 0.0],
        ],
        dtype=complex,
    )
    return xi_sq * np.eye(3, dtype=complex) + (2j * np.pi * n * Omega / xi_sq) * cross


def _phase_fix(w):
    """Rotate a complex vector so its first nonzero entry is real positive."""
    for comp in w:
        if abs(comp) > 1e-14:
            return w * (abs(comp) / comp)
    return w


def eigen_data(k, n):
    """Wave eigenvectors w+/- and frequency ratio eta at one mode.

    The vectors satisfy M w+/- = (|xi|^2 +/- i Omega eta) w+/- for every
    Omega, are unit, mutually orthogonal, and orthogonal to xi.  The
    phase is fixed deterministically (first nonzero component real
    positive).
    """
    k1, k2 = float(k[0]), float(k[1])
    kappa = np.array([k1, k2, 2.0 * np.pi * n])
    norm = np.linalg.norm(kappa)
    if norm == 0.0:
        raise ValueError("eigenstructure undefined at the zero mode")
    khat = kappa / norm
    # real orthonormal frame (e, f, khat) with e x f = khat
    axis = np.zeros(3)
    axis[np.argmin(np.abs(khat))] = 1.0
    e = axis - np.dot(axis, khat) * khat
    e /= np.linalg.norm(e)
    f = np.cross(khat, e)
    wplus = _phase_fix((e + 1j * f) / np.sqrt(2.0))
    wminus = _phase_fix((e - 1j * f) / np.sqrt(2.0))
    return CoriolisEigenData(
        xi_sq=float(norm**2),
        eta=float(2.0 * np.pi * n / norm),
        wplus=wplus,
        wminus=wminus,
    )


def coriolis_operator(u: SpectralVectorField) -> SpectralVectorField:
    """Leray-projected rotation term P(e3 ^ u)."""
    c = u.coeffs
    rotated = np.stack([-c[1], c[0], np.zeros_like(c[2])])
    return leray_project(SpectralVectorField(u.grid, rotated))


# ---------------------------------------------------------------------------
# exact propagator on a grid


@lru_cache(maxsize=8)
def _grid_eigenframe(grid: Grid):
    """Vectorized wave eigenvectors W+/- and eta on all nonzero-n modes."""
    kappa = grid.kappa
    norm = np.sqrt(grid.xi_sq)
    safe = np.where(norm > 0, norm, 1.0)
    khat = kappa / safe
    # per-mode seed axis: the coordinate direction least aligned with khat
    pick = np.argmin(np.abs(khat), axis=0)
    axis = (np.arange(3)[:, None, None, None] == pick[None]).astype(float)
    e = axis - np.sum(axis * khat, axis=0) * khat
    e_norm = np.sqrt(np.sum(e * e, axis=0))
    e = e / np.where(e_norm > 0, e_norm, 1.0)
    f = np.cross(khat, e, axisa=0, axisb=0).transpose(3, 0, 1, 2)
    wplus = (e + 1j * f) / np.sqrt(2.0)
    wminus = (e - 1j * f) / np.sqrt(2.0)
    n_index = grid.kz / (2.0 * np.pi)
    eta = np.where(norm > 0, 2.0 * np.pi, 0.0) * n_index[None, None, :] / safe
    tilde = np.abs(n_index)[None, None, :] > 0.5
    tilde = np.broadcast_to(tilde, norm.shape)
    return wplus, wminus, eta, tilde


def _wave_amplitudes(u: SpectralVectorField):
    """Split coefficients into w+/w- amplitudes plus the complement."""
    wplus, wminus, eta, tilde = _grid_eigenframe(u.grid)
    c = u.coeffs
    aplus = np.where(tilde, np.sum(c * np.conj(wplus), axis=0), 0.0)
    aminus = np.where(tilde, np.sum(c * np.conj(wminus), axis=0), 0.0)
    rest = c - aplus * wplus - aminus * wminus
    return aplus, aminus, rest, eta


def rossby_propagate(
    u0: SpectralVectorField, t: float, Omega: float
) -> SpectralVectorField:
    """Exact solution of the linear rotating-flow equation after time t.

    Vertical-mean modes feel only heat decay exp(-t|k|^2); the rest
    picks up unimodular phases exp(-/+ i t Omega eta) on the two wave
    eigenvectors.
    """
    if t < 0:
        raise ValueError("propagation time must be nonnegative")
    grid = u0.grid
    aplus, aminus, rest, eta = _wave_amplitudes(u0)
    wplus, wminus, _, _ = _grid_eigenframe(grid)
    heat = np.exp(-t * grid.xi_sq)
    phase = np.exp(-1j * t * Omega * eta)
    coeffs = heat * (aplus * phase * wplus + aminus * np.conj(phase) * wminus + rest)
    return SpectralVectorField(grid, coeffs)


# ---------------------------------------------------------------------------
# Fourier cutoffs


def fourier_cutoff(u: SpectralVectorField, spec: CutoffSpec):
    """Split u into (low, high) by the radial profile chi(|xi|/R)."""
    mult = spec.chi(np.sqrt(u.grid.xi_sq) / spec.R)
    low = SpectralVectorField(u.grid, u.coeffs * mult)
    high = SpectralVectorField(u.grid, u.coeffs - low.coeffs)
    return low, high


def dispersive_filter(u: SpectralVectorField, spec: CutoffSpec) -> SpectralVectorField:
    """Apply the oscillatory-kernel weight: chi(|xi|/2R) on nonzero-n modes.

    This is the frequency localization under which the kernel bound
    applies; it keeps a shell of vertically oscillating modes and
    removes the vertical mean entirely.
    """
    grid = u.grid
    mult = spec.chi(np.sqrt(grid.xi_sq) / (2.0 * spec.R))
    n_index = np.rint(grid.kz / (2.0 * np.pi)).astype(int)
    mult = mult * (np.abs(n_index)[None, None, :] > 0)
    return SpectralVectorField(grid, u.coeffs * mult)


# ---------------------------------------------------------------------------
# oscillatory kernel


@dataclass
class KernelEvaluation:
    """Sampled kernel K[A,B] with its sup norm and quadrature metadata."""

    grid: Grid
    values: np.ndarray
    sup: float
    k_step: float


def _kernel_on_grid(A, B, R, grid: Grid):
    """Midpoint quadrature of the continuum kernel on one k-lattice."""
    xi_sq = grid.xi_sq
    norm = np.sqrt(xi_sq)
    n_index = np.rint(grid.kz / (2.0 * np.pi)).astype(int)
    psi = smoothstep_cutoff(norm / (2.0 * R))
    psi = psi * (np.abs(n_index)[None, None, :] > 0)
    safe = np.where(norm > 0, norm, 1.0)
    eta = 2.0 * np.pi * n_index[None, None, :] / safe
    dk = 2.0 * np.pi / grid.box
    coeffs = (
        (dk * dk / (2.0 * np.pi))
        * np.exp(-A * xi_sq)
        * np.exp(1j * B * eta)
        * psi**2
    )
    values = inverse_transform(SpectralField(grid, coeffs.astype(complex)))
    return values, float(np.max(np.abs(values)))


def kernel_K(
    A: float,
    B: float,
    R: float,
    eval_grid: Grid,
    rel_tol: float = 1e-4,
    max_refine: int = 6,
) -> KernelEvaluation:
    """Evaluate the dispersive kernel K[A,B] and its sup over the layer.

    The horizontal k-integral is a midpoint rule on the lattice of
    eval_grid, refined (halving the step, which also widens the sampled
    physical window) until the sup is stable to rel_tol.  The vertical
    sum is finite because the weight truncates |n| <= R/pi.
    """
    if A < 0:
        raise ValueError("heat time A must be nonnegative")
    n_max = int(math.ceil(R / np.pi))
    grid = eval_grid
    # the sup runs over continuous z; sample the vertical phase finely
    nz = max(64, 2 * (n_max + 1))
    if grid.nz != nz:
        grid = Grid(grid.nx, grid.ny, nz, grid.box)
    if np.max(np.abs(grid.kx)) < 2.0 * R:
        raise ValueError("eval_grid k-lattice does not cover the disc |k| <= 2R")
    values, sup = _kernel_on_grid(A, B, R, grid)
    for _ in range(max_refine):
        finer = Grid(2 * grid.nx, 2 * grid.ny, grid.nz, 2.0 * grid.box)
        new_values, new_sup = _kernel_on_grid(A, B, R, finer)
        converged = abs(new_sup - sup) <= rel_tol * max(abs(sup), 1e-300)
        grid, values, sup = finer, new_values, new_sup
        if converged:
            break
    return KernelEvaluation(
        grid=grid, values=values, sup=sup, k_step=2.0 * np.pi / grid.box
    )


def lemma_b2_check(R, A_list, B_list, eval_grid: Grid | None = None):
    """Sweep sup|K[A,B]| and normalize by the predicted decay shape.

    Returns rows (A, B, R, sup, ratio) with
    ratio = sup * sqrt(|B|) * exp(4*pi^2*A); boundedness of the ratio
    across the sweep reflects the sup <= C exp(-4 pi^2 A)/sqrt(|B|)
    estimate.
    """
    if eval_grid is None:
        nx = 64
        box = 2.0 * np.pi * nx / (8.0 * R)  # lattice reaches |k| = 4R
        eval_grid = Grid(nx, nx, 4, box)
    rows = []
    for A in A_list:
        for B in B_list:
            result = kernel_K(A, B, R, eval_grid)
            ratio = result.sup * np.sqrt(abs(B)) * np.exp(4.0 * np.pi**2 * A)
            rows.append(
                {"A": A, "B": B, "R": R, "sup_K": result.sup, "ratio": ratio}
            )
    return rows


# ---------------------------------------------------------------------------
# rotation-rate sweep of the filtered linear evolution


def _only_first_vertical_modes(u: SpectralVectorField) -> bool:
    n_index = np.rint(u.grid.kz / (2.0 * np.pi)).astype(int)
    other = np.abs(n_index) != 1
    return bool(np.max(np.abs(u.coeffs[:, :, :, other])) == 0.0)


def _sup_norm_samples(u0: SpectralVectorField, times, Omega):
    """sup-norm of the propagated field at each time, batched over time."""
    grid = u0.grid
    aplus, aminus, rest, eta = _wave_amplitudes(u0)
    wplus, wminus, _, _ = _grid_eigenframe(grid)
    out = np.empty(len(times))
    chunk = 64
    if _only_first_vertical_modes(u0):
        # field = 2 Re(amp(x) e^{2 pi i z}); the sup over z is exact:
        # |field|^2 maxes at 2(sum |amp_j|^2 + |sum amp_j^2|),
        # so only the n = +1 plane is needed
        n_index = np.rint(grid.kz / (2.0 * np.pi)).astype(int)
        n1 = int(np.flatnonzero(n_index == 1)[0])
        ap, am, rs = aplus[:, :, n1], aminus[:, :, n1], rest[:, :, :, n1]
        wp, wm = wplus[:, :, :, n1], wminus[:, :, :, n1]
        xi_sq, eta1 = grid.xi_sq[:, :, n1], eta[:, :, n1]
        for start in range(0, len(times), chunk):
            tt = np.asarray(times[start : start + chunk])
            heat = np.exp(-tt[:, None, None] * xi_sq)
            phase = np.exp(-1j * tt[:, None, None] * Omega * eta1)
            coeffs = heat[:, None] * (
                (ap * phase)[:, None] * wp + (am * np.conj(phase))[:, None] * wm + rs
            )
            amp = _fft.ifft2(coeffs, axes=(2, 3), workers=-1) * (grid.nx * grid.ny)
            mag_sq = 2.0 * (
                np.sum(np.abs(amp) ** 2, axis=1) + np.abs(np.sum(amp**2, axis=1))
            )
            out[start : start + len(tt)] = np.sqrt(np.max(mag_sq, axis=(1, 2)))
        return out
    for start in range(0, len(times), chunk):
        tt = np.asarray(times[start : start + chunk])
        heat = np.exp(-tt[:, None, None, None] * grid.xi_sq)
        phase = np.exp(-1j * tt[:, None, None, None] * Omega * eta)
        coeffs = heat[:, None] * (
            (aplus * phase)[:, None] * wplus
            + (aminus * np.conj(phase))[:, None] * wminus
            + rest
        )
        phys = _fft.ifftn(coeffs, axes=(2, 3, 4), workers=-1) * grid.size
        mag_sq = np.sum(np.abs(phys) ** 2, axis=1)
        out[start : start + len(tt)] = np.sqrt(np.max(mag_sq, axis=(1, 2, 3)))
    return out


def strichartz_experiment(u0: SpectralVectorField, Omega_list, T, dt_sample):
    """Measure int_0^T ||u(t)||_sup dt of the linear flow per rotation rate.

    u0 must be vertical-mean-zero and frequency-localized (apply a
    cutoff first).  Returns rows (omega, integral_LinfL1,
    slope_fit_local, tail_bound) plus an overall log-log slope fitted
    over the nonzero rates.  The tail past T is bounded mode-wise by
    sum |c| exp(-T|xi|^2)/|xi|^2.
    """
    Omega_list = list(Omega_list)
    if not Omega_list:
        raise ValueError("need at least one rotation rate")
    grid = u0.grid
    n_index = np.rint(grid.kz / (2.0 * np.pi)).astype(int)
    if np.max(np.abs(u0.coeffs[:, :, :, n_index == 0])) > 1e-13:
        raise ValueError("initial data must have zero vertical mean")
    times = np.arange(0.0, T + 0.5 * dt_sample, dt_sample)
    mag = np.sqrt(np.sum(np.abs(u0.coeffs) ** 2, axis=0))
    safe = np.where(grid.xi_sq > 0, grid.xi_sq, 1.0)
    tail = float(np.sum(mag * np.exp(-T * safe) / safe))
    integrals = []
    for Omega in Omega_list:
        samples = _sup_norm_samples(u0, times, Omega)
        integrals.append(float(np.trapezoid(samples, dx=dt_sample)))
    rows = []
    for i, (Omega, integral) in enumerate(zip(Omega_list, integrals)):
        if i > 0 and Omega_list[i - 1] > 0 and Omega > 0:
            slope = (np.log(integral) - np.log(integrals[i - 1])) / (
                np.log(Omega) - np.log(Omega_list[i - 1])
            )
        else:
            slope = float("nan")
        rows.append(
            {
                "omega": Omega,
                "integral_LinfL1": integral,
                "slope_fit_local": slope,
                "tail_bound": tail,
            }
        )
    positive = [(w, q) for w, q in zip(Omega_list, integrals) if w > 0]
    if len(positive) >= 2:
        lw = np.log([w for w, _ in positive])
        lq = np.log([q for _, q in positive])
        overall = float(np.polyfit(lw, lq, 1)[0])
    else:
        overall = float("nan")
    return rows, overall


def localized_wave_data(grid: Grid, radius: float, sigma: float = 0.3):
    """Coherent frequency-localized data for dispersive-decay sweeps.

    A horizontally localized bump with a single vertical oscillation,
    projected to divergence-free, restricted to the ball |xi| <= 2R
    with the vertical mean removed, and L^2-normalized.  The coherent
    phases make the stationary-phase decay of the sup norm visible at
    moderate rotation rates.
    """
    if radius <= 0:
        raise ValueError(f"cutoff radius must be positive, got {radius}")
    bump = np.exp(-(grid.x[0] ** 2 + grid.x[1] ** 2) / (2.0 * sigma**2))
    wave = np.cos(2.0 * np.pi * grid.z)[None, None, :]
    values = np.zeros((3, grid.nx, grid.ny, grid.nz))
    values[0] = bump[:, :, None] * wave
    values[1] = 0.5 * bump[:, :, None] * wave
    u = leray_project(forward_vector(grid, values))
    n_index = np.rint(grid.kz / (2.0 * np.pi)).astype(int)
    mask = (grid.xi_sq <= (2.0 * radius) ** 2) & (np.abs(n_index)[None, None, :] > 0)
    coeffs = u.coeffs * mask
    scale = norm_l2(grid, coeffs)
    if scale == 0:
        raise ValueError("localization removed all of the data")
    return SpectralVectorField(grid, coeffs / scale)
