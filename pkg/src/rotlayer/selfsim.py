"""Self-similar variables for the planar vorticity and the rescaled
limiting equation.

The planar vorticity of a decaying flow is compared against the
Lamb-Oseen family by passing to the rescaled frame

    tau = log(1 + t),   w(tau, xi) = (1 + t) * wbar3(t, xi * sqrt(1 + t)),

where the spatial box contracts to side L / sqrt(1 + t).  In that frame
the dynamics reduces (for purely planar flow) to the autonomous equation

    d_tau w = Lap w + (xi/2) . grad w + w - v . grad w,

whose only steady states with a given mass alpha are the Gaussians
alpha * g, g(xi) = exp(-|xi|^2/4) / (4 pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from rotlayer.spectral import (
    Grid,
    biot_savart_2d,
    forward_transform_2d,
    inverse_transform_2d,
    norm_physical_2d,
)

__all__ = [
    "MIN_XI_BOX",
    "RescaledVorticity",
    "RateFit",
    "to_selfsimilar",
    "periodized_gaussian_coeffs",
    "gaussian_tail_mass",
    "oseen_distance",
    "fit_decay",
    "rescaled_rhs",
    "rescaled_2d_step",
    "fokker_planck_bound_check",
    "convergence_report",
]

# below this xi-box side the periodized-Gaussian tail exceeds the 1e-10
# budget for L^1 comparisons
MIN_XI_BOX = 20.0

CFL_CONSTANT = 0.5


@dataclass(frozen=True)
class RescaledVorticity:
    """Planar vorticity in the self-similar frame.

    ``w`` holds Fourier coefficients on an nx-by-ny lattice over the
    square xi-box of side ``box`` (physical values = sum of
    c * exp(i k.xi)).  ``mass`` is the integral of w over the box, which
    the rescaling preserves exactly.  Records on a box smaller than
    MIN_XI_BOX carry ``admissible=False``.
    """

    tau: float
    box: float
    w: np.ndarray
    mass: float
    admissible: bool

    @property
    def grid(self):
        nx, ny = self.w.shape
        return Grid(nx, ny, 4, self.box)

    def physical(self):
        return inverse_transform_2d(self.grid, self.w)


def to_selfsimilar(grid: Grid, w3bar: np.ndarray, t: float) -> RescaledVorticity:
    """Rescale planar vorticity coefficients into the self-similar frame.

    The rescaling maps the mode at wavenumber 2*pi*m/L on the original
    box to the same index at wavenumber 2*pi*m/(L/sqrt(1+t)) on the
    contracted box, so trigonometric interpolation is exact: the new
    coefficients are (1+t) times the old ones.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    box_xi = grid.box / np.sqrt(1.0 + t)
    w = (1.0 + t) * np.asarray(w3bar, dtype=complex)
    mass = float(np.real(w[0, 0]) * box_xi**2)
    return RescaledVorticity(
        tau=float(np.log1p(t)),
        box=box_xi,
        w=w,
        mass=mass,
        admissible=box_xi >= MIN_XI_BOX,
    )


def periodized_gaussian_coeffs(grid: Grid) -> np.ndarray:
    """Fourier coefficients of the box-periodized Gaussian profile g,
    centered at the origin of grid.x (sample index nx/2, ny/2)."""
    m1 = np.fft.fftfreq(grid.nx, d=1.0 / grid.nx).astype(int)
    m2 = np.fft.fftfreq(grid.ny, d=1.0 / grid.ny).astype(int)
    phase = ((-1.0) ** m1)[:, None] * ((-1.0) ** m2)[None, :]
    return phase * np.exp(-grid.kh_sq) / grid.box**2


def gaussian_tail_mass(box: float) -> float:
    """Mass of the Gaussian profile g outside the centered square box."""
    e = erf(box / 4.0)
    return float(1.0 - e * e)


def oseen_distance(record: RescaledVorticity, alpha: float) -> float:
    """L^1 distance of the rescaled vorticity from the Gaussian alpha*g."""
    grid = record.grid
    diff = record.w - alpha * periodized_gaussian_coeffs(grid)
    return norm_physical_2d(grid, inverse_transform_2d(grid, diff), "l1")


@dataclass(frozen=True)
class RateFit:
    """Least-squares decay-rate fit of a positive time series.

    For the exponential model value ~ C * exp(-rate * t); for the
    algebraic model value ~ C * (1+t)**rate.  ``residual`` is the RMS
    misfit of log(value).
    """

    quantity: str
    model: str
    rate: float
    residual: float
    window: tuple


def fit_decay(samples, model: str, quantity: str = "") -> RateFit:
    """Fit an exponential or algebraic decay law to (t, value) samples."""
    if model not in ("exponential", "algebraic"):
        raise ValueError(f"unknown decay model {model!r}")
    samples = sorted(samples)
    if len(samples) < 8:
        raise ValueError(f"need at least 8 samples to fit, got {len(samples)}")
    t = np.array([s[0] for s in samples], dtype=float)
    v = np.array([s[1] for s in samples], dtype=float)
    if np.any(v <= 0):
        raise ValueError("decay fit requires positive values")
    x = t if model == "exponential" else np.log1p(t)
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, np.log(v), rcond=None)
    resid = np.sqrt(np.mean((design @ coef - np.log(v)) ** 2))
    slope = coef[1]
    rate = -slope if model == "exponential" else slope
    return RateFit(
        quantity=quantity,
        model=model,
        rate=float(rate),
        residual=float(resid),
        window=(float(t[0]), float(t[-1])),
    )


def _advecting_velocity(grid: Grid, w: np.ndarray, mass: float):
    """Velocity field advecting the rescaled vorticity.

    The mean (circulation-carrying) part is handled by the exact radial
    profile of the Gaussian steady state; the mean-zero remainder is
    inverted on the box.  Returns physical (2, nx, ny) values.
    """
    from rotlayer.oseen import velocity_profile

    wprime = w - mass * periodized_gaussian_coeffs(grid)
    wprime = wprime.copy()
    wprime[0, 0] = 0.0
    uh = biot_savart_2d(grid, wprime)
    vel = np.stack(
        [
            np.real(inverse_transform_2d(grid, uh[0])),
            np.real(inverse_transform_2d(grid, uh[1])),
        ]
    )
    if mass != 0.0:
        radial = velocity_profile(grid.x)
        vel += mass * radial[:2]
    return vel


def rescaled_rhs(record: RescaledVorticity) -> np.ndarray:
    """Right side of the rescaled planar equation, as physical values.

    The drift (xi/2).grad w is evaluated on the principal box; the
    non-periodicity of the drift confines its error to the Gaussian-tail
    region near the box edge.
    """
    grid = record.grid
    k1 = grid.kx[:, None]
    k2 = grid.ky[None, :]
    gw1 = inverse_transform_2d(grid, 1j * k1 * record.w)
    gw2 = inverse_transform_2d(grid, 1j * k2 * record.w)
    w_phys = record.physical()
    linear = inverse_transform_2d(grid, (1.0 - grid.kh_sq) * record.w)
    drift = 0.5 * (grid.x[0] * np.real(gw1) + grid.x[1] * np.real(gw2))
    vel = _advecting_velocity(grid, record.w, record.mass)
    # divergence form keeps the advection mass-neutral on the lattice
    flux = forward_transform_2d(grid, vel[0] * np.real(w_phys))
    flux2 = forward_transform_2d(grid, vel[1] * np.real(w_phys))
    adv = inverse_transform_2d(
        grid, (1j * k1 * flux + 1j * k2 * flux2) * grid.dealias_mask[:, :, 0]
    )
    return np.real(linear) + drift - np.real(adv)


def _explicit_terms(record: RescaledVorticity) -> np.ndarray:
    """Drift-plus-growth and advection as spectral coefficients (the
    stiff heat part is handled exactly by the integrating factor).

    Both terms are written in divergence form, (1/2) div(xi w) and
    -div(v w), so the mean mode is untouched and the mass is conserved
    mode-by-mode.
    """
    grid = record.grid
    k1 = grid.kx[:, None]
    k2 = grid.ky[None, :]
    w_phys = np.real(record.physical())
    vel = _advecting_velocity(grid, record.w, record.mass)
    flux1 = forward_transform_2d(grid, (0.5 * grid.x[0] - vel[0]) * w_phys)
    flux2 = forward_transform_2d(grid, (0.5 * grid.x[1] - vel[1]) * w_phys)
    out = 1j * k1 * flux1 + 1j * k2 * flux2
    return out * grid.dealias_mask[:, :, 0]


def rescaled_2d_step(record: RescaledVorticity, dtau: float) -> RescaledVorticity:
    """Advance the rescaled planar equation by one integrating-factor
    RK2 step of size dtau on a fixed xi-grid."""
    if dtau <= 0:
        raise ValueError(f"step size must be positive, got {dtau}")
    grid = record.grid
    vel = _advecting_velocity(grid, record.w, record.mass)
    speed = np.max(np.hypot(vel[0], vel[1])) + 0.5 * np.max(np.abs(grid.x))
    kmax = max(np.max(np.abs(grid.kx)), np.max(np.abs(grid.ky)))
    if dtau * speed * kmax > CFL_CONSTANT:
        raise ValueError(
            f"CFL violation: dtau*speed*kmax = {dtau * speed * kmax:.3g} "
            f"> {CFL_CONSTANT} (speed {speed:.3g}, kmax {kmax:.3g})"
        )
    factor = np.exp(-dtau * grid.kh_sq)
    n0 = _explicit_terms(record)
    w_pred = factor * (record.w + dtau * n0)
    pred = RescaledVorticity(
        tau=record.tau + dtau,
        box=record.box,
        w=w_pred,
        mass=float(np.real(w_pred[0, 0]) * record.box**2),
        admissible=record.admissible,
    )
    n1 = _explicit_terms(pred)
    w_new = factor * (record.w + 0.5 * dtau * n0) + 0.5 * dtau * n1
    return RescaledVorticity(
        tau=record.tau + dtau,
        box=record.box,
        w=w_new,
        mass=float(np.real(w_new[0, 0]) * record.box**2),
        admissible=record.admissible,
    )


def _nonuniform_fourier(grid: Grid, w_phys: np.ndarray, k1, k2) -> np.ndarray:
    """Continuum Fourier transform of localized box data at arbitrary
    wavenumber lattices (separable direct sums; spectrally accurate)."""
    x1 = grid.x[0][:, 0]
    x2 = grid.x[1][0, :]
    e1 = np.exp(-1j * np.outer(k1, x1))
    e2 = np.exp(-1j * np.outer(k2, x2))
    return grid.cell_area * (e1 @ w_phys @ e2.T)


def fokker_planck_bound_check(grid: Grid, w0: np.ndarray, tau_list, p_list):
    """Check the hypercontractive bound of the drift-diffusion semigroup.

    Evolves only the linear part of the rescaled equation, whose Fourier
    solution is w-hat(tau, k) = w0-hat(k e^{-tau/2}) exp(-|k|^2 (1-e^{-tau})),
    and verifies ||S(tau) w0||_p <= ||w0||_1 / (4 pi a(tau))^{1-1/p} with
    a(tau) = 1 - e^{-tau}.  Returns rows of (tau, p, norm, bound, margin).
    """
    w_phys = np.real(inverse_transform_2d(grid, np.asarray(w0, dtype=complex)))
    l1 = norm_physical_2d(grid, w_phys, "l1")
    rows = []
    for tau in tau_list:
        if tau < 0:
            raise ValueError(f"tau must be nonnegative, got {tau}")
        shrink = np.exp(-tau / 2.0)
        what = _nonuniform_fourier(grid, w_phys, shrink * grid.kx, shrink * grid.ky)
        a = -np.expm1(-tau)
        coeffs = what * np.exp(-grid.kh_sq * a) / grid.box**2
        evolved = np.real(inverse_transform_2d(grid, coeffs))
        for p in p_list:
            if p == 1:
                norm, bound = norm_physical_2d(grid, evolved, "l1"), l1
            else:
                which = "linf" if np.isinf(p) else f"l{int(p)}"
                norm = norm_physical_2d(grid, evolved, which)
                expo = 1.0 - 1.0 / p
                bound = l1 / (4.0 * np.pi * a) ** expo if a > 0 else np.inf
            margin = bound - norm
            rows.append(
                {"tau": tau, "p": float(p), "norm": norm, "bound": bound, "margin": margin}
            )
    return rows


def convergence_report(result):
    """Distances to the Oseen family and decay fits along a trajectory.

    Takes a SimulationResult, rescales the total planar vorticity of
    every stored snapshot, and returns (rows, fits): rows carry
    (t, tau, oseen_l1_distance, h1_tilde, h1_u3bar, and the scale-invariant
    combinations (1+t)*l2_w3bar^2 and t(1+t)*h1_w3bar^2); fits are RateFit
    records for the fluctuation decay and the planar-vorticity laws.
    """
    from rotlayer.solver import background_vorticity_coeffs, circulation
    from rotlayer.spectral import (
        curl,
        norm_dhs_2d,
        norm_hs,
        norm_hs_2d,
        norm_l2_2d,
        vertical_average,
    )

    rows = []
    alpha = circulation(result.states[0])
    for state in result.states:
        grid = state.u.grid
        decomp = vertical_average(state.u)
        w3 = curl(decomp.bar).coeffs[2, :, :, 0].copy()
        if state.alpha_background != 0.0:
            w3 += background_vorticity_coeffs(grid, state.alpha_background, state.t)
        record = to_selfsimilar(grid, w3, state.t)
        t = state.t
        l2w = norm_l2_2d(grid, w3)
        h1w = norm_dhs_2d(grid, w3, 1)
        rows.append(
            {
                "t": t,
                "tau": record.tau,
                "oseen_l1_distance": oseen_distance(record, alpha),
                "h1_tilde": norm_hs(grid, decomp.tilde.coeffs, 1.0),
                "h1_u3bar": norm_hs_2d(grid, decomp.bar.coeffs[2, :, :, 0], 1.0),
                "w3bar_l2sq_scaled": (1.0 + t) * l2w**2,
                "w3bar_h1sq_scaled": t * (1.0 + t) * h1w**2,
            }
        )
    fits = []
    for name, model in (("h1_tilde", "exponential"), ("oseen_l1_distance", "algebraic")):
        series = [(row["t"], row[name]) for row in rows if row[name] > 0]
        if len(series) >= 8:
            fits.append(fit_decay(series, model, quantity=name))
        else:
            fits.append(
                RateFit(quantity=name, model=model, rate=float("nan"),
                        residual=float("nan"), window=(0.0, 0.0))
            )
    return rows, fits
