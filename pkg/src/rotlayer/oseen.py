"""Closed-form Lamb-Oseen vortex: velocity, vorticity, and gradients.

The unit-circulation vortex has velocity profile
U(xi) = (1 - exp(-|xi|^2/4)) / (2*pi*|xi|^2) * (-xi2, xi1, 0)
and Gaussian vorticity g(xi) = exp(-|xi|^2/4)/(4*pi).  The time-dependent
solution carries the self-similar prefactors 1/sqrt(1+t) and 1/(1+t).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "gaussian_profile",
    "velocity_profile",
    "oseen_velocity",
    "oseen_vorticity",
    "oseen_velocity_gradient",
]

_SERIES_CUT = 1e-2


def _phi(s: np.ndarray) -> np.ndarray:
    """(1 - exp(-s/4)) / (2*pi*s), with the removable singularity at 0."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s > _SERIES_CUT, s, 1.0)
    closed = (1.0 - np.exp(-safe / 4.0)) / (2.0 * np.pi * safe)
    # Taylor expansion of (1-e^{-s/4})/s near s = 0 avoids cancellation
    series = (0.25 - s / 32.0 + s**2 / 384.0 - s**3 / 6144.0) / (2.0 * np.pi)
    return np.where(s > _SERIES_CUT, closed, series)


def _phi_prime(s: np.ndarray) -> np.ndarray:
    """Derivative of _phi with respect to s = |xi|^2."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s > _SERIES_CUT, s, 1.0)
    closed = (np.exp(-safe / 4.0) * (safe / 4.0) - (1.0 - np.exp(-safe / 4.0))) / (
        2.0 * np.pi * safe**2
    )
    series = (-1.0 / 32.0 + s / 192.0 - s**2 / 2048.0) / (2.0 * np.pi)
    return np.where(s > _SERIES_CUT, closed, series)


def gaussian_profile(xi: np.ndarray) -> np.ndarray:
    """g(xi) = exp(-|xi|^2/4) / (4*pi) for points xi of shape (2, ...)."""
    r_sq = xi[0] ** 2 + xi[1] ** 2
    return np.exp(-r_sq / 4.0) / (4.0 * np.pi)


def velocity_profile(xi: np.ndarray) -> np.ndarray:
    """Similarity velocity (3, ...) of the unit vortex at points (2, ...)."""
    r_sq = xi[0] ** 2 + xi[1] ** 2
    phi = _phi(r_sq)
    return np.stack([-phi * xi[1], phi * xi[0], np.zeros_like(phi)])


def oseen_velocity(x: np.ndarray, t: float) -> np.ndarray:
    """u(t, x) of the unit vortex; x has shape (2, ...)."""
    root = np.sqrt(1.0 + t)
    return velocity_profile(np.asarray(x) / root) / root


def oseen_vorticity(x: np.ndarray, t: float) -> np.ndarray:
    """Vorticity (3, ...) of the unit vortex at time t."""
    g = gaussian_profile(np.asarray(x) / np.sqrt(1.0 + t)) / (1.0 + t)
    zero = np.zeros_like(g)
    return np.stack([zero, zero, g])


def oseen_velocity_gradient(x: np.ndarray, t: float) -> np.ndarray:
    """G[j, i] = d u_i / d x_j of the unit vortex, shape (2, 3, ...).

    Only horizontal derivatives are returned; the field is z-independent
    and its third component vanishes.
    """
    root = np.sqrt(1.0 + t)
    xi = np.asarray(x) / root
    r_sq = xi[0] ** 2 + xi[1] ** 2
    phi = _phi(r_sq)
    dphi = _phi_prime(r_sq)
    zero = np.zeros_like(phi)
    # similarity-variable derivatives of (-phi*xi2, phi*xi1, 0)
    d1u1 = -2.0 * dphi * xi[0] * xi[1]
    d2u1 = -2.0 * dphi * xi[1] ** 2 - phi
    d1u2 = 2.0 * dphi * xi[0] ** 2 + phi
    d2u2 = 2.0 * dphi * xi[0] * xi[1]
    grad = np.stack([
        np.stack([d1u1, d1u2, zero]),
        np.stack([d2u1, d2u2, zero]),
    ])
    return grad / (1.0 + t)
