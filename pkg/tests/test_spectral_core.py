"""Tests for grids, transforms, spectral calculus, Biot-Savart, and norms."""

import numpy as np
import pytest

from rotlayer import oseen
from rotlayer.spectral import (
    Grid,
    SpectralField,
    SpectralVectorField,
    biot_savart_2d,
    biot_savart_3d,
    biot_savart_u3bar,
    curl,
    dealias,
    dealias_coeffs,
    forward_transform,
    forward_transform_2d,
    forward_vector,
    gradient,
    inverse_transform,
    inverse_transform_2d,
    inverse_vector,
    l2_inner,
    leray_project,
    norm_hs,
    norm_l2,
    norm_physical,
    norm_physical_2d,
    vertical_average,
    x_norm,
)


@pytest.fixture
def grid():
    return Grid(16, 16, 8, 2.5)


def random_vector_field(grid, seed, divergence_free=False):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((3, grid.nx, grid.ny, grid.nz))
    u = forward_vector(grid, values)
    # band-limit so spectral derivatives keep real-field symmetry (no Nyquist)
    u = SpectralVectorField(grid, dealias_coeffs(grid, u.coeffs))
    if divergence_free:
        u = leray_project(u)
        u.coeffs[:, 0, 0, 0] = 0.0
    return u


class TestGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(15, 16, 8, 1.0)
        with pytest.raises(ValueError):
            Grid(16, 16, 2, 1.0)
        with pytest.raises(ValueError):
            Grid(16, 16, 8, -1.0)

    def test_wavenumbers(self):
        g = Grid(8, 8, 4, 4.0)
        assert g.kx[1] == pytest.approx(2 * np.pi / 4.0)
        assert g.kz[1] == pytest.approx(2 * np.pi)
        # Nyquist and negative frequencies present
        assert g.kx.min() < 0


class TestTransforms:
    def test_constant_field(self, grid):
        f = forward_transform(grid, np.ones((grid.nx, grid.ny, grid.nz)))
        assert f.coeffs[0, 0, 0] == pytest.approx(1.0)
        other = f.coeffs.copy()
        other[0, 0, 0] = 0.0
        assert np.max(np.abs(other)) < 1e-14

    def test_vertical_cosine(self, grid):
        z = grid.z[None, None, :]
        vals = np.broadcast_to(np.cos(2 * np.pi * z), (grid.nx, grid.ny, grid.nz)).copy()
        f = forward_transform(grid, vals)
        assert f.coeffs[0, 0, 1] == pytest.approx(0.5)
        assert f.coeffs[0, 0, -1] == pytest.approx(0.5)

    def test_round_trip(self, grid):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((grid.nx, grid.ny, grid.nz))
        back = inverse_transform(forward_transform(grid, vals))
        assert np.max(np.abs(back - vals)) < 1e-13 * np.max(np.abs(vals))

    def test_spectral_round_trip(self, grid):
        u = random_vector_field(grid, 3)
        f = u.component(0)
        again = forward_transform(grid, inverse_transform(f))
        assert np.max(np.abs(again.coeffs - f.coeffs)) < 1e-13

    def test_delta_gives_constant(self, grid):
        c = np.zeros((grid.nx, grid.ny, grid.nz), dtype=complex)
        c[0, 0, 0] = 3.25
        vals = inverse_transform(SpectralField(grid, c))
        assert np.allclose(vals, 3.25)

    def test_reality_violation_rejected(self, grid):
        c = np.zeros((grid.nx, grid.ny, grid.nz), dtype=complex)
        c[1, 0, 0] = 1.0  # no conjugate partner
        with pytest.raises(ValueError, match="reality"):
            inverse_transform(SpectralField(grid, c))

    def test_dimension_mismatch(self, grid):
        with pytest.raises(ValueError):
            forward_transform(grid, np.zeros((4, 4, 4)))


class TestVerticalAverage:
    def test_z_independent(self, grid):
        rng = np.random.default_rng(1)
        plane = rng.standard_normal((3, grid.nx, grid.ny, 1))
        u = forward_vector(grid, np.broadcast_to(plane, (3, grid.nx, grid.ny, grid.nz)).copy())
        dec = vertical_average(u)
        assert np.max(np.abs(dec.tilde.coeffs)) < 1e-14

    def test_pure_fluctuation(self, grid):
        z = grid.z[None, None, None, :]
        vals = np.broadcast_to(np.sin(2 * np.pi * z), (3, grid.nx, grid.ny, grid.nz)).copy()
        dec = vertical_average(forward_vector(grid, vals))
        assert np.max(np.abs(dec.bar.coeffs)) < 1e-14

    def test_partition(self, grid):
        u = random_vector_field(grid, 2)
        dec = vertical_average(u)
        assert np.array_equal(dec.bar.coeffs + dec.tilde.coeffs, u.coeffs)

    def test_commutes_with_projection(self, grid):
        u = random_vector_field(grid, 5)
        a = vertical_average(leray_project(u)).bar
        b = leray_project(vertical_average(u).bar)
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-12


class TestLerayProjection:
    def test_annihilates_gradients(self, grid):
        rng = np.random.default_rng(7)
        phi = forward_transform(grid, rng.standard_normal((grid.nx, grid.ny, grid.nz)))
        g = gradient(phi)
        p = leray_project(g)
        p.coeffs[:, 0, 0, 0] = 0.0
        assert np.max(np.abs(p.coeffs)) < 1e-12 * np.max(np.abs(g.coeffs))

    def test_fixes_divergence_free(self, grid):
        u = random_vector_field(grid, 8, divergence_free=True)
        again = leray_project(u)
        assert np.max(np.abs(again.coeffs - u.coeffs)) < 1e-13

    def test_idempotent(self, grid):
        u = random_vector_field(grid, 9)
        once = leray_project(u)
        twice = leray_project(once)
        assert np.max(np.abs(twice.coeffs - once.coeffs)) < 1e-13

    def test_output_divergence_free(self, grid):
        u = random_vector_field(grid, 10)
        assert leray_project(u).divergence_defect() < 1e-12

    def test_self_adjoint(self, grid):
        f = random_vector_field(grid, 11)
        g = random_vector_field(grid, 12)
        lhs = l2_inner(grid, leray_project(f).coeffs, g.coeffs)
        rhs = l2_inner(grid, f.coeffs, leray_project(g).coeffs)
        assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(lhs)))

    def test_third_component_passthrough(self, grid):
        # z-independent fields keep their vertical component under projection
        u = random_vector_field(grid, 13)
        bar = vertical_average(u).bar
        p = leray_project(bar)
        assert np.max(np.abs(p.coeffs[2] - bar.coeffs[2])) < 1e-12


class TestCurl:
    def test_constant(self, grid):
        vals = np.ones((3, grid.nx, grid.ny, grid.nz))
        w = curl(forward_vector(grid, vals))
        w.coeffs[:, 0, 0, 0] = 0.0
        assert np.max(np.abs(w.coeffs)) < 1e-14

    def test_single_mode(self, grid):
        # u = (0, 0, sin(k1 x1)) -> curl = (0, -k1 cos(k1 x1), 0)
        k1 = grid.kx[1]
        x1 = grid.x[0][:, :, None]
        vals = np.zeros((3, grid.nx, grid.ny, grid.nz))
        vals[2] = np.sin(k1 * x1)
        w = curl(forward_vector(grid, vals))
        phys = inverse_vector(w)
        assert np.max(np.abs(phys[1] + k1 * np.cos(k1 * x1) * np.ones_like(phys[1]))) < 1e-12
        assert np.max(np.abs(phys[0])) < 1e-12
        assert np.max(np.abs(phys[2])) < 1e-12

    def test_enstrophy_identity(self, grid):
        # |curl u|_L2 = |grad u|_L2 for divergence-free u
        u = random_vector_field(grid, 20, divergence_free=True)
        w = curl(u)
        grad_sq = sum(
            norm_l2(grid, gradient(u.component(i)).coeffs) ** 2 for i in range(3)
        )
        assert norm_l2(grid, w.coeffs) == pytest.approx(np.sqrt(grad_sq), rel=1e-12)


class TestBiotSavart2D:
    def test_zero(self, grid):
        w = np.zeros((grid.nx, grid.ny), dtype=complex)
        assert np.max(np.abs(biot_savart_2d(grid, w))) == 0.0

    def test_oseen_velocity_value(self):
        grid = Grid(128, 128, 4, 40.0)
        g3 = oseen.gaussian_profile(grid.x)
        w = forward_transform_2d(grid, g3)
        uh = biot_savart_2d(grid, w)
        phys = np.stack([inverse_transform_2d(grid, uh[i]) for i in range(2)])
        ix = np.argmin(np.abs(grid.x[0][:, 0] - 2.0))
        iy = np.argmin(np.abs(grid.x[1][0, :] - 0.0))
        xa = grid.x[0][ix, 0]
        # closed-form azimuthal speed, minus the uniform counter-rotation
        # induced by dropping the mean vorticity on the periodic box
        expected = (1 - np.exp(-xa * xa / 4)) / (2 * np.pi * xa) - xa / (2 * grid.box**2)
        assert phys[1][ix, iy] == pytest.approx(expected, abs=5e-6)
        assert abs(phys[0][ix, iy]) < 1e-12
        # sanity check of the oracle itself at x = (2, 0)
        assert (1 - np.exp(-1.0)) / (4 * np.pi) == pytest.approx(0.0503026, abs=1e-6)

    def test_curl_recovers_mean_free_input(self, grid):
        rng = np.random.default_rng(30)
        w = forward_transform_2d(grid, rng.standard_normal((grid.nx, grid.ny)))
        uh = biot_savart_2d(grid, w)
        k1 = grid.kx[:, None]
        k2 = grid.ky[None, :]
        w_back = 1j * k1 * uh[1] - 1j * k2 * uh[0]
        target = w.copy()
        target[0, 0] = 0.0
        assert np.max(np.abs(w_back - target)) < 1e-12 * np.max(np.abs(w))

    def test_divergence_free(self, grid):
        rng = np.random.default_rng(31)
        w = forward_transform_2d(grid, rng.standard_normal((grid.nx, grid.ny)))
        uh = biot_savart_2d(grid, w)
        k1 = grid.kx[:, None]
        k2 = grid.ky[None, :]
        div = 1j * k1 * uh[0] + 1j * k2 * uh[1]
        assert np.max(np.abs(div)) < 1e-12


class TestBiotSavartU3:
    def test_zero(self, grid):
        z = np.zeros((grid.nx, grid.ny), dtype=complex)
        assert np.max(np.abs(biot_savart_u3bar(grid, z, z))) == 0.0

    def test_stream_function_recovery(self, grid):
        # w1 = d2 phi, w2 = -d1 phi  ->  u3 = phi - mean(phi)
        rng = np.random.default_rng(40)
        phi = forward_transform_2d(grid, rng.standard_normal((grid.nx, grid.ny)))
        k1 = grid.kx[:, None]
        k2 = grid.ky[None, :]
        w1 = 1j * k2 * phi
        w2 = -1j * k1 * phi
        u3 = biot_savart_u3bar(grid, w1, w2)
        target = phi.copy()
        target[0, 0] = 0.0
        assert np.max(np.abs(u3 - target)) < 1e-12 * np.max(np.abs(phi))

    def test_defining_relation(self, grid):
        rng = np.random.default_rng(41)
        u3 = forward_transform_2d(grid, rng.standard_normal((grid.nx, grid.ny)))
        k1 = grid.kx[:, None]
        k2 = grid.ky[None, :]
        w1 = 1j * k2 * u3
        w2 = -1j * k1 * u3
        u3_back = biot_savart_u3bar(grid, w1, w2)
        target = u3.copy()
        target[0, 0] = 0.0
        assert np.max(np.abs(u3_back - target)) < 1e-12 * np.max(np.abs(u3))


class TestBiotSavart3D:
    def make_fluctuating_curl(self, grid, seed):
        u = random_vector_field(grid, seed, divergence_free=True)
        u = vertical_average(u).tilde
        return u, curl(u)

    def test_zero(self, grid):
        w = SpectralVectorField(grid, np.zeros((3, grid.nx, grid.ny, grid.nz), dtype=complex))
        assert np.max(np.abs(biot_savart_3d(w).coeffs)) == 0.0

    def test_inverts_curl(self, grid):
        u, w = self.make_fluctuating_curl(grid, 50)
        u_back = biot_savart_3d(w)
        assert np.max(np.abs(u_back.coeffs - u.coeffs)) < 1e-12 * np.max(np.abs(u.coeffs))

    def test_curl_of_output(self, grid):
        _, w = self.make_fluctuating_curl(grid, 51)
        u = biot_savart_3d(w)
        w_back = curl(u)
        assert np.max(np.abs(w_back.coeffs - w.coeffs)) < 1e-12 * np.max(np.abs(w.coeffs))
        assert u.divergence_defect() < 1e-12

    def test_rejects_vertical_mean(self, grid):
        u = random_vector_field(grid, 52, divergence_free=True)
        w = curl(u)
        with pytest.raises(ValueError, match="vertical-mean"):
            biot_savart_3d(w)

    def test_l6_bound_finite(self, grid):
        _, w = self.make_fluctuating_curl(grid, 53)
        u = biot_savart_3d(w)
        l6 = float(
            (np.sum(np.sum(inverse_vector(u) ** 2, axis=0) ** 3) * grid.cell_volume) ** (1 / 6)
        )
        assert np.isfinite(l6)
        assert l6 <= 10.0 * norm_l2(grid, w.coeffs)


class TestNorms:
    def test_constant_l2(self):
        grid = Grid(8, 8, 4, 3.0)
        f = forward_transform(grid, np.ones((8, 8, 4)))
        assert norm_l2(grid, f.coeffs) == pytest.approx(3.0)

    def test_gaussian_l1(self):
        grid = Grid(128, 128, 4, 20.0)
        g3 = oseen.gaussian_profile(grid.x)
        assert norm_physical_2d(grid, g3, "l1") == pytest.approx(1.0, abs=1e-10)

    def test_hs_single_mode(self, grid):
        c = np.zeros((grid.nx, grid.ny, grid.nz), dtype=complex)
        c[2, 0, 1] = 0.5
        c[-2, 0, -1] = 0.5
        xi_sq = grid.kx[2] ** 2 + (2 * np.pi) ** 2
        expected = grid.box * np.sqrt(2 * 0.25 * (1 + xi_sq) ** 1.5)
        assert norm_hs(grid, c, 1.5) == pytest.approx(expected, rel=1e-13)

    def test_parseval(self, grid):
        u = random_vector_field(grid, 60)
        spectral = norm_l2(grid, u.coeffs)
        physical = norm_physical(grid, inverse_vector(u), "l2")
        assert spectral == pytest.approx(physical, rel=1e-12)

    def test_negative_s_rejected(self, grid):
        with pytest.raises(ValueError):
            norm_hs(grid, np.zeros((grid.nx, grid.ny, grid.nz)), -1.0)


class TestDealias:
    def test_low_modes_unchanged(self, grid):
        c = np.zeros((grid.nx, grid.ny, grid.nz), dtype=complex)
        c[1, 2, 1] = 1.0
        f = SpectralField(grid, c)
        assert np.array_equal(dealias(f).coeffs, c)

    def test_nyquist_zeroed(self, grid):
        c = np.zeros((grid.nx, grid.ny, grid.nz), dtype=complex)
        c[grid.nx // 2, 0, 0] = 1.0
        assert np.max(np.abs(dealias(SpectralField(grid, c)).coeffs)) == 0.0

    def test_idempotent(self, grid):
        u = random_vector_field(grid, 70)
        once = dealias(u)
        assert np.array_equal(dealias(once).coeffs, once.coeffs)


class TestXNorm:
    def test_zero(self, grid):
        u = SpectralVectorField(grid, np.zeros((3, grid.nx, grid.ny, grid.nz), dtype=complex))
        assert x_norm(u) == 0.0

    def test_oseen_values(self):
        # build the vortex from its Gaussian vorticity (periodic-friendly),
        # recover velocity by Biot-Savart, and check the vorticity norms
        grid = Grid(128, 128, 4, 40.0)
        g3 = oseen.gaussian_profile(grid.x)
        w3 = forward_transform_2d(grid, g3)
        uh = biot_savart_2d(grid, w3)
        k1 = grid.kx[:, None]
        k2 = grid.ky[None, :]
        w3_back = 1j * k1 * uh[1] - 1j * k2 * uh[0]
        target = w3.copy()
        target[0, 0] = 0.0
        assert np.max(np.abs(w3_back - target)) < 1e-12
        l1 = norm_physical_2d(grid, g3, "l1")
        l2 = float(grid.box * np.sqrt(np.sum(np.abs(w3) ** 2)))
        assert l1 == pytest.approx(1.0, abs=1e-8)
        assert l2 == pytest.approx(1.0 / np.sqrt(8 * np.pi), abs=1e-8)

    def test_triangle_inequality(self, grid):
        u = random_vector_field(grid, 80, divergence_free=True)
        v = random_vector_field(grid, 81, divergence_free=True)
        assert x_norm(u + v) <= x_norm(u) + x_norm(v) + 1e-12
