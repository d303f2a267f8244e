import numpy as np
import pytest

from swirlns import VelocityField, angular_vorticity, derive, omega_field, swirl
from swirlns.stencils import axis_value, ODD, EVEN

from conftest import mesh


class TestSwirl:
    def test_rigid_rotation_gives_r_squared(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 0.0, rr, 0.0)
        assert np.allclose(swirl(v), rr**2, rtol=0, atol=0)

    def test_zero_swirl(self, grid64):
        v = VelocityField.zeros(grid64)
        assert not swirl(v).any()

    def test_matches_elementwise_oracle(self, grid64):
        rr, zz = mesh(grid64)
        profile = np.exp(-3.0 * rr) * rr * (1.0 + 0.2 * np.cos(np.pi * zz))
        v = VelocityField.from_components(grid64, 0.0, profile, 0.0)
        expect = np.empty(grid64.shape)
        for j in range(grid64.Nr):
            for k in range(grid64.Nz):
                expect[j, k] = grid64.r_centers[j] * profile[j, k]
        assert np.array_equal(swirl(v), expect)

    def test_axis_swirl_vanishes_at_second_order(self, unit_domain):
        # u ~ Omega r^2 near the axis; the first-cell value is O(dr^2)
        from swirlns import build_grid

        vals = []
        for n in (32, 64, 128):
            grid = build_grid(unit_domain, n, n)
            rr, _ = mesh(grid)
            v = VelocityField.from_components(grid, 0.0, np.sin(rr), 0.0)
            u = swirl(v)
            vals.append(abs(axis_value(u, EVEN)).max() + abs(u[0]).max())
        order = np.polyfit(np.log([1 / 32, 1 / 64, 1 / 128]), np.log(vals), 1)[0]
        assert order >= 1.9


class TestOmega:
    def test_rigid_rotation_constant(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 0.0, 2.5 * rr, 0.0)
        assert np.allclose(omega_field(v), 2.5, rtol=0, atol=1e-14)

    def test_zero(self, grid64):
        assert not omega_field(VelocityField.zeros(grid64)).any()

    def test_cubic_profile(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 0.0, rr**3, 0.0)
        om = omega_field(v)
        assert np.allclose(om, rr**2, rtol=1e-13)
        # even extrapolation to the axis is O(dr^2)-small
        assert abs(axis_value(om, EVEN)).max() <= grid64.dr**2

    def test_consistent_with_swirl(self, grid64):
        rng = np.random.default_rng(3)
        vphi = rng.normal(size=grid64.shape)
        v = VelocityField.from_components(grid64, 0.0, vphi, 0.0)
        rr, _ = mesh(grid64)
        assert np.allclose(swirl(v), rr**2 * omega_field(v), rtol=1e-12)


class TestAngularVorticity:
    def test_rigid_rotation_plus_axial_flow_zero(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 0.0, rr, 0.7)
        assert np.max(np.abs(angular_vorticity(v))) == 0.0

    def test_z_derivative_mode(self, grid64):
        # v_r = f(r) sin(kz) -> chi = k f(r) cos(kz) + O(dz^2)
        rr, zz = mesh(grid64)
        k = np.pi / grid64.domain.a
        f = rr * (1.0 - rr) ** 2
        v = VelocityField.from_components(grid64, f * np.sin(k * zz), 0.0, 0.0)
        chi = angular_vorticity(v)
        expect = k * f * np.cos(k * zz)
        assert np.max(np.abs(chi - expect)) <= 0.5 * k**3 * grid64.dz**2

    def test_radial_derivative_second_order(self, unit_domain):
        # v_z = g(r) -> chi = -g'(r); Richardson refinement of the error
        from swirlns import build_grid

        errs = []
        for n in (32, 64, 128):
            grid = build_grid(unit_domain, n, n)
            rr, _ = mesh(grid)
            g = np.cos(np.pi * rr)  # g'(R) = 0: compatible with the wall mirror
            v = VelocityField.from_components(grid, 0.0, 0.0, g)
            chi = angular_vorticity(v)
            expect = np.pi * np.sin(np.pi * rr)
            errs.append(np.max(np.abs(chi - expect)))
        orders = np.diff(np.log(errs)) / np.diff(np.log([1 / 32, 1 / 64, 1 / 128]))
        assert np.all(orders >= 1.9)


class TestVelocityField:
    def test_shape_validation(self, grid64):
        with pytest.raises(ValueError):
            VelocityField(grid64, np.zeros((3, 3)), grid64.zeros(), grid64.zeros(), grid64.zeros())

    def test_copy_is_independent(self, grid64):
        v = VelocityField.zeros(grid64)
        w = v.copy()
        w.v_r[0, 0] = 1.0
        assert v.v_r[0, 0] == 0.0

    def test_derive_bundles_all_three(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 0.0, rr, 0.0)
        d = derive(v)
        assert np.array_equal(d.u, swirl(v))
        assert np.array_equal(d.omega, omega_field(v))
        assert np.array_equal(d.chi, angular_vorticity(v))
