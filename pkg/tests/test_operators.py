import math

import numpy as np
import pytest

from swirlns import (
    VelocityField,
    advect,
    apply_slip_bc,
    build_grid,
    dilatation_energy,
    divergence,
    laplacian_axisym,
    project_divergence_free,
    slip_residuals,
    weighted_integral,
)
from swirlns.grid import CylinderDomain
from swirlns.oracles import taylor_vortex
from swirlns.operators import OperatorWorkspace
from swirlns import stencils

from conftest import mesh


def smooth_solenoidal(grid, seed=0):
    """Deterministic smooth (v_r, v_z) with the right parities and wall values."""
    rng = np.random.default_rng(seed)
    rr, zz = mesh(grid)
    R, a = grid.domain.R, grid.domain.a
    vr = np.zeros(grid.shape)
    vz = np.zeros(grid.shape)
    for kr in range(1, 4):
        for kz in range(1, 4):
            c = rng.normal() / (kr + kz) ** 2
            vr += c * np.sin(kr * math.pi * rr / R) * (rr / R) * np.cos(kz * math.pi * zz / a)
            vz += c * np.cos(kr * math.pi * rr / R) * np.sin(kz * math.pi * zz / a)
    return vr, vz


class TestLaplacian:
    def test_quadratic_exact_in_interior(self, grid64):
        rr, _ = mesh(grid64)
        lap = laplacian_axisym(rr**2, stencils.EVEN, grid64)
        # (1/r)(r * 2r)_r = 4, exact away from the wall closure row
        assert np.allclose(lap[:-1], 4.0, atol=1e-10)

    def test_pure_z_mode(self, grid64):
        _, zz = mesh(grid64)
        k = math.pi / grid64.domain.a
        f = np.sin(k * zz) + 0.0 * zz
        lap = laplacian_axisym(f, stencils.EVEN, grid64)
        expect = -(k**2) * np.sin(k * zz)
        assert np.max(np.abs(lap - expect)) <= k**4 * grid64.dz**2

    def test_r2_sin_kz_analytic(self, grid64):
        rr, zz = mesh(grid64)
        k = math.pi / grid64.domain.a
        f = rr**2 * np.sin(k * zz)
        lap = laplacian_axisym(f, stencils.EVEN, grid64)
        expect = (4.0 - k**2 * rr**2) * np.sin(k * zz)
        err = np.abs(lap - expect)[:-1]  # wall row carries the mirror closure
        assert err.max() <= 5.0 * (grid64.dr**2 + grid64.dz**2) * k**4

    def test_order_two_weighted_l2(self, unit_domain):
        errs, hs = [], []
        for n in (32, 64, 128):
            grid = build_grid(unit_domain, n, n)
            rr, zz = mesh(grid)
            k = math.pi / grid.domain.a
            f = np.cos(math.pi * rr) * np.sin(k * zz)
            exact = (
                -math.pi**2 * np.cos(math.pi * rr)
                - math.pi * np.sin(math.pi * rr) / rr
                - k**2 * np.cos(math.pi * rr)
            ) * np.sin(k * zz)
            err = laplacian_axisym(f, stencils.EVEN, grid) - exact
            errs.append(math.sqrt(weighted_integral(grid, err**2)))
            hs.append(grid.dr)
        order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 1.9 <= order <= 2.1

    def test_swirl_operator_annihilates_rigid_rotation(self, grid64):
        rr, _ = mesh(grid64)
        lap = laplacian_axisym(rr, stencils.ODD, grid64, wall="robin", include_inv_r2=True)
        assert np.max(np.abs(lap)) <= 1e-11


class TestAdvect:
    def test_zero_velocity(self, grid64):
        v = VelocityField.zeros(grid64)
        rr, _ = mesh(grid64)
        assert not advect(v, rr**2, stencils.EVEN, "mirror").any()

    def test_unit_radial_velocity_on_linear_field(self, grid64):
        # synthetic: v_r = 1 ignores the boundary closures; interior only
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 1.0, 0.0, 0.0)
        adv = advect(v, rr, stencils.EVEN, "mirror", form="centered")
        assert np.allclose(adv[1:-1], 1.0, atol=1e-12)

    def test_axial_transport_of_z_mode(self, grid64):
        _, zz = mesh(grid64)
        k = math.pi / grid64.domain.a
        v = VelocityField.from_components(grid64, 0.0, 0.0, 1.0)
        f = np.sin(k * zz) + 0.0 * zz
        adv = advect(v, f, stencils.EVEN, "mirror", form="centered")
        expect = k * np.cos(k * zz)
        assert np.max(np.abs(adv - expect)) <= k**3 * grid64.dz**2

    def test_order_two_weighted_l2(self, unit_domain):
        from swirlns.oracles import richardson_partial

        sol = taylor_vortex(unit_domain, validate=False)
        errs, hs = [], []
        for n in (32, 64, 128):
            grid = build_grid(unit_domain, n, n)
            v = sol.on_grid(grid, 0.0)
            rr, zz = mesh(grid)
            fz = sol._component(2)
            fr = richardson_partial(fz, (rr, zz, 0.0), 0, 1e-2, 4)
            fzp = richardson_partial(fz, (rr, zz, 0.0), 1, 1e-2, 4)
            exact = v.v_r * fr + v.v_z * fzp
            err = advect(v, v.v_z, *stencils.BC_VZ) - exact
            errs.append(math.sqrt(weighted_integral(grid, err**2)))
            hs.append(grid.dr)
        order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 1.9 <= order <= 2.1


class TestDivergence:
    def test_rigid_rotation_exactly_zero(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 0.0, rr, 0.0)
        assert np.max(np.abs(divergence(v))) == 0.0

    def test_constructed_solenoidal_field(self, grid64):
        # v_r = r, v_z = -2z: d_r r + r/r - 2 = 0 (synthetic: v_z breaks the
        # periodic wrap and v_r the wall condition; test away from both)
        rr, zz = mesh(grid64)
        v = VelocityField.from_components(grid64, rr, 0.0, -2.0 * zz)
        d = divergence(v)
        interior = d[:-1, 2:-2]
        assert np.max(np.abs(interior)) <= 1e-12

    def test_quadratic_radial_field(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, rr**2, 0.0, 0.0)
        d = divergence(v)
        expect = 3.0 * rr
        # away from the axis cell (face averaging of the even-parity
        # synthetic profile) and the wall row (v_r(R) != 0)
        bulk = slice(grid64.Nr // 4, -1)
        assert np.max(np.abs(d - expect)[bulk]) <= 4.0 * grid64.dr**2 / grid64.r_centers[grid64.Nr // 4]

    def test_order_two_on_solenoidal_vortex(self, unit_domain):
        sol = taylor_vortex(unit_domain, validate=False)
        errs, hs = [], []
        for n in (32, 64, 128):
            grid = build_grid(unit_domain, n, n)
            v = sol.on_grid(grid, 0.0)
            errs.append(math.sqrt(weighted_integral(grid, divergence(v) ** 2)))
            hs.append(grid.dr)
        order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 1.9 <= order <= 2.1

    def test_discrete_gauss_theorem(self, grid64):
        # weighted integral of the divergence telescopes to the wall flux,
        # which vanishes structurally, for any field whatsoever
        rng = np.random.default_rng(11)
        v = VelocityField(
            grid64,
            rng.normal(size=grid64.shape),
            grid64.zeros(),
            rng.normal(size=grid64.shape),
            grid64.zeros(),
        )
        total = weighted_integral(grid64, divergence(v))
        assert abs(total) <= 1e-10 * np.abs(v.v_r).max() / grid64.dr


class TestSlipBC:
    def test_rigid_rotation_robin_residual_zero(self, grid64):
        rr, _ = mesh(grid64)
        v = apply_slip_bc(VelocityField.from_components(grid64, 0.0, 2.0 * rr, 0.0))
        res = slip_residuals(v)
        assert res["v_phi_robin"] == pytest.approx(0.0, abs=1e-13)

    def test_uniform_axial_flow_shear_free(self, grid64):
        v = apply_slip_bc(VelocityField.from_components(grid64, 0.0, 0.0, 3.0))
        res = slip_residuals(v)
        assert res["v_z_shear"] == 0.0

    def test_wall_normal_velocity_forced_to_zero(self, grid64):
        # a field with nonzero extrapolated wall value: the ghost closure
        # used by every operator forces the wall face itself to zero while
        # the interior stays untouched
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 1.0 + rr, 0.0, 0.0)
        before = v.v_r.copy()
        v2 = apply_slip_bc(v)
        ghosted = stencils.pad_r(v2.v_r, *stencils.BC_VR, grid64)
        wall_face = 0.5 * (ghosted[-1] + ghosted[-2])
        assert np.max(np.abs(wall_face)) == 0.0
        assert np.array_equal(v2.v_r, before)


class TestDilatationEnergy:
    def test_rigid_rotation_zero(self, grid64):
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, 0.0, 1.7 * rr, 0.0)
        assert dilatation_energy(v) <= 1e-20

    def test_uniform_axial_flow_zero(self, grid64):
        v = VelocityField.from_components(grid64, 0.0, 0.0, 2.0)
        assert dilatation_energy(v) == 0.0

    def test_axial_shear_mode_quadrature(self):
        # v_z = sin(pi z / a): E = int (2 v_z,z)^2 = 4 (pi/a)^2 * vol / 2
        grid = build_grid(CylinderDomain(1.0, 1.0, 1.0), 128, 128)
        _, zz = mesh(grid)
        v = VelocityField.from_components(grid, 0.0, 0.0, np.sin(math.pi * zz))
        expect = 4.0 * math.pi**2 * math.pi
        assert dilatation_energy(v) == pytest.approx(expect, rel=1e-3)

    def test_nonnegative_on_random_states(self, grid32):
        rng = np.random.default_rng(5)
        for _ in range(5):
            v = VelocityField(
                grid32,
                rng.normal(size=grid32.shape),
                rng.normal(size=grid32.shape),
                rng.normal(size=grid32.shape),
                grid32.zeros(),
            )
            assert dilatation_energy(v) >= 0.0


class TestProjection:
    def test_solenoidal_input_unchanged(self, grid64, ws64):
        vr, vz = smooth_solenoidal(grid64)
        v = VelocityField.from_components(grid64, vr, 0.0, vz)
        v1 = project_divergence_free(v, ws64)
        v2 = project_divergence_free(v1, ws64)
        scale = np.abs(v1.v_r).max()
        assert np.max(np.abs(v2.v_r - v1.v_r)) <= 10.0 * ws64.tol * scale
        assert np.max(np.abs(v2.v_z - v1.v_z)) <= 10.0 * ws64.tol * scale

    def test_pure_gradient_projects_to_zero(self, grid64, ws64):
        # v* = grad(phi) in the discrete sense projects to zero exactly
        rr, zz = mesh(grid64)
        k = math.pi / grid64.domain.a
        phi = rr**2 * np.sin(k * zz)
        vr = ws64.grad_r(phi)
        vz = stencils.ddz(phi, grid64)
        v = VelocityField.from_components(grid64, vr, 0.0, vz)
        out = project_divergence_free(v, ws64)
        scale = max(np.abs(vr).max(), np.abs(vz).max())
        assert np.max(np.abs(out.v_r)) <= 1e-11 * scale
        assert np.max(np.abs(out.v_z)) <= 1e-11 * scale

    def test_divergence_drops_eight_orders(self, grid64, ws64):
        rng = np.random.default_rng(12)
        vr, vz = smooth_solenoidal(grid64, seed=4)
        vr = vr + 0.3 * rng.normal(size=grid64.shape) * (
            grid64.r_centers[:, None] * (grid64.domain.R - grid64.r_centers[:, None])
        )
        v = VelocityField.from_components(grid64, vr, 0.0, vz)
        div0 = np.abs(divergence(v)).max()
        out = project_divergence_free(v, ws64)
        div1 = np.abs(divergence(out)).max()
        assert div1 <= 1e-8 * div0

    def test_pressure_mean_pinned(self, grid64, ws64):
        vr, vz = smooth_solenoidal(grid64, seed=9)
        rr, _ = mesh(grid64)
        v = VelocityField.from_components(grid64, vr + rr * (1 - rr), 0.0, vz)
        out = project_divergence_free(v, ws64)
        assert abs(weighted_integral(grid64, out.p)) <= 1e-10
