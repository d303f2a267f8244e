import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swirlns import CylinderDomain, CutoffFamily, build_grid, cutoff_eval, select_r0, weighted_integral
from swirlns.grid import THRESHOLD_COEFF_LOOSE

from conftest import mesh


class TestBuildGrid:
    def test_weights_sum_to_volume_unit_cylinder(self):
        grid = build_grid(CylinderDomain(1.0, 1.0, 1.0), 8, 8)
        assert np.sum(grid.quad_weights) == pytest.approx(2.0 * math.pi, rel=1e-12)

    def test_weights_sum_wide_cylinder(self):
        grid = build_grid(CylinderDomain(2.0, 0.5, 1.0), 16, 16)
        assert np.sum(grid.quad_weights) == pytest.approx(4.0 * math.pi, rel=1e-12)

    def test_r_squared_integral_exact(self):
        # oracle: int r^2 dx = 2 pi * (int_0^1 r^3 dr) * 2 = 2 pi * (1/4) * 2
        grid = build_grid(CylinderDomain(1.0, 1.0, 1.0), 64, 64)
        rr, _ = mesh(grid)
        assert weighted_integral(grid, rr**2) == pytest.approx(math.pi, abs=1e-10)

    def test_r_centers_inside_open_interval(self, grid64):
        assert np.all(np.diff(grid64.r_centers) > 0)
        assert grid64.r_centers[0] > 0.0
        assert grid64.r_centers[-1] < grid64.domain.R

    def test_rejects_bad_arguments(self):
        dom = CylinderDomain(1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            build_grid(dom, 4, 64)
        with pytest.raises(ValueError):
            build_grid(dom, 64, 7)
        with pytest.raises(ValueError):
            CylinderDomain(-1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            CylinderDomain(1.0, 1.0, 0.0)


class TestWeightedIntegral:
    def test_zero_field(self, grid64):
        assert weighted_integral(grid64, np.zeros(grid64.shape)) == 0.0

    def test_constant_gives_volume(self):
        grid = build_grid(CylinderDomain(1.0, 1.0, 1.0), 16, 16)
        assert weighted_integral(grid, np.ones(grid.shape)) == pytest.approx(
            2.0 * math.pi, rel=1e-12
        )

    def test_odd_z_mode_integrates_to_zero(self, grid64):
        _, zz = mesh(grid64)
        f = np.sin(math.pi * zz / grid64.domain.a)
        assert abs(weighted_integral(grid64, f)) <= 1e-12

    def test_linear_in_field(self, grid64):
        rng = np.random.default_rng(7)
        f = rng.normal(size=grid64.shape)
        g = rng.normal(size=grid64.shape)
        lhs = weighted_integral(grid64, 2.5 * f - 0.5 * g)
        rhs = 2.5 * weighted_integral(grid64, f) - 0.5 * weighted_integral(grid64, g)
        assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_shape_mismatch_rejected(self, grid64):
        with pytest.raises(ValueError):
            weighted_integral(grid64, np.zeros((3, 3)))

    def test_convergence_order_on_smooth_field(self, unit_domain):
        # non-polynomial radial content; z content is a trig polynomial the
        # periodic rule integrates exactly, so the radial error dominates
        # int cos(pi r) r dr = -2/pi^2 over [0,1]; z-length of the period is 2
        exact = 2.0 * math.pi * (-2.0 / math.pi**2) * 2.0
        errs = []
        for n in (32, 64, 128):
            grid = build_grid(unit_domain, n, n)
            rr, zz = mesh(grid)
            f = np.cos(math.pi * rr) * (1.0 + np.sin(math.pi * zz))
            errs.append(abs(weighted_integral(grid, f) - exact))
        order = np.polyfit(np.log([1 / 32, 1 / 64, 1 / 128]), np.log(errs), 1)[0]
        assert order >= 2.0


class TestCutoffs:
    def setup_method(self):
        self.fam = CutoffFamily(r0=0.2, R=1.0)

    def test_zeta1_plateau_and_support(self):
        assert cutoff_eval(self.fam, 1, 0.1) == 1.0
        assert cutoff_eval(self.fam, 1, 0.2) == 1.0
        assert cutoff_eval(self.fam, 1, 0.4) == 0.0
        assert cutoff_eval(self.fam, 1, 0.9) == 0.0

    def test_zeta3_at_half_r0(self):
        assert cutoff_eval(self.fam, 3, 0.1) == 0.0
        assert cutoff_eval(self.fam, 1, 0.1) + cutoff_eval(self.fam, 3, 0.1) == 1.0

    def test_zeta2_plateau_and_support(self):
        assert cutoff_eval(self.fam, 2, 0.05) == 0.0
        assert cutoff_eval(self.fam, 2, 0.1) == 0.0
        assert cutoff_eval(self.fam, 2, 0.2) == 1.0
        assert cutoff_eval(self.fam, 2, 0.8) == 1.0
        mid = cutoff_eval(self.fam, 2, 0.15)
        assert 0.0 < mid < 1.0

    def test_partition_of_unity_exact(self):
        r = np.linspace(0.0, 1.0, 2001)
        total = cutoff_eval(self.fam, 1, r) + cutoff_eval(self.fam, 3, r)
        assert np.max(np.abs(total - 1.0)) == 0.0

    def test_bad_index_rejected(self):
        with pytest.raises(ValueError):
            cutoff_eval(self.fam, 4, 0.1)

    @pytest.mark.parametrize("index", [1, 2, 3])
    def test_c2_smooth_across_transition(self, index):
        # second differences of a C^2 function converge; compare the
        # large-h and small-h second-difference fields across the seams
        seams = {1: (0.2, 0.4), 2: (0.1, 0.2), 3: (0.2, 0.4)}[index]
        for seam in seams:
            for h in (1e-3, 1e-4):
                d2 = (
                    cutoff_eval(self.fam, index, seam + h)
                    - 2.0 * cutoff_eval(self.fam, index, seam)
                    + cutoff_eval(self.fam, index, seam - h)
                ) / h**2
                # bounded second derivative: |zeta''| <= 60/r0^2 for the
                # quintic ramp on a band of width r0
                assert abs(d2) <= 60.0 / self.fam.r0**2

    def test_first_derivative_bounded(self):
        r = np.linspace(1e-4, 1.0 - 1e-4, 5000)
        for index in (1, 2, 3):
            vals = cutoff_eval(self.fam, index, r)
            d1 = np.diff(vals) / np.diff(r)
            assert np.max(np.abs(d1)) <= 15.0 / self.fam.r0


class TestSelectR0:
    def test_zero_holder_norm_returns_half_radius(self):
        assert select_r0(0.0, 0.5, nu=0.3, R=1.0) == 0.5

    def test_equality_case_clamped(self):
        # holder_norm = coeff * nu with alpha = 1/2 solves r0 = 1, clamped to R/2
        nu = 0.7
        h = THRESHOLD_COEFF_LOOSE * nu
        assert select_r0(h, 0.5, nu=nu, R=1.0, threshold_coeff=THRESHOLD_COEFF_LOOSE) == 0.5
        assert select_r0(h, 0.5, nu=nu, R=4.0, threshold_coeff=THRESHOLD_COEFF_LOOSE) == pytest.approx(1.0)

    def test_double_holder_norm_quarter_r0(self):
        # solve r0^(1/2) = 1/2 analytically: r0 = 1/4
        nu = 0.7
        h = 2.0 * THRESHOLD_COEFF_LOOSE * nu
        r0 = select_r0(h, 0.5, nu=nu, R=4.0, threshold_coeff=THRESHOLD_COEFF_LOOSE)
        assert r0 == pytest.approx(0.25, rel=1e-12)

    @given(
        h1=st.floats(min_value=1e-6, max_value=1e3),
        h2=st.floats(min_value=1e-6, max_value=1e3),
        alpha=st.floats(min_value=0.05, max_value=0.5),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_nonincreasing_in_holder_norm(self, h1, h2, alpha):
        lo, hi = sorted((h1, h2))
        r_lo = select_r0(hi, alpha, nu=0.4, R=1.0)
        r_hi = select_r0(lo, alpha, nu=0.4, R=1.0)
        assert r_lo <= r_hi

    def test_invalid_exponent_rejected(self):
        with pytest.raises(ValueError):
            select_r0(1.0, 0.6, nu=0.4, R=1.0)
        with pytest.raises(ValueError):
            select_r0(-1.0, 0.5, nu=0.4, R=1.0)
