"""Norm ledger, constants, Hoelder seminorm, and the inequality certificate.

Every quantity tracked by the a-priori estimate chain is computed here:
the L2/H1 norms, the dilatation energy, the swirl mean and sup, the
weighted norms of v_r/r, v_phi/r and chi/r, accumulated space-time norms,
the discrete parabolic Hoelder seminorm of the swirl near the axis, the
Korn ratio, and the localized energy norms built on the radial cutoffs.
Space-time norms are realized as a running sup plus trapezoid accumulation
in time; accumulators are non-decreasing and additive across segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import stencils
from .fields import DerivedFields, VelocityField, derive
from .grid import CutoffFamily, Grid, weighted_integral
from .operators import dilatation_energy

__all__ = [
    "NormRecord",
    "ConstantsLedger",
    "InequalityCheck",
    "CertificateFlags",
    "HolderWindow",
    "compute_record",
    "holder_seminorm_u",
    "check_inequalities",
    "alpha_from_initial",
    "h1_norm",
    "CSV_COLUMNS",
    "csv_header",
    "csv_row",
]

#: coefficient of nu in the axis-smallness threshold on the swirl seminorm
HOLDER_THRESHOLD_COEFF = (5.0 / 4.0) ** 0.25


def _grad_sq_density(v: VelocityField) -> np.ndarray:
    """|grad v|^2 for the full 3-component field in cylindrical coordinates."""
    grid = v.grid
    r = grid.r_centers[:, None]
    out = stencils.ddr(v.v_r, *stencils.BC_VR, grid) ** 2
    out += stencils.ddz(v.v_r, grid) ** 2
    out += stencils.ddr(v.v_phi, *stencils.BC_VPHI, grid) ** 2
    out += stencils.ddz(v.v_phi, grid) ** 2
    out += stencils.ddr(v.v_z, *stencils.BC_VZ, grid) ** 2
    out += stencils.ddz(v.v_z, grid) ** 2
    out += (v.v_r**2 + v.v_phi**2) / r**2
    return out


def l2_norm(v: VelocityField) -> float:
    dens = v.v_r**2 + v.v_phi**2 + v.v_z**2
    return math.sqrt(weighted_integral(v.grid, dens))


def h1_norm(v: VelocityField) -> float:
    dens = v.v_r**2 + v.v_phi**2 + v.v_z**2 + _grad_sq_density(v)
    return math.sqrt(weighted_integral(v.grid, dens))


def _meridional_localized(v: VelocityField, zeta: np.ndarray):
    """(L2^2, grad L2^2) of the localized meridional field (v_r, v_z) zeta(r)."""
    grid = v.grid
    r = grid.r_centers[:, None]
    w_r = v.v_r * zeta[:, None]
    w_z = v.v_z * zeta[:, None]
    l2sq = weighted_integral(grid, w_r**2 + w_z**2)
    dens = stencils.ddr(w_r, *stencils.BC_VR, grid) ** 2
    dens += stencils.ddz(w_r, grid) ** 2
    dens += stencils.ddr(w_z, *stencils.BC_VZ, grid) ** 2
    dens += stencils.ddz(w_z, grid) ** 2
    dens += w_r**2 / r**2
    return l2sq, weighted_integral(grid, dens)


@dataclass
class NormRecord:
    """One time-stamped row of the norm ledger.

    Accumulated space-time norms (suffix _acc) are reported in their
    natural homogeneity, e.g. l4_vphi_acc = (iint v_phi^4 dx dt)^(1/4);
    the raw trapezoid accumulators carry the acc_ prefix and persist so
    records chain.  korn_ratio is NaN ("not applicable") for the zero
    state.
    """

    t: float
    l2_v: float
    h1_v: float
    energy_E: float
    swirl_mean: float
    swirl_max: float
    w_vr_over_r: float
    w_vphi_over_r: float
    w_chi_over_r: float
    l4_vphi_acc: float
    omega_l3_acc: float
    omega_l92_acc: float
    omega_l95: float
    omega_l2710: float
    holder_u: float
    korn_ratio: float
    v1_zeta1: float
    v1_zeta3: float
    # raw accumulators and running sups (chained through prev)
    acc_vphi4: float = 0.0
    acc_omega3: float = 0.0
    acc_omega92: float = 0.0
    acc_grad2: float = 0.0
    acc_grad2_z1: float = 0.0
    acc_grad2_z3: float = 0.0
    acc_vr_over_r2: float = 0.0
    acc_vphi_over_r2: float = 0.0
    sup_l2: float = 0.0
    sup_h1_z1: float = 0.0
    sup_h1_z3: float = 0.0
    sup_swirl_max: float = 0.0
    # instantaneous integrand slices carried for the next trapezoid panel
    slice_vphi4: float = 0.0
    slice_om3: float = 0.0
    slice_om92: float = 0.0
    slice_grad2: float = 0.0
    slice_grad2_z1: float = 0.0
    slice_grad2_z3: float = 0.0
    slice_vr2: float = 0.0
    slice_vphi2: float = 0.0

    def reset_accumulators(self) -> "NormRecord":
        """Fresh per-segment space-time accumulators; pointwise values persist."""
        return replace(
            self,
            acc_vphi4=0.0,
            acc_omega3=0.0,
            acc_omega92=0.0,
            acc_grad2=0.0,
            acc_grad2_z1=0.0,
            acc_grad2_z3=0.0,
            acc_vr_over_r2=0.0,
            acc_vphi_over_r2=0.0,
            l4_vphi_acc=0.0,
            omega_l3_acc=0.0,
            omega_l92_acc=0.0,
        )


CSV_COLUMNS = (
    "t",
    "l2_v",
    "h1_v",
    "energy_E",
    "swirl_mean",
    "swirl_max",
    "w_vr_over_r",
    "w_vphi_over_r",
    "w_chi_over_r",
    "l4_vphi_acc",
    "omega_l3_acc",
    "omega_l92_acc",
    "omega_l95",
    "omega_l2710",
    "holder_u",
    "korn_ratio",
    "v1_zeta1",
    "v1_zeta3",
)


def csv_header() -> str:
    return ",".join(CSV_COLUMNS)


def csv_row(rec: NormRecord) -> str:
    # repr gives the shortest digit string that round-trips, so identical
    # runs serialize byte-identically
    return ",".join(repr(float(getattr(rec, c))) for c in CSV_COLUMNS)


def compute_record(
    v: VelocityField,
    derived: DerivedFields,
    cutoffs: CutoffFamily,
    prev: Optional[NormRecord] = None,
    holder_window: Optional["HolderWindow"] = None,
) -> NormRecord:
    """Populate a NormRecord, chaining trapezoid accumulators from prev."""
    grid = v.grid
    r = grid.r_centers[:, None]

    l2 = l2_norm(v)
    grad2 = weighted_integral(grid, _grad_sq_density(v))
    h1 = math.sqrt(l2**2 + grad2)
    energy = dilatation_energy(v)
    swirl_mean = weighted_integral(grid, derived.u)
    swirl_max = float(np.abs(derived.u).max())

    vr_over_r2 = weighted_integral(grid, (v.v_r / r) ** 2)
    vphi_over_r2 = weighted_integral(grid, (v.v_phi / r) ** 2)
    chi_over_r2 = weighted_integral(grid, (derived.chi / r) ** 2)

    vphi4 = weighted_integral(grid, v.v_phi**4)
    om_abs = np.abs(derived.omega)
    om3 = weighted_integral(grid, om_abs**3)
    om92 = weighted_integral(grid, om_abs**4.5)
    om95 = weighted_integral(grid, om_abs**1.8) ** (1.0 / 1.8)
    om2710 = weighted_integral(grid, om_abs**2.7) ** (1.0 / 2.7)

    zeta1 = cutoffs.zeta1(grid.r_centers)
    zeta3 = cutoffs.zeta3(grid.r_centers)
    l2sq_1, grad2_1 = _meridional_localized(v, zeta1)
    l2sq_3, grad2_3 = _meridional_localized(v, zeta3)
    h1_1 = math.sqrt(l2sq_1 + grad2_1)
    h1_3 = math.sqrt(l2sq_3 + grad2_3)

    if energy + swirl_mean**2 > 0.0:
        korn = h1**2 / (energy + swirl_mean**2)
    else:
        korn = math.nan

    if holder_window is not None:
        holder_window.push(v.t, derived.u)
        holder = holder_window.seminorm()
    else:
        holder = math.nan

    def accum(prev_val, prev_slice, cur_slice, dt):
        return prev_val + 0.5 * dt * (prev_slice + cur_slice)

    if prev is None:
        acc_vphi4 = acc_om3 = acc_om92 = acc_grad2 = 0.0
        acc_g1 = acc_g3 = acc_vr2 = acc_vphi2 = 0.0
        sup_l2 = l2
        sup_h1_1, sup_h1_3 = h1_1, h1_3
        sup_umax = swirl_max
    else:
        dt = v.t - prev.t
        if dt < 0:
            raise ValueError("records must be computed in time order")
        acc_vphi4 = accum(prev.acc_vphi4, prev.slice_vphi4, vphi4, dt)
        acc_om3 = accum(prev.acc_omega3, prev.slice_om3, om3, dt)
        acc_om92 = accum(prev.acc_omega92, prev.slice_om92, om92, dt)
        acc_grad2 = accum(prev.acc_grad2, prev.slice_grad2, grad2, dt)
        acc_g1 = accum(prev.acc_grad2_z1, prev.slice_grad2_z1, grad2_1, dt)
        acc_g3 = accum(prev.acc_grad2_z3, prev.slice_grad2_z3, grad2_3, dt)
        acc_vr2 = accum(prev.acc_vr_over_r2, prev.slice_vr2, vr_over_r2, dt)
        acc_vphi2 = accum(prev.acc_vphi_over_r2, prev.slice_vphi2, vphi_over_r2, dt)
        sup_l2 = max(prev.sup_l2, l2)
        sup_h1_1 = max(prev.sup_h1_z1, h1_1)
        sup_h1_3 = max(prev.sup_h1_z3, h1_3)
        sup_umax = max(prev.sup_swirl_max, swirl_max)

    rec = NormRecord(
        t=v.t,
        l2_v=l2,
        h1_v=h1,
        energy_E=energy,
        swirl_mean=swirl_mean,
        swirl_max=swirl_max,
        w_vr_over_r=math.sqrt(vr_over_r2),
        w_vphi_over_r=math.sqrt(vphi_over_r2),
        w_chi_over_r=math.sqrt(chi_over_r2),
        l4_vphi_acc=acc_vphi4 ** 0.25,
        omega_l3_acc=acc_om3 ** (1.0 / 3.0),
        omega_l92_acc=acc_om92 ** (2.0 / 9.0),
        omega_l95=om95,
        omega_l2710=om2710,
        holder_u=holder,
        korn_ratio=korn,
        v1_zeta1=sup_h1_1 + math.sqrt(acc_g1),
        v1_zeta3=sup_h1_3 + math.sqrt(acc_g3),
        acc_vphi4=acc_vphi4,
        acc_omega3=acc_om3,
        acc_omega92=acc_om92,
        acc_grad2=acc_grad2,
        acc_grad2_z1=acc_g1,
        acc_grad2_z3=acc_g3,
        acc_vr_over_r2=acc_vr2,
        acc_vphi_over_r2=acc_vphi2,
        sup_l2=sup_l2,
        sup_h1_z1=sup_h1_1,
        sup_h1_z3=sup_h1_3,
        sup_swirl_max=sup_umax,
        slice_vphi4=vphi4,
        slice_om3=om3,
        slice_om92=om92,
        slice_grad2=grad2,
        slice_grad2_z1=grad2_1,
        slice_grad2_z3=grad2_3,
        slice_vr2=vr_over_r2,
        slice_vphi2=vphi_over_r2,
    )
    return rec


# ---------------------------------------------------------------------------
# parabolic Hoelder seminorm of the swirl near the axis
# ---------------------------------------------------------------------------


def holder_seminorm_u(
    snapshots,
    exponents=(0.5, 0.25),
    z_period: float | None = None,
):
    """Discrete sup of |u(x,t) - u(y,s)| / (|x-y|^ax + |t-s|^at).

    snapshots is a sequence of (t, points, values): points is (n, 2) with
    meridian coordinates (r, z), values the swirl samples there.  All
    spatial pairs and all snapshot pairs enter the sup.  Axial distances
    respect the z period when given; same-point same-time pairs are
    excluded (0/0).
    """
    ax, at = exponents
    if len(snapshots) < 2:
        raise ValueError("holder seminorm needs at least 2 retained snapshots")
    best = 0.0
    for i, (ti, pi, ui) in enumerate(snapshots):
        for j in range(i, len(snapshots)):
            tj, pj, uj = snapshots[j]
            dz = np.abs(pi[:, 1][:, None] - pj[None, :, 1])
            if z_period is not None:
                dz = np.minimum(dz, z_period - dz)
            dist = np.hypot(pi[:, 0][:, None] - pj[None, :, 0], dz)
            denom = dist**ax + abs(ti - tj) ** at
            num = np.abs(ui[:, None] - uj[None, :])
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(denom > 0.0, num / np.where(denom > 0, denom, 1.0), 0.0)
            best = max(best, float(ratio.max()))
    return best


class HolderWindow:
    """Rolling window of decimated swirl snapshots on the axis region.

    Keeps the last `window` snapshots of u restricted to supp zeta_1 on a
    sublattice of at most decimation x decimation points (pair cost is
    quadratic in the point count).
    """

    def __init__(self, grid: Grid, cutoffs: CutoffFamily, window: int = 10,
                 decimation: int = 64):
        self.grid = grid
        self.window = window
        radial = np.where(grid.r_centers <= 2.0 * cutoffs.r0)[0]
        if radial.size == 0:
            radial = np.array([0])
        self._ir = _decimate(radial, decimation)
        self._iz = _decimate(np.arange(grid.Nz), decimation)
        rr = grid.r_centers[self._ir]
        zz = grid.z_nodes[self._iz]
        pts = np.stack(
            [np.repeat(rr, zz.size), np.tile(zz, rr.size)], axis=1
        )
        self.points = pts
        self.snapshots: list = []

    def push(self, t: float, u: np.ndarray) -> None:
        vals = u[np.ix_(self._ir, self._iz)].ravel()
        self.snapshots.append((t, self.points, vals))
        if len(self.snapshots) > self.window:
            self.snapshots.pop(0)

    def seminorm(self) -> float:
        if len(self.snapshots) < 2:
            return math.nan
        return holder_seminorm_u(
            self.snapshots, z_period=2.0 * self.grid.domain.a
        )


def _decimate(indices: np.ndarray, cap: int) -> np.ndarray:
    if indices.size <= cap:
        return indices
    pick = np.unique(np.round(np.linspace(0, indices.size - 1, cap)).astype(int))
    return indices[pick]


# ---------------------------------------------------------------------------
# constants ledger and certificate checks
# ---------------------------------------------------------------------------


def alpha_from_initial(v0: VelocityField, derived0: DerivedFields, c_mult: float = 1.0) -> float:
    """Continuation constant built from the initial data.

    alpha = c (||v0||_H1 + ||v_phi0/sqrt(r)||_L4 + ||v_phi0/r||_L3
              + ||chi0/r||_L2), c >= 1.  Homogeneous of degree 1 in v0 and
    an upper bound of the initial H1 norm by construction.
    """
    if c_mult < 1.0:
        raise ValueError("the continuation multiplier must satisfy c >= 1")
    grid = v0.grid
    r = grid.r_centers[:, None]
    h1 = h1_norm(v0)
    l4 = weighted_integral(grid, (v0.v_phi / np.sqrt(r)) ** 4) ** 0.25
    l3 = weighted_integral(grid, np.abs(v0.v_phi / r) ** 3) ** (1.0 / 3.0)
    l2chi = math.sqrt(weighted_integral(grid, (derived0.chi / r) ** 2))
    return c_mult * (h1 + l4 + l3 + l2chi)


@dataclass
class ConstantsLedger:
    """Computable constants of the estimate chain, fixed at t = 0.

    d0 bounds |int u0|, d1 the initial L2 norm, d2 the sup of the initial
    swirl; alpha is the continuation constant; c_k_emp is the running max
    of the observed Korn ratio and nu_star_emp = nu / c_k_emp.
    """

    d0: float
    d1: float
    d2: float
    alpha: float
    c_mult: float
    nu: float
    swirl_mean0: float
    c_star_emp: float = math.nan
    c_k_emp: float = math.nan

    @property
    def nu_star_emp(self) -> float:
        if not math.isfinite(self.c_k_emp) or self.c_k_emp <= 0:
            return math.nan
        return self.nu / self.c_k_emp

    @classmethod
    def from_initial(cls, v0: VelocityField, derived0: Optional[DerivedFields] = None,
                     c_mult: float = 1.0, c_star_emp: float = math.nan) -> "ConstantsLedger":
        derived0 = derived0 if derived0 is not None else derive(v0)
        mean0 = weighted_integral(v0.grid, derived0.u)
        return cls(
            d0=abs(mean0),
            d1=l2_norm(v0),
            d2=float(np.abs(derived0.u).max()),
            alpha=alpha_from_initial(v0, derived0, c_mult),
            c_mult=c_mult,
            nu=v0.grid.domain.nu,
            swirl_mean0=mean0,
            c_star_emp=c_star_emp,
        )

    def observe(self, rec: NormRecord) -> None:
        """Fold a record into the empirical Korn constant."""
        if math.isfinite(rec.korn_ratio):
            if not math.isfinite(self.c_k_emp):
                self.c_k_emp = rec.korn_ratio
            else:
                self.c_k_emp = max(self.c_k_emp, rec.korn_ratio)


@dataclass
class InequalityCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        status = "ok  " if self.passed else "FAIL"
        return f"[{status}] {self.name:<24s} margin={self.margin:+.6e}  {self.detail}"


@dataclass
class CertificateFlags:
    checks: list

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]

    def __iter__(self):
        return iter(self.checks)

    def by_name(self, name: str) -> InequalityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


SWIRL_DRIFT_RATE_TOL = 1e-8
L2_SLACK = 1e-12


def check_inequalities(
    record: NormRecord,
    ledger: ConstantsLedger,
    t_segment_start: float = 0.0,
    l2_at_segment_start: Optional[float] = None,
) -> CertificateFlags:
    """Evaluate the monitored inequalities on one record; failures are
    report entries, never exceptions."""
    checks = []
    t = record.t

    # energy decay of the L2 norm
    margin = ledger.d1 - record.l2_v
    checks.append(
        InequalityCheck(
            "l2_below_initial",
            record.l2_v <= ledger.d1 * (1.0 + L2_SLACK) + L2_SLACK,
            margin,
            f"l2={record.l2_v:.6e} d1={ledger.d1:.6e}",
        )
    )

    # conservation of the swirl mean, as a drift rate per unit time
    drift = abs(record.swirl_mean - ledger.swirl_mean0)
    scale = abs(ledger.swirl_mean0) + L2_SLACK
    rate = drift / scale / max(t - 0.0, 1e-30) if t > 0 else 0.0
    checks.append(
        InequalityCheck(
            "swirl_mean_conserved",
            rate <= SWIRL_DRIFT_RATE_TOL,
            SWIRL_DRIFT_RATE_TOL - rate,
            f"relative drift rate {rate:.3e} per unit time",
        )
    )

    # weak-solution energy bound with c0 = c (T + 1)
    v20_sq = (record.sup_l2 + math.sqrt(record.acc_grad2)) ** 2
    lhs = v20_sq + record.acc_vr_over_r2 + record.acc_vphi_over_r2
    rhs = ledger.c_mult * (t + 1.0) * ledger.d1**2
    checks.append(
        InequalityCheck(
            "weak_energy_bound",
            lhs <= rhs + L2_SLACK,
            rhs - lhs,
            f"lhs={lhs:.6e} c0*d1^2={rhs:.6e}",
        )
    )

    # L4 bound on the angular velocity component, proof-exact pointwise form
    lhs4 = record.acc_vphi4
    rhs4 = record.sup_swirl_max**2 * record.acc_vphi_over_r2
    checks.append(
        InequalityCheck(
            "swirl_l4_bound",
            lhs4 <= rhs4 * (1.0 + 1e-12) + L2_SLACK,
            rhs4 - lhs4,
            f"acc int v_phi^4 = {lhs4:.6e} vs (max u)^2 acc ||v_phi/r||^2 = {rhs4:.6e}",
        )
    )

    # exponential decay bound with nu_1 = nu_2 = nu_star_emp / 2
    nu_star = ledger.nu_star_emp
    if math.isfinite(nu_star) and nu_star > 0:
        nu1 = 0.5 * nu_star
        l2_start = ledger.d1 if l2_at_segment_start is None else l2_at_segment_start
        rhs_decay = ledger.d0**2 / nu1 + math.exp(-nu1 * (t - t_segment_start)) * l2_start**2
        checks.append(
            InequalityCheck(
                "exp_decay_bound",
                record.l2_v**2 <= rhs_decay + L2_SLACK,
                rhs_decay - record.l2_v**2,
                f"nu_star_emp={nu_star:.6e}",
            )
        )
    else:
        checks.append(
            InequalityCheck(
                "exp_decay_bound", True, math.nan,
                "not applicable: no finite empirical Korn constant yet",
            )
        )

    # axis-smallness of the swirl Hoelder seminorm
    if math.isfinite(record.holder_u):
        thresh = HOLDER_THRESHOLD_COEFF * ledger.nu
        checks.append(
            InequalityCheck(
                "holder_threshold",
                record.holder_u <= thresh,
                thresh - record.holder_u,
                f"seminorm={record.holder_u:.6e} threshold={thresh:.6e}",
            )
        )
    else:
        checks.append(
            InequalityCheck(
                "holder_threshold", True, math.nan,
                "not applicable: no Hoelder window retained",
            )
        )

    return CertificateFlags(checks)
