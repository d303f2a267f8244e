"""Segment-by-segment continuation: uniform segment length from the
smallness condition, per-segment integration, and the returning H1 check.

The segment length satisfies c_star sqrt(T) alpha <= 1 with equality when
auto-computed.  Each boundary report records whether the H1 norm returned
below alpha; a failing check is observational (the run continues), since
the monitor's job is to report, not to enforce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import stencils
from .fields import VelocityField, derive
from .grid import CutoffFamily, weighted_integral
from .monitor import HolderWindow, NormRecord, compute_record, h1_norm
from .operators import OperatorWorkspace
from .stepper import BlowUpError, StepConfig, step

__all__ = [
    "ContinuationPlan",
    "SegmentReport",
    "CalibrationError",
    "compute_T",
    "run_segments",
    "estimate_c_star",
]

C_STAR_FLOOR = 1e-3


def compute_T(alpha: float, c_star: float, T_max: float = 10.0) -> float:
    """Segment length T = 1 / (c_star alpha)^2, clamped to T_max.

    A zero alpha makes the smallness condition vacuous and returns T_max.
    Strictly decreasing in both arguments while unclamped.
    """
    if alpha < 0 or c_star <= 0:
        raise ValueError("alpha must be >= 0 and c_star > 0")
    if alpha == 0.0:
        return T_max
    return min(1.0 / (c_star * alpha) ** 2, T_max)


@dataclass
class ContinuationPlan:
    alpha: float
    c_star: float
    T_seg: float
    K: int

    def __post_init__(self):
        if self.K < 1 or self.T_seg <= 0:
            raise ValueError("need K >= 1 segments of positive length")
        smallness = self.c_star * math.sqrt(self.T_seg) * self.alpha
        if smallness > 1.0 + 1e-9:
            raise ValueError(
                f"segment length violates the smallness condition: "
                f"c_star sqrt(T) alpha = {smallness:.6g} > 1"
            )

    @property
    def total_time(self) -> float:
        return self.K * self.T_seg


@dataclass
class SegmentReport:
    k: int
    t_start: float
    t_end: float
    h1_at_boundary: float
    passed: bool
    w21_proxy: float
    failed: bool = False
    fail_time: float = math.nan

    def line(self) -> str:
        status = "pass" if self.passed else "H1>alpha"
        if self.failed:
            status = f"blow-up at t={self.fail_time:.6g}"
        return (
            f"segment {self.k:3d}  [{self.t_start:.6g}, {self.t_end:.6g}]  "
            f"H1(kT)={self.h1_at_boundary:.9e}  w21~{self.w21_proxy:.3e}  {status}"
        )


def _second_difference_proxy(v: VelocityField) -> float:
    """Accumulandum for the second-derivative part of the parabolic norm."""
    grid = v.grid
    total = 0.0
    for name, bc in (("v_r", stencils.BC_VR), ("v_phi", stencils.BC_VPHI),
                     ("v_z", stencils.BC_VZ)):
        f = getattr(v, name)
        fp = stencils.pad_r(f, bc[0], bc[1], grid)
        frr = (fp[2:] - 2.0 * f + fp[:-2]) / grid.dr**2
        fzz = stencils.d2z(f, grid)
        total += weighted_integral(grid, frr**2 + fzz**2)
    return total


def _segment_steps(T_seg: float, dt_target: float) -> int:
    return max(1, math.ceil(T_seg / dt_target - 1e-12))


def run_segments(
    v0: VelocityField,
    plan: ContinuationPlan,
    step_cfg: StepConfig,
    cutoffs: CutoffFamily,
    workspace: Optional[OperatorWorkspace] = None,
    record_interval: int = 10,
    holder_window: Optional[HolderWindow] = None,
):
    """March K segments of length T_seg, verifying the H1 bound at each
    boundary.

    The time step divides the segment exactly (dt = T_seg / n with n chosen
    from the configured dt), so chaining K segments reproduces a monolithic
    run with the identical dt sequence.  Space-time accumulators of the
    norm ledger reset at segment boundaries; pointwise-in-time quantities
    persist.  Returns (reports, final_state, records).
    """
    ws = workspace if workspace is not None else OperatorWorkspace(v0.grid)
    n = _segment_steps(plan.T_seg, step_cfg.dt)
    dt = plan.T_seg / n
    cfg = StepConfig(
        dt=dt,
        cfl=step_cfg.cfl,
        picard_tol=step_cfg.picard_tol,
        picard_max=step_cfg.picard_max,
        scheme=step_cfg.scheme,
        advection_form=step_cfg.advection_form,
        dt_max=step_cfg.dt_max,
        body_force=step_cfg.body_force,
    )

    v = v0
    reports = []
    records = []
    rec = compute_record(v, derive(v), cutoffs, None, holder_window)
    records.append(rec)
    for k in range(plan.K):
        t_start = v.t
        rec = rec.reset_accumulators()
        w21 = 0.0
        failed = False
        fail_time = math.nan
        for istep in range(n):
            try:
                v_next = step(v, cfg, ws)
            except BlowUpError as err:
                failed = True
                fail_time = err.t
                break
            dv = (
                (v_next.v_r - v.v_r) ** 2
                + (v_next.v_phi - v.v_phi) ** 2
                + (v_next.v_z - v.v_z) ** 2
            )
            vt_sq = weighted_integral(v.grid, dv) / dt**2
            w21 += dt * (vt_sq + _second_difference_proxy(v_next))
            v = v_next
            if (istep + 1) % record_interval == 0 or istep == n - 1:
                rec = compute_record(v, derive(v), cutoffs, rec, holder_window)
                records.append(rec)
        h1 = h1_norm(v)
        reports.append(
            SegmentReport(
                k=k,
                t_start=t_start,
                t_end=v.t,
                h1_at_boundary=h1,
                passed=(not failed) and h1 <= plan.alpha * (1.0 + 1e-12),
                w21_proxy=w21,
                failed=failed,
                fail_time=fail_time,
            )
        )
        if failed:
            break
    return reports, v, records


class CalibrationError(RuntimeError):
    def __init__(self, growth):
        msg = ", ".join(f"max H1/alpha = {g:.4g}" for g in growth)
        super().__init__(f"no candidate constant satisfies the boundary bound ({msg})")
        self.growth = growth


def estimate_c_star(
    calibrations,
    floor: float = C_STAR_FLOOR,
    c_max: float = 1e3,
    candidates: int = 241,
):
    """Smallest constant c such that segments of length 1/(c alpha)^2 keep
    the boundary H1 norm below alpha on every calibration run.

    calibrations: sequence of (alpha, times, h1_values) trajectories.  The
    candidate grid is log-spaced on [floor, c_max]; for decaying data every
    candidate passes and the floor is returned.  Raises CalibrationError
    when no candidate passes, reporting the observed alpha growth.
    """
    if len(calibrations) == 0:
        raise ValueError("need at least one calibration trajectory")
    grid_c = np.exp(np.linspace(math.log(floor), math.log(c_max), candidates))

    def passes(c):
        for alpha, times, h1s in calibrations:
            if alpha == 0.0:
                continue
            T = 1.0 / (c * alpha) ** 2
            bounds = np.arange(T, times[-1] + 1e-12, T)
            if bounds.size == 0:
                continue
            h1_at = np.interp(bounds, times, h1s)
            if np.any(h1_at > alpha * (1.0 + 1e-9)):
                return False
        return True

    for c in grid_c:
        if passes(c):
            return float(c)
    growth = [
        float(np.max(h1s) / alpha) if alpha > 0 else math.inf
        for alpha, _, h1s in calibrations
    ]
    raise CalibrationError(growth)
