"""IMEX time stepping for the axisymmetric system with projection.

One step: explicit advection and geometric sources, implicit diffusion
(including the nu/r^2 zeroth-order terms, which are stiff near the axis),
the centrifugal source in discrete-gradient form, projection, slip closure.

Two structural properties are maintained exactly (to solver roundoff):

* rigid rotation, uniform axial flow and their sum are fixed points of the
  step: the diffusion operators annihilate them, the advective tendencies
  vanish, and the centrifugal force enters as a discrete gradient that the
  projection removes while the pressure absorbs it;
* the quadrature-weighted swirl mean int u dx is conserved: the swirl
  advection telescopes by construction, and the viscous residue is
  projected out along the neutral rigid-rotation direction of the swirl
  diffusion operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import stencils
from .fields import VelocityField, angular_vorticity, swirl
from .grid import weighted_integral
from .operators import OperatorWorkspace, advect, swirl_flux_advection
from .stencils import TridiagFactors

__all__ = [
    "StepConfig",
    "BlowUpError",
    "PicardError",
    "step",
    "picard_iterate",
    "cfl_dt",
    "auxiliary_residuals",
]

#: diffusion operator ingredients per component: (wall closure, has nu/r^2 term)
_DIFFUSION_KIND = {
    "v_r": ("antimirror", True),
    "v_phi": ("robin", True),
    "v_z": ("mirror", False),
}


class BlowUpError(RuntimeError):
    """Signals non-finite values in the state; the run halts, never clamps."""

    def __init__(self, t: float, detail: str = ""):
        super().__init__(f"non-finite state at t={t:.6g} {detail}".rstrip())
        self.t = t


class PicardError(RuntimeError):
    def __init__(self, iterations: int, residual: float, tol: float):
        super().__init__(
            f"picard iteration did not converge in {iterations} steps: "
            f"residual {residual:.3e} > tol {tol:.3e}"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass
class StepConfig:
    """Time-integration parameters.

    scheme "explicit-advection" evaluates the transport terms at the old
    state; "picard-implicit" iterates the linearized step with frozen
    transport velocity until the fixed point, the discrete analogue of the
    local-existence iteration.
    """

    dt: float
    cfl: float = 0.4
    picard_tol: float = 1e-10
    picard_max: int = 20
    scheme: str = "explicit-advection"
    advection_form: str = "skew"
    dt_max: float = 1.0
    explicit_diffusion: bool = False
    body_force: Optional[Callable] = None  # (grid, t) -> (f_r, f_phi, f_z)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.picard_tol <= 0 or self.picard_max < 1:
            raise ValueError("picard_tol must be > 0 and picard_max >= 1")
        if self.scheme not in ("explicit-advection", "picard-implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


def _helmholtz_factors(ws: OperatorWorkspace, kind: str, nudt: float) -> TridiagFactors:
    key = (kind, nudt)
    cached = ws.helmholtz_cache.get(key)
    if cached is not None:
        return cached
    grid = ws.grid
    wall, inv_r2 = _DIFFUSION_KIND[kind]
    sub, dia, sup = stencils.laplacian_tridiag(grid, wall, inv_r2)
    # exact symmetrization under the weight r
    sq = np.sqrt(grid.r_centers)
    off = np.zeros(grid.Nr)
    off[:-1] = grid.r_faces[1:-1] / (grid.dr**2 * sq[:-1] * sq[1:])
    lap_z, _ = stencils.z_mode_symbols(grid)
    diag_modes = 1.0 - nudt * (dia[None, :] + lap_z[:, None])
    msub = np.zeros(grid.Nr)
    msub[1:] = -nudt * off[:-1]
    msup = np.zeros(grid.Nr)
    msup[:-1] = -nudt * off[:-1]
    factors = TridiagFactors(msub, diag_modes, msup)
    ws.helmholtz_cache[key] = factors
    return factors


def _helmholtz_solve(ws: OperatorWorkspace, rhs: np.ndarray, kind: str, nudt: float) -> np.ndarray:
    """Solve (I - nu dt (Lap - [nu/r^2])) x = rhs via FFT in z, Thomas in r."""
    grid = ws.grid
    factors = _helmholtz_factors(ws, kind, nudt)
    sq = np.sqrt(grid.r_centers)
    bhat = np.fft.rfft(rhs, axis=1).T * sq[None, :]
    xhat = factors.solve(bhat) / sq[None, :]
    return np.fft.irfft(xhat.T, n=grid.Nz, axis=1)


def _swirl_potential(f_cent_zmean: np.ndarray, grid) -> np.ndarray:
    """Cumulative radial integral of the z-mean centrifugal force from r = 0."""
    q = np.empty(grid.Nr)
    q[0] = 0.25 * grid.dr * f_cent_zmean[0]  # f is odd, f(0) = 0
    dq = 0.5 * grid.dr * (f_cent_zmean[1:] + f_cent_zmean[:-1])
    q[1:] = q[0] + np.cumsum(dq)
    return q


def _rigid_projection_integrals(ws: OperatorWorkspace):
    cached = ws.helmholtz_cache.get("_rigid_norm")
    if cached is None:
        grid = ws.grid
        cached = weighted_integral(grid, np.broadcast_to(
            grid.r_centers[:, None] ** 2, grid.shape))
        ws.helmholtz_cache["_rigid_norm"] = cached
    return cached


def _step_core(v: VelocityField, nl: VelocityField, cfg: StepConfig,
               ws: OperatorWorkspace) -> VelocityField:
    """One projection step advancing v by dt with transport terms from nl."""
    grid = v.grid
    dt = cfg.dt
    nu = grid.domain.nu
    r = grid.r_centers[:, None]

    tend_r = -advect(nl, nl.v_r, *stencils.BC_VR, form=cfg.advection_form)
    tend_phi = -swirl_flux_advection(nl)
    tend_z = -advect(nl, nl.v_z, *stencils.BC_VZ, form=cfg.advection_form)
    torque = 0.0
    if cfg.body_force is not None:
        f_r, f_phi, f_z = cfg.body_force(grid, v.t + 0.5 * dt)
        tend_r = tend_r + f_r
        tend_phi = tend_phi + f_phi
        tend_z = tend_z + f_z
        torque = weighted_integral(grid, r * f_phi)

    nudt = nu * dt
    vr_mid = _helmholtz_solve(ws, v.v_r + dt * tend_r, "v_r", nudt)
    vphi_new = _helmholtz_solve(ws, v.v_phi + dt * tend_phi, "v_phi", nudt)
    vz_mid = _helmholtz_solve(ws, v.v_z + dt * tend_z, "v_z", nudt)

    # centrifugal force: the z-mean part is written as the discrete gradient
    # of its radial potential, so cyclostrophic balance is exact and the
    # pressure absorbs it; the z-fluctuating remainder acts pointwise
    f_cent = vphi_new**2 / r
    f_bar = f_cent.mean(axis=1)
    q = _swirl_potential(f_bar, grid)
    source_r = (f_cent - f_bar[:, None]) + ws.grad_r(np.broadcast_to(
        q[:, None], grid.shape).copy())
    vr_star = vr_mid + dt * source_r

    vr_new, vz_new, phi, _resid = ws.project(vr_star, vz_mid)

    # conservative fixup: return the viscous swirl-mean residue along the
    # neutral (rigid rotation) direction of the swirl diffusion operator;
    # the target includes the torque applied by any body force
    s_target = weighted_integral(grid, swirl(v)) + dt * torque
    s_post = weighted_integral(grid, r * vphi_new)
    vphi_new = vphi_new + ((s_target - s_post) / _rigid_projection_integrals(ws)) * r

    out = VelocityField(grid, vr_new, vphi_new, vz_new, phi / dt, v.t + dt)
    if not out.is_finite():
        raise BlowUpError(out.t, "(max speed before failure "
                          f"{v.max_speed():.3e})")
    return out


def step(v: VelocityField, cfg: StepConfig, ws: OperatorWorkspace | None = None) -> VelocityField:
    """Advance the state by one IMEX step of size cfg.dt."""
    if ws is None:
        ws = OperatorWorkspace(v.grid)
    if cfg.scheme == "picard-implicit":
        out, _ = picard_iterate(v, cfg, ws)
        return out
    return _step_core(v, v, cfg, ws)


def _l2_diff(a: VelocityField, b: VelocityField) -> float:
    grid = a.grid
    dens = (a.v_r - b.v_r) ** 2 + (a.v_phi - b.v_phi) ** 2 + (a.v_z - b.v_z) ** 2
    return float(np.sqrt(weighted_integral(grid, dens)))


def picard_iterate(v_old: VelocityField, cfg: StepConfig,
                   ws: OperatorWorkspace | None = None):
    """Fixed-point iteration v^{m+1} = LinearStep(transport = v^m).

    Freezes the transport velocity, solves the linear implicit step, and
    repeats until the successive L2 difference drops below picard_tol.
    Returns (state, iterations).  The contraction factor scales with dt, so
    iteration counts fall as the step is refined.
    """
    if ws is None:
        ws = OperatorWorkspace(v_old.grid)
    nl = v_old
    for m in range(1, cfg.picard_max + 1):
        candidate = _step_core(v_old, nl, cfg, ws)
        diff = _l2_diff(candidate, nl) if m > 1 else _l2_diff(candidate, v_old)
        # compare successive iterates of the map, not the time increment
        if m > 1 and diff <= cfg.picard_tol:
            return candidate, m
        if m == 1 and diff <= cfg.picard_tol:
            return candidate, 1
        nl = candidate
    raise PicardError(cfg.picard_max, diff, cfg.picard_tol)


def cfl_dt(v: VelocityField, cfg: StepConfig) -> float:
    """Advective CFL bound; the diffusive bound applies only when diffusion
    is explicit (it never is in the default scheme).  Zero velocity returns
    dt_max."""
    grid = v.grid
    bounds = [cfg.dt_max]
    vr_max = float(np.abs(v.v_r).max())
    vz_max = float(np.abs(v.v_z).max())
    if vr_max > 0:
        bounds.append(cfg.cfl * grid.dr / vr_max)
    if vz_max > 0:
        bounds.append(cfg.cfl * grid.dz / vz_max)
    if cfg.explicit_diffusion:
        bounds.append(cfg.cfl * grid.dr**2 / (2.0 * grid.domain.nu))
    return min(bounds)


def _midpoint(v_prev: VelocityField, v_next: VelocityField) -> VelocityField:
    return VelocityField(
        v_prev.grid,
        0.5 * (v_prev.v_r + v_next.v_r),
        0.5 * (v_prev.v_phi + v_next.v_phi),
        0.5 * (v_prev.v_z + v_next.v_z),
        0.5 * (v_prev.p + v_next.p),
        0.5 * (v_prev.t + v_next.t),
    )


def auxiliary_residuals(v_prev: VelocityField, v_next: VelocityField, dt: float):
    """L2 residuals of the chi and omega evolution equations between states.

    Both quantities are derived from the primitive solution; the residuals
    verify the internal consistency of the formulation (they are pure
    truncation, O(h^2 + dt), for solutions of the primitive step).

    chi equation:   chi_t + v.grad chi - (v_r/r) chi - nu (Lap - 1/r^2) chi
                    = 2 v_phi v_phi,z / r,  chi = 0 at the wall
    omega equation: omega_t + v.grad omega + (2 v_r/r) omega - nu Lap omega
                    - (2 nu / r) omega_r = 0,  omega_r = 0 at the wall
    """
    grid = v_prev.grid
    nu = grid.domain.nu
    r = grid.r_centers[:, None]
    vm = _midpoint(v_prev, v_next)

    chi_p = angular_vorticity(v_prev)
    chi_n = angular_vorticity(v_next)
    chi_m = 0.5 * (chi_p + chi_n)
    res_chi = (chi_n - chi_p) / dt
    res_chi += advect(vm, chi_m, *stencils.BC_CHI, form="centered")
    res_chi -= (vm.v_r / r) * chi_m
    res_chi -= nu * stencils.laplacian(chi_m, *stencils.BC_CHI, grid, include_inv_r2=True)
    res_chi -= 2.0 * vm.v_phi * stencils.ddz(vm.v_phi, grid) / r

    om_p = v_prev.v_phi / r
    om_n = v_next.v_phi / r
    om_m = 0.5 * (om_p + om_n)
    res_om = (om_n - om_p) / dt
    res_om += advect(vm, om_m, *stencils.BC_OMEGA, form="centered")
    res_om += 2.0 * (vm.v_r / r) * om_m
    res_om -= nu * stencils.laplacian(om_m, *stencils.BC_OMEGA, grid)
    res_om -= (2.0 * nu / r) * stencils.ddr(om_m, *stencils.BC_OMEGA, grid)

    chi_norm = float(np.sqrt(weighted_integral(grid, res_chi**2)))
    om_norm = float(np.sqrt(weighted_integral(grid, res_om**2)))
    return chi_norm, om_norm
