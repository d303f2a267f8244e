"""Discrete cylindrical operators, slip boundary handling, and the projection.

The projection is exact in the discrete sense: the divergence is the
conservative face form D, the pressure gradient is its exact weighted
adjoint G, and the Poisson operator is the composition D o G, solved per
periodic z Fourier mode with cached banded Cholesky factorizations.  The
two singular modes (the z mean and, for even Nz, the z Nyquist mode) are
exactly compatible because D telescopes to the wall flux, which is zero
under the slip condition; they are solved with a cached pseudoinverse.
"""

from __future__ import annotations

import numpy as np

from . import stencils
from .fields import VelocityField
from .grid import Grid, weighted_integral

__all__ = [
    "OperatorWorkspace",
    "ProjectionError",
    "laplacian_axisym",
    "advect",
    "divergence",
    "apply_slip_bc",
    "slip_residuals",
    "dilatation_energy",
    "project_divergence_free",
]


class ProjectionError(RuntimeError):
    """Raised when the pressure solve leaves a divergence above tolerance."""

    def __init__(self, residual: float, tol: float):
        super().__init__(f"projection residual {residual:.3e} exceeds tolerance {tol:.3e}")
        self.residual = residual
        self.tol = tol


def laplacian_axisym(
    f: np.ndarray,
    parity: float,
    grid: Grid,
    wall: str | None = None,
    include_inv_r2: bool = False,
) -> np.ndarray:
    """(1/r)(r f_r)_r + f_zz with parity ghosts; wall defaults to the parity mirror."""
    if wall is None:
        wall = "mirror" if parity == stencils.EVEN else "antimirror"
    return stencils.laplacian(f, parity, wall, grid, include_inv_r2)


def advect(
    v: VelocityField,
    f: np.ndarray,
    parity: float,
    wall: str,
    form: str = "skew",
) -> np.ndarray:
    """v_r f_r + v_z f_z by centered differences.

    form="skew" averages the advective form with the conservative flux form
    (product of face averages), which keeps the advection nearly energy
    neutral so the discrete energy identity is dominated by the time
    integration error rather than the spatial one.
    """
    grid = v.grid
    adv = v.v_r * stencils.ddr(f, parity, wall, grid) + v.v_z * stencils.ddz(f, grid)
    if form == "centered":
        return adv
    if form != "skew":
        raise ValueError(f"unknown advection form {form!r}")
    U = stencils.radial_face_average(v.v_r, *stencils.BC_VR, grid)
    F = stencils.radial_face_average(f, parity, wall, grid)
    flux_r = grid.r_faces[:, None] * U * F
    div_r = (flux_r[1:] - flux_r[:-1]) / (grid.r_centers[:, None] * grid.dr)
    Vf = 0.5 * (v.v_z + np.roll(v.v_z, -1, axis=1))
    Ff = 0.5 * (f + np.roll(f, -1, axis=1))
    flux_z = Vf * Ff
    div_z = (flux_z - np.roll(flux_z, 1, axis=1)) / grid.dz
    return 0.5 * (adv + div_r + div_z)


def swirl_flux_advection(v: VelocityField, quad_r: np.ndarray | None = None) -> np.ndarray:
    """Advection + geometric source of the phi momentum in swirl-flux form.

    v . grad v_phi + (v_r / r) v_phi  ==  (1/r) div(v u)  with u = r v_phi,
    discretized as a face-flux divergence normalized by the radial quadrature
    cell measure.  With this normalization the quadrature-weighted swirl mean
    of the tendency telescopes to the (zero) wall and axis fluxes, so the
    conservation law d/dt int u dx = 0 holds to machine precision.
    """
    grid = v.grid
    u = grid.r_centers[:, None] * v.v_phi
    U = stencils.radial_face_average(v.v_r, *stencils.BC_VR, grid)
    Uu = stencils.radial_face_average(u, stencils.EVEN, "mirror", grid)
    # wall closure of u is irrelevant: the wall face of U vanishes identically
    flux_r = grid.r_faces[:, None] * U * Uu
    wr = grid.radial_weights if quad_r is None else quad_r
    div_r = (flux_r[1:] - flux_r[:-1]) / (wr[:, None] * grid.r_centers[:, None])
    Vf = 0.5 * (v.v_z + np.roll(v.v_z, -1, axis=1))
    uf = 0.5 * (u + np.roll(u, -1, axis=1))
    flux_z = Vf * uf
    div_z = (flux_z - np.roll(flux_z, 1, axis=1)) / (grid.dz * grid.r_centers[:, None])
    return div_r + div_z


def divergence(v: VelocityField) -> np.ndarray:
    """Full cylindrical divergence v_r,r + v_r/r + v_z,z in conservative form.

    Zero exactly on the slip-compatible rigid motions; the weighted sum over
    the grid telescopes to zero for every field (discrete Gauss theorem).
    """
    grid = v.grid
    U = stencils.radial_face_average(v.v_r, *stencils.BC_VR, grid)
    flux = grid.r_faces[:, None] * U
    out = (flux[1:] - flux[:-1]) / (grid.r_centers[:, None] * grid.dr)
    out += stencils.ddz(v.v_z, grid)
    return out


def apply_slip_bc(v: VelocityField) -> VelocityField:
    """Return the state with the slip closures in force.

    On the cell-centered mesh no wall node is stored; the three conditions
    v_r = 0, v_z,r = 0 and v_phi,r = v_phi/R at r = R are realized through
    the ghost construction every operator uses (antimirror, mirror, robin),
    and the axis ghosts by parity.  The stored interior is left untouched.
    """
    return v


def _wall_value(f: np.ndarray) -> np.ndarray:
    """Quadratic one-sided extrapolation of a cell-centered field to r = R."""
    return (3.0 * f[-3] - 10.0 * f[-2] + 15.0 * f[-1]) / 8.0


def _wall_derivative(f: np.ndarray, dr: float) -> np.ndarray:
    """Quadratic one-sided d/dr of a cell-centered field at r = R."""
    return (f[-3] - 3.0 * f[-2] + 2.0 * f[-1]) / dr


def slip_residuals(v: VelocityField) -> dict:
    """Measured residuals of the three wall conditions, by one-sided stencils."""
    R, dr = v.grid.domain.R, v.grid.dr
    return {
        "v_r_wall": float(np.abs(_wall_value(v.v_r)).max()),
        "v_z_shear": float(np.abs(_wall_derivative(v.v_z, dr)).max()),
        "v_phi_robin": float(
            np.abs(_wall_derivative(v.v_phi, dr) - _wall_value(v.v_phi) / R).max()
        ),
    }


def dilatation_energy(v: VelocityField) -> float:
    """E(v) = || D(v) ||^2 over the cylinder, D the unhalved rate of strain.

    Axisymmetric components: D_rr = 2 v_r,r, D_phiphi = 2 v_r / r,
    D_zz = 2 v_z,z, D_rz = v_r,z + v_z,r, D_rphi = r (v_phi/r)_r,
    D_phiz = v_phi,z, off-diagonals counted twice.  Vanishes on rigid
    rotation plus uniform axial flow, the slip-compatible rigid motions.
    """
    grid = v.grid
    r = grid.r_centers[:, None]
    d_rr = 2.0 * stencils.ddr(v.v_r, *stencils.BC_VR, grid)
    d_pp = 2.0 * v.v_r / r
    d_zz = 2.0 * stencils.ddz(v.v_z, grid)
    d_rz = stencils.ddz(v.v_r, grid) + stencils.ddr(v.v_z, *stencils.BC_VZ, grid)
    omega = v.v_phi / r
    d_rp = r * stencils.ddr(omega, *stencils.BC_OMEGA, grid)
    d_pz = stencils.ddz(v.v_phi, grid)
    dens = d_rr**2 + d_pp**2 + d_zz**2 + 2.0 * (d_rz**2 + d_rp**2 + d_pz**2)
    return weighted_integral(grid, dens)


class _Band2Cholesky:
    """Vectorized Cholesky for families of symmetric pentadiagonal matrices.

    Bands are stacked along the leading (mode) axis.  Used for the per-mode
    projection operators, which are positive definite away from the singular
    modes.  Solves accept complex right-hand sides.
    """

    def __init__(self, dia: np.ndarray, off1: np.ndarray, off2: np.ndarray):
        M, N = dia.shape
        self.l0 = np.zeros((M, N))
        self.l1 = np.zeros((M, N))
        self.l2 = np.zeros((M, N))
        for j in range(N):
            s = dia[:, j].copy()
            if j >= 1:
                s -= self.l1[:, j] ** 2
            if j >= 2:
                s -= self.l2[:, j] ** 2
            self.l0[:, j] = np.sqrt(s)
            if j + 1 < N:
                t = off1[:, j].copy()
                if j >= 1:
                    t -= self.l2[:, j + 1] * self.l1[:, j]
                self.l1[:, j + 1] = t / self.l0[:, j]
            if j + 2 < N:
                self.l2[:, j + 2] = off2[:, j] / self.l0[:, j]

    def solve(self, b: np.ndarray) -> np.ndarray:
        M, N = self.l0.shape
        y = np.array(b, dtype=np.result_type(b, float), copy=True)
        for j in range(N):
            if j >= 1:
                y[:, j] -= self.l1[:, j] * y[:, j - 1]
            if j >= 2:
                y[:, j] -= self.l2[:, j] * y[:, j - 2]
            y[:, j] /= self.l0[:, j]
        for j in range(N - 1, -1, -1):
            if j + 1 < N:
                y[:, j] -= self.l1[:, j + 1] * y[:, j + 1]
            if j + 2 < N:
                y[:, j] -= self.l2[:, j + 2] * y[:, j + 2]
            y[:, j] /= self.l0[:, j]
        return y


class OperatorWorkspace:
    """Cached stencil matrices and solver state for one grid.

    Holds the radial divergence/gradient pair, the per-mode factorizations
    of the projection operator, and a cache of implicit diffusion factors
    keyed by nu*dt (see stepper).  tol is the acceptance threshold on the
    post-projection divergence, relative to the input.
    """

    def __init__(self, grid: Grid, tol: float = 1e-10):
        self.grid = grid
        self.tol = tol
        D = stencils.divergence_matrix(grid)
        G = stencils.gradient_matrix(grid)
        self.div_diags = stencils.tridiag_of(D)
        self.grad_diags = stencils.tridiag_of(G)
        sq = np.sqrt(grid.r_centers)
        T = D @ G
        Ts = T * sq[:, None] / sq[None, :]
        Ts = 0.5 * (Ts + Ts.T)
        self._sqw = sq
        _, divgrad_z = stencils.z_mode_symbols(grid)
        self._zsym = divgrad_z
        singular = np.abs(divgrad_z) < 1e-12 / grid.dz**2
        self._singular = singular
        # positive definite per-mode operators  -(T + s_m I) = (-T) + |s_m|
        dia = -np.diag(Ts)[None, :] - divgrad_z[~singular, None]
        off1 = np.broadcast_to(-np.diag(Ts, 1)[None, :], (dia.shape[0], grid.Nr - 1)).copy()
        off1 = np.concatenate([off1, np.zeros((dia.shape[0], 1))], axis=1)
        off2 = np.broadcast_to(-np.diag(Ts, 2)[None, :], (dia.shape[0], grid.Nr - 2)).copy()
        off2 = np.concatenate([off2, np.zeros((dia.shape[0], 2))], axis=1)
        self._chol = _Band2Cholesky(dia, off1, off2)
        # singular modes (z mean, z Nyquist): exactly compatible; minimum-norm
        self._pinv = np.linalg.pinv(Ts, rcond=1e-12)
        self.helmholtz_cache: dict = {}

    # -- building blocks ---------------------------------------------------

    def grad_r(self, phi: np.ndarray) -> np.ndarray:
        return stencils.apply_tridiag(*self.grad_diags, phi)

    def div_r(self, vr: np.ndarray) -> np.ndarray:
        return stencils.apply_tridiag(*self.div_diags, vr)

    def solve_poisson(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (D o G) phi = rhs; phi is defined up to the null modes."""
        grid = self.grid
        rhat = np.fft.rfft(rhs, axis=1).T  # (modes, Nr)
        rhat *= self._sqw[None, :]
        phihat = np.empty_like(rhat)
        sing = self._singular
        if sing.any():
            phihat[sing] = rhat[sing] @ self._pinv.T
        phihat[~sing] = self._chol.solve(-rhat[~sing])
        phihat /= self._sqw[None, :]
        return np.fft.irfft(phihat.T, n=grid.Nz, axis=1)

    def project(self, v_r: np.ndarray, v_z: np.ndarray):
        """Remove the discrete-gradient part of (v_r, v_z).

        Returns (v_r', v_z', phi, residual) with D(v') at the solver floor;
        phi is the velocity potential (pressure times the step size in the
        stepper's usage), mean-pinned to zero.
        """
        grid = self.grid
        rhs = self.div_r(v_r) + stencils.ddz(v_z, grid)
        phi = self.solve_poisson(rhs)
        phi -= weighted_integral(grid, phi) / grid.domain.volume
        vr_new = v_r - self.grad_r(phi)
        vz_new = v_z - stencils.ddz(phi, grid)
        resid_field = self.div_r(vr_new) + stencils.ddz(vz_new, grid)
        resid = float(np.abs(resid_field).max())
        return vr_new, vz_new, phi, resid


def project_divergence_free(
    v_star: VelocityField, workspace: OperatorWorkspace | None = None
) -> VelocityField:
    """Project onto the discretely divergence-free space (slip wall, periodic z).

    Solves the axisymmetric pressure Poisson problem with homogeneous Neumann
    wall data; the returned field carries the mean-free potential in p.
    Raises ProjectionError if the relative divergence residual exceeds the
    workspace tolerance.
    """
    ws = workspace if workspace is not None else OperatorWorkspace(v_star.grid)
    vr_new, vz_new, phi, resid = ws.project(v_star.v_r, v_star.v_z)
    din = ws.div_r(v_star.v_r) + stencils.ddz(v_star.v_z, v_star.grid)
    scale = max(float(np.abs(din).max()), v_star.max_speed() / min(ws.grid.dr, ws.grid.dz), 1e-30)
    if resid > ws.tol * scale:
        raise ProjectionError(resid / scale, ws.tol)
    out = v_star.copy()
    out.v_r = vr_new
    out.v_z = vz_new
    out.p = phi
    return out
