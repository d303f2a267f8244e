"""Low-level finite-difference stencils on the cell-centered cylindrical mesh.

All operators act on (Nr, Nz) arrays.  Radial closures are expressed through
one ghost row on each side: the axis ghost encodes the parity of the field
across r = 0 (v_r, v_phi, chi are odd; v_z, p, omega are even) and the wall
ghost encodes the slip conditions at r = R:

    antimirror : v_r ghost = -interior      (v_r = 0 on the wall)
    mirror     : v_z ghost = +interior      (v_z,r = 0 on the wall)
    robin      : v_phi ghost from v_phi,r = v_phi / R, exact for linear
                 profiles, so rigid rotation satisfies the closure identically

z is handled by periodic wrap everywhere.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid

ODD = -1.0
EVEN = 1.0

#: (axis parity, wall closure) for each stored quantity
BC_VR = (ODD, "antimirror")
BC_VPHI = (ODD, "robin")
BC_VZ = (EVEN, "mirror")
BC_P = (EVEN, "mirror")
BC_OMEGA = (EVEN, "mirror")
BC_CHI = (ODD, "antimirror")


def wall_ghost_factor(wall: str, grid: Grid) -> float:
    """Multiplier g = factor * f[-1] realizing the wall closure."""
    if wall == "mirror":
        return 1.0
    if wall == "antimirror":
        return -1.0
    if wall == "robin":
        R, dr = grid.domain.R, grid.dr
        return (2.0 * R + dr) / (2.0 * R - dr)
    raise ValueError(f"unknown wall closure {wall!r}")


def pad_r(f: np.ndarray, parity: float, wall: str, grid: Grid) -> np.ndarray:
    """Attach axis and wall ghost rows, returning an (Nr+2, Nz) array."""
    gfac = wall_ghost_factor(wall, grid)
    return np.vstack([parity * f[0], f, gfac * f[-1]])


def ddz(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Periodic centered d/dz."""
    return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * grid.dz)


def d2z(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Periodic compact second derivative in z."""
    return (np.roll(f, -1, axis=1) - 2.0 * f + np.roll(f, 1, axis=1)) / grid.dz**2


def ddr(f: np.ndarray, parity: float, wall: str, grid: Grid) -> np.ndarray:
    """Centered d/dr with parity ghost at the axis and wall closure at r = R."""
    fp = pad_r(f, parity, wall, grid)
    return (fp[2:] - fp[:-2]) / (2.0 * grid.dr)


def laplacian(
    f: np.ndarray,
    parity: float,
    wall: str,
    grid: Grid,
    include_inv_r2: bool = False,
) -> np.ndarray:
    """Conservative axisymmetric Laplacian (1/r)(r f_r)_r + f_zz.

    The radial part is a flux difference over the cell faces, so the axis
    face (r = 0) carries zero weight and no 1/r singularity ever appears.
    With include_inv_r2 the zeroth-order term -f/r^2 of the vector Laplacian
    acting on v_r and v_phi is added.
    """
    fp = pad_r(f, parity, wall, grid)
    flux = grid.r_faces[:, None] * (fp[1:] - fp[:-1]) / grid.dr
    out = (flux[1:] - flux[:-1]) / (grid.r_centers[:, None] * grid.dr)
    out += d2z(f, grid)
    if include_inv_r2:
        out -= f / grid.r_centers[:, None] ** 2
    return out


def radial_face_average(f: np.ndarray, parity: float, wall: str, grid: Grid) -> np.ndarray:
    """Face-interpolated values, shape (Nr+1, Nz); face 0 is the axis."""
    fp = pad_r(f, parity, wall, grid)
    return 0.5 * (fp[1:] + fp[:-1])


def axis_value(f: np.ndarray, parity: float) -> np.ndarray:
    """Parity-consistent extrapolation of the field to r = 0, per z node.

    Odd fields vanish on the axis by definition; even fields use the
    quadratic-in-r^2 fit through the first two cell centers.
    """
    if parity == ODD:
        return np.zeros(f.shape[1])
    return (9.0 * f[0] - f[1]) / 8.0


# ---------------------------------------------------------------------------
# matrix assembly used by the projection and the implicit diffusion solves
# ---------------------------------------------------------------------------


def divergence_matrix(grid: Grid) -> np.ndarray:
    """Dense (Nr, Nr) radial part of the conservative face-form divergence.

    Row j evaluates [r_{j+1/2} U_{j+1/2} - r_{j-1/2} U_{j-1/2}] / (r_j dr)
    with U the face average of v_r.  The axis face has zero radius weight and
    the wall face flux is identically zero (slip), which makes the weighted
    column sums vanish: the discrete Gauss theorem holds exactly.
    """
    Nr, dr = grid.Nr, grid.dr
    r, rf = grid.r_centers, grid.r_faces
    D = np.zeros((Nr, Nr))
    for j in range(Nr):
        if j + 1 < Nr:
            c = rf[j + 1] / (2.0 * r[j] * dr)
            D[j, j] += c
            D[j, j + 1] += c
        if j > 0:
            c = rf[j] / (2.0 * r[j] * dr)
            D[j, j] -= c
            D[j, j - 1] -= c
    return D


def gradient_matrix(grid: Grid) -> np.ndarray:
    """Radial pressure gradient, the exact weighted adjoint -(1/r) D^T (r .).

    Interior rows agree with the centered difference to second order; the
    two closure rows are first order, which is confined to one cell at each
    end and invisible through the projection (discrete gradients are removed
    exactly).
    """
    D = divergence_matrix(grid)
    r = grid.r_centers
    return -(D.T * r[None, :] / r[:, None])


def apply_tridiag(sub: np.ndarray, dia: np.ndarray, sup: np.ndarray, f: np.ndarray) -> np.ndarray:
    """y = T f for a tridiagonal T given by its three diagonals, f is (Nr, Nz)."""
    y = dia[:, None] * f
    y[1:] += sub[1:, None] * f[:-1]
    y[:-1] += sup[:-1, None] * f[1:]
    return y


def tridiag_of(M: np.ndarray):
    """Extract (sub, dia, sup) diagonals from a tridiagonal dense matrix."""
    n = M.shape[0]
    sub = np.zeros(n)
    sup = np.zeros(n)
    sub[1:] = np.diag(M, -1)
    sup[:-1] = np.diag(M, 1)
    return sub, np.diag(M).copy(), sup


def laplacian_tridiag(grid: Grid, wall: str, include_inv_r2: bool):
    """Diagonals (sub, dia, sup) of the radial conservative Laplacian.

    The operator is symmetric under the weight r (after scaling by sqrt(r)
    it is a symmetric tridiagonal), negative semidefinite, with the rigid
    rotation profile r in its kernel for the robin closure.
    """
    Nr, dr = grid.Nr, grid.dr
    r, rf = grid.r_centers, grid.r_faces
    sub = np.zeros(Nr)
    dia = np.zeros(Nr)
    sup = np.zeros(Nr)
    for j in range(Nr):
        if j + 1 < Nr:
            c = rf[j + 1] / (r[j] * dr * dr)
            dia[j] -= c
            sup[j] += c
        else:
            c = rf[Nr] / (r[j] * dr * dr)
            dia[j] += c * (wall_ghost_factor(wall, grid) - 1.0)
        if j > 0:
            c = rf[j] / (r[j] * dr * dr)
            dia[j] -= c
            sub[j] += c
    if include_inv_r2:
        dia -= 1.0 / r**2
    return sub, dia, sup


def z_mode_symbols(grid: Grid):
    """Fourier symbols of the z stencils for the rfft modes.

    Returns (compact second derivative, centered first-derivative squared);
    the latter is the z part of the projection operator div o grad.
    """
    m = np.arange(grid.Nz // 2 + 1)
    theta = 2.0 * np.pi * m / grid.Nz
    lap_z = -(2.0 - 2.0 * np.cos(theta)) / grid.dz**2
    divgrad_z = -((np.sin(theta) / grid.dz) ** 2)
    return lap_z, divgrad_z


class TridiagFactors:
    """Cached LU factors of a family of tridiagonal systems, one per z mode.

    diag varies per mode (shape (M, Nr)); sub/sup are shared.  Solves are
    vectorized across modes and accept complex right-hand sides.  No
    pivoting: the matrices here are strictly diagonally dominant.
    """

    def __init__(self, sub: np.ndarray, diag_modes: np.ndarray, sup: np.ndarray):
        M, N = diag_modes.shape
        self.sub = sub
        self.sup = sup
        self.lower = np.zeros((M, N))
        self.dprime = np.empty((M, N))
        self.dprime[:, 0] = diag_modes[:, 0]
        for i in range(1, N):
            li = sub[i] / self.dprime[:, i - 1]
            self.lower[:, i] = li
            self.dprime[:, i] = diag_modes[:, i] - li * sup[i - 1]

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve per mode; b has shape (M, Nr) and may be complex."""
        M, N = self.dprime.shape
        y = np.array(b, dtype=np.result_type(b, float), copy=True)
        for i in range(1, N):
            y[:, i] -= self.lower[:, i] * y[:, i - 1]
        x = y
        x[:, -1] /= self.dprime[:, -1]
        for i in range(N - 2, -1, -1):
            x[:, i] = (x[:, i] - self.sup[i] * x[:, i + 1]) / self.dprime[:, i]
        return x
