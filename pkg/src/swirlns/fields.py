"""Axisymmetric flow state (v_r, v_phi, v_z, p) and derived quantities.

Derived quantities: swirl u = r v_phi, local angular velocity omega = v_phi/r,
and the azimuthal vorticity component chi = v_r,z - v_z,r.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import stencils
from .grid import Grid

__all__ = [
    "VelocityField",
    "DerivedFields",
    "swirl",
    "omega_field",
    "angular_vorticity",
    "derive",
]


@dataclass
class VelocityField:
    """Velocity components and pressure sampled at cell centers.

    v_r and v_phi extend oddly across the axis, v_z and p evenly; the wall
    closures live in the operators (see stencils).  Instances behave as
    values: the stepper never mutates its input.
    """

    grid: Grid
    v_r: np.ndarray
    v_phi: np.ndarray
    v_z: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("v_r", "v_phi", "v_z", "p"):
            arr = getattr(self, name)
            if arr.shape != self.grid.shape:
                raise ValueError(
                    f"{name} has shape {arr.shape}, expected {self.grid.shape}"
                )

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "VelocityField":
        return cls(grid, grid.zeros(), grid.zeros(), grid.zeros(), grid.zeros(), t)

    @classmethod
    def from_components(cls, grid, v_r, v_phi, v_z, p=None, t=0.0) -> "VelocityField":
        shape = grid.shape
        def expand(c):
            return np.broadcast_to(np.asarray(c, dtype=float), shape).copy()
        return cls(
            grid,
            expand(v_r),
            expand(v_phi),
            expand(v_z),
            grid.zeros() if p is None else expand(p),
            t,
        )

    def copy(self) -> "VelocityField":
        return replace(
            self,
            v_r=self.v_r.copy(),
            v_phi=self.v_phi.copy(),
            v_z=self.v_z.copy(),
            p=self.p.copy(),
        )

    def max_speed(self) -> float:
        return float(
            max(np.abs(self.v_r).max(), np.abs(self.v_phi).max(), np.abs(self.v_z).max())
        )

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.v_r).all()
            and np.isfinite(self.v_phi).all()
            and np.isfinite(self.v_z).all()
            and np.isfinite(self.p).all()
        )


@dataclass
class DerivedFields:
    """Swirl u = r v_phi, omega = v_phi / r, and angular vorticity chi."""

    u: np.ndarray
    omega: np.ndarray
    chi: np.ndarray


def swirl(v: VelocityField) -> np.ndarray:
    """u = r v_phi.  Vanishes on the axis for regular flow (odd v_phi)."""
    return v.grid.r_centers[:, None] * v.v_phi


def omega_field(v: VelocityField) -> np.ndarray:
    """omega = v_phi / r, finite everywhere on the cell-centered mesh."""
    return v.v_phi / v.grid.r_centers[:, None]


def angular_vorticity(v: VelocityField) -> np.ndarray:
    """chi = v_r,z - v_z,r with periodic z and parity/slip radial closures."""
    dvr_dz = stencils.ddz(v.v_r, v.grid)
    dvz_dr = stencils.ddr(v.v_z, *stencils.BC_VZ, v.grid)
    return dvr_dz - dvz_dr


def derive(v: VelocityField) -> DerivedFields:
    return DerivedFields(u=swirl(v), omega=omega_field(v), chi=angular_vorticity(v))
