"""Run configuration: defaults, JSON config files, and CLI overrides.

Precedence: command line > config file > defaults.  Initial data comes
from exactly one source, either a named exact solution with an amplitude
or a snapshot path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import oracles
from .fields import VelocityField, derive
from .grid import (
    CutoffFamily,
    CylinderDomain,
    Grid,
    build_grid,
    select_r0,
)
from .monitor import HolderWindow, holder_seminorm_u
from .snapshots import read_snapshot
from .stepper import StepConfig

__all__ = ["RunConfig", "ConfigError", "INITIAL_CONDITIONS"]

INITIAL_CONDITIONS = (
    "zero",
    "rigid-rotation",
    "uniform-axial",
    "bessel-swirl",
    "test-vortex",
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # domain
    R: float = 1.0
    a: float = 1.0
    nu: float = 0.5
    # grid
    Nr: int = 64
    Nz: int = 64
    # time
    dt: Optional[float] = None  # None: derive from the CFL target at t = 0
    cfl: float = 0.4
    t_end: float = 1.0
    scheme: str = "explicit-advection"
    advection_form: str = "skew"
    picard_tol: float = 1e-10
    picard_max: int = 20
    dt_max: float = 0.05
    # initial condition (exactly one source)
    ic: Optional[str] = None
    ic_amplitude: float = 1.0
    snapshot_in: Optional[str] = None
    # monitor
    record_interval: int = 10
    holder_window: int = 10
    holder_decimation: int = 64
    r0: Optional[float] = None  # None: select from the initial swirl
    c_mult: float = 1.0
    # continuation
    c_star: Optional[float] = None  # None: calibrate empirically
    segments: int = 4
    T_max: float = 10.0
    # outputs
    out_csv: Optional[str] = None
    out_snapshot: Optional[str] = None
    out_report: Optional[str] = None

    # -- construction --------------------------------------------------------

    @classmethod
    def from_sources(cls, file_path: Optional[str] = None, overrides: Optional[dict] = None):
        """Merge defaults, a JSON config file, and CLI overrides (in that order)."""
        values = {}
        if file_path is not None:
            try:
                values.update(json.loads(Path(file_path).read_text()))
            except FileNotFoundError as err:
                raise ConfigError(f"config file not found: {file_path}") from err
            except json.JSONDecodeError as err:
                raise ConfigError(f"config file is not valid JSON: {err}") from err
        if overrides:
            values.update({k: v for k, v in overrides.items() if v is not None})
        names = {f.name for f in fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not (self.R > 0 and self.a > 0 and self.nu > 0):
            raise ConfigError("R, a and nu must be positive")
        if self.Nr < 8 or self.Nz < 8:
            raise ConfigError("Nr and Nz must be at least 8")
        if self.t_end <= 0:
            raise ConfigError("t_end must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive when given")
        if self.c_mult < 1.0:
            raise ConfigError("c_mult must satisfy c >= 1")
        sources = (self.ic is not None) + (self.snapshot_in is not None)
        if sources != 1:
            raise ConfigError(
                "exactly one initial-condition source required: "
                "set either ic or snapshot_in"
            )
        if self.ic is not None and self.ic not in INITIAL_CONDITIONS:
            raise ConfigError(
                f"unknown initial condition {self.ic!r}; choose from {INITIAL_CONDITIONS}"
            )
        if self.c_star is not None and self.c_star <= 0:
            raise ConfigError("c_star must be positive when given")
        if self.segments < 1:
            raise ConfigError("segments must be >= 1")
        if self.record_interval < 1:
            raise ConfigError("record_interval must be >= 1")

    # -- derived objects ------------------------------------------------------

    def domain(self) -> CylinderDomain:
        return CylinderDomain(R=self.R, a=self.a, nu=self.nu)

    def build_grid(self) -> Grid:
        return build_grid(self.domain(), self.Nr, self.Nz)

    def initial_state(self, grid: Grid) -> VelocityField:
        if self.snapshot_in is not None:
            return read_snapshot(self.snapshot_in, grid)
        dom = grid.domain
        amp = self.ic_amplitude
        if self.ic == "zero":
            return VelocityField.zeros(grid)
        if self.ic == "rigid-rotation":
            return oracles.rigid_rotation(amp, dom).on_grid(grid)
        if self.ic == "uniform-axial":
            return oracles.uniform_axial_flow(amp, dom).on_grid(grid)
        if self.ic == "bessel-swirl":
            return oracles.bessel_swirl_mode(dom, amplitude=amp).on_grid(grid)
        if self.ic == "test-vortex":
            sol = oracles.taylor_vortex(
                dom, amplitude=amp * 0.2, swirl_amplitude=amp * 0.3
            )
            return sol.on_grid(grid)
        raise ConfigError(f"unknown initial condition {self.ic!r}")

    def cutoffs(self, grid: Grid, v0: VelocityField) -> CutoffFamily:
        if self.r0 is not None:
            return CutoffFamily(r0=self.r0, R=self.R)
        # estimate the initial swirl Hoelder norm from two coincident
        # snapshots (spatial pairs only) and pick the largest admissible r0
        u0 = grid.r_centers[:, None] * v0.v_phi
        probe = CutoffFamily(r0=self.R / 2.0, R=self.R)
        win = HolderWindow(grid, probe, window=2, decimation=24)
        win.push(0.0, u0)
        win.push(0.0, u0)
        try:
            hnorm = holder_seminorm_u(win.snapshots, z_period=2.0 * self.a)
        except ValueError:
            hnorm = 0.0
        r0 = select_r0(hnorm, 0.5, self.nu, self.R)
        return CutoffFamily(r0=r0, R=self.R)

    def step_config(self, v0: VelocityField) -> StepConfig:
        from .stepper import cfl_dt

        base = StepConfig(
            dt=self.dt if self.dt is not None else self.dt_max,
            cfl=self.cfl,
            picard_tol=self.picard_tol,
            picard_max=self.picard_max,
            scheme=self.scheme,
            advection_form=self.advection_form,
            dt_max=self.dt_max,
        )
        if self.dt is None:
            return replace(base, dt=cfl_dt(v0, base))
        return base

    def holder_window_for(self, grid: Grid, cutoffs: CutoffFamily) -> HolderWindow:
        return HolderWindow(
            grid, cutoffs, window=self.holder_window, decimation=self.holder_decimation
        )

    def to_json(self) -> str:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        return json.dumps(out, indent=2, sort_keys=True)
