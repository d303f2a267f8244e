"""Axisymmetric Navier-Stokes in a periodic cylinder with slip walls,
with a regularity-certificate monitor and a continuation scheduler."""

from .grid import (
    CutoffFamily,
    CylinderDomain,
    Grid,
    build_grid,
    cutoff_eval,
    select_r0,
    weighted_integral,
)
from .fields import DerivedFields, VelocityField, angular_vorticity, derive, omega_field, swirl
from .operators import (
    OperatorWorkspace,
    ProjectionError,
    advect,
    apply_slip_bc,
    dilatation_energy,
    divergence,
    laplacian_axisym,
    project_divergence_free,
    slip_residuals,
)
from .stepper import (
    BlowUpError,
    PicardError,
    StepConfig,
    auxiliary_residuals,
    cfl_dt,
    picard_iterate,
    step,
)
from .monitor import (
    CertificateFlags,
    ConstantsLedger,
    HolderWindow,
    NormRecord,
    alpha_from_initial,
    check_inequalities,
    compute_record,
    h1_norm,
    holder_seminorm_u,
)
from .continuation import (
    CalibrationError,
    ContinuationPlan,
    SegmentReport,
    compute_T,
    estimate_c_star,
    run_segments,
)
from .oracles import (
    ExactSolution,
    bessel_swirl_mode,
    convergence_study,
    manufactured_solution,
    rigid_rotation,
    taylor_vortex,
    time_convergence_study,
    uniform_axial_flow,
)
from .snapshots import read_snapshot, write_snapshot
from .config import ConfigError, RunConfig

__version__ = "0.1.0"
