"""Exact solutions, manufactured solutions, and independent numerical oracles.

The three exact families each isolate one structural element of the solver:
rigid rotation (geometric sources, wall Robin condition, the swirl-mean
term of the Korn functional), uniform axial flow (periodicity), and the
decaying Bessel swirl mode (axis regularity, the nu/r^2 stiffness and the
stress-free wall).  Bessel functions are evaluated in-house so the oracle
does not share code with any numerical library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from typing import Callable

import numpy as np

from .fields import VelocityField
from .grid import CylinderDomain, Grid, build_grid, weighted_integral

__all__ = [
    "ExactSolution",
    "rigid_rotation",
    "uniform_axial_flow",
    "bessel_swirl_mode",
    "manufactured_solution",
    "convergence_study",
    "time_convergence_study",
    "bessel_j0",
    "bessel_j1",
    "bessel_j1_recurrence",
    "swirl_wall_eigenvalue",
]

RESIDUAL_TOL = 1e-8
_SERIES_TERMS = 40


# ---------------------------------------------------------------------------
# Bessel functions of the first kind, orders 0 and 1
# ---------------------------------------------------------------------------


def bessel_j0(x):
    """J0 by power series, vectorized float64; accurate for |x| <= 8."""
    x = np.asarray(x, dtype=float)
    q = -(x / 2.0) ** 2
    term = np.ones_like(x)
    out = term.copy()
    for m in range(1, _SERIES_TERMS):
        term = term * q / (m * m)
        out += term
    return out


def bessel_j1(x):
    """J1 by power series, vectorized float64; accurate for |x| <= 8."""
    x = np.asarray(x, dtype=float)
    q = -(x / 2.0) ** 2
    term = x / 2.0
    out = term.copy()
    for m in range(1, _SERIES_TERMS):
        term = term * q / (m * (m + 1))
        out += term
    return out


def _j01_decimal(x: float, terms: int = 60):
    """(J0(x), J1(x)) summed in 50-digit decimal arithmetic.

    The alternating series loses ~x/2.3 digits to cancellation in float64;
    decimal summation keeps scalar evaluations accurate to ~1e-15 for the
    whole bracket used by the root finder (x <= 25).
    """
    getcontext().prec = 50
    xd = Decimal(repr(float(x)))
    half = xd / 2
    q = -(half * half)
    t0, s0 = Decimal(1), Decimal(1)
    t1, s1 = half, half
    for m in range(1, terms):
        t0 = t0 * q / (m * m)
        s0 += t0
        t1 = t1 * q / (m * (m + 1))
        s1 += t1
    return float(s0), float(s1)


def bessel_j1_recurrence(x: float) -> float:
    """J1 by Miller downward recurrence with series normalization.

    Independent of the power-series path; used to cross-check it.
    Stable because the recurrence is run downward from a high order and
    rescaled through the identity J0 + 2 (J2 + J4 + ...) = 1.
    """
    x = float(x)
    if x == 0.0:
        return 0.0
    M = int(abs(x)) + 30
    if M % 2:
        M += 1
    j_above = 0.0   # J_{n+1}
    j_n = 1e-30     # J_n, seeded at n = M
    norm = 0.0
    j1 = 0.0
    for n in range(M, 0, -1):
        j_below = (2.0 * n / x) * j_n - j_above
        if n % 2 == 0:
            norm += 2.0 * j_n
        if n == 1:
            j1 = j_n
        j_above, j_n = j_n, j_below
    norm += j_n  # j_n is now J_0
    return j1 / norm


def swirl_wall_eigenvalue(domain: CylinderDomain, tol: float = 1e-12) -> float:
    """Smallest lam > 0 with sqrt(lam) J1'(sqrt(lam) R) = J1(sqrt(lam) R) / R.

    This is the decay eigenvalue of the pure-swirl heat flow under the
    stress-free wall condition.  Found by bisection on the wall condition
    itself; the bracket [0.5, 7]/R isolates the first root.
    """
    R = domain.R

    def wall_condition(s: float) -> float:
        x = s * R
        j0, j1 = _j01_decimal(x)
        j1p = j0 - j1 / x
        return s * j1p - j1 / R

    lo, hi = 0.5 / R, 7.0 / R
    flo = wall_condition(lo)
    fhi = wall_condition(hi)
    if flo * fhi >= 0.0:
        raise RuntimeError("bisection bracket does not straddle the wall condition root")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        fm = wall_condition(mid)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    s = 0.5 * (lo + hi)
    return s * s


# ---------------------------------------------------------------------------
# Richardson-extrapolated derivatives of analytic evaluators
# ---------------------------------------------------------------------------


def _richardson(samples):
    """Extrapolate a list of central-difference estimates at h, h/2, h/4, ..."""
    table = list(samples)
    k = 1
    while len(table) > 1:
        factor = 4.0**k
        table = [
            (factor * table[i + 1] - table[i]) / (factor - 1.0)
            for i in range(len(table) - 1)
        ]
        k += 1
    return table[0]


def richardson_partial(f, args, index, h0, levels=4, order=1):
    """Partial derivative of f(*args) in argument `index` by Richardson FD.

    f maps broadcastable arrays to an array; order 1 or 2.
    """
    estimates = []
    h = h0
    for _ in range(levels):
        shifted = list(args)
        plus = list(args)
        minus = list(args)
        plus[index] = args[index] + h
        minus[index] = args[index] - h
        if order == 1:
            estimates.append((f(*plus) - f(*minus)) / (2.0 * h))
        else:
            estimates.append((f(*plus) - 2.0 * f(*args) + f(*minus)) / h**2)
        h *= 0.5
    return _richardson(estimates)


# ---------------------------------------------------------------------------
# exact solutions
# ---------------------------------------------------------------------------


@dataclass
class ExactSolution:
    """Closed-form flow state; evaluator(r, z, t) -> (v_r, v_phi, v_z, p).

    Construction verifies the governing equations (momentum only for
    unforced solutions), the divergence constraint and the wall conditions
    by Richardson-differentiated residual sampling at quasi-random points.
    """

    name: str
    domain: CylinderDomain
    evaluator: Callable
    notes: str = ""
    forced: bool = False
    validate: bool = True
    fd_scale: float = field(default=1e-2)

    def __post_init__(self):
        if self.validate:
            resid = self.max_residual()
            if resid > RESIDUAL_TOL:
                raise ValueError(
                    f"evaluator for {self.name!r} violates the governing equations: "
                    f"max residual {resid:.3e}"
                )

    # -- evaluation helpers -------------------------------------------------

    def components(self, r, z, t):
        return self.evaluator(np.asarray(r, float), np.asarray(z, float), float(t))

    def on_grid(self, grid: Grid, t: float = 0.0) -> VelocityField:
        rr = grid.r_centers[:, None] + np.zeros((1, grid.Nz))
        zz = grid.z_nodes[None, :] + np.zeros((grid.Nr, 1))
        vr, vphi, vz, p = self.components(rr, zz, t)
        return VelocityField.from_components(grid, vr, vphi, vz, p, t)

    def _component(self, i):
        return lambda r, z, t: self.evaluator(r, z, t)[i]

    def momentum_residuals(self, r, z, t, levels=4):
        """Residuals of the three momentum equations and the divergence."""
        nu = self.domain.nu
        r = np.asarray(r, float)
        z = np.asarray(z, float)
        h = self.fd_scale * self.domain.R
        ht = self.fd_scale

        def parts(i):
            f = self._component(i)
            val = f(r, z, t)
            fr = richardson_partial(f, (r, z, t), 0, h, levels)
            fz = richardson_partial(f, (r, z, t), 1, h, levels)
            frr = richardson_partial(f, (r, z, t), 0, h, levels, order=2)
            fzz = richardson_partial(f, (r, z, t), 1, h, levels, order=2)
            ft = richardson_partial(f, (r, z, t), 2, ht, levels)
            lap = frr + fr / r + fzz
            return val, fr, fz, ft, lap

        vr, vr_r, vr_z, vr_t, lap_vr = parts(0)
        vp, vp_r, vp_z, vp_t, lap_vp = parts(1)
        vz, vz_r, vz_z, vz_t, lap_vz = parts(2)
        fp = self._component(3)
        p_r = richardson_partial(fp, (r, z, t), 0, h, levels)
        p_z = richardson_partial(fp, (r, z, t), 1, h, levels)

        e_r = vr_t + vr * vr_r + vz * vr_z - vp**2 / r - nu * (lap_vr - vr / r**2) + p_r
        e_phi = vp_t + vr * vp_r + vz * vp_z + vr * vp / r - nu * (lap_vp - vp / r**2)
        e_z = vz_t + vr * vz_r + vz * vz_z - nu * lap_vz + p_z
        e_div = vr_r + vr / r + vz_z
        return e_r, e_phi, e_z, e_div

    def wall_residuals(self, z, t, levels=4):
        R = self.domain.R
        h = self.fd_scale * R
        z = np.asarray(z, float)
        rw = np.full_like(z, R)
        vr, vp, vz, _ = self.components(rw, z, t)
        dvz = richardson_partial(self._component(2), (rw, z, t), 0, h, levels)
        dvp = richardson_partial(self._component(1), (rw, z, t), 0, h, levels)
        return np.abs(vr), np.abs(dvz), np.abs(dvp - vp / R)

    def max_residual(self, n: int = 100) -> float:
        """Sup of all applicable residuals over n quasi-random sample points.

        Forced solutions are only required to satisfy the divergence
        constraint and the wall conditions; their momentum defect is the
        manufactured forcing by definition.
        """
        dom = self.domain
        idx = np.arange(1, n + 1)
        # Weyl sequence: deterministic, equidistributed
        fr = (idx * (5**0.5 - 1) / 2) % 1.0
        fz = (idx * (3**0.5 - 1)) % 1.0
        r = (0.08 + 0.84 * fr) * dom.R
        z = (-0.95 + 1.9 * fz) * dom.a
        worst = 0.0
        for ti in (0.0, 0.17, 0.31, 0.5):
            resids = self.momentum_residuals(r, z, ti)
            errs = [resids[3]] if self.forced else list(resids)
            errs.extend(self.wall_residuals(z, ti))
            worst = max(worst, max(float(np.abs(e).max()) for e in errs))
        return worst


def rigid_rotation(Omega: float, domain: CylinderDomain) -> ExactSolution:
    """v_phi = Omega r with the cyclostrophic pressure Omega^2 r^2 / 2; steady."""

    def evaluate(r, z, t):
        zero = np.zeros(np.broadcast(r, z).shape)
        return zero, Omega * r + zero, zero, 0.5 * Omega**2 * r**2 + zero

    return ExactSolution(
        name="rigid-rotation",
        domain=domain,
        evaluator=evaluate,
        notes="exact steady state; wall condition holds identically",
    )


def uniform_axial_flow(c: float, domain: CylinderDomain) -> ExactSolution:
    """v_z = c, everything else zero; exact steady state of the periodic cylinder."""

    def evaluate(r, z, t):
        zero = np.zeros(np.broadcast(r, z).shape)
        return zero, zero, c + zero, zero

    return ExactSolution(
        name="uniform-axial-flow",
        domain=domain,
        evaluator=evaluate,
        notes="translation along the axis, compatible with periodicity and slip",
    )


def _gauss_legendre_cumulative(f, r, n=64):
    """int_0^r f, vectorized over the (sorted or not) array r by 64-pt Gauss."""
    x, w = np.polynomial.legendre.leggauss(n)
    r = np.asarray(r, float)
    half = r / 2.0
    nodes = half[..., None] * (x + 1.0)
    return (half[..., None] * w * f(nodes)).sum(axis=-1)


def bessel_swirl_mode(domain: CylinderDomain, amplitude: float = 1.0) -> ExactSolution:
    """Pure-swirl decaying eigenmode v_phi = A e^(-nu lam t) J1(sqrt(lam) r).

    lam is fixed by the stress-free wall condition (see
    swirl_wall_eigenvalue); the pressure is the cyclostrophic integral of
    v_phi^2 / r.  The swirl u = r v_phi vanishes on the axis since the J1
    series has no constant term, and the mode carries zero net swirl mean.
    """
    lam = swirl_wall_eigenvalue(domain)
    s = math.sqrt(lam)
    nu = domain.nu

    def profile(r):
        return amplitude * bessel_j1(s * np.asarray(r, float))

    def pressure_radial(r):
        return _gauss_legendre_cumulative(lambda q: profile(q) ** 2 / q, r)

    def evaluate(r, z, t):
        zero = np.zeros(np.broadcast(r, z).shape)
        decay = math.exp(-nu * lam * t)
        return (
            zero,
            decay * profile(r) + zero,
            zero,
            decay**2 * pressure_radial(r) + zero,
        )

    sol = ExactSolution(
        name="bessel-swirl-mode",
        domain=domain,
        evaluator=evaluate,
        notes=f"decay rate nu*lam = {nu * lam:.12g}, lam = {lam:.12g}",
    )
    sol.decay_rate = nu * lam
    sol.eigenvalue = lam
    return sol


def taylor_vortex(
    domain: CylinderDomain,
    amplitude: float = 0.2,
    swirl_amplitude: float = 0.3,
    k_index: int = 1,
    time_factor: Callable | None = None,
    validate: bool = True,
    forced: bool = True,
) -> ExactSolution:
    """Smooth meridional cell + swirl satisfying the divergence and wall laws.

    Streamfunction h(r) = r^2 (R^2 - r^2)^3 gives v_r = A k h sin(kz) / r
    and v_z = A h' cos(kz) / r.  h is even in r with h(R) = h'(R) = h''(R)
    = 0, so v_r is odd across the axis (3D smoothness), v_r(R) = 0 and
    v_z,r(R) = 0.  The swirl profile g(r) = r (1 + (r/R)^2 - (r/R)^4 / 2)
    is odd and satisfies the wall Robin condition for every z modulation.
    Not a solution of the unforced system; used with a manufactured forcing
    or as nonlinear test data.
    """
    R, a = domain.R, domain.a
    k = k_index * math.pi / a
    s_of_t = time_factor if time_factor is not None else (lambda t: 1.0)

    def h(r):
        return r**2 * (R**2 - r**2) ** 3

    def hp(r):
        return 2.0 * r * (R**2 - r**2) ** 2 * (R**2 - 4.0 * r**2)

    def g(r):
        return r * (1.0 + (r / R) ** 2 - 0.5 * (r / R) ** 4)

    def evaluate(r, z, t):
        st = s_of_t(t)
        zero = np.zeros(np.broadcast(r, z).shape)
        vr = amplitude * k * (h(r) / r) * np.sin(k * z) * st
        vz = amplitude * (hp(r) / r) * np.cos(k * z) * st
        vphi = swirl_amplitude * g(r) * (1.0 + 0.5 * np.cos(k * z)) * st
        return vr + zero, vphi + zero, vz + zero, zero

    return ExactSolution(
        name="test-vortex",
        domain=domain,
        evaluator=evaluate,
        notes="divergence-free with slip-compatible profiles; forced family",
        forced=forced,
        validate=validate,
    )


def manufactured_solution(
    domain: CylinderDomain,
    amplitude: float = 0.1,
    swirl_amplitude: float = 0.15,
    k_index: int = 1,
    rate: float = 2.0,
    levels: int = 4,
):
    """Manufactured solution and its body force for the forced equations.

    The fields satisfy the divergence constraint and the slip conditions
    analytically; the forcing is the left-hand side of the momentum
    equations evaluated by Richardson extrapolation on the evaluator, so it
    is independent of any hand derivation.  Returns (solution, forcing)
    where forcing(grid, t) yields the three component arrays.
    """

    def s_of_t(t):
        return 1.0 + 0.5 * math.sin(rate * t)

    sol = taylor_vortex(
        domain,
        amplitude=amplitude,
        swirl_amplitude=swirl_amplitude,
        k_index=k_index,
        time_factor=s_of_t,
    )

    def forcing_at(r, z, t, lv=levels):
        e_r, e_phi, e_z, _ = sol.momentum_residuals(r, z, t, levels=lv)
        return e_r, e_phi, e_z

    # The fields are s(t) times a fixed shape, so the forcing decomposes
    # exactly as F = s'(t) V + s(t) D + s(t)^2 N with spatial templates
    # V, D, N (time derivative, linear viscous part, quadratic transport
    # part).  Extracting the templates from the Richardson oracle at three
    # times keeps the oracle authoritative while making per-step evaluation
    # cheap.
    def _coeffs(t):
        return (0.5 * rate * math.cos(rate * t), s_of_t(t), s_of_t(t) ** 2)

    _cache: dict = {}

    def _templates(grid: Grid, lv):
        key = (grid.Nr, grid.Nz, grid.domain, lv)
        got = _cache.get(key)
        if got is not None:
            return got
        rr = grid.r_centers[:, None] + np.zeros((1, grid.Nz))
        zz = grid.z_nodes[None, :] + np.zeros((grid.Nr, 1))
        ts = (0.03, 0.57, 1.1)
        M = np.array([_coeffs(t) for t in ts])
        Minv = np.linalg.inv(M)
        samples = [forcing_at(rr, zz, t, lv) for t in ts]
        templates = []
        for comp in range(3):
            stack = np.stack([smp[comp] for smp in samples])
            templates.append(np.einsum("ij,j...->i...", Minv, stack))
        _cache[key] = templates
        return templates

    def forcing(grid: Grid, t: float, lv=levels):
        templates = _templates(grid, lv)
        c = _coeffs(float(t))
        return tuple(
            c[0] * tpl[0] + c[1] * tpl[1] + c[2] * tpl[2] for tpl in templates
        )

    forcing.at_points = forcing_at
    return sol, forcing


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------


def _l2_error(v: VelocityField, sol: ExactSolution):
    exact = sol.on_grid(v.grid, v.t)
    out = {}
    for name in ("v_r", "v_phi", "v_z"):
        diff = getattr(v, name) - getattr(exact, name)
        out[name] = math.sqrt(weighted_integral(v.grid, diff**2))
    return out


def _fit_order(hs, errs):
    hs = np.asarray(hs, float)
    errs = np.asarray(errs, float)
    if np.all(errs < 1e-11):
        return None  # machine floor
    mask = errs > 0
    slope = np.polyfit(np.log(hs[mask]), np.log(errs[mask]), 1)[0]
    return float(slope)


def convergence_study(
    solution: ExactSolution,
    resolutions,
    t_end: float = 0.1,
    dt: float = 1e-4,
    forcing=None,
    scheme: str = "explicit-advection",
    dt_scaling: str = "h2",
):
    """Measure spatial convergence orders against an exact solution.

    Runs the solver at each resolution (Nz = Nr) to t_end and fits
    least-squares slopes of the per-component weighted L2 errors.  dt is
    the step at the coarsest resolution; with dt_scaling="h2" it shrinks
    like h^2 under refinement so the first-order-in-time splitting error
    refines at the same rate as the spatial error and never floors the
    measurement.  Errors at machine floor are reported with order None
    ("exact").
    """
    from .operators import OperatorWorkspace
    from .stepper import StepConfig, step

    resolutions = list(resolutions)
    if len(resolutions) < 3:
        raise ValueError("need at least 3 resolutions in geometric progression")
    errors = {"v_r": [], "v_phi": [], "v_z": []}
    hs = []
    n0 = resolutions[0]
    for n in resolutions:
        grid = build_grid(solution.domain, n, n)
        ws = OperatorWorkspace(grid)
        v = solution.on_grid(grid, 0.0)
        dt_n = dt * (n0 / n) ** 2 if dt_scaling == "h2" else dt
        nsteps = max(1, round(t_end / dt_n))
        cfg = StepConfig(dt=t_end / nsteps, scheme=scheme, body_force=forcing)
        for _ in range(nsteps):
            v = step(v, cfg, ws)
        err = _l2_error(v, solution)
        for key, val in err.items():
            errors[key].append(val)
        hs.append(grid.dr)
    orders = {key: _fit_order(hs, vals) for key, vals in errors.items()}
    monotone = {
        key: bool(np.all(np.diff(vals) < 0)) for key, vals in errors.items()
        if max(vals) > 1e-11
    }
    return {"orders": orders, "errors": errors, "h": hs, "monotone": monotone}


def time_convergence_study(
    solution: ExactSolution,
    grid: Grid,
    dts,
    t_end: float = 0.5,
    forcing=None,
    scheme: str = "explicit-advection",
):
    """Measure the time order at a fixed grid by refining dt.

    Errors are taken against the exact solution; pick dts large enough that
    the O(dt) splitting error dominates the fixed spatial floor (the study
    reports the floor estimate so the caller can confirm the separation).
    """
    from .operators import OperatorWorkspace
    from .stepper import StepConfig, step

    dts = sorted(dts, reverse=True)
    ws = OperatorWorkspace(grid)
    errs = []
    for dt in dts:
        v = solution.on_grid(grid, 0.0)
        nsteps = round(t_end / dt)
        cfg = StepConfig(dt=t_end / nsteps, scheme=scheme, body_force=forcing)
        for _ in range(nsteps):
            v = step(v, cfg, ws)
        err = _l2_error(v, solution)
        errs.append(math.sqrt(sum(e**2 for e in err.values())))
    return {"order": _fit_order(dts, errs), "errors": errs, "dts": list(dts)}
