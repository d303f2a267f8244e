"""Command-line entry point: simulate | verify | continuation | norms.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(blow-up or projection residual); verify returns 1 when checks fail.
Outputs are deterministic: identical configurations produce byte-identical
CSV and snapshots.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .config import ConfigError, RunConfig
from .continuation import (
    CalibrationError,
    ContinuationPlan,
    compute_T,
    estimate_c_star,
    run_segments,
)
from .fields import derive
from .grid import weighted_integral
from .monitor import (
    CSV_COLUMNS,
    ConstantsLedger,
    check_inequalities,
    compute_record,
    csv_header,
    csv_row,
    h1_norm,
)
from .operators import OperatorWorkspace, ProjectionError
from .snapshots import SnapshotError, read_snapshot, write_snapshot
from .stepper import BlowUpError, PicardError, step

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def _csv_doc_lines():
    return [
        "diagnostics CSV columns, fixed order (format version 1):",
        "  " + ", ".join(CSV_COLUMNS),
        "  norms with suffix _acc are accumulated space-time norms in their",
        "  natural homogeneity; holder_u is the decimated parabolic seminorm",
        "  of the swirl on the axis region; korn_ratio is nan when the state",
        "  is identically zero.",
    ]


def _write_text(path, text):
    if path is not None:
        Path(path).write_text(text)


def run_simulate(config: RunConfig):
    """Time-march the configured initial data, recording the norm ledger.

    Returns (exit_code, artifacts): artifacts holds the csv text, records,
    ledger, flags and the final state.
    """
    grid = config.build_grid()
    v = config.initial_state(grid)
    cutoffs = config.cutoffs(grid, v)
    holder = config.holder_window_for(grid, cutoffs)
    ws = OperatorWorkspace(grid)
    step_cfg = config.step_config(v)
    nsteps = max(1, round(config.t_end / step_cfg.dt))
    from dataclasses import replace

    step_cfg = replace(step_cfg, dt=config.t_end / nsteps)

    ledger = ConstantsLedger.from_initial(v, derive(v), c_mult=config.c_mult)
    rec = compute_record(v, derive(v), cutoffs, None, holder)
    ledger.observe(rec)
    rows = [csv_header(), csv_row(rec)]
    records = [rec]
    exit_code = EXIT_OK
    failure = None
    for istep in range(nsteps):
        try:
            v = step(v, step_cfg, ws)
        except (BlowUpError, ProjectionError, PicardError) as err:
            failure = err
            exit_code = EXIT_NUMERICAL
            break
        if (istep + 1) % config.record_interval == 0 or istep == nsteps - 1:
            rec = compute_record(v, derive(v), cutoffs, rec, holder)
            ledger.observe(rec)
            records.append(rec)
            rows.append(csv_row(rec))

    flags = check_inequalities(records[-1], ledger)
    csv_text = "\n".join(rows) + "\n"

    summary = []
    summary.extend(_csv_doc_lines())
    summary.append("")
    summary.append(
        f"run: ic={config.ic or config.snapshot_in} grid={config.Nr}x{config.Nz} "
        f"nu={config.nu} dt={step_cfg.dt!r} steps={nsteps}"
    )
    summary.append(
        f"constants: d0={ledger.d0!r} d1={ledger.d1!r} d2={ledger.d2!r} "
        f"alpha={ledger.alpha!r} c_k_emp={ledger.c_k_emp!r}"
    )
    if failure is not None:
        summary.append(f"NUMERICAL FAILURE: {failure}")
        summary.append("partial artifacts preserved")
    summary.append("certificate flags at final record:")
    summary.extend("  " + line for line in flags.lines())
    report = "\n".join(summary) + "\n"

    if config.out_csv:
        Path(config.out_csv).write_text(csv_text)
    if config.out_snapshot:
        write_snapshot(config.out_snapshot, v)
    _write_text(config.out_report, report)

    artifacts = {
        "csv": csv_text,
        "records": records,
        "ledger": ledger,
        "flags": flags,
        "state": v,
        "report": report,
        "failure": failure,
    }
    return exit_code, artifacts


def run_verify(config: RunConfig):
    results = verify_mod.run_suite(
        Nr=config.Nr, Nz=config.Nz, R=config.R, a=config.a, nu=config.nu
    )
    text = verify_mod.format_results(results)
    _write_text(config.out_report, text + "\n")
    code = EXIT_OK if all(r.passed for r in results) else EXIT_CHECKS_FAILED
    return code, {"results": results, "report": text}


def run_continuation(config: RunConfig):
    """Compute alpha and T, march the segments, and emit the certificate."""
    grid = config.build_grid()
    v0 = config.initial_state(grid)
    cutoffs = config.cutoffs(grid, v0)
    ws = OperatorWorkspace(grid)
    step_cfg = config.step_config(v0)
    ledger = ConstantsLedger.from_initial(v0, derive(v0), c_mult=config.c_mult)
    alpha = ledger.alpha

    calibrated = False
    if config.c_star is not None:
        c_star = config.c_star
    else:
        # self-calibration: record the H1 trajectory of this very initial
        # data over the simulate horizon, then take the smallest admissible
        # constant (bounded below by the configured floor)
        times, h1s = [0.0], [h1_norm(v0)]
        v = v0
        ncal = max(10, round(config.t_end / step_cfg.dt))
        from dataclasses import replace

        cal_cfg = replace(step_cfg, dt=config.t_end / ncal)
        try:
            for _ in range(ncal):
                v = step(v, cal_cfg, ws)
                times.append(v.t)
                h1s.append(h1_norm(v))
            c_star = estimate_c_star([(alpha, np.asarray(times), np.asarray(h1s))])
            calibrated = True
        except (BlowUpError, ProjectionError) as err:
            return EXIT_NUMERICAL, {"failure": err}
        except CalibrationError as err:
            return EXIT_CHECKS_FAILED, {"failure": err}

    T_seg = compute_T(alpha, c_star, T_max=config.T_max)
    plan = ContinuationPlan(alpha=alpha, c_star=c_star, T_seg=T_seg, K=config.segments)
    holder = config.holder_window_for(grid, cutoffs)
    reports, v_final, records = run_segments(
        v0, plan, step_cfg, cutoffs, ws,
        record_interval=config.record_interval, holder_window=holder,
    )
    for rec in records:
        ledger.observe(rec)
    ledger.c_star_emp = c_star if calibrated else math.nan
    flags = check_inequalities(records[-1], ledger)

    lines = ["continuation certificate"]
    lines.append(
        f"plan: alpha={alpha!r} c_star={c_star!r}"
        f"{' (calibrated)' if calibrated else ' (configured)'} "
        f"T_seg={T_seg!r} K={plan.K} total_time={plan.total_time!r}"
    )
    lines.append(
        f"smallness: c_star*sqrt(T)*alpha = {c_star * math.sqrt(T_seg) * alpha!r} (<= 1)"
    )
    lines.append(
        f"constants: d0={ledger.d0!r} d1={ledger.d1!r} d2={ledger.d2!r} "
        f"c_k_emp={ledger.c_k_emp!r} nu_star_emp={ledger.nu_star_emp!r}"
    )
    lines.append("segment reports:")
    lines.extend("  " + rep.line() for rep in reports)
    all_passed = all(rep.passed for rep in reports)
    lines.append(f"H1 boundary checks: {'all passed' if all_passed else 'FAILURES (observational)'}")
    lines.append("certificate flags at final record:")
    lines.extend("  " + line for line in flags.lines())
    lines.extend(_csv_doc_lines())
    report = "\n".join(lines) + "\n"

    if config.out_csv:
        rows = [csv_header()] + [csv_row(r) for r in records]
        Path(config.out_csv).write_text("\n".join(rows) + "\n")
    if config.out_snapshot:
        write_snapshot(config.out_snapshot, v_final)
    _write_text(config.out_report, report)

    failed_numerically = any(rep.failed for rep in reports)
    code = EXIT_NUMERICAL if failed_numerically else EXIT_OK
    artifacts = {
        "plan": plan,
        "reports": reports,
        "records": records,
        "ledger": ledger,
        "flags": flags,
        "state": v_final,
        "report": report,
    }
    return code, artifacts


def run_norms(snapshot_path: str, config: RunConfig):
    """Compute the norm ledger for a stored snapshot."""
    v = read_snapshot(snapshot_path)
    cutoffs = config.cutoffs(v.grid, v)
    rec = compute_record(v, derive(v), cutoffs, None, None)
    ledger = ConstantsLedger.from_initial(v, derive(v), c_mult=config.c_mult)
    flags = check_inequalities(rec, ledger)
    text = csv_header() + "\n" + csv_row(rec) + "\n"
    if config.out_csv:
        Path(config.out_csv).write_text(text)
    return EXIT_OK, {"record": rec, "csv": text, "flags": flags}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; CLI flags override it")
    p.add_argument("--R", type=float, dest="R")
    p.add_argument("--a", type=float, dest="a")
    p.add_argument("--nu", type=float, dest="nu")
    p.add_argument("--Nr", type=int, dest="Nr")
    p.add_argument("--Nz", type=int, dest="Nz")
    p.add_argument("--dt", type=float, dest="dt")
    p.add_argument("--cfl", type=float, dest="cfl")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--scheme", choices=["explicit-advection", "picard-implicit"], dest="scheme")
    p.add_argument("--ic", dest="ic")
    p.add_argument("--ic-amplitude", type=float, dest="ic_amplitude")
    p.add_argument("--snapshot-in", dest="snapshot_in")
    p.add_argument("--record-interval", type=int, dest="record_interval")
    p.add_argument("--r0", type=float, dest="r0")
    p.add_argument("--c-mult", type=float, dest="c_mult")
    p.add_argument("--c-star", type=float, dest="c_star")
    p.add_argument("--segments", type=int, dest="segments")
    p.add_argument("--out-csv", dest="out_csv")
    p.add_argument("--out-snapshot", dest="out_snapshot")
    p.add_argument("--out-report", dest="out_report")


_CONFIG_KEYS = (
    "R", "a", "nu", "Nr", "Nz", "dt", "cfl", "t_end", "scheme", "ic",
    "ic_amplitude", "snapshot_in", "record_interval", "r0", "c_mult",
    "c_star", "segments", "out_csv", "out_snapshot", "out_report",
)


def _config_from_args(args, require_ic: bool = True) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    cfg = RunConfig.from_sources(getattr(args, "config", None), overrides)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swirlns",
        description="axisymmetric Navier-Stokes simulator with a regularity "
        "certificate monitor and continuation scheduler",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="time-march and record the norm ledger")
    _add_common(p_sim)

    p_ver = sub.add_parser("verify", help="run the built-in verification suite")
    p_ver.add_argument("--Nr", type=int, default=64)
    p_ver.add_argument("--Nz", type=int, default=64)
    p_ver.add_argument("--R", type=float, default=1.0)
    p_ver.add_argument("--a", type=float, default=1.0)
    p_ver.add_argument("--nu", type=float, default=0.5)
    p_ver.add_argument("--out-report", dest="out_report")

    p_cont = sub.add_parser("continuation", help="segmented continuation run with certificate")
    _add_common(p_cont)

    p_norms = sub.add_parser("norms", help="compute the norm ledger of a snapshot")
    p_norms.add_argument("snapshot", help="snapshot file")
    p_norms.add_argument("--r0", type=float, dest="r0")
    p_norms.add_argument("--c-mult", type=float, dest="c_mult")
    p_norms.add_argument("--out-csv", dest="out_csv")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            code, art = run_simulate(_config_from_args(args))
            sys.stdout.write(art["report"])
            return code
        if args.command == "verify":
            cfg = RunConfig(
                Nr=args.Nr, Nz=args.Nz, R=args.R, a=args.a, nu=args.nu,
                ic="zero", out_report=args.out_report,
            )
            code, art = run_verify(cfg)
            print(art["report"])
            return code
        if args.command == "continuation":
            code, art = run_continuation(_config_from_args(args))
            if "report" in art:
                sys.stdout.write(art["report"])
            elif art.get("failure") is not None:
                print(f"continuation failed: {art['failure']}", file=sys.stderr)
            return code
        if args.command == "norms":
            cfg = RunConfig(
                ic="zero",
                r0=getattr(args, "r0", None),
                c_mult=getattr(args, "c_mult", None) or 1.0,
                out_csv=getattr(args, "out_csv", None),
            )
            code, art = run_norms(args.snapshot, cfg)
            sys.stdout.write(art["csv"])
            return code
    except (ConfigError, SnapshotError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, ProjectionError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
