"""Command-line front end.

Every subcommand writes its outputs (JSON reports, CSV plot data, binary
field snapshots) into an output directory together with a run manifest
that records the command, the configuration snapshot, the toolkit
version, the wall time, and the schema version of every file produced.

Exit codes: 0 success, 1 verification mismatch, 2 usage error,
3 numeric failure.  Failures emit machine-readable JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import hierarchy, rigidity, cylsim
from .gridio import ScalarField2D
from .sscalc import CommensurabilityError

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(ValueError):
    """Bad flag or config value (exit code 2)."""


# ---------------------------------------------------------------------------
# run manifest


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    wall_time: float = 0.0
    outputs: list = dc_field(default_factory=list)
    schemas: dict = dc_field(default_factory=dict)

    def add(self, path: Path, schema: Optional[str] = None) -> Path:
        self.outputs.append(str(path))
        if schema is not None:
            self.schemas[path.name] = schema
        return path

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "version": self.version,
            "wall_time": self.wall_time,
            "outputs": self.outputs,
            "schemas": self.schemas,
        }

    def write(self, out_dir: Path, started: float) -> Path:
        self.wall_time = time.monotonic() - started
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.to_json(), indent=2) + "\n")
        return path


def _out_dir(args) -> Path:
    d = os.environ.get("SSBLOW_OUT_DIR") or args.out
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# value parsing


def parse_rational(text: str):
    """'p/q' -> exact Fraction; decimal literals -> float."""
    text = text.strip()
    try:
        if "/" in text:
            return Fraction(text)
        if "." in text or "e" in text.lower():
            return float(text)
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse rational {text!r}: {exc}") from exc


def parse_config(path) -> dict:
    """key = value lines; '#' comments; values kept as strings."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        cfg[key] = value
    return cfg


def _cfg_get(cfg: dict, key: str, cast, default):
    if key not in cfg:
        return default
    try:
        return cast(cfg[key])
    except ValueError as exc:
        raise UsageError(f"config key {key!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# initial-data presets (artifact choices; recorded in the manifest)


def initial_data(preset: str, grid: cylsim.CylGrid, amplitude: float = 1.0):
    r, z = grid.mesh()
    zs = z / grid.z_len
    if preset == "swirl_bump":
        # swirl concentrated near the outer wall, modulated in z
        bump = np.exp(-((1.0 - r) / (0.25 * (1.0 - grid.r_min))) ** 2)
        u1 = amplitude * bump * np.cos(0.5 * np.pi * zs)
        om = np.zeros_like(u1)
    elif preset == "parity":
        # u1 even, omega1 odd in z: parity is preserved by the dynamics
        sr = np.sin(np.pi * (r - grid.r_min) / (1.0 - grid.r_min))
        u1 = amplitude * sr * np.cos(np.pi * zs)
        om = amplitude * sr * np.sin(np.pi * zs)
    else:
        raise UsageError(f"unknown initial-data preset {preset!r}")
    return u1, om


# ---------------------------------------------------------------------------
# subcommands


def cmd_derive(args) -> int:
    if args.depth < 1:
        raise UsageError("--depth must be >= 1")
    out = _out_dir(args)
    started = time.monotonic()
    spec = hierarchy.AnsatzSpec(mode=args.mode, depth=args.depth)
    report = hierarchy.derive_hierarchy(spec, M=args.geometric_order)
    manifest = RunManifest("derive", {
        "mode": args.mode, "depth": args.depth, "format": args.format,
        "geometric_order": args.geometric_order,
    })
    ext = "json" if args.format == "json" else "tex"
    path = manifest.add(out / f"hierarchy.{ext}", hierarchy.SCHEMA)
    path.write_text(hierarchy.emit(report, args.format))
    manifest.write(out, started)
    if not report.all_acceptable:
        bad = [v.to_json() for v in report.verdicts if not v.acceptable]
        print(json.dumps({"error": "hierarchy_mismatch", "verdicts": bad}),
              file=sys.stderr)
        return EXIT_MISMATCH
    for v in report.verdicts:
        print(f"{v.equation} order {v.order}: {v.status}"
              + (" (documented)" if v.documented and v.status != "match"
                 else ""))
    return EXIT_OK


def cmd_verify(args) -> int:
    gamma = parse_rational(args.gamma)
    if gamma <= 0:
        raise UsageError("--gamma must be positive")
    if args.kmax < 0:
        raise UsageError("--kmax must be >= 0")
    out = _out_dir(args)
    started = time.monotonic()
    decay = not args.no_decay
    rows = []
    for k in range(args.kmax + 1):
        for field in ("U", "Omega"):
            rows.append(rigidity.classify_triviality(
                gamma, k, field, decay_at_infinity=decay))
    threshold = 1.0 / float(gamma)
    payload = {
        "schema": rigidity.SCHEMA,
        "gamma": str(gamma),
        "decay_at_infinity": decay,
        "decay_threshold_k": threshold,
        "decay_threshold_note": (
            "nonnegative homogeneity degree requires k > 1/gamma"
            f" = {threshold:g}; such orders cannot decay at infinity"),
        "verdicts": [v.to_json() for v in rows],
    }
    manifest = RunManifest("verify", {
        "gamma": str(gamma), "kmax": args.kmax, "decay": decay})
    _write_json(manifest.add(out / "triviality.json", rigidity.SCHEMA),
                payload)
    manifest.write(out, started)
    print(f"{'k':>3} {'field':>6} {'degree':>10} {'coeff':>10} "
          f"{'case':>28} conclusion")
    for v in rows:
        print(f"{v.k:>3} {v.field:>6} {v.degree:>10.4f} "
              f"{v.coefficient:>10.4f} {v.case:>28} {v.conclusion}")
    return EXIT_OK


def _identity_fields(preset: str, grid: rigidity.HalfPlaneGrid,
                     epsilon: float):
    R, Z = grid.mesh()
    if preset == "compact":
        # compactly supported bump well inside the cutoff plateau
        rho2 = ((R + 5.0) ** 2 + Z ** 2) / 9.0
        inside = rho2 < 1.0
        denom = np.where(inside, 1.0 - rho2, 1.0)
        U = np.where(inside, np.exp(-1.0 / denom), 0.0)
        chain = np.where(inside, U / denom ** 2, 0.0)
        dU = (-2.0 * (R + 5.0) / 9.0 * chain, -2.0 * Z / 9.0 * chain)
    elif preset == "gaussian":
        U = np.exp(-((R + 4.0) ** 2 + Z ** 2) / 8.0)
        dU = (-2.0 * (R + 4.0) / 8.0 * U, -2.0 * Z / 8.0 * U)
    else:
        raise UsageError(f"unknown identity preset {preset!r}")
    e = np.exp(-(R ** 2 + Z ** 2) / 50.0)
    Psi = R ** 2 * e + epsilon * Z * e
    dPsi = (
        (2.0 * R - R ** 2 * 2.0 * R / 50.0 - epsilon * Z * 2.0 * R / 50.0) * e,
        (-R ** 2 * 2.0 * Z / 50.0 + epsilon * (1.0 - 2.0 * Z ** 2 / 50.0)) * e,
    )
    def as_field(values):
        return ScalarField2D(values, grid.hR, grid.hZ, grid.R_min,
                             grid.Z_min)

    return as_field(U), as_field(Psi), dU, dPsi


def cmd_identity(args) -> int:
    gamma = float(parse_rational(args.gamma))
    if gamma <= 0:
        raise UsageError("--gamma must be positive")
    out = _out_dir(args)
    started = time.monotonic()
    grid = rigidity.HalfPlaneGrid()
    U, Psi, dU, dPsi = _identity_fields(args.preset, grid, args.epsilon)
    bc_tol = max(1e-8, 10.0 * abs(args.epsilon))
    result = rigidity.ibp_identity_check(U, Psi, gamma, p=args.p,
                                         rho=args.rho, dU=dU, dPsi=dPsi,
                                         bc_tol=bc_tol)
    payload = result.to_json()
    payload["preset"] = args.preset
    payload["epsilon"] = args.epsilon
    payload["abs_error"] = abs(result.lhs - result.rhs)
    manifest = RunManifest("identity", {
        "preset": args.preset, "gamma": gamma, "p": args.p,
        "rho": args.rho, "epsilon": args.epsilon})
    _write_json(manifest.add(out / "identity.json", rigidity.SCHEMA), payload)
    manifest.write(out, started)
    print(f"lhs={result.lhs:.12g} rhs={result.rhs:.12g} "
          f"|lhs-rhs|={payload['abs_error']:.3e} "
          f"boundary={result.boundary_term:.3e}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg_raw = parse_config(args.config) if args.config else {}
    nr = _cfg_get(cfg_raw, "nr", int, 65)
    nz = _cfg_get(cfg_raw, "nz", int, 128)
    r_min = _cfg_get(cfg_raw, "r_min", float, 0.5)
    z_len = _cfg_get(cfg_raw, "z_len", float, 1.0)
    z_bc = cfg_raw.get("z_bc", "periodic")
    t_end = _cfg_get(cfg_raw, "t_end", float, 0.5)
    dt_cfg = _cfg_get(cfg_raw, "dt", float, 0.0)
    cfl = _cfg_get(cfg_raw, "cfl", float, 0.4)
    cadence = _cfg_get(cfg_raw, "cadence", int, 10)
    snapshots = _cfg_get(cfg_raw, "snapshot_every", int, 0)
    preset = cfg_raw.get("preset", "swirl_bump")
    amplitude = _cfg_get(cfg_raw, "amplitude", float, 1.0)
    if t_end <= 0 or cadence < 1 or cfl <= 0:
        raise UsageError("need t_end > 0, cadence >= 1, cfl > 0")

    out = _out_dir(args)
    started = time.monotonic()
    grid = cylsim.CylGrid(nr, nz, r_min, z_len, z_bc)
    u1, om = initial_data(preset, grid, amplitude)
    solver = cylsim.PoissonSolver(grid)
    state = cylsim.CylState(u1, om, solver.solve(om), 0.0)
    series = cylsim.BlowupSeries()
    series.append_sample(state, grid)

    manifest = RunManifest("simulate", {
        "nr": nr, "nz": nz, "r_min": r_min, "z_len": z_len, "z_bc": z_bc,
        "t_end": t_end, "dt": dt_cfg, "cfl": cfl, "cadence": cadence,
        "snapshot_every": snapshots, "preset": preset,
        "amplitude": amplitude,
        "preset_note": "initial data is an artifact choice, not prescribed",
    })
    hmin = min(grid.hr, grid.hz)
    istep = 0
    nsnap = 0
    while state.t < t_end - 1e-12:
        if dt_cfg > 0:
            dt = dt_cfg
        else:
            ur, uz = cylsim.reconstruct_velocity(state.psi1, grid)
            # floor the speed at the swirl amplitude so quiescent
            # meridional starts still take resolved steps
            vmax = max(float(np.max(np.abs(ur))), float(np.max(np.abs(uz))),
                       float(np.max(np.abs(state.u1))), 1e-3)
            dt = 0.9 * cfl * hmin / vmax
        dt = min(dt, t_end - state.t)
        state = cylsim.step(state, dt, grid, solver=solver, cfl=cfl)
        istep += 1
        if istep % cadence == 0 or state.t >= t_end - 1e-12:
            series.append_sample(state, grid)
        if snapshots and istep % snapshots == 0:
            nsnap += 1
            for name, vals in (("u1", state.u1), ("omega1", state.omega1),
                               ("psi1", state.psi1)):
                path = manifest.add(out / f"{name}_{nsnap:04d}.bin", "grid/bin")
                grid.field(vals).to_binary(path)
    for name, vals in (("u1", state.u1), ("omega1", state.omega1),
                       ("psi1", state.psi1)):
        path = manifest.add(out / f"{name}_final.bin", "grid/bin")
        grid.field(vals).to_binary(path)
    series.to_csv(manifest.add(out / "series.csv", "series/csv"))
    manifest.write(out, started)
    print(f"simulated to t={state.t:.6g} in {istep} steps; "
          f"max|omega1|={series.max_omega1[-1]:.6g}")
    return EXIT_OK


def _load_series(path) -> cylsim.BlowupSeries:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 8:
        raise UsageError(f"{path}: expected 8 columns")
    s = cylsim.BlowupSeries()
    s.t = list(rows[:, 0])
    s.max_omega1 = list(rows[:, 1])
    s.max_u1 = list(rows[:, 2])
    s.delta = list(rows[:, 3])
    s.box = [tuple(r) for r in rows[:, 4:8]]
    return s


def cmd_fit(args) -> int:
    out = _out_dir(args)
    started = time.monotonic()
    series = _load_series(args.series)
    fit = cylsim.track_blowup(series, rate=args.rate)
    payload = {
        "schema": rigidity.SCHEMA,
        "T_fit": fit.T_fit,
        "gamma_fit": fit.gamma_fit,
        "amplitude": fit.amplitude,
        "window": fit.window.to_json(),
    }
    manifest = RunManifest("fit", {"series": str(args.series),
                                   "rate": args.rate})
    _write_json(manifest.add(out / "fit.json", rigidity.SCHEMA), payload)
    ts = np.asarray(series.t)
    _write_csv(manifest.add(out / "fit_curve.csv"), "t,max_omega1,model",
               zip(ts, series.max_omega1,
                   fit.amplitude * (fit.T_fit - ts) ** (-args.rate)))
    manifest.write(out, started)
    print(f"T_fit={fit.T_fit:.9g} gamma_fit={fit.gamma_fit:.6g} "
          f"window={fit.window.tag}")
    return EXIT_OK


def cmd_demo_1d(args) -> int:
    if args.n < 8:
        raise UsageError("--n must be >= 8")
    out = _out_dir(args)
    started = time.monotonic()
    t_end = args.t_end if args.t_end is not None else \
        (1.0 if args.bc == "periodic" else 0.05)
    report = cylsim.demo_1d(args.bc, args.n, t_end, amplitude=args.amplitude)
    manifest = RunManifest("demo-1d", {
        "bc": args.bc, "n": args.n, "t_end": t_end,
        "amplitude": args.amplitude})
    report.to_csv(manifest.add(out / "demo1d.csv", "demo1d/csv"))
    _write_json(manifest.add(out / "demo1d.json"), {
        "bc": report.bc, "n": report.n,
        "blowup_suspected": report.blowup_suspected,
        "crossing_time": report.crossing_time,
        "aborted": report.aborted,
        "max_gradient": float(np.max(report.max_ux)) if len(report.max_ux)
        else None,
    })
    manifest.write(out, started)
    print(f"bc={report.bc} n={report.n} "
          f"max|u_x|={np.max(report.max_ux):.6g} "
          f"blowup_suspected={report.blowup_suspected}"
          + (f" crossing_time={report.crossing_time:.6g}"
             if report.crossing_time is not None else ""))
    return EXIT_OK


def cmd_scaling(args) -> int:
    gamma = float(parse_rational(args.gamma))
    if gamma <= 0:
        raise UsageError("--gamma must be positive")
    out = _out_dir(args)
    started = time.monotonic()
    lengths = tuple(float(s) for s in args.lengths.split(",")) \
        if args.lengths else (1.0, 2.0, 4.0, 8.0)
    report = cylsim.energy_scaling(gamma, lengths)
    manifest = RunManifest("scaling", {"gamma": gamma, "lengths": lengths})
    _write_json(manifest.add(out / "scaling.json", rigidity.SCHEMA),
                report.to_json())
    _write_csv(manifest.add(out / "scaling_bounds.csv"),
               "L,swirl_pointwise_bound", report.bounds)
    manifest.write(out, started)
    print(f"gamma={gamma:g} swirl pointwise exponent="
          f"{report.swirl_pointwise_exp:.3f} ({report.swirl_decay}); "
          f"grad-psi exponent={report.gradpsi_pointwise_exp:.3f} "
          f"(sublinear={report.gradpsi_sublinear})")
    print(report.note)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ssblow",
        description="order-by-order ansatz derivation, triviality "
                    "verification, and desk-scale cylinder-slab runs")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--out", default="ssblow_out",
                        help="output directory (SSBLOW_OUT_DIR overrides)")

    sp = sub.add_parser("derive", help="derive the order-by-order hierarchy")
    sp.add_argument("--mode", choices=("single", "generalized"),
                    default="single")
    sp.add_argument("--depth", type=int, default=1)
    sp.add_argument("--format", choices=("json", "latex"), default="json")
    sp.add_argument("--geometric-order", type=int, default=None,
                    help="truncation order of the 1/r expansion")
    common(sp)
    sp.set_defaults(func=cmd_derive)

    sp = sub.add_parser("verify", help="per-order triviality classification")
    sp.add_argument("--gamma", required=True,
                    help="similarity exponent; 'p/q' is exact")
    sp.add_argument("--kmax", type=int, default=5)
    sp.add_argument("--no-decay", action="store_true",
                    help="drop the decay-at-infinity hypothesis")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("identity",
                        help="integration-by-parts identity check")
    sp.add_argument("--preset", choices=("compact", "gaussian"),
                    default="compact")
    sp.add_argument("--gamma", default="2")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--rho", type=float, default=10.0)
    sp.add_argument("--epsilon", type=float, default=0.0,
                    help="size of a deliberate boundary-condition violation")
    common(sp)
    sp.set_defaults(func=cmd_identity)

    sp = sub.add_parser("simulate", help="cylinder-slab evolution run")
    sp.add_argument("--config", help="key = value configuration file")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="blow-up time/exponent fit of a series")
    sp.add_argument("--series", required=True, help="series CSV path")
    sp.add_argument("--rate", type=float, default=1.0,
                    help="assumed amplitude blow-up rate")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("demo-1d", help="1D boundary-condition demo")
    sp.add_argument("--bc", choices=("periodic", "dirichlet"),
                    default="periodic")
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--t-end", type=float, default=None)
    sp.add_argument("--amplitude", type=float, default=None)
    common(sp)
    sp.set_defaults(func=cmd_demo_1d)

    sp = sub.add_parser("scaling", help="energy-scaling exponent report")
    sp.add_argument("--gamma", required=True)
    sp.add_argument("--lengths", default="",
                    help="comma-separated window sizes L")
    common(sp)
    sp.set_defaults(func=cmd_scaling)

    return p


def _error_json(kind: str, exc: BaseException) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        _error_json("usage", exc)
        return EXIT_USAGE
    except (cylsim.CFLViolation, cylsim.NumericalBlowup, cylsim.FitRejected,
            CommensurabilityError, rigidity.BoundaryViolation,
            FileNotFoundError) as exc:
        _error_json(type(exc).__name__, exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        _error_json("usage", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
