"""Command-line entry point.

Subcommands
-----------
check     classify a system (null condition / weighted-cancellation / neither)
reduce    integrate the characteristic ray ODE and export the trajectory
profile   solve the forced phase-rotation ODE and run the profile iteration
simulate  run the 3D solver from a config file and export CSV/binary outputs
analyze   post-process a simulation directory (translation tables, component
          relation residual, asymptotic-amplitude ratio, trend summaries)

Exit codes: 0 success, 2 usage/config error, 3 blow-up signal,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import struct
import sys
import time

import numpy as np

from . import __version__, nonlinearity as nl
from .condition_h import WeightError, classify, diagonalize_2x2, verify_condition_H
from .config import ConfigError, load_config
from .profile_iter import ForcedODEProblem, GateError, iterate_profile, solve_forced
from .radiation import (
    SphereQuadrature,
    TranslationData,
    scattering_relation_check,
    translation_from_rays,
)
from .reduced_ode import conserved_form, integrate_reduced
from .wave_solver import (
    BlowUpSignal,
    RayProfile,
    data_norm_H,
    make_initial_snapshot,
    profile_residual,
    run as run_solver,
)

SNAPSHOT_MAGIC = b"WNL1"


def _out_dir(args) -> str:
    root = args.out or os.environ.get("WAVELAB_OUT", ".")
    os.makedirs(root, exist_ok=True)
    return root


def _write_record(path: str, record: dict, fmt: str) -> None:
    with open(path, "w") as fh:
        if fmt == "jsonl":
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        else:
            for key in sorted(record):
                fh.write(f"{key},{record[key]}\n")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: str, header: list, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _manifest(out: str, config_path: str | None, outputs: list, started: float,
              deterministic: bool, extra: dict | None = None) -> None:
    record = {
        "version": __version__,
        "config_sha256": _sha256(config_path) if config_path else None,
        "deterministic": deterministic,
        "wall_clock_s": round(time.time() - started, 3),
        "outputs": sorted(outputs),
    }
    if extra:
        record.update(extra)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    tensor, weight = cfg.system.tensor, cfg.system.weight
    null = nl.check_null_condition(tensor)
    record = {
        "classification": classify(tensor, weight),
        "null_condition": null.holds,
        "max_violation": null.max_violation,
        "witness_omega": "" if null.holds else " ".join(_fmt(v) for v in null.witness_omega),
        "witness_Y": "" if null.holds else " ".join(_fmt(v) for v in null.witness_Y),
    }
    if weight is not None:
        hres = verify_condition_H(tensor, weight)
        record["condition_H"] = hres.holds
        record["M0"] = hres.bounds.M0 if hres.holds else ""
    out = _out_dir(args)
    ext = "jsonl" if args.format == "jsonl" else "csv"
    path = os.path.join(out, f"classification.{ext}")
    _write_record(path, record, args.format)
    print(f"{record['classification']} -> {path}")
    return 0


def cmd_reduce(args) -> int:
    cfg = load_config(args.config)
    direction = nl.SphereDirection.from_vector(
        [float(v) for v in args.omega.split(",")]
    )
    v0 = [float(v) for v in args.v0.split(",")]
    traj = integrate_reduced(
        cfg.system.tensor, direction, v0, 1.0, float(np.exp(args.s_end)), args.steps
    )
    header = ["s", "t"] + [f"V_{j+1}" for j in range(cfg.system.tensor.n_components)]
    cols = [traj.s_grid, traj.t_grid] + [traj.V[:, j] for j in range(traj.V.shape[1])]
    if cfg.system.weight is not None:
        header.append("quad_form")
        cols.append(conserved_form(traj, cfg.system.weight))
    out = _out_dir(args)
    path = os.path.join(out, "reduced.csv")
    _write_csv(path, header, zip(*cols))
    print(f"wrote {path}")
    return 0


def _parse_phi(spec: str):
    """Phase-speed spec: 're:<c>' is Phi(z) = c Re(z)/2 (Lipschitz constant
    |c|/2), 'zero' is Phi = 0."""
    if spec == "zero":
        return (lambda z: 0.0), 0.0
    if spec.startswith("re:"):
        c = float(spec[3:])
        return (lambda z: c * np.real(z) / 2.0), abs(c) / 2.0
    raise ConfigError(f"unrecognized phi spec '{spec}'")


def cmd_profile(args) -> int:
    phi, c_lip = _parse_phi(args.phi)
    re0, im0 = (float(v) for v in args.z0.split(","))
    problem = ForcedODEProblem(
        Phi=phi, C0=c_lip, J=lambda t: 0.0, E0=args.e0, lam=args.lam,
        t0=args.t0, z_t0=re0 + 1j * im0,
    )
    table = solve_forced(problem, args.t_end, args.steps)
    it = iterate_profile(problem, table)
    out = _out_dir(args)
    path = os.path.join(out, "profile.csv")
    _write_csv(
        path,
        ["s", "re_z", "im_z", "re_p", "im_p", "bound_rhs"],
        zip(table.s_grid, table.z.real, table.z.imag, it.p.real, it.p.imag,
            it.error_bound),
    )
    print(f"K={problem.K:.6g} wrote {path}")
    return 0


def _write_snapshot(path: str, snap) -> None:
    n_comp = snap.u.shape[0]
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<ii2d", n_comp, snap.grid.points_per_axis,
                             snap.grid.half_width, snap.t))
        for j in range(n_comp):
            # x-fastest order: transpose so the first axis varies quickest
            fh.write(np.ascontiguousarray(snap.u[j].T).astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(snap.ut[j].T).astype("<f8").tobytes())


def read_snapshot(path: str):
    """Read back a snapshot_<t>.bin file; returns (t, L, u, ut)."""
    with open(path, "rb") as fh:
        if fh.read(4) != SNAPSHOT_MAGIC:
            raise ValueError("bad snapshot magic")
        n_comp, n, half_width, t = struct.unpack("<ii2d", fh.read(24))
        u = np.empty((n_comp, n, n, n))
        ut = np.empty_like(u)
        for j in range(n_comp):
            u[j] = np.frombuffer(fh.read(8 * n ** 3), "<f8").reshape(n, n, n).T
            ut[j] = np.frombuffer(fh.read(8 * n ** 3), "<f8").reshape(n, n, n).T
    return t, half_width, u, ut


def _export_run(out: str, result, tensor, partial: bool) -> list:
    outputs = []
    n_comp = None
    rows = []
    for rec in result.energies:
        n_comp = len(rec.E)
        row = [rec.t] + list(rec.E)
        row.append(rec.E_tilde if rec.E_tilde is not None else np.nan)
        rows.append(row)
    if rows:
        header = ["t"] + [f"E_{j+1}" for j in range(n_comp)] + ["E_tilde"]
        _write_csv(os.path.join(out, "energies.csv"), header, rows)
        outputs.append("energies.csv")
    for k, ray in enumerate(result.rays):
        vs = ray.V_array
        if vs.size == 0:
            continue
        res = np.full(len(ray.t_samples), np.nan)
        t_mid, h, _ = profile_residual(ray, tensor)
        if len(t_mid):
            hn = np.linalg.norm(h, axis=1)
            t_arr = ray.t_array
            for tm, val in zip(t_mid, hn):
                res[int(np.argmin(np.abs(t_arr - tm)))] = val
        path = os.path.join(out, f"ray_{k:03d}.csv")
        with open(path, "w") as fh:
            om = ray.omega.omega
            fh.write(f"# sigma={_fmt(ray.sigma)} omega={_fmt(om[0])} {_fmt(om[1])} {_fmt(om[2])}\n")
            fh.write(
                ",".join(["t"] + [f"V_{j+1}" for j in range(vs.shape[1])] + ["residual"]) + "\n"
            )
            for i, t in enumerate(ray.t_samples):
                vals = [t] + list(vs[i]) + [res[i]]
                fh.write(",".join(_fmt(v) for v in vals) + "\n")
        outputs.append(f"ray_{k:03d}.csv")
    for t_snap, snap in sorted(result.snapshots.items()):
        name = f"snapshot_{t_snap:g}.bin"
        _write_snapshot(os.path.join(out, name), snap)
        outputs.append(name)
    if partial:
        outputs.append("PARTIAL")
    return outputs


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if cfg.run is None:
        raise ConfigError("config has no [run] section")
    run_cfg = cfg.run
    out = _out_dir(args)
    shutil.copyfile(args.config, os.path.join(out, "config.toml"))
    started = time.time()
    snap = make_initial_snapshot(run_cfg.data, run_cfg.grid)
    try:
        result = run_solver(
            cfg.system.tensor,
            snap,
            run_cfg.t_end,
            probes=run_cfg.probes,
            cadence=run_cfg.cadence,
            snapshot_times=run_cfg.snapshot_times,
            blowup_factor=run_cfg.blowup_factor,
            c0=run_cfg.c0,
        )
    except BlowUpSignal as sig:
        outputs = (
            _export_run(out, sig.partial, cfg.system.tensor, partial=True)
            if sig.partial
            else []
        )
        _manifest(out, args.config, outputs, started, args.deterministic,
                  {"blow_up_t": sig.t, "max_ut": sig.max_ut})
        print(f"blow-up signal at t={sig.t:.4g} (max |du/dt| = {sig.max_ut:.4g})",
              file=sys.stderr)
        return 3
    outputs = _export_run(out, result, cfg.system.tensor, partial=False)
    # ray tables may hold NaN for probes that have not emerged yet; the
    # per-component energies must always be finite
    n_comp = cfg.system.tensor.n_components
    e_table = np.atleast_2d(
        np.genfromtxt(os.path.join(out, "energies.csv"), delimiter=",", skip_header=1)
    )
    if not np.all(np.isfinite(e_table[:, : 1 + n_comp])):
        _manifest(out, args.config, outputs, started, args.deterministic,
                  {"numerical_failure": "energies.csv"})
        print("non-finite values in energies.csv", file=sys.stderr)
        return 4
    _manifest(out, args.config, outputs, started, args.deterministic)
    print(f"completed t={result.t_end:g} ({result.steps} steps) -> {out}")
    return 0


def _load_rays(run_dir: str) -> list:
    rays = []
    for name in sorted(os.listdir(run_dir)):
        if not (name.startswith("ray_") and name.endswith(".csv")):
            continue
        path = os.path.join(run_dir, name)
        with open(path) as fh:
            head = fh.readline().strip()
        sig_part, om_part = head.lstrip("# ").split(" omega=")
        sigma = float(sig_part.split("=", 1)[1])
        omega = np.array([float(v) for v in om_part.split()])
        table = np.genfromtxt(path, delimiter=",", skip_header=2)
        ray = RayProfile(sigma, nl.SphereDirection.from_vector(omega))
        for row in np.atleast_2d(table):
            ray.t_samples.append(float(row[0]))
            ray.V_samples.append(np.asarray(row[1:-1]))
        rays.append(ray)
    return rays


def cmd_analyze(args) -> int:
    run_dir = args.run_dir
    manifest_path = os.path.join(run_dir, "manifest.json")
    config_path = os.path.join(run_dir, "config.toml")
    energies_path = os.path.join(run_dir, "energies.csv")
    for path in (manifest_path, config_path, energies_path):
        if not os.path.exists(path):
            print(f"missing {os.path.basename(path)} in run directory", file=sys.stderr)
            return 2
    cfg = load_config(config_path)
    run_cfg = cfg.run
    out = args.out or run_dir
    os.makedirs(out, exist_ok=True)
    started = time.time()
    outputs = []
    report: dict = {}

    energies = np.genfromtxt(energies_path, delimiter=",", skip_header=1)
    energies = np.atleast_2d(energies)
    t_col = energies[:, 0]
    n_comp = cfg.system.tensor.n_components
    half = t_col >= t_col[-1] / 2.0
    e1_tail = energies[half, 1]
    report["E1_final_half_strictly_decreasing"] = bool(np.all(np.diff(e1_tail) < 0.0))
    report["E1_initial"] = float(energies[0, 1])
    report["E1_final"] = float(energies[-1, 1])

    if n_comp == 2 and run_cfg is not None and run_cfg.c0 is not None:
        h1 = data_norm_H(run_cfg.data, run_cfg.grid, 1)
        h2 = data_norm_H(run_cfg.data, run_cfg.grid, 2)
        denom = run_cfg.data.epsilon * np.sqrt(h1 ** 2 / run_cfg.c0 + h2 ** 2)
        if denom > 0.0:
            report["asymp_ratio"] = float(energies[-1, 2] / denom)

    rays = _load_rays(run_dir)
    quad = run_cfg.quadrature if run_cfg is not None else None
    if rays and quad is not None and run_cfg.probe_sigmas:
        # keep only the product-grid rays (explicit extras are not on nodes)
        rays = rays[: len(run_cfg.probe_sigmas) * len(quad.directions)]
        t_end = rays[0].t_array[-1]
        checkpoints = [0.5 * t_end, 0.75 * t_end, t_end]
        tables = {}
        for j in range(1, n_comp + 1):
            tables[j] = translation_from_rays(rays, quad, j)
            rows = []
            for i, s in enumerate(tables[j].sigma_grid):
                for k in range(len(quad.directions)):
                    rows.append([s, k, tables[j].values[i, k]])
            name = f"translation_{j}.csv"
            _write_csv(os.path.join(out, name), ["sigma", "omega_index", "value"], rows)
            outputs.append(name)
        if n_comp == 2:
            ratios = []
            for tcp in checkpoints:
                n1 = translation_from_rays(rays, quad, 1, t=tcp).norm()
                n2 = translation_from_rays(rays, quad, 2, t=tcp).norm()
                ratios.append(n1 / n2 if n2 > 0 else np.nan)
            report["v_ratio_checkpoints"] = " ".join(_fmt(r) for r in ratios)
            report["v_ratio_decreasing"] = bool(
                all(b < a for a, b in zip(ratios, ratios[1:]))
            )
            if cfg.system.weight is not None:
                c1 = np.empty(len(quad.directions))
                c2 = np.empty(len(quad.directions))
                degenerate = 0
                for k, d in enumerate(quad.directions):
                    try:
                        diag = diagonalize_2x2(cfg.system.tensor, cfg.system.weight, d)
                        c1[k], c2[k] = diag.c_1, diag.c_2
                        degenerate += int(diag.degenerate)
                    except WeightError:
                        c1[k] = c2[k] = 0.0
                        degenerate += 1
                rep = scattering_relation_check(tables[1], tables[2], c1, c2)
                report["relation_residual"] = rep.residual
                report["relation_applicable"] = rep.applicable
                report["relation_downweighted_fraction"] = rep.downweighted_fraction
                report["relation_note"] = rep.note
                report["c1c2_source"] = "diagonalization at quadrature nodes"
                report["degenerate_directions"] = degenerate

    ext = "jsonl" if args.format == "jsonl" else "csv"
    name = f"relation_report.{ext}"
    _write_record(os.path.join(out, name), report, args.format)
    outputs.append(name)
    _manifest(out, config_path, outputs, started, deterministic=True,
              extra={"analyzed_from": os.path.abspath(run_dir)})
    print(f"analysis -> {os.path.join(out, name)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavelab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/solver threads")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
        p.add_argument("--deterministic", action="store_true",
                       help="record determinism intent in the manifest")

    p = sub.add_parser("check", help="classify a system")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", help="integrate the characteristic ray ODE")
    p.add_argument("--config", required=True, help="system config file")
    p.add_argument("--omega", required=True, help="direction, e.g. 0,0,1")
    p.add_argument("--v0", required=True, help="initial state, e.g. 0.2,0.1")
    p.add_argument("--s-end", dest="s_end", type=float, required=True)
    p.add_argument("--steps", type=int, default=2000)
    common(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("profile", help="forced phase ODE + profile iteration")
    p.add_argument("--phi", required=True, help="'re:<c>' or 'zero'")
    p.add_argument("--e0", type=float, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--t0", type=float, default=2.0)
    p.add_argument("--z0", required=True, help="initial value, e.g. 0.2,0.0")
    p.add_argument("--t-end", dest="t_end", type=float, default=1e4)
    p.add_argument("--steps", type=int, default=8000)
    common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", help="run the 3D solver")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="post-process a run directory")
    p.add_argument("--run-dir", dest="run_dir", required=True)
    common(p)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GateError as exc:
        print(f"contraction gate refused: K = {exc.K:.4g} >= 1", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:  # pragma: no cover - defensive
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
