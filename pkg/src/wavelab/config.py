"""TOML configuration parsing for the command-line interface.

A single file describes a system (either one of the built-in examples or
an explicit coefficient list), an optional weight matrix, and an optional
run section for the 3D solver.  See README for the schema.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter version
    import tomli as tomllib

from . import condition_h, nonlinearity as nl
from .examples import EXAMPLE_TAGS, build_example
from .radiation import SphereQuadrature
from .wave_solver import GridSpec, InitialData, RayProbe


class ConfigError(Exception):
    """Raised for malformed or inconsistent configuration input."""


@dataclass
class SystemConfig:
    tensor: nl.CoefficientTensor
    weight: condition_h.WeightMatrix | None
    c0: float | None
    tag: str | None


@dataclass
class RunConfig:
    grid: GridSpec
    data: InitialData
    t_end: float
    cadence: float
    snapshot_times: tuple = ()
    probes: tuple = ()
    quadrature: SphereQuadrature | None = None
    probe_sigmas: tuple = ()
    c0: float | None = None
    blowup_factor: float = 10.0


@dataclass
class FullConfig:
    system: SystemConfig
    run: RunConfig | None
    raw: dict = field(default_factory=dict)


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key '{key}' in [{where}]")
    return table[key]


def _build_tensor(sys_table: dict) -> SystemConfig:
    if "example" in sys_table:
        tag = sys_table["example"]
        if tag not in EXAMPLE_TAGS:
            raise ConfigError(f"unknown example tag '{tag}' (choose from {EXAMPLE_TAGS})")
        kwargs = {}
        for key in ("c0", "c1", "c2"):
            if key in sys_table:
                kwargs[key] = float(sys_table[key])
        if "c_ab" in sys_table:
            c_ab = np.asarray(sys_table["c_ab"], dtype=float)
            if c_ab.shape != (4, 4):
                raise ConfigError("c_ab must be a 4x4 table of reals")
            kwargs["c_ab"] = c_ab
        ex = build_example(tag, **kwargs)
        weight = ex.weight
        if "weight" in sys_table:
            weight = _parse_weight(sys_table["weight"], ex.tensor.n_components, ex.c0)
        return SystemConfig(ex.tensor, weight, ex.c0, tag)
    n = int(_require(sys_table, "n_components", "system"))
    entries = {}
    for row in sys_table.get("entries", []):
        try:
            key = (int(row["j"]), int(row["k"]), int(row["l"]), int(row["a"]), int(row["b"]))
            entries[key] = entries.get(key, 0.0) + float(row["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad coefficient entry {row!r}") from exc
    try:
        tensor = nl.CoefficientTensor(n, entries)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    c0 = float(sys_table["c0"]) if "c0" in sys_table else None
    weight = None
    if "weight" in sys_table:
        weight = _parse_weight(sys_table["weight"], n, c0)
    return SystemConfig(tensor, weight, c0, None)


def _parse_weight(spec, n: int, c0: float | None) -> condition_h.WeightMatrix:
    if spec == "identity":
        return condition_h.identity_weight(n)
    if spec == "diag(1,c0)":
        if n != 2 or c0 is None:
            raise ConfigError("weight 'diag(1,c0)' needs n_components = 2 and c0")
        return condition_h.constant_diagonal_weight([1.0, c0])
    if spec == "rotated_example":
        if n != 2:
            raise ConfigError("the rotated-example weight needs n_components = 2")
        return condition_h.rotated_example_weight()
    if isinstance(spec, dict):
        omegas = np.asarray(_require(spec, "omega_grid", "weight"), dtype=float)
        mats = np.asarray(_require(spec, "matrices", "weight"), dtype=float)
        if omegas.ndim != 2 or omegas.shape[1] != 3 or mats.shape != (
            len(omegas), n, n,
        ):
            raise ConfigError("weight table shapes do not match")

        def lookup(direction):
            dots = omegas @ direction.omega
            return mats[int(np.argmax(dots))]

        return condition_h.WeightMatrix(n, lookup, provenance="config table")
    raise ConfigError(f"unrecognized weight spec {spec!r}")


def _build_run(run_table: dict, n_components: int, c0: float | None) -> RunConfig:
    g = _require(run_table, "grid", "run")
    grid = GridSpec(
        float(_require(g, "L", "run.grid")),
        int(_require(g, "n", "run.grid")),
        float(g.get("cfl", 0.45)),
    )
    d = _require(run_table, "data", "run")
    kwargs = {}
    if "shape" in d:
        kwargs["shape"] = str(d["shape"])
    if "r0" in d:
        r0 = d["r0"]
        kwargs["r0"] = [float(v) for v in r0] if isinstance(r0, list) else float(r0)
    if "widths" in d:
        kwargs["widths"] = [float(v) for v in d["widths"]]
    if "degrees" in d:
        kwargs["degrees"] = [int(v) for v in d["degrees"]]
    data = InitialData(
        epsilon=float(_require(d, "epsilon", "run.data")),
        R=float(_require(d, "R", "run.data")),
        f_amps=[float(v) for v in d.get("f_amps", [0.0] * n_components)],
        g_amps=[float(v) for v in d.get("g_amps", [0.0] * n_components)],
        degree=int(d.get("degree", 4)),
        **kwargs,
    )
    if data.n_components != n_components:
        raise ConfigError("data amplitude lists do not match n_components")
    t = _require(run_table, "times", "run")
    t_end = float(_require(t, "t_end", "run.times"))
    cadence = float(t.get("cadence", 1.0))
    snaps = tuple(float(v) for v in t.get("snapshot_times", []))
    grid.validate_horizon(t_end, data.support_radius)

    probes: list[RayProbe] = []
    quad = None
    sigmas: tuple = ()
    p = run_table.get("probes", {})
    for entry in p.get("explicit", []):
        probes.append(
            RayProbe(
                float(entry["sigma"]),
                nl.SphereDirection.from_vector([float(v) for v in entry["omega"]]),
            )
        )
    if "sigmas" in p:
        q = p.get("quadrature", {"n_polar": 4, "n_azimuth": 8})
        quad = SphereQuadrature.product_gauss(
            int(q.get("n_polar", 4)), int(q.get("n_azimuth", 8))
        )
        sigmas = tuple(float(s) for s in p["sigmas"])
        for s in sigmas:
            for direction in quad.directions:
                probes.append(RayProbe(s, direction))
    return RunConfig(
        grid=grid,
        data=data,
        t_end=t_end,
        cadence=cadence,
        snapshot_times=snaps,
        probes=tuple(probes),
        quadrature=quad,
        probe_sigmas=sigmas,
        c0=float(run_table["c0"]) if "c0" in run_table else c0,
        blowup_factor=float(run_table.get("blowup_factor", 10.0)),
    )


def load_config(path: str) -> FullConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    if "system" not in raw:
        raise ConfigError("missing [system] section")
    system = _build_tensor(raw["system"])
    run = None
    if "run" in raw:
        try:
            run = _build_run(raw["run"], system.tensor.n_components, system.c0)
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"bad [run] section: {exc}") from exc
    return FullConfig(system, run, raw)
