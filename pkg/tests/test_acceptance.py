"""Acceptance gates for the whole package.

Each test states its tolerance inline.  The algebraic, ODE, and
medium-scale solver gates run live; the three long-run gates read the
cached run directories under runs/, which are produced by the
command-line interface via scripts/make_reference_runs.py and shipped
with the repository.
"""
import os
import pathlib
import subprocess
import sys
import time

import numpy as np
import pytest

from wavelab import nonlinearity as nl
from wavelab.condition_h import (
    classify,
    diagonalize_2x2,
    rotated_example_weight,
    verify_condition_H,
)
from wavelab.config import load_config
from wavelab.cli import _load_rays
from wavelab.examples import build_example
from wavelab.profile_iter import iterate_profile, solve_forced
from wavelab.radiation import (
    SphereQuadrature,
    pair_norm_H,
    probes_for_quadrature,
    radiation_field_check,
    scattering_relation_check,
    translation_from_rays,
    translation_representation,
)
from wavelab.reduced_ode import (
    XYParams,
    closed_form_XY,
    conserved_form,
    integrate_XY,
    integrate_reduced,
)
from wavelab.wave_solver import (
    GridSpec,
    InitialData,
    make_initial_snapshot,
    polynomial_bump,
    run,
)

from test_profile_iter import manufactured_problem
from test_wave_solver import mms_error

ROOT = pathlib.Path(__file__).resolve().parent.parent
RUNS = ROOT / "runs"
CONFIGS = ROOT / "configs"


def _require_run(name: str) -> pathlib.Path:
    d = RUNS / name
    if not (d / "relation_report.csv").exists():
        pytest.fail(
            f"cached run directory runs/{name} is missing or incomplete; "
            "regenerate it with scripts/make_reference_runs.py"
        )
    return d


def _report(run_dir: pathlib.Path) -> dict:
    rep = {}
    with open(run_dir / "relation_report.csv") as fh:
        for line in fh:
            key, value = line.rstrip("\n").split(",", 1)
            rep[key] = value
    return rep


def _energies(run_dir: pathlib.Path) -> np.ndarray:
    return np.atleast_2d(
        np.genfromtxt(run_dir / "energies.csv", delimiter=",", skip_header=1)
    )


# -- classification ---------------------------------------------------------


def test_classifier_truth_table_under_one_second():
    started = time.perf_counter()
    combo = nl.null_form_tensor("Q0", 1, 1, 2) + nl.null_form_tensor(
        "Qab", 1, 2, 2, component=2, a=0, b=1
    )
    assert classify(combo) == "null_condition"
    for tag, expect in [
        ("TypicalExample", "condition_H_only"),
        ("TypicalExampleR", "condition_H_only"),
        ("FirstExampleA", "neither_known"),
        ("SecondExampleA", "neither_known"),
    ]:
        ex = build_example(tag)
        assert classify(ex.tensor, ex.weight) == expect, tag
        if expect == "condition_H_only":
            assert verify_condition_H(ex.tensor, ex.weight).holds, tag
    ex = build_example("Simple", c1=1.0, c2=-1.0)
    assert classify(ex.tensor, ex.weight) == "neither_known"
    assert time.perf_counter() - started < 1.0


def test_rotated_weight_eigenvalues_dense_sweep():
    """Eigenvalues equal {1, 2 - omega_1^2} at 10^3 directions to 1e-10."""
    w = rotated_example_weight()
    for v in nl.fibonacci_sphere(1000):
        lams = np.sort(np.linalg.eigvalsh(w(nl.SphereDirection(v))))
        expect = np.sort([1.0, 2.0 - v[0] ** 2])
        assert np.max(np.abs(lams - expect)) < 1e-10


# -- reduced ODE ------------------------------------------------------------


def test_reduced_ode_closed_form_oracle_and_invariants():
    """Fifty random planar parameter sets match the closed form at s = 10
    to 1e-8 relative; the planar radius is conserved to 1e-10; the
    weighted quadratic form is conserved to 1e-8 along the full reduced
    flow of both weighted examples.  Budget: under ten seconds."""
    started = time.perf_counter()
    rng = np.random.default_rng(2024)
    for _ in range(50):
        c = float(rng.uniform(-2.0, 2.0))
        xi = float(rng.uniform(-1.0, 1.0))
        eta = float(rng.uniform(-1.0, 1.0))
        rho = float(np.hypot(xi, eta))
        if rho < 1e-3:
            xi, rho = 0.5, float(np.hypot(0.5, eta))
        params = XYParams(c=c, rho=rho, eta=eta, xi=xi)
        s_grid, x, y = integrate_XY(params, 10.0, 4000)
        xc, yc = closed_form_XY(s_grid, params)
        assert np.hypot(x[-1] - xc[-1], y[-1] - yc[-1]) <= 1e-8 * rho
        radius = np.hypot(x, y)
        assert np.max(np.abs(radius - rho)) <= 1e-10 * rho

    for tag, kw in (("TypicalExample", {"c0": 2.0}), ("TypicalExampleR", {})):
        ex = build_example(tag, **kw)
        d = nl.SphereDirection.from_vector([0.5, -0.5, np.sqrt(0.5)])
        traj = integrate_reduced(ex.tensor, d, [0.25, -0.15], 1.0, np.exp(10.0), 10000)
        q = conserved_form(traj, ex.weight)
        assert np.max(np.abs(q - q[0])) <= 1e-8 * q[0]
    assert time.perf_counter() - started < 10.0


# -- profile iteration ------------------------------------------------------


def test_profile_iteration_contraction_and_error_bound():
    """Manufactured forced problem with decay exponent 0.5: per-iteration
    contraction ratio at most K + 0.05 and the final gap within the
    pointwise bound (plus quadrature tail) at every grid point.  Budget:
    under five seconds."""
    started = time.perf_counter()
    prob = manufactured_problem()
    tab = solve_forced(prob, 1e4, 20000)
    it = iterate_profile(prob, tab, n_max=40)
    assert it.K < 1.0
    inc = it.increments
    floor = 1e-13
    ratios = [
        inc[n + 1] / inc[n]
        for n in range(len(inc) - 1)
        if inc[n] > floor and inc[n + 1] > floor
    ]
    assert ratios and all(r <= it.K + 0.05 for r in ratios)
    gap = np.abs(tab.z - it.p)
    assert np.all(gap <= it.error_bound + it.zeta0_tail_bound + 1e-9)
    assert time.perf_counter() - started < 5.0


# -- solver convergence and conservation ------------------------------------


def test_manufactured_solution_convergence_order():
    e1, e2, e3 = mms_error(24), mms_error(48), mms_error(96)
    assert np.log2(e1 / e2) >= 1.8
    assert np.log2(e2 / e3) >= 1.8


def test_free_field_energy_constant_at_scale():
    """Single free component at n = 128 out to t_end = 20: energy stays
    within 1% of its initial value."""
    grid = GridSpec(23.5, 128)
    data = InitialData(epsilon=0.3, R=3.0, f_amps=[1.0], g_amps=[0.5])
    out = run(nl.CoefficientTensor(1, {}), make_initial_snapshot(data, grid),
              20.0, cadence=1.0)
    es = np.array([rec.E[0] for rec in out.energies])
    assert np.max(np.abs(es - es[0])) < 0.01 * es[0]


# -- long-run dissipation (cached reference run) ----------------------------


def test_dissipation_trend_reference_run():
    """Reference run (256^3, epsilon = 0.05, t_end about 80): component-1
    energy strictly decreasing over the final half, and the ray-profile
    norm ratio decreasing across the last three checkpoints."""
    ref = _require_run("reference")
    cfg = load_config(str(ref / "config.toml"))
    assert cfg.run.grid.points_per_axis == 256
    assert cfg.run.data.epsilon == pytest.approx(0.05)
    assert 70.0 <= cfg.run.t_end <= 90.0
    c_ab = np.asarray(cfg.raw["system"].get("c_ab", nl.c_ab_time_only(1.0)))
    assert np.array_equal(c_ab, nl.c_ab_time_only(1.0))

    table = _energies(ref)
    t, e1 = table[:, 0], table[:, 1]
    tail = e1[t >= t[-1] / 2.0]
    assert len(tail) >= 10
    assert np.all(np.diff(tail) < 0.0)

    rep = _report(ref)
    ratios = [float(v) for v in rep["v_ratio_checkpoints"].split()]
    assert len(ratios) == 3
    assert ratios[0] > ratios[1] > ratios[2]


# -- asymptotic size of the persistent component ----------------------------


def test_asymptotic_size_ratio_and_epsilon_refinement():
    """The measured ratio of the component-2 energy norm to the predicted
    asymptotic size lies in [0.8, 1.2] at epsilon = 0.05, and its
    deviation from 1 shrinks when epsilon is halved."""
    full = _require_run("relation")
    half = _require_run("asymp_half")
    eps_full = load_config(str(full / "config.toml")).run.data.epsilon
    eps_half = load_config(str(half / "config.toml")).run.data.epsilon
    assert eps_full == pytest.approx(0.05)
    assert eps_half == pytest.approx(0.025)
    r_full = float(_report(full)["asymp_ratio"])
    r_half = float(_report(half)["asymp_ratio"])
    assert 0.8 <= r_full <= 1.2
    assert abs(1.0 - r_half) < abs(1.0 - r_full)


# -- weighted energy drift --------------------------------------------------


def test_weighted_energy_drift_quadratic_in_epsilon():
    """Free-run-subtracted drift of the weighted energy norm scales
    quadratically: drift(0.08)/drift(0.04) in [3, 5]."""
    c_ab = np.zeros((4, 4))
    c_ab[0, 0] = 1.0
    c_ab[1, 1] = 1.0
    c0 = 2.0
    tensor = build_example("TypicalExample", c0=c0, c_ab=c_ab).tensor
    free = nl.CoefficientTensor(2, {})
    shifts = []
    for eps in (0.08, 0.04):
        grid = GridSpec(14.0, 96)
        data = InitialData(epsilon=eps, R=2.0, f_amps=[1.0, 0.0], g_amps=[0.0, 1.0])
        snap = make_initial_snapshot(data, grid)
        nlr = run(tensor, snap, 10.0, cadence=0.25, c0=c0)
        fr = run(free, snap, 10.0, cadence=0.25, c0=c0)
        shifts.append(
            max(abs(a.E_tilde - b.E_tilde) for a, b in zip(nlr.energies, fr.energies))
        )
    assert 3.0 <= shifts[0] / shifts[1] <= 5.0


# -- blow-up vs completion (command-line exit codes) ------------------------


def test_blow_up_exit_code_against_completing_twin(tmp_path):
    env = dict(os.environ)
    bad = subprocess.run(
        [sys.executable, "-m", "wavelab.cli", "simulate",
         "--config", str(CONFIGS / "blowup.toml"), "--out", str(tmp_path / "bad")],
        capture_output=True, text=True, env=env,
    )
    assert bad.returncode == 3, bad.stderr
    good = subprocess.run(
        [sys.executable, "-m", "wavelab.cli", "simulate",
         "--config", str(CONFIGS / "blowup_twin.toml"), "--out", str(tmp_path / "good")],
        capture_output=True, text=True, env=env,
    )
    assert good.returncode == 0, good.stderr


# -- translation representation ---------------------------------------------


def test_translation_isometry_three_pairs_within_two_percent():
    quad = SphereQuadrature.product_gauss(6, 12)
    grid = GridSpec(3.0, 96)
    ax = grid.axis
    r2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
    z = np.zeros_like(r2)
    sig = grid.axis[np.abs(grid.axis) <= 2.6]
    pairs = [
        (polynomial_bump(r2 / 2.0 ** 2, 4), z),
        (z, polynomial_bump(r2 / 1.5 ** 2, 2)),
        (polynomial_bump(r2 / 1.75 ** 2, 3), 0.5 * polynomial_bump(r2 / 1.5 ** 2, 4)),
    ]
    for p0, p1 in pairs:
        tr = translation_representation(p0, p1, grid, sig, quad)
        nh = pair_norm_H(p0, p1, grid)
        assert abs(tr.norm() - nh) <= 0.02 * nh


def test_free_field_radiation_check_small_and_decreasing():
    """Free-run ray values against the data's translation representation:
    discrepancy at most 10% at the half horizon and smaller at the full
    horizon."""
    quad = SphereQuadrature.product_gauss(4, 8)
    grid = GridSpec(11.0, 128)
    data = InitialData(epsilon=0.5, R=4.0, f_amps=[1.0], g_amps=[0.8])
    snap = make_initial_snapshot(data, grid)
    probes = probes_for_quadrature(quad, np.arange(-2.0, 2.01, 0.25))
    out = run(nl.CoefficientTensor(1, {}), snap, 4.7, probes=probes, cadence=0.05)
    sgrid = grid.axis[np.abs(grid.axis) <= 5.0]
    tr = translation_representation(snap.u[0], snap.ut[0], grid, sgrid, quad)
    d_half = radiation_field_check(out.rays, tr, component=1, t=2.35).discrepancy
    d_full = radiation_field_check(out.rays, tr, component=1, t=4.7).discrepancy
    assert d_half <= 0.10
    assert d_full < d_half


# -- component relation (cached fine-grid run) ------------------------------


def test_relation_residual_small_and_decreasing():
    """Relation residual of the cached fine-grid run is at most 0.15 at
    the final time and decreases across the 50%/75%/100% checkpoints."""
    rel = _require_run("relation")
    rep = _report(rel)
    assert rep["relation_applicable"] == "True"
    assert float(rep["relation_residual"]) <= 0.15

    cfg = load_config(str(rel / "config.toml"))
    quad = cfg.run.quadrature
    rays = _load_rays(str(rel))[: len(cfg.run.probe_sigmas) * len(quad.directions)]
    c1 = np.empty(len(quad.directions))
    c2 = np.empty(len(quad.directions))
    for k, d in enumerate(quad.directions):
        diag = diagonalize_2x2(cfg.system.tensor, cfg.system.weight, d)
        c1[k], c2[k] = diag.c_1, diag.c_2
    t_end = rays[0].t_array[-1]
    residuals = []
    for frac in (0.5, 0.75, 1.0):
        t1 = translation_from_rays(rays, quad, 1, t=frac * t_end)
        t2 = translation_from_rays(rays, quad, 2, t=frac * t_end)
        residuals.append(scattering_relation_check(t1, t2, c1, c2).residual)
    assert residuals[0] > residuals[1] > residuals[2]
