"""End-to-end tests of the command-line interface: config parsing, exit
codes, output files, determinism, and the snapshot binary format."""
import os

import numpy as np
import pytest

from wavelab.cli import main, read_snapshot
from wavelab.config import ConfigError, load_config

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

FREE_RUN = """
[system]
n_components = 1

[run.grid]
L = 5.0
n = 32

[run.data]
epsilon = 0.3
R = 1.0
f_amps = [1.0]
g_amps = [0.5]

[run.times]
t_end = 2.0
cadence = 0.5
snapshot_times = [1.0]

[run.probes]
sigmas = [0.0, 0.5]

[run.probes.quadrature]
n_polar = 2
n_azimuth = 4
"""

TYPICAL_RUN = """
[system]
example = "TypicalExample"
c0 = 2.0

[run.grid]
L = 5.0
n = 32

[run.data]
epsilon = 0.2
R = 1.0
f_amps = [1.0, 0.0]
g_amps = [0.0, 0.5]

[run.times]
t_end = 2.0
cadence = 0.5

[run.probes]
sigmas = [0.0]

[run.probes.quadrature]
n_polar = 2
n_azimuth = 4
"""

NULL_SYSTEM = """
[system]
n_components = 1
entries = [
  {j = 1, k = 1, l = 1, a = 0, b = 0, value = 1.0},
  {j = 1, k = 1, l = 1, a = 1, b = 1, value = -1.0},
  {j = 1, k = 1, l = 1, a = 2, b = 2, value = -1.0},
  {j = 1, k = 1, l = 1, a = 3, b = 3, value = -1.0},
]
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_kv(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            key, _, val = line.strip().partition(",")
            out[key] = val
    return out


def test_check_example_and_null_system(tmp_path):
    cfg = write(tmp_path, "sys.toml", '[system]\nexample = "TypicalExample"\nc0 = 2.0\n')
    assert main(["check", "--config", cfg, "--out", str(tmp_path)]) == 0
    rec = read_kv(tmp_path / "classification.csv")
    assert rec["classification"] == "condition_H_only"
    assert rec["condition_H"] == "True"

    cfg2 = write(tmp_path, "null.toml", NULL_SYSTEM)
    assert main(["check", "--config", cfg2, "--out", str(tmp_path)]) == 0
    rec2 = read_kv(tmp_path / "classification.csv")
    assert rec2["classification"] == "null_condition"


def test_check_malformed_config_exits_2(tmp_path):
    bad = write(tmp_path, "bad.toml", "not really = [toml\n")
    assert main(["check", "--config", bad, "--out", str(tmp_path)]) == 2
    missing_section = write(tmp_path, "nosys.toml", "[other]\nx = 1\n")
    assert main(["check", "--config", missing_section, "--out", str(tmp_path)]) == 2
    bad_tag = write(tmp_path, "tag.toml", '[system]\nexample = "NoSuch"\n')
    assert main(["check", "--config", bad_tag, "--out", str(tmp_path)]) == 2


def test_simulate_free_run_outputs_and_snapshot(tmp_path):
    cfg = write(tmp_path, "run.toml", FREE_RUN)
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    names = set(os.listdir(out))
    assert {"energies.csv", "manifest.json", "config.toml", "snapshot_1.bin"} <= names
    assert any(n.startswith("ray_") for n in names)
    table = np.genfromtxt(out / "energies.csv", delimiter=",", skip_header=1)
    assert np.all(np.isfinite(table[:, 1]))
    t, half_width, u, ut = read_snapshot(str(out / "snapshot_1.bin"))
    assert half_width == 5.0 and u.shape == (1, 32, 32, 32)
    assert abs(t - 1.0) <= 0.1
    assert np.max(np.abs(u)) > 0.0


def test_simulate_deterministic_outputs(tmp_path):
    cfg = write(tmp_path, "run.toml", FREE_RUN)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["simulate", "--config", cfg, "--out", str(out),
                     "--deterministic"]) == 0
        outs.append(out)
    for name in os.listdir(outs[0]):
        if name.endswith(".csv") or name.endswith(".bin"):
            a = (outs[0] / name).read_bytes()
            b = (outs[1] / name).read_bytes()
            assert a == b, name


def test_simulate_blow_up_exit_3(tmp_path):
    cfg = os.path.join(REPO, "configs", "blowup.toml")
    out = tmp_path / "blow"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 3


def test_analyze_typical_run(tmp_path):
    cfg = write(tmp_path, "run.toml", TYPICAL_RUN)
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert main(["analyze", "--run-dir", str(out)]) == 0
    names = set(os.listdir(out))
    assert {"translation_1.csv", "translation_2.csv", "relation_report.csv"} <= names
    rec = read_kv(out / "relation_report.csv")
    assert "relation_residual" in rec
    assert rec["relation_applicable"] == "True"
    assert "asymp_ratio" in rec


def test_analyze_missing_dir_exit_2(tmp_path):
    assert main(["analyze", "--run-dir", str(tmp_path / "nope")]) == 2
    (tmp_path / "empty").mkdir()
    assert main(["analyze", "--run-dir", str(tmp_path / "empty")]) == 2


def test_reduce_trajectory_export(tmp_path):
    cfg = write(tmp_path, "sys.toml", '[system]\nexample = "TypicalExample"\nc0 = 2.0\n')
    assert main(["reduce", "--config", cfg, "--omega", "0,0,1", "--v0", "0.2,0.1",
                 "--s-end", "5", "--steps", "500", "--out", str(tmp_path)]) == 0
    table = np.genfromtxt(tmp_path / "reduced.csv", delimiter=",", skip_header=1)
    # columns: s, t, V_1, V_2, quad_form; the quadratic form is conserved
    assert table.shape[1] == 5
    q = table[:, 4]
    assert np.max(np.abs(q - q[0])) <= 1e-8 * q[0]


def test_profile_export_and_gate(tmp_path):
    assert main(["profile", "--phi", "re:1.0", "--e0", "0.01", "--lam", "0.5",
                 "--z0", "0.2,0.0", "--out", str(tmp_path)]) == 0
    table = np.genfromtxt(tmp_path / "profile.csv", delimiter=",", skip_header=1)
    assert table.shape[1] == 6 and np.all(np.isfinite(table))
    # a Lipschitz constant far past the contraction gate must refuse
    assert main(["profile", "--phi", "re:100.0", "--e0", "1.0", "--lam", "0.5",
                 "--z0", "1.0,0.0", "--out", str(tmp_path)]) == 4


def test_config_loader_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"))
    bad_entry = write(
        tmp_path, "bad.toml",
        "[system]\nn_components = 1\nentries = [{j = 1, k = 9, l = 1, a = 0, b = 0, value = 1.0}]\n",
    )
    with pytest.raises(ConfigError):
        load_config(bad_entry)
    bad_weight = write(
        tmp_path, "w.toml", '[system]\nexample = "FirstExampleA"\nweight = "diag(1,c0)"\n'
    )
    with pytest.raises(ConfigError):
        load_config(bad_weight)


def test_config_weight_specs(tmp_path):
    ident = write(
        tmp_path, "i.toml", '[system]\nexample = "FirstExampleA"\nweight = "identity"\n'
    )
    cfg = load_config(ident)
    d = np.eye(2)
    from wavelab.nonlinearity import SphereDirection

    got = cfg.system.weight(SphereDirection(np.array([0.0, 0.0, 1.0])))
    assert np.allclose(got, d)
    rot = write(
        tmp_path, "r.toml", '[system]\nexample = "TypicalExampleR"\nweight = "rotated_example"\n'
    )
    cfg2 = load_config(rot)
    got2 = cfg2.system.weight(SphereDirection(np.array([1.0, 0.0, 0.0])))
    assert np.allclose(got2, 0.5 * np.array([[2.0, 0.0], [0.0, 2.0]]))
