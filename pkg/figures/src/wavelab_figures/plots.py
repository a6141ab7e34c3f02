"""Figure builders over the CSV schemas written by the wavelab CLI.

Input schemas (all comma-separated, one header line unless noted):
  energies.csv       t, E_1, ..., E_N, E_tilde
  reduced.csv        s, t, V_1, V_2[, quad_form]
  profile.csv        s, re_z, im_z, re_p, im_p, bound_rhs
  translation_j.csv  sigma, omega_index, value
Ray files (ray_*.csv) carry one leading '# sigma=... omega=...' comment
line before the header; numpy's comment handling skips it.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(Exception):
    """Raised when an input CSV does not match the documented schema."""


def _read_table(path: str, min_cols: int) -> tuple[list, np.ndarray]:
    try:
        with open(path) as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if len(lines) < 2:
        raise SchemaError(f"{path}: no data rows")
    header = [h.strip() for h in lines[0].strip().split(",")]
    try:
        data = np.array(
            [[float(v) for v in ln.strip().split(",")] for ln in lines[1:]]
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric data: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header) or len(header) < min_cols:
        raise SchemaError(
            f"{path}: expected >= {min_cols} named columns, got {header}"
        )
    return header, data


def plot_energies(energies_csv: str, out_png: str) -> str:
    """Per-component energy norms and the weighted combination vs time."""
    header, data = _read_table(energies_csv, 2)
    if header[0] != "t":
        raise SchemaError(f"{energies_csv}: first column must be t")
    t = data[:, 0]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for k, name in enumerate(header[1:], start=1):
        col = data[:, k]
        if np.all(np.isnan(col)):
            continue
        style = "--" if name == "E_tilde" else "-"
        ax.plot(t, col, style, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("energy norm")
    ax.legend()
    ax.set_title("component energies")
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def _closed_form_xy(s: np.ndarray, c: float, rho: float, eta: float, xi: float):
    """Exact solution of dX/ds = c X Y, dY/ds = -c X^2 with X(0) = xi,
    Y(0) = eta, rho^2 = xi^2 + eta^2 (overflow-safe form)."""
    if rho == 0.0 or xi == 0.0:
        return np.full_like(s, xi), np.full_like(s, eta)
    q = c * rho * s
    aq = np.abs(q)
    bracket = (rho + eta) * np.exp(-q - aq) + (rho - eta) * np.exp(q - aq)
    y = rho * ((rho + eta) * np.exp(-q - aq) - (rho - eta) * np.exp(q - aq)) / bracket
    x = 2.0 * rho * xi * np.exp(-aq) / bracket
    return x, y


def _profile_columns(trajectory_csv: str):
    header, data = _read_table(trajectory_csv, 3)
    try:
        i1, i2 = header.index("V_1"), header.index("V_2")
    except ValueError as exc:
        raise SchemaError(f"{trajectory_csv}: needs V_1 and V_2 columns") from exc
    if header[0] == "s":
        s = data[:, 0]
    elif header[0] == "t":
        t = data[:, 0]
        if np.any(t <= 0):
            raise SchemaError(f"{trajectory_csv}: t column must be positive")
        s = np.log(t / t[0])
    else:
        raise SchemaError(f"{trajectory_csv}: first column must be s or t")
    return s, data[:, i1], data[:, i2]


def profile_deviation(trajectory_csv: str, coupling: float = 0.5) -> float:
    """Maximum pointwise distance between the tabulated (V_1, V_2)
    trajectory and the closed-form solution started from its first row."""
    s, v1, v2 = _profile_columns(trajectory_csv)
    xi, eta = v1[0], v2[0]
    rho = float(np.hypot(xi, eta))
    x, y = _closed_form_xy(s - s[0], coupling, rho, eta, xi)
    return float(np.max(np.hypot(v1 - x, v2 - y)))


def plot_profile(trajectory_csv: str, out_png: str, coupling: float = 0.5) -> str:
    """Planar (V_1, V_2) trajectory with the closed-form overlay.

    The closed form solves dX/ds = c X Y, dY/ds = -c X^2 from the first
    row of the table; the annotation reports the maximum deviation
    between table and closed form over the whole trajectory.
    """
    s, v1, v2 = _profile_columns(trajectory_csv)
    xi, eta = v1[0], v2[0]
    rho = float(np.hypot(xi, eta))
    x, y = _closed_form_xy(s - s[0], coupling, rho, eta, xi)
    dev = float(np.max(np.hypot(v1 - x, v2 - y)))

    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.plot(v1, v2, "-", lw=1.8, label="trajectory")
    ax.plot(x, y, "--", lw=1.2, label="closed form")
    ax.plot([xi], [eta], "o", ms=5, color="k")
    ax.set_xlabel("V_1")
    ax.set_ylabel("V_2")
    ax.set_title("reduced trajectory in the plane")
    ax.annotate(
        f"max deviation = {dev:.3e}",
        xy=(0.03, 0.03),
        xycoords="axes fraction",
        fontsize=9,
    )
    ax.legend()
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def plot_iteration(profile_csv: str, out_png: str) -> str:
    """Forced-profile solution error |z - p| against its bound."""
    header, data = _read_table(profile_csv, 6)
    expected = ["s", "re_z", "im_z", "re_p", "im_p", "bound_rhs"]
    if header[:6] != expected:
        raise SchemaError(f"{profile_csv}: expected columns {expected}, got {header}")
    s = data[:, 0]
    err = np.hypot(data[:, 1] - data[:, 3], data[:, 2] - data[:, 4])
    bound = data[:, 5]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    floor = max(1e-18, float(np.min(bound[bound > 0], initial=1e-18)))
    ax.semilogy(s, np.maximum(err, 1e-2 * floor), label="|z - p|")
    ax.semilogy(s, np.maximum(bound, 1e-2 * floor), "--", label="bound")
    ax.set_xlabel("s")
    ax.set_ylabel("error")
    ax.set_title("profile iteration error vs bound")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def plot_relation(
    translation1_csv: str,
    translation2_csv: str,
    out_png: str,
    c1: float = 1.0,
    c2: float = 0.0,
) -> str:
    """Map of the relation combination |c1 V_1 + c2 V_2| over (sigma, node),
    normalized by (|c1| + |c2|) max(|V_1| + |V_2|)."""
    grids = []
    for path in (translation1_csv, translation2_csv):
        header, data = _read_table(path, 3)
        if header[:3] != ["sigma", "omega_index", "value"]:
            raise SchemaError(f"{path}: expected sigma, omega_index, value")
        sig = np.unique(data[:, 0])
        idx = np.unique(data[:, 1]).astype(int)
        tab = np.full((len(sig), len(idx)), np.nan)
        si = np.searchsorted(sig, data[:, 0])
        tab[si, data[:, 1].astype(int)] = data[:, 2]
        if np.any(np.isnan(tab)):
            raise SchemaError(f"{path}: missing (sigma, omega_index) entries")
        grids.append((sig, tab))
    (sig, v1), (sig2, v2) = grids
    if v1.shape != v2.shape or not np.allclose(sig, sig2):
        raise SchemaError("translation tables do not share a grid")
    combo = np.abs(c1 * v1 + c2 * v2)
    scale = (abs(c1) + abs(c2)) * np.max(np.abs(v1) + np.abs(v2))
    if scale == 0:
        raise SchemaError("translation tables are identically zero")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    im = ax.imshow(
        (combo / scale).T,
        origin="lower",
        aspect="auto",
        extent=(sig[0], sig[-1], -0.5, v1.shape[1] - 0.5),
        cmap="magma",
    )
    fig.colorbar(im, ax=ax, label="|c1 V1 + c2 V2| (normalized)")
    ax.set_xlabel("sigma")
    ax.set_ylabel("direction node index")
    ax.set_title("scattering-relation residual map")
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png
