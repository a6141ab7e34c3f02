"""Reduced dynamics along outgoing rays.

Near the light cone the profile V(t; sigma, omega) of each ray obeys

    dV/dt = -F_red(omega, V) / (2 t),

which in the logarithmic time s = log t is the autonomous system
dV/ds = -F_red(omega, V)/2.  For weighted systems V^T A(omega) V is a
first integral, so trajectories live on ellipsoids and the flow only
redistributes the components.  For the 2-component normal form the flow
closes into the planar system

    dX/ds = c X Y,   dY/ds = -c X^2,

which integrates in closed form; the closed form is the oracle for every
integrator here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .condition_h import Diagonalization2, WeightMatrix
from .nonlinearity import CoefficientTensor, SphereDirection, eval_Fred

__all__ = [
    "DivergenceError",
    "ReducedTrajectory",
    "XYParams",
    "General2Trajectory",
    "integrate_reduced",
    "conserved_form",
    "closed_form_XY",
    "integrate_XY",
    "integrate_general2",
    "complex_profile",
    "general2_state_from_V",
]


class DivergenceError(RuntimeError):
    def __init__(self, message: str, last_valid_t: float):
        super().__init__(message)
        self.last_valid_t = last_valid_t


def _rk4(rhs, y0: np.ndarray, s0: float, s1: float, steps: int):
    """Classical fixed-step RK4 on a uniform s-grid; deterministic."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = (s1 - s0) / steps
    s_grid = s0 + h * np.arange(steps + 1)
    ys = np.empty((steps + 1,) + np.shape(y0))
    ys[0] = y0
    y = np.array(y0, dtype=float)
    for i in range(steps):
        s = s_grid[i]
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(s + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(
                f"integration diverged at s = {s_grid[i + 1]:.6g}",
                last_valid_t=float(np.exp(s_grid[i])),
            )
        ys[i + 1] = y
    return s_grid, ys


@dataclass(frozen=True)
class ReducedTrajectory:
    omega: SphereDirection
    t_grid: np.ndarray
    V: np.ndarray  # shape (len(t_grid), N)
    sigma: float = 0.0

    @property
    def s_grid(self) -> np.ndarray:
        return np.log(self.t_grid)


def integrate_reduced(
    tensor: CoefficientTensor,
    omega: SphereDirection,
    V0,
    t0: float,
    t_end: float,
    steps: int,
    sigma: float = 0.0,
) -> ReducedTrajectory:
    """RK4 in s = log t with uniform s-steps from t0 >= 1 to t_end."""
    if t0 < 1.0:
        raise ValueError("t0 must be >= 1")
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    V0 = np.asarray(V0, dtype=float)

    def rhs(_s, v):
        return -0.5 * eval_Fred(tensor, omega, v)

    s_grid, vs = _rk4(rhs, V0, np.log(t0), np.log(t_end), steps)
    return ReducedTrajectory(omega, np.exp(s_grid), vs, sigma)


def conserved_form(traj: ReducedTrajectory, weight: WeightMatrix) -> np.ndarray:
    """V^T A(omega) V at each sample; the caller asserts constancy."""
    a = weight(traj.omega)
    return np.einsum("ti,ij,tj->t", traj.V, a, traj.V)


@dataclass(frozen=True)
class XYParams:
    """Initial data for the planar system at s = 0: X(0) = xi, Y(0) = eta,
    with xi^2 + eta^2 = rho^2 and c the coupling constant."""

    c: float
    rho: float
    eta: float
    xi: float

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if abs(self.eta) > self.rho + 1e-12:
            raise ValueError("|eta| must not exceed rho")
        if abs(self.xi ** 2 + self.eta ** 2 - self.rho ** 2) > 1e-12 * max(1.0, self.rho ** 2):
            raise ValueError("xi^2 + eta^2 must equal rho^2")


def closed_form_XY(s, params: XYParams):
    """Exact solution of dX/ds = c X Y, dY/ds = -c X^2.

    Y(s) = rho [(rho+eta) e^{-c rho s} - (rho-eta) e^{c rho s}] / D(s),
    X(s) = 2 rho xi / D(s),
    D(s) = (rho+eta) e^{-c rho s} + (rho-eta) e^{c rho s}.

    Evaluated with the dominant exponential factored out so that |c rho s|
    up to ~700 stays finite, and the degenerate branches (rho = 0 or
    xi = 0) returned exactly.
    """
    s = np.asarray(s, dtype=float)
    rho, eta, xi, c = params.rho, params.eta, params.xi, params.c
    if rho == 0.0:
        zeros = np.zeros_like(s)
        return zeros, zeros
    if xi == 0.0:
        # equilibrium on the Y-axis: eta = +/- rho, nothing moves
        return np.zeros_like(s), np.full_like(s, eta)
    q = c * rho * s
    aq = np.abs(q)
    # D = e^{|q|} * [ (rho+eta) e^{-q-|q|} + (rho-eta) e^{q-|q|} ]; both
    # exponents are <= 0 so the bracket never overflows
    bracket = (rho + eta) * np.exp(-q - aq) + (rho - eta) * np.exp(q - aq)
    y = rho * ((rho + eta) * np.exp(-q - aq) - (rho - eta) * np.exp(q - aq)) / bracket
    x = 2.0 * rho * xi * np.exp(-aq) / bracket
    return x, y


def integrate_XY(params: XYParams, s_end: float, steps: int):
    """RK4 trajectory of the planar system; returns (s_grid, X, Y)."""
    c = params.c

    def rhs(_s, v):
        return np.array([c * v[0] * v[1], -c * v[0] ** 2])

    s_grid, vs = _rk4(rhs, np.array([params.xi, params.eta]), 0.0, s_end, steps)
    return s_grid, vs[:, 0], vs[:, 1]


def complex_profile(c0: float, V: np.ndarray) -> np.ndarray:
    """Complexified profile sqrt(c0) V_1 + i c0 V_2 for a 2-component V.

    V may be a single state (2,) or a trajectory (..., 2).
    """
    V = np.asarray(V, dtype=float)
    return np.sqrt(c0) * V[..., 0] + 1j * c0 * V[..., 1]


def general2_state_from_V(diag: Diagonalization2, V) -> np.ndarray:
    """Map a 2-component reduced state V to the normalized planar state
    (Xt, Yt) of the diagonalized system.

    Route: rotate to the eigenbasis, complexify with the eigenvalue ratio
    c0, then apply the constant linear map built from the template
    coefficients.  Accepts trajectories with leading axes.
    """
    c0, ct1, ct2 = diag.c0, diag.c_tilde_1, diag.c_tilde_2
    sq = np.sqrt(c0)
    V = np.asarray(V, dtype=float)
    vt = V @ diag.P.T
    p = complex_profile(c0, vt)
    m = np.array([[sq * ct1, ct2], [ct2, -sq * ct1]]) / (2.0 * sq)
    return np.stack([p.real, p.imag], axis=-1) @ m.T


@dataclass(frozen=True)
class General2Trajectory:
    s_grid: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    degenerate: bool = False
    note: str = ""


def integrate_general2(
    diag: Diagonalization2, V0, s_range: tuple[float, float], steps: int
) -> General2Trajectory:
    """Integrate dXt/ds = -Xt Yt, dYt/ds = Xt^2 from the state induced by
    the reduced initial value V0.

    This is the c = -1 branch of the planar system, so Yt is driven
    towards +rho whenever Xt(0) is nonzero.  At a degenerate direction
    (template coefficients both zero) the profile is constant and the
    trajectory is returned flat with a note.
    """
    s0, s1 = s_range
    xy0 = general2_state_from_V(diag, np.asarray(V0, dtype=float))
    if diag.degenerate:
        s_grid = np.linspace(s0, s1, steps + 1)
        return General2Trajectory(
            s_grid,
            np.full(steps + 1, xy0[0]),
            np.full(steps + 1, xy0[1]),
            degenerate=True,
            note="null direction, constant profile",
        )

    def rhs(_s, v):
        return np.array([-v[0] * v[1], v[0] ** 2])

    s_grid, vs = _rk4(rhs, xy0, s0, s1, steps)
    return General2Trajectory(s_grid, vs[:, 0], vs[:, 1])
