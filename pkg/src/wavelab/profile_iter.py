"""Constructive asymptotic profiles for the forced phase-rotation ODE.

The scalar complex equation

    i dz/dt = Phi(z(t)) z(t) / t + J(t),

with Phi real-valued and Lipschitz (constant C0) and the forcing decaying
like |J(t)| <= E0 t^{-1-lambda}, admits an asymptotic profile p(s) in
s = log t solving i p' = Phi(p) p.  The profile is built constructively:
starting from the tabulated solution z, repeatedly unwind the accumulated
phase Theta_n, read off the limit zeta_n at infinity, and rewind.  The
scheme contracts geometrically with ratio

    K = C0 (E0 t0^{-lambda} + |z(t0)| lambda) / lambda^2

whenever K < 1, and the limit satisfies the explicit error bound

    |z(t) - p(log t)| <= E0 / (lambda (1 - K) t^lambda).

All tabulated functions live on one uniform s-grid; integrals against
d(tau)/tau are trapezoid sums in s, and improper integrals are truncated
at the grid end with the analytic tail bound E0/(lambda t_end^lambda)
reported, never silently dropped.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "GateError",
    "ForcedODEProblem",
    "SolutionTable",
    "ProfileIteration",
    "ProfileEquationReport",
    "solve_forced",
    "iterate_profile",
    "check_profile_equation",
]


class GateError(ValueError):
    """Contraction gate K >= 1: the scheme is refused, not extrapolated."""

    def __init__(self, K: float):
        super().__init__(f"contraction gate violated: K = {K:.6g} >= 1")
        self.K = K


@dataclass(frozen=True)
class ForcedODEProblem:
    """Forced ODE instance with its analytic bound parameters.

    Phi must be real-valued with supplied Lipschitz constant C0 (it is
    not estimated here); J must obey |J(t)| <= E0 t^{-1-lam}.
    """

    Phi: Callable[[complex], float]
    C0: float
    J: Callable[[float], complex]
    E0: float
    lam: float
    t0: float
    z_t0: complex

    def __post_init__(self):
        if min(self.C0, self.E0, self.lam) <= 0:
            raise ValueError("C0, E0 and lam must be positive")
        if self.t0 < 1.0:
            raise ValueError("t0 must be >= 1")

    @property
    def K(self) -> float:
        """Contraction ratio of the iteration; must be < 1."""
        return (
            self.C0
            * (self.E0 * self.t0 ** (-self.lam) + abs(self.z_t0) * self.lam)
            / self.lam ** 2
        )


@dataclass(frozen=True)
class SolutionTable:
    s_grid: np.ndarray
    z: np.ndarray  # complex samples

    @property
    def t_grid(self) -> np.ndarray:
        return np.exp(self.s_grid)


def solve_forced(problem: ForcedODEProblem, t_end: float, steps: int) -> SolutionTable:
    """RK4 in s = log t of the forced equation.

    In s the equation reads dz/ds = -i (Phi(z) z + t J(t)) with t = e^s.
    """
    if t_end <= problem.t0:
        raise ValueError("t_end must exceed t0")
    if problem.K >= 1.0:
        raise GateError(problem.K)
    s0, s1 = np.log(problem.t0), np.log(t_end)
    h = (s1 - s0) / steps
    s_grid = s0 + h * np.arange(steps + 1)
    z = complex(problem.z_t0)
    zs = np.empty(steps + 1, dtype=complex)
    zs[0] = z

    def rhs(s, w):
        t = np.exp(s)
        return -1j * (problem.Phi(w) * w + t * problem.J(t))

    for i in range(steps):
        s = s_grid[i]
        k1 = rhs(s, z)
        k2 = rhs(s + 0.5 * h, z + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, z + 0.5 * h * k2)
        k4 = rhs(s + h, z + h * k3)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(z):
            raise RuntimeError(f"forced ODE diverged at s = {s_grid[i + 1]:.6g}")
        zs[i + 1] = z
    return SolutionTable(s_grid, zs)


@dataclass(frozen=True)
class ProfileIteration:
    s_grid: np.ndarray
    p: np.ndarray  # complex profile samples, p(s) on the grid
    zeta_sequence: np.ndarray  # complex, one entry per completed iteration
    increments: list[float] = field(default_factory=list)  # sup_t |z_{n+1} - z_n|
    K: float = 0.0
    zeta0_tail_bound: float = 0.0  # truncation tail of the zeta_0 integral
    error_bound: np.ndarray | None = None  # pointwise |z - p| bound on the grid


def _phi_on_grid(phi, z: np.ndarray) -> np.ndarray:
    return np.array([phi(w) for w in z], dtype=float)


def iterate_profile(
    problem: ForcedODEProblem,
    table: SolutionTable,
    n_max: int = 30,
    stop_floor: float = 1e-15,
) -> ProfileIteration:
    """Run the phase-unwinding iteration on a tabulated solution.

    Per iteration: Theta_n is the running phase integral of Phi(z_n),
    zeta_0 comes from the closed expression z(t0) - i * integral of
    J e^{i Theta_0}, later zeta_{n+1} = zeta_n e^{i theta_n} with theta_n
    the integral of the Phi difference; z_{n+1} = zeta_n e^{-i Theta_n}.
    Stops when the sup-increment hits the floating-point floor or n_max.
    """
    K = problem.K
    if K >= 1.0:
        raise GateError(K)
    s = table.s_grid
    t = table.t_grid
    lam, E0 = problem.lam, problem.E0

    z_n = table.z
    phi_n = _phi_on_grid(problem.Phi, z_n)
    theta_n = np.concatenate(([0.0], cumulative_trapezoid(phi_n, s)))

    j_vals = np.array([problem.J(tv) for tv in t], dtype=complex)
    # d(tau) integral: integrand J(tau) e^{i Theta_0(tau)} tau in s
    zeta = complex(problem.z_t0) - 1j * np.trapezoid(j_vals * np.exp(1j * theta_n) * t, s)
    tail = E0 / (lam * t[-1] ** lam)

    zetas = [zeta]
    increments: list[float] = []
    for _ in range(n_max):
        z_next = zeta * np.exp(-1j * theta_n)
        inc = float(np.max(np.abs(z_next - z_n)))
        increments.append(inc)
        phi_next = _phi_on_grid(problem.Phi, z_next)
        theta_small = np.trapezoid(phi_next - phi_n, s)
        zeta = zeta * np.exp(1j * theta_small)
        zetas.append(zeta)
        theta_n = np.concatenate(([0.0], cumulative_trapezoid(phi_next, s)))
        z_n, phi_n = z_next, phi_next
        if inc <= stop_floor * max(1.0, abs(zeta)):
            break

    bound = E0 / (lam * (1.0 - K) * t ** lam)
    return ProfileIteration(
        s_grid=s,
        p=z_n,
        zeta_sequence=np.array(zetas, dtype=complex),
        increments=increments,
        K=K,
        zeta0_tail_bound=tail,
        error_bound=bound,
    )


@dataclass(frozen=True)
class ProfileEquationReport:
    max_residual: float
    modulus_drift: float


def check_profile_equation(
    s_grid: np.ndarray, p: np.ndarray, phi: Callable[[complex], float]
) -> ProfileEquationReport:
    """Residual of i p'(s) = Phi(p) p by central differences, plus the
    modulus drift (Phi real means |p| must be constant)."""
    s_grid = np.asarray(s_grid, dtype=float)
    p = np.asarray(p, dtype=complex)
    dp = (p[2:] - p[:-2]) / (s_grid[2:] - s_grid[:-2])
    phi_p = _phi_on_grid(phi, p[1:-1])
    residual = np.abs(1j * dp - phi_p * p[1:-1])
    mods = np.abs(p)
    return ProfileEquationReport(
        max_residual=float(np.max(residual)) if residual.size else 0.0,
        modulus_drift=float(np.max(mods) - np.min(mods)),
    )
