"""Radon transform, translation representation of free waves, and the
scattering-relation check between components.

The translation representation maps free-wave data (phi0, phi1) to a
function P(sigma, omega) on R x S^2:

    P = (1/(4 pi)) (-d_sigma^2 R[phi0] + d_sigma R[phi1]),

where R is the Radon transform (plane integrals).  In this normalization
the map is an isometry from the energy space onto L^2(R x S^2), and
P(sigma, omega) coincides with the large-time limit of the ray value
V(t; sigma, omega) = (1/2)(d_r(r u) - r du/dt) evaluated at
x = (t + sigma) omega, which is how the wave solver extracts profiles.
That identification is what `radiation_field_check` quantifies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.ndimage import affine_transform

from .nonlinearity import SphereDirection
from .wave_solver import GridSpec, RayProbe, RayProfile, _central_diff

__all__ = [
    "SphereQuadrature",
    "TranslationData",
    "RadiationCheck",
    "RelationReport",
    "pair_norm_H",
    "radon_transform",
    "translation_representation",
    "probes_for_quadrature",
    "translation_from_rays",
    "radiation_field_check",
    "scattering_relation_check",
]


@dataclass(frozen=True)
class SphereQuadrature:
    """Quadrature nodes and weights for integrals over the unit sphere."""

    directions: tuple  # of SphereDirection
    weights: np.ndarray  # positive, summing to 4 pi

    @classmethod
    def product_gauss(cls, n_polar: int, n_azimuth: int) -> "SphereQuadrature":
        """Gauss-Legendre in cos(theta) crossed with uniform azimuth.

        Exact for spherical polynomials of degree up to
        min(2 n_polar - 1, n_azimuth - 1).  With n_azimuth even the node
        set is closed under the antipodal map.
        """
        if n_polar < 1 or n_azimuth < 1:
            raise ValueError("need at least one node per factor")
        mu, wmu = leggauss(n_polar)
        phi = 2.0 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
        dirs = []
        wts = []
        for m, wm in zip(mu, wmu):
            s = np.sqrt(1.0 - m * m)
            for p in phi:
                dirs.append(
                    SphereDirection(np.array([s * np.cos(p), s * np.sin(p), m]))
                )
                wts.append(wm * 2.0 * np.pi / n_azimuth)
        return cls(tuple(dirs), np.array(wts))

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0.0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "weights", w)

    @property
    def omega_array(self) -> np.ndarray:
        return np.array([d.omega for d in self.directions])


@dataclass
class TranslationData:
    """Samples of a function of (sigma, omega) on a uniform sigma grid
    crossed with sphere quadrature nodes."""

    sigma_grid: np.ndarray  # (n_sigma,), uniform
    quadrature: SphereQuadrature
    values: np.ndarray  # (n_sigma, n_nodes)

    def __post_init__(self):
        self.sigma_grid = np.asarray(self.sigma_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.sigma_grid), len(self.quadrature.directions)):
            raise ValueError("values shape does not match grids")
        steps = np.diff(self.sigma_grid)
        if len(steps) and not np.allclose(steps, steps[0], rtol=1e-10):
            raise ValueError("sigma grid must be uniform")

    def norm(self) -> float:
        """L^2(R x S^2) norm on the grid (trapezoid in sigma)."""
        per_node = np.trapezoid(self.values ** 2, self.sigma_grid, axis=0)
        return float(np.sqrt(np.sum(self.quadrature.weights * per_node)))


def pair_norm_H(phi0: np.ndarray, phi1: np.ndarray, grid: GridSpec) -> float:
    """Energy-space norm (1/2 (||grad phi0||^2 + ||phi1||^2))^{1/2} of a
    gridded data pair."""
    grad2 = np.zeros_like(phi0)
    for axis in range(3):
        d = _central_diff(phi0, axis, grid.dx)
        grad2 += d * d
    val = 0.5 * (np.sum(grad2) + np.sum(phi1 ** 2)) * grid.dx ** 3
    return float(np.sqrt(val))


def _rotation_to(omega: np.ndarray) -> np.ndarray:
    """Rotation matrix R with columns (e1, e2, omega), so R e_z = omega.

    The frame satisfies R(-omega) = R(omega) @ diag(-1, 1, -1) exactly,
    which makes the Radon identity R[psi](sigma, omega) =
    R[psi](-sigma, -omega) hold at the sample level.
    """
    a = np.array([0.0, 0.0, 1.0]) if abs(omega[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(a, omega)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(omega, e1)
    return np.column_stack([e1, e2, omega])


def radon_transform(
    field: np.ndarray, grid: GridSpec, sigma_grid: np.ndarray, quad: SphereQuadrature
) -> TranslationData:
    """Plane integrals R[field](sigma, omega) over {y . omega = sigma}.

    Per direction the volume is resampled in rotated coordinates
    (trilinear interpolation), planes are summed with the midpoint rule,
    and the profile is linearly interpolated onto sigma_grid.  Sigma
    beyond the support of the field gives exactly 0.
    """
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    n = grid.points_per_axis
    if field.shape != (n, n, n):
        raise ValueError("field shape does not match grid")
    c = 0.5 * grid.dx - grid.half_width
    cvec = np.full(3, c)
    cols = np.empty((len(sigma_grid), len(quad.directions)))
    for idx, d in enumerate(quad.directions):
        rot = _rotation_to(d.omega)
        offset = (rot @ cvec - cvec) / grid.dx
        resampled = affine_transform(
            field, rot, offset=offset, order=1, mode="constant", cval=0.0
        )
        plane_sums = resampled.sum(axis=(0, 1)) * grid.dx ** 2
        cols[:, idx] = np.interp(sigma_grid, grid.axis, plane_sums, left=0.0, right=0.0)
    return TranslationData(sigma_grid, quad, cols)


def translation_representation(
    phi0: np.ndarray,
    phi1: np.ndarray,
    grid: GridSpec,
    sigma_grid: np.ndarray,
    quad: SphereQuadrature,
) -> TranslationData:
    """P = (1/(4 pi)) (-d_sigma^2 R[phi0] + d_sigma R[phi1]); sigma
    derivatives by centered differences on the uniform sigma grid."""
    r0 = radon_transform(phi0, grid, sigma_grid, quad)
    r1 = radon_transform(phi1, grid, sigma_grid, quad)
    d1 = np.gradient(r1.values, sigma_grid, axis=0)
    d0 = np.gradient(np.gradient(r0.values, sigma_grid, axis=0), sigma_grid, axis=0)
    return TranslationData(sigma_grid, quad, (-d0 + d1) / (4.0 * np.pi))


def probes_for_quadrature(
    quad: SphereQuadrature, sigmas: Sequence[float]
) -> list[RayProbe]:
    """Ray probes covering the (sigma, omega) product grid, ordered with
    omega fastest (matching translation_from_rays)."""
    return [RayProbe(float(s), d) for s in sigmas for d in quad.directions]


def translation_from_rays(
    rays: Sequence[RayProfile],
    quad: SphereQuadrature,
    component: int,
    t: float | None = None,
) -> TranslationData:
    """Table V(t; sigma, omega) assembled from ray profiles.

    Rays must cover the product of their distinct sigma values with the
    quadrature directions (as built by probes_for_quadrature).  For each
    ray the sample at the latest time <= t (the last one when t is None)
    is used.  Entries that were never valid (probe radius too small or
    outside the box) and entries with sigma <= -t, where the profile is
    not meaningful, are set to 0.
    """
    sigmas = np.array(sorted({r.sigma for r in rays}))
    n_nodes = len(quad.directions)
    if len(rays) != len(sigmas) * n_nodes:
        raise ValueError("rays do not cover the sigma x omega product grid")
    omegas = quad.omega_array
    values = np.zeros((len(sigmas), n_nodes))
    t_used = -np.inf
    for ray in rays:
        i = int(np.searchsorted(sigmas, ray.sigma))
        dots = omegas @ ray.omega.omega
        j = int(np.argmax(dots))
        if dots[j] < 1.0 - 1e-9:
            raise ValueError("ray direction is not a quadrature node")
        ts = ray.t_array
        vs = ray.V_array[:, component - 1]
        ok = np.isfinite(vs) & (ts <= (t if t is not None else np.inf))
        if np.any(ok):
            values[i, j] = vs[ok][-1]
            t_used = max(t_used, float(ts[ok][-1]))
    if np.isfinite(t_used):
        values[sigmas <= -t_used, :] = 0.0
    return TranslationData(sigmas, quad, values)


@dataclass(frozen=True)
class RadiationCheck:
    discrepancy: float  # weighted L^2, relative to the reference norm
    reference_norm: float
    n_points: int


def radiation_field_check(
    rays: Sequence[RayProfile],
    trans: TranslationData,
    component: int = 1,
    t: float | None = None,
) -> RadiationCheck:
    """Compare late-time ray values V(t; sigma, omega) from a free run
    against the translation representation of the initial data.

    Returns the weighted relative L^2 discrepancy over the probe set."""
    quad = trans.quadrature
    table = translation_from_rays(rays, quad, component, t=t)
    ref = np.empty_like(table.values)
    for j in range(table.values.shape[1]):
        ref[:, j] = np.interp(table.sigma_grid, trans.sigma_grid, trans.values[:, j])
    w = quad.weights[None, :]
    num = float(np.sqrt(np.sum(w * (table.values - ref) ** 2)))
    den = float(np.sqrt(np.sum(w * ref ** 2)))
    if den == 0.0:
        return RadiationCheck(num, 0.0, table.values.size)
    return RadiationCheck(num / den, den, table.values.size)


@dataclass(frozen=True)
class RelationReport:
    residual: float
    applicable: bool
    downweighted_fraction: float
    note: str


def _coefficients_on_nodes(
    c: Callable[[SphereDirection], float] | Sequence[float] | float,
    quad: SphereQuadrature,
) -> np.ndarray:
    if callable(c):
        return np.array([float(c(d)) for d in quad.directions])
    arr = np.asarray(c, dtype=float)
    if arr.ndim == 0:
        return np.full(len(quad.directions), float(arr))
    if arr.shape != (len(quad.directions),):
        raise ValueError("coefficient array length does not match quadrature")
    return arr


def scattering_relation_check(
    v1: TranslationData,
    v2: TranslationData,
    c1,
    c2,
    downweight_tol: float = 1e-6,
) -> RelationReport:
    """Normalized residual of the component relation
    c1(omega) V1(sigma, omega) + c2(omega) V2(sigma, omega) = 0:

        ||c1 V1 + c2 V2|| / || (|c1| + |c2|) (|V1| + |V2|) ||

    in the weighted grid L^2.  Directions where c1^2 + c2^2 falls below
    downweight_tol times its maximum are excluded (the relation is
    ill-conditioned there); the excluded weight fraction is reported.
    If the coefficients vanish everywhere the relation does not apply.
    """
    if v1.quadrature is not v2.quadrature and not np.array_equal(
        v1.quadrature.omega_array, v2.quadrature.omega_array
    ):
        raise ValueError("component tables use different quadratures")
    if not np.array_equal(v1.sigma_grid, v2.sigma_grid):
        raise ValueError("component tables use different sigma grids")
    quad = v1.quadrature
    a1 = _coefficients_on_nodes(c1, quad)
    a2 = _coefficients_on_nodes(c2, quad)
    size = a1 ** 2 + a2 ** 2
    top = float(np.max(size))
    if top == 0.0:
        return RelationReport(np.nan, False, 1.0, "not applicable: c1 = c2 = 0")
    keep = size > downweight_tol * top
    frac = float(np.sum(quad.weights[~keep]) / np.sum(quad.weights))
    w = quad.weights[keep][None, :]
    lhs = a1[keep][None, :] * v1.values[:, keep] + a2[keep][None, :] * v2.values[:, keep]
    scale = (np.abs(a1[keep]) + np.abs(a2[keep]))[None, :] * (
        np.abs(v1.values[:, keep]) + np.abs(v2.values[:, keep])
    )
    num = float(np.sqrt(np.sum(w * np.trapezoid(lhs ** 2, v1.sigma_grid, axis=0))))
    den = float(np.sqrt(np.sum(w * np.trapezoid(scale ** 2, v1.sigma_grid, axis=0))))
    if den == 0.0:
        return RelationReport(0.0, True, frac, "both components identically zero")
    note = "" if frac == 0.0 else f"downweighted {frac:.3f} of sphere weight"
    return RelationReport(num / den, True, frac, note)
