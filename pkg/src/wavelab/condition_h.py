"""Verification of the structural weight condition for a coefficient tensor.

The condition asks for a symmetric positive-definite matrix A(omega),
defined for every unit direction, making the reduced nonlinearity
orthogonal to the weighted state:

    Y^T A(omega) F_red(omega, Y) = 0   for all Y and omega.

It implies that V^T A(omega) V is conserved along the reduced flow, which
is the mechanism behind bounded profiles and energy transfer between
components.  This module verifies supplied weights by deterministic
sampling, computes the two-sided positivity bound M0, and for N = 2
diagonalizes the weight to the normal form used by the scattering
relation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .nonlinearity import (
    CoefficientTensor,
    NullCheckResult,
    SphereDirection,
    check_null_condition,
    eval_Fred,
    fibonacci_sphere,
)

__all__ = [
    "WeightMatrix",
    "PositivityBounds",
    "ConditionHResult",
    "Diagonalization2",
    "WeightError",
    "verify_condition_H",
    "positivity_bounds",
    "diagonalize_2x2",
    "classify",
    "identity_weight",
    "constant_diagonal_weight",
    "rotated_example_weight",
]


class WeightError(ValueError):
    """Raised for non-symmetric or non-positive-definite weight input."""


@dataclass(frozen=True)
class WeightMatrix:
    """Map omega -> symmetric positive-definite N x N matrix."""

    n_components: int
    evaluator: Callable[[SphereDirection], np.ndarray]
    provenance: str = "analytic-closed-form"

    def __call__(self, direction: SphereDirection) -> np.ndarray:
        a = np.asarray(self.evaluator(direction), dtype=float)
        n = self.n_components
        if a.shape != (n, n):
            raise WeightError(f"weight evaluated to shape {a.shape}, expected ({n},{n})")
        if np.max(np.abs(a - a.T)) > 1e-12:
            raise WeightError("weight matrix is not symmetric")
        return a


def identity_weight(n_components: int) -> WeightMatrix:
    eye = np.eye(n_components)
    return WeightMatrix(n_components, lambda d: eye)


def constant_diagonal_weight(diag) -> WeightMatrix:
    mat = np.diag(np.asarray(diag, dtype=float))
    return WeightMatrix(len(mat), lambda d: mat)


def rotated_example_weight() -> WeightMatrix:
    """Direction-dependent weight of the built-in rotated example:
    A(omega) = [[3-w1^2, 1-w1^2], [1-w1^2, 3-w1^2]] / 2, eigenvalues
    1 and 2-w1^2."""

    def evaluate(d: SphereDirection) -> np.ndarray:
        w1sq = d.omega[0] ** 2
        return 0.5 * np.array([[3.0 - w1sq, 1.0 - w1sq], [1.0 - w1sq, 3.0 - w1sq]])

    return WeightMatrix(2, evaluate)


@dataclass(frozen=True)
class PositivityBounds:
    """M0 >= 1 with M0^{-1}|Y|^2 <= Y^T A(omega) Y <= M0 |Y|^2."""

    M0: float


@dataclass(frozen=True)
class ConditionHResult:
    holds: bool
    bounds: PositivityBounds | None = None
    max_violation: float = 0.0
    witness_omega: np.ndarray | None = None
    witness_Y: np.ndarray | None = None
    failure: str | None = None


def _sample_directions(count: int) -> list[SphereDirection]:
    return [SphereDirection(v) for v in fibonacci_sphere(count)]


def verify_condition_H(
    tensor: CoefficientTensor,
    weight: WeightMatrix,
    omega_samples: int = 1000,
    Y_samples: int = 1000,
    tol: float = 1e-9,
    seed: int = 0,
) -> ConditionHResult:
    """Check the orthogonality identity and positive-definiteness by
    sampling.

    Like the null-condition check, Y^T A F_red is for fixed omega a cubic
    polynomial in Y and (restricted to S^2) a quadratic in omega, so dense
    deterministic sampling decides vanishing.  Every sampled omega is also
    checked for positive eigenvalues, and the bound M0 is accumulated from
    the eigenvalue range.
    """
    if omega_samples < 1000 or Y_samples < 1000:
        raise ValueError("need at least 1000 samples in omega and Y")
    if tensor.n_components != weight.n_components:
        raise ValueError("tensor and weight dimensions disagree")
    rng = np.random.default_rng(seed)
    n = tensor.n_components
    ys = rng.standard_normal((Y_samples, n))
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    ys_T = ys.T  # shape (n, Y_samples), ready for vectorized eval_Fred

    lam_min = np.inf
    lam_max = 0.0
    worst = 0.0
    witness = None
    for d in _sample_directions(omega_samples):
        a = weight(d)
        lams = np.linalg.eigvalsh(a)
        if lams[0] <= 0.0:
            return ConditionHResult(
                False,
                witness_omega=d.omega,
                failure=f"non-positive eigenvalue {lams[0]:.3e}",
            )
        lam_min = min(lam_min, lams[0])
        lam_max = max(lam_max, lams[-1])
        fred = eval_Fred(tensor, d, ys_T)  # (n, Y_samples)
        viol = np.abs(np.einsum("is,ij,js->s", ys_T, a, fred))
        i = int(np.argmax(viol))
        if viol[i] > worst:
            worst = float(viol[i])
            witness = (d.omega, ys[i])
    if worst > tol:
        return ConditionHResult(
            False,
            max_violation=worst,
            witness_omega=witness[0],
            witness_Y=witness[1],
            failure="orthogonality violated",
        )
    m0 = max(lam_max, 1.0 / lam_min, 1.0)
    return ConditionHResult(True, PositivityBounds(float(m0)), max_violation=worst)


def positivity_bounds(weight: WeightMatrix, omega_samples: int = 1000) -> PositivityBounds:
    """M0 = sup over sampled omega of max(lambda_max, 1/lambda_min)."""
    lam_min = np.inf
    lam_max = 0.0
    for d in _sample_directions(omega_samples):
        lams = np.linalg.eigvalsh(weight(d))
        if lams[0] <= 0.0:
            raise WeightError(f"non-positive eigenvalue at omega = {d.omega}")
        lam_min = min(lam_min, lams[0])
        lam_max = max(lam_max, lams[-1])
    return PositivityBounds(float(max(lam_max, 1.0 / lam_min, 1.0)))


@dataclass(frozen=True)
class Diagonalization2:
    """Normal form of a 2-component weighted system at one direction.

    After rescaling A(omega) so its smaller eigenvalue is 1, the
    orthogonal P has the eigenvectors as rows and the reduced
    nonlinearity takes the one-parameter-family template

        P F_red(omega, P^T Yt) = (ct1 Yt1 + ct2 Yt2) * (-c0 Yt2, Yt1)^T.

    c1 and c2 are the coefficients of the asymptotic linear relation
    between the two components' radiation profiles, obtained from
    (c2, -c1)^T = P^T (ct2, -ct1)^T.
    """

    omega: np.ndarray
    P: np.ndarray
    c0: float
    c_tilde_1: float
    c_tilde_2: float
    c_1: float
    c_2: float
    template_residual: float

    @property
    def degenerate(self) -> bool:
        """Null direction: template vanishes, profiles stay constant."""
        return self.c_tilde_1 ** 2 + self.c_tilde_2 ** 2 <= 1e-18


def diagonalize_2x2(
    tensor: CoefficientTensor,
    weight: WeightMatrix,
    direction: SphereDirection,
    tol: float = 1e-9,
    check_draws: int = 100,
) -> Diagonalization2:
    """Diagonalize the weight at one direction and extract the template
    coefficients.

    Eigenvector convention: row 1 of P is the eigenvector of the smaller
    eigenvalue, each row's sign fixed so its largest-magnitude entry is
    positive; for an isotropic weight (equal eigenvalues) P = I.  The
    template is cross-checked at seeded random states and a residual
    above tol raises, which signals either a system without the weight
    property or an eigenvector sign instability.
    """
    if tensor.n_components != 2 or weight.n_components != 2:
        raise ValueError("diagonalization is defined for N = 2 only")
    a = weight(direction)
    lams, vecs = np.linalg.eigh(a)
    if lams[0] <= 0.0:
        raise WeightError(f"non-positive eigenvalue at omega = {direction.omega}")
    if abs(lams[1] - lams[0]) <= 1e-12 * abs(lams[1]):
        p = np.eye(2)
    else:
        rows = []
        for i in (0, 1):
            v = vecs[:, i]
            if v[int(np.argmax(np.abs(v)))] < 0:
                v = -v
            rows.append(v)
        p = np.array(rows)
    c0 = float(lams[1] / lams[0])

    g1 = p @ eval_Fred(tensor, direction, p.T @ np.array([1.0, 0.0]))
    g2 = p @ eval_Fred(tensor, direction, p.T @ np.array([0.0, 1.0]))
    ct1 = float(g1[1])
    ct2 = float(-g2[0] / c0)

    rng = np.random.default_rng(7)
    residual = 0.0
    for _ in range(check_draws):
        yt = rng.standard_normal(2)
        lhs = p @ eval_Fred(tensor, direction, p.T @ yt)
        rhs = (ct1 * yt[0] + ct2 * yt[1]) * np.array([-c0 * yt[1], yt[0]])
        residual = max(residual, float(np.linalg.norm(lhs - rhs) / (1.0 + yt @ yt)))
    if residual > tol:
        raise WeightError(
            f"template residual {residual:.3e} at omega = {direction.omega}: "
            "system does not satisfy the weight condition at this direction"
        )

    c2_c1 = p.T @ np.array([ct2, -ct1])
    return Diagonalization2(
        omega=direction.omega,
        P=p,
        c0=c0,
        c_tilde_1=ct1,
        c_tilde_2=ct2,
        c_1=float(-c2_c1[1]),
        c_2=float(c2_c1[0]),
        template_residual=residual,
    )


def classify(
    tensor: CoefficientTensor,
    weight: WeightMatrix | None = None,
    samples: int = 2000,
    tol: float = 1e-9,
) -> str:
    """Three-way classification: null_condition, condition_H_only, or
    neither_known.

    neither_known is deliberate phrasing: searching for a weight given
    only the tensor is a feasibility problem this module does not
    attempt, so absence of a supplied weight never proves absence of one.
    """
    null: NullCheckResult = check_null_condition(tensor, samples=samples, tol=tol)
    if null.holds:
        return "null_condition"
    if weight is not None:
        res = verify_condition_H(tensor, weight, tol=tol)
        if res.holds:
            return "condition_H_only"
    return "neither_known"
