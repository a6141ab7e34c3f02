"""Quadratic derivative nonlinearities for semilinear wave systems.

A system square(u) = F(du) is defined by its coefficient tensor: the
constants c_j^{kl,ab} in

    F_j(du) = sum_{k,l,a,b} c_j^{kl,ab} (d_a u_k)(d_b u_l),

where d_0 = d/dt and d_1..d_3 are the spatial derivatives.  The reduced
nonlinearity replaces the gradient by the rank-one matrix d_a u_k =
omega_a Y_k with omega_0 = -1, which governs the behaviour near the
light cone.  The classical null condition is F_red identically zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

__all__ = [
    "SphereDirection",
    "CoefficientTensor",
    "NullCheckResult",
    "eval_F",
    "eval_Fred",
    "index_function_c",
    "null_form_tensor",
    "check_null_condition",
    "fibonacci_sphere",
    "first_example_a",
    "second_example_a",
    "third_example_a",
    "typical_example",
    "typical_example_r",
    "simple_system",
    "c_ab_time_only",
]


@dataclass(frozen=True)
class SphereDirection:
    """Unit direction omega on S^2, with the extended 4-vector convention
    (omega_0, omega) = (-1, omega_1, omega_2, omega_3)."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).reshape(3)
        norm = float(np.sqrt(w @ w))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"direction not unit length: |omega| = {norm}")
        object.__setattr__(self, "omega", w)
        w.setflags(write=False)

    @classmethod
    def from_vector(cls, v) -> "SphereDirection":
        v = np.asarray(v, dtype=float).reshape(3)
        n = float(np.sqrt(v @ v))
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(v / n)

    @property
    def extended(self) -> np.ndarray:
        """4-vector (-1, omega_1, omega_2, omega_3)."""
        return np.concatenate(([-1.0], self.omega))


def fibonacci_sphere(count: int) -> np.ndarray:
    """Deterministic well-spread points on S^2 (golden-angle spiral).

    Returns an array of shape (count, 3).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    i = np.arange(count, dtype=float)
    # offset by 1/2 keeps points away from the poles
    z = 1.0 - (2.0 * i + 1.0) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * (np.pi * (3.0 - np.sqrt(5.0)))
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass(frozen=True)
class CoefficientTensor:
    """Sparse tensor of the constants c_j^{kl,ab}.

    Keys are (j, k, l, a, b) with 1-based component indices j, k, l in
    1..N and derivative indices a, b in 0..3 (0 = time).  Zero entries
    are dropped.  Instances are immutable; tensors with the same N add
    entrywise via ``+``.
    """

    n_components: int
    entries: Mapping[tuple[int, int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_components
        if n < 1:
            raise ValueError("n_components must be >= 1")
        clean = {}
        for key, value in dict(self.entries).items():
            j, k, l, a, b = key
            if not (1 <= j <= n and 1 <= k <= n and 1 <= l <= n):
                raise ValueError(f"component index out of range in entry {key}")
            if not (0 <= a <= 3 and 0 <= b <= 3):
                raise ValueError(f"derivative index out of range in entry {key}")
            v = float(value)
            if v != 0.0:
                clean[key] = v
        object.__setattr__(self, "entries", clean)

    def __add__(self, other: "CoefficientTensor") -> "CoefficientTensor":
        if self.n_components != other.n_components:
            raise ValueError("cannot add tensors with different n_components")
        merged = dict(self.entries)
        for key, value in other.entries.items():
            merged[key] = merged.get(key, 0.0) + value
        return CoefficientTensor(self.n_components, merged)

    def scaled(self, factor: float) -> "CoefficientTensor":
        return CoefficientTensor(
            self.n_components, {k: factor * v for k, v in self.entries.items()}
        )

    def __iter__(self) -> Iterator[tuple[tuple[int, int, int, int, int], float]]:
        return iter(self.entries.items())

    @property
    def is_zero(self) -> bool:
        return not self.entries


def eval_F(tensor: CoefficientTensor, grad: np.ndarray) -> np.ndarray:
    """Evaluate F at a gradient matrix grad[k-1, a] = d_a u_k.

    grad may also carry trailing grid axes: shape (N, 4, ...) evaluates
    pointwise and returns shape (N, ...).
    """
    grad = np.asarray(grad, dtype=float)
    n = tensor.n_components
    if grad.shape[:2] != (n, 4):
        raise ValueError(f"gradient shape {grad.shape} incompatible with N = {n}")
    out = np.zeros((n,) + grad.shape[2:])
    for (j, k, l, a, b), c in tensor:
        out[j - 1] += c * grad[k - 1, a] * grad[l - 1, b]
    return out


def eval_Fred(tensor: CoefficientTensor, direction: SphereDirection, Y: np.ndarray) -> np.ndarray:
    """Reduced nonlinearity F_red(omega, Y) = F at d_a u_k = omega_a Y_k."""
    Y = np.asarray(Y, dtype=float)
    n = tensor.n_components
    if Y.shape[0] != n:
        raise ValueError(f"Y has {Y.shape[0]} components, tensor has {n}")
    w = direction.extended
    out = np.zeros_like(Y)
    for (j, k, l, a, b), c in tensor:
        out[j - 1] += c * w[a] * w[b] * Y[k - 1] * Y[l - 1]
    return out


def index_function_c(c_ab: np.ndarray, direction: SphereDirection) -> float:
    """c(omega) = sum_{a,b} c_ab omega_a omega_b with omega_0 = -1."""
    c_ab = np.asarray(c_ab, dtype=float)
    if c_ab.shape != (4, 4):
        raise ValueError("c_ab must be a 4x4 array")
    w = direction.extended
    return float(w @ c_ab @ w)


def c_ab_time_only(value: float = 1.0) -> np.ndarray:
    """The 4x4 index array with only the time-time entry set, giving
    c(omega) = value for every direction."""
    c = np.zeros((4, 4))
    c[0, 0] = value
    return c


def null_form_tensor(
    kind: str,
    k: int,
    l: int,
    n_components: int,
    component: int = 1,
    a: int | None = None,
    b: int | None = None,
    coeff: float = 1.0,
) -> CoefficientTensor:
    """Tensor placing a null form in one component of F.

    kind "Q0" gives Q0(u_k, u_l) = (d_t u_k)(d_t u_l) - grad u_k . grad u_l.
    kind "Qab" gives Q_ab(u_k, u_l) = (d_a u_k)(d_b u_l) - (d_b u_k)(d_a u_l)
    and requires a != b.
    """
    j = component
    if kind == "Q0":
        entries = {(j, k, l, 0, 0): coeff}
        for i in (1, 2, 3):
            entries[(j, k, l, i, i)] = entries.get((j, k, l, i, i), 0.0) - coeff
    elif kind == "Qab":
        if a is None or b is None:
            raise ValueError("Qab requires indices a and b")
        if a == b:
            raise ValueError("Qab requires a != b")
        entries = {(j, k, l, a, b): coeff, (j, k, l, b, a): -coeff}
    else:
        raise ValueError(f"unknown null form kind {kind!r}")
    return CoefficientTensor(n_components, entries)


@dataclass(frozen=True)
class NullCheckResult:
    holds: bool
    max_violation: float
    witness_omega: np.ndarray | None = None
    witness_Y: np.ndarray | None = None


def check_null_condition(
    tensor: CoefficientTensor,
    samples: int = 2000,
    tol: float = 1e-9,
    seed: int = 0,
) -> NullCheckResult:
    """Decide whether F_red vanishes identically by deterministic sampling.

    F_red(omega, Y), restricted to |Y| = 1, is a polynomial of degree 2 in
    omega on S^2 and degree 2 in Y; a nonzero polynomial of this tiny fixed
    degree cannot vanish on >= 1000 well-spread sample pairs, so sampling
    decides the condition.  Directions come from a golden-angle spiral and
    Y from a seeded normalized Gaussian draw, so the verdict is
    reproducible.
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000 for a sound verdict")
    rng = np.random.default_rng(seed)
    dirs = fibonacci_sphere(samples)
    n = tensor.n_components
    ys = rng.standard_normal((samples, n))
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    worst = 0.0
    witness = None
    for i in range(samples):
        d = SphereDirection(dirs[i])
        v = float(np.linalg.norm(eval_Fred(tensor, d, ys[i])))
        if v > worst:
            worst = v
            witness = (dirs[i], ys[i])
    if worst <= tol:
        return NullCheckResult(True, worst)
    return NullCheckResult(False, worst, witness[0], witness[1])


# ---------------------------------------------------------------------------
# Built-in example systems (tensors only; known weights live in the
# catalogue module so the weight machinery stays separate).

def first_example_a() -> CoefficientTensor:
    """N = 2: F_1 = (d_t u_2)(d_t u_1), F_2 = 0."""
    return CoefficientTensor(2, {(1, 2, 1, 0, 0): 1.0})


def second_example_a() -> CoefficientTensor:
    """N = 2: F_1 = (d_t u_2)^2, F_2 = 0."""
    return CoefficientTensor(2, {(1, 2, 2, 0, 0): 1.0})


def third_example_a() -> CoefficientTensor:
    """N = 3: F_1 = -(d_t u_3)(d_t u_2), F_2 = (d_t u_3)(d_t u_1), F_3 = 0."""
    return CoefficientTensor(3, {(1, 3, 2, 0, 0): -1.0, (2, 3, 1, 0, 0): 1.0})


def typical_example(c0: float, c_ab: np.ndarray) -> CoefficientTensor:
    """N = 2 model system with index function c(omega).

    F_1 = -c0 * sum c_ab (d_a u_1)(d_b u_2), F_2 = sum c_ab (d_a u_1)(d_b u_1),
    so F1_red = -c0 c(omega) Y_1 Y_2 and F2_red = c(omega) Y_1^2.
    """
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    c_ab = np.asarray(c_ab, dtype=float)
    if c_ab.shape != (4, 4):
        raise ValueError("c_ab must be a 4x4 array")
    entries: dict[tuple[int, int, int, int, int], float] = {}
    for a in range(4):
        for b in range(4):
            if c_ab[a, b] != 0.0:
                entries[(1, 1, 2, a, b)] = -c0 * c_ab[a, b]
                entries[(2, 1, 1, a, b)] = c_ab[a, b]
    return CoefficientTensor(2, entries)


def typical_example_r() -> CoefficientTensor:
    """N = 2 rotated variant with a direction-dependent weight:

    F_1 = -(d_t u_1)^2 - 4(d_t u_1)(d_t u_2) - 3(d_t u_2)^2 + (d_1 u_1 + d_1 u_2)^2
    F_2 = 3(d_t u_1)^2 + 4(d_t u_1)(d_t u_2) + (d_t u_2)^2 - (d_1 u_1 + d_1 u_2)^2
    """
    entries = {
        (1, 1, 1, 0, 0): -1.0,
        (1, 1, 2, 0, 0): -4.0,
        (1, 2, 2, 0, 0): -3.0,
        (1, 1, 1, 1, 1): 1.0,
        (1, 1, 2, 1, 1): 2.0,
        (1, 2, 2, 1, 1): 1.0,
        (2, 1, 1, 0, 0): 3.0,
        (2, 1, 2, 0, 0): 4.0,
        (2, 2, 2, 0, 0): 1.0,
        (2, 1, 1, 1, 1): -1.0,
        (2, 1, 2, 1, 1): -2.0,
        (2, 2, 2, 1, 1): -1.0,
    }
    return CoefficientTensor(2, entries)


def simple_system(c1: float, c2: float) -> CoefficientTensor:
    """N = 2 two-parameter family: F_1 = -c1 (d_t u_1)(d_t u_2),
    F_2 = c2 (d_t u_1)^2.  Global behaviour flips with the sign of c1*c2."""
    return CoefficientTensor(2, {(1, 1, 2, 0, 0): -c1, (2, 1, 1, 0, 0): c2})
