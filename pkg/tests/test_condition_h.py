"""Tests for weight verification, positivity bounds, and the 2x2
diagonalization."""
import numpy as np
import pytest

from wavelab import nonlinearity as nl
from wavelab.condition_h import (
    WeightMatrix,
    WeightError,
    classify,
    constant_diagonal_weight,
    diagonalize_2x2,
    identity_weight,
    positivity_bounds,
    rotated_example_weight,
    verify_condition_H,
)
from wavelab.examples import build_example


def test_typical_example_weight_holds():
    ex = build_example("TypicalExample", c0=2.0)
    res = verify_condition_H(ex.tensor, ex.weight)
    assert res.holds
    assert res.bounds.M0 == pytest.approx(2.0)


def test_rotated_example_weight_holds():
    ex = build_example("TypicalExampleR")
    res = verify_condition_H(ex.tensor, ex.weight)
    assert res.holds


def test_null_form_system_identity_weight():
    tensor = nl.null_form_tensor("Q0", 1, 1, 2)
    assert verify_condition_H(tensor, identity_weight(2)).holds


def test_wrong_weight_fails_with_witness():
    ex = build_example("TypicalExample", c0=3.0)
    res = verify_condition_H(ex.tensor, identity_weight(2))
    assert not res.holds
    assert res.witness_Y is not None


def test_rescaling_freedom():
    """If A(omega) works then h(omega) A(omega) works for positive h."""
    ex = build_example("TypicalExampleR")
    base = ex.weight

    def scaled(d):
        return (2.0 + d.omega[0]) * base(d)

    assert verify_condition_H(ex.tensor, WeightMatrix(2, scaled)).holds


def test_positivity_bounds_values():
    assert positivity_bounds(identity_weight(2)).M0 == pytest.approx(1.0)
    assert positivity_bounds(constant_diagonal_weight([1.0, 4.0])).M0 == pytest.approx(4.0)
    # rotated example: eigenvalues {1, 2 - w1^2} sweep to M0 = 2 near w1 = 0
    m0 = positivity_bounds(rotated_example_weight(), omega_samples=4000).M0
    assert m0 == pytest.approx(2.0, abs=1e-3)


def test_rotated_example_eigenvalues_sweep():
    """Eigenvalues equal {1, 2 - w1^2} across a dense direction sweep."""
    w = rotated_example_weight()
    for v in nl.fibonacci_sphere(1000):
        d = nl.SphereDirection(v)
        lams = np.sort(np.linalg.eigvalsh(w(d)))
        expect = np.sort([1.0, 2.0 - v[0] ** 2])
        assert np.max(np.abs(lams - expect)) < 1e-10


def test_non_positive_weight_rejected():
    bad = WeightMatrix(2, lambda d: np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(WeightError):
        positivity_bounds(bad)
    res = verify_condition_H(nl.simple_system(1.0, 1.0), bad)
    assert not res.holds and "eigenvalue" in res.failure


def test_asymmetric_weight_rejected():
    bad = WeightMatrix(2, lambda d: np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(WeightError):
        positivity_bounds(bad)


def test_diagonalize_isotropic_typical():
    """c0=1, c(omega)=1: A = I so P = I, ct = (1, 0), (c1, c2) = (1, 0)."""
    ex = build_example("TypicalExample", c0=1.0)
    d = nl.SphereDirection.from_vector([0.3, -0.4, 0.866])
    diag = diagonalize_2x2(ex.tensor, ex.weight, d)
    assert np.allclose(diag.P, np.eye(2))
    assert diag.c0 == pytest.approx(1.0)
    assert diag.c_tilde_1 == pytest.approx(1.0)
    assert diag.c_tilde_2 == pytest.approx(0.0, abs=1e-12)
    assert (diag.c_1, diag.c_2) == (pytest.approx(1.0), pytest.approx(0.0, abs=1e-12))


def test_diagonalize_template_identity_random_states():
    """Template P F_red(P^T Yt) = (ct1 Yt1 + ct2 Yt2)(-c0 Yt2, Yt1) holds
    at random directions and states for the rotated example."""
    ex = build_example("TypicalExampleR")
    rng = np.random.default_rng(11)
    fred_sup = 0.0
    for v in nl.fibonacci_sphere(50):
        d = nl.SphereDirection(v)
        diag = diagonalize_2x2(ex.tensor, ex.weight, d)
        assert np.max(np.abs(diag.P.T @ diag.P - np.eye(2))) < 1e-10
        a = ex.weight(d)
        lam_min = np.linalg.eigvalsh(a)[0]
        recon = diag.P.T @ np.diag([1.0, diag.c0]) @ diag.P
        assert np.max(np.abs(recon - a / lam_min)) < 1e-10
        for _ in range(4):
            yt = rng.standard_normal(2)
            lhs = diag.P @ nl.eval_Fred(ex.tensor, d, diag.P.T @ yt)
            rhs = (diag.c_tilde_1 * yt[0] + diag.c_tilde_2 * yt[1]) * np.array(
                [-diag.c0 * yt[1], yt[0]]
            )
            assert np.linalg.norm(lhs - rhs) < 1e-9 * (1 + yt @ yt)
        y = rng.standard_normal(2)
        y /= np.linalg.norm(y)
        fred_sup = max(fred_sup, float(np.linalg.norm(nl.eval_Fred(ex.tensor, d, y))))
    # template coefficients are bounded by the sup of |F_red| on |Y| = 1
    for v in nl.fibonacci_sphere(50):
        diag = diagonalize_2x2(ex.tensor, ex.weight, nl.SphereDirection(v))
        assert abs(diag.c_tilde_1) <= fred_sup + 1e-6
        assert abs(diag.c_tilde_2) <= fred_sup + 1e-6


def test_diagonalize_null_form_degenerate():
    tensor = nl.null_form_tensor("Q0", 1, 2, 2)
    d = nl.SphereDirection.from_vector([0.0, 1.0, 0.0])
    diag = diagonalize_2x2(tensor, identity_weight(2), d)
    assert diag.degenerate


def test_diagonalize_rejects_bad_system():
    """A system violating the weight condition cannot match the template."""
    d = nl.SphereDirection.from_vector([1.0, 0.0, 0.0])
    with pytest.raises(WeightError):
        diagonalize_2x2(nl.first_example_a(), identity_weight(2), d)


def test_classifier_truth_table():
    combo = nl.null_form_tensor("Q0", 1, 1, 2) + nl.null_form_tensor(
        "Qab", 1, 2, 2, component=2, a=0, b=1
    )
    assert classify(combo) == "null_condition"
    for tag, expect in [
        ("TypicalExample", "condition_H_only"),
        ("TypicalExampleR", "condition_H_only"),
        ("FirstExampleA", "neither_known"),
        ("SecondExampleA", "neither_known"),
        ("ThirdExampleA", "neither_known"),
    ]:
        ex = build_example(tag)
        assert classify(ex.tensor, ex.weight) == expect, tag
    ex = build_example("Simple", c1=1.0, c2=-1.0)
    assert classify(ex.tensor, ex.weight) == "neither_known"
    ex = build_example("Simple", c1=1.0, c2=1.0)
    assert classify(ex.tensor, ex.weight) == "condition_H_only"
