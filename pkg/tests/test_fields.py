import math

import numpy as np
import pytest

from finsler_lab.errors import DomainError, NonPositiveDefinite, SpecError
from finsler_lab.fields import (
    Polynomial,
    eval_metric,
    eval_oneform_x_jet,
    metric_x_jet,
    oneform_from_doc,
    oneform_to_doc,
    riemann_from_doc,
    riemann_to_doc,
)

from _builders import affine, conformal, constant, diagonal, gradient, random_alpha, random_beta


def test_euclidean_is_identity_with_zero_derivatives():
    field = riemann_from_doc({"family": "euclidean"}, 3)
    a, da = metric_x_jet(field, [0.3, -2.0, 5.0])
    assert np.array_equal(a, np.eye(3))
    assert not np.any(da)


def test_conformal_u_equal_x1():
    field = riemann_from_doc(conformal([[1.0, [1, 0]]]), 2)
    assert np.allclose(eval_metric(field, [0.0, 0.0]), np.eye(2))
    assert np.allclose(eval_metric(field, [math.log(2) / 2, 0.0]), 2 * np.eye(2), rtol=1e-15)
    _, da = metric_x_jet(field, [0.0, 0.0])
    assert np.allclose(da[:, :, 0], 2 * np.eye(2))
    assert not np.any(da[:, :, 1])


def test_diagonal_polynomial_derivative():
    field = riemann_from_doc(diagonal([[[1.0, [0, 0]], [1.0, [2, 0]]], [[1.0, [0, 0]]]]), 2)
    _, da = metric_x_jet(field, [1.0, 0.0])
    assert da[0, 0, 0] == pytest.approx(2.0)


def test_nonpositive_metric_raises():
    field = riemann_from_doc(diagonal([[[1.0, [0, 0]], [-1.0, [2, 0]]], [[1.0, [0, 0]]]]), 2)
    with pytest.raises(NonPositiveDefinite):
        eval_metric(field, [1.5, 0.0])


def test_conformal_overflow_is_domain_error():
    field = riemann_from_doc(conformal([[1.0, [1, 0]]]), 2)
    with pytest.raises(DomainError):
        eval_metric(field, [1e4, 0.0])


def test_oneform_examples():
    b, db = eval_oneform_x_jet(oneform_from_doc(constant([0.1, 0.0]), 2), [3.0, 4.0])
    assert np.array_equal(b, [0.1, 0.0]) and not np.any(db)
    M = [[0.0, 1.0], [-1.0, 0.0]]
    b, db = eval_oneform_x_jet(oneform_from_doc(affine([0.0, 0.0], M), 2), [1.0, 2.0])
    assert np.allclose(b, [2.0, -1.0]) and np.allclose(db, M)
    b, _ = eval_oneform_x_jet(oneform_from_doc(gradient([[1.0, [1, 1]]]), 2), [1.0, 1.0])
    assert np.allclose(b, [1.0, 1.0])


def test_polynomial_grad_and_hessian():
    p = Polynomial.from_terms([[2.0, [3, 1]], [-1.0, [0, 2]], [0.5, [0, 0]]], 2)
    x = np.array([0.7, -1.3])
    assert p(x) == pytest.approx(2 * 0.7**3 * -1.3 - 1.69 + 0.5)
    assert np.allclose(p.grad(x), [6 * 0.49 * -1.3, 2 * 0.343 - 2 * -1.3])
    assert np.allclose(p.hessian(x), [[12 * 0.7 * -1.3, 6 * 0.49], [6 * 0.49, -2.0]])


@pytest.mark.parametrize("family", ["euclidean", "diagonal-polynomial", "conformally-flat"])
def test_metric_analytic_matches_finite_differences(family):
    rng = np.random.default_rng(11)
    field = riemann_from_doc(random_alpha(rng, 3, family), 3)
    for _ in range(5):
        x = rng.uniform(-1, 1, 3)
        a, da = metric_x_jet(field, x)
        _, da_fd = metric_x_jet(field, x, method="fd")
        assert np.allclose(a, a.T)
        assert np.allclose(da, da.transpose(1, 0, 2))
        assert np.allclose(da, da_fd, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("family", ["constant", "affine", "gradient-of-polynomial"])
def test_oneform_analytic_matches_finite_differences(family):
    rng = np.random.default_rng(12)
    field = oneform_from_doc(random_beta(rng, 3, family), 3)
    for _ in range(5):
        x = rng.uniform(-1, 1, 3)
        _, db = eval_oneform_x_jet(field, x)
        _, db_fd = eval_oneform_x_jet(field, x, method="fd")
        assert np.allclose(db, db_fd, rtol=1e-6, atol=1e-9)


def test_doc_round_trip():
    rng = np.random.default_rng(5)
    for fam in ("euclidean", "diagonal-polynomial", "conformally-flat"):
        field = riemann_from_doc(random_alpha(rng, 3, fam), 3)
        assert riemann_from_doc(riemann_to_doc(field), 3) == field
    for fam in ("constant", "affine", "gradient-of-polynomial"):
        field = oneform_from_doc(random_beta(rng, 3, fam), 3)
        assert oneform_from_doc(oneform_to_doc(field), 3) == field


@pytest.mark.parametrize("doc", [
    {"family": "affine", "params": {"c": [0.0, 0.0]}},
    {"family": "constant", "params": {"c": [0.0]}},
    {"family": "nope"},
    {"family": "gradient-of-polynomial", "params": {"f": [[1.0, [1]]]}},
])
def test_bad_oneform_docs(doc):
    with pytest.raises(SpecError):
        oneform_from_doc(doc, 2)


def test_wrong_point_length():
    field = riemann_from_doc({"family": "euclidean"}, 3)
    with pytest.raises(DomainError):
        eval_metric(field, [0.0, 0.0])
