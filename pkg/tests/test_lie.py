import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from affine_entropy import catalog, lie
from affine_entropy.errors import DimensionMismatch, LogDomainError

vec3 = arrays(float, (3,), elements=st.floats(-2, 2))


def _commutator_coords(table, x, y):
    """Oracle: bracket through matrix commutators of the representation."""
    X, Y = table.to_matrix(x), table.to_matrix(y)
    return table.coords(X @ Y - Y @ X)


def test_catalog_algebras_validate(table):
    rep = lie.validate_algebra(table)
    assert rep.passed, str(rep)


@given(vec3, vec3)
def test_heis3_bracket_matches_commutator(x, y):
    H = catalog.heis3()
    np.testing.assert_allclose(lie.bracket(H, x, y), _commutator_coords(H, x, y), atol=1e-12)


@given(vec3, vec3, vec3)
def test_heis3_jacobi_and_antisymmetry(x, y, w):
    H = catalog.heis3()
    b = lambda a, c: lie.bracket(H, a, c)
    np.testing.assert_allclose(b(x, y), -b(y, x), atol=1e-12)
    jac = b(x, b(y, w)) + b(y, b(w, x)) + b(w, b(x, y))
    np.testing.assert_allclose(jac, 0, atol=1e-10)


def test_aff2_bracket():
    A = catalog.aff2()
    np.testing.assert_allclose(lie.bracket(A, [1, 0], [0, 1]), [0, 1])
    np.testing.assert_allclose(lie.bracket(A, [0.3, 2], [1.5, -1]),
                               _commutator_coords(A, np.array([0.3, 2]), np.array([1.5, -1])), atol=1e-14)


def test_broken_antisymmetry_detected():
    bad = lie.LieAlgebraTable(2, ((0, 1, 1, 1.0),), catalog.aff2().rep_basis)
    rep = lie.validate_algebra(bad)
    assert not rep.passed
    assert any("antisymmetry" in v for v in rep.violations)


def test_ad_matrix_columns():
    H = catalog.heis3()
    ad_P = lie.ad_matrix(H, [1.0, 0, 0])
    # [P, Q] = R, [P, P] = [P, R] = 0
    np.testing.assert_allclose(ad_P, [[0, 0, 0], [0, 0, 0], [0, 1, 0]])


@pytest.mark.parametrize("name, dim", [("rn:2", 4), ("rn:3", 9), ("heis3", 6), ("aff2", 2)])
def test_derivation_algebra_dimensions(name, dim):
    basis = lie.derivation_basis(catalog.get_algebra(name))
    assert len(basis) == dim


def test_is_derivation_examples():
    H = catalog.heis3()
    assert lie.is_derivation(H, np.diag([1.0, 2, 3]))[0]
    ok, res = lie.is_derivation(H, np.diag([1.0, 2, 4]))
    assert not ok and res == pytest.approx(1.0)
    A = catalog.aff2()
    assert lie.is_derivation(A, [[0, 0], [0.7, -1.3]])[0]
    assert not lie.is_derivation(A, [[1, 0], [0, 0]])[0]


def test_random_derivations_pass_leibniz(table, rng):
    for _ in range(5):
        assert lie.is_derivation(table, lie.random_derivation(table, rng), tol=1e-10)[0]


def test_exp_log_round_trip(table, rng):
    y = rng.standard_normal((50, table.dim))
    np.testing.assert_allclose(lie.log_point(table, lie.exp_point(table, y)), y, atol=1e-10)


def test_aff2_exp_closed_form():
    A = catalog.aff2()
    a, b = 0.8, -1.7
    expected = np.array([[np.exp(a), b * (np.exp(a) - 1) / a], [0, 1]])
    np.testing.assert_allclose(lie.exp_point(A, [a, b]), expected, atol=1e-14)


def test_heis3_exp_closed_form():
    H = catalog.heis3()
    p, q, r = 0.5, -1.2, 0.3
    expected = np.array([[1, p, r + p * q / 2], [0, 1, q], [0, 0, 1]])
    np.testing.assert_allclose(lie.exp_point(H, [p, q, r]), expected, atol=1e-15)


def test_log_requires_global_chart():
    H = catalog.heis3()
    T = lie.LieAlgebraTable(H.dim, H.structure, H.rep_basis, exp_global=False)
    with pytest.raises(LogDomainError):
        lie.log_point(T, np.eye(3))


def _fd_dexp(table, y, v, h=1e-6):
    g = lie.exp_point(table, y)
    dg = (lie.exp_point(table, y + h * v) - lie.exp_point(table, y - h * v)) / (2 * h)
    return table.coords(np.linalg.inv(g) @ dg)


@pytest.mark.parametrize("name", ["heis3", "aff2"])
def test_dexp_matches_finite_differences(name, rng):
    T = catalog.get_algebra(name)
    for _ in range(5):
        y, v = rng.standard_normal(T.dim), rng.standard_normal(T.dim)
        np.testing.assert_allclose(lie.dexp_apply(T, y, v), _fd_dexp(T, y, v), atol=1e-7)


@pytest.mark.parametrize("name", ["heis3", "aff2"])
def test_other_dexp_sign_fails_finite_differences(name, rng):
    T = catalog.get_algebra(name)
    y, v = rng.standard_normal(T.dim), rng.standard_normal(T.dim)
    wrong = lie.dexp_apply(T, y, v, sign=-lie.DEXP_SIGN)
    assert np.linalg.norm(wrong - _fd_dexp(T, y, v)) > 1e-2


def test_dexp_heis3_value():
    H = catalog.heis3()
    np.testing.assert_allclose(lie.dexp_apply(H, [1.0, 0, 0], [0, 1.0, 0]), [0, 1, -0.5])


def test_dexp_large_argument_aff2():
    A = catalog.aff2()
    y, v = np.array([9.0, 2.0]), np.array([0.3, -0.4])
    np.testing.assert_allclose(lie.dexp_apply(A, y, v), _fd_dexp(A, y, v, 1e-7), rtol=1e-5)


def test_Ad_and_modular_function():
    A = catalog.aff2()
    g = lie.exp_point(A, [1.0, 0.0])
    np.testing.assert_allclose(lie.Ad_matrix(A, g), np.diag([1, np.e]), atol=1e-12)
    assert lie.modular_function(A, g) == pytest.approx(np.e)
    H = catalog.heis3()
    gs = lie.exp_point(H, np.random.default_rng(0).standard_normal((10, 3)))
    np.testing.assert_allclose(lie.modular_function(H, gs), 1.0, atol=1e-12)


def test_Ad_is_exp_of_ad(table, rng):
    import scipy.linalg
    y = rng.standard_normal(table.dim)
    np.testing.assert_allclose(lie.Ad_matrix(table, lie.exp_point(table, y)),
                               scipy.linalg.expm(lie.ad_matrix(table, y)), atol=1e-10)


def test_spectrum_ordering():
    ev = lie.spectrum(np.array([[0, -1, 0], [1, 0, 0], [0, 0, 2.0]]))
    np.testing.assert_allclose(ev, [2, 1j, -1j], atol=1e-12)
    with pytest.raises(DimensionMismatch):
        lie.spectrum(np.zeros((2, 3)))
