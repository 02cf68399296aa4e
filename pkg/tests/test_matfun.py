import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from affine_entropy import matfun
from affine_entropy.errors import LogDomainError

finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_nilpotent_exp_log_match_scipy():
    rng = np.random.default_rng(0)
    Y = np.triu(rng.standard_normal((4, 4)), 1)
    G = matfun.expm_nilpotent(Y, 4)
    np.testing.assert_allclose(G, scipy.linalg.expm(Y), atol=1e-13)
    np.testing.assert_allclose(matfun.logm_unipotent(G, 4), Y, atol=1e-13)


@given(arrays(float, (2,), elements=finite), st.floats(-5, 5))
def test_triangular_2x2_log_inverts_exp(diag, off):
    Y = np.array([[diag[0], off], [0.0, diag[1]]])
    L = matfun.logm(scipy.linalg.expm(Y))
    np.testing.assert_allclose(L, Y, atol=1e-10 * max(1.0, abs(off)))


def test_logm_matches_scipy_on_generic_matrix():
    rng = np.random.default_rng(1)
    Y = 0.7 * rng.standard_normal((3, 3))
    G = scipy.linalg.expm(Y)
    np.testing.assert_allclose(matfun.logm(G), scipy.linalg.logm(G).real, atol=1e-10)


def test_logm_batched():
    rng = np.random.default_rng(2)
    Y = 0.5 * rng.standard_normal((6, 3, 3))
    G = matfun.expm(Y)
    np.testing.assert_allclose(matfun.logm(G), Y, atol=1e-10)


def test_logm_rejects_negative_eigenvalue():
    with pytest.raises(LogDomainError):
        matfun.logm(np.diag([-1.0, 2.0, 3.0]))


def test_nilpotency_detection():
    N = np.zeros((2, 3, 3))
    N[0, 0, 1] = N[1, 1, 2] = 1.0
    assert matfun.is_nilpotent_family(N) == 3
    assert matfun.is_nilpotent_family(np.eye(2)[None]) is None
