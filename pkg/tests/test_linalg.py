import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optw import linalg


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 6))
def test_jacobi_hermitian_matches_numpy(seed, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = X + X.conj().T
    w, U = linalg.eigh(H)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(H), atol=1e-10)
    np.testing.assert_allclose(U @ np.diag(w) @ U.conj().T, H, atol=1e-10)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(d), atol=1e-10)


def test_degenerate_spectrum_gives_orthonormal_vectors():
    H = np.diag([1.0, 1.0, 2.0]).astype(complex)
    w, U = linalg.eigh(H)
    np.testing.assert_allclose(w, [1, 1, 2], atol=1e-13)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(3), atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        linalg.eigh(np.array([[0, 1], [0, 0]], dtype=complex))


def test_trace_norm_and_sqrt():
    X = np.diag([3.0, -1.0])
    assert linalg.trace_norm(X) == pytest.approx(4.0)
    P = np.array([[2, 1], [1, 2]], dtype=float)
    R = linalg.psd_sqrt(P)
    np.testing.assert_allclose(R @ R, P, atol=1e-12)


def test_rank_and_null_space():
    M = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert linalg.numerical_rank(M) == 1
    N = linalg.null_space(M)
    assert N.shape[1] == 1
    np.testing.assert_allclose(M @ N, 0, atol=1e-12)
    assert linalg.condition_number(np.diag([2.0, 0.5])) == pytest.approx(4.0)
    assert linalg.condition_number(M) == np.inf
