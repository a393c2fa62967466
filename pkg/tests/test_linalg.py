import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from histpca.exceptions import DimensionError, ZeroVectorError
from histpca.ingest import DataBlock
from histpca.linalg import column_norms, gram_apply, normalize, orthonormality_error, sparse_block, thin_qr


# ---------------------------------------------------------------- gram_apply


def test_gram_apply_zero_block():
    X = np.zeros((4, 3))
    V = np.random.default_rng(0).standard_normal((3, 2))
    np.testing.assert_array_equal(gram_apply(X, V), np.zeros((3, 2)))


def test_gram_apply_identity():
    out = gram_apply(np.eye(2), np.array([[1.0], [0.0]]))
    np.testing.assert_array_equal(out, [[1.0], [0.0]])


def test_gram_apply_hand_value():
    # X^T (X e1) = [1,1]^T * 1, halved
    out = gram_apply(np.array([[1.0, 1.0]]), np.array([[1.0], [0.0]]), scale=0.5)
    np.testing.assert_allclose(out, [[0.5], [0.5]], atol=0)


def test_gram_apply_accepts_datablock_and_1d_vector():
    X = np.arange(6.0).reshape(2, 3)
    v = np.array([1.0, 0.0, -1.0])
    np.testing.assert_allclose(gram_apply(DataBlock(X), v), X.T @ (X @ v))


def test_gram_apply_dimension_mismatch_names_both_dims():
    with pytest.raises(DimensionError, match="3.*4|4.*3"):
        gram_apply(np.ones((2, 3)), np.ones((4, 1)))


@pytest.mark.parametrize("scale", [np.nan, np.inf])
def test_gram_apply_rejects_non_finite_scale(scale):
    with pytest.raises(ValueError):
        gram_apply(np.ones((2, 2)), np.ones((2, 1)), scale)


@settings(max_examples=60, deadline=None)
@given(B=st.integers(1, 12), d=st.integers(1, 20), k=st.integers(1, 5),
       scale=st.floats(-10, 10, allow_nan=False), seed=st.integers(0, 2**31))
def test_gram_apply_matches_dense_oracle(B, d, k, scale, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((B, d))
    V = rng.standard_normal((d, k))
    G = X.T @ X
    expected = scale * (G @ V)
    np.testing.assert_allclose(gram_apply(X, V, scale), expected, atol=1e-10, rtol=0)


@settings(max_examples=60, deadline=None)
@given(B=st.integers(1, 12), d=st.integers(1, 20), k=st.integers(1, 4),
       density=st.floats(0.0, 1.0), seed=st.integers(0, 2**31))
def test_gram_apply_sparse_equals_dense(B, d, k, density, seed):
    rng = np.random.default_rng(seed)
    Xs = sp.random(B, d, density=density, format="csr", random_state=rng)
    V = rng.standard_normal((d, k))
    np.testing.assert_allclose(gram_apply(Xs, V, 0.3), gram_apply(Xs.toarray(), V, 0.3), atol=1e-12, rtol=0)


def test_sparse_block_builds_csr():
    X = sparse_block([[(0, 0.5), (2, 2.0)], [], [(1, -1.0)]], 3)
    np.testing.assert_array_equal(X.toarray(), [[0.5, 0, 2.0], [0, 0, 0], [0, -1.0, 0]])


@pytest.mark.parametrize("rows", [
    [[(2, 1.0), (1, 1.0)]],  # decreasing
    [[(1, 1.0), (1, 2.0)]],  # repeated
    [[(3, 1.0)]],  # out of range
    [[(-1, 1.0)]],  # negative
])
def test_sparse_block_rejects_bad_indices(rows):
    with pytest.raises(ValueError):
        sparse_block(rows, 3)


# ---------------------------------------------------------------- thin_qr


def test_thin_qr_identity():
    Q, R, replaced = thin_qr(np.eye(4))
    np.testing.assert_array_equal(Q, np.eye(4))
    np.testing.assert_array_equal(R, np.eye(4))
    assert replaced == ()


def test_thin_qr_scaled_basis_vector():
    Q, R, _ = thin_qr(np.array([[2.0], [0.0], [0.0]]))
    np.testing.assert_allclose(Q, [[1.0], [0.0], [0.0]])
    np.testing.assert_allclose(R, [[2.0]])


def _check_qr(A, Q, R):
    k = A.shape[1]
    assert np.max(np.abs(Q.T @ Q - np.eye(k))) <= 1e-10
    assert np.linalg.norm(Q @ R - A) <= 1e-8 * np.linalg.norm(A)
    np.testing.assert_array_equal(np.tril(R, -1), 0.0)
    assert np.all(np.diag(R) > 0)


def test_thin_qr_random_5x3():
    A = np.random.default_rng(5).standard_normal((5, 3))
    Q, R, replaced = thin_qr(A)
    _check_qr(A, Q, R)
    assert replaced == ()
    # agrees with LAPACK up to the sign convention
    Ql, Rl = np.linalg.qr(A)
    s = np.sign(np.diag(Rl))
    np.testing.assert_allclose(Q, Ql * s, atol=1e-12)
    np.testing.assert_allclose(R, Rl * s[:, None], atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(d=st.integers(1, 30), k=st.integers(1, 8), seed=st.integers(0, 2**31),
       log_scale=st.floats(-6, 6))
def test_thin_qr_postconditions(d, k, seed, log_scale):
    k = min(k, d)
    A = np.random.default_rng(seed).standard_normal((d, k)) * 10.0 ** log_scale
    Q, R, replaced = thin_qr(A)
    assert replaced == ()
    _check_qr(A, Q, R)


def test_thin_qr_rank_deficient_column_is_rerandomized():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(6)
    A = np.column_stack([a, 2 * a, rng.standard_normal(6)])
    Q, R, replaced = thin_qr(A, rng=np.random.default_rng(3))
    assert replaced == (1,)
    assert orthonormality_error(Q) <= 1e-10
    assert R[1, 1] == 0.0
    # surviving columns still reconstruct
    np.testing.assert_allclose((Q @ R)[:, [0, 2]], A[:, [0, 2]], atol=1e-10)


def test_thin_qr_zero_matrix():
    Q, R, replaced = thin_qr(np.zeros((4, 2)))
    assert replaced == (0, 1)
    assert orthonormality_error(Q) <= 1e-10


def test_thin_qr_is_deterministic_without_rng():
    A = np.zeros((5, 2))
    assert np.array_equal(thin_qr(A).Q, thin_qr(A).Q)


def test_thin_qr_rejects_wide_input():
    with pytest.raises(DimensionError):
        thin_qr(np.ones((2, 3)))


def test_thin_qr_does_not_modify_input_by_default():
    A = np.random.default_rng(0).standard_normal((5, 2))
    A0 = A.copy()
    thin_qr(A)
    np.testing.assert_array_equal(A, A0)


# ---------------------------------------------------------------- normalize / column_norms


def test_normalize_values():
    np.testing.assert_allclose(normalize(np.array([3.0, 4.0])), [0.6, 0.8])
    np.testing.assert_array_equal(normalize(np.array([0.0, 1.0])), [0.0, 1.0])


@pytest.mark.parametrize("v", [[0.0, 0.0], [np.nan, 1.0], [np.inf, 0.0]])
def test_normalize_rejects_degenerate(v):
    with pytest.raises(ZeroVectorError):
        normalize(np.array(v))


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=30))
def test_normalize_is_idempotent(vals):
    v = np.array(vals)
    if np.linalg.norm(v) < 1e-100:
        return
    u = normalize(v)
    np.testing.assert_allclose(normalize(u), u, atol=1e-15, rtol=0)
    assert abs(np.linalg.norm(u) - 1.0) < 1e-12


def test_column_norms_values():
    np.testing.assert_array_equal(column_norms(np.eye(3)), [1.0, 1.0, 1.0])
    A = np.array([[3.0, 0.0], [4.0, 0.0], [0.0, 2.0]])
    np.testing.assert_allclose(column_norms(A), [5.0, 2.0])


def test_column_norms_brute_force():
    A = np.random.default_rng(9).standard_normal((17, 4))
    brute = [np.sqrt(sum(A[i, j] ** 2 for i in range(17))) for j in range(4)]
    np.testing.assert_allclose(column_norms(A), brute, rtol=1e-14)
