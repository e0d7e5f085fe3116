import numpy as np
import pytest

from svdn.errors import DegeneracyError, ValidationError
from svdn.linalg import SvdFactors, frobenius_norm, matmul, pairwise_sq_dist, qr, svd, transpose

from oracles import jacobi_eigenvalues, loop_sq_dists


def random_matrix(n, k, seed, scale=1.0):
    return np.random.default_rng(seed).normal(size=(n, k)) * scale


class TestSvd:
    def test_identity(self):
        u, s, vt = svd(np.eye(3))
        assert np.allclose(u, np.eye(3), atol=1e-12)
        assert np.allclose(s, [1.0, 1.0, 1.0], atol=1e-12)
        assert np.allclose(vt, np.eye(3), atol=1e-12)

    def test_diagonal_already_sorted(self):
        u, s, vt = svd(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(u, np.eye(3), atol=1e-12)
        assert np.allclose(s, [3.0, 2.0, 1.0], atol=1e-12)
        assert np.allclose(vt, np.eye(3), atol=1e-12)

    def test_reconstruction_and_jacobi_cross_check(self):
        w = random_matrix(8, 4, seed=42)
        u, s, vt = svd(w)
        rec = u @ np.diag(s) @ vt
        assert np.linalg.norm(rec - w) / np.linalg.norm(w) < 1e-9
        # singular values must match the eigenvalues of w^T w computed by
        # an independent Jacobi iteration
        eig = jacobi_eigenvalues(w.T @ w)
        assert np.allclose(s, np.sqrt(np.clip(eig, 0.0, None)), rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("seed", range(8))
    def test_factor_invariants(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 30))
        k = int(rng.integers(1, n + 1))
        w = rng.normal(size=(n, k)) * rng.uniform(0.01, 100.0)
        factors = svd(w)
        assert isinstance(factors, SvdFactors)
        u, s, vt = factors
        assert np.linalg.norm(u.T @ u - np.eye(k)) <= 1e-9
        assert np.linalg.norm(vt @ vt.T - np.eye(k)) <= 1e-9
        assert np.all(s >= 0)
        assert np.all(np.diff(s) <= 0)
        assert np.linalg.norm(u @ np.diag(s) @ vt - w) <= 1e-9 * (1 + np.linalg.norm(w))

    def test_sign_convention(self):
        for seed in range(6):
            u, _, _ = svd(random_matrix(9, 5, seed))
            for j in range(u.shape[1]):
                i = int(np.argmax(np.abs(u[:, j])))
                assert u[i, j] >= 0.0

    def test_determinism_bitwise(self):
        w = random_matrix(10, 6, seed=3)
        a = svd(w.copy())
        b = svd(w.copy())
        assert np.array_equal(a.u, b.u) and np.array_equal(a.s, b.s) and np.array_equal(a.vt, b.vt)

    def test_rejects_wide_matrix(self):
        with pytest.raises(ValidationError):
            svd(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        w = np.ones((3, 2))
        w[0, 0] = np.nan
        with pytest.raises(ValidationError):
            svd(w)

    def test_rejects_1d(self):
        with pytest.raises(ValidationError):
            svd(np.ones(4))


class TestQr:
    def test_identity(self):
        q, r = qr(np.eye(2))
        assert np.allclose(q, np.eye(2), atol=1e-12)
        assert np.allclose(r, np.eye(2), atol=1e-12)

    def test_small_example(self):
        w = np.array([[3.0, 1.0], [4.0, 1.0]])
        q, r = qr(w)
        assert np.linalg.norm(q.T @ q - np.eye(2)) <= 1e-9
        assert np.allclose(r, np.triu(r))
        assert np.all(np.diag(r) > 0)
        assert np.linalg.norm(q @ r - w) <= 1e-9 * np.linalg.norm(w)

    @pytest.mark.parametrize("seed", range(6))
    def test_reconstruction_random(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 25))
        k = int(rng.integers(1, n + 1))
        w = rng.normal(size=(n, k))
        q, r = qr(w)
        assert np.linalg.norm(q.T @ q - np.eye(k)) <= 1e-9
        assert np.allclose(r, np.triu(r))
        assert np.all(np.diag(r) >= 0)
        assert np.linalg.norm(q @ r - w) <= 1e-9 * (1 + np.linalg.norm(w))

    def test_duplicated_column_degenerate(self):
        col = np.arange(1.0, 5.0)
        w = np.stack([col, col], axis=1)
        with pytest.raises(DegeneracyError, match="column"):
            qr(w)

    def test_zero_matrix_degenerate(self):
        with pytest.raises(DegeneracyError):
            qr(np.zeros((3, 2)))


class TestHelpers:
    def test_matmul_shape_error(self):
        with pytest.raises(ValidationError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_matmul_and_transpose(self):
        a = random_matrix(3, 4, seed=0)
        b = random_matrix(4, 2, seed=1)
        assert np.array_equal(matmul(a, b), a @ b)
        assert np.array_equal(transpose(a), a.T)

    def test_frobenius(self):
        a = np.array([[3.0, 4.0]])
        assert frobenius_norm(a) == 5.0


class TestPairwiseSqDist:
    def test_known_value(self):
        d = pairwise_sq_dist(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]]))
        assert d.shape == (1, 1)
        assert d[0, 0] == 25.0

    def test_identical_rows_exact_zero(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(6, 5)) * 37.0
        b = rng.normal(size=(4, 5))
        b[2] = a[3]
        d = pairwise_sq_dist(a, b)
        assert d[3, 2] == 0.0

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(5, 3))
        b = rng.normal(size=(4, 3))
        assert np.abs(pairwise_sq_dist(a, b) - loop_sq_dists(a, b)).max() <= 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_self_symmetry_zero_diagonal(self, seed):
        a = np.random.default_rng(seed).normal(size=(12, 7)) * 10.0
        d = pairwise_sq_dist(a, a)
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0.0)
        assert np.all(d >= 0.0)

    def test_dim_mismatch(self):
        with pytest.raises(ValidationError):
            pairwise_sq_dist(np.ones((2, 3)), np.ones((2, 4)))
