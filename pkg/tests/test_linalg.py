import numpy as np
import pytest

from kofilter import linalg
from kofilter.errors import NotPositiveSemiDefinite, RankDeficient, ZeroColumn

from oracles import gauss_jordan_solve, min_eig_bisect


class TestNormalizeColumns:
    def test_identity_unchanged(self):
        eye = np.eye(2)
        np.testing.assert_allclose(linalg.normalize_columns(eye), eye)

    def test_analytic_column(self):
        out = linalg.normalize_columns(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(out, np.array([[0.6], [0.8]]))

    def test_zero_column_raises(self):
        m = np.ones((3, 3))
        m[:, 1] = 0.0
        with pytest.raises(ZeroColumn) as exc:
            linalg.normalize_columns(m)
        assert exc.value.index == 1

    def test_gram_of_normalized_has_unit_diagonal(self, rng):
        for _ in range(20):
            m = rng.standard_normal((15, 6)) * rng.uniform(0.1, 10)
            g = linalg.gram(linalg.normalize_columns(m))
            np.testing.assert_allclose(np.diag(g), 1.0, atol=1e-12)


class TestGram:
    def test_identity(self):
        np.testing.assert_array_equal(linalg.gram(np.eye(3)), np.eye(3))

    def test_unit_column(self):
        np.testing.assert_allclose(linalg.gram(np.array([[0.6], [0.8]])), [[1.0]])

    def test_two_column_formula(self, rng):
        m = rng.standard_normal((7, 2))
        u, v = m[:, 0], m[:, 1]
        expected = np.array([[u @ u, u @ v], [u @ v, v @ v]])
        np.testing.assert_allclose(linalg.gram(m), expected, rtol=1e-14)

    def test_exact_symmetry(self, rng):
        g = linalg.gram(rng.standard_normal((30, 12)))
        assert np.array_equal(g, g.T)


class TestMinEigenvalue:
    def test_identity(self):
        assert linalg.min_eigenvalue(np.eye(5)) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert linalg.min_eigenvalue(np.diag([2.0, 0.5])) == pytest.approx(0.5, abs=1e-12)

    def test_ar1_gram_vs_bisection_oracle(self, rng):
        from conftest import make_design

        x = make_design(50, 10, rng, rho=0.6)
        sigma = linalg.gram(x)
        assert linalg.min_eigenvalue(sigma) == pytest.approx(min_eig_bisect(sigma), abs=1e-8)

    def test_known_spectrum(self, rng):
        for _ in range(10):
            d = rng.uniform(0.1, 5.0, size=8)
            q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
            s = linalg.symmetrize(q @ np.diag(d) @ q.T)
            assert linalg.min_eigenvalue(s) == pytest.approx(d.min(), abs=1e-10)


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(linalg.cholesky(np.eye(4)), np.eye(4))

    def test_hand_factorization(self):
        L = linalg.cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]))
        np.testing.assert_allclose(L, np.array([[2.0, 0.0], [1.0, 2.0]]))

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveSemiDefinite):
            linalg.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_singular_psd_succeeds(self):
        s = np.array([[1.0, 1.0], [1.0, 1.0]])  # rank one, eigenvalues {2, 0}
        L = linalg.cholesky(s)
        np.testing.assert_allclose(L @ L.T, s, atol=1e-12)

    def test_reconstruction_random_spd(self, rng):
        for _ in range(20):
            a = rng.standard_normal((12, 12))
            s = linalg.symmetrize(a @ a.T + 0.1 * np.eye(12))
            L = linalg.cholesky(s)
            assert np.linalg.norm(L @ L.T - s) <= 1e-10 * np.linalg.norm(s)

    def test_gram_never_fails(self, rng):
        for _ in range(20):
            m = rng.standard_normal((20, 8))
            linalg.cholesky(linalg.gram(m))  # PSD by construction


class TestPsdFactor:
    def test_reconstructs_spd(self, rng):
        a = rng.standard_normal((10, 10))
        s = linalg.symmetrize(a @ a.T + 0.2 * np.eye(10))
        c = linalg.psd_factor(s)
        np.testing.assert_allclose(c.T @ c, s, atol=1e-12 * np.linalg.norm(s))

    def test_exactly_singular(self, rng):
        v = rng.standard_normal((8, 3))
        s = linalg.symmetrize(v @ v.T)  # rank 3
        c = linalg.psd_factor(s)
        np.testing.assert_allclose(c.T @ c, s, atol=1e-12)

    def test_grazed_singular_near_null_amplification(self, rng):
        # rotate an exactly singular spectrum so the null direction has a
        # tiny weight on the last coordinate; unpivoted elimination amplifies
        # the zero pivot, the pivoted factorization must not
        q, _ = np.linalg.qr(rng.standard_normal((12, 12)))
        d = np.concatenate([rng.uniform(0.5, 2.0, 11), [0.0]])
        s = linalg.symmetrize(q @ np.diag(d) @ q.T)
        c = linalg.psd_factor(s)
        np.testing.assert_allclose(c.T @ c, s, atol=1e-10)

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveSemiDefinite):
            linalg.psd_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_zero_matrix(self):
        c = linalg.psd_factor(np.zeros((4, 4)))
        np.testing.assert_array_equal(c, np.zeros((4, 4)))


class TestSolveSpd:
    def test_identity(self, rng):
        rhs = rng.standard_normal(6)
        np.testing.assert_array_equal(linalg.solve_spd(np.eye(6), rhs), rhs)

    def test_diagonal(self):
        x = linalg.solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_vs_gauss_jordan_oracle(self, rng):
        a = rng.standard_normal((20, 20))
        s = linalg.symmetrize(a @ a.T + np.eye(20))
        rhs = rng.standard_normal(20)
        np.testing.assert_allclose(
            linalg.solve_spd(s, rhs), gauss_jordan_solve(s, rhs), atol=1e-8
        )

    def test_roundtrip(self, rng):
        for _ in range(10):
            a = rng.standard_normal((9, 9))
            s = linalg.symmetrize(a @ a.T + 0.5 * np.eye(9))
            x = rng.standard_normal(9)
            np.testing.assert_allclose(linalg.solve_spd(s, s @ x), x, atol=1e-9)

    def test_singular_raises(self):
        with pytest.raises(NotPositiveSemiDefinite):
            linalg.solve_spd(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))


class TestOrthonormalComplement:
    def test_standard_basis(self):
        m = np.eye(4)[:, :2]
        u = linalg.orthonormal_complement(m, 2)
        np.testing.assert_allclose(u.T @ u, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(u.T @ m, 0.0, atol=1e-12)
        # columns lie in span(e3, e4)
        np.testing.assert_allclose(u[:2, :], 0.0, atol=1e-12)

    def test_k_zero(self, rng):
        u = linalg.orthonormal_complement(rng.standard_normal((5, 2)), 0)
        assert u.shape == (5, 0)

    def test_random_identities(self, rng):
        m = rng.standard_normal((40, 10))
        u = linalg.orthonormal_complement(m, 10)
        np.testing.assert_allclose(u.T @ u, np.eye(10), atol=1e-10)
        np.testing.assert_allclose(u.T @ m, 0.0, atol=1e-10)

    def test_rank_deficient_raises(self, rng):
        m = rng.standard_normal((20, 5))
        m[:, 4] = m[:, 0] + m[:, 1]
        with pytest.raises(RankDeficient):
            linalg.orthonormal_complement(m, 3)

    def test_deterministic(self, rng):
        m = rng.standard_normal((30, 8))
        u1 = linalg.orthonormal_complement(m, 8)
        u2 = linalg.orthonormal_complement(m.copy(), 8)
        assert np.array_equal(u1, u2)
