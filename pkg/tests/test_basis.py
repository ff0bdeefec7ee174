"""Index enumeration, moment-based orthonormalization, and basis evaluation."""

from itertools import product
from math import comb, sqrt

import numpy as np
import pytest
from numpy.testing import assert_allclose

import mixquad as mq


def gauss1d():
    return mq.GaussianMixture([1.0], [[0.0]], [[[1.0]]])


def corr2d():
    return mq.GaussianMixture(
        [0.5, 0.5],
        [[-0.5, 0.3], [0.4, -0.4]],
        [
            [[1.0, 0.24], [0.24, 0.64]],
            [[0.49, -0.28], [-0.28, 1.0]],
        ],
    )


def hermite_basis(q):
    return mq.gram_schmidt(mq.raw_moments(gauss1d(), 2 * q), 1, q)


# Normalized probabilists' Hermite coefficients: He_j / sqrt(j!).
HERMITE_ROWS = {
    0: [1.0],
    1: [0.0, 1.0],
    2: [-1.0 / sqrt(2.0), 0.0, 1.0 / sqrt(2.0)],
    3: [0.0, -3.0 / sqrt(6.0), 0.0, 1.0 / sqrt(6.0)],
    4: [3.0 / sqrt(24.0), 0.0, -6.0 / sqrt(24.0), 0.0, 1.0 / sqrt(24.0)],
}


class TestEnumerateIndices:
    def test_first_order_pair_in_two_dims(self):
        got = [mi.exponents for mi in mq.enumerate_indices(2, 1)]
        assert got == [(0, 0), (1, 0), (0, 1)]

    def test_counts_match_binomial(self):
        assert len(mq.enumerate_indices(6, 2)) == comb(8, 2)
        assert len(mq.enumerate_indices(6, 4)) == comb(10, 4)
        assert len(mq.enumerate_indices(1, 7)) == 8

    def test_matches_brute_force_enumeration(self):
        d, q = 3, 4
        brute = [g for g in product(range(q + 1), repeat=d) if sum(g) <= q]
        brute.sort(key=lambda g: (sum(g), tuple(-e for e in g)))
        got = [mi.exponents for mi in mq.enumerate_indices(d, q)]
        assert got == brute

    def test_graded_with_descending_tiebreak(self):
        out = mq.enumerate_indices(4, 3)
        totals = [mi.total_order for mi in out]
        assert totals == sorted(totals)
        for a, b in zip(out, out[1:]):
            if a.total_order == b.total_order:
                assert a.exponents > b.exponents

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            mq.enumerate_indices(0, 2)
        with pytest.raises(ValueError):
            mq.enumerate_indices(2, -1)


class TestGramSchmidt:
    def test_standard_normal_recovers_hermite_rows(self):
        basis = hermite_basis(4)
        for j, row in HERMITE_ROWS.items():
            assert_allclose(basis.coeff_matrix[j, : j + 1], row, atol=1e-12)

    def test_first_function_is_exactly_one(self):
        basis = mq.gram_schmidt(mq.raw_moments(corr2d(), 4), 2, 2)
        assert basis.coeff_matrix[0, 0] == 1.0
        assert np.all(basis.coeff_matrix[0, 1:] == 0.0)

    def test_higher_functions_have_zero_mean(self):
        gm = corr2d()
        mom = mq.raw_moments(gm, 8)
        basis = mq.gram_schmidt(mom, 2, 4)
        mom_vec = np.array([mom[mi.exponents] for mi in basis.indices])
        means = basis.coeff_matrix @ mom_vec
        assert abs(means[0] - 1.0) < 1e-14
        assert np.abs(means[1:]).max() < 1e-10

    def test_two_point_mixture_linear_normalization(self):
        # E[xi^2] = 2, so the linear function is xi / sqrt(2)
        gm = mq.GaussianMixture([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]])
        basis = mq.gram_schmidt(mq.raw_moments(gm, 2), 1, 1)
        assert_allclose(basis.coeff_matrix[1], [0.0, 1.0 / sqrt(2.0)], atol=1e-14)

    def test_lower_triangular_with_positive_diagonal(self):
        basis = mq.gram_schmidt(mq.raw_moments(corr2d(), 8), 2, 4)
        C = basis.coeff_matrix
        assert np.allclose(C, np.tril(C))
        assert np.all(np.diag(C) > 0.0)

    def test_orthonormality_residual_within_tolerance(self):
        gm = corr2d()
        basis = mq.gram_schmidt(mq.raw_moments(gm, 8), 2, 4)
        mom = mq.raw_moments(gm, 8)
        G = np.empty((basis.size, basis.size))
        for a, mia in enumerate(basis.indices):
            for b, mib in enumerate(basis.indices):
                g = tuple(x + y for x, y in zip(mia.exponents, mib.exponents))
                G[a, b] = mom[g]
        resid = np.abs(basis.coeff_matrix @ G @ basis.coeff_matrix.T - np.eye(basis.size)).max()
        assert resid <= 1e-8
        assert_allclose(basis.gram_residual, resid, rtol=1e-6, atol=1e-15)

    def test_lower_order_basis_is_prefix_of_higher(self):
        gm = corr2d()
        mom = mq.raw_moments(gm, 8)
        b2 = mq.gram_schmidt(mom, 2, 2)
        b4 = mq.gram_schmidt(mom, 2, 4)
        n = b2.size
        assert [mi.exponents for mi in b4.indices[:n]] == [mi.exponents for mi in b2.indices]
        assert np.array_equal(b4.coeff_matrix[:n, :n], b2.coeff_matrix)

    def test_covariance_scaling_relation_1d(self):
        # under x -> s x the orthonormal functions satisfy psi_s(x) = psi_1(x/s)
        s = 2.5
        gm = mq.GaussianMixture([1.0], [[0.0]], [[[s * s]]])
        bs = mq.gram_schmidt(mq.raw_moments(gm, 8), 1, 4)
        b1 = hermite_basis(4)
        for x in np.linspace(-3.0, 3.0, 7):
            assert_allclose(
                mq.eval_basis(bs, [s * x]), mq.eval_basis(b1, [x]), atol=1e-9
            )

    def test_degenerate_support_reported_with_index(self):
        # two-point measure at +-1: {1, xi} span everything, xi^2 - 1 vanishes
        values = {(0,): 1.0, (1,): 0.0, (2,): 1.0, (3,): 0.0, (4,): 1.0}
        table = mq.MomentTable(max_order=4, values=values)
        with pytest.raises(mq.DegenerateBasisError) as info:
            mq.gram_schmidt(table, 1, 2)
        assert info.value.index == 2
        assert info.value.norm2 <= 1e-12

    def test_insufficient_moment_order_rejected(self):
        mom = mq.raw_moments(gauss1d(), 4)
        with pytest.raises(ValueError, match="order"):
            mq.gram_schmidt(mom, 1, 3)

    def test_monte_carlo_orthonormality(self):
        gm = corr2d()
        basis = mq.gram_schmidt(mq.raw_moments(gm, 4), 2, 2)
        X = mq.sample(gm, 10 ** 6, seed=1)
        vals = mq.eval_basis_batch(basis, X)  # (n, N)
        prod_mean = vals.T @ vals / X.shape[0]
        for a in range(basis.size):
            for b in range(a + 1):
                target = 1.0 if a == b else 0.0
                se = np.std(vals[:, a] * vals[:, b]) / sqrt(X.shape[0])
                if se == 0.0:  # constant product, e.g. psi_0 * psi_0
                    assert prod_mean[a, b] == target
                    continue
                z = abs(prod_mean[a, b] - target) / se
                assert z <= 3.5, f"({a},{b}): z={z:.2f}"


class TestEvalBasis:
    def test_first_entry_is_one_everywhere(self):
        basis = mq.gram_schmidt(mq.raw_moments(corr2d(), 6), 2, 3)
        rng = np.random.default_rng(2)
        vals = mq.eval_basis_batch(basis, rng.normal(size=(64, 2)))
        assert np.all(vals[:, 0] == 1.0)

    def test_hermite_values_at_one(self):
        basis = hermite_basis(2)
        assert_allclose(mq.eval_basis(basis, [1.0]), [1.0, 1.0, 0.0], atol=1e-14)

    def test_matches_direct_monomial_expansion(self):
        gm = corr2d()
        basis = mq.gram_schmidt(mq.raw_moments(gm, 6), 2, 3)
        E = basis.exponent_matrix()
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 2))
        mono = np.ones((100, basis.size))
        for i in range(basis.size):
            mono[:, i] = X[:, 0] ** E[i, 0] * X[:, 1] ** E[i, 1]
        assert_allclose(mq.eval_basis_batch(basis, X), mono @ basis.coeff_matrix.T, rtol=1e-12, atol=1e-12)

    def test_batch_matches_scalar(self):
        # agreement to rounding; the two shapes may hit different BLAS kernels
        basis = mq.gram_schmidt(mq.raw_moments(corr2d(), 6), 2, 3)
        rng = np.random.default_rng(4)
        X = rng.normal(size=(10, 2))
        batch = mq.eval_basis_batch(basis, X)
        for i in range(10):
            assert_allclose(batch[i], mq.eval_basis(basis, X[i]), rtol=1e-13, atol=1e-14)

    def test_dimension_mismatch_rejected(self):
        basis = hermite_basis(2)
        with pytest.raises(ValueError):
            mq.eval_basis(basis, [0.0, 0.0])


class TestEvalBasisJacobian:
    def test_constant_row_is_zero(self):
        basis = mq.gram_schmidt(mq.raw_moments(corr2d(), 4), 2, 2)
        J = mq.eval_basis_jacobian(basis, [0.3, -0.7])
        assert np.all(J[0] == 0.0)

    def test_cubic_hermite_derivative(self):
        # d/dx (x^3 - 3x)/sqrt(6) at x=2 is 9/sqrt(6)
        basis = hermite_basis(3)
        J = mq.eval_basis_jacobian(basis, [2.0])
        assert_allclose(J[3, 0], 9.0 / sqrt(6.0), rtol=1e-13)

    def test_matches_central_differences(self):
        gm = corr2d()
        basis = mq.gram_schmidt(mq.raw_moments(gm, 6), 2, 3)
        rng = np.random.default_rng(6)
        h = 1e-5
        for x in rng.normal(size=(50, 2)):
            J = mq.eval_basis_jacobian(basis, x)
            for i in range(2):
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                fd = (mq.eval_basis(basis, xp) - mq.eval_basis(basis, xm)) / (2.0 * h)
                assert_allclose(J[:, i], fd, rtol=1e-6, atol=1e-7)

    def test_batch_matches_scalar(self):
        basis = mq.gram_schmidt(mq.raw_moments(corr2d(), 6), 2, 3)
        rng = np.random.default_rng(7)
        X = rng.normal(size=(8, 2))
        batch = mq.eval_basis_jacobian_batch(basis, X)  # (N, d, n)
        for k in range(8):
            assert_allclose(
                batch[:, :, k], mq.eval_basis_jacobian(basis, X[k]), rtol=1e-13, atol=1e-14
            )


class TestBasisJson:
    def test_round_trip_is_byte_stable_and_equivalent(self):
        basis = mq.gram_schmidt(mq.raw_moments(corr2d(), 8), 2, 4)
        text = mq.basis_to_json(basis)
        back = mq.basis_from_json(text)
        assert mq.basis_to_json(back) == text
        assert back.dim == basis.dim and back.order == basis.order
        assert np.array_equal(back.coeff_matrix, basis.coeff_matrix)
        x = np.array([0.4, -1.1])
        assert np.array_equal(mq.eval_basis(back, x), mq.eval_basis(basis, x))

    def test_malformed_rejected(self):
        with pytest.raises(ValueError):
            mq.basis_from_json("{}")
