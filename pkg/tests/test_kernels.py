import math

import numpy as np
import pytest

from twinkern import (
    Dataset,
    InvalidData,
    KernelFamily,
    KernelMatrix,
    KernelParams,
    DegenerateInput,
    ShapeError,
    TooFewSamples,
    hsic,
    kernel_gradient,
    kernel_matrix,
    kernel_row,
)
from conftest import rand_psd_normalized, rel_err

RBF = KernelParams(KernelFamily.RBF, 1.0)
LIN = KernelParams(KernelFamily.LINEAR, 1.0)


class TestDataset:
    def test_row_count_mismatch(self):
        with pytest.raises(ShapeError):
            Dataset(np.zeros((3, 2)), np.zeros((4, 1)))

    def test_too_few_rows(self):
        with pytest.raises(TooFewSamples):
            Dataset(np.zeros((1, 2)), np.zeros((1, 1)))

    def test_non_finite(self):
        bad = np.array([[1.0], [np.nan]])
        with pytest.raises(InvalidData):
            Dataset(bad, np.zeros((2, 1)))

    def test_one_dimensional_arrays_become_columns(self):
        d = Dataset(np.arange(3.0), np.arange(3.0))
        assert d.inputs.shape == (3, 1)
        assert d.n_outputs == 1

    def test_immutable(self):
        d = Dataset(np.zeros((2, 1)), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            d.inputs[0, 0] = 1.0

    def test_take_preserves_order(self):
        d = Dataset(np.arange(8.0), np.arange(8.0))
        sub = d.take([5, 1, 2])
        assert sub.inputs[:, 0].tolist() == [5.0, 1.0, 2.0]


class TestKernelMatrix:
    def test_rbf_identical_points_all_ones(self):
        x = np.array([[1.5, -2.0], [1.5, -2.0]])
        k = kernel_matrix(x, KernelParams(KernelFamily.RBF, 3.7))
        assert np.array_equal(k.values, np.ones((2, 2)))
        assert k.normalized

    def test_rbf_two_scalars(self):
        k = kernel_matrix(np.array([[0.0], [1.0]]), RBF)
        assert k.values[0, 0] == 1.0
        assert abs(k.values[0, 1] - math.exp(-1.0)) < 1e-15
        assert abs(k.values[0, 1] - 0.367879441171442) < 1e-12

    def test_rbf_matches_double_loop(self, rng):
        x = rng.normal(size=(5, 3))
        params = KernelParams(KernelFamily.RBF, 0.7)
        k = kernel_matrix(x, params).values
        for i in range(5):
            for j in range(5):
                expected = math.exp(-0.7 * float(np.sum((x[i] - x[j]) ** 2)))
                assert abs(k[i, j] - expected) < 1e-12

    def test_rbf_symmetric_unit_diagonal(self, rng):
        x = rng.normal(size=(20, 4))
        k = kernel_matrix(x, RBF).values
        assert np.array_equal(k, k.T)
        assert np.all(np.diag(k) == 1.0)

    def test_linear_is_cosine_normalized(self, rng):
        x = rng.normal(size=(6, 3))
        # the scale cancels under cosine normalization
        k1 = kernel_matrix(x, KernelParams(KernelFamily.LINEAR, 1.0)).values
        k2 = kernel_matrix(x, KernelParams(KernelFamily.LINEAR, 42.0)).values
        assert np.allclose(k1, k2, atol=1e-15)
        for i in range(6):
            for j in range(6):
                expected = float(x[i] @ x[j]) / (np.linalg.norm(x[i]) * np.linalg.norm(x[j]))
                assert abs(k1[i, j] - expected) < 1e-12
        assert np.all(np.abs(k1) <= 1.0)
        assert np.all(np.diag(k1) == 1.0)

    def test_linear_zero_row_rejected(self):
        x = np.array([[0.0, 0.0], [1.0, 2.0]])
        with pytest.raises(DegenerateInput):
            kernel_matrix(x, LIN)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            kernel_matrix(np.ones((1, 2)), RBF)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidData):
            kernel_matrix(np.array([[0.0], [np.inf]]), RBF)

    def test_psd_up_to_roundoff(self, rng):
        x = rng.normal(size=(30, 3))
        for params in (RBF, LIN):
            vals = np.linalg.eigvalsh(kernel_matrix(x, params).values)
            assert vals[0] >= -1e-8 * vals[-1]

    def test_wrapper_validates_symmetry(self):
        bad = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(ValueError):
            KernelMatrix(values=bad, normalized=False)


class TestKernelRow:
    def test_self_similarity_is_exact_one(self, rng):
        x = rng.normal(size=(5, 2))
        row = kernel_row(x, x[3], RBF)
        assert row[3] == 1.0

    def test_single_point_direct_value(self):
        row = kernel_row(np.array([[0.0, 0.0]]), np.array([1.0, 0.0]),
                         KernelParams(KernelFamily.RBF, 2.0))
        assert row.shape == (1,)
        assert abs(row[0] - math.exp(-2.0)) < 1e-15

    def test_matches_scalar_oracle(self, rng):
        x = rng.normal(size=(4, 3))
        q = rng.normal(size=3)
        for params in (KernelParams(KernelFamily.RBF, 0.9), LIN):
            row = kernel_row(x, q, params)
            for i in range(4):
                k2 = kernel_matrix(np.vstack([x[i], q]), params).values[0, 1]
                assert abs(row[i] - k2) < 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ShapeError):
            kernel_row(rng.normal(size=(4, 3)), np.zeros(2), RBF)


class TestHsic:
    def test_constant_kernel_annihilates(self, rng):
        j = np.ones((7, 7))
        g = rand_psd_normalized(rng, 7)
        assert hsic(j, g) == 0.0
        assert hsic(g, j) == 0.0

    def test_identity_pair_m2(self):
        # hand expansion: H = [[1/2, -1/2], [-1/2, 1/2]], trace(H H) = 1
        assert hsic(np.eye(2), np.eye(2)) == 1.0

    def test_matches_dense_centering_oracle(self, rng):
        m = 6
        k = rand_psd_normalized(rng, m)
        g = rand_psd_normalized(rng, m)
        h = np.eye(m) - np.ones((m, m)) / m
        expected = np.trace(k @ h @ g @ h) / (m - 1) ** 2
        assert abs(hsic(k, g) - expected) < 1e-10

    def test_accepts_kernel_matrix_wrappers(self, rng):
        x = rng.normal(size=(5, 2))
        y = rng.normal(size=(5, 3))
        k = kernel_matrix(x, RBF)
        g = kernel_matrix(y, RBF)
        assert hsic(k, g) == hsic(k.values, g.values)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            hsic(np.eye(3), np.eye(4))

    def test_symmetry(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 10))
            k = rand_psd_normalized(rng, m)
            g = rand_psd_normalized(rng, m)
            assert abs(hsic(k, g) - hsic(g, k)) < 1e-10

    def test_joint_permutation_invariance(self, rng):
        for _ in range(50):
            m = int(rng.integers(3, 10))
            k = rand_psd_normalized(rng, m)
            g = rand_psd_normalized(rng, m)
            perm = rng.permutation(m)
            kp = k[np.ix_(perm, perm)]
            gp = g[np.ix_(perm, perm)]
            assert abs(hsic(kp, gp) - hsic(k, g)) < 1e-10

    def test_nonnegative_for_psd_inputs(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 12))
            assert hsic(rand_psd_normalized(rng, m), rand_psd_normalized(rng, m)) >= 0.0


class TestKernelGradient:
    def test_rbf_zero_at_coincident_point(self, rng):
        x = rng.normal(size=(5, 3))
        grad = kernel_gradient(x, x[2], RBF)
        assert np.array_equal(grad[2], np.zeros(3))

    def test_matches_finite_differences(self, rng):
        step = 1e-5
        for params in (KernelParams(KernelFamily.RBF, 0.8), LIN):
            worst = 0.0
            for _ in range(100):
                m = int(rng.integers(1, 6))
                p = int(rng.integers(1, 5))
                x = rng.normal(size=(m, p))
                q = rng.normal(size=p) + 0.1
                grad = kernel_gradient(x, q, params)
                for d in range(p):
                    hi = q.copy(); hi[d] += step
                    lo = q.copy(); lo[d] -= step
                    fd = (kernel_row(x, hi, params) - kernel_row(x, lo, params)) / (2 * step)
                    worst = max(worst, rel_err(grad[:, d], fd))
            assert worst < 1e-5, f"{params.family}: {worst}"

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ShapeError):
            kernel_gradient(rng.normal(size=(4, 3)), np.zeros(4), RBF)
