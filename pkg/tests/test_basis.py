import numpy as np
import pytest
from scipy.integrate import quad

from twinkern import (
    BasisKind,
    BasisSpec,
    DomainError,
    InvalidCoefficients,
    InvalidWeightParam,
    TransformSpec,
    apply_transform,
    basis_kernel_stack,
    gegenbauer_deriv_eval,
    gegenbauer_eval,
    transform_derivative,
    transform_value,
    weight_function,
)
from twinkern.kernels import KernelMatrix
from conftest import rand_psd_normalized, rand_transform_spec

MONO = BasisSpec(kind=BasisKind.MONOMIAL)
GEGEN = BasisSpec(kind=BasisKind.GEGENBAUER, weight_param=0.51)


class TestGegenbauerEval:
    def test_degree_zero_is_one(self, rng):
        for _ in range(10):
            gamma = float(rng.uniform(-0.49, 3.0))
            t = float(rng.uniform(-1, 1))
            assert gegenbauer_eval(0, gamma, t) == 1.0

    def test_degree_one(self):
        assert abs(gegenbauer_eval(1, 0.51, 0.5) - 0.51) < 1e-15

    def test_degree_two_closed_form(self, rng):
        # one recurrence step by hand: G2 = 2 g (g + 1) t^2 - g
        assert abs(gegenbauer_eval(2, 1.0, 0.5)) < 1e-15
        for _ in range(20):
            gamma = float(rng.uniform(-0.4, 2.5))
            t = float(rng.uniform(-1, 1))
            expected = 2 * gamma * (gamma + 1) * t * t - gamma
            assert abs(gegenbauer_eval(2, gamma, t) - expected) < 1e-12

    def test_invalid_weight(self):
        with pytest.raises(InvalidWeightParam):
            gegenbauer_eval(3, -0.5, 0.2)

    def test_domain_overshoot_clamped_and_rejected(self):
        assert gegenbauer_eval(1, 1.0, 1.0 + 1e-10) == gegenbauer_eval(1, 1.0, 1.0)
        with pytest.raises(DomainError):
            gegenbauer_eval(1, 1.0, 1.1)

    def test_chebyshev_u_identity_at_gamma_one(self):
        # G_i at weight 1 equals Chebyshev U_i: U_i(cos h) sin h = sin((i+1) h)
        for i in range(9):
            for theta in np.linspace(0.05, np.pi - 0.05, 25):
                lhs = gegenbauer_eval(i, 1.0, float(np.cos(theta))) * np.sin(theta)
                assert abs(lhs - np.sin((i + 1) * theta)) < 1e-9

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            gegenbauer_eval(65, 1.0, 0.5)

    def test_degree_warning_above_thirty(self):
        with pytest.warns(UserWarning):
            gegenbauer_eval(31, 1.0, 0.5)


class TestGegenbauerDeriv:
    def test_degree_zero(self):
        assert gegenbauer_deriv_eval(0, 0.7, 0.3) == 0.0

    def test_degree_one_constant(self, rng):
        for _ in range(10):
            gamma = float(rng.uniform(-0.4, 2.0))
            t = float(rng.uniform(-1, 1))
            assert abs(gegenbauer_deriv_eval(1, gamma, t) - 2 * gamma) < 1e-15

    def test_matches_finite_differences(self, rng):
        step = 1e-6
        for _ in range(60):
            degree = int(rng.integers(0, 11))
            gamma = float(rng.uniform(-0.3, 2.0))
            t = float(rng.uniform(-0.95, 0.95))
            fd = (gegenbauer_eval(degree, gamma, t + step)
                  - gegenbauer_eval(degree, gamma, t - step)) / (2 * step)
            exact = gegenbauer_deriv_eval(degree, gamma, t)
            assert abs(exact - fd) <= 1e-5 * max(abs(fd), 1.0)


class TestWeightFunction:
    def test_flat_at_half(self, rng):
        for _ in range(10):
            assert weight_function(float(rng.uniform(-0.99, 0.99)), 0.5) == 1.0

    def test_unit_at_origin(self):
        assert weight_function(0.0, 2.3) == 1.0

    def test_direct_value(self):
        assert abs(weight_function(0.6, 1.5) - 0.64) < 1e-15

    def test_endpoints_excluded(self):
        with pytest.raises(DomainError):
            weight_function(1.0, 1.5)
        with pytest.raises(DomainError):
            weight_function(-1.0000001, 1.5)

    def test_invalid_weight(self):
        with pytest.raises(InvalidWeightParam):
            weight_function(0.5, -0.6)


class TestOrthogonality:
    @pytest.mark.parametrize("gamma", [0.51, 1.0])
    def test_weighted_integrals_vanish(self, gamma):
        eps = 1e-8
        for k in range(0, 6):
            for l in range(k + 1, 6):
                integrand = lambda t: (
                    gegenbauer_eval(k, gamma, t)
                    * gegenbauer_eval(l, gamma, t)
                    * weight_function(t, gamma)
                )
                value, _ = quad(integrand, -1 + eps, 1 - eps, limit=200)
                assert abs(value) < 1e-6, (k, l, gamma, value)


class TestTransformSpec:
    def test_negative_coefficient_rejected(self):
        with pytest.raises(InvalidCoefficients):
            TransformSpec(basis=MONO, coefficients=np.array([-0.1, 1.0]))

    def test_norm_enforced(self):
        with pytest.raises(InvalidCoefficients):
            TransformSpec(basis=MONO, coefficients=np.array([1.0, 1.0]))

    def test_identity_spec(self):
        spec = TransformSpec.identity(MONO)
        assert spec.degree == 1
        assert spec.coefficients.tolist() == [0.0, 1.0]


class TestBasisKernelStack:
    def test_degree_zero_is_all_ones(self, rng):
        k = rand_psd_normalized(rng, 4)
        for basis in (MONO, GEGEN):
            stack = basis_kernel_stack(k, basis, 0)
            assert len(stack) == 1
            assert np.array_equal(stack[0], np.ones((4, 4)))

    def test_monomial_degree_one(self, rng):
        k = rand_psd_normalized(rng, 5)
        stack = basis_kernel_stack(k, MONO, 1)
        assert np.array_equal(stack[0], np.ones((5, 5)))
        assert np.array_equal(stack[1], k)

    def test_monomial_hadamard_powers(self, rng):
        k = rand_psd_normalized(rng, 4)
        stack = basis_kernel_stack(k, MONO, 4)
        for i in range(5):
            assert np.allclose(stack[i], k**i, atol=1e-14)

    def test_gegenbauer_matches_scalar_oracle(self, rng):
        k = rand_psd_normalized(rng, 3)
        basis = BasisSpec(kind=BasisKind.GEGENBAUER, weight_param=1.0)
        stack = basis_kernel_stack(k, basis, 2)
        for deg in range(3):
            for i in range(3):
                for j in range(3):
                    assert abs(stack[deg][i, j] - gegenbauer_eval(deg, 1.0, k[i, j])) < 1e-12

    def test_out_of_domain_rejected(self):
        bad = np.array([[1.0, 1.5], [1.5, 1.0]])
        with pytest.raises(DomainError):
            basis_kernel_stack(bad, GEGEN, 2)


class TestApplyTransform:
    def test_monomial_identity_returns_k_exactly(self, rng):
        k = KernelMatrix(values=rand_psd_normalized(rng, 6), normalized=True)
        out = apply_transform(k, TransformSpec.identity(MONO))
        assert np.array_equal(out.values, k.values)
        assert out.normalized is False

    def test_constant_spec_gives_scaled_ones(self, rng):
        k = rand_psd_normalized(rng, 4)
        spec = TransformSpec(basis=MONO, coefficients=np.array([1.0, 0.0, 0.0]))
        out = apply_transform(k, spec)
        assert np.array_equal(out.values, np.ones((4, 4)))

    def test_matches_dense_sum_and_stays_psd(self, rng):
        # gegenbauer positivity needs rank(K) <= 2 * weight + 2, so the
        # gegenbauer case uses a rank-3 kernel with weight 0.51
        cases = [
            (BasisKind.MONOMIAL, rand_psd_normalized(rng, 5), 0.51),
            (BasisKind.GEGENBAUER, rand_psd_normalized(rng, 5, rank=3), 0.51),
        ]
        for kind, k, weight in cases:
            spec = rand_transform_spec(rng, kind, degree=4, weight_param=weight)
            out = apply_transform(k, spec).values
            stack = basis_kernel_stack(k, spec.basis, 4)
            dense = sum(c * layer for c, layer in zip(spec.coefficients, stack))
            assert np.allclose(out, dense, atol=1e-13)
            eig = np.linalg.eigvalsh(out)
            assert eig[0] >= -1e-8 * max(eig[-1], 1e-30)

    def test_positivity_preserved_over_random_specs(self, rng):
        # 200 random PSD kernels and valid specs, both bases, degree <= 11.
        # Monomial transforms are PSD-preserving for any PSD normalized K;
        # gegenbauer ones only within the rank <= 2 * weight + 2 regime,
        # so those trials draw a compatible kernel rank.
        for trial in range(200):
            m = int(rng.integers(4, 9))
            degree = int(rng.integers(1, 12))
            if trial % 2:
                kind = BasisKind.MONOMIAL
                weight = 0.51
                k = rand_psd_normalized(rng, m)
            else:
                kind = BasisKind.GEGENBAUER
                weight = float(rng.uniform(0.5, 2.5))
                k = rand_psd_normalized(rng, m, rank=min(int(2 * weight + 2), m))
            spec = rand_transform_spec(rng, kind, degree, weight_param=weight)
            eig = np.linalg.eigvalsh(apply_transform(k, spec).values)
            assert eig[0] >= -1e-8 * max(eig[-1], 1e-30)

    def test_gegenbauer_positivity_fails_beyond_rank_regime(self):
        # the identity is the Gram matrix of orthonormal vectors; the
        # degree-2 polynomial at weight 0.51 is indefinite on it once
        # m > 2 * weight + 2, which is why the regime restriction exists
        spec = TransformSpec(basis=GEGEN, coefficients=np.array([0.0, 0.0, 1.0]))
        eig = np.linalg.eigvalsh(apply_transform(np.eye(8), spec).values)
        assert eig[0] < -1e-3


class TestTransformScalars:
    def test_identity_derivative_is_one(self, rng):
        spec = TransformSpec.identity(MONO)
        for _ in range(10):
            assert transform_derivative(spec, float(rng.uniform(-1, 1))) == 1.0

    def test_constant_derivative_is_zero(self):
        spec = TransformSpec(basis=MONO, coefficients=np.array([1.0, 0.0]))
        assert transform_derivative(spec, 0.4) == 0.0

    def test_derivative_matches_finite_differences(self, rng):
        step = 1e-6
        for _ in range(50):
            kind = BasisKind.MONOMIAL if rng.random() < 0.5 else BasisKind.GEGENBAUER
            spec = rand_transform_spec(rng, kind, int(rng.integers(1, 12)))
            t = float(rng.uniform(-0.95, 0.95))
            fd = (transform_value(spec, t + step) - transform_value(spec, t - step)) / (2 * step)
            assert abs(transform_derivative(spec, t) - fd) <= 1e-5 * max(abs(fd), 1.0)

    def test_endpoint_value_finite_and_consistent(self, rng):
        # sum_i c_i G_i(1) is finite and equals the recurrence evaluation at 1
        for _ in range(20):
            spec = rand_transform_spec(rng, BasisKind.GEGENBAUER, int(rng.integers(1, 12)))
            direct = sum(
                c * gegenbauer_eval(i, spec.basis.weight_param, 1.0)
                for i, c in enumerate(spec.coefficients)
            )
            value = transform_value(spec, 1.0)
            assert np.isfinite(value)
            assert abs(value - direct) < 1e-10
