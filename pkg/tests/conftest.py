"""Shared helpers: random normalized PSD kernels, random transform
specs, and central finite differences."""

import numpy as np
import pytest

from twinkern import BasisKind, BasisSpec, TransformSpec


def rand_psd_normalized(rng, m, rank=None):
    """Random correlation-style matrix: PSD, symmetric, unit diagonal,
    entries in [-1, 1]."""
    rank = rank or m + 2
    a = rng.normal(size=(m, rank))
    c = a @ a.T
    d = np.sqrt(np.diag(c))
    c = c / np.outer(d, d)
    c = np.clip((c + c.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    return c


def rand_coefficients(rng, degree, zero_leading=False):
    """Random nonnegative unit-norm coefficient vector of length degree+1."""
    c = np.abs(rng.normal(size=degree + 1)) + 1e-3
    if zero_leading:
        c[0] = 0.0
    return c / np.linalg.norm(c)


def rand_transform_spec(rng, kind, degree, weight_param=0.51, zero_leading=False):
    basis = BasisSpec(kind=BasisKind(kind), weight_param=weight_param)
    return TransformSpec(basis=basis, coefficients=rand_coefficients(rng, degree, zero_leading))


def central_diff(fn, x, step=1e-5):
    """Central finite-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad


def rel_err(approx, exact, floor=1e-6):
    """Error relative to the exact value's norm, floored so that
    degenerate zero-gradient probes are judged on an absolute scale."""
    exact = np.asarray(exact, dtype=float)
    scale = max(float(np.linalg.norm(exact)), floor)
    return float(np.linalg.norm(np.asarray(approx, dtype=float) - exact)) / scale


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
