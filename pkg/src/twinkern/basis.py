"""Monomial and Gegenbauer polynomial bases, their derivatives, and
polynomial transforms of kernel matrices.

The Gegenbauer family ``G_i(t)`` on the weight parameter ``gamma`` is
evaluated by the forward three-term recurrence

    G_0 = 1,  G_1 = 2 gamma t,
    G_{i+1} = (2 (gamma + i) / (i + 1)) t G_i - ((2 gamma + i - 1) / (i + 1)) G_{i-1}

and the derivative family ``H_i = dG_i/dt`` by the companion recurrence

    H_0 = 0,  H_1 = 2 gamma,
    H_{i+1} = (2 (gamma + i) / (i + 1)) (t H_i + G_i) - ((2 gamma + i - 1) / (i + 1)) H_{i-1}

with every intermediate degree retained, so building the kernel stack
``[B_0(K), ..., B_d(K)]`` costs one recurrence pass per matrix entry.
All evaluations require arguments in [-1, 1]; overshoot up to 1e-9 is
treated as round-off and clamped, anything larger is rejected.

``weight_param`` is the Gegenbauer family parameter (the orthogonality
weight exponent); it is unrelated to the kernel bandwidth even though
both are conventionally written as a lowercase gamma.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DomainError,
    InvalidCoefficients,
    InvalidData,
    InvalidWeightParam,
)
from .kernels import KernelMatrix, _frozen

DEGREE_CAP = 64
DEGREE_WARN = 30
DOMAIN_SLACK = 1e-9
UNIT_NORM_ATOL = 1e-10


class BasisKind(str, Enum):
    MONOMIAL = "monomial"
    GEGENBAUER = "gegenbauer"


@dataclass(frozen=True)
class BasisSpec:
    """Choice of polynomial basis; ``weight_param`` is ignored for the
    monomial family and must exceed -1/2 for the Gegenbauer family."""

    kind: BasisKind
    weight_param: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        object.__setattr__(self, "weight_param", float(self.weight_param))
        if self.kind is BasisKind.GEGENBAUER and not self.weight_param > -0.5:
            raise InvalidWeightParam(
                f"weight parameter must exceed -0.5, got {self.weight_param}"
            )


def _check_degree(degree: int) -> int:
    degree = int(degree)
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    if degree > DEGREE_CAP:
        raise ValueError(f"degree {degree} exceeds the cap of {DEGREE_CAP}")
    if degree > DEGREE_WARN:
        warnings.warn(
            f"degree {degree} above {DEGREE_WARN}: Hadamard powers on [-1, 1] "
            "underflow and the dependence objective saturates",
            stacklevel=3,
        )
    return degree


def _check_weight(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma > -0.5:
        raise InvalidWeightParam(f"weight parameter must exceed -0.5, got {gamma}")
    return gamma


def _clamp_domain(values) -> np.ndarray:
    """Clamp round-off overshoot beyond [-1, 1]; reject real violations."""
    v = np.asarray(values, dtype=float)
    if v.size and not np.isfinite(v).all():
        raise InvalidData("basis argument contains non-finite entries")
    worst = float(np.max(np.abs(v))) - 1.0 if v.size else 0.0
    if worst > DOMAIN_SLACK:
        raise DomainError(
            f"argument exceeds the [-1, 1] basis domain by {worst:.3e}"
        )
    if worst > 0.0:
        v = np.clip(v, -1.0, 1.0)
    return v


def _basis_values(kind: BasisKind, gamma: float, degree: int, t: np.ndarray) -> list[np.ndarray]:
    """All basis values B_0(t)..B_degree(t) for an already-clamped array."""
    out = [np.ones_like(t)]
    if degree == 0:
        return out
    if kind is BasisKind.MONOMIAL:
        out.append(np.array(t, copy=True))
        for _ in range(2, degree + 1):
            out.append(out[-1] * t)
        return out
    out.append(2.0 * gamma * t)
    for i in range(1, degree):
        nxt = (2.0 * (gamma + i) / (i + 1)) * t * out[i] \
            - ((2.0 * gamma + i - 1.0) / (i + 1)) * out[i - 1]
        out.append(nxt)
    return out


def _basis_values_and_derivs(kind, gamma, degree, t):
    vals = _basis_values(kind, gamma, degree, t)
    if kind is BasisKind.MONOMIAL:
        derivs = [np.zeros_like(t)]
        for i in range(1, degree + 1):
            derivs.append(float(i) * vals[i - 1])
        return vals, derivs
    derivs = [np.zeros_like(t)]
    if degree >= 1:
        derivs.append(np.full_like(t, 2.0 * gamma))
    for i in range(1, degree):
        nxt = (2.0 * (gamma + i) / (i + 1)) * (t * derivs[i] + vals[i]) \
            - ((2.0 * gamma + i - 1.0) / (i + 1)) * derivs[i - 1]
        derivs.append(nxt)
    return vals, derivs


def gegenbauer_eval(degree: int, gamma: float, t: float) -> float:
    """Value of the degree-``degree`` Gegenbauer polynomial at ``t``."""
    gamma = _check_weight(gamma)
    degree = _check_degree(degree)
    tt = _clamp_domain(np.asarray(t, dtype=float))
    return float(_basis_values(BasisKind.GEGENBAUER, gamma, degree, tt)[degree])


def gegenbauer_deriv_eval(degree: int, gamma: float, t: float) -> float:
    """Derivative of the degree-``degree`` Gegenbauer polynomial at ``t``,
    computed jointly with the value recurrence."""
    gamma = _check_weight(gamma)
    degree = _check_degree(degree)
    tt = _clamp_domain(np.asarray(t, dtype=float))
    _, derivs = _basis_values_and_derivs(BasisKind.GEGENBAUER, gamma, degree, tt)
    return float(derivs[degree])


def weight_function(t: float, gamma: float) -> float:
    """Orthogonality weight ``(1 - t^2)^(gamma - 1/2)`` on the open
    interval (-1, 1); the endpoints are excluded because the value does
    not exist there for gamma < 1/2."""
    gamma = _check_weight(gamma)
    t = float(t)
    if not abs(t) < 1.0:
        raise DomainError(f"weight function requires |t| < 1, got t={t}")
    return float((1.0 - t * t) ** (gamma - 0.5))


@dataclass(frozen=True)
class TransformSpec:
    """A learned polynomial kernel transform: basis plus a nonnegative,
    unit-norm coefficient vector.  Degree is ``len(coefficients) - 1``."""

    basis: BasisSpec
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise InvalidCoefficients(f"coefficients must be a nonempty vector, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise InvalidCoefficients("coefficients contain non-finite entries")
        if np.any(c < 0.0):
            raise InvalidCoefficients(f"coefficients must be nonnegative, min={c.min()}")
        norm = float(np.linalg.norm(c))
        if abs(norm - 1.0) > UNIT_NORM_ATOL:
            raise InvalidCoefficients(f"coefficients must have unit l2 norm, got {norm!r}")
        _check_degree(c.size - 1)
        object.__setattr__(self, "coefficients", _frozen(c))

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    @classmethod
    def identity(cls, basis: BasisSpec) -> "TransformSpec":
        """Degree-1 spec with coefficients (0, 1)."""
        return cls(basis=basis, coefficients=np.array([0.0, 1.0]))


def basis_kernel_stack(k_matrix, basis: BasisSpec, degree: int) -> list[np.ndarray]:
    """Element-wise application of basis functions 0..degree to a
    normalized kernel matrix.  Index 0 is the all-ones matrix in both
    bases; the monomial stack holds the Hadamard powers of K."""
    degree = _check_degree(degree)
    values = k_matrix.values if isinstance(k_matrix, KernelMatrix) else np.asarray(k_matrix, dtype=float)
    t = _clamp_domain(values)
    return _basis_values(basis.kind, basis.weight_param, degree, t)


def apply_transform(k_matrix, spec: TransformSpec) -> KernelMatrix:
    """Nonnegative combination ``sum_i c_i B_i(K)`` of the basis stack.

    The output is symmetric but no longer normalized (entries may exceed
    1), so ``normalized`` is false.  Monomial transforms preserve
    positive semidefiniteness for every PSD normalized K (Schur product
    theorem).  Gegenbauer transforms preserve it when the kernel's rank
    is at most ``2 * weight_param + 2`` (unit-diagonal PSD matrices are
    Gram matrices of unit vectors, and the family of weight ``w`` is
    positive definite on spheres of dimension up to ``2 w + 1``); beyond
    that regime small negative eigenvalues are possible, which the
    prediction model absorbs with diagonal jitter.
    """
    stack = basis_kernel_stack(k_matrix, spec.basis, spec.degree)
    out = np.zeros_like(stack[0])
    for c, layer in zip(spec.coefficients, stack):
        out += c * layer
    return KernelMatrix(values=out, normalized=False)


def transform_apply_array(spec: TransformSpec, values) -> np.ndarray:
    """Element-wise ``sum_i c_i B_i`` on an arbitrary array in [-1, 1]."""
    t = _clamp_domain(np.asarray(values, dtype=float))
    stack = _basis_values(spec.basis.kind, spec.basis.weight_param, spec.degree, t)
    out = np.zeros_like(t)
    for c, layer in zip(spec.coefficients, stack):
        out += c * layer
    return out


def transform_derivative_array(spec: TransformSpec, values) -> np.ndarray:
    """Element-wise slope ``sum_i c_i B_i'`` on an array in [-1, 1]."""
    t = _clamp_domain(np.asarray(values, dtype=float))
    _, derivs = _basis_values_and_derivs(spec.basis.kind, spec.basis.weight_param, spec.degree, t)
    out = np.zeros_like(t)
    for c, layer in zip(spec.coefficients, derivs):
        out += c * layer
    return out


def transform_value(spec: TransformSpec, t: float) -> float:
    """Scalar transform value ``phi(t)``."""
    return float(transform_apply_array(spec, np.asarray(t, dtype=float)))


def transform_derivative(spec: TransformSpec, t: float) -> float:
    """Scalar transform slope ``phi'(t)``."""
    return float(transform_derivative_array(spec, np.asarray(t, dtype=float)))
