"""Base kernel construction, normalization, the empirical dependence
estimator, and analytic kernel gradients with respect to a query point.

Two kernel families are supported:

* ``rbf``: ``k(x, y) = exp(-bandwidth * ||x - y||^2)``; entries lie in
  (0, 1] with a unit diagonal, so the Gram matrix is normalized as built.
* ``linear``: the scaled dot product ``bandwidth * <x, y>``, which is
  cosine-normalized (``k(x, y) / sqrt(k(x, x) k(y, y))``) so that every
  entry lies in [-1, 1].  The scale cancels under this normalization; it
  is kept on :class:`KernelParams` so parameter sets serialize uniformly.

The dependence estimator ``hsic`` is the empirical Hilbert-Schmidt
measure ``(m - 1)^-2 * trace(K H G H)`` with the centering matrix
``H = I - (1/m) 11^T``.  It is evaluated by double-centering one factor
in O(m^2) rather than forming ``H`` explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateInput,
    InvalidData,
    ShapeError,
    TooFewSamples,
)

# Dependence values within this distance of zero are clamped to exactly 0
# so that downstream nonnegativity invariants hold without round-off noise.
HSIC_ZERO_CLAMP = 1e-12

SYMMETRY_ATOL = 1e-10


class KernelFamily(str, Enum):
    RBF = "rbf"
    LINEAR = "linear"


@dataclass(frozen=True)
class KernelParams:
    """Kernel family plus its bandwidth (RBF decay rate or linear scale)."""

    family: KernelFamily
    bandwidth: float

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")

    def to_dict(self) -> dict:
        return {"family": self.family.value, "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelParams":
        return cls(family=KernelFamily(d["family"]), bandwidth=d["bandwidth"])


def _as_matrix(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"{what} must be a 2-D array, got ndim={arr.ndim}")
    return arr


def _as_vector(values, length: int, what: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ShapeError(f"{what} must be a vector of length {length}, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidData(f"{what} contains non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Paired input/output observations with matching row counts.

    ``inputs`` is m x p, ``outputs`` is m x q; 1-D arrays are accepted and
    treated as single columns.  All entries must be finite and m >= 2.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        inputs = _as_matrix(self.inputs, "inputs")
        outputs = _as_matrix(self.outputs, "outputs")
        if inputs.shape[0] != outputs.shape[0]:
            raise ShapeError(
                f"inputs and outputs must have the same row count, "
                f"got {inputs.shape[0]} and {outputs.shape[0]}"
            )
        if inputs.shape[0] < 2:
            raise TooFewSamples(f"need at least 2 rows, got {inputs.shape[0]}")
        if not np.isfinite(inputs).all():
            raise InvalidData("inputs contain non-finite entries")
        if not np.isfinite(outputs).all():
            raise InvalidData("outputs contain non-finite entries")
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != inputs.shape[1] + outputs.shape[1]:
                raise ShapeError(
                    f"expected {inputs.shape[1] + outputs.shape[1]} column names, "
                    f"got {len(names)}"
                )
            object.__setattr__(self, "names", names)
        object.__setattr__(self, "inputs", _frozen(inputs))
        object.__setattr__(self, "outputs", _frozen(outputs))

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.outputs.shape[1]

    def take(self, indices) -> "Dataset":
        """Row subset as a new Dataset (rows keep the given order)."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.inputs[idx], self.outputs[idx], self.names)


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric Gram matrix with a normalization flag.

    When ``normalized`` is true every entry lies in [-1, 1] and the
    diagonal is exactly 1.  Positive semidefiniteness is a mathematical
    property of the construction and is asserted in the test suite, not
    re-verified on every instantiation.
    """

    values: np.ndarray
    normalized: bool

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ShapeError(f"kernel matrix must be square, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise InvalidData("kernel matrix contains non-finite entries")
        if v.size and np.max(np.abs(v - v.T)) > SYMMETRY_ATOL:
            raise ValueError("kernel matrix is not symmetric within 1e-10")
        if self.normalized:
            if np.any(np.abs(v) > 1.0):
                raise ValueError("normalized kernel matrix has entries outside [-1, 1]")
            if not np.all(np.diag(v) == 1.0):
                raise ValueError("normalized kernel matrix must have a unit diagonal")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def m(self) -> int:
        return self.values.shape[0]


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    d2 = (d2 + d2.T) / 2.0
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _cosine_normalize_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInput(f"{what} contains a zero-norm row; cosine normalization undefined")
    return x / norms[:, None]


def kernel_matrix(data, params: KernelParams) -> KernelMatrix:
    """Gram matrix of ``data`` (m x p, m >= 2) under ``params``.

    RBF output has entries in (0, 1] and a unit diagonal.  Linear output
    is cosine-normalized so its entries lie in [-1, 1].  Both are
    returned with ``normalized=True``.
    """
    x = _as_matrix(data, "data")
    if x.shape[0] < 2:
        raise TooFewSamples(f"need at least 2 rows, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise InvalidData("data contains non-finite entries")
    if params.family is KernelFamily.RBF:
        k = np.exp(-params.bandwidth * _pairwise_sq_dists(x))
        np.fill_diagonal(k, 1.0)
    else:
        xn = _cosine_normalize_rows(x, "data")
        k = xn @ xn.T
        k = np.clip((k + k.T) / 2.0, -1.0, 1.0)
        np.fill_diagonal(k, 1.0)
    return KernelMatrix(values=k, normalized=True)


def kernel_row(train_inputs, query, params: KernelParams) -> np.ndarray:
    """Cross-kernel vector ``[k(x_i, query)]_i`` under the same
    normalization as :func:`kernel_matrix`."""
    x = _as_matrix(train_inputs, "train_inputs")
    q = _as_vector(query, x.shape[1], "query")
    if not np.isfinite(x).all():
        raise InvalidData("train_inputs contain non-finite entries")
    if params.family is KernelFamily.RBF:
        diff = x - q[None, :]
        return np.exp(-params.bandwidth * np.sum(diff * diff, axis=1))
    xn = _cosine_normalize_rows(x, "train_inputs")
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise DegenerateInput("query has zero norm; cosine normalization undefined")
    return np.clip(xn @ (q / qn), -1.0, 1.0)


def kernel_gradient(train_inputs, query, params: KernelParams) -> np.ndarray:
    """Jacobian of :func:`kernel_row` with respect to the query point.

    Entry (i, d) is the partial derivative of ``k(x_i, query)`` along the
    d-th query coordinate.  For the linear family this differentiates the
    cosine-normalized kernel, so it stays the exact gradient of
    :func:`kernel_row`.
    """
    x = _as_matrix(train_inputs, "train_inputs")
    q = _as_vector(query, x.shape[1], "query")
    if not np.isfinite(x).all():
        raise InvalidData("train_inputs contain non-finite entries")
    if params.family is KernelFamily.RBF:
        diff = q[None, :] - x
        row = np.exp(-params.bandwidth * np.sum(diff * diff, axis=1))
        return -2.0 * params.bandwidth * diff * row[:, None]
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInput("train_inputs contain a zero-norm row")
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise DegenerateInput("query has zero norm; cosine gradient undefined")
    dots = x @ q
    return x / (norms[:, None] * qn) - (dots / (norms * qn**3))[:, None] * q[None, :]


def _double_center(a: np.ndarray) -> np.ndarray:
    """H a H without materializing H (row/column/grand mean removal)."""
    row = a.mean(axis=1, keepdims=True)
    col = a.mean(axis=0, keepdims=True)
    return a - row - col + a.mean()


def hsic(k_matrix, g_matrix) -> float:
    """Empirical dependence ``(m - 1)^-2 trace(K H G H)`` of two
    same-sized symmetric kernel matrices.

    Accepts :class:`KernelMatrix` instances or plain square arrays.
    Results within 1e-12 of zero are clamped to exactly 0; for positive
    semidefinite arguments the value is nonnegative.
    """
    k = k_matrix.values if isinstance(k_matrix, KernelMatrix) else np.asarray(k_matrix, dtype=float)
    g = g_matrix.values if isinstance(g_matrix, KernelMatrix) else np.asarray(g_matrix, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ShapeError(f"first argument must be square, got shape {k.shape}")
    if g.shape != k.shape:
        raise ShapeError(f"kernel matrices must share shape, got {k.shape} and {g.shape}")
    m = k.shape[0]
    if m < 2:
        raise TooFewSamples(f"dependence needs at least 2 samples, got {m}")
    value = float(np.vdot(k, _double_center(g))) / float((m - 1) ** 2)
    if abs(value) <= HSIC_ZERO_CLAMP:
        return 0.0
    return value
