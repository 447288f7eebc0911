"""Learning kernel transforms by maximizing cross-dependence.

The pairwise dependence values between the input basis-kernel stack
``K^(0)..K^(d1)`` and the output stack ``G^(0)..G^(d2)`` form a
nonnegative matrix C.  Maximizing ``a^T C b`` over unit-norm coefficient
vectors is solved exactly by the leading singular pair of C; by the
Perron-Frobenius property of the nonnegative matrices C^T C and C C^T
that pair has an entrywise-nonnegative representative.

Row 0 and column 0 of C are identically zero (index 0 of each stack is a
constant kernel, whose centered dependence vanishes), so the solver
operates on the index >= 1 submatrix and re-embeds zeros.  This makes
the leading coefficients of both learned transforms exactly zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, TransformSpec, basis_kernel_stack
from .errors import DegenerateObjective, ShapeError
from .kernels import Dataset, KernelParams, _frozen, hsic, kernel_matrix

C_FLUSH = 1e-14
SIGMA_TIE_RTOL = 1e-12
NONNEG_ATOL = 1e-10


@dataclass(frozen=True)
class CMatrix:
    """Grid of dependence values between the two basis-kernel stacks.

    Entry (i, j) is the dependence of ``K^(i)`` with ``G^(j)``; all
    entries are nonnegative and row 0 / column 0 are identically zero.
    """

    values: np.ndarray
    basis: BasisSpec | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ShapeError(f"C matrix must be 2-D, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("C matrix contains non-finite entries")
        if np.any(v < 0.0):
            raise ValueError(f"C matrix has a negative entry: {v.min()}")
        if np.any(v[0, :] != 0.0) or np.any(v[:, 0] != 0.0):
            raise ValueError("row 0 and column 0 of the C matrix must be zero")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def d1(self) -> int:
        return self.values.shape[0] - 1

    @property
    def d2(self) -> int:
        return self.values.shape[1] - 1


def build_c_matrix(k_stack, g_stack, basis: BasisSpec | None = None) -> CMatrix:
    """Dependence of every input-stack layer with every output-stack layer."""
    if not k_stack or not g_stack:
        raise ShapeError("kernel stacks must be nonempty")
    m = np.asarray(k_stack[0]).shape[0]
    for layer in list(k_stack) + list(g_stack):
        a = np.asarray(layer)
        if a.ndim != 2 or a.shape != (m, m):
            raise ShapeError(f"all stack layers must be {m}x{m}, got {a.shape}")
    c = np.zeros((len(k_stack), len(g_stack)))
    for i, ki in enumerate(k_stack):
        for j, gj in enumerate(g_stack):
            v = hsic(ki, gj)
            c[i, j] = 0.0 if v < C_FLUSH else v
    return CMatrix(values=c, basis=basis)


def _nonneg_representative(u: np.ndarray, v: np.ndarray, strict: bool):
    """Fix the joint sign so the pair is entrywise nonnegative, then clamp
    round-off negatives and renormalize to unit length."""
    pivot = int(np.argmax(np.abs(u)))
    if u[pivot] < 0.0:
        u, v = -u, -v
    low = min(float(u.min(initial=0.0)), float(v.min(initial=0.0)))
    if strict and low < -NONNEG_ATOL:
        raise ValueError(
            f"leading singular pair is not nonnegative (min component {low}); "
            "the dependence matrix violates its nonnegativity invariant"
        )
    u = np.maximum(u, 0.0)
    v = np.maximum(v, 0.0)
    un = np.linalg.norm(u)
    vn = np.linalg.norm(v)
    if un == 0.0 or vn == 0.0:
        return None
    return u / un, v / vn


def _leading_pair(sub: np.ndarray):
    """Leading singular triple of the index >= 1 submatrix, with a
    deterministic tie-break over a degenerate leading value."""
    u_mat, s, vt = np.linalg.svd(sub)
    sigma = float(s[0])
    tied = [0]
    if len(s) > 1:
        tied = [i for i, si in enumerate(s) if sigma - si <= SIGMA_TIE_RTOL * sigma]
    degenerate = len(tied) > 1
    candidates = []
    for i in tied:
        rep = _nonneg_representative(u_mat[:, i].copy(), vt[i].copy(), strict=not degenerate)
        if rep is None:
            continue
        a, b = rep
        achieved = float(a @ sub @ b)
        candidates.append((achieved, tuple(a), tuple(b), a, b))
    if not candidates:
        raise DegenerateObjective("no nonnegative singular pair found")
    # Largest achieved objective first, then the lexicographically largest pair.
    achieved, _, _, a, b = max(candidates, key=lambda c: (c[0], c[1], c[2]))
    return a, b, sigma, degenerate


def _solve(c_matrix) -> tuple[np.ndarray, np.ndarray, float, bool]:
    values = c_matrix.values if isinstance(c_matrix, CMatrix) else CMatrix(values=c_matrix).values
    if not np.any(values > 0.0):
        raise DegenerateObjective(
            "dependence matrix is identically zero; the stacks carry no dependence"
        )
    sub = values[1:, 1:]
    a_sub, b_sub, sigma, degenerate = _leading_pair(sub)
    alpha = np.zeros(values.shape[0])
    beta = np.zeros(values.shape[1])
    alpha[1:] = a_sub
    beta[1:] = b_sub
    return alpha, beta, sigma, degenerate


def solve_coefficients(c_matrix) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficient vectors maximizing ``a^T C b`` over the unit sphere.

    Returns ``(alpha, beta, sigma)`` where sigma is the leading singular
    value, both vectors are entrywise nonnegative with unit l2 norm, and
    their index-0 entries are exactly zero.
    """
    alpha, beta, sigma, _ = _solve(c_matrix)
    return alpha, beta, sigma


@dataclass(frozen=True)
class LearnedTransforms:
    """Learned input/output transforms plus the solved objective value.

    ``c_matrix`` is retained for diagnostics when produced by
    :func:`learn_transforms`; instances reloaded from JSON carry None.
    """

    input: TransformSpec
    output: TransformSpec
    objective_value: float
    kparams_x: KernelParams
    kparams_y: KernelParams
    c_matrix: CMatrix | None = None
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not np.isfinite(self.objective_value) or self.objective_value < 0.0:
            raise ValueError(f"objective value must be nonnegative, got {self.objective_value}")
        if self.input.coefficients[0] != 0.0 or self.output.coefficients[0] != 0.0:
            raise ValueError("learned transforms must have a zero leading coefficient")

    @property
    def d1(self) -> int:
        return self.input.degree

    @property
    def d2(self) -> int:
        return self.output.degree

    def to_json_dict(self) -> dict:
        return {
            "basis": self.input.basis.kind.value,
            "weight_param": self.input.basis.weight_param,
            "d1": self.d1,
            "d2": self.d2,
            "alpha": [float(v) for v in self.input.coefficients],
            "beta": [float(v) for v in self.output.coefficients],
            "objective": float(self.objective_value),
            "kernel_params": {
                "x": self.kparams_x.to_dict(),
                "y": self.kparams_y.to_dict(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_dict(cls, d: dict) -> "LearnedTransforms":
        basis = BasisSpec(kind=d["basis"], weight_param=d["weight_param"])
        return cls(
            input=TransformSpec(basis=basis, coefficients=np.asarray(d["alpha"], dtype=float)),
            output=TransformSpec(basis=basis, coefficients=np.asarray(d["beta"], dtype=float)),
            objective_value=float(d["objective"]),
            kparams_x=KernelParams.from_dict(d["kernel_params"]["x"]),
            kparams_y=KernelParams.from_dict(d["kernel_params"]["y"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "LearnedTransforms":
        return cls.from_json_dict(json.loads(text))


def save_transforms(transforms: LearnedTransforms, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(transforms.to_json())


def load_transforms(path) -> LearnedTransforms:
    with open(path, "r", encoding="utf-8") as fh:
        return LearnedTransforms.from_json(fh.read())


def learn_transforms(
    data: Dataset,
    kparams_x: KernelParams,
    kparams_y: KernelParams,
    basis: BasisSpec,
    d1: int,
    d2: int,
) -> LearnedTransforms:
    """Full learning pass: base kernels, basis stacks, dependence matrix,
    and the singular-pair solve, packaged as transform specs."""
    if d1 < 1 or d2 < 1:
        raise ValueError(f"degrees must be at least 1, got d1={d1}, d2={d2}")
    k = kernel_matrix(data.inputs, kparams_x)
    g = kernel_matrix(data.outputs, kparams_y)
    k_stack = basis_kernel_stack(k, basis, d1)
    g_stack = basis_kernel_stack(g, basis, d2)
    c = build_c_matrix(k_stack, g_stack, basis=basis)
    alpha, beta, _, degenerate = _solve(c)
    notes = ()
    if degenerate:
        notes = ("degenerate leading singular value; lexicographic tie-break applied",)
    return LearnedTransforms(
        input=TransformSpec(basis=basis, coefficients=alpha),
        output=TransformSpec(basis=basis, coefficients=beta),
        objective_value=float(alpha @ c.values @ beta),
        kparams_x=kparams_x,
        kparams_y=kparams_y,
        c_matrix=c,
        warnings=notes,
    )
