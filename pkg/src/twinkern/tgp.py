"""Twin Gaussian process structured prediction.

A fitted model matches the (optionally transformed) input and output
kernel views of the training data at test time by optimizing over the
output vector y.  Two criteria are supported:

* ``kldiv``: minimize the reduced Gaussian-matching cost

      L(y) = g~(y, y) - 2 k~_y(y)^T u - eta * log(g~(y, y) - k~_y(y)^T G~^-1 k~_y(y))

  with u = K~^-1 k~_x(x*) and eta = k~(x*, x*) - k~_x(x*)^T u, where the
  tilded quantities are the transformed kernels and G~, K~ carry a small
  diagonal jitter before factorization.

* ``hsic``: maximize the empirical dependence of the transformed
  augmented kernels on (X u {x*}, Y u {y}).  Only the last row/column of
  the augmented output kernel depends on y, so the m x m block and its
  centering contributions are cached and each objective evaluation costs
  O(m q).

Gradients with respect to y are assembled by the chain rule: the
transform slope evaluated at each base kernel entry times the base
kernel gradient row.  Both objectives are optimized with a bounded
quasi-Newton method (L-BFGS-B) from the nearest-neighbor initialization
plus restarts at the next-nearest training outputs; everything is
deterministic given the model, query, and options.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_solve
from scipy.optimize import minimize

from .basis import (
    BasisKind,
    BasisSpec,
    TransformSpec,
    apply_transform,
    transform_apply_array,
    transform_derivative_array,
    transform_value,
)
from .errors import (
    BarrierViolation,
    DegenerateInput,
    IllConditionedKernel,
    OptimizationFailure,
    ShapeError,
)
from .kernels import (
    Dataset,
    KernelParams,
    _as_vector,
    _double_center,
    _frozen,
    kernel_gradient,
    kernel_matrix,
    kernel_row,
)

JITTER_SCALE = 1e-8
JITTER_MIN = 1e-10
JITTER_MAX = 1e-4
BARRIER_FLOOR = 1e-12
_DIVERGED = 1e100


class Criterion(str, Enum):
    KLDIV = "kldiv"
    HSIC = "hsic"


@dataclass(frozen=True)
class OptimizerOpts:
    """Inner-optimization controls for :func:`predict`.

    Convergence is declared when the projected gradient norm drops below
    ``gtol`` or the relative objective change drops below ``ftol`` within
    ``max_iters`` iterations.  ``restarts`` extra starts are taken from
    the next-nearest training outputs after the nearest-neighbor start.
    """

    gtol: float = 1e-6
    ftol: float = 1e-9
    max_iters: int = 200
    restarts: int = 4


@dataclass(frozen=True)
class Prediction:
    output: np.ndarray
    objective_at_solution: float
    iterations: int
    converged: bool
    restarts_used: int

    def __post_init__(self):
        object.__setattr__(self, "output", _frozen(np.atleast_1d(self.output)))


@dataclass(frozen=True)
class TgpModel:
    """Trained prediction state; immutable and safe to share across
    concurrent :func:`predict` calls."""

    train: Dataset
    kparams_x: KernelParams
    kparams_y: KernelParams
    transforms: object | None
    criterion: Criterion
    in_spec: TransformSpec
    out_spec: TransformSpec
    phi_k: np.ndarray
    psi_g: np.ndarray
    phi_one: float
    psi_one: float
    chol_k: np.ndarray | None
    chol_g: np.ndarray | None
    jitter_x: float | None
    jitter_y: float | None

    @property
    def m(self) -> int:
        return self.train.n_samples


def _chol_with_jitter(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``matrix + jitter*I``, escalating the
    jitter tenfold from 1e-8 times the mean diagonal up to 1e-4."""
    mean_diag = float(np.trace(matrix)) / matrix.shape[0]
    jitter = min(max(JITTER_SCALE * mean_diag, JITTER_MIN), JITTER_MAX)
    eye = np.eye(matrix.shape[0])
    while True:
        try:
            return np.linalg.cholesky(matrix + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > JITTER_MAX:
                raise IllConditionedKernel(
                    f"Cholesky failed at the maximum jitter {JITTER_MAX}"
                ) from None


def tgp_fit(
    data: Dataset,
    kparams_x: KernelParams,
    kparams_y: KernelParams,
    transforms=None,
    criterion: Criterion = Criterion.KLDIV,
) -> TgpModel:
    """Build the prediction state.

    With ``transforms`` absent the raw normalized kernels are used
    (identity transforms).  The KL path factorizes both jittered kernel
    matrices; the dependence path stores the transformed matrices only.
    """
    criterion = Criterion(criterion)
    k = kernel_matrix(data.inputs, kparams_x)
    g = kernel_matrix(data.outputs, kparams_y)
    if transforms is None:
        identity = TransformSpec.identity(BasisSpec(kind=BasisKind.MONOMIAL))
        in_spec = out_spec = identity
        phi_k = k.values
        psi_g = g.values
    else:
        in_spec = transforms.input
        out_spec = transforms.output
        phi_k = apply_transform(k, in_spec).values
        psi_g = apply_transform(g, out_spec).values
    phi_one = transform_value(in_spec, 1.0)
    psi_one = transform_value(out_spec, 1.0)
    chol_k = chol_g = None
    jitter_x = jitter_y = None
    if criterion is Criterion.KLDIV:
        chol_k, jitter_x = _chol_with_jitter(phi_k)
        chol_g, jitter_y = _chol_with_jitter(psi_g)
    return TgpModel(
        train=data,
        kparams_x=kparams_x,
        kparams_y=kparams_y,
        transforms=transforms,
        criterion=criterion,
        in_spec=in_spec,
        out_spec=out_spec,
        phi_k=_frozen(phi_k),
        psi_g=_frozen(psi_g),
        phi_one=phi_one,
        psi_one=psi_one,
        chol_k=None if chol_k is None else _frozen(chol_k),
        chol_g=None if chol_g is None else _frozen(chol_g),
        jitter_x=jitter_x,
        jitter_y=jitter_y,
    )


def _transformed_row(model: TgpModel, spec, data, query, params):
    base = kernel_row(data, query, params)
    return base, transform_apply_array(spec, base)


def _output_jacobian(model: TgpModel, base_row: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rows: transform slope at each base output-kernel entry times the
    base kernel gradient (m x q)."""
    slope = transform_derivative_array(model.out_spec, base_row)
    grad = kernel_gradient(model.train.outputs, y, model.kparams_y)
    return slope[:, None] * grad


@dataclass(frozen=True)
class _KlQuery:
    """Per-query cache for the KL objective: the x* side is constant."""

    u: np.ndarray
    eta: float


def _kl_query(model: TgpModel, x_star: np.ndarray) -> _KlQuery:
    _, kx = _transformed_row(model, model.in_spec, model.train.inputs, x_star, model.kparams_x)
    u = cho_solve((model.chol_k, True), kx)
    eta = model.phi_one - float(kx @ u)
    return _KlQuery(u=u, eta=eta)


def _kl_value_grad(model: TgpModel, query: _KlQuery, y: np.ndarray) -> tuple[float, np.ndarray]:
    base_gy, gy = _transformed_row(model, model.out_spec, model.train.outputs, y, model.kparams_y)
    w = cho_solve((model.chol_g, True), gy)
    arg = model.psi_one - float(gy @ w)
    if arg <= BARRIER_FLOOR:
        raise BarrierViolation(
            f"log-barrier argument {arg:.3e} collapsed onto the training manifold"
        )
    value = model.psi_one - 2.0 * float(gy @ query.u) - query.eta * float(np.log(arg))
    jac = _output_jacobian(model, base_gy, y)
    grad = -2.0 * (jac.T @ query.u) + (2.0 * query.eta / arg) * (jac.T @ w)
    return value, grad


def kl_objective(model: TgpModel, x_star, y) -> tuple[float, np.ndarray]:
    """Reduced KL prediction cost and its gradient with respect to y."""
    if model.criterion is not Criterion.KLDIV:
        raise ValueError("model was not fitted with the kldiv criterion")
    x_star = _as_vector(x_star, model.train.n_inputs, "x_star")
    y = _as_vector(y, model.train.n_outputs, "y")
    return _kl_value_grad(model, _kl_query(model, x_star), y)


@dataclass(frozen=True)
class _HsicQuery:
    """Per-query cache for the dependence objective.

    ``a_col``, ``corner`` and ``block_inner`` come from the centered
    transformed augmented input kernel, which does not depend on y.
    """

    a_col: np.ndarray
    corner: float
    block_inner: float
    inv_sq: float


def _hsic_query_from_arrays(
    phi_k: np.ndarray,
    psi_g: np.ndarray,
    kx_transformed: np.ndarray,
    phi_one: float,
) -> _HsicQuery:
    m = phi_k.shape[0]
    aug = np.empty((m + 1, m + 1))
    aug[:m, :m] = phi_k
    aug[:m, m] = kx_transformed
    aug[m, :m] = kx_transformed
    aug[m, m] = phi_one
    centered = _double_center(aug)
    return _HsicQuery(
        a_col=centered[:m, m].copy(),
        corner=float(centered[m, m]),
        block_inner=float(np.vdot(centered[:m, :m], psi_g)),
        inv_sq=1.0 / float(m**2),
    )


def _hsic_query(model: TgpModel, x_star: np.ndarray) -> _HsicQuery:
    _, kx = _transformed_row(model, model.in_spec, model.train.inputs, x_star, model.kparams_x)
    return _hsic_query_from_arrays(model.phi_k, model.psi_g, kx, model.phi_one)


def _hsic_value_grad(model: TgpModel, query: _HsicQuery, y: np.ndarray) -> tuple[float, np.ndarray]:
    base_gy, gy = _transformed_row(model, model.out_spec, model.train.outputs, y, model.kparams_y)
    value = query.inv_sq * (
        query.block_inner + 2.0 * float(query.a_col @ gy) + query.corner * model.psi_one
    )
    jac = _output_jacobian(model, base_gy, y)
    grad = 2.0 * query.inv_sq * (jac.T @ query.a_col)
    return value, grad


def hsic_objective(model: TgpModel, x_star, y) -> tuple[float, np.ndarray]:
    """Dependence of the transformed augmented kernels on
    (X u {x*}, Y u {y}), with its gradient with respect to y."""
    if model.criterion is not Criterion.HSIC:
        raise ValueError("model was not fitted with the hsic criterion")
    x_star = _as_vector(x_star, model.train.n_inputs, "x_star")
    y = _as_vector(y, model.train.n_outputs, "y")
    return _hsic_value_grad(model, _hsic_query(model, x_star), y)


def _starts(model: TgpModel, x_star: np.ndarray, opts: OptimizerOpts) -> np.ndarray:
    sim = kernel_row(model.train.inputs, x_star, model.kparams_x)
    order = np.argsort(-sim, kind="stable")
    n_starts = min(1 + max(opts.restarts, 0), model.m)
    return model.train.outputs[order[:n_starts]]


def predict(model: TgpModel, x_star, opts: OptimizerOpts | None = None) -> Prediction:
    """Optimize the model's criterion over the output vector.

    Runs bounded quasi-Newton descent from the nearest training output
    (by input-kernel similarity) plus ``opts.restarts`` further starts at
    the next-nearest outputs, and returns the best candidate.
    """
    opts = opts or OptimizerOpts()
    x_star = _as_vector(x_star, model.train.n_inputs, "x_star")
    if model.criterion is Criterion.KLDIV:
        query = _kl_query(model, x_star)
        sign = 1.0
        evaluate = lambda y: _kl_value_grad(model, query, y)
    else:
        query = _hsic_query(model, x_star)
        sign = -1.0
        evaluate = lambda y: _hsic_value_grad(model, query, y)

    q = model.train.n_outputs

    def objective(y):
        try:
            value, grad = evaluate(y)
        except (BarrierViolation, DegenerateInput):
            return _DIVERGED, np.zeros(q)
        if not np.isfinite(value):
            return _DIVERGED, np.zeros(q)
        return sign * value, sign * grad

    starts = _starts(model, x_star, opts)
    best = None
    diagnostics = []
    for y0 in starts:
        result = minimize(
            objective,
            y0,
            jac=True,
            method="L-BFGS-B",
            options={
                "maxiter": opts.max_iters,
                "ftol": opts.ftol,
                "gtol": opts.gtol,
            },
        )
        diagnostics.append(
            {"start": y0.tolist(), "fun": float(result.fun), "status": int(result.status)}
        )
        if not np.isfinite(result.fun) or result.fun >= _DIVERGED:
            continue
        if not np.isfinite(result.x).all():
            continue
        if best is None or result.fun < best.fun:
            best = result
    if best is None:
        raise OptimizationFailure(
            "every optimizer start diverged", diagnostics={"starts": diagnostics}
        )
    return Prediction(
        output=best.x,
        objective_at_solution=float(sign * best.fun),
        iterations=int(best.nit),
        converged=bool(best.success),
        restarts_used=len(starts) - 1,
    )
