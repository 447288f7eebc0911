"""Polynomial kernel-transform learning with twin Gaussian process
structured regression.

A dependence-maximizing transform of the input and output kernel
matrices is learned from the leading singular pair of a cross-dependence
matrix, then plugged into twin Gaussian process prediction.
"""

from .basis import (
    BasisKind,
    BasisSpec,
    TransformSpec,
    apply_transform,
    basis_kernel_stack,
    gegenbauer_deriv_eval,
    gegenbauer_eval,
    transform_apply_array,
    transform_derivative,
    transform_derivative_array,
    transform_value,
    weight_function,
)
from .data import (
    GENERATOR_ID,
    SShapeParams,
    SplitKind,
    SplitSpec,
    gen_sshape,
    load_csv,
    save_csv,
    split,
    sshape_response,
)
from .errors import (
    BarrierViolation,
    ConfigError,
    DegenerateInput,
    DegenerateObjective,
    DivisionByZero,
    DomainError,
    IllConditionedKernel,
    InvalidCoefficients,
    InvalidData,
    InvalidWeightParam,
    OptimizationFailure,
    ParseError,
    ShapeError,
    TooFewSamples,
    TwinkernError,
)
from .harness import (
    ExperimentConfig,
    Report,
    cross_validate,
    gain_percent,
    mae,
    run_experiment,
)
from .kernels import (
    Dataset,
    KernelFamily,
    KernelMatrix,
    KernelParams,
    hsic,
    kernel_gradient,
    kernel_matrix,
    kernel_row,
)
from .learner import (
    CMatrix,
    LearnedTransforms,
    build_c_matrix,
    learn_transforms,
    load_transforms,
    save_transforms,
    solve_coefficients,
)
from .tgp import (
    Criterion,
    OptimizerOpts,
    Prediction,
    TgpModel,
    hsic_objective,
    kl_objective,
    predict,
    tgp_fit,
)

__version__ = "0.1.0"
