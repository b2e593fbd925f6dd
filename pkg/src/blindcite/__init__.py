"""Prestige-free citation prediction from double-blind-reviewable features.

Predicts a paper's citation impact using only characteristics a referee
can see during double-blind review, deliberately excluding author and
journal information. Three estimators share one design-matrix encoding:
least squares on the arsinh-transformed journal-weighted response,
negative binomial regression on raw counts, and component-wise gradient
boosting of either loss with early stopping tuned by subsampling
cross-validation.
"""

from ._kernels import BACKEND
from .boosting import (
    BoostingModel,
    LossSpec,
    SubsampleCVResult,
    boost,
    coefficients_at,
    fit_base_learner,
    negative_gradient,
    predict_boost,
    selection_probabilities,
    subsample_cv,
)
from .data import CSV_COLUMNS, PaperRecord, read_records, write_records
from .errors import (
    BlindciteError,
    ConfigError,
    NumericalError,
    ShapeError,
    ValidationError,
)
from .features import (
    DesignMatrix,
    EncodingConfig,
    EncodingSchema,
    TriangleRegion,
    arsinh,
    build_design_matrix,
    classify_triangle,
    encode_records,
    language_rank,
    schema_from_records,
    split_train_test,
)
from .linmod import (
    FittedLinearModel,
    LinearEffect,
    fit_ols,
    interpret_lm_coefficient,
    predict_lm,
)
from .metrics import EvaluationReport, aic, bic, evaluate, gaussian_nll, mae, msep
from .negbin import (
    FittedNegBinModel,
    fit_negbin,
    interpret_nb_coefficient,
    nb_nll,
    nb_nll_gradient,
    predict_nb,
)
from .simulate import GeneratorSpec, generate, load_generator_spec

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BlindciteError",
    "BoostingModel",
    "CSV_COLUMNS",
    "ConfigError",
    "DesignMatrix",
    "EncodingConfig",
    "EncodingSchema",
    "EvaluationReport",
    "FittedLinearModel",
    "FittedNegBinModel",
    "GeneratorSpec",
    "LinearEffect",
    "LossSpec",
    "NumericalError",
    "PaperRecord",
    "ShapeError",
    "SubsampleCVResult",
    "TriangleRegion",
    "ValidationError",
    "aic",
    "arsinh",
    "bic",
    "boost",
    "build_design_matrix",
    "classify_triangle",
    "coefficients_at",
    "encode_records",
    "evaluate",
    "fit_base_learner",
    "fit_negbin",
    "fit_ols",
    "gaussian_nll",
    "generate",
    "interpret_lm_coefficient",
    "interpret_nb_coefficient",
    "language_rank",
    "load_generator_spec",
    "mae",
    "msep",
    "nb_nll",
    "nb_nll_gradient",
    "negative_gradient",
    "predict_boost",
    "predict_lm",
    "predict_nb",
    "read_records",
    "schema_from_records",
    "selection_probabilities",
    "split_train_test",
    "subsample_cv",
    "write_records",
]
