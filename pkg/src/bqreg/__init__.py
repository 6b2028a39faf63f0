"""Bayesian binary quantile regression with asymmetric-Laplace data
augmentation, a quantile-grid runner, posterior summaries and a logistic
baseline."""

from .ald import (
    AldParams,
    QuantileSpec,
    ald_cdf,
    ald_pdf,
    check_loss,
    check_loss_absolute_form,
    mixture_constants,
)
from .data_io import (
    AffineMap,
    BernoulliCovariate,
    CategoricalCovariate,
    ColumnDecl,
    RecoveryReport,
    SyntheticSpec,
    SyntheticTruth,
    UniformCovariate,
    VariableSchema,
    generate_synthetic,
    load_dataset,
    score_recovery,
)
from .errors import BqregError, DataError, NumericalError
from .gibbs import (
    ChainState,
    GridRunError,
    beta_full_conditional,
    initialize_chain,
    run_chain,
    run_chain_continuous,
    run_grid,
    step_beta,
    step_u,
    step_ystar,
)
from .logit import CoefSummary, LogitPosterior, fit_logit, summarize_logit
from .model import (
    ContinuousDataset,
    Contrast,
    Dataset,
    GaussianPrior,
    McmcConfig,
    PosteriorDraws,
)
from .posterior import (
    ForestRow,
    ForestTable,
    TraceSeries,
    autocorrelation,
    build_forest_table,
    effective_sample_size,
    export_trace,
    hpd_interval,
    normalize_slopes,
)
from .samplers import (
    RngHandle,
    TruncationSide,
    derive_subseed,
    sample_gig_half,
    sample_mvn,
    sample_truncated_normal,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "AldParams",
    "BernoulliCovariate",
    "BqregError",
    "CategoricalCovariate",
    "ChainState",
    "CoefSummary",
    "ColumnDecl",
    "ContinuousDataset",
    "Contrast",
    "DataError",
    "Dataset",
    "ForestRow",
    "ForestTable",
    "GaussianPrior",
    "GridRunError",
    "LogitPosterior",
    "McmcConfig",
    "NumericalError",
    "PosteriorDraws",
    "QuantileSpec",
    "RecoveryReport",
    "RngHandle",
    "SyntheticSpec",
    "SyntheticTruth",
    "TraceSeries",
    "TruncationSide",
    "UniformCovariate",
    "VariableSchema",
    "ald_cdf",
    "ald_pdf",
    "autocorrelation",
    "beta_full_conditional",
    "build_forest_table",
    "check_loss",
    "check_loss_absolute_form",
    "derive_subseed",
    "effective_sample_size",
    "export_trace",
    "fit_logit",
    "generate_synthetic",
    "hpd_interval",
    "initialize_chain",
    "load_dataset",
    "mixture_constants",
    "normalize_slopes",
    "run_chain",
    "run_chain_continuous",
    "run_grid",
    "sample_gig_half",
    "sample_mvn",
    "sample_truncated_normal",
    "score_recovery",
    "step_beta",
    "step_u",
    "step_ystar",
    "summarize_logit",
]
