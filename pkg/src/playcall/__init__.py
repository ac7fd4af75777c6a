"""Run/pass play-call forecasting with covariate-driven hidden Markov models.

The pipeline: ingest play-by-play CSVs into per-team sequences, fit per-team
models by maximum likelihood (optionally with AIC forward selection over the
transition covariates), forecast each play one step ahead, and serve live
forecasts over HTTP during a match.
"""
from .evaluate import (
    ConfusionCounts,
    EvaluationReport,
    TeamReport,
    aggregate,
    evaluate_team,
    format_report_csv,
    format_report_text,
    predict_match,
    score,
)
from .features import (
    BASE_COVARIATES,
    INTERACTION_CANDIDATES,
    Situation,
    build_design,
    design_columns,
    situation_base_vector,
)
from .fit import (
    FitConfig,
    FitError,
    SelectionError,
    apply_scaling,
    fit,
    forward_select,
    standardize_covariates,
)
from .hmm import (
    filtered_state_probs,
    forecast_from_filter,
    forecast_initial,
    forecast_next,
    forward_filter,
    sequence_log_likelihood,
    total_log_likelihood,
    transition_matrix,
    transition_matrices,
)
from .ingest import (
    CovariateRow,
    DatasetSplit,
    RawPlayRow,
    RejectionReport,
    SchemaError,
    build_sequences,
    derive_covariates,
    descriptive_stats,
    ingest_csv,
    list_store_teams,
    load_team_sequences,
    parse_plays,
    read_store,
    split_by_season,
    write_store,
)
from .model import (
    PASS,
    RUN,
    CovariateScale,
    EmissionParams,
    FitDiagnostics,
    FittedModel,
    ForecastResult,
    InitialDistribution,
    ModelParams,
    ModelSpec,
    PlaySequence,
    TransitionCoefficients,
    state_pairs,
)
from .service import create_app, load_models
from .simulate import simulate_sequence, simulate_sequences

__version__ = "0.1.0"

__all__ = [
    "BASE_COVARIATES",
    "ConfusionCounts",
    "CovariateRow",
    "CovariateScale",
    "DatasetSplit",
    "EmissionParams",
    "EvaluationReport",
    "FitConfig",
    "FitDiagnostics",
    "FitError",
    "FittedModel",
    "ForecastResult",
    "INTERACTION_CANDIDATES",
    "InitialDistribution",
    "ModelParams",
    "ModelSpec",
    "PASS",
    "PlaySequence",
    "RUN",
    "RawPlayRow",
    "RejectionReport",
    "SchemaError",
    "SelectionError",
    "Situation",
    "TeamReport",
    "TransitionCoefficients",
    "aggregate",
    "apply_scaling",
    "build_design",
    "build_sequences",
    "create_app",
    "derive_covariates",
    "descriptive_stats",
    "design_columns",
    "evaluate_team",
    "filtered_state_probs",
    "fit",
    "forecast_from_filter",
    "forecast_initial",
    "forecast_next",
    "format_report_csv",
    "format_report_text",
    "forward_filter",
    "forward_select",
    "ingest_csv",
    "list_store_teams",
    "load_models",
    "load_team_sequences",
    "parse_plays",
    "predict_match",
    "read_store",
    "score",
    "sequence_log_likelihood",
    "simulate_sequence",
    "simulate_sequences",
    "situation_base_vector",
    "split_by_season",
    "standardize_covariates",
    "state_pairs",
    "total_log_likelihood",
    "transition_matrices",
    "transition_matrix",
    "write_store",
]
