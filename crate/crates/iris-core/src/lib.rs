//! Fairness-evaluation engine for unified multimodal models.
//!
//! The crate turns annotated behavior records into sixty granular fairness
//! metrics across six Dimension×Task sectors, projects them into a unified
//! deviation space, maps L2 magnitudes to decayed scores, diagnoses a
//! three-letter personality code per task, and ships the validation
//! statistics (internal consistency, rank stability, architecture
//! impartiality) used to audit the whole construction.
//!
//! Numeric kernels are generic over [`scalar::Scalar`] (`f32`/`f64`); the
//! data pipeline uses the [`Real`] alias below.

pub mod config;
pub mod demographics;
pub mod diagnosis;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod scoring;
pub mod special;
pub mod stats;
pub mod taxonomy;

/// Scalar type used by the ingestion, pipeline, and reporting layers.
pub type Real = f64;

/// Concrete instantiations of the generic numeric types.
pub type ProbVec = metrics::ProbabilityVector<Real>;
pub type GroupStats = metrics::GroupOutcome<Real>;
pub type Pair = metrics::CounterfactualPair<Real>;
pub type GranularVec = scoring::GranularMetricVector<Real>;
pub type DeviationVec = scoring::DeviationVector<Real>;
pub type Scores = stats::ScoreMatrix<Real>;

pub use config::{DimensionParams, HyperParams, TournamentDirection};
pub use demographics::{
    age_to_band, derive_groups, mst_to_band, profile_to_cell, AgeBand, AttributeProfile, Axis,
    Gender, GroupCell, GroupSelector, Occupation, OccupationRegistry, SkinBand,
};
pub use diagnosis::{archetype_catalog, diagnose, MbtiCode};
pub use error::{IrisError, Result};
pub use ingest::{
    empirical_distribution, map_answer_tier1, parse_generation_records, parse_tournament_tallies,
    parse_understanding_records, AliasTable, GenerationRecord, GroundTruthTable, MappedAnswer,
    PromptKind, Region, TournamentTally, UnderstandingRecord,
};
pub use metrics::{
    accuracy_disparity, aggregate_tournament, answer_consistency_difference, bayes_invert,
    degradation_penalty, delta_gsr, dhr_inconsistency, generation_success_rate, js_divergence,
    representation_disparity, statistical_parity_difference, stereotype_drift, AttributeCategory,
    JsdMode, LogBase,
};
pub use pipeline::{evaluate, PipelineInputs, RegionSelection, ScoredModels};
pub use report::{load_run, render_leaderboard, save_run, verify_replay, RunArchive};
pub use scoring::{
    calibrate, decay_score, dimensional_magnitude, nested_norm_check, normalize, overall_iris,
    DeviationSource, DimensionScore, IrisResult, NormalizationOptions,
};
pub use stats::{
    cronbach_alpha, default_perturbations, dimension_correlation_matrix, loo_sensitivity, median,
    pearson_r, spearman_rho, weight_perturbation, welch_t_test, Perturbation, PerturbTarget,
    SensitivityReport, WelchTest,
};
pub use taxonomy::{Dimension, Taxonomy};
