//! Scoring configuration: per-dimension decay/scale parameters, the
//! personality threshold, and the pipeline switches. Loaded from TOML;
//! the shipped defaults live in `data/default_config.toml`.

use crate::error::{IrisError, Result};
use crate::metrics::{JsdMode, LogBase};
use crate::scoring::{calibrate, NormalizationOptions};
use crate::taxonomy::Dimension;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const BUNDLED_CONFIG: &str = include_str!("../data/default_config.toml");

/// How tournament tallies become per-occupation demographic distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TournamentDirection {
    /// Rows are P(occupation | profile); invert with a uniform profile prior.
    #[default]
    BayesInvert,
    /// Counts are read directly as P(profile | occupation).
    ColumnNormalize,
}

/// Decay and scale of one dimension's score mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionParams {
    pub k: f64,
    pub s: f64,
}

/// Full scoring configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub tau: f64,
    pub n_min: usize,
    pub jsd: JsdMode,
    /// Confidence threshold reserved for the embedding-based answer-mapping
    /// tier (a plug-in seam; unused by tier 1).
    pub tier3_confidence: f64,
    pub tournament_direction: TournamentDirection,
    pub normalization: NormalizationOptions,
    pub k_tot: f64,
    /// Overall scale; calibrated from the cohort median when absent.
    pub s_tot: Option<f64>,
    pub calibration_target: f64,
    pub dimensions: BTreeMap<Dimension, DimensionParams>,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self::from_toml_str(BUNDLED_CONFIG).expect("bundled config is valid")
    }
}

impl HyperParams {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| IrisError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| IrisError::Config(e.to_string()))?;
        raw.try_into()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(&RawConfig::from(self)).expect("config serializes")
    }

    pub fn dimension(&self, dimension: Dimension) -> DimensionParams {
        self.dimensions[&dimension]
    }

    /// The overall scale factor: configured, or calibrated so the supplied
    /// cohort-median deviation lands on the calibration target.
    pub fn effective_s_tot(&self, median_d_tot: f64) -> f64 {
        self.s_tot
            .unwrap_or_else(|| calibrate(median_d_tot, self.k_tot, self.calibration_target))
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 100.0) {
            return Err(IrisError::Config(format!(
                "tau must lie in (0,100], got {}",
                self.tau
            )));
        }
        if self.k_tot <= 0.0 {
            return Err(IrisError::Config("overall k must be positive".into()));
        }
        if let Some(s) = self.s_tot {
            if s <= 0.0 {
                return Err(IrisError::Config("overall s must be positive".into()));
            }
        }
        if self.calibration_target <= 0.0 {
            return Err(IrisError::Config("calibration target must be positive".into()));
        }
        for dimension in Dimension::ALL {
            let params = self.dimensions.get(&dimension).ok_or_else(|| {
                IrisError::Config(format!("missing [dimensions.{dimension}] section"))
            })?;
            if params.k <= 0.0 || params.s <= 0.0 {
                return Err(IrisError::Config(format!(
                    "{dimension}: k and s must be strictly positive"
                )));
            }
        }
        Ok(())
    }
}

// --- TOML mirror ------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawJsd {
    log_base: String,
    square_divergence: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawAnswerMapping {
    tier3_confidence: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTournament {
    direction: TournamentDirection,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawNormalization {
    ac_diff_passthrough: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawOverall {
    k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    calibration_target: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawConfig {
    tau: f64,
    n_min: usize,
    jsd: RawJsd,
    answer_mapping: RawAnswerMapping,
    tournament: RawTournament,
    normalization: RawNormalization,
    overall: RawOverall,
    dimensions: BTreeMap<String, DimensionParams>,
}

impl TryFrom<RawConfig> for HyperParams {
    type Error = IrisError;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let log_base = match raw.jsd.log_base.as_str() {
            "base2" | "2" => LogBase::Base2,
            "natural" | "e" => LogBase::Natural,
            other => {
                return Err(IrisError::Config(format!(
                    "jsd.log_base must be 'base2' or 'natural', got '{other}'"
                )))
            }
        };
        let mut dimensions = BTreeMap::new();
        for (key, params) in raw.dimensions {
            dimensions.insert(Dimension::parse(&key)?, params);
        }
        let params = HyperParams {
            tau: raw.tau,
            n_min: raw.n_min,
            jsd: JsdMode {
                log_base,
                square_divergence: raw.jsd.square_divergence,
            },
            tier3_confidence: raw.answer_mapping.tier3_confidence,
            tournament_direction: raw.tournament.direction,
            normalization: NormalizationOptions {
                ac_diff_passthrough: raw.normalization.ac_diff_passthrough,
            },
            k_tot: raw.overall.k,
            s_tot: raw.overall.s,
            calibration_target: raw.overall.calibration_target,
            dimensions,
        };
        params.validate()?;
        Ok(params)
    }
}

impl From<&HyperParams> for RawConfig {
    fn from(hp: &HyperParams) -> Self {
        RawConfig {
            tau: hp.tau,
            n_min: hp.n_min,
            jsd: RawJsd {
                log_base: match hp.jsd.log_base {
                    LogBase::Base2 => "base2".into(),
                    LogBase::Natural => "natural".into(),
                },
                square_divergence: hp.jsd.square_divergence,
            },
            answer_mapping: RawAnswerMapping {
                tier3_confidence: hp.tier3_confidence,
            },
            tournament: RawTournament {
                direction: hp.tournament_direction,
            },
            normalization: RawNormalization {
                ac_diff_passthrough: hp.normalization.ac_diff_passthrough,
            },
            overall: RawOverall {
                k: hp.k_tot,
                s: hp.s_tot,
                calibration_target: hp.calibration_target,
            },
            dimensions: hp
                .dimensions
                .iter()
                .map(|(d, p)| (d.as_str().to_string(), *p))
                .collect(),
        }
    }
}
