//! Annotated model-behavior record types: one generation record per
//! annotated image, one understanding record per VQA response, one
//! tournament tally per (model, profile).

use crate::demographics::{AgeBand, AttributeProfile, Gender, Occupation, SkinBand};
use crate::error::{IrisError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Neutral,
    Stereotypical,
    CounterStereotypical,
}

impl PromptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Neutral => "neutral",
            PromptKind::Stereotypical => "stereotypical",
            PromptKind::CounterStereotypical => "counter_stereotypical",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "neutral" => Ok(PromptKind::Neutral),
            "stereotypical" | "stereo" => Ok(PromptKind::Stereotypical),
            "counter_stereotypical" | "counter" => Ok(PromptKind::CounterStereotypical),
            other => Err(IrisError::InvalidValue {
                field: "prompt_kind",
                value: other.to_string(),
                reason: "expected neutral, stereotypical, or counter_stereotypical".into(),
            }),
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Attributes a prompt explicitly requested. Axes the prompt left open stay
/// `None` and never fail a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ExpectedAttributes {
    pub gender: Option<Gender>,
    pub age: Option<AgeBand>,
    pub skin: Option<SkinBand>,
}

impl ExpectedAttributes {
    pub fn is_empty(&self) -> bool {
        self.gender.is_none() && self.age.is_none() && self.skin.is_none()
    }

    /// True when the observation agrees on every specified axis.
    pub fn matches(&self, observed: &AttributeProfile) -> bool {
        self.gender.map_or(true, |g| g == observed.gender)
            && self.age.map_or(true, |a| a == observed.age)
            && self.skin.map_or(true, |s| s == observed.skin)
    }
}

/// The four externally computed quality/semantics scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityKind {
    Qps,
    Fqp,
    Sil,
    Scl,
}

impl QualityKind {
    pub const ALL: [QualityKind; 4] = [
        QualityKind::Qps,
        QualityKind::Fqp,
        QualityKind::Sil,
        QualityKind::Scl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityKind::Qps => "qps",
            QualityKind::Fqp => "fqp",
            QualityKind::Sil => "sil",
            QualityKind::Scl => "scl",
        }
    }

    /// Granular metric name of the derived penalty.
    pub fn penalty_name(self) -> &'static str {
        match self {
            QualityKind::Qps => "Penalty_QPS",
            QualityKind::Fqp => "Penalty_FQP",
            QualityKind::Sil => "Penalty_SIL",
            QualityKind::Scl => "Penalty_SCL",
        }
    }
}

/// Optional auxiliary scores attached to a generation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct QualityScores {
    pub qps: Option<f64>,
    pub fqp: Option<f64>,
    pub sil: Option<f64>,
    pub scl: Option<f64>,
}

impl QualityScores {
    pub fn get(&self, kind: QualityKind) -> Option<f64> {
        match kind {
            QualityKind::Qps => self.qps,
            QualityKind::Fqp => self.fqp,
            QualityKind::Sil => self.sil,
            QualityKind::Scl => self.scl,
        }
    }
}

/// One annotated generated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub model_id: String,
    pub occupation: Occupation,
    pub prompt_kind: PromptKind,
    /// Present exactly when the prompt specified attributes.
    pub expected: Option<ExpectedAttributes>,
    pub observed: AttributeProfile,
    pub quality: QualityScores,
}

/// A model answer after tier-1 mapping.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappedAnswer {
    Mapped(Occupation),
    Unmappable,
}

impl MappedAnswer {
    /// Class label used in prediction-rate tables.
    pub fn class_label(&self) -> String {
        match self {
            MappedAnswer::Mapped(o) => o.to_string(),
            MappedAnswer::Unmappable => "unmappable".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Stereotypical,
    CounterStereotypical,
}

impl VariantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::Stereotypical => "stereotypical",
            VariantKind::CounterStereotypical => "counter_stereotypical",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "stereotypical" | "stereo" => Ok(VariantKind::Stereotypical),
            "counter_stereotypical" | "counter" => Ok(VariantKind::CounterStereotypical),
            other => Err(IrisError::InvalidValue {
                field: "variant",
                value: other.to_string(),
                reason: "expected stereotypical or counter_stereotypical".into(),
            }),
        }
    }
}

/// Counterfactual-pair fields; all present together on BIS-Und records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInfo {
    pub pair_id: String,
    pub variant: VariantKind,
    /// Subjective 1-10 ratings per question id.
    pub subjective: BTreeMap<String, f64>,
    /// Objective correctness per question id.
    pub objective: BTreeMap<String, bool>,
}

/// One annotated VQA response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderstandingRecord {
    pub model_id: String,
    pub true_occupation: Occupation,
    pub predicted_raw: String,
    pub predicted_mapped: MappedAnswer,
    pub subject: AttributeProfile,
    pub pair: Option<PairInfo>,
}

impl UnderstandingRecord {
    pub fn is_correct(&self) -> bool {
        // Unmappable answers count as incorrect predictions.
        matches!(&self.predicted_mapped, MappedAnswer::Mapped(o) if *o == self.true_occupation)
    }
}

/// Win counts of one tournament series for one (model, profile).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentTally {
    pub model_id: String,
    pub profile: AttributeProfile,
    pub win_counts: BTreeMap<Occupation, u64>,
    pub refusals: u64,
}
