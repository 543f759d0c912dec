//! Real-world demographic ground truth per occupation, keyed by region.
//!
//! The US table carries gender, age, and (proxy) skin distributions; the EU
//! table has no skin data, so skin-axis comparisons are US-only. Both source
//! tables ship with the crate.

use crate::demographics::{AgeBand, Axis, Gender, Occupation, OccupationRegistry, SkinBand};
use crate::error::{IrisError, Result};
use crate::metrics::AttributeCategory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

pub const BUNDLED_GROUND_TRUTH_US: &str = include_str!("../../data/ground_truth_us.csv");
pub const BUNDLED_GROUND_TRUTH_EU: &str = include_str!("../../data/ground_truth_eu.csv");

/// Raw per-axis percentage sums may deviate from 100% because published
/// tables round to one decimal and some race categories go unreported; sums
/// farther off than this are rejected as data errors.
pub const RAW_SUM_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Region {
    Us,
    Eu,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Us => "US",
            Region::Eu => "EU",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "us" | "u.s." => Ok(Region::Us),
            "eu" | "e.u." => Ok(Region::Eu),
            other => Err(IrisError::InvalidValue {
                field: "region",
                value: other.to_string(),
                reason: "expected US or EU".into(),
            }),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalized per-occupation distributions. Order follows the category
/// declarations: gender [male, female], age [young, middle_aged, older],
/// skin [light, middle, dark].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationDemographics {
    pub gender: [f64; 2],
    pub age: [f64; 3],
    pub skin: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTable {
    pub region: Region,
    rows: BTreeMap<Occupation, OccupationDemographics>,
}

#[derive(Debug, serde::Deserialize)]
struct RawGroundTruthRow {
    user_term: String,
    #[allow(dead_code)]
    official_occupation: Option<String>,
    female_ratio: f64,
    light_skin_pct: Option<f64>,
    middle_skin_pct: Option<f64>,
    dark_skin_pct: Option<f64>,
    young_pct: f64,
    middle_pct: f64,
    old_pct: f64,
}

impl GroundTruthTable {
    pub fn bundled(region: Region) -> Self {
        let text = match region {
            Region::Us => BUNDLED_GROUND_TRUTH_US,
            Region::Eu => BUNDLED_GROUND_TRUTH_EU,
        };
        Self::from_reader(text.as_bytes(), region, &OccupationRegistry::bundled(), "<bundled>")
            .expect("bundled ground truth is valid")
    }

    pub fn load(path: &Path, region: Region, registry: &OccupationRegistry) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| IrisError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, region, registry, &path.display().to_string())
    }

    fn from_reader(
        reader: impl std::io::Read,
        region: Region,
        registry: &OccupationRegistry,
        source_name: &str,
    ) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);

        if region == Region::Eu {
            let headers = csv_reader
                .headers()
                .map_err(|e| IrisError::parse(source_name, 1, e.to_string()))?;
            if headers.iter().any(|h| h.contains("skin")) {
                return Err(IrisError::parse(
                    source_name,
                    1,
                    "EU ground truth must not carry skin columns",
                ));
            }
        }

        let mut rows = BTreeMap::new();
        for result in csv_reader.into_deserialize::<RawGroundTruthRow>() {
            let raw: RawGroundTruthRow = result.map_err(|e| {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or_default();
                IrisError::parse(source_name, line, e.to_string())
            })?;

            let occupation = registry.resolve(&raw.user_term)?;
            let female = raw.female_ratio / 100.0;
            if !(0.0..=1.0).contains(&female) {
                return Err(IrisError::InvalidValue {
                    field: "female_ratio",
                    value: raw.female_ratio.to_string(),
                    reason: format!("{occupation}: ratio must lie in [0,100]"),
                });
            }
            let gender = [1.0 - female, female];

            let age = normalize_axis(
                &[raw.young_pct, raw.middle_pct, raw.old_pct],
                &format!("{occupation} age ({region})"),
            )?;

            let skin = match (raw.light_skin_pct, raw.middle_skin_pct, raw.dark_skin_pct) {
                (Some(l), Some(m), Some(d)) => {
                    if region == Region::Eu {
                        return Err(IrisError::parse(
                            source_name,
                            0,
                            format!("{occupation}: skin values present in an EU file"),
                        ));
                    }
                    Some(normalize_axis(
                        &[l, m, d],
                        &format!("{occupation} skin ({region})"),
                    )?)
                }
                (None, None, None) => None,
                _ => {
                    return Err(IrisError::parse(
                        source_name,
                        0,
                        format!("{occupation}: partial skin columns"),
                    ))
                }
            };
            if region == Region::Us && skin.is_none() {
                return Err(IrisError::parse(
                    source_name,
                    0,
                    format!("{occupation}: US rows need skin columns"),
                ));
            }

            rows.insert(occupation, OccupationDemographics { gender, age, skin });
        }

        if rows.is_empty() {
            return Err(IrisError::parse(source_name, 0, "no ground-truth rows"));
        }
        Ok(GroundTruthTable { region, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn occupations(&self) -> impl Iterator<Item = &Occupation> {
        self.rows.keys()
    }

    pub fn get(&self, occupation: &Occupation) -> Option<&OccupationDemographics> {
        self.rows.get(occupation)
    }

    /// True when the region carries data for this axis at all.
    pub fn has_axis(&self, axis: Axis) -> bool {
        axis != Axis::Skin || self.region == Region::Us
    }

    /// The real-world distribution over one axis for one occupation, as
    /// (label, probability) pairs in canonical category order.
    pub fn axis_distribution(
        &self,
        occupation: &Occupation,
        axis: Axis,
    ) -> Option<Vec<(String, f64)>> {
        let row = self.rows.get(occupation)?;
        match axis {
            Axis::Gender => Some(
                Gender::ALL
                    .iter()
                    .zip(row.gender.iter())
                    .map(|(g, p)| (g.as_str().to_string(), *p))
                    .collect(),
            ),
            Axis::Age => Some(
                AgeBand::ALL
                    .iter()
                    .zip(row.age.iter())
                    .map(|(a, p)| (a.as_str().to_string(), *p))
                    .collect(),
            ),
            Axis::Skin => row.skin.map(|skin| {
                SkinBand::ALL
                    .iter()
                    .zip(skin.iter())
                    .map(|(s, p)| (s.as_str().to_string(), *p))
                    .collect()
            }),
        }
    }

    /// P_real(category | occupation).
    pub fn prevalence(&self, category: AttributeCategory, occupation: &Occupation) -> Option<f64> {
        let row = self.rows.get(occupation)?;
        match category {
            AttributeCategory::Gender(g) => Some(row.gender[g as usize]),
            AttributeCategory::Age(a) => Some(row.age[a as usize]),
            AttributeCategory::Skin(s) => row.skin.map(|skin| skin[s as usize]),
        }
    }
}

/// Converts raw percentages to probabilities: gross-error check on the raw
/// sum, then renormalization so the stored distribution sums to exactly 1.
fn normalize_axis<const N: usize>(percentages: &[f64; N], context: &str) -> Result<[f64; N]> {
    if percentages.iter().any(|p| *p < 0.0) {
        return Err(IrisError::InvalidValue {
            field: "percentage",
            value: format!("{percentages:?}"),
            reason: format!("{context}: negative percentage"),
        });
    }
    let sum: f64 = percentages.iter().sum::<f64>() / 100.0;
    if (sum - 1.0).abs() > RAW_SUM_TOLERANCE {
        return Err(IrisError::DistributionSum {
            context: context.to_string(),
            sum,
            tolerance: RAW_SUM_TOLERANCE,
        });
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(percentages.iter()) {
        *slot = p / (sum * 100.0);
    }
    Ok(out)
}
