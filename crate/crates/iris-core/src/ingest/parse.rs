//! File parsers for behavior records and tournament tallies.
//!
//! Two serializations are accepted: CSV with the documented header, and
//! JSON-lines carrying the same field names (detected by the `.jsonl` /
//! `.ndjson` extension). Every validation error names the file and line.

use crate::demographics::{AgeBand, AttributeProfile, Gender, OccupationRegistry, SkinBand};
use crate::error::{IrisError, Result};
use crate::ingest::alias::{map_answer_tier1, AliasTable};
use crate::ingest::records::{
    ExpectedAttributes, GenerationRecord, MappedAnswer, PairInfo, PromptKind, QualityScores,
    TournamentTally, UnderstandingRecord, VariantKind,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Subjective ratings live on a fixed 1-10 scale.
pub const SUBJECTIVE_SCORE_RANGE: (f64, f64) = (1.0, 10.0);

/// Token marking refusal counts in tournament files.
pub const REFUSAL_TOKEN: &str = "refusal";

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

/// Reads rows from CSV or JSONL, attaching 1-based line numbers.
fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>> {
    let io_err = |source| IrisError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut rows = Vec::new();
    if is_jsonl(path) {
        let text = std::fs::read_to_string(path).map_err(io_err)?;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            if line.trim().is_empty() {
                continue;
            }
            let row = serde_json::from_str::<T>(line)
                .map_err(|e| IrisError::parse(path, line_no, e.to_string()))?;
            rows.push((line_no, row));
        }
    } else {
        let file = std::fs::File::open(path).map_err(io_err)?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers = reader
            .headers()
            .map_err(|e| IrisError::parse(path, 1, e.to_string()))?
            .clone();
        for record in reader.records() {
            let record = record.map_err(|e| {
                IrisError::parse(path, e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
            })?;
            let line_no = record.position().map(|p| p.line()).unwrap_or(0);
            let row: T = record
                .deserialize(Some(&headers))
                .map_err(|e| IrisError::parse(path, line_no, e.to_string()))?;
            rows.push((line_no, row));
        }
    }
    Ok(rows)
}

fn opt(field: &Option<String>) -> Option<&str> {
    field.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

// ---------------------------------------------------------------------------
// Generation records
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct RawGenerationRow {
    model_id: String,
    occupation: String,
    prompt_kind: String,
    #[serde(default)]
    exp_gender: Option<String>,
    #[serde(default)]
    exp_age: Option<String>,
    #[serde(default)]
    exp_skin: Option<String>,
    obs_gender: String,
    obs_age: String,
    obs_skin: String,
    #[serde(default)]
    qps: Option<f64>,
    #[serde(default)]
    fqp: Option<f64>,
    #[serde(default)]
    sil: Option<f64>,
    #[serde(default)]
    scl: Option<f64>,
}

pub fn parse_generation_records(
    path: &Path,
    registry: &OccupationRegistry,
) -> Result<Vec<GenerationRecord>> {
    let rows: Vec<(u64, RawGenerationRow)> = read_rows(path)?;
    let mut records = Vec::with_capacity(rows.len());
    for (line, raw) in rows {
        records.push(validate_generation_row(raw, registry).map_err(|e| match e {
            IrisError::Parse { .. } => e,
            other => IrisError::parse(path, line, other.to_string()),
        })?);
    }
    Ok(records)
}

fn validate_generation_row(
    raw: RawGenerationRow,
    registry: &OccupationRegistry,
) -> Result<GenerationRecord> {
    if raw.model_id.trim().is_empty() {
        return Err(IrisError::InvalidValue {
            field: "model_id",
            value: String::new(),
            reason: "must be non-empty".into(),
        });
    }
    let occupation = registry.resolve(&raw.occupation)?;
    let prompt_kind = PromptKind::parse(&raw.prompt_kind)?;

    let expected = ExpectedAttributes {
        gender: opt(&raw.exp_gender).map(Gender::parse).transpose()?,
        age: opt(&raw.exp_age).map(AgeBand::parse).transpose()?,
        skin: opt(&raw.exp_skin).map(SkinBand::parse).transpose()?,
    };
    let expected = match (prompt_kind, expected.is_empty()) {
        (PromptKind::Neutral, true) => None,
        (PromptKind::Neutral, false) => {
            return Err(IrisError::InvalidValue {
                field: "expected attributes",
                value: "present".into(),
                reason: "neutral prompts must not carry expected attributes".into(),
            })
        }
        (_, true) => {
            return Err(IrisError::InvalidValue {
                field: "expected attributes",
                value: "absent".into(),
                reason: format!("{prompt_kind} prompts must specify at least one attribute"),
            })
        }
        (_, false) => Some(expected),
    };

    let observed = AttributeProfile::new(
        Gender::parse(&raw.obs_gender)?,
        AgeBand::parse(&raw.obs_age)?,
        SkinBand::parse(&raw.obs_skin)?,
    );

    for (name, value) in [
        ("qps", raw.qps),
        ("fqp", raw.fqp),
        ("sil", raw.sil),
        ("scl", raw.scl),
    ] {
        if let Some(v) = value {
            if !v.is_finite() {
                return Err(IrisError::InvalidValue {
                    field: "quality score",
                    value: format!("{name}={v}"),
                    reason: "must be finite".into(),
                });
            }
        }
    }

    Ok(GenerationRecord {
        model_id: raw.model_id.trim().to_string(),
        occupation,
        prompt_kind,
        expected,
        observed,
        quality: QualityScores {
            qps: raw.qps,
            fqp: raw.fqp,
            sil: raw.sil,
            scl: raw.scl,
        },
    })
}

// ---------------------------------------------------------------------------
// Understanding records
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct RawUnderstandingRow {
    model_id: String,
    true_occupation: String,
    predicted_raw: String,
    #[serde(default)]
    predicted_mapped: Option<String>,
    gender: String,
    age: String,
    skin: String,
    #[serde(default)]
    pair_id: Option<String>,
    #[serde(default)]
    variant: Option<String>,
    #[serde(default)]
    subj_q1: Option<f64>,
    #[serde(default)]
    subj_q2: Option<f64>,
    #[serde(default)]
    subj_q3: Option<f64>,
    #[serde(default)]
    subj_q4: Option<f64>,
    #[serde(default)]
    subj_q5: Option<f64>,
    #[serde(default)]
    subj_q6: Option<f64>,
    #[serde(default)]
    subj_q7: Option<f64>,
    #[serde(default)]
    subj_q8: Option<f64>,
    #[serde(default)]
    subj_q9: Option<f64>,
    #[serde(default)]
    obj_a: Option<String>,
    #[serde(default)]
    obj_b: Option<String>,
    #[serde(default)]
    obj_c: Option<String>,
    #[serde(default)]
    obj_d: Option<String>,
    #[serde(default)]
    obj_e: Option<String>,
    #[serde(default)]
    obj_f: Option<String>,
    #[serde(default)]
    obj_g: Option<String>,
    #[serde(default)]
    obj_h: Option<String>,
}

impl RawUnderstandingRow {
    fn subjective_answers(&self) -> Vec<(&'static str, f64)> {
        [
            ("q1", self.subj_q1),
            ("q2", self.subj_q2),
            ("q3", self.subj_q3),
            ("q4", self.subj_q4),
            ("q5", self.subj_q5),
            ("q6", self.subj_q6),
            ("q7", self.subj_q7),
            ("q8", self.subj_q8),
            ("q9", self.subj_q9),
        ]
        .into_iter()
        .filter_map(|(q, v)| v.map(|v| (q, v)))
        .collect()
    }

    fn objective_answers(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("a", &self.obj_a),
            ("b", &self.obj_b),
            ("c", &self.obj_c),
            ("d", &self.obj_d),
            ("e", &self.obj_e),
            ("f", &self.obj_f),
            ("g", &self.obj_g),
            ("h", &self.obj_h),
        ]
    }
}

fn parse_bool(token: &str) -> Result<bool> {
    match token.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Ok(true),
        "false" | "0" | "no" | "n" => Ok(false),
        other => Err(IrisError::InvalidValue {
            field: "objective answer",
            value: other.to_string(),
            reason: "expected a boolean token".into(),
        }),
    }
}

pub fn parse_understanding_records(
    path: &Path,
    registry: &OccupationRegistry,
    aliases: &AliasTable,
) -> Result<Vec<UnderstandingRecord>> {
    let rows: Vec<(u64, RawUnderstandingRow)> = read_rows(path)?;
    let mut records = Vec::with_capacity(rows.len());
    for (line, raw) in rows {
        records.push(
            validate_understanding_row(raw, registry, aliases).map_err(|e| match e {
                IrisError::Parse { .. } => e,
                other => IrisError::parse(path, line, other.to_string()),
            })?,
        );
    }
    Ok(records)
}

fn validate_understanding_row(
    raw: RawUnderstandingRow,
    registry: &OccupationRegistry,
    aliases: &AliasTable,
) -> Result<UnderstandingRecord> {
    let true_occupation = registry.resolve(&raw.true_occupation)?;
    let subject = AttributeProfile::new(
        Gender::parse(&raw.gender)?,
        AgeBand::parse(&raw.age)?,
        SkinBand::parse(&raw.skin)?,
    );

    let predicted_mapped = match opt(&raw.predicted_mapped) {
        None => map_answer_tier1(&raw.predicted_raw, aliases, registry),
        Some(token) if token.eq_ignore_ascii_case("unmappable") => MappedAnswer::Unmappable,
        Some(token) => MappedAnswer::Mapped(registry.resolve(token)?),
    };

    let subjective: BTreeMap<String, f64> = raw
        .subjective_answers()
        .into_iter()
        .map(|(q, v)| (q.to_string(), v))
        .collect();
    for (question, value) in &subjective {
        let (lo, hi) = SUBJECTIVE_SCORE_RANGE;
        if !(*value >= lo && *value <= hi) {
            return Err(IrisError::InvalidValue {
                field: "subjective score",
                value: format!("{question}={value}"),
                reason: format!("must lie in [{lo},{hi}]"),
            });
        }
    }
    let mut objective: BTreeMap<String, bool> = BTreeMap::new();
    for (question, answer) in raw.objective_answers() {
        if let Some(token) = opt(answer) {
            objective.insert(question.to_string(), parse_bool(token)?);
        }
    }

    // BIS-Und fields travel together: pair id, variant, and some answers.
    let pair = match (opt(&raw.pair_id), opt(&raw.variant)) {
        (None, None) => {
            if !subjective.is_empty() || !objective.is_empty() {
                return Err(IrisError::InvalidValue {
                    field: "pair_id",
                    value: "absent".into(),
                    reason: "question answers present without pair information".into(),
                });
            }
            None
        }
        (Some(pair_id), Some(variant)) => {
            if subjective.is_empty() && objective.is_empty() {
                return Err(IrisError::InvalidValue {
                    field: "pair answers",
                    value: "absent".into(),
                    reason: format!("pair '{pair_id}' carries no question answers"),
                });
            }
            Some(PairInfo {
                pair_id: pair_id.to_string(),
                variant: VariantKind::parse(variant)?,
                subjective,
                objective,
            })
        }
        (Some(pair_id), None) => {
            return Err(IrisError::InvalidValue {
                field: "variant",
                value: "absent".into(),
                reason: format!("pair '{pair_id}' lacks its variant label"),
            })
        }
        (None, Some(variant)) => {
            return Err(IrisError::InvalidValue {
                field: "pair_id",
                value: "absent".into(),
                reason: format!("variant '{variant}' given without a pair id"),
            })
        }
    };

    Ok(UnderstandingRecord {
        model_id: raw.model_id.trim().to_string(),
        true_occupation,
        predicted_raw: raw.predicted_raw,
        predicted_mapped,
        subject,
        pair,
    })
}

// ---------------------------------------------------------------------------
// Tournament tallies
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct RawTournamentRow {
    model_id: String,
    gender: String,
    age: String,
    skin: String,
    /// Occupation name, or the refusal token.
    occupation: String,
    wins: u64,
}

/// Parses tournament rows and folds them into one tally per
/// (model, profile). Rows whose occupation equals [`REFUSAL_TOKEN`]
/// accumulate the refusal count instead.
pub fn parse_tournament_tallies(
    path: &Path,
    registry: &OccupationRegistry,
) -> Result<Vec<TournamentTally>> {
    let rows: Vec<(u64, RawTournamentRow)> = read_rows(path)?;
    let mut tallies: BTreeMap<(String, AttributeProfile), TournamentTally> = BTreeMap::new();
    for (line, raw) in rows {
        let wrap = |e: IrisError| IrisError::parse(path, line, e.to_string());
        let profile = AttributeProfile::new(
            Gender::parse(&raw.gender).map_err(wrap)?,
            AgeBand::parse(&raw.age).map_err(wrap)?,
            SkinBand::parse(&raw.skin).map_err(wrap)?,
        );
        let key = (raw.model_id.trim().to_string(), profile);
        let tally = tallies.entry(key.clone()).or_insert_with(|| TournamentTally {
            model_id: key.0,
            profile,
            win_counts: BTreeMap::new(),
            refusals: 0,
        });
        if raw.occupation.trim().eq_ignore_ascii_case(REFUSAL_TOKEN) {
            tally.refusals += raw.wins;
        } else {
            let occupation = registry.resolve(&raw.occupation).map_err(wrap)?;
            *tally.win_counts.entry(occupation).or_insert(0) += raw.wins;
        }
    }
    Ok(tallies.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("iris-parse-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}-{name}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    const GEN_HEADER: &str =
        "model_id,occupation,prompt_kind,exp_gender,exp_age,exp_skin,obs_gender,obs_age,obs_skin,qps,fqp,sil,scl";

    #[test]
    fn parses_valid_generation_rows() {
        let csv = format!(
            "{GEN_HEADER}\n\
             m1,doctor,neutral,,,,male,young,light,,,,\n\
             m1,doctor,stereotypical,male,,light,male,young,light,0.9,0.8,0.7,0.6\n\
             m1,nurse,counter_stereotypical,male,older,,female,older,dark,0.5,,,\n"
        );
        let path = write_temp("gen-ok.csv", &csv);
        let records =
            parse_generation_records(&path, &OccupationRegistry::bundled()).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].prompt_kind, PromptKind::Neutral);
        assert!(records[0].expected.is_none());
        assert_eq!(records[1].quality.qps, Some(0.9));
        assert_eq!(records[2].expected.unwrap().age, Some(AgeBand::Older));
        assert_eq!(records[2].quality.fqp, None);
    }

    #[test]
    fn unknown_occupation_cites_line_and_suggestion() {
        let csv = format!("{GEN_HEADER}\nm1,astronot,neutral,,,,male,young,light,,,,\n");
        let path = write_temp("gen-occ.csv", &csv);
        let err = parse_generation_records(&path, &OccupationRegistry::bundled()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "line number in {msg}");
        assert!(msg.contains("astronaut"), "suggestion in {msg}");
    }

    #[test]
    fn stereotypical_without_expected_is_schema_error() {
        let csv = format!("{GEN_HEADER}\nm1,doctor,stereotypical,,,,male,young,light,,,,\n");
        let path = write_temp("gen-noexp.csv", &csv);
        let err = parse_generation_records(&path, &OccupationRegistry::bundled()).unwrap_err();
        assert!(err.to_string().contains("specify at least one attribute"));
    }

    #[test]
    fn neutral_with_expected_is_schema_error() {
        let csv = format!("{GEN_HEADER}\nm1,doctor,neutral,male,,,male,young,light,,,,\n");
        let path = write_temp("gen-neutralexp.csv", &csv);
        assert!(parse_generation_records(&path, &OccupationRegistry::bundled()).is_err());
    }

    #[test]
    fn malformed_number_is_rejected_with_line() {
        let csv = format!("{GEN_HEADER}\nm1,doctor,neutral,,,,male,young,light,not_a_number,,,\n");
        let path = write_temp("gen-badnum.csv", &csv);
        let err = parse_generation_records(&path, &OccupationRegistry::bundled()).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn jsonl_round_trip_matches_csv() {
        let csv = format!("{GEN_HEADER}\nm1,doctor,neutral,,,,male,young,light,0.5,,,\n");
        let jsonl = r#"{"model_id":"m1","occupation":"doctor","prompt_kind":"neutral","obs_gender":"male","obs_age":"young","obs_skin":"light","qps":0.5}"#;
        let csv_path = write_temp("gen-eq.csv", &csv);
        let jsonl_path = write_temp("gen-eq.jsonl", jsonl);
        let reg = OccupationRegistry::bundled();
        assert_eq!(
            parse_generation_records(&csv_path, &reg).unwrap(),
            parse_generation_records(&jsonl_path, &reg).unwrap()
        );
    }

    const UND_HEADER: &str = "model_id,true_occupation,predicted_raw,predicted_mapped,gender,age,skin,pair_id,variant,subj_q1,subj_q2,subj_q3,subj_q4,subj_q5,subj_q6,subj_q7,subj_q8,subj_q9,obj_a,obj_b,obj_c,obj_d,obj_e,obj_f,obj_g,obj_h";

    fn und_row(rest: &str) -> String {
        format!("{UND_HEADER}\n{rest}\n")
    }

    #[test]
    fn parses_bis_pair_rows() {
        let csv = und_row(
            "m1,doctor,Doctor.,,male,young,light,p1,stereotypical,7,,,,,,,,,true,,,,,,,\n\
             m1,doctor,Doctor.,,female,young,light,p1,counter_stereotypical,4,,,,,,,,,false,,,,,,,",
        );
        let path = write_temp("und-pair.csv", &csv);
        let reg = OccupationRegistry::bundled();
        let records =
            parse_understanding_records(&path, &reg, &AliasTable::bundled(&reg)).unwrap();
        assert_eq!(records.len(), 2);
        let p0 = records[0].pair.as_ref().unwrap();
        let p1 = records[1].pair.as_ref().unwrap();
        assert_eq!(p0.pair_id, p1.pair_id);
        assert_eq!(p0.subjective["q1"], 7.0);
        assert_eq!(p1.objective["a"], false);
        assert!(records[0].is_correct());
    }

    #[test]
    fn subjective_score_out_of_range_is_rejected() {
        let csv = und_row("m1,doctor,Doctor.,,male,young,light,p1,stereotypical,11,,,,,,,,,,,,,,,,");
        let path = write_temp("und-range.csv", &csv);
        let reg = OccupationRegistry::bundled();
        let err =
            parse_understanding_records(&path, &reg, &AliasTable::empty()).unwrap_err();
        assert!(err.to_string().contains("[1,10]"), "{err}");
    }

    #[test]
    fn pair_without_variant_is_schema_error() {
        let csv = und_row("m1,doctor,Doctor.,,male,young,light,p1,,7,,,,,,,,,,,,,,,,");
        let path = write_temp("und-novariant.csv", &csv);
        let reg = OccupationRegistry::bundled();
        let err = parse_understanding_records(&path, &reg, &AliasTable::empty()).unwrap_err();
        assert!(err.to_string().contains("variant"), "{err}");
    }

    #[test]
    fn tier1_mapping_fills_empty_predicted_mapped() {
        let csv = und_row("m1,doctor,physician,,male,young,light,,,,,,,,,,,,,,,,,,,");
        let path = write_temp("und-tier1.csv", &csv);
        let reg = OccupationRegistry::bundled();
        let records =
            parse_understanding_records(&path, &reg, &AliasTable::bundled(&reg)).unwrap();
        assert!(records[0].is_correct(), "alias physician -> doctor");

        let csv = und_row("m1,doctor,a lengthy essay,,male,young,light,,,,,,,,,,,,,,,,,,,");
        let path = write_temp("und-tier1-unmap.csv", &csv);
        let records =
            parse_understanding_records(&path, &reg, &AliasTable::bundled(&reg)).unwrap();
        assert_eq!(records[0].predicted_mapped, MappedAnswer::Unmappable);
    }

    #[test]
    fn tournament_grouping_and_refusals() {
        let csv = "model_id,gender,age,skin,occupation,wins\n\
                   m1,female,young,light,doctor,600\n\
                   m1,female,young,light,nurse,400\n\
                   m1,female,young,light,refusal,100\n\
                   m1,male,older,dark,doctor,10\n";
        let path = write_temp("tournament.csv", csv);
        let tallies =
            parse_tournament_tallies(&path, &OccupationRegistry::bundled()).unwrap();
        assert_eq!(tallies.len(), 2);
        let t = tallies
            .iter()
            .find(|t| t.profile.gender == Gender::Female)
            .unwrap();
        assert_eq!(t.refusals, 100);
        assert_eq!(t.win_counts.len(), 2);
    }
}
