//! Run persistence and rendering: versioned run directories, the ranking
//! table, and plot-ready exports of the deviation space.
//!
//! A run directory is plain CSV/TOML/JSON so results stay auditable and
//! diff-friendly: config.snapshot, granular.csv, deviations.csv,
//! scores.csv, leaderboard.md, and sensitivity.csv when present.

use crate::config::HyperParams;
use crate::diagnosis::MbtiCode;
use crate::error::{IrisError, Result};
use crate::pipeline::ScoredModels;
use crate::scoring::{DeviationVector, DimensionScore, GranularMetricVector, IrisResult};
use crate::stats::SensitivityReport;
use crate::taxonomy::{Dimension, Taxonomy};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Everything needed to replay one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArchive {
    pub run_id: String,
    /// RFC 3339 timestamp recorded at save time; never enters computed files.
    pub timestamp: String,
    pub config: HyperParams,
    pub taxonomy_version: u32,
    pub models: Vec<ModelRecord>,
    pub sensitivity: Option<SensitivityReport>,
}

/// Stored state of one model inside a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub result: IrisResult,
    pub granular: BTreeMap<Dimension, GranularMetricVector>,
    pub deviations: BTreeMap<Dimension, DeviationVector>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunMeta {
    run_id: String,
    timestamp: String,
    taxonomy_version: u32,
}

impl RunArchive {
    pub fn from_scored(
        run_id: &str,
        timestamp: &str,
        config: &HyperParams,
        taxonomy: &Taxonomy,
        scored: &ScoredModels,
    ) -> Self {
        let models = scored
            .results
            .iter()
            .map(|result| ModelRecord {
                result: result.clone(),
                granular: scored
                    .evaluations
                    .iter()
                    .find(|e| e.model_id == result.model_id)
                    .map(|e| e.complete.clone())
                    .unwrap_or_default(),
                deviations: scored
                    .deviations
                    .get(&result.model_id)
                    .cloned()
                    .unwrap_or_default(),
            })
            .collect();
        RunArchive {
            run_id: run_id.to_string(),
            timestamp: timestamp.to_string(),
            config: config.clone(),
            taxonomy_version: taxonomy.version,
            models,
            sensitivity: None,
        }
    }

    pub fn model(&self, model_id: &str) -> Option<&ModelRecord> {
        self.models
            .iter()
            .find(|m| m.result.model_id == model_id)
    }
}

// ---------------------------------------------------------------------------
// Saving
// ---------------------------------------------------------------------------

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IrisError + '_ {
    move |source| IrisError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a run directory atomically: everything lands in a temporary
/// sibling first, which is renamed into place. An existing directory is
/// refused unless `overwrite` is set.
pub fn save_run(archive: &RunArchive, path: &Path, overwrite: bool) -> Result<()> {
    if path.exists() {
        if !overwrite {
            return Err(IrisError::InvalidValue {
                field: "run directory",
                value: path.display().to_string(),
                reason: "already exists (pass overwrite to replace)".into(),
            });
        }
        std::fs::remove_dir_all(path).map_err(io_err(path))?;
    }
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    let staging = parent.join(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".into()),
        std::process::id()
    ));
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    std::fs::create_dir_all(&staging).map_err(io_err(&staging))?;

    let write = |name: &str, contents: String| -> Result<()> {
        let file = staging.join(name);
        std::fs::write(&file, contents).map_err(io_err(&file))
    };

    let meta = RunMeta {
        run_id: archive.run_id.clone(),
        timestamp: archive.timestamp.clone(),
        taxonomy_version: archive.taxonomy_version,
    };
    let result: Result<()> = (|| {
        write(
            "run.json",
            serde_json::to_string_pretty(&meta).expect("meta serializes"),
        )?;
        write("config.snapshot", archive.config.to_toml_string())?;
        write("granular.csv", granular_csv(archive))?;
        write("deviations.csv", deviations_csv(archive))?;
        write("scores.csv", scores_csv(archive))?;
        write("leaderboard.md", render_leaderboard(archive).0)?;
        if let Some(sensitivity) = &archive.sensitivity {
            write("sensitivity.csv", sensitivity_csv(sensitivity))?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(e);
    }
    std::fs::rename(&staging, path).map_err(io_err(path))
}

fn granular_csv(archive: &RunArchive) -> String {
    let mut out = String::from("model_id,dimension,metric,raw_value\n");
    for model in &archive.models {
        for (dimension, vector) in &model.granular {
            for (name, value) in vector.entries() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    model.result.model_id, dimension, name, value
                );
            }
        }
    }
    out
}

fn deviations_csv(archive: &RunArchive) -> String {
    let mut out = String::from("model_id,dimension,metric,u_value\n");
    for model in &archive.models {
        for (dimension, vector) in &model.deviations {
            for (name, value) in vector.entries() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    model.result.model_id, dimension, name, value
                );
            }
        }
    }
    out
}

fn opt_num(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_code(code: Option<MbtiCode>) -> String {
    code.map(|c| c.as_string()).unwrap_or_default()
}

fn scores_csv(archive: &RunArchive) -> String {
    let mut out = String::from("model_id");
    for dimension in Dimension::ALL {
        let _ = write!(out, ",magnitude_{dimension},score_{dimension}");
    }
    out.push_str(",d_tot,iris_score,mbti_gen,mbti_und\n");
    for model in &archive.models {
        let result = &model.result;
        let _ = write!(out, "{}", result.model_id);
        for dimension in Dimension::ALL {
            let entry = result.dimension_scores.get(&dimension);
            let _ = write!(
                out,
                ",{},{}",
                opt_num(entry.map(|e| e.magnitude)),
                opt_num(entry.map(|e| e.score))
            );
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            opt_num(result.d_tot),
            opt_num(result.iris_score),
            opt_code(result.mbti_gen),
            opt_code(result.mbti_und)
        );
    }
    out
}

fn sensitivity_csv(report: &SensitivityReport) -> String {
    let mut out = String::from("Sub-Metric Removed,Spearman's rho,p-value\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{:.4},{:.4}",
            row.label, row.spearman_rho, row.p_value
        );
    }
    out
}

/// One row per (model, granular metric, u value): the model's coordinates
/// in the deviation space, ready for external plotting.
pub fn export_fairness_space(archive: &RunArchive) -> String {
    let mut out = String::from("model_id,metric,u_value\n");
    for model in &archive.models {
        for vector in model.deviations.values() {
            for (name, value) in vector.entries() {
                let _ = writeln!(out, "{},{},{}", model.result.model_id, name, value);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

fn read_file(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(io_err(&path))
}

/// Reloads a run directory. Scores are reconstructed from scores.csv;
/// granular and deviation vectors from their CSV exports.
pub fn load_run(path: &Path) -> Result<RunArchive> {
    let meta: RunMeta = serde_json::from_str(&read_file(path, "run.json")?)
        .map_err(|e| IrisError::parse(path.join("run.json"), 0, e.to_string()))?;
    let config = HyperParams::from_toml_str(&read_file(path, "config.snapshot")?)?;
    let taxonomy = Taxonomy::builtin();
    if meta.taxonomy_version != taxonomy.version {
        return Err(IrisError::Config(format!(
            "run was produced with taxonomy v{}, this build carries v{}",
            meta.taxonomy_version, taxonomy.version
        )));
    }

    let granular = parse_vector_csv(path, "granular.csv")?;
    let deviations = parse_vector_csv(path, "deviations.csv")?;
    let scores = read_file(path, "scores.csv")?;

    let mut models = Vec::new();
    for (line_no, line) in scores.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 1 + 2 * Dimension::ALL.len() + 4;
        if fields.len() != expected {
            return Err(IrisError::parse(
                path.join("scores.csv"),
                line_no as u64 + 1,
                format!("expected {expected} columns, got {}", fields.len()),
            ));
        }
        let model_id = fields[0].to_string();
        let parse_opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|e| {
                IrisError::parse(path.join("scores.csv"), line_no as u64 + 1, e.to_string())
            })
        };
        let mut dimension_scores = BTreeMap::new();
        for (i, dimension) in Dimension::ALL.into_iter().enumerate() {
            let magnitude = parse_opt(fields[1 + 2 * i])?;
            let score = parse_opt(fields[2 + 2 * i])?;
            if let (Some(magnitude), Some(score)) = (magnitude, score) {
                dimension_scores.insert(
                    dimension,
                    DimensionScore {
                        dimension,
                        magnitude,
                        score,
                    },
                );
            }
        }
        let base = 1 + 2 * Dimension::ALL.len();
        let result = IrisResult {
            model_id: model_id.clone(),
            dimension_scores,
            d_tot: parse_opt(fields[base])?,
            iris_score: parse_opt(fields[base + 1])?,
            mbti_gen: MbtiCode::parse(fields[base + 2]),
            mbti_und: MbtiCode::parse(fields[base + 3]),
        };
        let mut model_deviations = BTreeMap::new();
        if let Some(per_dim) = deviations.get(&model_id) {
            for (dimension, vector) in per_dim {
                model_deviations.insert(
                    *dimension,
                    DeviationVector::from_entries(*dimension, vector.entries().to_vec())?,
                );
            }
        }
        models.push(ModelRecord {
            result,
            granular: granular.get(&model_id).cloned().unwrap_or_default(),
            deviations: model_deviations,
        });
    }

    Ok(RunArchive {
        run_id: meta.run_id,
        timestamp: meta.timestamp,
        config,
        taxonomy_version: meta.taxonomy_version,
        models,
        sensitivity: None,
    })
}

type VectorsByModel = BTreeMap<String, BTreeMap<Dimension, GranularMetricVector>>;

fn parse_vector_csv(dir: &Path, name: &str) -> Result<VectorsByModel> {
    let text = read_file(dir, name)?;
    let taxonomy = Taxonomy::builtin();
    let mut rows: BTreeMap<String, BTreeMap<Dimension, Vec<(String, f64)>>> = BTreeMap::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(IrisError::parse(
                dir.join(name),
                line_no as u64 + 1,
                format!("expected 4 columns, got {}", fields.len()),
            ));
        }
        let dimension = Dimension::parse(fields[1])?;
        let value: f64 = fields[3].parse().map_err(|e: std::num::ParseFloatError| {
            IrisError::parse(dir.join(name), line_no as u64 + 1, e.to_string())
        })?;
        rows.entry(fields[0].to_string())
            .or_default()
            .entry(dimension)
            .or_default()
            .push((fields[2].to_string(), value));
    }
    let mut out: VectorsByModel = BTreeMap::new();
    for (model, per_dim) in rows {
        let mut vectors = BTreeMap::new();
        for (dimension, entries) in per_dim {
            vectors.insert(
                dimension,
                GranularMetricVector::new(dimension, entries, taxonomy)?,
            );
        }
        out.insert(model, vectors);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Leaderboard
// ---------------------------------------------------------------------------

const LEADERBOARD_COLUMNS: [(&str, Dimension); 6] = [
    ("Und IFS", Dimension::IfsUnd),
    ("Und RFS", Dimension::RfsUnd),
    ("Und BIS", Dimension::BisUnd),
    ("Gen IFS", Dimension::IfsGen),
    ("Gen RFS", Dimension::RfsGen),
    ("Gen BIS", Dimension::BisGen),
];

/// Renders the ranking table as (markdown, csv). Scores print at two
/// decimals; the best and worst value of every numeric column are flagged
/// when at least two models fill it. Rows order by overall score
/// descending, models without one after, ties and leftovers by model id.
pub fn render_leaderboard(archive: &RunArchive) -> (String, String) {
    let mut rows: Vec<&ModelRecord> = archive.models.iter().collect();
    rows.sort_by(|a, b| {
        match (b.result.iris_score, a.result.iris_score) {
            (Some(x), Some(y)) => x
                .partial_cmp(&y)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.result.model_id.cmp(&b.result.model_id)),
            (Some(_), None) => std::cmp::Ordering::Greater,
            (None, Some(_)) => std::cmp::Ordering::Less,
            (None, None) => a.result.model_id.cmp(&b.result.model_id),
        }
    });

    // column-wise best/worst flags
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for (_, dimension) in LEADERBOARD_COLUMNS {
        columns.push(
            rows.iter()
                .map(|m| m.result.score_of(dimension))
                .collect(),
        );
    }
    columns.push(rows.iter().map(|m| m.result.iris_score).collect());

    let flags: Vec<(Option<f64>, Option<f64>)> = columns
        .iter()
        .map(|column| {
            let filled: Vec<f64> = column.iter().flatten().copied().collect();
            if filled.len() < 2 {
                (None, None)
            } else {
                let best = filled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let worst = filled.iter().copied().fold(f64::INFINITY, f64::min);
                (Some(best), Some(worst))
            }
        })
        .collect();

    let cell = |value: Option<f64>, flag: &(Option<f64>, Option<f64>)| -> String {
        match value {
            None => "-".into(),
            Some(v) => {
                let mut text = format!("{v:.2}");
                if flag.0 == Some(v) {
                    text.push('†');
                } else if flag.1 == Some(v) {
                    text.push('‡');
                }
                text
            }
        }
    };

    let mut md = String::new();
    md.push_str("| Model | Und IFS | Und RFS | Und BIS | Gen IFS | Gen RFS | Gen BIS | IRIS Score | Gen | Und |\n");
    md.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    let mut csv = String::from(
        "model_id,und_ifs,und_rfs,und_bis,gen_ifs,gen_rfs,gen_bis,iris_score,mbti_gen,mbti_und\n",
    );
    for row in &rows {
        let result = &row.result;
        let mut md_cells = vec![result.model_id.clone()];
        let mut csv_cells = vec![result.model_id.clone()];
        for (i, (_, dimension)) in LEADERBOARD_COLUMNS.iter().enumerate() {
            let value = result.score_of(*dimension);
            md_cells.push(cell(value, &flags[i]));
            csv_cells.push(opt_num(value));
        }
        md_cells.push(cell(result.iris_score, &flags[6]));
        csv_cells.push(opt_num(result.iris_score));
        for code in [result.mbti_gen, result.mbti_und] {
            md_cells.push(code.map(|c| c.as_string()).unwrap_or_else(|| "-".into()));
            csv_cells.push(opt_code(code));
        }
        let _ = writeln!(md, "| {} |", md_cells.join(" | "));
        let _ = writeln!(csv, "{}", csv_cells.join(","));
    }
    (md, csv)
}

/// Recomputes every stored score from the archive's granular vectors and
/// config snapshot and checks bit-for-bit agreement at full precision.
pub fn verify_replay(archive: &RunArchive) -> Result<bool> {
    let taxonomy = Taxonomy::builtin();
    let evaluations: Vec<crate::pipeline::ModelEvaluation> = archive
        .models
        .iter()
        .map(|m| crate::pipeline::ModelEvaluation {
            model_id: m.result.model_id.clone(),
            complete: m.granular.clone(),
            computed: BTreeMap::new(),
            missing: BTreeMap::new(),
        })
        .collect();
    let rescored = crate::pipeline::score_models(evaluations, &archive.config, taxonomy)?;
    for stored in &archive.models {
        let Some(fresh) = rescored
            .results
            .iter()
            .find(|r| r.model_id == stored.result.model_id)
        else {
            return Ok(false);
        };
        for dimension in Dimension::ALL {
            let stored_score = stored.result.dimension_scores.get(&dimension);
            let fresh_score = fresh.dimension_scores.get(&dimension);
            match (stored_score, fresh_score) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    if a.magnitude.to_bits() != b.magnitude.to_bits()
                        || a.score.to_bits() != b.score.to_bits()
                    {
                        return Ok(false);
                    }
                }
                _ => return Ok(false),
            }
        }
        let same_overall = match (stored.result.iris_score, fresh.iris_score) {
            (None, None) => true,
            (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        };
        if !same_overall {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Destination helper for CLI exports.
pub fn run_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
