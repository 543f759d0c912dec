//! Command-line frontend: ingestion → metrics → scoring → diagnosis →
//! validation statistics → reports.
//!
//! Exit codes: 0 success, 1 validation error (bad input data or config),
//! 2 computation error.

use clap::{Args, Parser, Subcommand};
use iris_core::pipeline::{evaluate, PipelineInputs, RegionSelection};
use iris_core::report::{export_fairness_space, load_run, render_leaderboard, save_run, RunArchive};
use iris_core::stats::{
    cronbach_alpha, default_perturbations, dimension_correlation_matrix, loo_sensitivity,
    weight_perturbation, welch_t_test, ScoreMatrix, SensitivityReport,
};
use iris_core::{
    diagnose, parse_generation_records, parse_tournament_tallies, parse_understanding_records,
    AliasTable, Dimension, GranularVec, GroundTruthTable, HyperParams, IrisError, MbtiCode,
    OccupationRegistry, Region, Taxonomy,
};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "iris",
    version,
    about = "Fairness evaluation for unified multimodal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Annotated generation records (CSV or JSONL)
    #[arg(long)]
    gen_records: Option<PathBuf>,
    /// Annotated understanding records (CSV or JSONL)
    #[arg(long)]
    und_records: Option<PathBuf>,
    /// Tournament win-count rows (CSV or JSONL)
    #[arg(long)]
    tournament: Option<PathBuf>,
    /// US ground-truth table; bundled data when omitted
    #[arg(long)]
    ground_truth_us: Option<PathBuf>,
    /// EU ground-truth table; bundled data when omitted
    #[arg(long)]
    ground_truth_eu: Option<PathBuf>,
    /// Answer alias table (alias,canonical); bundled defaults when omitted
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Occupation registry override (one name per line)
    #[arg(long)]
    occupations: Option<PathBuf>,
    /// Scoring configuration (TOML); falls back to $IRIS_CONFIG, then defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth regions to evaluate: us, eu, or both
    #[arg(long, default_value = "both")]
    region: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and save a run directory
    Score {
        #[command(flatten)]
        inputs: InputArgs,
        /// Output run directory
        #[arg(long)]
        out: PathBuf,
        /// Run identifier stored in the archive (defaults to the directory name)
        #[arg(long)]
        run_id: Option<String>,
        /// Replace an existing run directory
        #[arg(long)]
        overwrite: bool,
    },
    /// Compute granular metrics only and dump them as CSV (no scoring)
    Metrics {
        #[command(flatten)]
        inputs: InputArgs,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagnose a personality code from three dimensional scores, or from a run
    Mbti {
        #[arg(long, requires_all = ["rfs", "bis"])]
        ifs: Option<f64>,
        #[arg(long)]
        rfs: Option<f64>,
        #[arg(long)]
        bis: Option<f64>,
        /// Threshold; defaults to the configured value (60)
        #[arg(long)]
        tau: Option<f64>,
        /// Diagnose every model of a saved run
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Validation statistics over a saved run
    Validate {
        #[arg(long)]
        run: PathBuf,
        /// Architecture grouping CSV (model_id,group) for the Welch test
        #[arg(long)]
        groups: Option<PathBuf>,
    },
    /// Leave-one-out and weight-perturbation ranking stability
    Sensitivity {
        #[arg(long)]
        run: PathBuf,
        /// Perturbation fraction applied per dimension, both signs
        #[arg(long, default_value_t = 0.10)]
        perturb_fraction: f64,
        /// Write the report here instead of <run>/sensitivity.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print cohort medians and the scale factors that center them on a target
    Calibrate {
        #[arg(long)]
        run: PathBuf,
        /// Score the median model should receive
        #[arg(long, default_value_t = 60.0)]
        target: f64,
    },
    /// Render the leaderboard and fairness-space export for a saved run
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<HyperParams, IrisError> {
    if let Some(path) = path {
        return HyperParams::load(path);
    }
    if let Ok(env_path) = std::env::var("IRIS_CONFIG") {
        if !env_path.trim().is_empty() {
            return HyperParams::load(Path::new(&env_path));
        }
    }
    Ok(HyperParams::default())
}

fn load_inputs(
    args: &InputArgs,
) -> Result<(PipelineInputs, HyperParams, RegionSelection), IrisError> {
    let registry = match &args.occupations {
        Some(path) => OccupationRegistry::from_file(path)?,
        None => OccupationRegistry::bundled(),
    };
    let aliases = match &args.aliases {
        Some(path) => AliasTable::load(path, &registry)?,
        None => AliasTable::bundled(&registry),
    };
    let hp = load_config(&args.config)?;
    let region = RegionSelection::parse(&args.region)?;

    let gen_records = match &args.gen_records {
        Some(path) => parse_generation_records(path, &registry)?,
        None => Vec::new(),
    };
    let und_records = match &args.und_records {
        Some(path) => parse_understanding_records(path, &registry, &aliases)?,
        None => Vec::new(),
    };
    let tallies = match &args.tournament {
        Some(path) => parse_tournament_tallies(path, &registry)?,
        None => Vec::new(),
    };
    if gen_records.is_empty() && und_records.is_empty() && tallies.is_empty() {
        return Err(IrisError::Config(
            "no inputs: pass at least one of --gen-records, --und-records, --tournament".into(),
        ));
    }

    let gt_us = match &args.ground_truth_us {
        Some(path) => Some(GroundTruthTable::load(path, Region::Us, &registry)?),
        None => Some(GroundTruthTable::bundled(Region::Us)),
    };
    let gt_eu = match &args.ground_truth_eu {
        Some(path) => Some(GroundTruthTable::load(path, Region::Eu, &registry)?),
        None => Some(GroundTruthTable::bundled(Region::Eu)),
    };

    Ok((
        PipelineInputs {
            gen_records,
            und_records,
            tallies,
            gt_us,
            gt_eu,
        },
        hp,
        region,
    ))
}

fn now_rfc3339() -> String {
    // civil date from the epoch day count; avoids a clock-formatting dependency
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let days = secs / 86_400;
    let (h, m, s) = ((secs / 3600) % 24, (secs / 60) % 60, secs % 60);
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{day:02}T{h:02}:{m:02}:{s:02}Z")
}

fn print_missing_notices(scored: &iris_core::ScoredModels) {
    for evaluation in &scored.evaluations {
        for dimension in Dimension::ALL {
            let missing = &evaluation.missing[&dimension];
            if !missing.is_empty() {
                let (first_metric, first_reason) = &missing[0];
                eprintln!(
                    "notice: {} {dimension} not scored ({} of {} entries underivable; e.g. {first_metric}: {first_reason})",
                    evaluation.model_id,
                    missing.len(),
                    missing.len() + evaluation.computed[&dimension].len(),
                );
            }
        }
    }
    for result in &scored.results {
        if result.iris_score.is_none() {
            eprintln!(
                "notice: {} has no overall score (needs all six dimensions)",
                result.model_id
            );
        }
    }
}

fn run(command: Command) -> Result<(), IrisError> {
    match command {
        Command::Score {
            inputs,
            out,
            run_id,
            overwrite,
        } => {
            let (pipeline_inputs, hp, region) = load_inputs(&inputs)?;
            let taxonomy = Taxonomy::builtin();
            let scored = evaluate(&pipeline_inputs, &hp, taxonomy, region)?;
            print_missing_notices(&scored);
            let run_id = run_id.unwrap_or_else(|| {
                out.file_name()
                    .map(|n| n.to_string_lossy().to_string())
                    .unwrap_or_else(|| "run".into())
            });
            let archive = RunArchive::from_scored(&run_id, &now_rfc3339(), &hp, taxonomy, &scored);
            save_run(&archive, &out, overwrite)?;
            println!("saved run '{run_id}' to {}", out.display());
            let (markdown, _) = render_leaderboard(&archive);
            println!("{markdown}");
            Ok(())
        }

        Command::Metrics { inputs, out } => {
            let (pipeline_inputs, hp, region) = load_inputs(&inputs)?;
            let taxonomy = Taxonomy::builtin();
            let mut csv = String::from("model_id,dimension,metric,raw_value\n");
            for model_id in pipeline_inputs.model_ids() {
                let evaluation = iris_core::pipeline::compute_granular_metrics(
                    &model_id,
                    &pipeline_inputs,
                    &hp,
                    taxonomy,
                    region,
                )?;
                for (dimension, values) in &evaluation.computed {
                    for (metric, value) in values {
                        csv.push_str(&format!("{model_id},{dimension},{metric},{value}\n"));
                    }
                    for (metric, reason) in &evaluation.missing[dimension] {
                        eprintln!("notice: {model_id} {dimension} {metric}: {reason}");
                    }
                }
            }
            match out {
                Some(path) =>

                    std::fs::write(&path, csv).map_err(|source| IrisError::Io { path, source })?,
                None => print!("{csv}"),
            }
            Ok(())
        }

        Command::Mbti {
            ifs,
            rfs,
            bis,
            tau,
            run,
            config,
        } => {
            let hp = load_config(&config)?;
            let tau = tau.unwrap_or(hp.tau);
            if let Some(run_dir) = run {
                let archive = load_run(&run_dir)?;
                for model in &archive.models {
                    let fetch = |d: Dimension| model.result.score_of(d);
                    let describe = |code: Option<MbtiCode>| match code {
                        Some(c) => format!("{c} ({})", c.archetype_name()),
                        None => "-".into(),
                    };
                    let code_for = |i: Option<f64>, r: Option<f64>, b: Option<f64>| match (i, r, b)
                    {
                        (Some(i), Some(r), Some(b)) => Some(diagnose(i, r, b, tau)),
                        _ => None,
                    };
                    let gen = code_for(
                        fetch(Dimension::IfsGen),
                        fetch(Dimension::RfsGen),
                        fetch(Dimension::BisGen),
                    );
                    let und = code_for(
                        fetch(Dimension::IfsUnd),
                        fetch(Dimension::RfsUnd),
                        fetch(Dimension::BisUnd),
                    );
                    println!(
                        "{}: gen {} | und {}",
                        model.result.model_id,
                        describe(gen),
                        describe(und)
                    );
                }
                return Ok(());
            }
            match (ifs, rfs, bis) {
                (Some(i), Some(r), Some(b)) => {
                    let code = diagnose(i, r, b, tau);
                    println!("{code} ({})", code.archetype_name());
                    Ok(())
                }
                _ => Err(IrisError::Config("pass --ifs/--rfs/--bis or --run".into())),
            }
        }

        Command::Validate { run, groups } => cmd_validate(&run, groups.as_deref()),

        Command::Sensitivity {
            run,
            perturb_fraction,
            out,
        } => {
            let archive = load_run(&run)?;
            let granular = full_granular(&archive);
            let taxonomy = Taxonomy::builtin();
            let loo = loo_sensitivity(&granular, &archive.config, taxonomy)?;
            let mut perturbations = default_perturbations();
            for p in &mut perturbations {
                p.fraction = p.fraction.signum() * perturb_fraction;
            }
            let perturbed =
                weight_perturbation(&granular, &archive.config, taxonomy, &perturbations)?;

            let mut report = SensitivityReport {
                baseline: loo.baseline.clone(),
                rows: loo.rows,
            };
            report.rows.extend(perturbed.rows);

            let mut csv = String::from("Sub-Metric Removed,Spearman's rho,p-value\n");
            let mut min_rho = f64::INFINITY;
            for row in &report.rows {
                csv.push_str(&format!(
                    "{},{:.4},{:.4}\n",
                    row.label, row.spearman_rho, row.p_value
                ));
                min_rho = min_rho.min(row.spearman_rho);
            }
            let path = out.unwrap_or_else(|| run.join("sensitivity.csv"));
            std::fs::write(&path, csv).map_err(|source| IrisError::Io {
                path: path.clone(),
                source,
            })?;
            println!(
                "wrote {} rows to {} (min Spearman rho {:.4})",
                report.rows.len(),
                path.display(),
                min_rho
            );
            Ok(())
        }

        Command::Calibrate { run, target } => {
            let archive = load_run(&run)?;
            println!(
                "cohort medians over {} models (target {target}):",
                archive.models.len()
            );
            for dimension in Dimension::ALL {
                let magnitudes: Vec<f64> = archive
                    .models
                    .iter()
                    .filter_map(|m| {
                        m.result
                            .dimension_scores
                            .get(&dimension)
                            .map(|s| s.magnitude)
                    })
                    .collect();
                if magnitudes.is_empty() {
                    println!("  {dimension}: no data");
                    continue;
                }
                let median = iris_core::median(&magnitudes);
                let k = archive.config.dimension(dimension).k;
                let s = iris_core::calibrate(median, k, target);
                println!("  {dimension}: median magnitude {median:.4}, K {k}, S = {s:.4}");
            }
            let d_tots: Vec<f64> = archive.models.iter().filter_map(|m| m.result.d_tot).collect();
            if !d_tots.is_empty() {
                let median = iris_core::median(&d_tots);
                let s = iris_core::calibrate(median, archive.config.k_tot, target);
                println!(
                    "  overall: median deviation {median:.4}, K {}, S = {s:.4}",
                    archive.config.k_tot
                );
            }
            Ok(())
        }

        Command::Report { run } => {
            let archive = load_run(&run)?;
            let (markdown, csv) = render_leaderboard(&archive);
            let space = export_fairness_space(&archive);
            let write = |name: &str, contents: &str| -> Result<(), IrisError> {
                let path = run.join(name);
                std::fs::write(&path, contents).map_err(|source| IrisError::Io {
                    path: path.clone(),
                    source,
                })
            };
            write("leaderboard.md", &markdown)?;
            write("leaderboard.csv", &csv)?;
            write("fairness_space.csv", &space)?;
            print!("{markdown}");
            Ok(())
        }
    }
}

/// Per-model full granular vectors, for the sensitivity analyses.
fn full_granular(archive: &iris_core::RunArchive) -> BTreeMap<String, Vec<GranularVec>> {
    let mut out = BTreeMap::new();
    for model in &archive.models {
        if model.granular.len() == Dimension::ALL.len() {
            out.insert(
                model.result.model_id.clone(),
                model.granular.values().cloned().collect(),
            );
        } else {
            eprintln!(
                "notice: {} lacks full granular coverage; excluded from sensitivity",
                model.result.model_id
            );
        }
    }
    out
}

fn cmd_validate(run: &Path, groups: Option<&Path>) -> Result<(), IrisError> {
    let archive = load_run(run)?;
    if archive.models.len() < 2 {
        println!(
            "validation skipped: {} model(s) in the run, need at least 2 for cross-model statistics",
            archive.models.len()
        );
        return Ok(());
    }
    let taxonomy = Taxonomy::builtin();

    println!("internal consistency (Cronbach's alpha) per dimension:");
    for dimension in Dimension::ALL {
        let with_dim: Vec<&iris_core::report::ModelRecord> = archive
            .models
            .iter()
            .filter(|m| m.granular.contains_key(&dimension))
            .collect();
        if with_dim.len() < 2 {
            println!("  {dimension}: skipped (fewer than 2 models with granular data)");
            continue;
        }
        let ids = with_dim.iter().map(|m| m.result.model_id.clone()).collect();
        let names: Vec<String> = taxonomy
            .names_of(dimension)
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<f64>> = with_dim
            .iter()
            .map(|m| m.granular[&dimension].values())
            .collect();
        match cronbach_alpha(&ScoreMatrix::new(ids, names, rows)?) {
            Ok(alpha) => println!("  {dimension}: alpha = {alpha:.4}"),
            Err(e) => println!("  {dimension}: undefined ({e})"),
        }
    }

    let complete: Vec<&iris_core::report::ModelRecord> = archive
        .models
        .iter()
        .filter(|m| m.result.dimension_scores.len() == Dimension::ALL.len())
        .collect();
    if complete.len() >= 3 {
        let ids = complete.iter().map(|m| m.result.model_id.clone()).collect();
        let columns: Vec<String> = Dimension::ALL.iter().map(|d| d.to_string()).collect();
        let rows: Vec<Vec<f64>> = complete
            .iter()
            .map(|m| {
                Dimension::ALL
                    .iter()
                    .map(|d| m.result.score_of(*d).expect("filtered complete"))
                    .collect()
            })
            .collect();
        let corr = dimension_correlation_matrix(&ScoreMatrix::new(ids, columns, rows)?)?;
        println!("dimension score correlation matrix:");
        print!("  {:>8}", "");
        for dimension in Dimension::ALL {
            print!(" {:>8}", dimension.to_string());
        }
        println!();
        for (i, dimension) in Dimension::ALL.into_iter().enumerate() {
            print!("  {:>8}", dimension.to_string());
            for value in &corr[i] {
                print!(" {value:>8.3}");
            }
            println!();
        }
    } else {
        println!("correlation matrix skipped: fewer than 3 models with all six scores");
    }

    if let Some(groups_path) = groups {
        let text = std::fs::read_to_string(groups_path).map_err(|source| IrisError::Io {
            path: groups_path.to_path_buf(),
            source,
        })?;
        let mut by_group: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, ',');
            let (model_id, group) = match (parts.next(), parts.next()) {
                (Some(m), Some(g)) => (m.trim(), g.trim()),
                _ => {
                    return Err(IrisError::parse(
                        groups_path,
                        line_no as u64 + 1,
                        "expected model_id,group",
                    ))
                }
            };
            let Some(model) = archive.model(model_id) else {
                eprintln!("notice: grouped model '{model_id}' not in run; ignored");
                continue;
            };
            if let Some(score) = model.result.iris_score {
                by_group.entry(group.to_string()).or_default().push(score);
            }
        }
        let groups: Vec<(&String, &Vec<f64>)> = by_group.iter().collect();
        if groups.len() != 2 {
            println!(
                "Welch test skipped: need exactly 2 groups with overall scores, got {}",
                groups.len()
            );
        } else if groups.iter().any(|(_, scores)| scores.len() < 2) {
            println!("Welch test skipped: each group needs at least 2 scored models");
        } else {
            let test = welch_t_test(groups[0].1, groups[1].1)?;
            println!(
                "Welch's t-test {} vs {}: t = {:.4}, df = {:.2}, two-sided p = {:.4}",
                groups[0].0, groups[1].0, test.t, test.df, test.p_two_sided
            );
        }
    }
    Ok(())
}
