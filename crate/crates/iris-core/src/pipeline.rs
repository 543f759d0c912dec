//! End-to-end assembly: from normalized datasets to granular metric
//! vectors, deviation coordinates, dimension scores, personality codes, and
//! the overall score.
//!
//! Metrics that cannot be derived from the provided inputs are recorded
//! with a reason instead of aborting the run; a dimension is scored only
//! when every canonical entry was computed.

use crate::config::{HyperParams, TournamentDirection};
use crate::demographics::{
    derive_groups, profile_to_cell, AgeBand, AttributeProfile, Axis, Gender, GroupSelector,
    Occupation,
};
use crate::diagnosis::diagnose;
use crate::error::{IrisError, Result};
use crate::ingest::records::{
    GenerationRecord, PromptKind, QualityKind, TournamentTally, UnderstandingRecord,
};
use crate::ingest::{empirical_distribution, GroundTruthTable, Region};
use crate::metrics::{
    accuracy_disparity, answer_consistency_difference,
    build_counterfactual_pairs, bayes_invert, degradation_penalty, delta_gsr, dhr_inconsistency,
    generation_success_rate, js_divergence, representation_disparity,
    statistical_parity_difference, stereotype_drift, AttributeCategory, GroupOutcome,
    ProbabilityVector,
};
use crate::scalar::mean;
use crate::scoring::{
    decay_score, dimensional_magnitude, normalize, DeviationSource, DeviationVector,
    DimensionScore, GranularMetricVector, IrisResult,
};
use crate::stats::median;
use crate::taxonomy::{Dimension, Taxonomy};
use std::collections::{BTreeMap, BTreeSet};

/// Which regions' ground truth enters the granular set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSelection {
    Us,
    Eu,
    Both,
}

impl RegionSelection {
    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "us" => Ok(RegionSelection::Us),
            "eu" => Ok(RegionSelection::Eu),
            "both" => Ok(RegionSelection::Both),
            other => Err(IrisError::InvalidValue {
                field: "region",
                value: other.to_string(),
                reason: "expected us, eu, or both".into(),
            }),
        }
    }

    fn includes(self, region: Region) -> bool {
        matches!(
            (self, region),
            (RegionSelection::Both, _)
                | (RegionSelection::Us, Region::Us)
                | (RegionSelection::Eu, Region::Eu)
        )
    }
}

/// All datasets one scoring run consumes.
#[derive(Debug, Clone, Default)]
pub struct PipelineInputs {
    pub gen_records: Vec<GenerationRecord>,
    pub und_records: Vec<UnderstandingRecord>,
    pub tallies: Vec<TournamentTally>,
    pub gt_us: Option<GroundTruthTable>,
    pub gt_eu: Option<GroundTruthTable>,
}

impl PipelineInputs {
    pub fn model_ids(&self) -> Vec<String> {
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        ids.extend(self.gen_records.iter().map(|r| r.model_id.as_str()));
        ids.extend(self.und_records.iter().map(|r| r.model_id.as_str()));
        ids.extend(self.tallies.iter().map(|t| t.model_id.as_str()));
        ids.into_iter().map(str::to_string).collect()
    }

    fn ground_truth(&self, region: Region) -> Option<&GroundTruthTable> {
        match region {
            Region::Us => self.gt_us.as_ref(),
            Region::Eu => self.gt_eu.as_ref(),
        }
    }
}

/// Granular computation outcome for one model.
#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    pub model_id: String,
    /// Dimensions whose full canonical vector was derived.
    pub complete: BTreeMap<Dimension, GranularMetricVector>,
    /// Everything computed, complete or not: (metric, value).
    pub computed: BTreeMap<Dimension, Vec<(String, f64)>>,
    /// Entries that could not be derived: (metric, reason).
    pub missing: BTreeMap<Dimension, Vec<(String, String)>>,
}

/// A full scored run.
#[derive(Debug, Clone)]
pub struct ScoredModels {
    pub evaluations: Vec<ModelEvaluation>,
    pub deviations: BTreeMap<String, BTreeMap<Dimension, DeviationVector>>,
    pub results: Vec<IrisResult>,
    /// The overall scale actually used (configured or calibrated).
    pub s_tot: Option<f64>,
}

/// Collects per-metric values and the reasons for the ones that are not
/// derivable from the inputs.
struct MetricSink {
    values: Vec<(String, f64)>,
    missing: Vec<(String, String)>,
}

impl MetricSink {
    fn new() -> Self {
        Self {
            values: Vec::new(),
            missing: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, outcome: Result<f64>) {
        match outcome {
            Ok(value) => self.values.push((name.to_string(), value)),
            Err(reason) => self.missing.push((name.to_string(), reason.to_string())),
        }
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.missing.push((name.to_string(), reason.to_string()));
    }
}

// ---------------------------------------------------------------------------
// Granular metric assembly
// ---------------------------------------------------------------------------

/// Computes every granular metric derivable for one model.
pub fn compute_granular_metrics(
    model_id: &str,
    inputs: &PipelineInputs,
    hp: &HyperParams,
    taxonomy: &Taxonomy,
    region: RegionSelection,
) -> Result<ModelEvaluation> {
    let gen: Vec<&GenerationRecord> = inputs
        .gen_records
        .iter()
        .filter(|r| r.model_id == model_id)
        .collect();
    let und: Vec<&UnderstandingRecord> = inputs
        .und_records
        .iter()
        .filter(|r| r.model_id == model_id)
        .collect();
    let tallies: Vec<&TournamentTally> = inputs
        .tallies
        .iter()
        .filter(|t| t.model_id == model_id)
        .collect();

    let mut computed = BTreeMap::new();
    let mut missing = BTreeMap::new();
    let mut complete = BTreeMap::new();

    let sinks = [
        (Dimension::IfsGen, ifs_gen_metrics(&gen)),
        (Dimension::RfsGen, rfs_gen_metrics(&gen, inputs, hp, region)),
        (Dimension::BisGen, bis_gen_metrics(&gen)),
        (Dimension::IfsUnd, ifs_und_metrics(&und, hp)),
        (
            Dimension::RfsUnd,
            rfs_und_metrics(&und, &tallies, inputs, hp, region),
        ),
        (Dimension::BisUnd, bis_und_metrics(&und)?),
    ];

    for (dimension, sink) in sinks {
        if sink.missing.is_empty() && !sink.values.is_empty() {
            complete.insert(
                dimension,
                GranularMetricVector::new(dimension, sink.values.clone(), taxonomy)?,
            );
        }
        computed.insert(dimension, sink.values);
        missing.insert(dimension, sink.missing);
    }

    Ok(ModelEvaluation {
        model_id: model_id.to_string(),
        complete,
        computed,
        missing,
    })
}

fn neutral_occupations(records: &[&GenerationRecord]) -> Vec<Occupation> {
    let set: BTreeSet<&Occupation> = records
        .iter()
        .filter(|r| r.prompt_kind == PromptKind::Neutral)
        .map(|r| &r.occupation)
        .collect();
    set.into_iter().cloned().collect()
}

fn selector_metric_name(prefix: &str, selector: &GroupSelector) -> String {
    // IFS naming embeds the lattice level; the joint cell is "joint_all".
    match selector.level() {
        1 => format!("{prefix}_single_{}", selector.name_suffix()),
        2 => format!("{prefix}_dual_{}", selector.name_suffix()),
        _ => format!("{prefix}_triple_joint_all"),
    }
}

fn ifs_gen_metrics(gen: &[&GenerationRecord]) -> MetricSink {
    let mut sink = MetricSink::new();
    let neutral: Vec<GenerationRecord> = gen
        .iter()
        .filter(|r| r.prompt_kind == PromptKind::Neutral)
        .map(|r| (*r).clone())
        .collect();
    let occupations = neutral_occupations(gen);

    for selector in GroupSelector::all_levels() {
        let name = if selector.level() == 3 {
            "RD_joint_all".to_string()
        } else {
            format!("RD_{}", selector.name_suffix())
        };
        if occupations.is_empty() {
            sink.skip(&name, "no neutral generation records");
            continue;
        }
        let value = (|| {
            let mut per_occupation = Vec::with_capacity(occupations.len());
            for occupation in &occupations {
                let dist = empirical_distribution(&neutral, occupation, selector)?;
                per_occupation.push(representation_disparity(dist.values())?);
            }
            Ok(mean(&per_occupation).expect("occupations non-empty"))
        })();
        sink.push(&name, value);
    }
    sink
}

/// The single-axis distribution of a model's neutral generations for one
/// occupation, as a labelled vector in canonical category order.
fn model_axis_distribution(
    records: &[GenerationRecord],
    occupation: &Occupation,
    axis: Axis,
) -> Result<ProbabilityVector> {
    empirical_distribution(records, occupation, GroupSelector::single(axis))
}

fn gt_axis_vector(gt: &GroundTruthTable, occupation: &Occupation, axis: Axis) -> Option<ProbabilityVector> {
    let pairs = gt.axis_distribution(occupation, axis)?;
    let (labels, values): (Vec<String>, Vec<f64>) = pairs.into_iter().unzip();
    ProbabilityVector::new(labels, values).ok()
}

/// Granular RFS-Gen entry names with their (region, axis) sources.
fn rfs_gen_axes() -> [(&'static str, Region, Axis); 5] {
    [
        ("JSD_US_gender", Region::Us, Axis::Gender),
        ("JSD_US_age", Region::Us, Axis::Age),
        ("JSD_US_skin", Region::Us, Axis::Skin),
        ("JSD_EU_gender", Region::Eu, Axis::Gender),
        ("JSD_EU_age", Region::Eu, Axis::Age),
    ]
}

fn rfs_gen_metrics(
    gen: &[&GenerationRecord],
    inputs: &PipelineInputs,
    hp: &HyperParams,
    region: RegionSelection,
) -> MetricSink {
    let mut sink = MetricSink::new();
    let neutral: Vec<GenerationRecord> = gen
        .iter()
        .filter(|r| r.prompt_kind == PromptKind::Neutral)
        .map(|r| (*r).clone())
        .collect();
    let occupations = neutral_occupations(gen);

    for (name, gt_region, axis) in rfs_gen_axes() {
        if !region.includes(gt_region) {
            sink.skip(name, &format!("region {gt_region} not selected"));
            continue;
        }
        let Some(gt) = inputs.ground_truth(gt_region) else {
            sink.skip(name, &format!("no {gt_region} ground truth supplied"));
            continue;
        };
        if occupations.is_empty() {
            sink.skip(name, "no neutral generation records");
            continue;
        }
        let value = (|| {
            let mut divergences = Vec::new();
            for occupation in &occupations {
                let Some(real) = gt_axis_vector(gt, occupation, axis) else {
                    continue; // occupation absent from this region's table
                };
                let model_dist = model_axis_distribution(&neutral, occupation, axis)?;
                divergences.push(js_divergence(&model_dist, &real, hp.jsd)?);
            }
            mean(&divergences).ok_or_else(|| IrisError::EmptyGroup {
                context: format!("no occupations shared with the {gt_region} ground truth"),
            })
        })();
        sink.push(name, value);
    }
    sink
}

fn bis_gen_metrics(gen: &[&GenerationRecord]) -> MetricSink {
    let mut sink = MetricSink::new();
    let owned: Vec<GenerationRecord> = gen.iter().map(|r| (*r).clone()).collect();

    let dgsr = (|| {
        let stereo = generation_success_rate(&owned, PromptKind::Stereotypical)?;
        let counter = generation_success_rate(&owned, PromptKind::CounterStereotypical)?;
        Ok(delta_gsr(stereo, counter))
    })();
    sink.push("Penalty_ΔGSR", dgsr);

    for kind in QualityKind::ALL {
        let collect = |prompt: PromptKind| -> Vec<f64> {
            owned
                .iter()
                .filter(|r| r.prompt_kind == prompt)
                .filter_map(|r| r.quality.get(kind))
                .collect()
        };
        let stereo = collect(PromptKind::Stereotypical);
        let counter = collect(PromptKind::CounterStereotypical);
        let value = degradation_penalty(&stereo, &counter).map(|(penalty, _)| penalty);
        sink.push(kind.penalty_name(), value);
    }
    sink
}

/// Understanding records outside counterfactual pairs: the accuracy /
/// prediction-rate sample.
fn plain_und<'a>(und: &[&'a UnderstandingRecord]) -> Vec<&'a UnderstandingRecord> {
    und.iter()
        .filter(|r| r.pair.is_none())
        .copied()
        .collect()
}

fn group_outcomes(
    records: &[&UnderstandingRecord],
    selector: GroupSelector,
) -> Vec<GroupOutcome> {
    let cells = derive_groups(selector);
    let mut outcomes = Vec::with_capacity(cells.len());
    for cell in cells {
        let members: Vec<&&UnderstandingRecord> = records
            .iter()
            .filter(|r| profile_to_cell(r.subject, selector) == cell)
            .collect();
        if members.is_empty() {
            continue;
        }
        let correct = members.iter().filter(|r| r.is_correct()).count();
        let mut class_counts: BTreeMap<String, usize> = BTreeMap::new();
        for member in &members {
            *class_counts
                .entry(member.predicted_mapped.class_label())
                .or_insert(0) += 1;
        }
        let n = members.len();
        outcomes.push(GroupOutcome {
            cell: cell.to_string(),
            sample_count: n,
            accuracy: correct as f64 / n as f64,
            prediction_rates: class_counts
                .into_iter()
                .map(|(class, count)| (class, count as f64 / n as f64))
                .collect(),
        });
    }
    outcomes
}

fn ifs_und_metrics(und: &[&UnderstandingRecord], hp: &HyperParams) -> MetricSink {
    let mut sink = MetricSink::new();
    let plain = plain_und(und);

    // canonical order lists the seven AD entries before the seven SPD ones
    for selector in GroupSelector::all_levels() {
        let name = selector_metric_name("AD", &selector);
        if plain.is_empty() {
            sink.skip(&name, "no understanding records");
            continue;
        }
        let outcomes = group_outcomes(&plain, selector);
        sink.push(&name, accuracy_disparity(&outcomes, hp.n_min));
    }
    for selector in GroupSelector::all_levels() {
        let name = selector_metric_name("SPD", &selector);
        if plain.is_empty() {
            sink.skip(&name, "no understanding records");
            continue;
        }
        let outcomes = group_outcomes(&plain, selector);
        sink.push(&name, statistical_parity_difference(&outcomes, hp.n_min));
    }
    sink
}

/// Granular RFS-Und JSD entry names (note the reversed suffix order and the
/// long skin spelling relative to the generation-side names).
fn rfs_und_jsd_axes() -> [(&'static str, Region, Axis); 5] {
    [
        ("JSD_gender_US", Region::Us, Axis::Gender),
        ("JSD_age_US", Region::Us, Axis::Age),
        ("JSD_skin_tone_US", Region::Us, Axis::Skin),
        ("JSD_gender_EU", Region::Eu, Axis::Gender),
        ("JSD_age_EU", Region::Eu, Axis::Age),
    ]
}

fn rfs_und_sds_cells() -> [(&'static str, Region, AttributeCategory); 10] {
    use AttributeCategory as C;
    [
        ("AbsSDS_gender_female_US", Region::Us, C::Gender(Gender::Female)),
        ("AbsSDS_gender_male_US", Region::Us, C::Gender(Gender::Male)),
        ("AbsSDS_age_young_US", Region::Us, C::Age(AgeBand::Young)),
        ("AbsSDS_age_middle-aged_US", Region::Us, C::Age(AgeBand::MiddleAged)),
        ("AbsSDS_age_older_US", Region::Us, C::Age(AgeBand::Older)),
        ("AbsSDS_gender_female_EU", Region::Eu, C::Gender(Gender::Female)),
        ("AbsSDS_gender_male_EU", Region::Eu, C::Gender(Gender::Male)),
        ("AbsSDS_age_young_EU", Region::Eu, C::Age(AgeBand::Young)),
        ("AbsSDS_age_middle-aged_EU", Region::Eu, C::Age(AgeBand::MiddleAged)),
        ("AbsSDS_age_older_EU", Region::Eu, C::Age(AgeBand::Older)),
    ]
}

/// Per-occupation profile distributions implied by a model's tournament
/// tallies, under the configured reading of the tally.
fn tournament_posteriors(
    tallies: &[&TournamentTally],
    direction: TournamentDirection,
) -> Result<Vec<(Occupation, Vec<(AttributeProfile, f64)>)>> {
    // union occupation support with zero fill, so rows share one support
    let occupations: BTreeSet<&Occupation> =
        tallies.iter().flat_map(|t| t.win_counts.keys()).collect();
    let occupations: Vec<&Occupation> = occupations.into_iter().collect();
    if occupations.is_empty() {
        return Err(IrisError::EmptyGroup {
            context: "tournament tallies carry no wins".into(),
        });
    }
    let labels: Vec<String> = occupations.iter().map(|o| o.to_string()).collect();

    let mut profiles: Vec<AttributeProfile> = Vec::new();
    let mut posteriors: Vec<(Occupation, Vec<(AttributeProfile, f64)>)> = Vec::new();

    match direction {
        TournamentDirection::BayesInvert => {
            let mut rows = Vec::new();
            for tally in tallies {
                let weights: Vec<f64> = occupations
                    .iter()
                    .map(|o| tally.win_counts.get(o).copied().unwrap_or(0) as f64)
                    .collect();
                if weights.iter().sum::<f64>() <= 0.0 {
                    log::warn!(
                        "tournament tally for profile {} has no wins; skipped",
                        tally.profile
                    );
                    continue;
                }
                profiles.push(tally.profile);
                rows.push((
                    tally.profile.to_string(),
                    ProbabilityVector::from_weights(labels.clone(), weights)?,
                ));
            }
            if rows.is_empty() {
                return Err(IrisError::EmptyGroup {
                    context: "no tournament profile produced wins".into(),
                });
            }
            for (column, posterior) in bayes_invert(&rows, None)? {
                let occupation = occupations
                    .iter()
                    .find(|o| o.as_str() == column)
                    .expect("column from this support");
                let dist = profiles
                    .iter()
                    .map(|p| {
                        (
                            *p,
                            posterior.get(&p.to_string()).expect("profile label"),
                        )
                    })
                    .collect();
                posteriors.push(((*occupation).clone(), dist));
            }
        }
        TournamentDirection::ColumnNormalize => {
            for occupation in &occupations {
                let mut dist = Vec::new();
                let mut total = 0.0;
                for tally in tallies {
                    let w = tally.win_counts.get(*occupation).copied().unwrap_or(0) as f64;
                    dist.push((tally.profile, w));
                    total += w;
                }
                if total <= 0.0 {
                    log::warn!("occupation '{occupation}' received no wins; excluded");
                    continue;
                }
                for (_, w) in dist.iter_mut() {
                    *w /= total;
                }
                posteriors.push(((*occupation).clone(), dist));
            }
        }
    }
    Ok(posteriors)
}

/// Marginalizes a profile distribution onto one axis, in canonical
/// category order.
fn marginalize_axis(dist: &[(AttributeProfile, f64)], axis: Axis) -> ProbabilityVector {
    let selector = GroupSelector::single(axis);
    let cells = derive_groups(selector);
    let mut values = vec![0.0; cells.len()];
    for (profile, mass) in dist {
        let cell = profile_to_cell(*profile, selector);
        let idx = cells.iter().position(|c| *c == cell).expect("in lattice");
        values[idx] += mass;
    }
    ProbabilityVector::new(cells.iter().map(|c| c.to_string()).collect(), values)
        .expect("marginal of a distribution")
}

fn rfs_und_metrics(
    und: &[&UnderstandingRecord],
    tallies: &[&TournamentTally],
    inputs: &PipelineInputs,
    hp: &HyperParams,
    region: RegionSelection,
) -> MetricSink {
    let mut sink = MetricSink::new();

    // Static knowledge probing: tournament posteriors vs ground truth.
    let posteriors = if tallies.is_empty() {
        None
    } else {
        match tournament_posteriors(tallies, hp.tournament_direction) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("tournament aggregation failed: {e}");
                None
            }
        }
    };

    for (name, gt_region, axis) in rfs_und_jsd_axes() {
        if !region.includes(gt_region) {
            sink.skip(name, &format!("region {gt_region} not selected"));
            continue;
        }
        let Some(gt) = inputs.ground_truth(gt_region) else {
            sink.skip(name, &format!("no {gt_region} ground truth supplied"));
            continue;
        };
        let Some(posteriors) = &posteriors else {
            sink.skip(name, "no tournament tallies");
            continue;
        };
        let value = (|| {
            let mut divergences = Vec::new();
            for (occupation, dist) in posteriors {
                let Some(real) = gt_axis_vector(gt, occupation, axis) else {
                    continue;
                };
                let model_dist = marginalize_axis(dist, axis);
                divergences.push(js_divergence(&model_dist, &real, hp.jsd)?);
            }
            mean(&divergences).ok_or_else(|| IrisError::EmptyGroup {
                context: format!("no occupations shared with the {gt_region} ground truth"),
            })
        })();
        sink.push(name, value);
    }

    // Dynamic decision tendency: drift of prevalence across prediction errors.
    let plain = plain_und(und);
    for (name, gt_region, category) in rfs_und_sds_cells() {
        if !region.includes(gt_region) {
            sink.skip(name, &format!("region {gt_region} not selected"));
            continue;
        }
        let Some(gt) = inputs.ground_truth(gt_region) else {
            sink.skip(name, &format!("no {gt_region} ground truth supplied"));
            continue;
        };
        if plain.is_empty() {
            sink.skip(name, "no understanding records");
            continue;
        }
        // Error cases with a mapped wrong prediction and both occupations
        // covered by this region's table; unmappable answers carry no
        // prevalence and stay out.
        let errors: Vec<(Occupation, Occupation)> = plain
            .iter()
            .filter(|r| !r.is_correct())
            .filter_map(|r| match &r.predicted_mapped {
                crate::ingest::records::MappedAnswer::Mapped(predicted) => {
                    Some((r.true_occupation.clone(), predicted.clone()))
                }
                crate::ingest::records::MappedAnswer::Unmappable => None,
            })
            .filter(|(t, p)| {
                gt.prevalence(category, t).is_some() && gt.prevalence(category, p).is_some()
            })
            .collect();
        let value = stereotype_drift(&errors, |occupation| gt.prevalence(category, occupation))
            .map(f64::abs);
        sink.push(name, value);
    }
    sink
}

fn bis_und_metrics(und: &[&UnderstandingRecord]) -> Result<MetricSink> {
    let mut sink = MetricSink::new();
    let owned: Vec<UnderstandingRecord> = und
        .iter()
        .filter(|r| r.pair.is_some())
        .map(|r| (*r).clone())
        .collect();
    let pairs = build_counterfactual_pairs(&owned)?;

    // canonical order lists the seven consistency entries before the seven
    // hallucination-rate ones
    let bucket_of = |selector: GroupSelector| -> Vec<_> {
        pairs
            .iter()
            .filter(|p| p.varied_axes == selector)
            .cloned()
            .collect()
    };
    for selector in GroupSelector::all_levels() {
        let name = format!("ac_diff_{}", selector.name_suffix());
        let bucket = bucket_of(selector);
        if bucket.is_empty() {
            sink.skip(&name, &format!("no counterfactual pairs vary exactly ({selector})"));
            continue;
        }
        sink.push(&name, answer_consistency_difference(&bucket));
    }
    for selector in GroupSelector::all_levels() {
        let name = format!("dhr_inconsistency_{}", selector.name_suffix());
        let bucket = bucket_of(selector);
        if bucket.is_empty() {
            sink.skip(&name, &format!("no counterfactual pairs vary exactly ({selector})"));
            continue;
        }
        sink.push(&name, dhr_inconsistency(&bucket));
    }
    Ok(sink)
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Scores evaluated models: deviation vectors, dimension scores, personality
/// codes, and — for models with all six dimensions — the overall score.
pub fn score_models(
    evaluations: Vec<ModelEvaluation>,
    hp: &HyperParams,
    taxonomy: &Taxonomy,
) -> Result<ScoredModels> {
    let mut deviations: BTreeMap<String, BTreeMap<Dimension, DeviationVector>> = BTreeMap::new();
    let mut magnitudes: BTreeMap<String, BTreeMap<Dimension, f64>> = BTreeMap::new();

    for evaluation in &evaluations {
        let mut per_dim = BTreeMap::new();
        let mut mags = BTreeMap::new();
        for (dimension, vector) in &evaluation.complete {
            let dev = normalize(vector, taxonomy, &hp.normalization)?;
            mags.insert(*dimension, dimensional_magnitude(&dev));
            per_dim.insert(*dimension, dev);
        }
        deviations.insert(evaluation.model_id.clone(), per_dim);
        magnitudes.insert(evaluation.model_id.clone(), mags);
    }

    // Overall scale: fixed by config, or calibrated on the full-coverage
    // cohort's median total deviation.
    let full_coverage_d_tots: Vec<f64> = evaluations
        .iter()
        .filter(|e| e.complete.len() == Dimension::ALL.len())
        .map(|e| {
            deviations[&e.model_id]
                .values()
                .flat_map(|dev| dev.values())
                .map(|u| u * u)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let s_tot = if full_coverage_d_tots.is_empty() {
        None
    } else {
        Some(hp.effective_s_tot(median(&full_coverage_d_tots)))
    };

    let mut results = Vec::with_capacity(evaluations.len());
    for evaluation in &evaluations {
        let model_devs = &deviations[&evaluation.model_id];
        let mut dimension_scores = BTreeMap::new();
        for (dimension, magnitude) in &magnitudes[&evaluation.model_id] {
            let params = hp.dimension(*dimension);
            dimension_scores.insert(
                *dimension,
                DimensionScore {
                    dimension: *dimension,
                    magnitude: *magnitude,
                    score: decay_score(*magnitude, params.k, params.s),
                },
            );
        }

        let (d_tot, iris_score) = if model_devs.len() == Dimension::ALL.len() {
            let sources: BTreeMap<Dimension, DeviationSource> = model_devs
                .iter()
                .map(|(d, dev)| (*d, DeviationSource::Entries(dev.values())))
                .collect();
            let (d, s) = crate::scoring::overall_iris(
                &sources,
                hp.k_tot,
                s_tot.expect("full-coverage model implies calibrated scale"),
            )?;
            (Some(d), Some(s))
        } else {
            (None, None)
        };

        let score_of = |d: Dimension| dimension_scores.get(&d).map(|s: &DimensionScore| s.score);
        let mbti_of = |ifs: Option<f64>, rfs: Option<f64>, bis: Option<f64>| match (ifs, rfs, bis)
        {
            (Some(i), Some(r), Some(b)) => Some(diagnose(i, r, b, hp.tau)),
            _ => None,
        };
        let mbti_gen = mbti_of(
            score_of(Dimension::IfsGen),
            score_of(Dimension::RfsGen),
            score_of(Dimension::BisGen),
        );
        let mbti_und = mbti_of(
            score_of(Dimension::IfsUnd),
            score_of(Dimension::RfsUnd),
            score_of(Dimension::BisUnd),
        );

        results.push(IrisResult {
            model_id: evaluation.model_id.clone(),
            dimension_scores,
            d_tot,
            iris_score,
            mbti_gen,
            mbti_und,
        });
    }

    Ok(ScoredModels {
        evaluations,
        deviations,
        results,
        s_tot,
    })
}

/// Full pipeline: granular metrics for every model in the inputs, then
/// scoring.
pub fn evaluate(
    inputs: &PipelineInputs,
    hp: &HyperParams,
    taxonomy: &Taxonomy,
    region: RegionSelection,
) -> Result<ScoredModels> {
    let mut evaluations = Vec::new();
    for model_id in inputs.model_ids() {
        evaluations.push(compute_granular_metrics(
            &model_id, inputs, hp, taxonomy, region,
        )?);
    }
    score_models(evaluations, hp, taxonomy)
}
