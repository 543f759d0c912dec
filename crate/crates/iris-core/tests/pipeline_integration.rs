//! End-to-end pipeline checks on the bundled synthetic fixture: every
//! model earns all six dimension scores, an overall score, and both
//! personality codes, and archives replay exactly.

use iris_core::pipeline::{evaluate, PipelineInputs, RegionSelection};
use iris_core::report::{load_run, save_run, verify_replay, RunArchive};
use iris_core::stats::{cronbach_alpha, dimension_correlation_matrix, ScoreMatrix};
use iris_core::{
    parse_generation_records, parse_tournament_tallies, parse_understanding_records, AliasTable,
    Dimension, GroundTruthTable, HyperParams, OccupationRegistry, Region, Taxonomy,
};
use std::path::{Path, PathBuf};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

fn load_inputs() -> PipelineInputs {
    let registry = OccupationRegistry::bundled();
    let aliases = AliasTable::bundled(&registry);
    let dir = fixture_dir();
    PipelineInputs {
        gen_records: parse_generation_records(&dir.join("gen_records.csv"), &registry).unwrap(),
        und_records: parse_understanding_records(
            &dir.join("und_records.csv"),
            &registry,
            &aliases,
        )
        .unwrap(),
        tallies: parse_tournament_tallies(&dir.join("tournament.csv"), &registry).unwrap(),
        gt_us: Some(GroundTruthTable::bundled(Region::Us)),
        gt_eu: Some(GroundTruthTable::bundled(Region::Eu)),
    }
}

#[test]
fn fixture_produces_full_scores_for_every_model() {
    let inputs = load_inputs();
    let hp = HyperParams::default();
    let scored = evaluate(&inputs, &hp, Taxonomy::builtin(), RegionSelection::Both).unwrap();

    assert_eq!(scored.results.len(), 3);
    for evaluation in &scored.evaluations {
        for dimension in Dimension::ALL {
            let missing = &evaluation.missing[&dimension];
            assert!(
                missing.is_empty(),
                "{} {dimension} missing: {missing:?}",
                evaluation.model_id
            );
        }
        assert_eq!(evaluation.complete.len(), 6);
    }
    for result in &scored.results {
        assert_eq!(result.dimension_scores.len(), 6);
        assert!(result.d_tot.unwrap() > 0.0);
        assert!(result.iris_score.unwrap() > 0.0);
        assert!(result.mbti_gen.is_some());
        assert!(result.mbti_und.is_some());
        for score in result.dimension_scores.values() {
            assert!(score.score > 0.0);
            assert!(score.magnitude >= 0.0);
        }
    }

    // the strongly biased model must not outrank the mild one overall
    let score_of = |id: &str| {
        scored
            .results
            .iter()
            .find(|r| r.model_id == id)
            .unwrap()
            .iris_score
            .unwrap()
    };
    assert!(
        score_of("beta") > score_of("gamma"),
        "beta (mild bias) should outrank gamma (heavy bias): {} vs {}",
        score_of("beta"),
        score_of("gamma")
    );
}

#[test]
fn generation_only_inputs_score_generation_dimensions_only() {
    let mut inputs = load_inputs();
    inputs.und_records.clear();
    inputs.tallies.clear();
    let hp = HyperParams::default();
    let scored = evaluate(&inputs, &hp, Taxonomy::builtin(), RegionSelection::Both).unwrap();
    for result in &scored.results {
        assert_eq!(result.dimension_scores.len(), 3);
        assert!(result.dimension_scores.contains_key(&Dimension::IfsGen));
        assert!(result.d_tot.is_none());
        assert!(result.iris_score.is_none());
        assert!(result.mbti_gen.is_some());
        assert!(result.mbti_und.is_none());
    }
}

#[test]
fn region_us_only_leaves_eu_entries_missing() {
    let mut inputs = load_inputs();
    inputs.gt_eu = None;
    let hp = HyperParams::default();
    let scored = evaluate(&inputs, &hp, Taxonomy::builtin(), RegionSelection::Us).unwrap();
    for evaluation in &scored.evaluations {
        let missing = &evaluation.missing[&Dimension::RfsGen];
        assert_eq!(missing.len(), 2, "both EU entries skipped: {missing:?}");
        assert!(evaluation.computed[&Dimension::RfsGen].len() == 3);
        assert!(!evaluation.complete.contains_key(&Dimension::RfsGen));
    }
    for result in &scored.results {
        assert!(result.iris_score.is_none());
    }
}

#[test]
fn archive_round_trips_and_replays_exactly() {
    let inputs = load_inputs();
    let hp = HyperParams::default();
    let taxonomy = Taxonomy::builtin();
    let scored = evaluate(&inputs, &hp, taxonomy, RegionSelection::Both).unwrap();
    let archive = RunArchive::from_scored("it-run", "2026-01-01T00:00:00Z", &hp, taxonomy, &scored);

    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    save_run(&archive, &run_dir, false).unwrap();

    // refuse a second save without the overwrite flag
    assert!(save_run(&archive, &run_dir, false).is_err());
    save_run(&archive, &run_dir, true).unwrap();

    let reloaded = load_run(&run_dir).unwrap();
    assert_eq!(reloaded.run_id, archive.run_id);
    assert_eq!(reloaded.models.len(), archive.models.len());
    for (stored, fresh) in archive.models.iter().zip(&reloaded.models) {
        assert_eq!(stored.result, fresh.result);
        assert_eq!(stored.granular, fresh.granular);
        assert_eq!(stored.deviations, fresh.deviations);
    }
    assert!(verify_replay(&reloaded).unwrap(), "replay determinism");
}

#[test]
fn validation_statistics_run_on_fixture_scores() {
    let inputs = load_inputs();
    let hp = HyperParams::default();
    let scored = evaluate(&inputs, &hp, Taxonomy::builtin(), RegionSelection::Both).unwrap();

    // per-dimension granular matrices across models feed alpha
    let taxonomy = Taxonomy::builtin();
    let names: Vec<String> = taxonomy
        .names_of(Dimension::IfsGen)
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<f64>> = scored
        .evaluations
        .iter()
        .map(|e| e.complete[&Dimension::IfsGen].values())
        .collect();
    let ids: Vec<String> = scored
        .evaluations
        .iter()
        .map(|e| e.model_id.clone())
        .collect();
    let matrix = ScoreMatrix::new(ids.clone(), names, rows).unwrap();
    let alpha = cronbach_alpha(&matrix).unwrap();
    assert!(alpha.is_finite());

    // six dimension-score columns give a 6x6 symmetric unit-diagonal matrix
    let columns: Vec<String> = Dimension::ALL.iter().map(|d| d.to_string()).collect();
    let score_rows: Vec<Vec<f64>> = scored
        .results
        .iter()
        .map(|r| {
            Dimension::ALL
                .iter()
                .map(|d| r.score_of(*d).unwrap())
                .collect()
        })
        .collect();
    let matrix = ScoreMatrix::new(ids, columns, score_rows).unwrap();
    let corr = dimension_correlation_matrix(&matrix).unwrap();
    for i in 0..6 {
        assert_eq!(corr[i][i], 1.0);
        for j in 0..6 {
            assert!((corr[i][j] - corr[j][i]).abs() < 1e-12);
        }
    }
}
