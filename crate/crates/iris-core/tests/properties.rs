//! Property suites over randomized inputs: metric bounds, symmetry,
//! monotonicity, the L2 nesting identity, and exhaustive Bayes-inversion
//! round trips.

use iris_core::metrics::{
    accuracy_disparity, bayes_invert, delta_gsr, dhr_inconsistency, js_divergence,
    representation_disparity, statistical_parity_difference, CounterfactualPair, GroupOutcome,
    JsdMode, PairVariant, ProbabilityVector,
};
use iris_core::scoring::{
    decay_score, dimensional_magnitude, nested_norm_check, normalize, GranularMetricVector,
    NormalizationOptions,
};
use iris_core::{
    AgeBand, AttributeProfile, Axis, Dimension, Gender, GroupSelector, SkinBand, Taxonomy,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

/// Random point on the k-simplex via normalized positive weights.
fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6..1.0f64, k).prop_map(|weights| {
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    })
}

fn prob_vec(values: Vec<f64>) -> ProbabilityVector {
    let labels = (0..values.len()).map(|i| format!("c{i}")).collect();
    ProbabilityVector::new(labels, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2500))]

    #[test]
    fn rd_stays_in_unit_interval(values in (2usize..18).prop_flat_map(simplex)) {
        let rd = representation_disparity(&values).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&rd));
    }

    #[test]
    fn rd_permutation_invariant(values in (2usize..10).prop_flat_map(simplex), seed in 0u64..1000) {
        let rd = representation_disparity(&values).unwrap();
        let mut shuffled = values.clone();
        // cheap deterministic shuffle
        let n = shuffled.len();
        for i in 0..n {
            let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 7)) % n;
            shuffled.swap(i, j);
        }
        let rd_shuffled = representation_disparity(&shuffled).unwrap();
        prop_assert!((rd - rd_shuffled).abs() < 1e-12);
    }

    #[test]
    fn uniform_vector_has_zero_rd(k in 2usize..18) {
        let uniform = vec![1.0 / k as f64; k];
        let rd = representation_disparity(&uniform).unwrap();
        prop_assert!(rd.abs() < 1e-12);
    }

    #[test]
    fn jsd_bounds_symmetry_identity(p in (2usize..9).prop_flat_map(|k| (simplex(k), simplex(k)))) {
        let (pv, qv) = p;
        let mode = JsdMode::default();
        let p = prob_vec(pv);
        let q = prob_vec(qv);
        let d_pq = js_divergence(&p, &q, mode).unwrap();
        let d_qp = js_divergence(&q, &p, mode).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d_pq));
        prop_assert!((d_pq - d_qp).abs() < 1e-12, "symmetry");
        let d_pp = js_divergence(&p, &p, mode).unwrap();
        prop_assert!(d_pp.abs() < 1e-12, "zero on identity");
    }

    #[test]
    fn ad_and_spd_stay_in_unit_interval(
        accs in prop::collection::vec(0.0..=1.0f64, 2..10),
        rates in prop::collection::vec(simplex(4), 2..10),
    ) {
        let n = accs.len().min(rates.len());
        let groups: Vec<GroupOutcome> = (0..n)
            .map(|i| GroupOutcome {
                cell: format!("g{i}"),
                sample_count: 5,
                accuracy: accs[i],
                prediction_rates: rates[i]
                    .iter()
                    .enumerate()
                    .map(|(c, r)| (format!("class{c}"), *r))
                    .collect(),
            })
            .collect();
        let ad = accuracy_disparity(&groups, 1).unwrap();
        let spd = statistical_parity_difference(&groups, 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&ad));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&spd));
    }

    #[test]
    fn delta_gsr_bounds_and_clamp(stereo in 0.0..=1.0f64, counter in 0.0..=1.0f64) {
        let d = delta_gsr(stereo, counter);
        prop_assert!((0.0..=1.0).contains(&d));
        if counter >= stereo {
            prop_assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn dhr_stays_in_unit_interval(answers in prop::collection::vec((any::<bool>(), any::<bool>()), 1..8)) {
        let base = AttributeProfile::new(Gender::Male, AgeBand::Young, SkinBand::Light);
        let other = AttributeProfile::new(Gender::Female, AgeBand::Young, SkinBand::Light);
        let pair = CounterfactualPair {
            pair_id: "p".into(),
            varied_axes: GroupSelector::single(Axis::Gender),
            variants: vec![
                PairVariant {
                    profile: base,
                    subjective: BTreeMap::new(),
                    objective: answers.iter().enumerate().map(|(i, (a, _))| (format!("q{i}"), *a)).collect(),
                },
                PairVariant {
                    profile: other,
                    subjective: BTreeMap::new(),
                    objective: answers.iter().enumerate().map(|(i, (_, b))| (format!("q{i}"), *b)).collect(),
                },
            ],
        };
        let dhr = dhr_inconsistency(&[pair]).unwrap();
        prop_assert!((0.0..=1.0).contains(&dhr));
    }

    #[test]
    fn decay_is_monotone(m1 in 0.0..10.0f64, m2 in 0.0..10.0f64, k in 0.1..6.0f64, s in 1.0..1e5f64) {
        let s1 = decay_score(m1, k, s);
        let s2 = decay_score(m2, k, s);
        prop_assert!(s1 > 0.0 && s2 > 0.0);
        if m1 < m2 {
            prop_assert!(s1 > s2);
        }
        prop_assert!(decay_score(0.0, k, s) == s);
    }

    #[test]
    fn normalization_is_monotone_per_entry(
        base in prop::collection::vec(0.0..1.0f64, 5),
        bump in 0.001..0.5f64,
        idx in 0usize..5,
    ) {
        // BIS_Gen mixes the bounded success-rate drop with log penalties
        let taxonomy = Taxonomy::builtin();
        let names = taxonomy.names_of(Dimension::BisGen);
        let make = |values: &[f64]| {
            let entries = names.iter().zip(values).map(|(n, v)| (n.to_string(), *v)).collect();
            GranularMetricVector::new(Dimension::BisGen, entries, taxonomy).unwrap()
        };
        let mut raised = base.clone();
        raised[idx] = (raised[idx] + bump).min(if idx == 0 { 1.0 } else { f64::MAX });
        let options = NormalizationOptions::default();
        let u_base = normalize(&make(&base), taxonomy, &options).unwrap();
        let u_raised = normalize(&make(&raised), taxonomy, &options).unwrap();
        for ((_, a), (_, b)) in u_base.entries().iter().zip(u_raised.entries()) {
            prop_assert!(b >= a, "raising a raw metric never lowers its deviation");
        }
        prop_assert!(dimensional_magnitude(&u_raised) >= dimensional_magnitude(&u_base));
    }

    #[test]
    fn l2_nesting_identity(chunks in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 1..6), 1..6)) {
        let sub_norms: Vec<f64> = chunks
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let flat: Vec<f64> = chunks.concat();
        prop_assert!(nested_norm_check(&sub_norms, &flat));
    }

    #[test]
    fn scaling_deviations_preserves_ranking(
        base in prop::collection::vec(prop::collection::vec(0.01..1.0f64, 6), 3..8),
        factor in 0.1..5.0f64,
    ) {
        // decay of a scaled L2 is monotone in the unscaled L2
        let k = 1.3;
        let s = 100.0;
        let scores: Vec<f64> = base
            .iter()
            .map(|row| decay_score(row.iter().map(|v| v * v).sum::<f64>().sqrt(), k, s))
            .collect();
        let scaled_scores: Vec<f64> = base
            .iter()
            .map(|row| {
                let d = row.iter().map(|v| (v * factor) * (v * factor)).sum::<f64>().sqrt();
                decay_score(d, k, s)
            })
            .collect();
        let rank = |xs: &[f64]| {
            let mut order: Vec<usize> = (0..xs.len()).collect();
            order.sort_by(|&a, &b| xs[b].partial_cmp(&xs[a]).unwrap());
            order
        };
        prop_assert_eq!(rank(&scores), rank(&scaled_scores));
    }
}

/// Exhaustive 3x3 Bayes round trips on a coarse probability grid: inverting
/// and re-marginalizing reproduces every likelihood table entry.
#[test]
fn bayes_invert_round_trip_exhaustive_3x3() {
    let grid = [0.2, 0.5, 0.3];
    let mut checked = 0usize;
    // rows are distributions from a small family; enumerate all assignments
    let family = [
        [0.2, 0.5, 0.3],
        [0.7, 0.2, 0.1],
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [0.05, 0.05, 0.9],
    ];
    for r0 in family {
        for r1 in family {
            for r2 in family {
                let rows = vec![
                    ("p0".to_string(), prob_vec(r0.to_vec())),
                    ("p1".to_string(), prob_vec(r1.to_vec())),
                    ("p2".to_string(), prob_vec(r2.to_vec())),
                ];
                let prior = prob_vec(grid.to_vec());
                let prior = ProbabilityVector::new(
                    vec!["p0".into(), "p1".into(), "p2".into()],
                    prior.values().to_vec(),
                )
                .unwrap();
                let inverted = bayes_invert(&rows, Some(&prior)).unwrap();
                // forward marginal P(col) then reconstruct the likelihoods
                for (j, column) in ["c0", "c1", "c2"].iter().enumerate() {
                    let p_col: f64 = (0..3)
                        .map(|i| rows[i].1.values()[j] * grid[i])
                        .sum();
                    let posterior = &inverted.iter().find(|(c, _)| c == column).unwrap().1;
                    for (i, row) in rows.iter().enumerate() {
                        let reconstructed = posterior.get(&format!("p{i}")).unwrap() * p_col / grid[i];
                        assert!(
                            (reconstructed - row.1.values()[j]).abs() < 1e-10,
                            "row {i} column {j}"
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    assert_eq!(checked, family.len().pow(3) * 9);
}
