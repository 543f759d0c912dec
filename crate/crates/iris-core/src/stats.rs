//! Benchmark-validation statistics: internal consistency, rank and linear
//! correlation, Welch's unequal-variance t-test, and the two ranking
//! sensitivity analyses (leave-one-out and weight perturbation).

use crate::config::HyperParams;
use crate::error::{IrisError, Result};
use crate::scalar::{mean, sample_variance, Scalar};
use crate::scoring::{decay_score, normalize, DeviationVector, GranularMetricVector};
use crate::special::student_t_two_sided_p;
use crate::taxonomy::{Dimension, Taxonomy};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Rectangular matrix of named score columns per model row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix<F: Scalar = f64> {
    row_ids: Vec<String>,
    columns: Vec<String>,
    /// Row-major values.
    values: Vec<Vec<F>>,
}

impl<F: Scalar> ScoreMatrix<F> {
    pub fn new(row_ids: Vec<String>, columns: Vec<String>, values: Vec<Vec<F>>) -> Result<Self> {
        if values.len() != row_ids.len() {
            return Err(IrisError::InvalidValue {
                field: "score matrix",
                value: format!("{} rows", values.len()),
                reason: format!("expected {} row ids", row_ids.len()),
            });
        }
        for (row_id, row) in row_ids.iter().zip(&values) {
            if row.len() != columns.len() {
                return Err(IrisError::InvalidValue {
                    field: "score matrix",
                    value: format!("row '{row_id}' has {} cells", row.len()),
                    reason: format!("expected {} columns", columns.len()),
                });
            }
        }
        Ok(Self {
            row_ids,
            columns,
            values,
        })
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.values
    }

    pub fn column(&self, index: usize) -> Vec<F> {
        self.values.iter().map(|row| row[index]).collect()
    }
}

// ---------------------------------------------------------------------------
// Cronbach's alpha
// ---------------------------------------------------------------------------

/// alpha = k/(k-1) * (1 - sum of item variances / variance of row sums),
/// sample variances throughout.
pub fn cronbach_alpha<F: Scalar>(matrix: &ScoreMatrix<F>) -> Result<F> {
    let k = matrix.columns.len();
    if k < 2 {
        return Err(IrisError::Insufficient {
            what: "items (columns)",
            needed: 2,
            got: k,
        });
    }
    if matrix.row_ids.len() < 2 {
        return Err(IrisError::Insufficient {
            what: "observations (rows)",
            needed: 2,
            got: matrix.row_ids.len(),
        });
    }
    let item_variance_sum: F = (0..k)
        .map(|j| sample_variance(&matrix.column(j)).expect("two or more rows"))
        .sum();
    let row_sums: Vec<F> = matrix
        .values
        .iter()
        .map(|row| row.iter().copied().sum())
        .collect();
    let total_variance = sample_variance(&row_sums).expect("two or more rows");
    if total_variance <= F::zero() {
        return Err(IrisError::Degenerate(
            "total score variance is zero; alpha undefined".into(),
        ));
    }
    let kf = F::from_usize(k).expect("k fits");
    Ok(kf / (kf - F::one()) * (F::one() - item_variance_sum / total_variance))
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

/// Standard sample Pearson correlation.
pub fn pearson_r<F: Scalar>(x: &[F], y: &[F]) -> Result<F> {
    if x.len() != y.len() {
        return Err(IrisError::InvalidValue {
            field: "correlation input",
            value: format!("{} vs {}", x.len(), y.len()),
            reason: "length mismatch".into(),
        });
    }
    if x.len() < 2 {
        return Err(IrisError::Insufficient {
            what: "observations",
            needed: 2,
            got: x.len(),
        });
    }
    let mx = mean(x).expect("non-empty");
    let my = mean(y).expect("non-empty");
    let mut sxx = F::zero();
    let mut syy = F::zero();
    let mut sxy = F::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx <= F::zero() || syy <= F::zero() {
        return Err(IrisError::Degenerate(
            "constant vector; correlation undefined".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Ranks with ties sharing their average rank (1-based).
pub fn average_ranks<F: Scalar>(values: &[F]) -> Vec<F> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![F::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold equal values; average their 1-based ranks
        let avg = F::from_usize(i + j + 2).expect("fits") / F::from_f64_lossy(2.0);
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with the t-approximation p-value
/// (n-2 degrees of freedom). Perfect correlations report p = 0.
pub fn spearman_rho<F: Scalar>(x: &[F], y: &[F]) -> Result<(F, F)> {
    if x.len() != y.len() {
        return Err(IrisError::InvalidValue {
            field: "correlation input",
            value: format!("{} vs {}", x.len(), y.len()),
            reason: "length mismatch".into(),
        });
    }
    if x.len() < 3 {
        return Err(IrisError::Insufficient {
            what: "observations",
            needed: 3,
            got: x.len(),
        });
    }
    let rho = pearson_r(&average_ranks(x), &average_ranks(y))?;
    let n = x.len() as f64;
    let rho_f = rho.to_f64().expect("finite");
    let p = if rho_f.abs() >= 1.0 - 1e-12 {
        0.0
    } else {
        let t = rho_f * ((n - 2.0) / (1.0 - rho_f * rho_f)).sqrt();
        student_t_two_sided_p(t, n - 2.0)
    };
    Ok((rho, F::from_f64_lossy(p)))
}

/// Pairwise Pearson correlations with an exact unit diagonal.
pub fn dimension_correlation_matrix<F: Scalar>(matrix: &ScoreMatrix<F>) -> Result<Vec<Vec<F>>> {
    let k = matrix.columns.len();
    let mut out = vec![vec![F::zero(); k]; k];
    for i in 0..k {
        out[i][i] = F::one();
        for j in (i + 1)..k {
            let r = pearson_r(&matrix.column(i), &matrix.column(j))?;
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Welch's t-test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest<F: Scalar = f64> {
    pub t: F,
    pub df: F,
    pub p_two_sided: F,
}

/// Unequal-variance t-test with the Welch–Satterthwaite degrees of freedom
/// and a two-sided p-value.
pub fn welch_t_test<F: Scalar>(group_a: &[F], group_b: &[F]) -> Result<WelchTest<F>> {
    for (name, group) in [("group a", group_a), ("group b", group_b)] {
        if group.len() < 2 {
            return Err(IrisError::Insufficient {
                what: if name == "group a" {
                    "group a observations"
                } else {
                    "group b observations"
                },
                needed: 2,
                got: group.len(),
            });
        }
    }
    let (ma, mb) = (mean(group_a).unwrap(), mean(group_b).unwrap());
    let (va, vb) = (
        sample_variance(group_a).unwrap(),
        sample_variance(group_b).unwrap(),
    );
    let (na, nb) = (
        F::from_usize(group_a.len()).unwrap(),
        F::from_usize(group_b.len()).unwrap(),
    );
    let sa = va / na;
    let sb = vb / nb;
    let pooled = sa + sb;
    if pooled <= F::zero() {
        // both groups constant: equal means give t = 0, p = 1
        let zero = F::zero();
        if ma == mb {
            return Ok(WelchTest {
                t: zero,
                df: na + nb - F::from_f64_lossy(2.0),
                p_two_sided: F::one(),
            });
        }
        return Err(IrisError::Degenerate(
            "zero variance in both groups with unequal means".into(),
        ));
    }
    let t = (ma - mb) / pooled.sqrt();
    let df = pooled * pooled
        / (sa * sa / (na - F::one()) + sb * sb / (nb - F::one()));
    let p = student_t_two_sided_p(t.to_f64().expect("finite"), df.to_f64().expect("finite"));
    Ok(WelchTest {
        t,
        df,
        p_two_sided: F::from_f64_lossy(p),
    })
}

// ---------------------------------------------------------------------------
// Ranking sensitivity
// ---------------------------------------------------------------------------

/// One sensitivity row: ranking correlation after one modification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub label: String,
    pub spearman_rho: f64,
    pub p_value: f64,
}

/// Outcome of a sensitivity analysis against the baseline ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SensitivityReport {
    /// (model, total deviation, overall score) under the unmodified config.
    pub baseline: Vec<(String, f64, f64)>,
    pub rows: Vec<SensitivityRow>,
}

/// What a perturbation rescales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerturbTarget {
    Dimension(Dimension),
    Metric(String),
}

/// Multiplicative reweighting of deviation entries by (1 + fraction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub target: PerturbTarget,
    pub fraction: f64,
}

impl Perturbation {
    pub fn label(&self) -> String {
        let target = match &self.target {
            PerturbTarget::Dimension(d) => d.to_string(),
            PerturbTarget::Metric(m) => m.clone(),
        };
        format!("{target} {:+.1}%", self.fraction * 100.0)
    }
}

/// Per-model deviation coordinates in canonical 60-entry order.
struct Cohort {
    models: Vec<String>,
    names: Vec<String>,
    dimensions: Vec<Dimension>,
    /// Row per model, column per metric.
    deviations: Vec<Vec<f64>>,
}

fn build_cohort(
    granular: &BTreeMap<String, Vec<GranularMetricVector>>,
    hp: &HyperParams,
    taxonomy: &Taxonomy,
) -> Result<Cohort> {
    if granular.len() < 3 {
        return Err(IrisError::Insufficient {
            what: "models with full granular data",
            needed: 3,
            got: granular.len(),
        });
    }
    let names: Vec<String> = taxonomy.metrics().iter().map(|m| m.name.clone()).collect();
    let dimensions: Vec<Dimension> = taxonomy.metrics().iter().map(|m| m.dimension).collect();

    let mut models = Vec::with_capacity(granular.len());
    let mut deviations = Vec::with_capacity(granular.len());
    for (model, vectors) in granular {
        let mut by_dim: BTreeMap<Dimension, DeviationVector> = BTreeMap::new();
        for vector in vectors {
            by_dim.insert(
                vector.dimension,
                normalize(vector, taxonomy, &hp.normalization)?,
            );
        }
        let mut row = Vec::with_capacity(names.len());
        for dimension in Dimension::ALL {
            let dev = by_dim
                .get(&dimension)
                .ok_or_else(|| IrisError::MissingDimension(dimension.to_string()))?;
            row.extend(dev.values());
        }
        models.push(model.clone());
        deviations.push(row);
    }
    Ok(Cohort {
        models,
        names,
        dimensions,
        deviations,
    })
}

impl Cohort {
    /// Overall scale: configured, or calibrated on this cohort's unmodified
    /// median deviation. Rankings are invariant to the choice.
    fn s_tot(&self, hp: &HyperParams) -> f64 {
        hp.effective_s_tot(median(
            &self
                .deviations
                .iter()
                .map(|row| row.iter().map(|u| u * u).sum::<f64>().sqrt())
                .collect::<Vec<_>>(),
        ))
    }
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn overall_scores(
    cohort: &Cohort,
    hp: &HyperParams,
    s_tot: f64,
    skip: Option<usize>,
    scale: impl Fn(usize) -> f64,
) -> Vec<f64> {
    cohort
        .deviations
        .iter()
        .map(|row| {
            let ss: f64 = row
                .iter()
                .enumerate()
                .filter(|(idx, _)| Some(*idx) != skip)
                .map(|(idx, u)| {
                    let w = scale(idx);
                    (u * w) * (u * w)
                })
                .sum();
            decay_score(ss.sqrt(), hp.k_tot, s_tot)
        })
        .collect()
}

/// Removes each granular metric in turn, recomputes the overall scores, and
/// reports the rank correlation against the baseline ranking.
pub fn loo_sensitivity(
    granular: &BTreeMap<String, Vec<GranularMetricVector>>,
    hp: &HyperParams,
    taxonomy: &Taxonomy,
) -> Result<SensitivityReport> {
    let cohort = build_cohort(granular, hp, taxonomy)?;
    let s_tot = cohort.s_tot(hp);
    let baseline = overall_scores(&cohort, hp, s_tot, None, |_| 1.0);

    let mut rows = Vec::with_capacity(cohort.names.len());
    for (idx, name) in cohort.names.iter().enumerate() {
        let loo = overall_scores(&cohort, hp, s_tot, Some(idx), |_| 1.0);
        let (rho, p) = spearman_rho(&baseline, &loo)?;
        rows.push(SensitivityRow {
            label: name.clone(),
            spearman_rho: rho,
            p_value: p,
        });
    }
    Ok(SensitivityReport {
        baseline: baseline_rows(&cohort, &baseline),
        rows,
    })
}

/// Rescales selected deviation entries by (1 + fraction) before the L2
/// aggregation and reports the rank correlation against the baseline.
pub fn weight_perturbation(
    granular: &BTreeMap<String, Vec<GranularMetricVector>>,
    hp: &HyperParams,
    taxonomy: &Taxonomy,
    perturbations: &[Perturbation],
) -> Result<SensitivityReport> {
    let cohort = build_cohort(granular, hp, taxonomy)?;
    let s_tot = cohort.s_tot(hp);
    let baseline = overall_scores(&cohort, hp, s_tot, None, |_| 1.0);

    let mut rows = Vec::with_capacity(perturbations.len());
    for perturbation in perturbations {
        let factor = 1.0 + perturbation.fraction;
        let scores = overall_scores(&cohort, hp, s_tot, None, |idx| {
            let selected = match &perturbation.target {
                PerturbTarget::Dimension(d) => cohort.dimensions[idx] == *d,
                PerturbTarget::Metric(name) => {
                    let canonical = taxonomy.find(name).map(|m| m.name.as_str());
                    Some(cohort.names[idx].as_str()) == canonical
                }
            };
            if selected {
                factor
            } else {
                1.0
            }
        });
        let (rho, p) = spearman_rho(&baseline, &scores)?;
        rows.push(SensitivityRow {
            label: perturbation.label(),
            spearman_rho: rho,
            p_value: p,
        });
    }
    Ok(SensitivityReport {
        baseline: baseline_rows(&cohort, &baseline),
        rows,
    })
}

fn baseline_rows(cohort: &Cohort, scores: &[f64]) -> Vec<(String, f64, f64)> {
    cohort
        .models
        .iter()
        .zip(&cohort.deviations)
        .zip(scores)
        .map(|((model, row), score)| {
            let d_tot = row.iter().map(|u| u * u).sum::<f64>().sqrt();
            (model.clone(), d_tot, *score)
        })
        .collect()
}

/// The default ±10% per-dimension perturbation sweep.
pub fn default_perturbations() -> Vec<Perturbation> {
    let mut out = Vec::with_capacity(12);
    for dimension in Dimension::ALL {
        for fraction in [0.10, -0.10] {
            out.push(Perturbation {
                target: PerturbTarget::Dimension(dimension),
                fraction,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> ScoreMatrix {
        ScoreMatrix::new(
            (0..rows.len()).map(|i| format!("m{i}")).collect(),
            (0..rows[0].len()).map(|j| format!("c{j}")).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn alpha_is_one_for_identical_columns() {
        let m = matrix(&[&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0], &[5.0, 5.0, 5.0]]);
        let alpha = cronbach_alpha(&m).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_is_zero_for_orthogonal_equal_variance_columns() {
        // exact construction: pairwise covariance zero, equal variances
        let m = matrix(&[&[1.0, 1.0], &[1.0, -1.0], &[-1.0, 1.0], &[-1.0, -1.0]]);
        let alpha = cronbach_alpha(&m).unwrap();
        assert!(alpha.abs() < 1e-12);
    }

    #[test]
    fn alpha_invariant_under_column_shift() {
        let base = matrix(&[&[1.0, 2.0], &[2.0, 3.0], &[4.0, 4.5]]);
        let shifted = matrix(&[&[1.0, 102.0], &[2.0, 103.0], &[4.0, 104.5]]);
        let a = cronbach_alpha(&base).unwrap();
        let b = cronbach_alpha(&shifted).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn alpha_degenerate_on_constant_rows() {
        let m = matrix(&[&[1.0, -1.0], &[2.0, -2.0], &[3.0, -3.0]]);
        assert!(matches!(
            cronbach_alpha(&m),
            Err(IrisError::Degenerate(_))
        ));
    }

    #[test]
    fn pearson_affine_is_one() {
        let x = [1.0f64, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y_neg: Vec<f64> = x.iter().map(|v| -0.5 * v).collect();
        assert!((pearson_r(&x, &y_neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson_r(&x, &[1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let identity = [1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let (rho, p) = spearman_rho(&identity, &identity).unwrap();
        assert_eq!(rho, 1.0);
        assert_eq!(p, 0.0);

        let reversed: Vec<f64> = identity.iter().rev().copied().collect();
        let (rho, _) = spearman_rho(&identity, &reversed).unwrap();
        assert!((rho + 1.0).abs() < 1e-12);

        // one adjacent swap over n=7: the recurring published value
        let swapped = [2.0f64, 1.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let (rho, p) = spearman_rho(&identity, &swapped).unwrap();
        assert!((rho - 0.9643).abs() < 1e-4);
        assert!((p - 0.0005).abs() < 1e-4, "published p column, got {p}");
    }

    #[test]
    fn spearman_averages_tied_ranks() {
        let ranks = average_ranks(&[10.0f64, 20.0, 20.0, 30.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
        let x = [1.0f64, 2.0, 2.0, 3.0];
        let y = [1.0f64, 2.0, 3.0, 4.0];
        let (rho, _) = spearman_rho(&x, &y).unwrap();
        assert!(rho > 0.9 && rho < 1.0);
    }

    #[test]
    fn welch_identical_groups() {
        let a = [1.0f64, 2.0, 3.0];
        let test = welch_t_test(&a, &a).unwrap();
        assert_eq!(test.t, 0.0);
        assert!((test.p_two_sided - 1.0).abs() < 1e-12);
    }

    #[test]
    fn welch_equal_means_unequal_variances() {
        let a = [4.0f64, 6.0]; // mean 5, var 2
        let b = [1.0f64, 5.0, 9.0]; // mean 5, var 16
        let test = welch_t_test(&a, &b).unwrap();
        assert_eq!(test.t, 0.0);
        assert!((test.p_two_sided - 1.0).abs() < 1e-12);
    }

    #[test]
    fn welch_is_antisymmetric() {
        let a = [95.94f64, 40.13, 64.43, 60.69, 60.01];
        let b = [67.97f64, 52.49];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert!((ab.t + ba.t).abs() < 1e-12);
        assert!((ab.p_two_sided - ba.p_two_sided).abs() < 1e-12);
        assert!((ab.df - ba.df).abs() < 1e-12);
        assert!(welch_t_test(&a, &[1.0]).is_err());
    }

    #[test]
    fn correlation_matrix_is_symmetric_with_unit_diagonal() {
        let m = matrix(&[
            &[1.0, 4.0, 2.0],
            &[2.0, 3.0, 5.0],
            &[3.0, 1.0, 4.0],
            &[4.0, 2.0, 9.0],
        ]);
        let corr = dimension_correlation_matrix(&m).unwrap();
        for i in 0..3 {
            assert_eq!(corr[i][i], 1.0);
            for j in 0..3 {
                assert!((corr[i][j] - corr[j][i]).abs() < 1e-15);
                assert!(corr[i][j] >= -1.0 - 1e-12 && corr[i][j] <= 1.0 + 1e-12);
            }
        }
    }
}
