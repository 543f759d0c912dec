//! Data ingestion: record parsing, validation, tier-1 answer mapping, and
//! the normalized in-memory datasets the metric kernels consume.

pub mod alias;
pub mod ground_truth;
pub mod parse;
pub mod records;

pub use alias::{map_answer_tier1, normalize_answer, AliasTable};
pub use ground_truth::{GroundTruthTable, OccupationDemographics, Region};
pub use parse::{parse_generation_records, parse_tournament_tallies, parse_understanding_records};
pub use records::{
    ExpectedAttributes, GenerationRecord, MappedAnswer, PairInfo, PromptKind, QualityKind,
    QualityScores, TournamentTally, UnderstandingRecord, VariantKind,
};

use crate::demographics::{derive_groups, profile_to_cell, GroupSelector, Occupation};
use crate::error::{IrisError, Result};
use crate::metrics::ProbabilityVector;

/// Observed cell frequencies for one occupation, normalized over the
/// selector's full lattice (zero-count cells included), cells in
/// `derive_groups` order.
pub fn empirical_distribution(
    records: &[GenerationRecord],
    occupation: &Occupation,
    selector: GroupSelector,
) -> Result<ProbabilityVector> {
    let cells = derive_groups(selector);
    let mut counts = vec![0u64; cells.len()];
    let mut total = 0u64;
    for record in records.iter().filter(|r| r.occupation == *occupation) {
        let cell = profile_to_cell(record.observed, selector);
        let idx = cells
            .iter()
            .position(|c| *c == cell)
            .expect("projection lands in the lattice");
        counts[idx] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(IrisError::EmptyGroup {
            context: format!("no records for occupation '{occupation}'"),
        });
    }
    ProbabilityVector::from_weights(
        cells.iter().map(|c| c.to_string()).collect(),
        counts.into_iter().map(|c| c as f64).collect(),
    )
}
