//! Tier-1 answer mapping: direct and alias matching of free-text answers
//! onto the occupation registry. Embedding-based tiers are a plug-in seam;
//! anything tier 1 cannot resolve comes back as unmappable.

use crate::demographics::{normalize_occupation_token, Occupation, OccupationRegistry};
use crate::error::{IrisError, Result};
use crate::ingest::records::MappedAnswer;
use std::path::Path;

pub const BUNDLED_ALIASES: &str = include_str!("../../data/aliases_default.csv");

/// Ordered alias -> canonical occupation pairs. File order is preserved so
/// the first match wins.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    entries: Vec<(String, Occupation)>,
}

impl AliasTable {
    /// The minimal alias list shipped with the crate.
    pub fn bundled(registry: &OccupationRegistry) -> Self {
        Self::from_reader(BUNDLED_ALIASES.as_bytes(), registry, "<bundled>")
            .expect("bundled aliases are valid")
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path, registry: &OccupationRegistry) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| IrisError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, registry, &path.display().to_string())
    }

    fn from_reader(
        reader: impl std::io::Read,
        registry: &OccupationRegistry,
        source_name: &str,
    ) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut entries = Vec::new();
        for result in csv_reader.records() {
            let record = result.map_err(|e| {
                IrisError::parse(source_name, e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
            })?;
            let alias = record.get(0).unwrap_or_default();
            let canonical = record.get(1).unwrap_or_default();
            if alias.is_empty() || canonical.is_empty() {
                return Err(IrisError::parse(
                    source_name,
                    0,
                    format!("alias rows need two columns, got '{alias}','{canonical}'"),
                ));
            }
            let occupation = registry.resolve(canonical)?;
            entries.push((normalize_answer(alias), occupation));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, normalized: &str) -> Option<&Occupation> {
        self.entries
            .iter()
            .find(|(alias, _)| alias == normalized)
            .map(|(_, occupation)| occupation)
    }
}

/// Lowercases and strips punctuation, joining the remaining words with
/// underscores so multi-word answers compare against registry names.
pub fn normalize_answer(raw: &str) -> String {
    let cleaned: String = raw
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() || c == '_' || c == '-' {
                c
            } else {
                ' '
            }
        })
        .collect();
    normalize_occupation_token(&cleaned)
}

/// Tier-1 mapping: exact canonical match first, then aliases in table
/// order. No match is a value, not an error.
pub fn map_answer_tier1(
    raw_answer: &str,
    aliases: &AliasTable,
    registry: &OccupationRegistry,
) -> MappedAnswer {
    let normalized = normalize_answer(raw_answer);
    if normalized.is_empty() {
        return MappedAnswer::Unmappable;
    }
    if let Ok(occupation) = registry.resolve(&normalized) {
        return MappedAnswer::Mapped(occupation);
    }
    match aliases.lookup(&normalized) {
        Some(occupation) => MappedAnswer::Mapped(occupation.clone()),
        None => MappedAnswer::Unmappable,
    }
}
