//! Demographic attribute taxonomy: categorical axes, continuous-to-category
//! mappings, the intersectional group lattice, and the occupation registry.
//!
//! Category order is fixed (male < female, young < middle_aged < older,
//! light < middle < dark) so every vector derived from the lattice is
//! order-stable.

use crate::error::{IrisError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// Bundled registry contents (one occupation per line, 52 lines).
pub const BUNDLED_OCCUPATIONS: &str = include_str!("../data/occupations.txt");

// ---------------------------------------------------------------------------
// Attribute categories
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            other => Err(IrisError::InvalidValue {
                field: "gender",
                value: other.to_string(),
                reason: "expected 'male' or 'female'".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeBand {
    Young,
    MiddleAged,
    Older,
}

impl AgeBand {
    pub const ALL: [AgeBand; 3] = [AgeBand::Young, AgeBand::MiddleAged, AgeBand::Older];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeBand::Young => "young",
            AgeBand::MiddleAged => "middle_aged",
            AgeBand::Older => "older",
        }
    }

    /// Accepts the canonical tokens plus the aliases that appear in source
    /// tables ("middle-aged", "middle", "old").
    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "young" => Ok(AgeBand::Young),
            "middle_aged" | "middle" => Ok(AgeBand::MiddleAged),
            "older" | "old" => Ok(AgeBand::Older),
            other => Err(IrisError::InvalidValue {
                field: "age band",
                value: other.to_string(),
                reason: "expected 'young', 'middle_aged', or 'older'".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkinBand {
    Light,
    Middle,
    Dark,
}

impl SkinBand {
    pub const ALL: [SkinBand; 3] = [SkinBand::Light, SkinBand::Middle, SkinBand::Dark];

    pub fn as_str(self) -> &'static str {
        match self {
            SkinBand::Light => "light",
            SkinBand::Middle => "middle",
            SkinBand::Dark => "dark",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "light" => Ok(SkinBand::Light),
            "middle" => Ok(SkinBand::Middle),
            "dark" => Ok(SkinBand::Dark),
            other => Err(IrisError::InvalidValue {
                field: "skin band",
                value: other.to_string(),
                reason: "expected 'light', 'middle', or 'dark'".into(),
            }),
        }
    }
}

/// Age in years to band: 0-39 young, 40-64 middle_aged, 65+ older.
pub fn age_to_band(age_years: u32) -> AgeBand {
    match age_years {
        0..=39 => AgeBand::Young,
        40..=64 => AgeBand::MiddleAged,
        _ => AgeBand::Older,
    }
}

/// Monk Skin Tone value (1-10) to band: 1-3 light, 4-7 middle, 8-10 dark.
pub fn mst_to_band(mst: u8) -> Result<SkinBand> {
    match mst {
        1..=3 => Ok(SkinBand::Light),
        4..=7 => Ok(SkinBand::Middle),
        8..=10 => Ok(SkinBand::Dark),
        other => Err(IrisError::InvalidValue {
            field: "mst",
            value: other.to_string(),
            reason: "MST scale runs 1..=10".into(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Profiles and the group lattice
// ---------------------------------------------------------------------------

/// One person's full attribute triple. 18 distinct profiles exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub gender: Gender,
    pub age: AgeBand,
    pub skin: SkinBand,
}

impl AttributeProfile {
    pub fn new(gender: Gender, age: AgeBand, skin: SkinBand) -> Self {
        Self { gender, age, skin }
    }

    /// All 18 profiles in canonical order (gender outermost, skin innermost).
    pub fn all() -> impl Iterator<Item = AttributeProfile> {
        Gender::ALL.into_iter().flat_map(|g| {
            AgeBand::ALL.into_iter().flat_map(move |a| {
                SkinBand::ALL
                    .into_iter()
                    .map(move |s| AttributeProfile::new(g, a, s))
            })
        })
    }
}

impl fmt::Display for AttributeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}_{}_{}",
            self.gender.as_str(),
            self.age.as_str(),
            self.skin.as_str()
        )
    }
}

/// One demographic axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Gender,
    Age,
    Skin,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Gender, Axis::Age, Axis::Skin];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Gender => "gender",
            Axis::Age => "age",
            Axis::Skin => "skin",
        }
    }

    fn category_count(self) -> usize {
        match self {
            Axis::Gender => 2,
            Axis::Age | Axis::Skin => 3,
        }
    }
}

/// Non-empty subset of axes selecting a marginal or joint lattice level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupSelector {
    gender: bool,
    age: bool,
    skin: bool,
}

impl GroupSelector {
    pub fn new(axes: &[Axis]) -> Result<Self> {
        if axes.is_empty() {
            return Err(IrisError::InvalidValue {
                field: "selector",
                value: "[]".into(),
                reason: "at least one axis required".into(),
            });
        }
        let mut s = GroupSelector {
            gender: false,
            age: false,
            skin: false,
        };
        for axis in axes {
            match axis {
                Axis::Gender => s.gender = true,
                Axis::Age => s.age = true,
                Axis::Skin => s.skin = true,
            }
        }
        Ok(s)
    }

    pub fn single(axis: Axis) -> Self {
        Self::new(&[axis]).expect("one axis")
    }

    pub fn dual(a: Axis, b: Axis) -> Result<Self> {
        if a == b {
            return Err(IrisError::InvalidValue {
                field: "selector",
                value: format!("{}x{}", a.as_str(), b.as_str()),
                reason: "dual selector needs two distinct axes".into(),
            });
        }
        Self::new(&[a, b])
    }

    pub fn triple() -> Self {
        GroupSelector {
            gender: true,
            age: true,
            skin: true,
        }
    }

    /// Axes in canonical order (gender before age before skin).
    pub fn axes(&self) -> Vec<Axis> {
        let mut v = Vec::with_capacity(3);
        if self.gender {
            v.push(Axis::Gender);
        }
        if self.age {
            v.push(Axis::Age);
        }
        if self.skin {
            v.push(Axis::Skin);
        }
        v
    }

    pub fn contains(&self, axis: Axis) -> bool {
        match axis {
            Axis::Gender => self.gender,
            Axis::Age => self.age,
            Axis::Skin => self.skin,
        }
    }

    /// 1 (single), 2 (dual) or 3 (triple).
    pub fn level(&self) -> usize {
        self.axes().len()
    }

    pub fn cell_count(&self) -> usize {
        self.axes().iter().map(|a| a.category_count()).product()
    }

    /// The seven selectors in taxonomy order: three singles, three duals,
    /// the triple.
    pub fn all_levels() -> Vec<GroupSelector> {
        vec![
            GroupSelector::single(Axis::Gender),
            GroupSelector::single(Axis::Age),
            GroupSelector::single(Axis::Skin),
            GroupSelector::dual(Axis::Gender, Axis::Age).unwrap(),
            GroupSelector::dual(Axis::Gender, Axis::Skin).unwrap(),
            GroupSelector::dual(Axis::Age, Axis::Skin).unwrap(),
            GroupSelector::triple(),
        ]
    }

    /// Suffix used in granular metric names: "gender", "gender_age",
    /// "gender_age_skin".
    pub fn name_suffix(&self) -> String {
        self.axes()
            .iter()
            .map(|a| a.as_str())
            .collect::<Vec<_>>()
            .join("_")
    }
}

impl fmt::Display for GroupSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name_suffix())
    }
}

/// One cell of a selector's lattice: the projection of a profile onto the
/// selected axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupCell {
    pub gender: Option<Gender>,
    pub age: Option<AgeBand>,
    pub skin: Option<SkinBand>,
}

impl fmt::Display for GroupCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<&str> = Vec::with_capacity(3);
        if let Some(g) = self.gender {
            parts.push(g.as_str());
        }
        if let Some(a) = self.age {
            parts.push(a.as_str());
        }
        if let Some(s) = self.skin {
            parts.push(s.as_str());
        }
        f.write_str(&parts.join("_"))
    }
}

/// All cells of the selected lattice in fixed order: gender varies slowest,
/// then age, then skin; category order as declared on the enums.
pub fn derive_groups(selector: GroupSelector) -> Vec<GroupCell> {
    let genders: Vec<Option<Gender>> = if selector.contains(Axis::Gender) {
        Gender::ALL.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let ages: Vec<Option<AgeBand>> = if selector.contains(Axis::Age) {
        AgeBand::ALL.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let skins: Vec<Option<SkinBand>> = if selector.contains(Axis::Skin) {
        SkinBand::ALL.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };

    let mut cells = Vec::with_capacity(selector.cell_count());
    for g in &genders {
        for a in &ages {
            for s in &skins {
                cells.push(GroupCell {
                    gender: *g,
                    age: *a,
                    skin: *s,
                });
            }
        }
    }
    cells
}

/// Projects a profile onto the selector's axes.
pub fn profile_to_cell(profile: AttributeProfile, selector: GroupSelector) -> GroupCell {
    GroupCell {
        gender: selector.contains(Axis::Gender).then_some(profile.gender),
        age: selector.contains(Axis::Age).then_some(profile.age),
        skin: selector.contains(Axis::Skin).then_some(profile.skin),
    }
}

// ---------------------------------------------------------------------------
// Occupation registry
// ---------------------------------------------------------------------------

/// A validated occupation name from the registry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Occupation(Arc<str>);

impl Occupation {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The fixed list of occupations against which every record is validated.
#[derive(Debug, Clone)]
pub struct OccupationRegistry {
    names: Vec<Arc<str>>,
}

impl OccupationRegistry {
    /// The 52-entry registry shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_lines(BUNDLED_OCCUPATIONS).expect("bundled registry is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| IrisError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_lines(&text)
    }

    fn from_lines(text: &str) -> Result<Self> {
        let mut names: Vec<Arc<str>> = Vec::new();
        for line in text.lines() {
            let name = normalize_occupation_token(line);
            if name.is_empty() {
                continue;
            }
            if names.iter().any(|n| **n == name) {
                return Err(IrisError::InvalidValue {
                    field: "occupation registry",
                    value: name,
                    reason: "duplicate entry".into(),
                });
            }
            names.push(name.into());
        }
        if names.is_empty() {
            return Err(IrisError::Config("occupation registry is empty".into()));
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Occupation> + '_ {
        self.names.iter().map(|n| Occupation(n.clone()))
    }

    /// Looks up a name after normalization; on failure the error names the
    /// closest registry entry.
    pub fn resolve(&self, raw: &str) -> Result<Occupation> {
        let token = normalize_occupation_token(raw);
        if let Some(found) = self.names.iter().find(|n| ***n == token) {
            return Ok(Occupation(found.clone()));
        }
        let closest = self
            .names
            .iter()
            .min_by_key(|n| edit_distance(&token, n))
            .expect("registry non-empty");
        Err(IrisError::UnknownOccupation {
            given: raw.to_string(),
            closest: closest.to_string(),
        })
    }

    pub fn contains(&self, occupation: &Occupation) -> bool {
        self.names.iter().any(|n| **n == *occupation.as_str())
    }
}

/// Lowercase, trim, join interior whitespace/hyphens with underscores.
pub fn normalize_occupation_token(raw: &str) -> String {
    raw.trim()
        .to_ascii_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

/// Plain Levenshtein distance, used only for "did you mean" suggestions.
fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn age_band_boundaries() {
        assert_eq!(age_to_band(39), AgeBand::Young);
        assert_eq!(age_to_band(40), AgeBand::MiddleAged);
        assert_eq!(age_to_band(64), AgeBand::MiddleAged);
        assert_eq!(age_to_band(65), AgeBand::Older);
        assert_eq!(age_to_band(0), AgeBand::Young);
    }

    #[test]
    fn mst_band_boundaries() {
        assert_eq!(mst_to_band(3).unwrap(), SkinBand::Light);
        assert_eq!(mst_to_band(4).unwrap(), SkinBand::Middle);
        assert_eq!(mst_to_band(7).unwrap(), SkinBand::Middle);
        assert_eq!(mst_to_band(8).unwrap(), SkinBand::Dark);
        assert_eq!(mst_to_band(10).unwrap(), SkinBand::Dark);
        assert!(mst_to_band(0).is_err());
        assert!(mst_to_band(11).is_err());
    }

    #[test]
    fn age_alias_old_is_accepted() {
        assert_eq!(AgeBand::parse("old").unwrap(), AgeBand::Older);
        assert_eq!(AgeBand::parse("middle-aged").unwrap(), AgeBand::MiddleAged);
    }

    #[test]
    fn group_counts_per_level() {
        assert_eq!(derive_groups(GroupSelector::single(Axis::Gender)).len(), 2);
        assert_eq!(derive_groups(GroupSelector::single(Axis::Age)).len(), 3);
        assert_eq!(derive_groups(GroupSelector::single(Axis::Skin)).len(), 3);
        assert_eq!(
            derive_groups(GroupSelector::dual(Axis::Gender, Axis::Age).unwrap()).len(),
            6
        );
        assert_eq!(
            derive_groups(GroupSelector::dual(Axis::Gender, Axis::Skin).unwrap()).len(),
            6
        );
        assert_eq!(
            derive_groups(GroupSelector::dual(Axis::Age, Axis::Skin).unwrap()).len(),
            9
        );
        assert_eq!(derive_groups(GroupSelector::triple()).len(), 18);
    }

    #[test]
    fn gender_cells_in_enum_order() {
        let cells = derive_groups(GroupSelector::single(Axis::Gender));
        assert_eq!(cells[0].to_string(), "male");
        assert_eq!(cells[1].to_string(), "female");
    }

    #[test]
    fn dual_cells_named_like_the_paper() {
        let cells = derive_groups(GroupSelector::dual(Axis::Gender, Axis::Age).unwrap());
        assert_eq!(cells[0].to_string(), "male_young");
        assert_eq!(cells[5].to_string(), "female_older");
    }

    #[test]
    fn projection_examples() {
        let p = AttributeProfile::new(Gender::Male, AgeBand::Young, SkinBand::Light);
        assert_eq!(
            profile_to_cell(p, GroupSelector::single(Axis::Age)).to_string(),
            "young"
        );
        let p = AttributeProfile::new(Gender::Female, AgeBand::Older, SkinBand::Dark);
        assert_eq!(
            profile_to_cell(p, GroupSelector::dual(Axis::Gender, Axis::Skin).unwrap()).to_string(),
            "female_dark"
        );
        let p = AttributeProfile::new(Gender::Male, AgeBand::MiddleAged, SkinBand::Middle);
        assert_eq!(
            profile_to_cell(p, GroupSelector::triple()).to_string(),
            "male_middle_aged_middle"
        );
    }

    #[test]
    fn every_selector_partitions_the_18_profiles() {
        for selector in GroupSelector::all_levels() {
            let cells = derive_groups(selector);
            for profile in AttributeProfile::all() {
                let cell = profile_to_cell(profile, selector);
                assert_eq!(cells.iter().filter(|c| **c == cell).count(), 1);
            }
        }
        assert_eq!(AttributeProfile::all().count(), 18);
    }

    #[test]
    fn band_mappings_are_monotone() {
        let mut last = AgeBand::Young;
        for age in 0..=120 {
            let band = age_to_band(age);
            assert!(band >= last);
            last = band;
        }
        let mut last = SkinBand::Light;
        for mst in 1..=10 {
            let band = mst_to_band(mst).unwrap();
            assert!(band >= last);
            last = band;
        }
    }

    #[test]
    fn registry_has_52_entries_and_resolves() {
        let reg = OccupationRegistry::bundled();
        assert_eq!(reg.len(), 52);
        assert_eq!(reg.resolve("Doctor").unwrap().as_str(), "doctor");
        assert_eq!(
            reg.resolve("Disk Jockey").unwrap().as_str(),
            "disk_jockey"
        );
    }

    #[test]
    fn unknown_occupation_names_closest_entry() {
        let reg = OccupationRegistry::bundled();
        let err = reg.resolve("astronot").unwrap_err();
        match err {
            IrisError::UnknownOccupation { given, closest } => {
                assert_eq!(given, "astronot");
                assert_eq!(closest, "astronaut");
            }
            other => panic!("unexpected error: {other}"),
        }
    }
}
