//! The canonical granular-metric taxonomy: six Dimension×Task sectors,
//! sixty named metrics in fixed order, and each metric's normalization rule.
//!
//! The registry ships as a versioned data file so deployments can audit it;
//! [`Taxonomy::builtin`] parses the bundled copy once.

use crate::error::{IrisError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

pub const BUNDLED_TAXONOMY: &str = include_str!("../data/metric_taxonomy_v1.csv");

/// ASCII spelling accepted wherever the canonical `Penalty_ΔGSR` is expected.
pub const DGSR_ASCII_ALIAS: &str = "Penalty_dGSR";

/// One of the six Dimension×Task sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    IfsGen,
    RfsGen,
    BisGen,
    IfsUnd,
    RfsUnd,
    BisUnd,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::IfsGen,
        Dimension::RfsGen,
        Dimension::BisGen,
        Dimension::IfsUnd,
        Dimension::RfsUnd,
        Dimension::BisUnd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::IfsGen => "IFS_Gen",
            Dimension::RfsGen => "RFS_Gen",
            Dimension::BisGen => "BIS_Gen",
            Dimension::IfsUnd => "IFS_Und",
            Dimension::RfsUnd => "RFS_Und",
            Dimension::BisUnd => "BIS_Und",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "IFS_GEN" => Ok(Dimension::IfsGen),
            "RFS_GEN" => Ok(Dimension::RfsGen),
            "BIS_GEN" => Ok(Dimension::BisGen),
            "IFS_UND" => Ok(Dimension::IfsUnd),
            "RFS_UND" => Ok(Dimension::RfsUnd),
            "BIS_UND" => Ok(Dimension::BisUnd),
            other => Err(IrisError::InvalidValue {
                field: "dimension",
                value: other.to_string(),
                reason: "expected one of IFS/RFS/BIS x Gen/Und".into(),
            }),
        }
    }

    pub fn is_generation(self) -> bool {
        matches!(
            self,
            Dimension::IfsGen | Dimension::RfsGen | Dimension::BisGen
        )
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a raw metric maps into the deviation space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormRule {
    /// u = m / max for metrics with a theoretical maximum.
    Bounded { max: f64 },
    /// u = ln(1 + m) for practically unbounded penalties.
    Log1p,
    /// u = m, for entries deliberately kept on their native scale.
    PassThrough,
}

/// One registered granular metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDef {
    pub dimension: Dimension,
    pub name: String,
    pub rule: NormRule,
}

/// The full ordered registry.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    pub version: u32,
    metrics: Vec<MetricDef>,
}

impl Taxonomy {
    /// The bundled registry (version 1, 60 metrics).
    pub fn builtin() -> &'static Taxonomy {
        static BUILTIN: OnceLock<Taxonomy> = OnceLock::new();
        BUILTIN.get_or_init(|| Taxonomy::parse(BUNDLED_TAXONOMY).expect("bundled taxonomy valid"))
    }

    pub fn parse(text: &str) -> Result<Taxonomy> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let version_line = lines
            .next()
            .ok_or_else(|| IrisError::Config("empty taxonomy file".into()))?;
        let version = version_line
            .strip_prefix("version,")
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| IrisError::Config("taxonomy must start with 'version,<n>'".into()))?;
        let header = lines.next().unwrap_or_default();
        if header.trim() != "dimension,metric,normalization" {
            return Err(IrisError::Config(format!(
                "unexpected taxonomy header '{header}'"
            )));
        }

        let mut metrics = Vec::new();
        for line in lines {
            let mut parts = line.splitn(3, ',');
            let (dim, name, rule) = match (parts.next(), parts.next(), parts.next()) {
                (Some(d), Some(n), Some(r)) => (d, n, r),
                _ => {
                    return Err(IrisError::Config(format!(
                        "malformed taxonomy line '{line}'"
                    )))
                }
            };
            let rule = match rule.trim() {
                "log1p" => NormRule::Log1p,
                "passthrough" => NormRule::PassThrough,
                bounded => {
                    let max = bounded
                        .strip_prefix("bounded:")
                        .and_then(|m| m.trim().parse::<f64>().ok())
                        .filter(|m| *m > 0.0)
                        .ok_or_else(|| {
                            IrisError::Config(format!("bad normalization rule '{bounded}'"))
                        })?;
                    NormRule::Bounded { max }
                }
            };
            let def = MetricDef {
                dimension: Dimension::parse(dim)?,
                name: name.trim().to_string(),
                rule,
            };
            if metrics
                .iter()
                .any(|m: &MetricDef| m.name == def.name && m.dimension == def.dimension)
            {
                return Err(IrisError::Config(format!(
                    "duplicate taxonomy entry '{}'",
                    def.name
                )));
            }
            metrics.push(def);
        }
        Ok(Taxonomy { version, metrics })
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    /// All metrics in canonical order.
    pub fn metrics(&self) -> &[MetricDef] {
        &self.metrics
    }

    /// The metrics of one dimension, in canonical order.
    pub fn of_dimension(&self, dimension: Dimension) -> Vec<&MetricDef> {
        self.metrics
            .iter()
            .filter(|m| m.dimension == dimension)
            .collect()
    }

    pub fn names_of(&self, dimension: Dimension) -> Vec<&str> {
        self.of_dimension(dimension)
            .iter()
            .map(|m| m.name.as_str())
            .collect()
    }

    /// Looks a metric up by name, accepting the ASCII ΔGSR alias.
    pub fn find(&self, name: &str) -> Option<&MetricDef> {
        let canonical = if name == DGSR_ASCII_ALIAS {
            "Penalty_ΔGSR"
        } else {
            name
        };
        self.metrics.iter().find(|m| m.name == canonical)
    }
}
