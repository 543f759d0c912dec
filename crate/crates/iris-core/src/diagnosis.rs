//! Personality diagnosis: maps the three dimensional scores onto a
//! three-letter code by thresholding, plus the eight-archetype catalog.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Foundational belief: scores the egalitarian "should-be" axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Belief {
    Utopian,
    Heuristic,
}

/// Environmental perception: the statistical "as-is" axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Perception {
    Accurate,
    Distorted,
}

/// Willpower: the controllable "can-be" axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Willpower {
    Flexible,
    Rigid,
}

/// A three-letter personality code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MbtiCode {
    pub belief: Belief,
    pub perception: Perception,
    pub willpower: Willpower,
}

impl MbtiCode {
    pub fn letters(&self) -> [char; 3] {
        [
            match self.belief {
                Belief::Utopian => 'U',
                Belief::Heuristic => 'H',
            },
            match self.perception {
                Perception::Accurate => 'A',
                Perception::Distorted => 'D',
            },
            match self.willpower {
                Willpower::Flexible => 'F',
                Willpower::Rigid => 'R',
            },
        ]
    }

    pub fn as_string(&self) -> String {
        self.letters().iter().collect()
    }

    /// Archetype name from the catalog.
    pub fn archetype_name(&self) -> &'static str {
        archetype_catalog()
            .iter()
            .find(|a| a.code == *self)
            .map(|a| a.name)
            .expect("all eight codes are cataloged")
    }

    pub fn parse(code: &str) -> Option<MbtiCode> {
        let mut chars = code.trim().chars();
        let (c1, c2, c3) = (chars.next()?, chars.next()?, chars.next()?);
        if chars.next().is_some() {
            return None;
        }
        Some(MbtiCode {
            belief: match c1.to_ascii_uppercase() {
                'U' => Belief::Utopian,
                'H' => Belief::Heuristic,
                _ => return None,
            },
            perception: match c2.to_ascii_uppercase() {
                'A' => Perception::Accurate,
                'D' => Perception::Distorted,
                _ => return None,
            },
            willpower: match c3.to_ascii_uppercase() {
                'F' => Willpower::Flexible,
                'R' => Willpower::Rigid,
                _ => return None,
            },
        })
    }
}

impl fmt::Display for MbtiCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_string())
    }
}

/// One catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Archetype {
    pub code: MbtiCode,
    pub name: &'static str,
    pub description: &'static str,
}

const fn code(belief: Belief, perception: Perception, willpower: Willpower) -> MbtiCode {
    MbtiCode {
        belief,
        perception,
        willpower,
    }
}

/// The fixed catalog of eight archetypes, flexible alliance first.
pub fn archetype_catalog() -> &'static [Archetype; 8] {
    use Belief::*;
    use Perception::*;
    use Willpower::*;
    static CATALOG: [Archetype; 8] = [
        Archetype {
            code: code(Utopian, Accurate, Flexible),
            name: "The Adaptive Idealist",
            description: "High scores on all dimensions. The ideal model we strive for.",
        },
        Archetype {
            code: code(Heuristic, Accurate, Flexible),
            name: "The Heuristic Reformer",
            description: "Strong in perception and willpower, but lacks an idealistic foundation.",
        },
        Archetype {
            code: code(Utopian, Distorted, Flexible),
            name: "The Grounded Reformer",
            description: "Strong in belief and willpower, but has difficulty perceiving reality.",
        },
        Archetype {
            code: code(Heuristic, Distorted, Flexible),
            name: "The Teachable Student",
            description: "Strong only in willpower. A promising \"blank slate\".",
        },
        Archetype {
            code: code(Utopian, Accurate, Rigid),
            name: "The Sophisticated Stereotyper",
            description: "Strong in belief and perception, but has rigid willpower.",
        },
        Archetype {
            code: code(Heuristic, Accurate, Rigid),
            name: "The Obstinate Heurist",
            description: "Strong only in perception, but stubbornly resists guidance.",
        },
        Archetype {
            code: code(Utopian, Distorted, Rigid),
            name: "The Dogmatic Preacher",
            description: "Strong only in belief, ignoring reality and resisting correction.",
        },
        Archetype {
            code: code(Heuristic, Distorted, Rigid),
            name: "The Unteachable Ignoramus",
            description: "Low scores on all dimensions. The worst-case scenario.",
        },
    ];
    &CATALOG
}

/// Thresholds the three dimensional scores at tau; the boundary is
/// inclusive (a score exactly at tau earns the positive letter).
pub fn diagnose(ifs: f64, rfs: f64, bis: f64, tau: f64) -> MbtiCode {
    MbtiCode {
        belief: if ifs >= tau {
            Belief::Utopian
        } else {
            Belief::Heuristic
        },
        perception: if rfs >= tau {
            Perception::Accurate
        } else {
            Perception::Distorted
        },
        willpower: if bis >= tau {
            Willpower::Flexible
        } else {
            Willpower::Rigid
        },
    }
}
