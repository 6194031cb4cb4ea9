//! Phoneme inventory: planning locations and selection vectors.
//!
//! Vowels are fixed points of the planning plane. Consonants carry a location
//! rule (fixed, front/back split, or a small vowel-dependent lean) and a
//! selection vector naming the articulators they drive during a superimposed
//! segment. Consonant pairs get their own cluster selection vectors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::{angle_difference, PolarPoint, PARAM_COUNT};

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("unknown symbol '{symbol}'")]
    UnknownSymbol { symbol: String },
    #[error("selection index {index} outside 1..=7")]
    BadSelectionIndex { index: usize },
    #[error("failed to read inventory {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid inventory JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid point for '{symbol}': {reason}")]
    BadPoint { symbol: String, reason: String },
}

/// Binary 7-vector assigning each articulator to the consonantal (true) or
/// vocalic (false) branch of a superimposed segment. Notation follows the
/// index set of ones, 1-based: {1,2,6} selects Jaw, Body, LipH.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionVector {
    flags: [bool; PARAM_COUNT],
}

impl SelectionVector {
    pub fn from_flags(flags: [bool; PARAM_COUNT]) -> Self {
        Self { flags }
    }

    /// Builds a selection from 1-based articulator indices.
    pub fn from_indices(indices: &[usize]) -> Result<Self, InventoryError> {
        let mut flags = [false; PARAM_COUNT];
        for &i in indices {
            if i == 0 || i > PARAM_COUNT {
                return Err(InventoryError::BadSelectionIndex { index: i });
            }
            flags[i - 1] = true;
        }
        Ok(Self { flags })
    }

    /// The neutral vector: all articulators selected (a stationary vowel or
    /// pure vocalic arc drives everything).
    pub fn neutral() -> Self {
        Self {
            flags: [true; PARAM_COUNT],
        }
    }

    pub fn none() -> Self {
        Self {
            flags: [false; PARAM_COUNT],
        }
    }

    pub fn is_neutral(&self) -> bool {
        self.flags.iter().all(|&f| f)
    }

    pub fn selected(&self, index: usize) -> bool {
        self.flags[index]
    }

    pub fn complement(&self) -> Self {
        let mut flags = self.flags;
        for f in &mut flags {
            *f = !*f;
        }
        Self { flags }
    }

    /// Componentwise exclusivity: self + other = all ones, self . other = 0.
    pub fn is_exclusive_with(&self, other: &Self) -> bool {
        self.flags
            .iter()
            .zip(other.flags.iter())
            .all(|(a, b)| a ^ b)
    }

    /// 1-based indices of the selected articulators.
    pub fn indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i + 1))
            .collect()
    }
}

impl Serialize for SelectionVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SelectionVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(d)?;
        SelectionVector::from_indices(&indices).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for SelectionVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let idx: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", idx.join(","))
    }
}

/// How a consonant's planning location depends on the syllable vowel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LocationRule {
    /// A fixed point of the crown.
    Fixed { rho: f64, theta: f64 },
    /// Velar/palatal split on the following vowel: front vowels have
    /// theta in (pi, 2*pi).
    FrontBack {
        front_rho: f64,
        front_theta: f64,
        back_rho: f64,
        back_theta: f64,
    },
    /// Small lean of the angle toward the vowel:
    /// theta = center + clamp(coefficient * wrap(theta_v - center), +-max_lean).
    VowelLean {
        rho: f64,
        center_theta: f64,
        coefficient: f64,
        max_lean: f64,
    },
}

impl LocationRule {
    /// Resolves the location against the syllable vowel's angle. Inside a
    /// cluster the front/back split always takes the front (palatal) target.
    pub fn resolve(&self, vowel_theta: f64, in_cluster: bool) -> PolarPoint {
        match *self {
            LocationRule::Fixed { rho, theta } => PolarPoint::new(rho, theta),
            LocationRule::FrontBack {
                front_rho,
                front_theta,
                back_rho,
                back_theta,
            } => {
                let front = in_cluster || (vowel_theta > PI && vowel_theta < 2.0 * PI);
                if front {
                    PolarPoint::new(front_rho, front_theta)
                } else {
                    PolarPoint::new(back_rho, back_theta)
                }
            }
            LocationRule::VowelLean {
                rho,
                center_theta,
                coefficient,
                max_lean,
            } => {
                let lean = (coefficient * angle_difference(vowel_theta, center_theta))
                    .clamp(-max_lean, max_lean);
                PolarPoint::new(rho, center_theta + lean)
            }
        }
        .expect("inventory locations have non-negative radius")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsonantDef {
    pub location: LocationRule,
    pub selection: SelectionVector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VowelDef {
    pub rho: f64,
    pub theta: f64,
}

/// The phoneme inventory. Vowel and consonant orders are fixed so every
/// derived artifact (locus tables, exports) is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhonemeInventory {
    /// Vowels in canonical order (used by the locus experiment).
    pub vowels: Vec<(String, VowelDef)>,
    pub consonants: BTreeMap<String, ConsonantDef>,
    /// Selection vectors for unordered consonant pairs, keyed by the two
    /// symbols in lexicographic order joined without separator.
    pub cluster_selections: BTreeMap<String, SelectionVector>,
}

fn cluster_key(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}{b}")
    } else {
        format!("{b}{a}")
    }
}

impl PhonemeInventory {
    /// The built-in inventory: seven peripheral vowels evenly spaced from u to
    /// i (corners land exactly on pi/3, pi, 5*pi/3), a central schwa, and the
    /// plosives /b d g/.
    pub fn default_inventory() -> Self {
        let peripheral = ["u", "o", "ɔ", "a", "ɛ", "e", "i"];
        let mut vowels: Vec<(String, VowelDef)> = peripheral
            .iter()
            .enumerate()
            .map(|(k, sym)| {
                let theta = PI / 3.0 + k as f64 * 2.0 * PI / 9.0;
                (sym.to_string(), VowelDef { rho: 1.0, theta })
            })
            .collect();
        vowels.push(("ə".to_string(), VowelDef { rho: 0.0, theta: 0.0 }));

        let mut consonants = BTreeMap::new();
        consonants.insert(
            "b".to_string(),
            ConsonantDef {
                location: LocationRule::Fixed {
                    rho: 1.0,
                    theta: PI / 3.0,
                },
                selection: SelectionVector::from_indices(&[1, 2, 6]).unwrap(),
            },
        );
        consonants.insert(
            "d".to_string(),
            ConsonantDef {
                location: LocationRule::VowelLean {
                    rho: 1.2,
                    center_theta: 3.0 * PI / 2.0,
                    coefficient: 0.1,
                    max_lean: PI / 6.0,
                },
                selection: SelectionVector::from_indices(&[1, 2, 3, 4]).unwrap(),
            },
        );
        consonants.insert(
            "g".to_string(),
            ConsonantDef {
                location: LocationRule::FrontBack {
                    front_rho: 1.1,
                    front_theta: 23.0 * PI / 12.0,
                    back_rho: 1.2,
                    back_theta: PI / 3.0,
                },
                selection: SelectionVector::from_indices(&[1, 2, 3, 4]).unwrap(),
            },
        );

        let with_b = SelectionVector::from_indices(&[1, 2, 3, 6]).unwrap();
        let without_b = SelectionVector::from_indices(&[1, 2, 3, 4]).unwrap();
        let mut cluster_selections = BTreeMap::new();
        for pair in [("b", "b"), ("b", "d"), ("b", "g")] {
            cluster_selections.insert(cluster_key(pair.0, pair.1), with_b);
        }
        for pair in [("d", "d"), ("d", "g"), ("g", "g")] {
            cluster_selections.insert(cluster_key(pair.0, pair.1), without_b);
        }

        Self {
            vowels,
            consonants,
            cluster_selections,
        }
    }

    pub fn vowel(&self, symbol: &str) -> Result<PolarPoint, InventoryError> {
        let def = self
            .vowels
            .iter()
            .find(|(s, _)| s == symbol)
            .map(|(_, d)| d)
            .ok_or_else(|| InventoryError::UnknownSymbol {
                symbol: symbol.to_string(),
            })?;
        PolarPoint::new(def.rho, def.theta).map_err(|e| InventoryError::BadPoint {
            symbol: symbol.to_string(),
            reason: e.to_string(),
        })
    }

    pub fn consonant(&self, symbol: &str) -> Result<&ConsonantDef, InventoryError> {
        self.consonants
            .get(symbol)
            .ok_or_else(|| InventoryError::UnknownSymbol {
                symbol: symbol.to_string(),
            })
    }

    pub fn is_vowel(&self, symbol: &str) -> bool {
        self.vowels.iter().any(|(s, _)| s == symbol)
    }

    pub fn is_consonant(&self, symbol: &str) -> bool {
        self.consonants.contains_key(symbol)
    }

    /// Selection vector for an unordered consonant pair. Pairs missing from
    /// the table fall back to the grouping rule: any pair containing /b/
    /// engages the lips ({1,2,3,6}), all others the tongue ({1,2,3,4}).
    pub fn cluster_selection(&self, a: &str, b: &str) -> SelectionVector {
        if let Some(sel) = self.cluster_selections.get(&cluster_key(a, b)) {
            return *sel;
        }
        if a == "b" || b == "b" {
            SelectionVector::from_indices(&[1, 2, 3, 6]).unwrap()
        } else {
            SelectionVector::from_indices(&[1, 2, 3, 4]).unwrap()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, InventoryError> {
        let text = fs::read_to_string(path).map_err(|source| InventoryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| InventoryError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("inventory serialization cannot fail")
    }
}
