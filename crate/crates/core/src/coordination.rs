//! Coordination function: maps a point of the complex planning plane to the
//! seven articulatory parameters of the vocal-tract model.
//!
//! Each articulator `i` is described by a mean `omega`, a range `psi1` and a
//! fixed angle `psi2`. A planning point (rho, theta) drives all seven
//! parameters at once:
//!
//! ```text
//! p_i = omega_i + psi1_i * rho * cos(psi2_i - theta)
//! ```
//!
//! which is the real part of `psi1_i * e^(i psi2_i) * conj(rho e^(i theta))`.
//! Vowels live on the unit disc, consonant targets on the crown rho <= 1.2.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of articulatory parameters.
pub const PARAM_COUNT: usize = 7;

/// Outer radius of the consonant crown; planning points beyond it are rejected.
pub const CROWN_MAX_RHO: f64 = 1.2;

const TWO_PI: f64 = 2.0 * PI;

// Tolerance for |z| <= CROWN_MAX_RHO checks: arc interpolation between two
// in-crown points can overshoot the bound by a few ulps.
const RADIUS_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CoordinationError {
    #[error("planning radius {rho} outside the crown (max {CROWN_MAX_RHO})")]
    OutOfCrown { rho: f64 },
    #[error("negative planning radius {rho}")]
    NegativeRadius { rho: f64 },
    #[error("coordination table must have exactly {PARAM_COUNT} entries, got {got}")]
    BadTableSize { got: usize },
    #[error("failed to read table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid table JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// A point (rho, theta) of the planning plane. Theta is canonicalized to
/// [0, 2*pi) on construction; rho must be non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    rho: f64,
    theta: f64,
}

impl PolarPoint {
    pub fn new(rho: f64, theta: f64) -> Result<Self, CoordinationError> {
        if !(rho >= 0.0) {
            return Err(CoordinationError::NegativeRadius { rho });
        }
        Ok(Self {
            rho,
            theta: canonical_angle(theta),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The point as a complex planning value rho * e^(i theta).
    pub fn position(&self) -> Complex64 {
        Complex64::from_polar(self.rho, self.theta)
    }

    /// Same angle, radius scaled by `factor` (used for anchor vowels).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rho: self.rho * factor,
            theta: self.theta,
        }
    }
}

/// Wraps an angle into [0, 2*pi).
pub fn canonical_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TWO_PI);
    // rem_euclid can return 2*pi itself when theta is a tiny negative number.
    if wrapped >= TWO_PI {
        0.0
    } else {
        wrapped
    }
}

/// Signed angular difference wrapped to (-pi, pi].
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

/// One row of the coordination table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiEntry {
    /// Parameter mean in model units.
    pub omega: f64,
    /// Parameter range in model units; the sign orients the articulator.
    pub psi1: f64,
    /// Fixed angle in radians.
    pub psi2: f64,
}

impl PsiEntry {
    /// The complex coefficient psi1 * e^(i psi2).
    pub fn psi(&self) -> Complex64 {
        Complex64::from_polar(self.psi1, self.psi2)
    }
}

/// The seven-row coordination table. Index order is fixed:
/// Jaw, Body, Dorsum, Tip, LipP, LipH, Hy.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    entries: [PsiEntry; PARAM_COUNT],
    names: [String; PARAM_COUNT],
}

/// Fixed articulator order used everywhere (flows, selections, CSV headers).
pub const ARTICULATOR_NAMES: [&str; PARAM_COUNT] =
    ["jaw", "body", "dorsum", "tip", "lip_p", "lip_h", "hy"];

#[derive(Serialize, Deserialize)]
struct PsiTableFile {
    names: Vec<String>,
    omega: Vec<f64>,
    psi1: Vec<f64>,
    psi2: Vec<f64>,
}

impl Default for PsiTable {
    fn default() -> Self {
        // Default model table: omega, psi1, psi2 per articulator.
        let raw: [(f64, f64, f64); PARAM_COUNT] = [
            (0.0, -1.5, PI),            // Jaw
            (0.0, -2.5, 5.0 * PI / 3.0), // Body
            (0.0, 3.0, PI / 3.0),       // Dorsum
            (0.0, -3.0, PI),            // Tip
            (0.0, 3.0, PI / 3.0),       // LipP
            (0.5, 2.5, PI),             // LipH
            (0.0, -2.0, PI / 3.0),      // Hy
        ];
        let entries = raw.map(|(omega, psi1, psi2)| PsiEntry { omega, psi1, psi2 });
        let names = ARTICULATOR_NAMES.map(str::to_owned);
        Self { entries, names }
    }
}

impl PsiTable {
    pub fn new(
        entries: [PsiEntry; PARAM_COUNT],
        names: [String; PARAM_COUNT],
    ) -> Self {
        let entries = entries.map(|mut e| {
            e.psi2 = canonical_angle(e.psi2);
            e
        });
        Self { entries, names }
    }

    pub fn entries(&self) -> &[PsiEntry; PARAM_COUNT] {
        &self.entries
    }

    pub fn names(&self) -> &[String; PARAM_COUNT] {
        &self.names
    }

    pub fn omega(&self) -> [f64; PARAM_COUNT] {
        self.entries.map(|e| e.omega)
    }

    /// Complex coefficients psi1_i * e^(i psi2_i), precomputed per call site.
    pub fn psi(&self) -> [Complex64; PARAM_COUNT] {
        self.entries.map(|e| e.psi())
    }

    pub fn from_json_file(path: &Path) -> Result<Self, CoordinationError> {
        let text = fs::read_to_string(path).map_err(|source| CoordinationError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: PsiTableFile =
            serde_json::from_str(&text).map_err(|source| CoordinationError::Json {
                path: path.display().to_string(),
                source,
            })?;
        let n = file.names.len();
        if n != PARAM_COUNT
            || file.omega.len() != PARAM_COUNT
            || file.psi1.len() != PARAM_COUNT
            || file.psi2.len() != PARAM_COUNT
        {
            return Err(CoordinationError::BadTableSize {
                got: n.max(file.omega.len()).max(file.psi1.len()).max(file.psi2.len()),
            });
        }
        let mut entries = [PsiEntry {
            omega: 0.0,
            psi1: 0.0,
            psi2: 0.0,
        }; PARAM_COUNT];
        let mut names: [String; PARAM_COUNT] = Default::default();
        for i in 0..PARAM_COUNT {
            entries[i] = PsiEntry {
                omega: file.omega[i],
                psi1: file.psi1[i],
                psi2: file.psi2[i],
            };
            names[i] = file.names[i].clone();
        }
        Ok(Self::new(entries, names))
    }

    pub fn to_json(&self) -> String {
        let file = PsiTableFile {
            names: self.names.to_vec(),
            omega: self.entries.iter().map(|e| e.omega).collect(),
            psi1: self.entries.iter().map(|e| e.psi1).collect(),
            psi2: self.entries.iter().map(|e| e.psi2).collect(),
        };
        serde_json::to_string_pretty(&file).expect("table serialization cannot fail")
    }
}

/// The seven articulatory parameter values, index-aligned with the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub p: [f64; PARAM_COUNT],
}

impl ParameterVector {
    pub fn get(&self, index: usize) -> f64 {
        self.p[index]
    }
}

/// Evaluates the coordination function at a polar planning point.
///
/// Errors when the radius exceeds the crown; a clamp here would hide
/// planning bugs.
pub fn coordinate(
    point: PolarPoint,
    table: &PsiTable,
) -> Result<ParameterVector, CoordinationError> {
    if point.rho > CROWN_MAX_RHO + RADIUS_EPS {
        return Err(CoordinationError::OutOfCrown { rho: point.rho });
    }
    let mut p = [0.0; PARAM_COUNT];
    for (i, e) in table.entries.iter().enumerate() {
        p[i] = e.omega + e.psi1 * point.rho * (e.psi2 - point.theta).cos();
    }
    Ok(ParameterVector { p })
}

/// Complex form of the coordination function: p = omega + Re[psi * conj(z)].
/// Agrees with [`coordinate`] to machine precision when z = rho e^(i theta).
pub fn coordinate_complex(
    z: Complex64,
    table: &PsiTable,
) -> Result<ParameterVector, CoordinationError> {
    let norm = z.norm();
    if norm > CROWN_MAX_RHO + RADIUS_EPS {
        return Err(CoordinationError::OutOfCrown { rho: norm });
    }
    Ok(coordinate_complex_unchecked(z, table))
}

/// Total version used by the flow compiler, where planning values are already
/// known to lie within the crown (arc interpolation cannot leave it).
pub(crate) fn coordinate_complex_unchecked(z: Complex64, table: &PsiTable) -> ParameterVector {
    let zc = z.conj();
    let mut p = [0.0; PARAM_COUNT];
    for (i, e) in table.entries.iter().enumerate() {
        p[i] = e.omega + (e.psi() * zc).re;
    }
    ParameterVector { p }
}
