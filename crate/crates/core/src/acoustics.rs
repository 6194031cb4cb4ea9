//! Acoustic stage: articulatory parameters to area functions, transmission
//! line transfer functions, and formant tracks.
//!
//! The parameter-to-area map is a configurable exponential deformation of a
//! neutral tract: section areas scale by exp(profile . (p - reference)) and
//! the terminal (lip) section length follows the lip-protrusion parameter.
//! The transfer function chains lossless cylindrical two-ports from glottis
//! to lips with an ideal volume-velocity source and a pressure-release lip
//! boundary; formants are the lowest maxima of |H| found on a 10 Hz grid and
//! sharpened by parabolic interpolation.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::{
    coordinate, CoordinationError, ParameterVector, PolarPoint, PsiTable, PARAM_COUNT,
};
use crate::flow::ParameterFlow;

/// Smallest admissible section area (keeps |H| finite through closures).
pub const AREA_MIN: f64 = 0.05;
/// Largest admissible section area.
pub const AREA_MAX: f64 = 15.0;
/// Speed of sound in cm/s.
pub const SPEED_OF_SOUND: f64 = 35_000.0;
/// Air density in g/cm^3.
pub const AIR_DENSITY: f64 = 1.14e-3;

/// Highest frequency of interest.
pub const FREQ_MAX: f64 = 5_000.0;
/// Formant search grid step in Hz.
pub const FORMANT_GRID_HZ: f64 = 10.0;

#[derive(Debug, Error)]
pub enum AcousticsError {
    #[error("empty frequency grid")]
    EmptyGrid,
    #[error("area function needs at least 8 sections, got {got}")]
    TooFewSections { got: usize },
    #[error("profile weight {value} outside [-1, 1] at articulator {articulator}, section {section}")]
    ProfileOutOfBounds {
        articulator: usize,
        section: usize,
        value: f64,
    },
    #[error("failed to read map {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid map JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Coordination(#[from] CoordinationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    /// Length in cm.
    pub length: f64,
    /// Cross-sectional area in cm^2.
    pub area: f64,
}

/// Glottis-to-lips sequence of cylindrical sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaFunction {
    pub sections: Vec<Section>,
}

impl AreaFunction {
    pub fn uniform(total_length: f64, area: f64, count: usize) -> Self {
        let length = total_length / count as f64;
        Self {
            sections: vec![Section { length, area }; count],
        }
    }

    pub fn total_length(&self) -> f64 {
        self.sections.iter().map(|s| s.length).sum()
    }

    /// Index of the terminal (lip) section.
    pub fn lip_section(&self) -> usize {
        self.sections.len() - 1
    }
}

/// Per-articulator deformation weights over the tract plus the neutral tract
/// they deform. `reference` holds the parameter values that reproduce the
/// neutral tract exactly (the coordination means).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArticulatoryMap {
    pub neutral: AreaFunction,
    pub reference: [f64; PARAM_COUNT],
    /// cm of terminal length per unit of lip protrusion.
    pub length_gain: f64,
    pub jaw: Vec<f64>,
    pub body: Vec<f64>,
    pub dorsum: Vec<f64>,
    pub tip: Vec<f64>,
    pub lip_p: Vec<f64>,
    pub lip_h: Vec<f64>,
    pub hy: Vec<f64>,
}

fn raised_cosine_bump(x: f64, center: f64, width: f64) -> f64 {
    let d = (x - center).abs();
    if d >= width {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * d / width).cos())
    }
}

impl ArticulatoryMap {
    pub fn profiles(&self) -> [&[f64]; PARAM_COUNT] {
        [
            &self.jaw,
            &self.body,
            &self.dorsum,
            &self.tip,
            &self.lip_p,
            &self.lip_h,
            &self.hy,
        ]
    }

    /// The built-in map: a 29-section near-uniform tract with smooth
    /// per-articulator deformation bumps.
    ///
    /// Region layout, glottis to lips: larynx, pharynx, velar, palatal,
    /// alveolar, labial. The weights are tuned so that the corner-vowel
    /// formant ordering and the labial closure behaviour come out of the
    /// coordination table values.
    pub fn default_map(table: &PsiTable) -> Self {
        const SECTIONS: usize = 29;
        let mut sections = Vec::with_capacity(SECTIONS);
        for m in 0..SECTIONS - 1 {
            let area = match m {
                0 => 1.5,
                1 => 2.0,
                2 => 3.0,
                _ => 4.0,
            };
            sections.push(Section { length: 0.6, area });
        }
        // terminal lip section: small and short so lip-height changes act as
        // an aperture rather than a long constriction
        sections.push(Section {
            length: 0.3,
            area: 0.35,
        });
        let neutral = AreaFunction { sections };

        // section centers as fractions of the tract
        let total = neutral.total_length();
        let mut centers = Vec::with_capacity(SECTIONS);
        let mut cum = 0.0;
        for s in &neutral.sections {
            centers.push((cum + s.length / 2.0) / total);
            cum += s.length;
        }

        let profile = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            centers.iter().map(|&x| f(x)).collect()
        };

        let mut jaw = profile(&|x| -0.25 * raised_cosine_bump(x, 0.80, 0.30));
        jaw[SECTIONS - 1] = -0.5; // raised jaw narrows the lips
        let mut body = profile(&|x| {
            -0.28 * raised_cosine_bump(x, 0.25, 0.22) + 0.28 * raised_cosine_bump(x, 0.62, 0.22)
        });
        // fronting spreads the lips; the backing of a labial gesture shuts
        // them, which the /b/ selection set relies on
        body[SECTIONS - 1] = -0.35;
        let dorsum = profile(&|x| -0.22 * raised_cosine_bump(x, 0.45, 0.16));
        let tip = profile(&|x| -0.20 * raised_cosine_bump(x, 0.75, 0.12));
        let lip_p = vec![0.0; SECTIONS];
        let mut lip_h = vec![0.0; SECTIONS];
        lip_h[SECTIONS - 3] = 0.15;
        lip_h[SECTIONS - 2] = 0.35;
        lip_h[SECTIONS - 1] = 1.0;
        let hy = profile(&|x| -0.15 * raised_cosine_bump(x, 0.15, 0.15));

        Self {
            neutral,
            reference: table.omega(),
            length_gain: 0.25,
            jaw,
            body,
            dorsum,
            tip,
            lip_p,
            lip_h,
            hy,
        }
    }

    pub fn validate(&self) -> Result<(), AcousticsError> {
        let m = self.neutral.sections.len();
        if m < 8 {
            return Err(AcousticsError::TooFewSections { got: m });
        }
        for (ai, profile) in self.profiles().iter().enumerate() {
            for (si, &w) in profile.iter().enumerate() {
                if !w.is_finite() || !(-1.0..=1.0).contains(&w) {
                    return Err(AcousticsError::ProfileOutOfBounds {
                        articulator: ai,
                        section: si,
                        value: w,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self, AcousticsError> {
        let text = fs::read_to_string(path).map_err(|source| AcousticsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let map: ArticulatoryMap =
            serde_json::from_str(&text).map_err(|source| AcousticsError::Json {
                path: path.display().to_string(),
                source,
            })?;
        map.validate()?;
        Ok(map)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serialization cannot fail")
    }
}

/// Deforms the neutral tract by the parameter vector: section areas scale by
/// exp(sum_i profile_i[m] * (p_i - reference_i)), clamped to
/// [AREA_MIN, AREA_MAX]; the lip section length follows lip protrusion.
pub fn area_from_parameters(p: &ParameterVector, map: &ArticulatoryMap) -> AreaFunction {
    let profiles = map.profiles();
    let mut sections = map.neutral.sections.clone();
    let lip = sections.len() - 1;
    for (m, section) in sections.iter_mut().enumerate() {
        let mut exponent = 0.0;
        for i in 0..PARAM_COUNT {
            exponent += profiles[i][m] * (p.p[i] - map.reference[i]);
        }
        section.area = (section.area * exponent.exp()).clamp(AREA_MIN, AREA_MAX);
    }
    // terminal length extension: protruded lips lengthen the tract
    const LIP_P: usize = 4;
    let delta = map.length_gain * (p.p[LIP_P] - map.reference[LIP_P]);
    sections[lip].length = (map.neutral.sections[lip].length + delta).clamp(0.05, 1.5);
    AreaFunction { sections }
}

/// Volume-velocity transfer magnitude |U_lips / U_glottis| on a frequency
/// grid via chained lossless two-ports, closed glottis source and zero
/// (pressure-release) lip termination.
pub fn transfer_function(
    area: &AreaFunction,
    freqs: &[f64],
) -> Result<Vec<f64>, AcousticsError> {
    if freqs.is_empty() {
        return Err(AcousticsError::EmptyGrid);
    }
    let mut out = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let k = 2.0 * std::f64::consts::PI * f / SPEED_OF_SOUND;
        // chain product [P_g; U_g] = M1 * ... * Mm * [P_l; U_l]
        let mut a = Complex64::new(1.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut c = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(1.0, 0.0);
        for s in &area.sections {
            let kl = k * s.length;
            let zc = AIR_DENSITY * SPEED_OF_SOUND / s.area;
            let (sin_kl, cos_kl) = kl.sin_cos();
            let ma = Complex64::new(cos_kl, 0.0);
            let mb = Complex64::new(0.0, zc * sin_kl);
            let mc = Complex64::new(0.0, sin_kl / zc);
            let md = Complex64::new(cos_kl, 0.0);
            let na = a * ma + b * mc;
            let nb = a * mb + b * md;
            let nc = c * ma + d * mc;
            let nd = c * mb + d * md;
            a = na;
            b = nb;
            c = nc;
            d = nd;
        }
        // P_l = 0: U_g = D * U_l, so H = 1 / D
        let mag = 1.0 / d.norm().max(1e-30);
        out.push(mag);
    }
    Ok(out)
}

/// Result of a formant search: up to `count` peak frequencies, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct FormantEstimate {
    pub freqs: Vec<f64>,
    pub valid: bool,
}

/// The `count` lowest resonances of the tract: local maxima of |H| on a
/// 10 Hz grid over (50, 5000], refined by three-point parabolic
/// interpolation of log|H|. `valid` is false when fewer peaks exist.
pub fn formants(area: &AreaFunction, count: usize) -> FormantEstimate {
    let mut freqs = Vec::new();
    let mut f = 60.0;
    while f <= FREQ_MAX + 1e-9 {
        freqs.push(f);
        f += FORMANT_GRID_HZ;
    }
    let mags = transfer_function(area, &freqs).expect("grid is never empty");
    let logs: Vec<f64> = mags.iter().map(|m| m.ln()).collect();

    let mut peaks = Vec::new();
    for i in 1..logs.len() - 1 {
        if logs[i] > logs[i - 1] && logs[i] >= logs[i + 1] {
            let denom = logs[i - 1] - 2.0 * logs[i] + logs[i + 1];
            let delta = if denom.abs() > 1e-12 {
                (0.5 * (logs[i - 1] - logs[i + 1]) / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            peaks.push(freqs[i] + delta * FORMANT_GRID_HZ);
            if peaks.len() == count {
                break;
            }
        }
    }
    let valid = peaks.len() == count;
    FormantEstimate {
        freqs: peaks,
        valid,
    }
}

/// Formants of one frame; invalid frames hold NaN placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormantFrame {
    pub f: [f64; 4],
    pub valid: bool,
}

/// Per-frame formant tracks of a compiled flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FormantTrack {
    pub frames: Vec<FormantFrame>,
    pub dt: f64,
}

fn frame_formants(p: &[f64; PARAM_COUNT], map: &ArticulatoryMap) -> FormantFrame {
    let area = area_from_parameters(&ParameterVector { p: *p }, map);
    let est = formants(&area, 4);
    let mut f = [f64::NAN; 4];
    for (i, freq) in est.freqs.iter().enumerate().take(4) {
        f[i] = *freq;
    }
    FormantFrame {
        f,
        valid: est.valid,
    }
}

/// Tracks formants across a flow. Frames are independent, so the work runs
/// in parallel; output order is the frame order.
pub fn track_formants(flow: &ParameterFlow, map: &ArticulatoryMap) -> FormantTrack {
    let frames: Vec<FormantFrame> = flow
        .frames
        .par_iter()
        .map(|p| frame_formants(p, map))
        .collect();
    FormantTrack {
        frames,
        dt: flow.dt,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceSample {
    pub rho: f64,
    pub theta: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

/// Formants of the coordinated surface on a polar grid; the rows stream in
/// grid order (rho major, theta minor).
pub fn sample_surface(
    rho_grid: &[f64],
    theta_grid: &[f64],
    table: &PsiTable,
    map: &ArticulatoryMap,
) -> Result<Vec<SurfaceSample>, AcousticsError> {
    let mut points = Vec::with_capacity(rho_grid.len() * theta_grid.len());
    for &rho in rho_grid {
        for &theta in theta_grid {
            points.push(PolarPoint::new(rho, theta).map_err(CoordinationError::from)?);
        }
    }
    let samples: Result<Vec<SurfaceSample>, AcousticsError> = points
        .par_iter()
        .map(|point| {
            let p = coordinate(*point, table)?;
            let area = area_from_parameters(&p, map);
            let est = formants(&area, 3);
            let get = |i: usize| est.freqs.get(i).copied().unwrap_or(f64::NAN);
            Ok(SurfaceSample {
                rho: point.rho(),
                theta: point.theta(),
                f1: get(0),
                f2: get(1),
                f3: get(2),
            })
        })
        .collect();
    samples
}

pub fn surface_to_csv(samples: &[SurfaceSample]) -> String {
    let mut out = String::from("rho,theta,f1,f2,f3\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.rho, s.theta, s.f1, s.f2, s.f3
        ));
    }
    out
}

pub fn track_to_csv(track: &FormantTrack) -> String {
    let mut out = String::from("frame,f1,f2,f3,f4,valid\n");
    for (i, fr) in track.frames.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i, fr.f[0], fr.f[1], fr.f[2], fr.f[3], fr.valid
        ));
    }
    out
}
