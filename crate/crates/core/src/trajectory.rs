//! Arc planning in the complex plane.
//!
//! An arc joins two planning points over a duration n*T with a cosine
//! velocity profile:
//!
//! ```text
//! z(t) = (1 - rho(t)) * p1 + rho(t) * rho2 * e^(i (theta2 + nu/K * theta(t)))
//! rho(t) = cos(theta(t) / 2)
//! ```
//!
//! Two orientations set the phase ramp and which endpoint plays which role:
//! under O1 theta(t) = pi*t/(nT) and point 2 is the departure (origin); under
//! O2 theta(t) = pi*(t/(nT) - 1) and point 2 is the arrival. In both cases the
//! spiral term vanishes where theta(t) = 0, so the arc meets that endpoint
//! exactly; at the other end rho(t) = 0 kills the spiral factor entirely.
//! Large K straightens the arc into the chord between its endpoints.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::PolarPoint;

/// Default shape parameter for vowel arcs.
pub const K_VOWEL: f64 = 30.0;
/// Default shape parameter for consonant arcs.
pub const K_CONSONANT: f64 = 10.0;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("time {t} ms outside arc range [0, {max} ms]")]
    TimeOutOfRange { t: f64, max: f64 },
    #[error("sample step {dt} ms must be positive")]
    BadStep { dt: f64 },
    #[error("arc must span at least one period, got n = 0")]
    ZeroPeriods,
    #[error("shape parameter K must be positive, got {k}")]
    BadShape { k: f64 },
    #[error("spiral sign nu must be +1 or -1, got {nu}")]
    BadSpiralSign { nu: f64 },
}

/// Arc orientation: which endpoint carries the spiral term and how the phase
/// ramps over the duration (the paper's T1 / T2 timing labels).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// theta ramps 0 -> pi; departure is exact, velocity grows toward arrival.
    O1,
    /// theta ramps -pi -> 0; arrival is exact, velocity decays toward it.
    O2,
}

/// A planned arc between two polar points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSpec {
    pub from_point: PolarPoint,
    pub to_point: PolarPoint,
    pub orientation: Orientation,
    /// Number of periods n; the arc lasts n * period_t milliseconds.
    pub n_periods: u32,
    /// Period T in milliseconds.
    pub period_t: f64,
    /// Spiral sign, +1 or -1.
    pub nu: f64,
    /// Shape parameter; larger K gives straighter arcs.
    pub k: f64,
}

impl ArcSpec {
    pub fn new(
        from_point: PolarPoint,
        to_point: PolarPoint,
        orientation: Orientation,
        n_periods: u32,
        period_t: f64,
        nu: f64,
        k: f64,
    ) -> Result<Self, TrajectoryError> {
        if n_periods == 0 {
            return Err(TrajectoryError::ZeroPeriods);
        }
        if !(k > 0.0) {
            return Err(TrajectoryError::BadShape { k });
        }
        if nu != 1.0 && nu != -1.0 {
            return Err(TrajectoryError::BadSpiralSign { nu });
        }
        Ok(Self {
            from_point,
            to_point,
            orientation,
            n_periods,
            period_t,
            nu,
            k,
        })
    }

    /// Total duration n * T in milliseconds.
    pub fn duration(&self) -> f64 {
        self.n_periods as f64 * self.period_t
    }

    /// Upper bound on |dz/dt| over the arc, used for continuity checks.
    pub fn speed_bound(&self) -> f64 {
        let nt = self.duration();
        if nt <= 0.0 {
            return 0.0;
        }
        let r1 = self.from_point.rho();
        let r2 = self.to_point.rho();
        // |z'| <= |rho'(t)| (|p1| + |p2|) + rho2 * |theta'| / K
        (PI / (2.0 * nt)) * (r1 + r2) + r1.max(r2) * (PI / nt) / self.k
    }
}

fn check_time(t: f64, max: f64) -> Result<(), TrajectoryError> {
    // small forward tolerance: frame grids land on nT up to rounding
    if t < -1e-9 || t > max * (1.0 + 1e-12) + 1e-9 {
        return Err(TrajectoryError::TimeOutOfRange { t, max });
    }
    Ok(())
}

/// Phase and velocity-profile value at time `t` of the arc: (theta_t, rho_t).
pub fn phase(t: f64, arc: &ArcSpec) -> Result<(f64, f64), TrajectoryError> {
    let nt = arc.duration();
    check_time(t, nt)?;
    let frac = if nt > 0.0 { t / nt } else { 0.0 };
    let theta_t = match arc.orientation {
        Orientation::O1 => PI * frac,
        Orientation::O2 => PI * (frac - 1.0),
    };
    Ok((theta_t, (theta_t / 2.0).cos()))
}

/// Complex planning value at time `t` along the arc.
///
/// A stationary arc (identical endpoints) holds its point: a vowel hold is a
/// fixed planning target, so the spiral term does not apply.
pub fn arc_position(t: f64, arc: &ArcSpec) -> Result<Complex64, TrajectoryError> {
    if arc.from_point == arc.to_point {
        check_time(t, arc.duration())?;
        return Ok(arc.from_point.position());
    }
    check_time(t, arc.duration())?;
    // exact-arithmetic endpoint limits: rho(t) vanishes there, but cos(pi/2)
    // carries an ulp in f64, so evaluate the limit directly
    match arc.orientation {
        Orientation::O1 if t >= arc.duration() => return Ok(arc.to_point.position()),
        Orientation::O2 if t <= 0.0 => return Ok(arc.from_point.position()),
        _ => {}
    }
    let (theta_t, rho_t) = phase(t, arc)?;
    // Endpoint-to-role assignment: point 2 (spiral carrier) is the endpoint
    // where theta(t) = 0, i.e. the departure under O1 and the arrival under O2.
    let (point_one, point_two) = match arc.orientation {
        Orientation::O1 => (arc.to_point, arc.from_point),
        Orientation::O2 => (arc.from_point, arc.to_point),
    };
    let spiral = Complex64::from_polar(
        point_two.rho(),
        point_two.theta() + arc.nu / arc.k * theta_t,
    );
    Ok(point_one.position() * (1.0 - rho_t) + spiral * rho_t)
}

/// Uniform sampling of an arc: round(nT/dt) + 1 values from z(0) to z(nT)
/// inclusive. `dt` must divide the duration within rounding tolerance.
pub fn sample_arc(arc: &ArcSpec, dt: f64) -> Result<Vec<Complex64>, TrajectoryError> {
    if !(dt > 0.0) {
        return Err(TrajectoryError::BadStep { dt });
    }
    let nt = arc.duration();
    let steps = (nt / dt).round().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        out.push(arc_position(k as f64 * dt, arc)?);
    }
    // final sample taken at nT exactly so the endpoint is hit bit-for-bit
    out.push(arc_position(nt, arc)?);
    Ok(out)
}

/// Largest distance from the sampled arc to the straight chord through its
/// endpoints. Used to check the large-K straight-line limit.
pub fn max_chord_deviation(arc: &ArcSpec, dt: f64) -> Result<f64, TrajectoryError> {
    let samples = sample_arc(arc, dt)?;
    let a = arc.from_point.position();
    let b = arc.to_point.position();
    let ab = b - a;
    let len2 = ab.norm_sqr();
    let mut worst: f64 = 0.0;
    for z in samples {
        let d = if len2 == 0.0 {
            (z - a).norm()
        } else {
            // distance to the segment a..b
            let s = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
            let s = s.clamp(0.0, 1.0);
            (z - (a + ab * s)).norm()
        };
        worst = worst.max(d);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordination::PolarPoint;

    fn p(rho: f64, theta: f64) -> PolarPoint {
        PolarPoint::new(rho, theta).unwrap()
    }

    fn arc(from: PolarPoint, to: PolarPoint, o: Orientation, n: u32, k: f64) -> ArcSpec {
        ArcSpec::new(from, to, o, n, 100.0, 1.0, k).unwrap()
    }

    #[test]
    fn phase_closed_forms() {
        let a = arc(p(1.0, 0.0), p(1.0, PI), Orientation::O1, 2, K_VOWEL);
        let (th, rh) = phase(0.0, &a).unwrap();
        assert_eq!((th, rh), (0.0, 1.0));
        let (th, rh) = phase(200.0, &a).unwrap();
        assert!((th - PI).abs() < 1e-12);
        assert!(rh.abs() < 1e-12);
        let (th, rh) = phase(100.0, &a).unwrap();
        assert!((th - PI / 2.0).abs() < 1e-12);
        assert!((rh - (PI / 4.0).cos()).abs() < 1e-12);
        assert!((rh - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn phase_rejects_out_of_range() {
        let a = arc(p(1.0, 0.0), p(1.0, PI), Orientation::O1, 1, K_VOWEL);
        assert!(phase(-5.0, &a).is_err());
        assert!(phase(150.0, &a).is_err());
    }

    #[test]
    fn o1_departs_from_exactly() {
        let from = p(0.7, 5.0 * PI / 3.0);
        let to = p(1.0, PI / 3.0);
        let a = arc(from, to, Orientation::O1, 1, K_CONSONANT);
        let z0 = arc_position(0.0, &a).unwrap();
        assert_eq!(z0, from.position());
        // arrival: rho(nT) = 0 wipes the spiral factor
        let z1 = arc_position(100.0, &a).unwrap();
        assert!((z1 - to.position()).norm() < 1e-12);
    }

    #[test]
    fn o2_arrives_to_exactly() {
        let from = p(1.0, PI / 3.0);
        let to = p(1.0, 5.0 * PI / 3.0);
        let a = arc(from, to, Orientation::O2, 2, K_VOWEL);
        let z1 = arc_position(200.0, &a).unwrap();
        assert_eq!(z1, to.position());
        let z0 = arc_position(0.0, &a).unwrap();
        assert!((z0 - from.position()).norm() < 1e-12);
    }

    #[test]
    fn large_k_midpoint_on_chord() {
        // At the O1 midpoint rho(t) = sqrt(2)/2, so the straight-line limit is
        // (1 - sqrt(2)/2) * to + sqrt(2)/2 * from.
        let from = p(1.0, PI / 3.0);
        let to = p(1.0, PI);
        let a = ArcSpec::new(from, to, Orientation::O1, 1, 100.0, 1.0, 1e6).unwrap();
        let z = arc_position(50.0, &a).unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let chord = to.position() * (1.0 - w) + from.position() * w;
        assert!((z - chord).norm() < 1e-4);
    }

    #[test]
    fn straight_line_limit_and_curvature_ordering() {
        let from = p(1.0, PI / 3.0);
        let to = p(0.9, 4.0);
        let straight = ArcSpec::new(from, to, Orientation::O2, 1, 100.0, 1.0, 1e6).unwrap();
        let curved = ArcSpec::new(from, to, Orientation::O2, 1, 100.0, 1.0, 10.0).unwrap();
        let d_straight = max_chord_deviation(&straight, 1.0).unwrap();
        let d_curved = max_chord_deviation(&curved, 1.0).unwrap();
        assert!(d_straight < 1e-4, "straight deviation {d_straight}");
        assert!(d_curved > d_straight * 100.0, "curved {d_curved}");
    }

    #[test]
    fn sample_count_and_endpoints() {
        let a = arc(p(1.0, 0.0), p(1.0, PI), Orientation::O1, 2, K_VOWEL);
        let s = sample_arc(&a, 1.0).unwrap();
        assert_eq!(s.len(), 201);
        assert_eq!(s[0], arc_position(0.0, &a).unwrap());
        assert_eq!(s[200], arc_position(200.0, &a).unwrap());
    }

    #[test]
    fn stationary_arc_is_constant() {
        let v = p(1.0, 5.0 * PI / 3.0);
        for o in [Orientation::O1, Orientation::O2] {
            let a = arc(v, v, o, 1, K_VOWEL);
            let s = sample_arc(&a, 1.0).unwrap();
            assert!(s.iter().all(|z| *z == v.position()));
        }
    }

    #[test]
    fn bad_step_rejected() {
        let a = arc(p(1.0, 0.0), p(1.0, PI), Orientation::O1, 1, K_VOWEL);
        assert!(sample_arc(&a, 0.0).is_err());
        assert!(sample_arc(&a, -1.0).is_err());
    }

    #[test]
    fn velocity_profile_bounds_and_monotonicity() {
        let a = arc(p(1.0, 1.0), p(0.5, 2.0), Orientation::O1, 1, K_VOWEL);
        let b = arc(p(1.0, 1.0), p(0.5, 2.0), Orientation::O2, 1, K_VOWEL);
        let mut prev_a = f64::INFINITY;
        let mut prev_b = f64::NEG_INFINITY;
        for k in 0..=100 {
            let t = k as f64;
            let (_, ra) = phase(t, &a).unwrap();
            let (_, rb) = phase(t, &b).unwrap();
            assert!((0.0..=1.0).contains(&ra));
            assert!((0.0..=1.0).contains(&rb));
            assert!(ra <= prev_a + 1e-12, "O1 profile must decrease");
            assert!(rb >= prev_b - 1e-12, "O2 profile must increase");
            prev_a = ra;
            prev_b = rb;
        }
    }

    #[test]
    fn orientation_duality() {
        // An O1 arc A->B and an O2 arc B->A cover the same endpoint set, and
        // with the spiral sign flipped one is the time reversal of the other.
        let a_pt = p(1.0, PI / 3.0);
        let b_pt = p(0.8, 4.2);
        let fwd = ArcSpec::new(a_pt, b_pt, Orientation::O1, 1, 100.0, 1.0, 15.0).unwrap();
        let rev = ArcSpec::new(b_pt, a_pt, Orientation::O2, 1, 100.0, -1.0, 15.0).unwrap();
        for k in 0..=100 {
            let t = k as f64;
            let zf = arc_position(t, &fwd).unwrap();
            let zr = arc_position(100.0 - t, &rev).unwrap();
            assert!((zf - zr).norm() < 1e-12);
        }
    }
}
