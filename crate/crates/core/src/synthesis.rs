//! Audio rendering: syllable-structure envelope, glottal pulse source, a
//! four-resonator cascade driven by the formant track, and WAV output.
//!
//! Consonant closures and pauses are rendered as envelope dips rather than
//! by filtering through a closed tract: the closure span is read from the
//! graph markers, falls and rises are raised cosines of 0.25 T, and
//! consecutive chain consonants share one sustained closure.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::acoustics::FormantTrack;
use crate::flow::{Marker, MarkerKind};

/// Fixed resonator bandwidths for F1..F4 in Hz (the lossless line provides
/// none of its own).
pub const BANDWIDTHS: [f64; 4] = [60.0, 90.0, 120.0, 150.0];

/// Formants used while no valid track frame has been seen yet.
const FALLBACK_FORMANTS: [f64; 4] = [500.0, 1500.0, 2500.0, 3500.0];

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("f0 = {f0} Hz outside [50, 400]")]
    F0OutOfRange { f0: f64 },
    #[error("sample rate {rate} Hz below 8000")]
    SampleRateTooLow { rate: u32 },
    #[error("track has {track} frames but envelope has {envelope}")]
    FrameMismatch { track: usize, envelope: usize },
    #[error("wav io failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("not a 16-bit mono PCM wav: {reason}")]
    BadWav { reason: String },
}

/// Per-frame gain in [0, 1], aligned with the flow frames.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCurve {
    pub gain: Vec<f64>,
    pub dt: f64,
}

impl EnvelopeCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,gain\n");
        for (i, g) in self.gain.iter().enumerate() {
            out.push_str(&format!("{i},{g}\n"));
        }
        out
    }
}

/// Closed intervals (in fractional frames) that the envelope must silence.
fn closure_spans(markers: &[Marker], period_t: f64, dt: f64) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = Vec::new();
    let plateau_half = 0.05 * period_t / dt;
    let mut i = 0;
    while i < markers.len() {
        match markers[i].kind {
            MarkerKind::Consonant => {
                // a run of directly consecutive consonant markers is one
                // sustained closure (a cluster chain)
                let first = markers[i].frame as f64;
                let mut last = first;
                let mut j = i + 1;
                while j < markers.len() && markers[j].kind == MarkerKind::Consonant {
                    last = markers[j].frame as f64;
                    j += 1;
                }
                spans.push((first - plateau_half, last + plateau_half));
                i = j;
            }
            MarkerKind::PauseStart => {
                let start = markers[i].frame as f64;
                let mut end = start;
                for m in &markers[i..] {
                    if m.kind == MarkerKind::PauseEnd {
                        end = m.frame as f64;
                        break;
                    }
                }
                spans.push((start, end));
                i += 1;
            }
            _ => i += 1,
        }
    }
    spans
}

/// Builds the syllable-structure envelope from compile markers: raised-cosine
/// fall over 0.25 T into each closure, zero across it, raised-cosine rise
/// over 0.25 T out of it; overlapping dips combine by minimum.
pub fn build_envelope(
    markers: &[Marker],
    frame_count: usize,
    dt: f64,
    period_t: f64,
) -> EnvelopeCurve {
    let ramp = 0.25 * period_t / dt;
    let mut gain = vec![1.0; frame_count];
    for (start, end) in closure_spans(markers, period_t, dt) {
        for (f, g) in gain.iter_mut().enumerate() {
            let x = f as f64;
            let dip = if x < start - ramp || x > end + ramp {
                1.0
            } else if x < start {
                // raised-cosine fall: 1 at start-ramp, 0 at start
                0.5 * (1.0 - (std::f64::consts::PI * (start - x) / ramp).cos())
            } else if x <= end {
                0.0
            } else {
                // raised-cosine rise: 0 at end, 1 at end+ramp
                0.5 * (1.0 - (std::f64::consts::PI * (x - end) / ramp).cos())
            };
            if dip < *g {
                *g = dip;
            }
        }
    }
    EnvelopeCurve { gain, dt }
}

/// Glottal pulse onset sample indices for a flat f0.
pub fn pulse_onsets(f0: f64, duration_s: f64, sample_rate: u32) -> Vec<usize> {
    let total = (duration_s * sample_rate as f64).round() as usize;
    let period = sample_rate as f64 / f0;
    let mut out = Vec::new();
    let mut t = 0.0f64;
    while (t.round() as usize) < total {
        out.push(t.round() as usize);
        t += period;
    }
    out
}

/// Rosenberg-style glottal source: per period a polynomial rise over 2/3 of
/// the open phase and a fall over the rest (open quotient 0.6), then first
/// difference and mean removal.
pub fn glottal_source(
    f0: f64,
    duration_s: f64,
    sample_rate: u32,
) -> Result<Vec<f64>, SynthesisError> {
    if !(50.0..=400.0).contains(&f0) {
        return Err(SynthesisError::F0OutOfRange { f0 });
    }
    if sample_rate < 8000 {
        return Err(SynthesisError::SampleRateTooLow { rate: sample_rate });
    }
    let total = (duration_s * sample_rate as f64).round() as usize;
    let period = sample_rate as f64 / f0;
    let open = 0.6 * period;
    let rise = 2.0 / 3.0 * open;
    let fall = open - rise;

    let mut pulse = vec![0.0f64; total];
    for &onset in &pulse_onsets(f0, duration_s, sample_rate) {
        let end = ((onset as f64 + open).floor() as usize).min(total);
        for (k, v) in pulse.iter_mut().enumerate().take(end).skip(onset) {
            let x = k as f64 - onset as f64;
            *v = if x < rise {
                let u = x / rise;
                3.0 * u * u - 2.0 * u * u * u
            } else {
                let u = (x - rise) / fall;
                1.0 - u * u
            };
        }
    }
    // differentiate once and remove the mean
    let mut out = vec![0.0f64; total];
    for k in 1..total {
        out[k] = pulse[k] - pulse[k - 1];
    }
    let mean = out.iter().sum::<f64>() / total.max(1) as f64;
    for v in &mut out {
        *v -= mean;
    }
    Ok(out)
}

/// A rendered waveform in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// Two-pole resonator with unity DC gain.
struct Resonator {
    b1: f64,
    b2: f64,
    a: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new() -> Self {
        Self {
            b1: 0.0,
            b2: 0.0,
            a: 1.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn set(&mut self, freq: f64, bandwidth: f64, sample_rate: f64) {
        let r = (-std::f64::consts::PI * bandwidth / sample_rate).exp();
        let theta = 2.0 * std::f64::consts::PI * freq / sample_rate;
        self.b1 = 2.0 * r * theta.cos();
        self.b2 = -r * r;
        self.a = 1.0 - self.b1 - self.b2;
    }

    fn pole_radius(&self) -> f64 {
        (-self.b2).sqrt()
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b1 * self.y1 + self.b2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Renders a formant track: excitation through the F1..F4 cascade with
/// per-frame coefficient updates (held across invalid frames), multiplied by
/// the envelope linearly interpolated to audio rate, peak-normalized to 0.9.
pub fn render(
    track: &FormantTrack,
    envelope: &EnvelopeCurve,
    f0: f64,
    sample_rate: u32,
) -> Result<Waveform, SynthesisError> {
    if track.frames.len() != envelope.gain.len() {
        return Err(SynthesisError::FrameMismatch {
            track: track.frames.len(),
            envelope: envelope.gain.len(),
        });
    }
    let frames = track.frames.len();
    let duration_s = frames as f64 * track.dt / 1000.0;
    let total = (duration_s * sample_rate as f64).round() as usize;
    let excitation = glottal_source(f0, duration_s, sample_rate)?;

    let mut resonators = [
        Resonator::new(),
        Resonator::new(),
        Resonator::new(),
        Resonator::new(),
    ];
    let mut current = FALLBACK_FORMANTS;
    let fs = sample_rate as f64;
    let samples_per_frame = fs * track.dt / 1000.0;

    let mut out = vec![0.0f64; total];
    let mut frame_index = usize::MAX;
    for (n, v) in out.iter_mut().enumerate() {
        let pos = n as f64 / samples_per_frame;
        let fi = (pos as usize).min(frames - 1);
        if fi != frame_index {
            frame_index = fi;
            let fr = &track.frames[fi];
            if fr.valid {
                current = fr.f;
            }
            for (r, (freq, bw)) in resonators
                .iter_mut()
                .zip(current.iter().zip(BANDWIDTHS.iter()))
            {
                r.set(*freq, *bw, fs);
                debug_assert!(r.pole_radius() < 1.0);
            }
        }
        let mut x = excitation[n];
        for r in &mut resonators {
            x = r.step(x);
        }
        // envelope at audio rate, linear between frame centers
        let e = {
            let idx = pos.floor();
            let fr = pos - idx;
            let i0 = (idx as usize).min(frames - 1);
            let i1 = (i0 + 1).min(frames - 1);
            envelope.gain[i0] * (1.0 - fr) + envelope.gain[i1] * fr
        };
        *v = x * e;
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = 0.9 / peak;
        for v in &mut out {
            *v *= scale;
        }
    }
    Ok(Waveform {
        samples: out,
        sample_rate,
    })
}

/// Writes 16-bit little-endian mono PCM RIFF.
pub fn write_wav(waveform: &Waveform, path: &Path) -> Result<(), SynthesisError> {
    let bytes = wav_bytes(waveform);
    fs::write(path, bytes).map_err(|source| SynthesisError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// The WAV file image of a waveform (useful for byte-level determinism
/// checks).
pub fn wav_bytes(waveform: &Waveform) -> Vec<u8> {
    let samples = &waveform.samples;
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&waveform.sample_rate.to_le_bytes());
    out.extend_from_slice(&(waveform.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// Reads back a wav written by [`write_wav`].
pub fn read_wav(path: &Path) -> Result<Waveform, SynthesisError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| SynthesisError::Io {
            path: path.display().to_string(),
            source,
        })?;
    if bytes.len() < 44 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(SynthesisError::BadWav {
            reason: "missing RIFF/WAVE header".into(),
        });
    }
    let channels = u16::from_le_bytes([bytes[22], bytes[23]]);
    let bits = u16::from_le_bytes([bytes[34], bytes[35]]);
    if channels != 1 || bits != 16 {
        return Err(SynthesisError::BadWav {
            reason: format!("{channels} channels, {bits} bits"),
        });
    }
    let sample_rate = u32::from_le_bytes([bytes[24], bytes[25], bytes[26], bytes[27]]);
    let data_len = u32::from_le_bytes([bytes[40], bytes[41], bytes[42], bytes[43]]) as usize;
    let data = &bytes[44..44 + data_len.min(bytes.len() - 44)];
    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32767.0)
        .collect();
    Ok(Waveform {
        samples,
        sample_rate,
    })
}

// keep Write in scope for potential stream writers; fs::write covers files
#[allow(unused)]
fn _assert_write_usable(w: &mut dyn Write) {}
