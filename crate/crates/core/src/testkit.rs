//! Synthetic ICG with exact B/C ground truth.
//!
//! Each beat is stitched from raised-cosine pieces that meet with zero slope,
//! so extrema sit exactly on the knots:
//!
//! ```text
//!   A-wave hump -> descent into the B notch -> upstroke to C -> fall to X -> recovery
//! ```
//!
//! The B-point is the bottom of the notch, `b_to_c_ms` before the C peak.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{AnnotationSet, Recording};

/// Highest rate a 350 ms C-point spacing can resolve.
pub const MAX_HEART_RATE_BPM: f64 = 60.0 / 0.35;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub fs: f64,
    pub n_beats: usize,
    pub heart_rate_bpm: f64,
    pub b_to_c_ms: f64,
    /// Notch depth below baseline as a fraction of `c_amplitude`.
    pub notch_depth: f64,
    pub c_amplitude: f64,
    /// Standard deviation of additive white Gaussian noise, signal units.
    pub noise_rms: f64,
    /// Uniform beat-interval jitter, percent of the nominal interval.
    pub rr_jitter_pct: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            fs: 2000.0,
            n_beats: 60,
            heart_rate_bpm: 72.0,
            b_to_c_ms: 60.0,
            notch_depth: 0.15,
            c_amplitude: 1.0,
            noise_rms: 0.0,
            rr_jitter_pct: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSynthSpec(m));
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return fail(format!("fs must be positive, got {}", self.fs));
        }
        if self.n_beats == 0 {
            return fail("n_beats must be at least 1".into());
        }
        if !(self.heart_rate_bpm > 0.0 && self.heart_rate_bpm < MAX_HEART_RATE_BPM) {
            return fail(format!(
                "heart rate must be in (0, {MAX_HEART_RATE_BPM:.1}) bpm, got {}",
                self.heart_rate_bpm
            ));
        }
        if !(self.b_to_c_ms > 0.0 && self.b_to_c_ms < 250.0) {
            return fail(format!(
                "b_to_c_ms must be in (0, 250), got {}",
                self.b_to_c_ms
            ));
        }
        if !(self.notch_depth > 0.0 && self.c_amplitude > 0.0) {
            return fail("notch_depth and c_amplitude must be positive".into());
        }
        if !(self.noise_rms >= 0.0 && self.noise_rms.is_finite()) {
            return fail(format!("noise_rms must be >= 0, got {}", self.noise_rms));
        }
        if !(0.0..50.0).contains(&self.rr_jitter_pct) {
            return fail(format!(
                "rr_jitter_pct must be in [0, 50), got {}",
                self.rr_jitter_pct
            ));
        }
        Ok(())
    }
}

/// Rises 0 -> 1 over `u` in [0, 1] with zero slope at both ends.
fn ease(u: f64) -> f64 {
    (1.0 - (PI * u).cos()) / 2.0
}

struct BeatShape {
    amplitude: f64,
    notch: f64,
    a_wave: f64,
    x_depth: f64,
    a_len: f64,
    descent: f64,
    upstroke: f64,
    fall: f64,
    recovery: f64,
}

impl BeatShape {
    fn new(spec: &SynthSpec, rr: f64) -> Self {
        let a = spec.c_amplitude;
        Self {
            amplitude: a,
            notch: spec.notch_depth * a,
            a_wave: 0.1 * a,
            x_depth: 0.35 * a,
            a_len: 0.06,
            descent: 0.04,
            upstroke: spec.b_to_c_ms / 1000.0,
            fall: 0.28 * rr,
            recovery: 0.17 * rr,
        }
    }

    fn support(&self) -> (f64, f64) {
        (
            -(self.upstroke + self.descent + self.a_len),
            self.fall + self.recovery,
        )
    }

    /// Amplitude at time `t` seconds relative to the C peak.
    fn value(&self, t: f64) -> f64 {
        let b = -self.upstroke;
        let d0 = b - self.descent;
        let a0 = d0 - self.a_len;
        if t < a0 {
            0.0
        } else if t < d0 {
            self.a_wave * (PI * (t - a0) / self.a_len).sin().powi(2)
        } else if t < b {
            -self.notch * ease((t - d0) / self.descent)
        } else if t < 0.0 {
            -self.notch + (self.amplitude + self.notch) * ease((t - b) / self.upstroke)
        } else if t < self.fall {
            self.amplitude - (self.amplitude + self.x_depth) * ease(t / self.fall)
        } else if t < self.fall + self.recovery {
            -self.x_depth * (1.0 - ease((t - self.fall) / self.recovery))
        } else {
            0.0
        }
    }
}

/// Synthesize a recording and its exact ground-truth annotations.
pub fn synthesize_icg(spec: &SynthSpec) -> Result<(Recording, AnnotationSet)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nominal_rr = 60.0 / spec.heart_rate_bpm;
    let jitter = spec.rr_jitter_pct / 100.0;
    let b_offset = (spec.b_to_c_ms * spec.fs / 1000.0).round() as usize;

    // C sits mid-slot; slots are laid end to end
    let mut slot_start = 0.0;
    let mut beats = Vec::with_capacity(spec.n_beats);
    for _ in 0..spec.n_beats {
        let rr = if jitter > 0.0 {
            nominal_rr * (1.0 + rng.random_range(-jitter..=jitter))
        } else {
            nominal_rr
        };
        let c_index = ((slot_start + 0.5 * rr) * spec.fs).round() as usize;
        beats.push((c_index, BeatShape::new(spec, rr)));
        slot_start += rr;
    }
    let len = (slot_start * spec.fs).round() as usize;

    let mut samples = vec![0.0; len];
    for (c_index, shape) in &beats {
        let (lo, hi) = shape.support();
        let first = (*c_index as f64 + lo * spec.fs).floor().max(0.0) as usize;
        let last = ((*c_index as f64 + hi * spec.fs).ceil() as usize).min(len.saturating_sub(1));
        for (i, s) in samples.iter_mut().enumerate().take(last + 1).skip(first) {
            *s += shape.value((i as f64 - *c_index as f64) / spec.fs);
        }
    }
    if spec.noise_rms > 0.0 {
        let normal =
            Normal::new(0.0, spec.noise_rms).map_err(|e| Error::InvalidSynthSpec(e.to_string()))?;
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }

    let c_points: Vec<usize> = beats.iter().map(|(c, _)| *c).collect();
    let b_points: Vec<usize> = c_points.iter().map(|c| c - b_offset).collect();
    let id = format!("synth-{}", spec.seed);
    let truth = AnnotationSet {
        recording_id: id.clone(),
        annotator: "synthetic".into(),
        b_points,
        c_points: Some(c_points),
        created_at: None,
    };
    Ok((Recording::new(id, spec.fs, samples), truth))
}

/// Non-negative profile with strict maxima at `first_peak` and
/// `second_peak` and a unique minimum between them at `valley`.
pub fn bimodal_profile(
    len: usize,
    first_peak: usize,
    valley: usize,
    second_peak: usize,
) -> Vec<f64> {
    assert!(0 < first_peak && first_peak < valley && valley < second_peak && second_peak + 1 < len);
    let piece = |i: usize, from: usize, to: usize, v0: f64, v1: f64| {
        v0 + (v1 - v0) * ease((i - from) as f64 / (to - from) as f64)
    };
    (0..len)
        .map(|i| {
            if i <= first_peak {
                piece(i, 0, first_peak, 0.2, 1.0)
            } else if i <= valley {
                piece(i, first_peak, valley, 1.0, 0.1)
            } else if i <= second_peak {
                piece(i, valley, second_peak, 0.1, 0.8)
            } else {
                piece(i, second_peak, len - 1, 0.8, 0.2)
            }
        })
        .collect()
}
