//! C-point detection and weighted-window B-point localization.
//!
//! Per beat, the filtered ICG segment preceding the C-point is shifted so its
//! minimum is zero, multiplied by a piecewise-linear weight window and
//! squared. When the transformed segment shows exactly two admissible peaks,
//! the B-point is the valley between them (the "MB-point"); otherwise it is
//! the latest sample of the untransformed segment lying within an amplitude
//! band `[-eps, eps]` around the segment minimum.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{design_bandpass, filtfilt, BandSettings};
use crate::io::Recording;
use crate::peaks::{find_peaks, PeakConstraints};

/// Width of the amplitude band searched by the fallback rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonBand {
    /// Fraction of the segment peak-to-peak amplitude.
    Relative { fraction: f64 },
    /// Same unit as the recording.
    Absolute { value: f64 },
}

impl EpsilonBand {
    pub fn resolve(&self, h: f64) -> f64 {
        match *self {
            EpsilonBand::Relative { fraction } => fraction * h,
            EpsilonBand::Absolute { value } => value,
        }
    }
}

/// Where the descending ramp of the weight window sits inside the segment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampGeometry {
    /// Ramp from `h` at the segment start to zero at the segment minimum,
    /// `-alpha` afterwards.
    #[default]
    StartToMinimum,
    /// Ramp from `h` at the segment minimum to zero at the segment maximum,
    /// `-alpha` outside.
    MinimumToMaximum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub pre_c_window_ms: f64,
    pub c_min_distance_ms: f64,
    pub c_threshold_std_fraction: f64,
    pub alpha: f64,
    pub mb_min_peak_distance_ms: f64,
    pub mb_threshold_divisor: f64,
    pub epsilon: EpsilonBand,
    pub ramp: RampGeometry,
    pub filter: BandSettings,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            pre_c_window_ms: 250.0,
            c_min_distance_ms: 350.0,
            c_threshold_std_fraction: 0.8,
            alpha: 0.1,
            mb_min_peak_distance_ms: 50.0,
            mb_threshold_divisor: 2000.0,
            epsilon: EpsilonBand::Relative { fraction: 0.05 },
            ramp: RampGeometry::default(),
            filter: BandSettings::default(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pre_c_window_ms", self.pre_c_window_ms),
            ("c_min_distance_ms", self.c_min_distance_ms),
            ("c_threshold_std_fraction", self.c_threshold_std_fraction),
            ("alpha", self.alpha),
            ("mb_min_peak_distance_ms", self.mb_min_peak_distance_ms),
            ("mb_threshold_divisor", self.mb_threshold_divisor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        let eps = match self.epsilon {
            EpsilonBand::Relative { fraction } => fraction,
            EpsilonBand::Absolute { value } => value,
        };
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be > 0, got {eps}"
            )));
        }
        Ok(())
    }
}

/// Milliseconds to samples, rounding half away from zero.
pub fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round() as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMethod {
    /// Valley between two peaks of the transformed segment.
    Mb,
    /// Amplitude-band rule on the untransformed segment.
    Fallback,
    /// No usable segment before this C-point.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatDetection {
    pub c_index: usize,
    /// Absent exactly when `method` is `Skipped`.
    pub b_index: Option<usize>,
    pub method: DetectionMethod,
    /// Segment-local indices of the two transformed-segment peaks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformed_peaks: Option<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkipReason {
    InsufficientHistory,
    Flat,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::InsufficientHistory => f.write_str("not enough samples before the C-point"),
            SkipReason::Flat => f.write_str("segment has zero peak-to-peak amplitude"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start_index: usize,
    pub raw: Vec<f64>,
    pub shifted: Vec<f64>,
    /// Peak-to-peak amplitude of `raw`.
    pub h: f64,
    pub argmin: usize,
    pub argmax: usize,
}

impl Segment {
    pub fn from_raw(start_index: usize, raw: Vec<f64>) -> Option<Self> {
        if raw.is_empty() {
            return None;
        }
        let (mut argmin, mut argmax) = (0, 0);
        for (i, &v) in raw.iter().enumerate() {
            if v < raw[argmin] {
                argmin = i;
            }
            if v > raw[argmax] {
                argmax = i;
            }
        }
        let (lo, hi) = (raw[argmin], raw[argmax]);
        let shifted = raw.iter().map(|v| v - lo).collect();
        Some(Self {
            start_index,
            raw,
            shifted,
            h: hi - lo,
            argmin,
            argmax,
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Band-pass the recording with the configured zero-phase filter.
pub fn preprocess(rec: &Recording, cfg: &DetectorConfig) -> Result<Vec<f64>> {
    let coeffs = design_bandpass(&cfg.filter.at(rec.fs))?;
    filtfilt(&coeffs, &rec.samples)
}

pub fn detect_c_points(filtered: &[f64], fs: f64, cfg: &DetectorConfig) -> Result<Vec<usize>> {
    let min_distance = ms_to_samples(cfg.c_min_distance_ms, fs);
    if filtered.len() <= min_distance {
        return Err(Error::RecordingTooShort {
            len: filtered.len(),
            window: min_distance,
        });
    }
    let threshold = cfg.c_threshold_std_fraction * sample_std(filtered);
    Ok(find_peaks(
        filtered,
        &PeakConstraints::new(min_distance, threshold),
    ))
}

/// The `pre_c_window_ms` of filtered signal ending just before `c_index`.
pub fn extract_segment(
    filtered: &[f64],
    c_index: usize,
    fs: f64,
    cfg: &DetectorConfig,
) -> Result<Segment, SkipReason> {
    let width = ms_to_samples(cfg.pre_c_window_ms, fs);
    if width == 0 || c_index < width || c_index > filtered.len() {
        return Err(SkipReason::InsufficientHistory);
    }
    let start = c_index - width;
    let seg = Segment::from_raw(start, filtered[start..c_index].to_vec())
        .ok_or(SkipReason::InsufficientHistory)?;
    if seg.h > 0.0 {
        Ok(seg)
    } else {
        Err(SkipReason::Flat)
    }
}

/// Weight window for `seg`, or `None` when the ramp would be degenerate
/// (zero-length, or leaving no room for the constant `-alpha` part).
pub fn build_weight_window(seg: &Segment, alpha: f64, geometry: RampGeometry) -> Option<Vec<f64>> {
    let len = seg.len();
    let h = seg.h;
    if h.is_nan() || h <= 0.0 || len < 2 {
        return None;
    }
    let (ramp_start, ramp_stop) = match geometry {
        RampGeometry::StartToMinimum => (0, seg.argmin),
        RampGeometry::MinimumToMaximum => (seg.argmin, seg.argmax),
    };
    if ramp_stop <= ramp_start || (ramp_start == 0 && ramp_stop == len - 1) {
        return None;
    }
    let slope = h / (ramp_stop - ramp_start) as f64;
    Some(
        (0..len)
            .map(|n| {
                if (ramp_start..=ramp_stop).contains(&n) {
                    h - slope * (n - ramp_start) as f64
                } else {
                    -alpha
                }
            })
            .collect(),
    )
}

/// Element-wise `(shifted * w)^2`.
pub fn transform_segment(shifted: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(shifted.len(), w.len(), "segment and window lengths differ");
    shifted
        .iter()
        .zip(w)
        .map(|(s, w)| {
            let v = s * w;
            v * v
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MbPoint {
    pub index: usize,
    pub peaks: (usize, usize),
}

/// Valley between the two admissible peaks of `t`, if there are exactly two.
pub fn locate_mb_point(t: &[f64], cfg: &DetectorConfig, fs: f64) -> Option<MbPoint> {
    let max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let constraints = PeakConstraints::new(
        ms_to_samples(cfg.mb_min_peak_distance_ms, fs),
        max / cfg.mb_threshold_divisor,
    );
    let peaks = find_peaks(t, &constraints);
    let &[p1, p2] = peaks.as_slice() else {
        return None;
    };
    let mut best: Option<usize> = None;
    for i in p1 + 1..p2 {
        if best.is_none_or(|b| t[i] < t[b]) {
            best = Some(i);
        }
    }
    best.map(|index| MbPoint {
        index,
        peaks: (p1, p2),
    })
}

/// Latest local index whose shifted amplitude lies within `eps` of zero,
/// stepping back once if that is the final sample of the segment.
pub fn fallback_b_point(seg: &Segment, epsilon: &EpsilonBand) -> usize {
    let eps = epsilon.resolve(seg.h);
    let mut within = seg
        .shifted
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, v)| v.abs() <= eps)
        .map(|(i, _)| i);
    match within.next() {
        Some(last) if last + 1 == seg.len() => within.next().unwrap_or(last),
        Some(last) => last,
        None => seg.argmin,
    }
}

/// Everything computed for one beat, for inspection and plotting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeatTrace {
    pub detection: BeatDetection,
    pub segment_start: Option<usize>,
    pub shifted: Vec<f64>,
    pub window: Option<Vec<f64>>,
    pub transformed: Option<Vec<f64>>,
}

pub fn trace_beat(filtered: &[f64], c_index: usize, fs: f64, cfg: &DetectorConfig) -> BeatTrace {
    let seg = match extract_segment(filtered, c_index, fs, cfg) {
        Ok(seg) => seg,
        Err(_) => {
            return BeatTrace {
                detection: BeatDetection {
                    c_index,
                    b_index: None,
                    method: DetectionMethod::Skipped,
                    transformed_peaks: None,
                },
                segment_start: None,
                shifted: Vec::new(),
                window: None,
                transformed: None,
            }
        }
    };
    let window = build_weight_window(&seg, cfg.alpha, cfg.ramp);
    let transformed = window.as_ref().map(|w| transform_segment(&seg.shifted, w));
    let mb = transformed
        .as_ref()
        .and_then(|t| locate_mb_point(t, cfg, fs));
    let detection = match mb {
        Some(mb) => BeatDetection {
            c_index,
            b_index: Some(seg.start_index + mb.index),
            method: DetectionMethod::Mb,
            transformed_peaks: Some(mb.peaks),
        },
        None => BeatDetection {
            c_index,
            b_index: Some(seg.start_index + fallback_b_point(&seg, &cfg.epsilon)),
            method: DetectionMethod::Fallback,
            transformed_peaks: None,
        },
    };
    BeatTrace {
        detection,
        segment_start: Some(seg.start_index),
        shifted: seg.shifted,
        window,
        transformed,
    }
}

pub fn delineate_beat(
    filtered: &[f64],
    c_index: usize,
    fs: f64,
    cfg: &DetectorConfig,
) -> BeatDetection {
    trace_beat(filtered, c_index, fs, cfg).detection
}

/// Filtered signal together with the per-beat results.
#[derive(Clone, Debug)]
pub struct Delineation {
    pub filtered: Vec<f64>,
    pub beats: Vec<BeatDetection>,
}

impl Delineation {
    pub fn c_points(&self) -> Vec<usize> {
        self.beats.iter().map(|b| b.c_index).collect()
    }

    /// Beats resolved by the fallback rule.
    pub fn missed(&self) -> usize {
        count_method(&self.beats, DetectionMethod::Fallback)
    }
}

pub fn count_method(beats: &[BeatDetection], method: DetectionMethod) -> usize {
    beats.iter().filter(|b| b.method == method).count()
}

pub fn delineate(rec: &Recording, cfg: &DetectorConfig) -> Result<Delineation> {
    cfg.validate()?;
    rec.validate()?;
    let filtered = preprocess(rec, cfg)?;
    let beats = detect_c_points(&filtered, rec.fs, cfg)?
        .into_iter()
        .map(|c| delineate_beat(&filtered, c, rec.fs, cfg))
        .collect();
    Ok(Delineation { filtered, beats })
}

/// Full pipeline on an unfiltered recording, one entry per detected C-point.
pub fn detect_b_points(rec: &Recording, cfg: &DetectorConfig) -> Result<Vec<BeatDetection>> {
    delineate(rec, cfg).map(|d| d.beats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(raw: &[f64]) -> Segment {
        Segment::from_raw(0, raw.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn rate_bound_of_min_distance() {
        assert_eq!(ms_to_samples(350.0, 2000.0), 700);
        assert!((60.0 / 0.35 - 171.4f64).abs() < 0.05);
        assert_eq!(ms_to_samples(0.25, 2000.0), 1);
        assert_eq!(ms_to_samples(0.24, 2000.0), 0);
    }

    #[test]
    fn segment_fields() {
        let s = seg(&[3.0, 1.0, 0.0, 2.0, 5.0]);
        assert_eq!((s.h, s.argmin, s.argmax), (5.0, 2, 4));
        assert_eq!(s.shifted, vec![3.0, 1.0, 0.0, 2.0, 5.0]);
        let s = seg(&[1.0, -1.0, -1.0, 4.0, 4.0]);
        assert_eq!((s.argmin, s.argmax), (1, 3));
        assert_eq!(s.shifted, vec![2.0, 0.0, 0.0, 5.0, 5.0]);
    }

    #[test]
    fn extract_bounds() {
        let cfg = DetectorConfig::default();
        let x: Vec<f64> = (0..6000).map(|i| (i as f64 * 0.01).sin()).collect();
        let s = extract_segment(&x, 5000, 2000.0, &cfg).unwrap();
        assert_eq!(s.start_index, 4500);
        assert_eq!(s.len(), 500);
        assert_eq!(s.raw[0], x[4500]);
        assert_eq!(*s.raw.last().unwrap(), x[4999]);
        assert_eq!(
            extract_segment(&x, 300, 2000.0, &cfg),
            Err(SkipReason::InsufficientHistory)
        );
        assert_eq!(
            extract_segment(&[1.0; 1000], 800, 2000.0, &cfg),
            Err(SkipReason::Flat)
        );
    }

    #[test]
    fn window_example() {
        let w = build_weight_window(
            &seg(&[3.0, 1.0, 0.0, 2.0, 5.0]),
            0.1,
            RampGeometry::StartToMinimum,
        )
        .unwrap();
        assert_close(&w, &[5.0, 2.5, 0.0, -0.1, -0.1]);
        let w2 = build_weight_window(
            &seg(&[3.0, 1.0, 0.0, 2.0, 5.0]),
            0.1,
            RampGeometry::MinimumToMaximum,
        )
        .unwrap();
        assert_close(&w2, &[-0.1, -0.1, 5.0, 2.5, 0.0]);
    }

    #[test]
    fn degenerate_windows() {
        let at_start = seg(&[0.0, 1.0, 2.0, 3.0]);
        assert!(build_weight_window(&at_start, 0.1, RampGeometry::StartToMinimum).is_none());
        // minimum on the last sample leaves no -alpha region
        let at_end = seg(&[3.0, 2.0, 1.0, 0.0]);
        assert!(build_weight_window(&at_end, 0.1, RampGeometry::StartToMinimum).is_none());
        // maximum before minimum: no upward trend
        let falling = seg(&[1.0, 3.0, 2.0, 0.0, 0.5]);
        assert!(build_weight_window(&falling, 0.1, RampGeometry::MinimumToMaximum).is_none());
    }

    #[test]
    fn transform_example() {
        let t = transform_segment(&[3.0, 1.0, 0.0, 2.0, 5.0], &[5.0, 2.5, 0.0, -0.1, -0.1]);
        assert_close(&t, &[225.0, 6.25, 0.0, 0.04, 0.25]);
        assert!(transform_segment(&[1.0, 2.0], &[0.0, 0.0])
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn transform_scales_quadratically() {
        let s = [0.3, 1.7, 0.0, 2.2, 0.9];
        let w = [4.0, 2.0, 0.0, -0.1, -0.1];
        let base = transform_segment(&s, &w);
        let scaled: Vec<f64> = s.iter().map(|v| v * 3.0).collect();
        let t = transform_segment(&scaled, &w);
        for (a, b) in base.iter().zip(&t) {
            assert!((b - 9.0 * a).abs() < 1e-12);
        }
    }

    fn bump_train(len: usize, centers: &[(usize, f64)]) -> Vec<f64> {
        (0..len)
            .map(|i| {
                centers
                    .iter()
                    .map(|&(c, a)| a * (-((i as f64 - c as f64) / 15.0).powi(2)).exp())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn mb_requires_exactly_two_peaks() {
        let cfg = DetectorConfig::default();
        let one = bump_train(500, &[(250, 1.0)]);
        assert_eq!(locate_mb_point(&one, &cfg, 2000.0), None);
        let three = bump_train(500, &[(60, 1.0), (250, 1.0), (440, 1.0)]);
        assert_eq!(locate_mb_point(&three, &cfg, 2000.0), None);
        let two = bump_train(500, &[(100, 1.0), (400, 0.5)]);
        let mb = locate_mb_point(&two, &cfg, 2000.0).unwrap();
        assert_eq!(mb.peaks, (100, 400));
        assert!(mb.index > 100 && mb.index < 400);
    }

    #[test]
    fn mb_threshold_drops_small_peaks() {
        let cfg = DetectorConfig::default();
        // third bump below max/2000 does not count
        let t = bump_train(500, &[(60, 1.0), (250, 1.0), (440, 1e-4)]);
        assert_eq!(locate_mb_point(&t, &cfg, 2000.0).unwrap().peaks, (60, 250));
    }

    #[test]
    fn fallback_examples() {
        let s = Segment {
            start_index: 0,
            raw: vec![0.5, 0.0, 0.01, 0.8, 2.0],
            shifted: vec![0.5, 0.0, 0.01, 0.8, 2.0],
            h: 2.0,
            argmin: 1,
            argmax: 4,
        };
        assert_eq!(
            fallback_b_point(&s, &EpsilonBand::Relative { fraction: 0.05 }),
            2
        );

        let unique = seg(&[4.0, 3.0, 0.0, 2.0, 5.0]);
        assert_eq!(
            fallback_b_point(&unique, &EpsilonBand::Relative { fraction: 0.05 }),
            2
        );

        let saturated = seg(&[4.0, 3.0, 0.0, 2.0, 5.0]);
        assert_eq!(
            fallback_b_point(&saturated, &EpsilonBand::Relative { fraction: 2.0 }),
            3
        );

        assert_eq!(
            fallback_b_point(&unique, &EpsilonBand::Absolute { value: 2.5 }),
            3
        );
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        let bad = DetectorConfig {
            alpha: 0.0,
            ..DetectorConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = DetectorConfig {
            epsilon: EpsilonBand::Absolute { value: -1.0 },
            ..DetectorConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn c_points_on_flat_signal() {
        let cfg = DetectorConfig::default();
        assert!(detect_c_points(&vec![0.0; 5000], 2000.0, &cfg)
            .unwrap()
            .is_empty());
        assert!(matches!(
            detect_c_points(&[0.0; 700], 2000.0, &cfg),
            Err(Error::RecordingTooShort {
                len: 700,
                window: 700
            })
        ));
    }
}
