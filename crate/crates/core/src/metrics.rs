//! Detector scoring against manual annotations.
//!
//! Beats are paired in order: the k-th usable detection with the k-th
//! annotation. Under that pairing every detection is either a true point
//! (within tolerance) or a failed detection, so MD is always zero.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::delineator::{BeatDetection, DetectionMethod};
use crate::error::{Error, Result};
use crate::io::AnnotationSet;

pub const DEFAULT_TOLERANCES_MS: [f64; 2] = [30.0, 150.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fd: usize,
    pub md: usize,
    /// Detected minus annotated, in milliseconds, one per pair.
    pub errors_ms: Vec<f64>,
}

/// Pair detected and annotated B indices ordinally and count hits.
pub fn match_indices(
    detected: &[usize],
    annotated: &[usize],
    tolerance_ms: f64,
    fs: f64,
) -> Result<MatchResult> {
    if detected.len() != annotated.len() {
        return Err(Error::BeatCountMismatch {
            left: detected.len(),
            right: annotated.len(),
        });
    }
    let errors_ms: Vec<f64> = detected
        .iter()
        .zip(annotated)
        .map(|(&d, &a)| (d as f64 - a as f64) * 1000.0 / fs)
        .collect();
    let tp = errors_ms.iter().filter(|e| e.abs() <= tolerance_ms).count();
    Ok(MatchResult {
        tp,
        fd: errors_ms.len() - tp,
        md: 0,
        errors_ms,
    })
}

/// Skipped beats are left out before pairing.
pub fn match_beats(
    detections: &[BeatDetection],
    ann: &AnnotationSet,
    tolerance_ms: f64,
    fs: f64,
) -> Result<MatchResult> {
    let detected: Vec<usize> = detections.iter().filter_map(|b| b.b_index).collect();
    match_indices(&detected, &ann.b_points, tolerance_ms, fs)
}

pub fn sensitivity(tp: usize, fd: usize) -> Result<f64> {
    if tp + fd == 0 {
        return Err(Error::UndefinedMetric("sensitivity"));
    }
    Ok(100.0 * tp as f64 / (tp + fd) as f64)
}

pub fn positive_predictivity(tp: usize, md: usize) -> Result<f64> {
    if tp + md == 0 {
        return Err(Error::UndefinedMetric("positive predictivity"));
    }
    Ok(100.0 * tp as f64 / (tp + md) as f64)
}

pub fn detection_error(tp: usize, fd: usize, md: usize) -> Result<f64> {
    if tp + fd == 0 {
        return Err(Error::UndefinedMetric("detection error"));
    }
    Ok(100.0 * (fd + md) as f64 / (tp + fd) as f64)
}

/// Scores at one tolerance. `acc` equals sensitivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceScore {
    pub tolerance_ms: f64,
    pub tp: usize,
    pub fd: usize,
    pub md: usize,
    pub acc: f64,
    pub pp: f64,
    pub de: f64,
}

impl ToleranceScore {
    pub fn from_counts(tolerance_ms: f64, tp: usize, fd: usize, md: usize) -> Result<Self> {
        Ok(Self {
            tolerance_ms,
            tp,
            fd,
            md,
            acc: sensitivity(tp, fd)?,
            pp: positive_predictivity(tp, md)?,
            de: detection_error(tp, fd, md)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingEval {
    pub recording_id: String,
    /// Number of manual annotations.
    pub n: usize,
    /// Beats resolved by the fallback rule.
    pub missed: usize,
    pub scores: Vec<ToleranceScore>,
}

impl RecordingEval {
    pub fn score(&self, tolerance_ms: f64) -> Option<&ToleranceScore> {
        self.scores.iter().find(|s| s.tolerance_ms == tolerance_ms)
    }
}

pub fn evaluate_recording(
    detections: &[BeatDetection],
    ann: &AnnotationSet,
    fs: f64,
    tolerances_ms: &[f64],
) -> Result<RecordingEval> {
    let scores = tolerances_ms
        .iter()
        .map(|&tol| {
            let m = match_beats(detections, ann, tol, fs)?;
            ToleranceScore::from_counts(tol, m.tp, m.fd, m.md)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecordingEval {
        recording_id: ann.recording_id.clone(),
        n: ann.b_points.len(),
        missed: detections
            .iter()
            .filter(|b| b.method == DetectionMethod::Fallback)
            .count(),
        scores,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

pub fn mean_sd(values: &[f64]) -> Option<MeanSd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(MeanSd { mean, sd })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSummary {
    pub tolerance_ms: f64,
    pub acc: MeanSd,
    pub pp: MeanSd,
    /// Mean per-recording detection error ("me").
    pub de: MeanSd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub recordings: usize,
    /// Only one recording: every `sd` is a placeholder 0.
    pub singleton: bool,
    pub missed_total: usize,
    pub n_total: usize,
    pub per_tolerance: Vec<ToleranceSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub recordings: Vec<RecordingEval>,
    pub aggregate: Aggregate,
}

/// Mean ± sd across recordings, using the tolerances of the first one.
pub fn aggregate(recordings: Vec<RecordingEval>) -> Result<EvalReport> {
    let first = recordings.first().ok_or(Error::EmptyAggregate)?;
    let tolerances: Vec<f64> = first.scores.iter().map(|s| s.tolerance_ms).collect();
    let mut per_tolerance = Vec::with_capacity(tolerances.len());
    for tol in tolerances {
        let scores = recordings
            .iter()
            .map(|r| {
                r.score(tol).ok_or_else(|| {
                    Error::InvalidConfig(format!("{} has no score at ±{tol} ms", r.recording_id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let column = |f: fn(&ToleranceScore) -> f64| {
            let values: Vec<f64> = scores.iter().map(|s| f(s)).collect();
            mean_sd(&values).expect("non-empty")
        };
        per_tolerance.push(ToleranceSummary {
            tolerance_ms: tol,
            acc: column(|s| s.acc),
            pp: column(|s| s.pp),
            de: column(|s| s.de),
        });
    }
    let aggregate = Aggregate {
        recordings: recordings.len(),
        singleton: recordings.len() == 1,
        missed_total: recordings.iter().map(|r| r.missed).sum(),
        n_total: recordings.iter().map(|r| r.n).sum(),
        per_tolerance,
    };
    Ok(EvalReport {
        recordings,
        aggregate,
    })
}

fn tol_label(tol: f64) -> String {
    if tol.fract() == 0.0 {
        format!("{}", tol as i64)
    } else {
        format!("{tol}")
    }
}

impl EvalReport {
    /// Fixed-width table: one row per recording, then an `All` row with
    /// mean ± sd per metric and sums for Missed and N.
    pub fn render_table(&self) -> String {
        let tols: Vec<f64> = self
            .aggregate
            .per_tolerance
            .iter()
            .map(|t| t.tolerance_ms)
            .collect();
        let id_width = self
            .recordings
            .iter()
            .map(|r| r.recording_id.len())
            .chain(["ID".len(), "All".len()])
            .max()
            .unwrap_or(3);
        const COL: usize = 16;

        let mut out = String::new();
        let _ = write!(out, "{:<id_width$}", "ID");
        for prefix in ["Acc", "DE"] {
            for &t in &tols {
                let _ = write!(out, " {:>COL$}", format!("{prefix}{} [%]", tol_label(t)));
            }
        }
        let _ = writeln!(out, " {:>12} {:>12}", "Missed", "N");

        for r in &self.recordings {
            let _ = write!(out, "{:<id_width$}", r.recording_id);
            for pick in [|s: &ToleranceScore| s.acc, |s: &ToleranceScore| s.de] {
                for &t in &tols {
                    let cell = r
                        .score(t)
                        .map(|s| format!("{:.2}", pick(s)))
                        .unwrap_or_else(|| "-".into());
                    let _ = write!(out, " {cell:>COL$}");
                }
            }
            let _ = writeln!(out, " {:>12} {:>12}", r.missed, r.n);
        }

        let _ = write!(out, "{:<id_width$}", "All");
        for pick in [|s: &ToleranceSummary| s.acc, |s: &ToleranceSummary| s.de] {
            for summary in &self.aggregate.per_tolerance {
                let m = pick(summary);
                let _ = write!(out, " {:>COL$}", format!("{:.2} ± {:.2}", m.mean, m.sd));
            }
        }
        let _ = writeln!(
            out,
            " {:>12} {:>12}",
            format!("{} (sum)", self.aggregate.missed_total),
            format!("{} (sum)", self.aggregate.n_total)
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beats(b: &[usize]) -> Vec<BeatDetection> {
        b.iter()
            .map(|&i| BeatDetection {
                c_index: i + 100,
                b_index: Some(i),
                method: DetectionMethod::Mb,
                transformed_peaks: None,
            })
            .collect()
    }

    fn ann(b: &[usize]) -> AnnotationSet {
        AnnotationSet {
            recording_id: "r".into(),
            annotator: "t".into(),
            b_points: b.to_vec(),
            c_points: None,
            created_at: None,
        }
    }

    #[test]
    fn formula_examples() {
        assert_eq!(sensitivity(95, 5).unwrap(), 95.0);
        assert_eq!(sensitivity(100, 0).unwrap(), 100.0);
        assert_eq!(sensitivity(0, 10).unwrap(), 0.0);
        assert!(sensitivity(0, 0).is_err());
        assert_eq!(positive_predictivity(95, 0).unwrap(), 100.0);
        assert_eq!(positive_predictivity(90, 10).unwrap(), 90.0);
        assert!(positive_predictivity(0, 0).is_err());
        assert_eq!(detection_error(95, 5, 0).unwrap(), 5.0);
        assert_eq!(detection_error(100, 0, 0).unwrap(), 0.0);
        assert!(detection_error(0, 0, 3).is_err());
    }

    #[test]
    fn counting_95_of_100() {
        let ann_b: Vec<usize> = (0..100).map(|i| 1000 + i * 2000).collect();
        // 5 beats off by 40 ms (80 samples at 2 kHz)
        let det_b: Vec<usize> = ann_b
            .iter()
            .enumerate()
            .map(|(i, &a)| if i % 20 == 0 { a + 80 } else { a + 10 })
            .collect();
        let m = match_beats(&beats(&det_b), &ann(&ann_b), 30.0, 2000.0).unwrap();
        assert_eq!((m.tp, m.fd, m.md), (95, 5, 0));
        assert_eq!(m.errors_ms.len(), 100);
    }

    #[test]
    fn identity_and_shift() {
        let b: Vec<usize> = (1..=40).map(|i| i * 1700).collect();
        let m = match_beats(&beats(&b), &ann(&b), 30.0, 2000.0).unwrap();
        assert_eq!((m.tp, m.fd), (40, 0));
        let shifted: Vec<usize> = b.iter().map(|i| i + 200).collect();
        let m30 = match_beats(&beats(&shifted), &ann(&b), 30.0, 2000.0).unwrap();
        let m150 = match_beats(&beats(&shifted), &ann(&b), 150.0, 2000.0).unwrap();
        assert_eq!((m30.tp, m150.tp), (0, 40));
    }

    #[test]
    fn skipped_beats_are_excluded() {
        let mut d = beats(&[1000, 3000]);
        d.insert(
            0,
            BeatDetection {
                c_index: 200,
                b_index: None,
                method: DetectionMethod::Skipped,
                transformed_peaks: None,
            },
        );
        let m = match_beats(&d, &ann(&[1000, 3000]), 30.0, 2000.0).unwrap();
        assert_eq!(m.tp, 2);
        let err = match_beats(&d, &ann(&[1000]), 30.0, 2000.0).unwrap_err();
        assert!(err.to_string().contains("beat count mismatch"));
    }

    #[test]
    fn singleton_aggregate() {
        let r = RecordingEval {
            recording_id: "IDN1".into(),
            n: 1405,
            missed: 71,
            scores: vec![ToleranceScore::from_counts(150.0, 1398, 7, 0).unwrap()],
        };
        let rep = aggregate(vec![r]).unwrap();
        let s = &rep.aggregate.per_tolerance[0];
        assert!((s.acc.mean - 99.50).abs() < 0.005);
        assert_eq!(s.acc.sd, 0.0);
        assert!(rep.aggregate.singleton);
        assert!(matches!(aggregate(vec![]), Err(Error::EmptyAggregate)));
    }

    #[test]
    fn table_layout() {
        let b: Vec<usize> = (1..=10).map(|i| i * 1700).collect();
        let r = evaluate_recording(&beats(&b), &ann(&b), 2000.0, &DEFAULT_TOLERANCES_MS).unwrap();
        let table = aggregate(vec![r]).unwrap().render_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("Acc30 [%]") && lines[0].contains("DE150 [%]"));
        assert!(lines[1].starts_with("r "));
        assert!(lines[1].contains("100.00") && lines[1].contains("0.00"));
        assert!(lines[2].starts_with("All") && lines[2].contains("10 (sum)"));
    }
}
