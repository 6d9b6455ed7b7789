//! Native file formats.
//!
//! * Recording: UTF-8 text. First line `# fs=<Hz> unit=<text> id=<text>`,
//!   then one decimal amplitude per line.
//! * Annotations, detections, segment exports and reports: JSON.
//!
//! All writers go through a temporary file in the destination directory and
//! rename on success, so a failed write never leaves a partial file behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::delineator::{BeatDetection, DetectorConfig};
use crate::error::{Error, Result};

pub const DEFAULT_UNIT: &str = "Ohm/s";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub id: String,
    pub fs: f64,
    pub unit: String,
    pub samples: Vec<f64>,
}

impl Recording {
    pub fn new(id: impl Into<String>, fs: f64, samples: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            fs,
            unit: DEFAULT_UNIT.to_string(),
            samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::InvalidSampleRate(self.fs));
        }
        if self.samples.is_empty() {
            return Err(Error::NoSamples);
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

fn parse_header(line: &str) -> Result<(Option<f64>, Option<String>, Option<String>)> {
    let body = line.trim_start_matches('#').trim();
    let (mut fs, mut unit, mut id) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::MalformedHeader(format!("expected key=value, got {token:?}")))?;
        match key {
            "fs" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::MalformedHeader(format!("bad fs value {value:?}")))?;
                fs = Some(v);
            }
            "unit" => unit = Some(value.to_string()),
            "id" => id = Some(value.to_string()),
            _ => log::debug!("ignoring header key {key:?}"),
        }
    }
    Ok((fs, unit, id))
}

/// Parse the recording text format. `fs_override` wins over the header.
pub fn parse_recording(
    text: &str,
    default_id: &str,
    fs_override: Option<f64>,
) -> Result<Recording> {
    let mut lines = text.lines().enumerate().peekable();
    let (mut fs, mut unit, mut id) = (None, None, None);
    if let Some((_, first)) = lines.peek() {
        if first.trim_start().starts_with('#') {
            (fs, unit, id) = parse_header(first)?;
            lines.next();
        }
    }

    let mut samples = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let row = line.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let v: f64 = row.parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            content: row.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                line: line_no,
                content: row.to_string(),
            });
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }

    let fs = fs_override.or(fs).ok_or(Error::MissingSampleRate)?;
    let rec = Recording {
        id: id.unwrap_or_else(|| default_id.to_string()),
        fs,
        unit: unit.unwrap_or_else(|| DEFAULT_UNIT.to_string()),
        samples,
    };
    rec.validate()?;
    Ok(rec)
}

pub fn load_recording(path: impl AsRef<Path>, fs_override: Option<f64>) -> Result<Recording> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("recording");
    parse_recording(&text, stem, fs_override)
}

pub fn format_recording(rec: &Recording) -> String {
    let mut out = String::with_capacity(rec.samples.len() * 12 + 64);
    let _ = writeln!(out, "# fs={} unit={} id={}", rec.fs, rec.unit, rec.id);
    for v in &rec.samples {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn save_recording(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_recording(rec).as_bytes())
}

/// Write `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    // temp files start owner-only; keep the target's mode or use a normal one
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(path).map_or(0o644, |m| m.permissions().mode());
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(mode))
            .map_err(|e| Error::io(path, e))?;
    }
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Manually labeled fiducial points of one recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub recording_id: String,
    #[serde(default)]
    pub annotator: String,
    pub b_points: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_points: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct RawAnnotationSet {
    recording_id: String,
    #[serde(default)]
    annotator: String,
    b_points: Vec<i64>,
    #[serde(default)]
    c_points: Option<Vec<i64>>,
    #[serde(default)]
    created_at: Option<DateTime<Utc>>,
}

/// Reject negatives and descending steps; collapse repeated neighbours.
/// Returns the cleaned list and the number of dropped duplicates.
fn clean_indices(list: &'static str, raw: &[i64]) -> Result<(Vec<usize>, usize)> {
    let mut out: Vec<usize> = Vec::with_capacity(raw.len());
    let mut dropped = 0;
    for (position, &value) in raw.iter().enumerate() {
        if value < 0 {
            return Err(Error::NegativeIndex {
                list,
                position,
                value,
            });
        }
        if let Some(&prev) = out.last() {
            let prev = prev as i64;
            if value < prev {
                return Err(Error::NotAscending {
                    list,
                    position,
                    previous: prev,
                    current: value,
                });
            }
            if value == prev {
                dropped += 1;
                continue;
            }
        }
        out.push(value as usize);
    }
    Ok((out, dropped))
}

impl AnnotationSet {
    pub fn validate_against(&self, n_samples: usize) -> Result<()> {
        let lists = [
            ("b_points", Some(&self.b_points)),
            ("c_points", self.c_points.as_ref()),
        ];
        for (list, points) in lists {
            if let Some(&index) = points.and_then(|p| p.iter().find(|&&i| i >= n_samples)) {
                return Err(Error::IndexOutOfRange {
                    list,
                    index,
                    len: n_samples,
                });
            }
        }
        Ok(())
    }
}

/// Parse annotation JSON, returning the set and how many duplicate indices
/// were collapsed.
pub fn parse_annotations(text: &str) -> Result<(AnnotationSet, usize)> {
    let raw: RawAnnotationSet = serde_json::from_str(text).map_err(Error::Syntax)?;
    let (b_points, dup_b) = clean_indices("b_points", &raw.b_points)?;
    let (c_points, dup_c) = match raw.c_points.as_deref() {
        Some(c) => {
            let (c, d) = clean_indices("c_points", c)?;
            (Some(c), d)
        }
        None => (None, 0),
    };
    if let Some(c) = &c_points {
        if c.len() != b_points.len() {
            return Err(Error::BeatCountMismatch {
                left: b_points.len(),
                right: c.len(),
            });
        }
    }
    Ok((
        AnnotationSet {
            recording_id: raw.recording_id,
            annotator: raw.annotator,
            b_points,
            c_points,
            created_at: raw.created_at,
        },
        dup_b + dup_c,
    ))
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (set, collapsed) = parse_annotations(&text).map_err(|e| match e {
        Error::Syntax(e) => Error::json(path, e),
        e => e,
    })?;
    if collapsed > 0 {
        log::warn!(
            "{}: collapsed {collapsed} duplicate annotation indices",
            path.display()
        );
    }
    Ok(set)
}

pub fn save_annotations(set: &AnnotationSet, path: impl AsRef<Path>) -> Result<()> {
    write_json(set, path)
}

/// Detector output for one recording plus the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionFile {
    pub recording_id: String,
    pub fs: f64,
    pub beats: Vec<BeatDetection>,
    pub config: DetectorConfig,
}

impl DetectionFile {
    pub fn validate(&self) -> Result<()> {
        for (position, pair) in self.beats.windows(2).enumerate() {
            if pair[1].c_index <= pair[0].c_index {
                return Err(Error::NotAscending {
                    list: "beats.c_index",
                    position: position + 1,
                    previous: pair[0].c_index as i64,
                    current: pair[1].c_index as i64,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        // DetectionFile only holds plain numbers, strings and enums
        serde_json::to_string_pretty(self).expect("detection file serializes")
    }
}

pub fn save_detections(det: &DetectionFile, path: impl AsRef<Path>) -> Result<()> {
    det.validate()?;
    write_json(det, path)
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<DetectionFile> {
    let det: DetectionFile = read_json(path)?;
    det.validate()?;
    Ok(det)
}

/// One annotator view: samples around a C-point. Carries no B-point output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub beat: usize,
    pub c_index: usize,
    /// Absolute index of `samples[0]`.
    pub start: usize,
    /// Exclusive absolute end index.
    pub end: usize,
    /// Set when the requested window ran past either end of the recording.
    pub clipped: bool,
    pub samples: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentFile {
    pub recording_id: String,
    pub fs: f64,
    pub unit: String,
    pub pre_s: f64,
    pub post_s: f64,
    pub segments: Vec<SegmentRecord>,
}

pub fn build_segments(
    rec: &Recording,
    c_points: &[usize],
    pre_s: f64,
    post_s: f64,
) -> Result<SegmentFile> {
    if !(pre_s >= 0.0 && post_s >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "segment window must be non-negative, got pre={pre_s} post={post_s}"
        )));
    }
    let n = rec.samples.len();
    let pre = (pre_s * rec.fs).round() as usize;
    let post = (post_s * rec.fs).round() as usize;
    let segments = c_points
        .iter()
        .enumerate()
        .map(|(beat, &c)| {
            if c >= n {
                return Err(Error::IndexOutOfRange {
                    list: "c_points",
                    index: c,
                    len: n,
                });
            }
            let start = c.saturating_sub(pre);
            let end = (c + post).min(n);
            Ok(SegmentRecord {
                beat,
                c_index: c,
                start,
                end,
                clipped: start + pre != c || end != c + post,
                samples: rec.samples[start..end].to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentFile {
        recording_id: rec.id.clone(),
        fs: rec.fs,
        unit: rec.unit.clone(),
        pre_s,
        post_s,
        segments,
    })
}

/// Write annotator segments for every C-point; returns the segment count.
pub fn export_segments(
    rec: &Recording,
    c_points: &[usize],
    pre_s: f64,
    post_s: f64,
    path: impl AsRef<Path>,
) -> Result<usize> {
    let file = build_segments(rec, c_points, pre_s, post_s)?;
    write_json(&file, path)?;
    Ok(file.segments.len())
}
