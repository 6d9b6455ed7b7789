//! B-point delineation in impedance cardiograms (ICG).
//!
//! The pipeline band-passes the recording with a zero-phase Butterworth
//! filter, finds C-points as spaced local maxima above a fraction of the
//! signal's standard deviation, and locates each B-point inside the window
//! preceding its C-point with a weighted time window transform, falling back
//! to an amplitude-band rule when the transform is inconclusive.
//!
//! ```
//! use icg_bpoint::{detect_b_points, synthesize_icg, DetectorConfig, SynthSpec};
//!
//! let (rec, truth) = synthesize_icg(&SynthSpec { n_beats: 8, ..SynthSpec::default() }).unwrap();
//! let beats = detect_b_points(&rec, &DetectorConfig::default()).unwrap();
//! assert_eq!(beats.len(), truth.b_points.len());
//! ```

pub mod delineator;
pub mod error;
pub mod filter;
pub mod io;
pub mod metrics;
pub mod peaks;
pub mod testkit;

pub use delineator::{
    delineate, detect_b_points, detect_c_points, BeatDetection, Delineation, DetectionMethod,
    DetectorConfig, EpsilonBand, RampGeometry, Segment,
};
pub use error::{Error, Result};
pub use filter::{design_bandpass, filtfilt, BandSettings, FilterCoefficients, FilterSpec};
pub use io::{AnnotationSet, DetectionFile, Recording, SegmentFile};
pub use metrics::{aggregate, evaluate_recording, EvalReport, MatchResult, RecordingEval};
pub use peaks::{find_peaks, PeakConstraints};
pub use testkit::{synthesize_icg, SynthSpec};
