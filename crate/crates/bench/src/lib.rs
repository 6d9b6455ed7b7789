//! Shared inputs for the benchmarks.

use icg_bpoint::{synthesize_icg, Recording, SynthSpec};

/// One minute of noisy synthetic ICG at 2 kHz.
pub fn minute_recording() -> Recording {
    let spec = SynthSpec {
        n_beats: 72,
        noise_rms: 0.03,
        rr_jitter_pct: 5.0,
        seed: 1,
        ..SynthSpec::default()
    };
    synthesize_icg(&spec).expect("valid spec").0
}
