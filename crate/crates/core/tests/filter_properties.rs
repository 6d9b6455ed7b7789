use icg_bpoint::filter::sosfilt;
use icg_bpoint::{design_bandpass, filtfilt, BandSettings, FilterCoefficients};
use proptest::prelude::*;
use std::f64::consts::PI;

const FS: f64 = 2000.0;

fn coeffs() -> FilterCoefficients {
    design_bandpass(&BandSettings::default().at(FS)).unwrap()
}

fn sine(freq: f64, phase: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (2.0 * PI * freq * i as f64 / FS + phase).sin())
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn interior(x: &[f64]) -> &[f64] {
    &x[x.len() / 20..x.len() - x.len() / 20]
}

fn lock_in(x: &[f64], freq: f64, from: usize, to: usize) -> (f64, f64) {
    let n = (to - from) as f64;
    (from..to).fold((0.0, 0.0), |(s, c), i| {
        let arg = 2.0 * PI * freq * i as f64 / FS;
        (s + x[i] * arg.sin() / n, c + x[i] * arg.cos() / n)
    })
}

fn amplitude_at(x: &[f64], freq: f64, from: usize, to: usize) -> f64 {
    let (s, c) = lock_in(x, freq, from, to);
    2.0 * s.hypot(c)
}

fn phase_of(x: &[f64], freq: f64, from: usize, to: usize) -> f64 {
    let (s, c) = lock_in(x, freq, from, to);
    c.atan2(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_on_interior(
        x in prop::collection::vec(-10.0..10.0f64, 400..3000),
        a in -5.0..5.0f64,
        b in -5.0..5.0f64,
        seed in 0..1000u32,
    ) {
        let c = coeffs();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v * 0.7 + (i as u32 ^ seed) as f64 * 1e-3).sin()).collect();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let fx = filtfilt(&c, &x).unwrap();
        let fy = filtfilt(&c, &y).unwrap();
        let fc = filtfilt(&c, &combo).unwrap();
        let expected: Vec<f64> = fx.iter().zip(&fy).map(|(p, q)| a * p + b * q).collect();
        let scale = 1.0 + rms(&expected);
        for (got, want) in interior(&fc).iter().zip(interior(&expected)) {
            prop_assert!((got - want).abs() <= 1e-9 * scale, "{got} vs {want}");
        }
    }

    #[test]
    fn passband_sines_keep_their_phase(freq in 2.0..30.0f64, phase in 0.0..(2.0 * PI)) {
        let x = sine(freq, phase, 20_000);
        let y = filtfilt(&coeffs(), &x).unwrap();
        let shift = phase_of(&y, freq, 4000, 16_000) - phase_of(&x, freq, 4000, 16_000);
        let shift = (shift + PI).rem_euclid(2.0 * PI) - PI;
        let lag_samples = shift / (2.0 * PI * freq) * FS;
        prop_assert!(lag_samples.abs() < 0.5, "{lag_samples} samples");
    }

    #[test]
    fn stopband_attenuation_doubles_in_db(freq in 120.0..200.0f64) {
        let c = coeffs();
        let x = sine(freq, 0.3, 20_000);
        let single = sosfilt(&c, &x);
        let double = filtfilt(&c, &x).unwrap();
        // lock-in amplitude rejects the slow start-up transient
        let single_db = 20.0 * amplitude_at(&single, freq, 10_000, 18_000).log10();
        let double_db = 20.0 * amplitude_at(&double, freq, 4_000, 16_000).log10();
        prop_assert!((double_db - 2.0 * single_db).abs() < 1.0, "{double_db} vs 2 x {single_db}");
    }
}

#[test]
fn response_magnitude_matches_filtered_sine() {
    let c = coeffs();
    for freq in [0.5, 5.0, 50.0, 200.0] {
        let x = sine(freq, 0.0, 40_000);
        let y = sosfilt(&c, &x);
        let measured = rms(&y[30_000..]) / rms(&x[30_000..]);
        let predicted = c.magnitude(freq, FS);
        assert!(
            (measured - predicted).abs() < 0.01 * predicted.max(1e-3),
            "{freq} Hz: {measured} vs {predicted}"
        );
    }
}
