//! Butterworth band-pass design and zero-phase filtering.
//!
//! The analog prototype of order `N` is mapped to a band-pass with the
//! standard `s -> (s^2 + w0^2) / (s * bw)` substitution, both band edges
//! prewarped, then discretized with the bilinear transform. The result is a
//! digital filter of order `2N` realized as `N` second-order sections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Band-pass parameters independent of the sampling rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandSettings {
    /// Analog prototype order.
    pub order: usize,
    pub f_low: f64,
    pub f_high: f64,
}

impl Default for BandSettings {
    fn default() -> Self {
        Self {
            order: 3,
            f_low: 0.5,
            f_high: 50.0,
        }
    }
}

impl BandSettings {
    pub fn at(&self, fs: f64) -> FilterSpec {
        FilterSpec {
            order: self.order,
            f_low: self.f_low,
            f_high: self.f_high,
            fs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    pub order: usize,
    pub f_low: f64,
    pub f_high: f64,
    pub fs: f64,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidFilter("order must be at least 1".into()));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::InvalidFilter(format!(
                "sampling rate {} Hz must be positive",
                self.fs
            )));
        }
        let nyquist = self.fs / 2.0;
        if !(self.f_low > 0.0 && self.f_low < self.f_high && self.f_high < nyquist) {
            return Err(Error::InvalidFilter(format!(
                "need 0 < f_low < f_high < fs/2, got f_low={} f_high={} fs/2={}",
                self.f_low, self.f_high, nyquist
            )));
        }
        Ok(())
    }
}

/// One second-order section, `a0` normalized to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + self.b1 * z_inv + self.b2 * z2) / (1.0 + self.a1 * z_inv + self.a2 * z2)
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Transposed direct form II state after an infinitely long unit input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let s2 = self.b2 - self.a2 * g;
        let s1 = self.b1 - self.a1 * g + s2;
        [s1, s2]
    }

    #[inline]
    fn run(&self, x: &mut [f64], mut state: [f64; 2]) {
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b0 * input + state[0];
            state[0] = self.b1 * input - self.a1 * y + state[1];
            state[1] = self.b2 * input - self.a2 * y;
            *v = y;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterCoefficients {
    pub sections: Vec<Biquad>,
    pub gain: f64,
}

impl FilterCoefficients {
    /// Digital filter order.
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Odd-extension length used by [`filtfilt`] at each end.
    pub fn pad_len(&self) -> usize {
        3 * (self.order() + 1)
    }

    pub fn frequency_response(&self, f: f64, fs: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        self.sections
            .iter()
            .fold(Complex64::new(self.gain, 0.0), |acc, s| {
                acc * s.response(z_inv)
            })
    }

    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        self.frequency_response(f, fs).norm()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }
}

fn bilinear(s: Complex64, fs2: f64) -> Complex64 {
    (fs2 + s) / (fs2 - s)
}

struct PendingSection {
    analog: [Complex64; 2],
    digital: [Complex64; 2],
}

impl PendingSection {
    fn natural_frequency(&self) -> f64 {
        (self.analog[0].norm() * self.analog[1].norm()).sqrt()
    }
}

pub fn design_bandpass(spec: &FilterSpec) -> Result<FilterCoefficients> {
    spec.validate()?;
    let n = spec.order;
    let fs2 = 2.0 * spec.fs;
    let w_low = fs2 * (PI * spec.f_low / spec.fs).tan();
    let w_high = fs2 * (PI * spec.f_high / spec.fs).tan();
    let bw = w_high - w_low;
    let w0_sq = w_low * w_high;

    // Prototype poles in the upper half plane (plus the real pole for odd n);
    // the lower half contributes the conjugates.
    let mut pending = Vec::with_capacity(n);
    let mut analog_poles = Vec::with_capacity(2 * n);
    for k in 0..n.div_ceil(2) {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let is_real = 2 * k + 1 == n;
        let proto = if is_real {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, theta)
        };
        let half = proto * (bw / 2.0);
        let disc = (half * half - w0_sq).sqrt();
        let (q1, q2) = (half + disc, half - disc);
        if is_real {
            analog_poles.extend([q1, q2]);
            pending.push(PendingSection {
                analog: [q1, q2],
                digital: [bilinear(q1, fs2), bilinear(q2, fs2)],
            });
        } else {
            for q in [q1, q2] {
                analog_poles.extend([q, q.conj()]);
                let z = bilinear(q, fs2);
                pending.push(PendingSection {
                    analog: [q, q.conj()],
                    digital: [z, z.conj()],
                });
            }
        }
    }

    // n zeros at z = 1 (from s = 0) and n at z = -1 (from s = inf), handed
    // out to sections in order of ascending natural frequency.
    pending.sort_by(|a, b| a.natural_frequency().total_cmp(&b.natural_frequency()));
    let zeros: Vec<f64> = std::iter::repeat_n(1.0, n)
        .chain(std::iter::repeat_n(-1.0, n))
        .collect();

    let sections = pending
        .iter()
        .zip(zeros.chunks_exact(2))
        .map(|(sec, zs)| {
            let [p1, p2] = sec.digital;
            Biquad {
                b0: 1.0,
                b1: -(zs[0] + zs[1]),
                b2: zs[0] * zs[1],
                a1: -(p1 + p2).re,
                a2: (p1 * p2).re,
            }
        })
        .collect();

    let denom = analog_poles
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, q| acc * (fs2 - q));
    let gain = ((bw * fs2).powi(n as i32) / denom).re;

    Ok(FilterCoefficients { sections, gain })
}

/// Single causal pass from rest.
pub fn sosfilt(coeffs: &FilterCoefficients, x: &[f64]) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().map(|v| v * coeffs.gain).collect();
    for section in &coeffs.sections {
        section.run(&mut y, [0.0; 2]);
    }
    y
}

/// Causal pass whose sections start in the steady state for a constant
/// input equal to `x[0]`.
fn sosfilt_steady(coeffs: &FilterCoefficients, x: &mut [f64]) {
    let Some(&first) = x.first() else { return };
    let mut level = first * coeffs.gain;
    for v in x.iter_mut() {
        *v *= coeffs.gain;
    }
    for section in &coeffs.sections {
        let [s1, s2] = section.step_state();
        section.run(x, [s1 * level, s2 * level]);
        level *= section.dc_gain();
    }
}

/// Forward-backward filtering with odd extension at both ends.
pub fn filtfilt(coeffs: &FilterCoefficients, x: &[f64]) -> Result<Vec<f64>> {
    let pad = coeffs.pad_len();
    if x.len() <= pad {
        return Err(Error::InputTooShort {
            len: x.len(),
            min: pad,
        });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(i));
    }

    let n = x.len();
    let (first, last) = (x[0], x[n - 1]);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    sosfilt_steady(coeffs, &mut ext);
    ext.reverse();
    sosfilt_steady(coeffs, &mut ext);
    ext.reverse();

    Ok(ext[pad..pad + n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_coeffs() -> FilterCoefficients {
        design_bandpass(&BandSettings::default().at(2000.0)).unwrap()
    }

    /// Analog band-pass built from the tabulated third-order Butterworth
    /// polynomial `s^3 + 2 s^2 + 2 s + 1`, evaluated at the prewarped
    /// frequency. The bilinear transform maps `f` exactly onto it.
    fn tabulated_analog_magnitude(f: f64, f_low: f64, f_high: f64, fs: f64) -> f64 {
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let (wl, wh, w) = (warp(f_low), warp(f_high), warp(f));
        let s = Complex64::new(0.0, w);
        let lp = (s * s + wl * wh) / (s * (wh - wl));
        let poly = lp * lp * lp + 2.0 * lp * lp + 2.0 * lp + 1.0;
        1.0 / poly.norm()
    }

    #[test]
    fn zeros_at_dc_and_nyquist() {
        let c = default_coeffs();
        assert!(c.magnitude(0.0, 2000.0) < 1e-12);
        assert!(c.magnitude(1000.0, 2000.0) < 1e-12);
    }

    #[test]
    fn unity_at_geometric_center() {
        let c = default_coeffs();
        let mag = c.magnitude((0.5f64 * 50.0).sqrt(), 2000.0);
        assert!((0.99..=1.01).contains(&mag), "{mag}");
    }

    #[test]
    fn matches_tabulated_prototype() {
        let c = default_coeffs();
        for f in [0.1, 0.5, 1.0, 5.0, 20.0, 50.0, 80.0, 200.0, 900.0] {
            let want = tabulated_analog_magnitude(f, 0.5, 50.0, 2000.0);
            let got = c.magnitude(f, 2000.0);
            assert!(
                (got - want).abs() <= 1e-9 * want.max(1e-6),
                "f={f}: {got} vs {want}"
            );
        }
        // -3 dB at both edges
        for f in [0.5, 50.0] {
            let m = c.magnitude(f, 2000.0);
            assert!((m - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn digital_order_is_twice_prototype() {
        for order in 1..=6 {
            let c = design_bandpass(&FilterSpec {
                order,
                f_low: 1.0,
                f_high: 40.0,
                fs: 500.0,
            })
            .unwrap();
            assert_eq!(c.order(), 2 * order);
            assert!(c.is_stable());
        }
    }

    #[test]
    fn monotone_passband_skirts() {
        let c = default_coeffs();
        let center = 5.0;
        let mut prev = 0.0;
        let mut f = 0.05;
        while f <= center {
            let m = c.magnitude(f, 2000.0);
            assert!(m >= prev - 1e-12, "not rising at {f}");
            prev = m;
            f *= 1.05;
        }
        let mut prev = f64::INFINITY;
        let mut f = center;
        while f < 999.0 {
            let m = c.magnitude(f, 2000.0);
            assert!(m <= prev + 1e-12, "not falling at {f}");
            prev = m;
            f *= 1.05;
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            FilterSpec {
                order: 3,
                f_low: 50.0,
                f_high: 0.5,
                fs: 2000.0,
            },
            FilterSpec {
                order: 3,
                f_low: 0.5,
                f_high: 1000.0,
                fs: 2000.0,
            },
            FilterSpec {
                order: 0,
                f_low: 0.5,
                f_high: 50.0,
                fs: 2000.0,
            },
            FilterSpec {
                order: 3,
                f_low: 0.0,
                f_high: 50.0,
                fs: 2000.0,
            },
        ];
        for spec in bad {
            assert!(matches!(
                design_bandpass(&spec),
                Err(Error::InvalidFilter(_))
            ));
        }
    }

    #[test]
    fn section_tails_decay() {
        let c = default_coeffs();
        let n = 40_000;
        for s in &c.sections {
            let single = FilterCoefficients {
                sections: vec![*s],
                gain: 1.0,
            };
            let mut impulse = vec![0.0; n];
            impulse[0] = 1.0;
            let h = sosfilt(&single, &impulse);
            let tail = h[20_000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(tail < 1e-9, "tail {tail} for {s:?}");
        }
    }

    #[test]
    fn too_short_and_non_finite() {
        let c = default_coeffs();
        assert!(matches!(
            filtfilt(&c, &[0.0; 5]),
            Err(Error::InputTooShort { len: 5, min: 21 })
        ));
        let mut x = vec![0.0; 100];
        x[40] = f64::NAN;
        assert!(matches!(filtfilt(&c, &x), Err(Error::NonFiniteInput(40))));
    }

    #[test]
    fn constant_input_is_removed() {
        let c = default_coeffs();
        let y = filtfilt(&c, &vec![1.0; 10_000]).unwrap();
        assert_eq!(y.len(), 10_000);
        let worst = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-6, "{worst}");
    }
}
