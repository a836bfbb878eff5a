//! Synthetic compression data with known ground truth.
//!
//! Generates scalar windows or full tri-axial recordings from a chosen
//! sinusoid plus Gaussian noise, and labelled window corpora with parameters
//! drawn uniformly from the clinically plausible ranges. Everything is
//! seeded and reproducible.

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::model::{model_accel, SineParams};
use crate::signal::{ImuSample, Window};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use std::f64::consts::TAU;

/// Recipe for one synthetic signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    /// Compression frequency, Hz.
    pub freq_hz: f64,
    /// Displacement amplitude, meters.
    pub amplitude_m: f64,
    /// Phase, radians.
    pub phase: f64,
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Standard deviation of the added Gaussian noise, m/s^2.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            freq_hz: 2.0,
            amplitude_m: 0.02,
            phase: 0.0,
            duration_s: 3.0,
            rate_hz: 100.0,
            noise_sigma: default_noise_sigma(2.0, 0.02),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("freq_hz", self.freq_hz),
            ("amplitude_m", self.amplitude_m),
            ("duration_s", self.duration_s),
            ("rate_hz", self.rate_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "phase must be finite, got {}",
                self.phase
            )));
        }
        Ok(())
    }

    /// The generating sinusoid with phase wrapped into `[0, 2*pi)`.
    pub fn truth(&self) -> SineParams {
        SineParams {
            amplitude: self.amplitude_m,
            omega: TAU * self.freq_hz,
            phase: self.phase.rem_euclid(TAU),
        }
    }

    fn sample_count(&self) -> usize {
        (self.duration_s * self.rate_hz).round() as usize
    }
}

/// Noise level at 10% of the clean signal's peak `A omega^2`.
pub fn default_noise_sigma(freq_hz: f64, amplitude_m: f64) -> f64 {
    let omega = TAU * freq_hz;
    0.1 * amplitude_m * omega * omega
}

fn noisy_scalar_signal(spec: &SynthSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let truth = spec.truth();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise_sigma: {e}")))?;
    Ok((0..spec.sample_count())
        .map(|i| model_accel(&truth, i as f64 / spec.rate_hz) + noise.sample(&mut rng))
        .collect())
}

/// Synthesize one scalar window starting at t = 0.
pub fn synthesize(spec: &SynthSpec) -> Result<Window> {
    Ok(Window::new(0.0, noisy_scalar_signal(spec)?, spec.rate_hz))
}

/// Synthesize a tri-axial recording carrying the scalar signal on the z
/// axis: `az = signal + gravity`, `ax = ay = 0`, so that the ingestion path
/// recovers the signal exactly (as long as `signal + gravity` stays
/// nonnegative).
pub fn synthesize_recording(spec: &SynthSpec, gravity: f64) -> Result<Vec<ImuSample>> {
    let signal = noisy_scalar_signal(spec)?;
    Ok(signal
        .iter()
        .enumerate()
        .map(|(i, &s)| ImuSample {
            t: i as f64 / spec.rate_hz,
            ax: 0.0,
            ay: 0.0,
            az: s + gravity,
        })
        .collect())
}

/// One synthetic window together with the parameters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledWindow {
    pub window: Window,
    pub truth: SineParams,
}

/// Draw a corpus of labelled 3-second windows: frequency uniform in 1..3 Hz,
/// amplitude uniform in 0.01..0.05 m, phase uniform in 0..2*pi, noise at
/// `relative_noise` times each window's clean peak `A omega^2` (0 for
/// noise-free).
pub fn appendix_corpus(n: usize, relative_noise: f64, seed: u64) -> Result<Vec<LabelledWindow>> {
    if !(relative_noise.is_finite() && relative_noise >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "relative_noise must be nonnegative, got {relative_noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freq = Uniform::new(1.0f64, 3.0).expect("static range");
    let amp = Uniform::new(0.01f64, 0.05).expect("static range");
    let phase = Uniform::new(0.0f64, TAU).expect("static range");
    let mut corpus = Vec::with_capacity(n);
    for i in 0..n {
        let freq_hz = freq.sample(&mut rng);
        let amplitude_m = amp.sample(&mut rng);
        let spec = SynthSpec {
            freq_hz,
            amplitude_m,
            phase: phase.sample(&mut rng),
            duration_s: 3.0,
            rate_hz: 100.0,
            noise_sigma: relative_noise * amplitude_m * (TAU * freq_hz).powi(2),
            seed: derive_seed(seed, &[i as u64]),
        };
        corpus.push(LabelledWindow {
            window: synthesize(&spec)?,
            truth: spec.truth(),
        });
    }
    Ok(corpus)
}
