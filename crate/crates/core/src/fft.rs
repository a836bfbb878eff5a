//! Spectral baseline: compression frequency from a zero-padded FFT peak.
//!
//! The window is mean-removed, zero-padded to a fixed 1000-point transform,
//! and the strongest magnitude bin inside the plausible compression band
//! (0.5 to 3.5 Hz) is read off as the frequency. No taper is applied and no
//! depth is estimated; this is the comparison method, not the primary one.

use crate::error::{Error, Result};
use crate::signal::Window;
use rustfft::{num_complex::Complex, FftPlanner};

/// Transform length; bin width is `rate_hz / FFT_POINTS`.
pub const FFT_POINTS: usize = 1000;

/// Search band in Hz, i.e. 30 to 210 compressions per minute.
pub const BAND_LO_HZ: f64 = 0.5;
pub const BAND_HI_HZ: f64 = 3.5;

/// Frequency estimate read from the spectrum of one window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpectralEstimate {
    /// Compression frequency, compressions per minute.
    pub ccf: f64,
    /// Index of the winning bin in the 1000-point spectrum.
    pub peak_bin: usize,
    /// Magnitude at the winning bin.
    pub peak_magnitude: f64,
    /// Recording time of the window's first sample, seconds.
    pub window_start_t: f64,
    /// Window duration, seconds.
    pub window_len_s: f64,
}

/// Estimate the compression frequency of one window from its FFT peak.
///
/// Fails with `NoPeak` when no bin in the band carries any energy (an
/// all-constant window) and with `WindowTooLong` when the window has more
/// samples than the fixed transform length.
pub fn fft_ccf(w: &Window) -> Result<SpectralEstimate> {
    let n = w.samples.len();
    if n == 0 {
        return Err(Error::EmptyWindow);
    }
    if n > FFT_POINTS {
        return Err(Error::WindowTooLong {
            len: n,
            max: FFT_POINTS,
        });
    }
    // A flat window carries no oscillation at all; mean removal of a large
    // constant leaves rounding dust that could masquerade as a tiny peak.
    if w.samples.iter().all(|&s| s == w.samples[0]) {
        return Err(Error::NoPeak);
    }
    let mean = w.samples.iter().sum::<f64>() / n as f64;
    let mut buf = vec![Complex::new(0.0f64, 0.0); FFT_POINTS];
    for (slot, &s) in buf.iter_mut().zip(&w.samples) {
        slot.re = s - mean;
    }
    FftPlanner::new().plan_fft_forward(FFT_POINTS).process(&mut buf);

    let bin_hz = w.rate_hz / FFT_POINTS as f64;
    let lo = (BAND_LO_HZ / bin_hz).ceil() as usize;
    let hi = ((BAND_HI_HZ / bin_hz).floor() as usize).min(FFT_POINTS / 2);
    if lo > hi {
        return Err(Error::NoPeak);
    }
    let mut peak_bin = lo;
    let mut peak_magnitude = 0.0;
    for (bin, value) in buf.iter().enumerate().take(hi + 1).skip(lo) {
        let mag = value.norm();
        if mag > peak_magnitude {
            peak_magnitude = mag;
            peak_bin = bin;
        }
    }
    if !(peak_magnitude.is_finite() && peak_magnitude > 0.0) {
        return Err(Error::NoPeak);
    }
    Ok(SpectralEstimate {
        ccf: peak_bin as f64 * bin_hz * 60.0,
        peak_bin,
        peak_magnitude,
        window_start_t: w.start_t,
        window_len_s: w.len_s(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn tone(freq_hz: f64, amp: f64, phase: f64, offset: f64, n: usize, rate: f64) -> Window {
        Window::new(
            0.0,
            (0..n)
                .map(|i| amp * (TAU * freq_hz * i as f64 / rate + phase).sin() + offset)
                .collect(),
            rate,
        )
    }

    /// Independent oracle: direct DFT summation at one bin.
    fn dft_bin_magnitude(samples: &[f64], bin: usize) -> f64 {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (i, &s) in samples.iter().enumerate() {
            let angle = -TAU * bin as f64 * i as f64 / FFT_POINTS as f64;
            re += (s - mean) * angle.cos();
            im += (s - mean) * angle.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn two_hertz_tone_reads_120_cpm() {
        let w = tone(2.0, 1.0, 0.3, 0.0, 300, 100.0);
        let est = fft_ccf(&w).unwrap();
        assert_eq!(est.peak_bin, 20);
        assert!((est.ccf - 120.0).abs() < 1e-9, "got {}", est.ccf);
    }

    #[test]
    fn one_hertz_tone_reads_60_cpm() {
        let w = tone(1.0, 0.5, 1.2, 0.0, 300, 100.0);
        let est = fft_ccf(&w).unwrap();
        assert!((est.ccf - 60.0).abs() < 1e-9, "got {}", est.ccf);
    }

    #[test]
    fn peak_magnitude_matches_direct_dft() {
        let w = tone(1.7, 0.8, 0.9, 0.0, 300, 100.0);
        let est = fft_ccf(&w).unwrap();
        let want = dft_bin_magnitude(&w.samples, est.peak_bin);
        assert!(
            (est.peak_magnitude - want).abs() < 1e-6 * want.max(1.0),
            "fft {} vs direct {}",
            est.peak_magnitude,
            want
        );
    }

    #[test]
    fn constant_window_has_no_peak() {
        let w = Window::new(0.0, vec![4.2; 300], 100.0);
        assert!(matches!(fft_ccf(&w), Err(Error::NoPeak)));
    }

    #[test]
    fn empty_window_is_an_error() {
        let w = Window::new(0.0, vec![], 100.0);
        assert!(matches!(fft_ccf(&w), Err(Error::EmptyWindow)));
    }

    #[test]
    fn oversized_window_is_an_error() {
        let w = tone(2.0, 1.0, 0.0, 0.0, 1001, 100.0);
        assert!(matches!(fft_ccf(&w), Err(Error::WindowTooLong { .. })));
    }

    #[test]
    fn out_of_band_tone_is_not_picked() {
        // 6 Hz lies outside the band; the winner must still be in-band.
        let w = tone(6.0, 1.0, 0.0, 0.0, 300, 100.0);
        if let Ok(est) = fft_ccf(&w) {
            assert!(est.ccf >= 30.0 && est.ccf <= 210.0);
        }
    }

    proptest! {
        // A clean in-band tone lands within one bin of its frequency,
        // regardless of amplitude, phase, or DC offset. Half-bin accuracy
        // is not guaranteed: near a bin midpoint, leakage plus the conjugate
        // image can tip the argmax to the neighbor on the far side.
        #[test]
        fn tone_frequency_within_one_bin(
            freq in 0.7f64..3.3,
            amp in 0.1f64..5.0,
            phase in 0.0f64..TAU,
            offset in -10.0f64..10.0,
        ) {
            let w = tone(freq, amp, phase, offset, 300, 100.0);
            let est = fft_ccf(&w).unwrap();
            let bin_cpm = 100.0 / FFT_POINTS as f64 * 60.0;
            prop_assert!(
                (est.ccf - freq * 60.0).abs() <= bin_cpm + 1e-9,
                "tone at {} cpm read as {} cpm", freq * 60.0, est.ccf
            );
        }

        // Scaling the window must not move the peak.
        #[test]
        fn amplitude_scaling_keeps_the_peak(
            freq in 0.7f64..3.3,
            scale in 0.01f64..100.0,
        ) {
            let w = tone(freq, 1.0, 0.4, 0.0, 300, 100.0);
            let scaled = Window::new(0.0, w.samples.iter().map(|s| s * scale).collect(), 100.0);
            let a = fft_ccf(&w).unwrap();
            let b = fft_ccf(&scaled).unwrap();
            prop_assert_eq!(a.peak_bin, b.peak_bin);
        }

        // Adding a constant must not move the peak: the mean is removed.
        #[test]
        fn dc_offset_keeps_the_peak(
            freq in 0.7f64..3.3,
            offset in -50.0f64..50.0,
        ) {
            let w = tone(freq, 1.0, 0.4, 0.0, 300, 100.0);
            let shifted = Window::new(0.0, w.samples.iter().map(|s| s + offset).collect(), 100.0);
            let a = fft_ccf(&w).unwrap();
            let b = fft_ccf(&shifted).unwrap();
            prop_assert_eq!(a.peak_bin, b.peak_bin);
        }
    }
}
