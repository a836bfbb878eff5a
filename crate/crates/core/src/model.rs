//! Sinusoidal compression model and its fit loss.
//!
//! A compression episode is modeled as simple harmonic motion of the chest;
//! the sensed acceleration is the second derivative of `A sin(omega t + rho)`.
//! Fit quality against a window is the RMSE between the window's scalar
//! samples and the model evaluated at the window-relative sample times.

use crate::error::{Error, Result};
use crate::signal::Window;

/// Parameters of one compression sinusoid: displacement amplitude `A` in
/// meters, angular frequency `omega` in rad/s, phase `rho` in `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineParams {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl SineParams {
    pub fn new(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        let p = Self {
            amplitude,
            omega,
            phase,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::InvalidParams(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !(self.phase.is_finite()
            && (0.0..std::f64::consts::TAU).contains(&self.phase))
        {
            return Err(Error::InvalidParams(format!(
                "phase must lie in [0, 2*pi), got {}",
                self.phase
            )));
        }
        Ok(())
    }

    /// Compression frequency in compressions per minute.
    pub fn ccf_cpm(&self) -> f64 {
        self.omega / std::f64::consts::TAU * 60.0
    }

    /// Compression depth in centimeters: peak-to-peak displacement `2 A`.
    pub fn ccd_cm(&self) -> f64 {
        200.0 * self.amplitude
    }
}

/// Model acceleration at time `t`: the second derivative of the displacement
/// sinusoid, `-A omega^2 sin(omega t + rho)`.
pub fn model_accel(p: &SineParams, t: f64) -> f64 {
    -p.amplitude * p.omega * p.omega * (p.omega * t + p.phase).sin()
}

/// RMSE between a window's samples and the model at the window-relative
/// sample times `i / rate_hz`.
pub fn rmse_loss(p: &SineParams, w: &Window) -> Result<f64> {
    if w.samples.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut sum_sq = 0.0;
    for (i, &a) in w.samples.iter().enumerate() {
        let r = a - model_accel(p, w.time_at(i));
        sum_sq += r * r;
    }
    Ok((sum_sq / w.samples.len() as f64).sqrt())
}

/// One window's quality estimate in clinical units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CprEstimate {
    /// Compression frequency, compressions per minute.
    pub ccf: f64,
    /// Compression depth (peak-to-peak), centimeters.
    pub ccd: f64,
    /// RMSE of the fitted model on the window, m/s^2.
    pub loss: f64,
    /// Recording time of the window's first sample, seconds.
    pub window_start_t: f64,
    /// Window duration, seconds.
    pub window_len_s: f64,
}

/// Convert fitted parameters and their loss into clinical units.
pub fn to_estimate(p: &SineParams, loss: f64, window_start_t: f64, window_len_s: f64) -> CprEstimate {
    CprEstimate {
        ccf: p.ccf_cpm(),
        ccd: p.ccd_cm(),
        loss,
        window_start_t,
        window_len_s,
    }
}
