//! Python bindings: the sinusoid model, the evolutionary fitter, the
//! spectral baseline, and the synthetic tone generator, importable as
//! `cprfit`. Build with `cargo build -p cpr-py`, then see
//! `python/smoke_test.py` for loading the produced cdylib directly.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cpr_core::evo::{EvoConfig, Fitter};
use cpr_core::model::{self, SineParams};
use cpr_core::signal::{self, ImuSample, Window};
use cpr_core::synth::{synthesize, SynthSpec};

fn to_py(e: cpr_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parameters of the displacement sinusoid `A sin(omega t + rho)`, fitted
/// through its second derivative.
#[pyclass(name = "SineParams")]
struct PySineParams {
    inner: SineParams,
}

#[pymethods]
impl PySineParams {
    #[new]
    fn new(amplitude: f64, omega: f64, phase: f64) -> PyResult<Self> {
        Ok(Self {
            inner: SineParams::new(amplitude, omega, phase).map_err(to_py)?,
        })
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn phase(&self) -> f64 {
        self.inner.phase
    }

    /// Compression frequency in compressions per minute.
    fn ccf_cpm(&self) -> f64 {
        self.inner.ccf_cpm()
    }

    /// Peak-to-peak compression depth in centimeters.
    fn ccd_cm(&self) -> f64 {
        self.inner.ccd_cm()
    }

    /// Model acceleration at time `t` seconds.
    fn accel_at(&self, t: f64) -> f64 {
        model::model_accel(&self.inner, t)
    }

    fn __repr__(&self) -> String {
        format!(
            "SineParams(amplitude={}, omega={}, phase={})",
            self.inner.amplitude, self.inner.omega, self.inner.phase
        )
    }
}

/// One window's fit: clinical units plus the optimizer's bookkeeping.
#[pyclass(name = "Estimate")]
struct PyEstimate {
    #[pyo3(get)]
    ccf: f64,
    #[pyo3(get)]
    ccd: f64,
    #[pyo3(get)]
    loss: f64,
    #[pyo3(get)]
    generations: usize,
    #[pyo3(get)]
    window_start_t: f64,
    #[pyo3(get)]
    window_len_s: f64,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(ccf={:.3}, ccd={:.3}, loss={:.4}, generations={})",
            self.ccf, self.ccd, self.loss, self.generations
        )
    }
}

/// Frequency read off the zero-padded spectrum of one window.
#[pyclass(name = "SpectralEstimate")]
struct PySpectralEstimate {
    #[pyo3(get)]
    ccf: f64,
    #[pyo3(get)]
    peak_bin: usize,
    #[pyo3(get)]
    peak_magnitude: f64,
}

#[pymethods]
impl PySpectralEstimate {
    fn __repr__(&self) -> String {
        format!(
            "SpectralEstimate(ccf={:.3}, peak_bin={}, peak_magnitude={:.4})",
            self.ccf, self.peak_bin, self.peak_magnitude
        )
    }
}

/// Population-carrying fitter; feed it consecutive windows of one stream.
#[pyclass(name = "Fitter")]
struct PyFitter {
    inner: Fitter,
}

#[pymethods]
impl PyFitter {
    /// `lam` is the per-generation offspring count (one fresh draw, one
    /// mutation of the best, the rest crossovers).
    #[new]
    #[pyo3(signature = (
        mu = 400, lam = 5, g_max = 10, epsilon = 0.5, c_min = 0.05,
        m_const = 0.999, seed = 0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mu: usize,
        lam: usize,
        g_max: usize,
        epsilon: f64,
        c_min: f64,
        m_const: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = EvoConfig {
            mu,
            lambda: lam,
            g_max,
            epsilon,
            c_min,
            m_const,
            seed,
            ..EvoConfig::default()
        };
        Ok(Self {
            inner: Fitter::new(cfg).map_err(to_py)?,
        })
    }

    /// Fit one window of scalar total acceleration sampled at `rate_hz`.
    #[pyo3(signature = (samples, rate_hz, start_t = 0.0))]
    fn fit_window(&mut self, samples: Vec<f64>, rate_hz: f64, start_t: f64) -> PyResult<PyEstimate> {
        let w = Window::new(start_t, samples, rate_hz);
        let est = self.inner.fit_window(&w).map_err(to_py)?;
        Ok(PyEstimate {
            ccf: est.ccf,
            ccd: est.ccd,
            loss: est.loss,
            generations: self.inner.generations_last_window(),
            window_start_t: est.window_start_t,
            window_len_s: est.window_len_s,
        })
    }

    /// Best loss after the initial evaluation and after each generation of
    /// the most recent window.
    fn best_trace(&self) -> Vec<f64> {
        self.inner.best_trace().to_vec()
    }

    /// Best parameters currently in the population.
    fn best_params(&self) -> PySineParams {
        PySineParams {
            inner: self.inner.population()[0].params,
        }
    }
}

/// Generate one noise-free or noisy tone as scalar total acceleration.
#[pyfunction]
#[pyo3(signature = (
    freq_hz, amplitude_m, phase = 0.0, duration_s = 3.0, rate_hz = 100.0,
    noise_sigma = 0.0, seed = 0
))]
fn synthesize_tone(
    freq_hz: f64,
    amplitude_m: f64,
    phase: f64,
    duration_s: f64,
    rate_hz: f64,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let spec = SynthSpec {
        freq_hz,
        amplitude_m,
        phase,
        duration_s,
        rate_hz,
        noise_sigma,
        seed,
    };
    Ok(synthesize(&spec).map_err(to_py)?.samples)
}

/// Spectral-baseline frequency estimate for one window.
#[pyfunction]
fn fft_ccf(samples: Vec<f64>, rate_hz: f64) -> PyResult<PySpectralEstimate> {
    let w = Window::new(0.0, samples, rate_hz);
    let est = cpr_core::fft::fft_ccf(&w).map_err(to_py)?;
    Ok(PySpectralEstimate {
        ccf: est.ccf,
        peak_bin: est.peak_bin,
        peak_magnitude: est.peak_magnitude,
    })
}

/// Collapse one tri-axial sample to scalar acceleration: vector magnitude
/// minus gravity.
#[pyfunction]
#[pyo3(signature = (ax, ay, az, gravity = 9.81))]
fn total_acceleration(ax: f64, ay: f64, az: f64, gravity: f64) -> PyResult<f64> {
    signal::total_acceleration(&ImuSample { t: 0.0, ax, ay, az }, gravity).map_err(to_py)
}

/// RMSE between a window of samples and the model's acceleration.
#[pyfunction]
fn rmse_loss(params: &PySineParams, samples: Vec<f64>, rate_hz: f64) -> PyResult<f64> {
    let w = Window::new(0.0, samples, rate_hz);
    model::rmse_loss(&params.inner, &w).map_err(to_py)
}

#[pymodule]
fn cprfit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySineParams>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PySpectralEstimate>()?;
    m.add_class::<PyFitter>()?;
    m.add_function(wrap_pyfunction!(synthesize_tone, m)?)?;
    m.add_function(wrap_pyfunction!(fft_ccf, m)?)?;
    m.add_function(wrap_pyfunction!(total_acceleration, m)?)?;
    m.add_function(wrap_pyfunction!(rmse_loss, m)?)?;
    Ok(())
}
