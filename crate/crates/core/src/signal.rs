//! Accelerometer ingestion: scalar acceleration and sliding windows.
//!
//! A recording is a time-ordered sequence of tri-axial samples. The axes are
//! collapsed to a scalar by vector magnitude minus gravity, and the scalar
//! stream is cut into fixed-length windows emitted at a fixed update period.

use crate::error::{Error, Result};

/// One tri-axial accelerometer sample. `t` is seconds, axes are m/s^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

/// Windowing parameters for a scalar acceleration stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    /// Window length in seconds.
    pub window_len_s: f64,
    /// Seconds between successive window starts.
    pub update_period_s: f64,
    /// Nominal sampling rate in Hz.
    pub rate_hz: f64,
    /// Gravity magnitude subtracted from the vector norm, m/s^2.
    pub gravity: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            window_len_s: 3.0,
            update_period_s: 1.0,
            rate_hz: 100.0,
            gravity: 9.81,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rate_hz must be positive, got {}",
                self.rate_hz
            )));
        }
        if !(self.update_period_s.is_finite() && self.update_period_s > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "update_period_s must be positive, got {}",
                self.update_period_s
            )));
        }
        if !(self.window_len_s.is_finite() && self.window_len_s >= self.update_period_s) {
            return Err(Error::InvalidConfig(format!(
                "window_len_s must be at least update_period_s, got {} < {}",
                self.window_len_s, self.update_period_s
            )));
        }
        if !self.gravity.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gravity must be finite, got {}",
                self.gravity
            )));
        }
        Ok(())
    }
}

/// A contiguous slice of scalar acceleration, window-relative in time.
///
/// Sample `i` sits at `start_t + i / rate_hz` in recording time and at
/// `i / rate_hz` in window-relative time.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// Recording time of the first sample, seconds.
    pub start_t: f64,
    /// Scalar acceleration samples, m/s^2.
    pub samples: Vec<f64>,
    /// Sampling rate in Hz.
    pub rate_hz: f64,
}

impl Window {
    pub fn new(start_t: f64, samples: Vec<f64>, rate_hz: f64) -> Self {
        Self {
            start_t,
            samples,
            rate_hz,
        }
    }

    /// Window duration covered by its samples, seconds.
    pub fn len_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }

    /// Window-relative sample time of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        i as f64 / self.rate_hz
    }
}

/// Collapse one tri-axial sample to scalar acceleration: vector magnitude
/// minus gravity. May be negative.
pub fn total_acceleration(s: &ImuSample, gravity: f64) -> Result<f64> {
    for (axis, v) in [("ax", s.ax), ("ay", s.ay), ("az", s.az)] {
        if !v.is_finite() {
            return Err(Error::InvalidSample(format!(
                "{axis} = {v} at t = {}",
                s.t
            )));
        }
    }
    Ok((s.ax * s.ax + s.ay * s.ay + s.az * s.az).sqrt() - gravity)
}

/// Lazy window sequence over a validated scalar stream.
#[derive(Debug)]
pub struct Windows {
    signal: Vec<f64>,
    times: Vec<f64>,
    window_len: usize,
    step_samples: f64,
    rate_hz: f64,
    next: usize,
}

impl Iterator for Windows {
    type Item = Window;

    fn next(&mut self) -> Option<Window> {
        let start = (self.next as f64 * self.step_samples).round() as usize;
        if start + self.window_len > self.signal.len() {
            return None;
        }
        self.next += 1;
        Some(Window::new(
            self.times[start],
            self.signal[start..start + self.window_len].to_vec(),
            self.rate_hz,
        ))
    }
}

impl Windows {
    /// Number of windows the iterator will emit in total.
    pub fn total(&self) -> usize {
        let n = self.signal.len();
        if n < self.window_len {
            return 0;
        }
        ((n - self.window_len) as f64 / self.step_samples).floor() as usize + 1
    }
}

/// Cut a recording into windows of `window_len_s` seconds every
/// `update_period_s` seconds. Trailing samples that do not fill a whole
/// window are dropped; a recording shorter than one window yields an empty
/// iterator.
///
/// The stream must be sorted by strictly increasing `t` and its median
/// inter-sample interval must sit within 5% of `1 / rate_hz`.
pub fn windows(stream: &[ImuSample], cfg: &StreamConfig) -> Result<Windows> {
    cfg.validate()?;
    validate_rate(stream, cfg.rate_hz)?;
    let signal = stream
        .iter()
        .map(|s| total_acceleration(s, cfg.gravity))
        .collect::<Result<Vec<f64>>>()?;
    let times: Vec<f64> = stream.iter().map(|s| s.t).collect();
    Ok(Windows {
        signal,
        times,
        window_len: (cfg.window_len_s * cfg.rate_hz).round() as usize,
        step_samples: cfg.update_period_s * cfg.rate_hz,
        rate_hz: cfg.rate_hz,
        next: 0,
    })
}

/// Relative tolerance on the median inter-sample interval.
const RATE_TOLERANCE: f64 = 0.05;

fn validate_rate(stream: &[ImuSample], rate_hz: f64) -> Result<()> {
    if stream.len() < 2 {
        return Ok(());
    }
    let mut dts = Vec::with_capacity(stream.len() - 1);
    for pair in stream.windows(2) {
        let dt = pair[1].t - pair[0].t;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidSample(format!(
                "timestamps not strictly increasing near t = {}",
                pair[0].t
            )));
        }
        dts.push(dt);
    }
    dts.sort_by(f64::total_cmp);
    let median_dt = if dts.len() % 2 == 1 {
        dts[dts.len() / 2]
    } else {
        0.5 * (dts[dts.len() / 2 - 1] + dts[dts.len() / 2])
    };
    let nominal_dt = 1.0 / rate_hz;
    if (median_dt - nominal_dt).abs() > RATE_TOLERANCE * nominal_dt {
        return Err(Error::RateMismatch {
            expected_hz: rate_hz,
            observed_hz: 1.0 / median_dt,
        });
    }
    Ok(())
}

/// Read a recording from CSV with header `t,ax,ay,az`. Lines starting with
/// `#` and blank lines are skipped anywhere in the file.
pub fn read_recording_csv(path: &std::path::Path) -> Result<Vec<ImuSample>> {
    let text = std::fs::read_to_string(path)?;
    parse_recording_csv(&text)
}

pub fn parse_recording_csv(text: &str) -> Result<Vec<ImuSample>> {
    let mut samples = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "t,ax,ay,az" {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected header 't,ax,ay,az', got '{line}'"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("not a number: '{field}'"),
            })?;
        }
        samples.push(ImuSample {
            t: values[0],
            ax: values[1],
            ay: values[2],
            az: values[3],
        });
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            msg: "missing header 't,ax,ay,az'".into(),
        });
    }
    Ok(samples)
}

/// Write a recording as CSV, prefixing one `#` comment line per entry of
/// `comments`.
pub fn write_recording_csv(
    path: &std::path::Path,
    samples: &[ImuSample],
    comments: &[String],
) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("t,ax,ay,az\n");
    for s in samples {
        out.push_str(&format!("{},{},{},{}\n", s.t, s.ax, s.ay, s.az));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_stream(duration_s: f64, rate_hz: f64) -> Vec<ImuSample> {
        let n = (duration_s * rate_hz).round() as usize;
        (0..n)
            .map(|i| ImuSample {
                t: i as f64 / rate_hz,
                ax: 0.0,
                ay: 0.0,
                az: 9.81 + (i as f64 * 0.1).sin(),
            })
            .collect()
    }

    #[test]
    fn resting_sensor_reads_zero() {
        let s = ImuSample {
            t: 0.0,
            ax: 0.0,
            ay: 0.0,
            az: 9.81,
        };
        assert_eq!(total_acceleration(&s, 9.81).unwrap(), 0.0);
    }

    #[test]
    fn pythagorean_triple_minus_gravity() {
        let s = ImuSample {
            t: 0.0,
            ax: 3.0,
            ay: 4.0,
            az: 12.0,
        };
        let a = total_acceleration(&s, 9.81).unwrap();
        assert!((a - 3.19).abs() < 1e-12, "got {a}");
    }

    #[test]
    fn zero_gravity_returns_vector_norm() {
        let s = ImuSample {
            t: 0.0,
            ax: 1.0,
            ay: 2.0,
            az: 2.0,
        };
        assert_eq!(total_acceleration(&s, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn non_finite_axis_is_rejected() {
        let s = ImuSample {
            t: 0.5,
            ax: f64::NAN,
            ay: 0.0,
            az: 0.0,
        };
        assert!(matches!(
            total_acceleration(&s, 9.81),
            Err(Error::InvalidSample(_))
        ));
    }

    #[test]
    fn five_seconds_gives_three_windows() {
        let stream = uniform_stream(5.0, 100.0);
        let ws: Vec<Window> = windows(&stream, &StreamConfig::default()).unwrap().collect();
        assert_eq!(ws.len(), 3);
        let starts: Vec<f64> = ws.iter().map(|w| w.start_t).collect();
        assert_eq!(starts, vec![0.0, 1.0, 2.0]);
        for w in &ws {
            assert_eq!(w.samples.len(), 300);
        }
    }

    #[test]
    fn exactly_one_window_fits_three_seconds() {
        let stream = uniform_stream(3.0, 100.0);
        let ws: Vec<Window> = windows(&stream, &StreamConfig::default()).unwrap().collect();
        assert_eq!(ws.len(), 1);
    }

    #[test]
    fn short_recording_yields_no_windows() {
        let stream = uniform_stream(2.5, 100.0);
        let it = windows(&stream, &StreamConfig::default()).unwrap();
        assert_eq!(it.total(), 0);
        assert_eq!(it.count(), 0);
    }

    #[test]
    fn rate_drift_is_rejected() {
        // Claimed 100 Hz, actually 80 Hz: 25% off, far past the 5% tolerance.
        let stream: Vec<ImuSample> = (0..400)
            .map(|i| ImuSample {
                t: i as f64 / 80.0,
                ax: 0.0,
                ay: 0.0,
                az: 9.81,
            })
            .collect();
        match windows(&stream, &StreamConfig::default()) {
            Err(Error::RateMismatch { observed_hz, .. }) => {
                assert!((observed_hz - 80.0).abs() < 1.0)
            }
            other => panic!("expected rate mismatch, got {other:?}"),
        }
    }

    #[test]
    fn small_jitter_is_tolerated() {
        let stream: Vec<ImuSample> = (0..500)
            .map(|i| ImuSample {
                t: i as f64 / 100.0 + if i % 2 == 0 { 0.0 } else { 0.0002 },
                ax: 0.0,
                ay: 0.0,
                az: 9.81,
            })
            .collect();
        assert!(windows(&stream, &StreamConfig::default()).is_ok());
    }

    #[test]
    fn unsorted_timestamps_are_rejected() {
        let mut stream = uniform_stream(4.0, 100.0);
        stream.swap(10, 11);
        assert!(matches!(
            windows(&stream, &StreamConfig::default()),
            Err(Error::InvalidSample(_))
        ));
    }

    #[test]
    fn recording_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let stream = uniform_stream(1.0, 100.0);
        write_recording_csv(&path, &stream, &["seed = 7".into()]).unwrap();
        let back = read_recording_csv(&path).unwrap();
        assert_eq!(back, stream);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let text = "t,ax,ay,az\n0.0,0,0,9.81\n0.01,bad,0,9.81\n";
        match parse_recording_csv(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    // Rotating the axes must not change the scalar: it only depends on the
    // vector magnitude.
    proptest! {
        #[test]
        fn rotation_invariance(
            v in prop::array::uniform3(-20.0f64..20.0),
            axis in prop::array::uniform3(-1.0f64..1.0),
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
            prop_assume!(norm > 1e-3);
            let k = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
            // Rodrigues rotation of v around unit axis k.
            let (s, c) = angle.sin_cos();
            let kv = [
                k[1] * v[2] - k[2] * v[1],
                k[2] * v[0] - k[0] * v[2],
                k[0] * v[1] - k[1] * v[0],
            ];
            let kdotv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
            let rot: Vec<f64> = (0..3)
                .map(|i| v[i] * c + kv[i] * s + k[i] * kdotv * (1.0 - c))
                .collect();
            let a = total_acceleration(
                &ImuSample { t: 0.0, ax: v[0], ay: v[1], az: v[2] },
                9.81,
            ).unwrap();
            let b = total_acceleration(
                &ImuSample { t: 0.0, ax: rot[0], ay: rot[1], az: rot[2] },
                9.81,
            ).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "rotation changed scalar: {a} vs {b}");
        }

        #[test]
        fn window_count_matches_closed_form(
            duration_s in 0.5f64..30.0,
            window_len_s in 1.0f64..5.0,
            update_period_s in 0.25f64..2.0,
        ) {
            prop_assume!(window_len_s >= update_period_s);
            // Keep lengths on exact sample boundaries so the count formula
            // is unambiguous, and do the counting in whole samples: float
            // division (e.g. 18.62 / 0.38) lands a hair under the integer
            // it should hit.
            let rate = 100.0;
            let n = (duration_s * rate).round() as usize;
            let wl = (window_len_s * rate).round() as usize;
            let st = (update_period_s * rate).round() as usize;
            let stream = uniform_stream(n as f64 / rate, rate);
            let cfg = StreamConfig {
                window_len_s: wl as f64 / rate,
                update_period_s: st as f64 / rate,
                rate_hz: rate,
                gravity: 9.81,
            };
            let got = windows(&stream, &cfg).unwrap().count();
            let expected = if n < wl { 0 } else { (n - wl) / st + 1 };
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn every_emitted_window_has_full_length(duration_s in 3.0f64..20.0) {
            let stream = uniform_stream(duration_s, 100.0);
            let cfg = StreamConfig::default();
            for w in windows(&stream, &cfg).unwrap() {
                prop_assert_eq!(w.samples.len(), 300);
            }
        }
    }

    #[test]
    fn window_contains_exactly_its_time_range() {
        let stream = uniform_stream(6.0, 100.0);
        let cfg = StreamConfig::default();
        for w in windows(&stream, &cfg).unwrap() {
            let in_range: Vec<&ImuSample> = stream
                .iter()
                .filter(|s| s.t >= w.start_t && s.t < w.start_t + cfg.window_len_s)
                .collect();
            assert_eq!(in_range.len(), w.samples.len());
            for (sample, scalar) in in_range.iter().zip(&w.samples) {
                let expect = total_acceleration(sample, cfg.gravity).unwrap();
                assert_eq!(expect, *scalar);
            }
        }
    }
}
