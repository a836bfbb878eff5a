//! Command implementations and file formats for the `cprfit` binary.
//!
//! Settings resolve in three layers: built-in defaults, then a flat
//! `key = value` config file, then command-line flags. Unknown config keys
//! are rejected. Every output file embeds the resolved configuration, as
//! `#` comment lines in CSVs and a `config` object in JSON reports, so a
//! run can be reproduced from its outputs alone.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{
    align, error_report, read_events_csv, AlignedPrediction, CompressionEvent, ErrorReport,
    Prediction,
};
use crate::evo::{EvoConfig, Fitter};
use crate::fft::fft_ccf;
use crate::hyperopt::{de_optimize, DeOutcome, MetaConfig};
use crate::model::SineParams;
use crate::signal::{read_recording_csv, windows, write_recording_csv, StreamConfig};
use crate::synth::{default_noise_sigma, synthesize_recording, SynthSpec};

/// Which per-window estimator `fit` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Sine,
    Fft,
}

impl Estimator {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(Estimator::Sine),
            "fft" => Ok(Estimator::Fft),
            other => Err(Error::InvalidConfig(format!(
                "estimator must be `sine` or `fft`, got `{other}`"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Estimator::Sine => "sine",
            Estimator::Fft => "fft",
        }
    }
}

/// Parse a flat `key = value` config file. `#` comments and blank lines are
/// skipped; keys may repeat (later wins, since pairs apply in order).
pub fn parse_kv_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: expected a number, got `{value}`")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: expected an integer, got `{value}`")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: expected an integer, got `{value}`")))
}

fn unknown_key(cmd: &str, key: &str) -> Error {
    Error::InvalidConfig(format!("unknown {cmd} config key `{key}`"))
}

/// Resolved settings for `fit`: windowing, fitter, and estimator choice.
#[derive(Debug, Clone)]
pub struct FitSettings {
    pub stream: StreamConfig,
    pub evo: EvoConfig,
    pub estimator: Estimator,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            stream: StreamConfig::default(),
            evo: EvoConfig::default(),
            estimator: Estimator::Sine,
        }
    }
}

impl FitSettings {
    /// Apply one config entry; unknown keys are an error.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "window_len_s" => self.stream.window_len_s = parse_f64(key, value)?,
            "update_period_s" => self.stream.update_period_s = parse_f64(key, value)?,
            "rate_hz" => self.stream.rate_hz = parse_f64(key, value)?,
            "gravity" => self.stream.gravity = parse_f64(key, value)?,
            "mu" => self.evo.mu = parse_usize(key, value)?,
            "lambda" => self.evo.lambda = parse_usize(key, value)?,
            "g_max" => self.evo.g_max = parse_usize(key, value)?,
            "epsilon" => self.evo.epsilon = parse_f64(key, value)?,
            "c_min" => self.evo.c_min = parse_f64(key, value)?,
            "m_const" => self.evo.m_const = parse_f64(key, value)?,
            "seed" => self.evo.seed = parse_u64(key, value)?,
            "amplitude_lo" => self.evo.bounds.amplitude.lo = parse_f64(key, value)?,
            "amplitude_hi" => self.evo.bounds.amplitude.hi = parse_f64(key, value)?,
            "omega_lo" => self.evo.bounds.omega.lo = parse_f64(key, value)?,
            "omega_hi" => self.evo.bounds.omega.hi = parse_f64(key, value)?,
            "estimator" => self.estimator = Estimator::parse(value)?,
            _ => return Err(unknown_key("fit", key)),
        }
        Ok(())
    }

    fn echo_lines(&self, input: &Path) -> Vec<String> {
        vec![
            format!("input = {}", input.display()),
            format!("estimator = {}", self.estimator.name()),
            format!("window_len_s = {}", self.stream.window_len_s),
            format!("update_period_s = {}", self.stream.update_period_s),
            format!("rate_hz = {}", self.stream.rate_hz),
            format!("gravity = {}", self.stream.gravity),
            format!("mu = {}", self.evo.mu),
            format!("lambda = {}", self.evo.lambda),
            format!("g_max = {}", self.evo.g_max),
            format!("epsilon = {}", self.evo.epsilon),
            format!("c_min = {}", self.evo.c_min),
            format!("m_const = {}", self.evo.m_const),
            format!("amplitude_lo = {}", self.evo.bounds.amplitude.lo),
            format!("amplitude_hi = {}", self.evo.bounds.amplitude.hi),
            format!("omega_lo = {}", self.evo.bounds.omega.lo),
            format!("omega_hi = {}", self.evo.bounds.omega.hi),
            format!("seed = {}", self.evo.seed),
        ]
    }
}

/// Resolved settings for `synth`: a batch of random single-tone recordings.
#[derive(Debug, Clone)]
pub struct SynthSettings {
    pub recordings: usize,
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Fixed noise level; `None` means 10% of each recording's peak.
    pub noise_sigma: Option<f64>,
    pub gravity: f64,
    pub seed: u64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            recordings: 1,
            duration_s: 10.0,
            rate_hz: 100.0,
            noise_sigma: None,
            gravity: 9.81,
            seed: 0,
        }
    }
}

impl SynthSettings {
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "recordings" => self.recordings = parse_usize(key, value)?,
            "duration_s" => self.duration_s = parse_f64(key, value)?,
            "rate_hz" => self.rate_hz = parse_f64(key, value)?,
            "noise_sigma" => self.noise_sigma = Some(parse_f64(key, value)?),
            "gravity" => self.gravity = parse_f64(key, value)?,
            "seed" => self.seed = parse_u64(key, value)?,
            _ => return Err(unknown_key("synth", key)),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.recordings == 0 {
            return Err(Error::InvalidConfig("recordings must be >= 1".into()));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidConfig("duration_s must be positive".into()));
        }
        if let Some(s) = self.noise_sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidConfig("noise_sigma must be >= 0".into()));
            }
        }
        Ok(())
    }

    fn echo_lines(&self) -> Vec<String> {
        vec![
            format!("recordings = {}", self.recordings),
            format!("duration_s = {}", self.duration_s),
            format!("rate_hz = {}", self.rate_hz),
            match self.noise_sigma {
                Some(s) => format!("noise_sigma = {s}"),
                None => "noise_sigma = auto".to_string(),
            },
            format!("gravity = {}", self.gravity),
            format!("seed = {}", self.seed),
        ]
    }
}

/// Apply hyperopt config keys onto a [`MetaConfig`].
pub fn apply_hyperopt_kv(cfg: &mut MetaConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "de_pop" => cfg.de_pop = parse_usize(key, value)?,
        "de_iters" => cfg.de_iters = parse_usize(key, value)?,
        "rounds" => cfg.rounds = parse_usize(key, value)?,
        "seed" => cfg.seed = parse_u64(key, value)?,
        "f" => cfg.f = parse_f64(key, value)?,
        "cr" => cfg.cr = parse_f64(key, value)?,
        "corpus_size" => cfg.corpus_size = parse_usize(key, value)?,
        "relative_noise" => cfg.relative_noise = parse_f64(key, value)?,
        _ => return Err(unknown_key("hyperopt", key)),
    }
    Ok(())
}

fn create_out(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_echo(w: &mut impl Write, lines: &[String]) -> Result<()> {
    for line in lines {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

/// Generate `recordings` single-tone recordings under `out_dir`, each with a
/// matching per-cycle event file, plus a `truth.csv` indexing the batch.
///
/// Tone parameters draw uniformly from 1..3 Hz, 0.01..0.05 m, 0..2pi phase,
/// the same distributions the fitter's bounds cover.
pub fn cmd_synth(settings: &SynthSettings, out_dir: &Path) -> Result<()> {
    settings.validate()?;
    fs::create_dir_all(out_dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut truth = create_out(&out_dir.join("truth.csv"))?;
    write_echo(&mut truth, &settings.echo_lines())?;
    writeln!(
        truth,
        "index,file,freq_hz,amplitude_m,phase,noise_sigma,ccf,ccd"
    )?;

    for i in 0..settings.recordings {
        let freq_hz = rng.random_range(1.0..3.0);
        let amplitude_m = rng.random_range(0.01..0.05);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let noise_sigma = settings
            .noise_sigma
            .unwrap_or_else(|| default_noise_sigma(freq_hz, amplitude_m));
        let spec = SynthSpec {
            freq_hz,
            amplitude_m,
            phase,
            duration_s: settings.duration_s,
            rate_hz: settings.rate_hz,
            noise_sigma,
            seed: crate::derive_seed(settings.seed, &[i as u64]),
        };
        let samples = synthesize_recording(&spec, settings.gravity)?;

        let recording_name = format!("recording_{i:02}.csv");
        let events_name = format!("events_{i:02}.csv");
        let mut echo = settings.echo_lines();
        echo.push(format!("recording_index = {i}"));
        echo.push(format!("freq_hz = {freq_hz}"));
        echo.push(format!("amplitude_m = {amplitude_m}"));
        echo.push(format!("phase = {phase}"));
        echo.push(format!("recording_noise_sigma = {noise_sigma}"));
        write_recording_csv(&out_dir.join(&recording_name), &samples, &echo)?;

        let mut events = create_out(&out_dir.join(&events_name))?;
        write_echo(&mut events, &echo)?;
        writeln!(events, "start_t,end_t,ref_ccf,ref_ccd")?;
        // One event per compression cycle; a trailing partial cycle is dropped.
        let truth_params = spec.truth();
        let mut k = 0u64;
        loop {
            let start = k as f64 / freq_hz;
            let end = (k + 1) as f64 / freq_hz;
            if end > settings.duration_s + 1e-9 {
                break;
            }
            writeln!(
                events,
                "{},{},{},{}",
                start,
                end,
                truth_params.ccf_cpm(),
                truth_params.ccd_cm()
            )?;
            k += 1;
        }
        events.flush()?;

        writeln!(
            truth,
            "{},{},{},{},{},{},{},{}",
            i,
            recording_name,
            freq_hz,
            amplitude_m,
            phase,
            noise_sigma,
            truth_params.ccf_cpm(),
            truth_params.ccd_cm()
        )?;
    }
    truth.flush()?;
    Ok(())
}

/// Run the chosen estimator over every window of a recording, streaming one
/// CSV row per window. Returns the number of rows written.
///
/// A recording shorter than one window produces a header-only file and a
/// warning on stderr, not an error.
pub fn cmd_fit(input: &Path, output: &Path, settings: &FitSettings) -> Result<usize> {
    // Reject bad settings before touching any file: usage mistakes should
    // not be masked by (or mixed into) data errors.
    settings.stream.validate()?;
    if settings.estimator == Estimator::Sine {
        settings.evo.validate()?;
    }
    let samples = read_recording_csv(input)?;
    let wins = windows(&samples, &settings.stream)?;
    let mut out = create_out(output)?;
    write_echo(&mut out, &settings.echo_lines(input))?;

    let mut rows = 0usize;
    match settings.estimator {
        Estimator::Sine => {
            writeln!(out, "window_start_t,window_len_s,ccf,ccd,loss,generations")?;
            let mut fitter = Fitter::new(settings.evo.clone())?;
            for window in wins {
                let est = fitter.fit_window(&window)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    est.window_start_t,
                    est.window_len_s,
                    est.ccf,
                    est.ccd,
                    est.loss,
                    fitter.generations_last_window()
                )?;
                // Keep each estimate durable before the next window is touched.
                out.flush()?;
                rows += 1;
            }
        }
        Estimator::Fft => {
            writeln!(out, "window_start_t,window_len_s,ccf,peak_bin,peak_magnitude")?;
            for window in wins {
                let est = fft_ccf(&window)?;
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    est.window_start_t, est.window_len_s, est.ccf, est.peak_bin, est.peak_magnitude
                )?;
                out.flush()?;
                rows += 1;
            }
        }
    }
    out.flush()?;
    if rows == 0 {
        eprintln!(
            "warning: {} is shorter than one window ({} s); no estimates produced",
            input.display(),
            settings.stream.window_len_s
        );
    }
    Ok(rows)
}

/// Read a predictions CSV produced by [`cmd_fit`], either estimator's layout.
/// Returns the predictions plus the embedded config comment lines.
pub fn read_predictions_csv(path: &Path) -> Result<(Vec<Prediction>, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    let mut echo = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    let mut preds = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            echo.push(comment.trim().to_string());
            continue;
        }
        match header {
            None => {
                let cols: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
                let names: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
                let ccd_col = match names.as_slice() {
                    ["window_start_t", "window_len_s", "ccf", "ccd", "loss", "generations"] => {
                        Some(3)
                    }
                    ["window_start_t", "window_len_s", "ccf", "peak_bin", "peak_magnitude"] => None,
                    _ => {
                        return Err(Error::Parse {
                            line: idx + 1,
                            msg: format!("unrecognized predictions header `{line}`"),
                        })
                    }
                };
                header = Some((cols.len(), ccd_col.map_or(usize::MAX, |c| c)));
            }
            Some((ncols, ccd_col)) => {
                let cells: Vec<&str> = line.split(',').map(str::trim).collect();
                if cells.len() != ncols {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("expected {ncols} columns, got {}", cells.len()),
                    });
                }
                let field = |col: usize| -> Result<f64> {
                    cells[col].parse().map_err(|_| Error::Parse {
                        line: idx + 1,
                        msg: format!("bad number `{}`", cells[col]),
                    })
                };
                let ccd = if ccd_col == usize::MAX {
                    None
                } else {
                    Some(field(ccd_col)?)
                };
                preds.push(Prediction {
                    window_start_t: field(0)?,
                    window_len_s: field(1)?,
                    ccf: field(2)?,
                    ccd,
                });
            }
        }
    }
    if header.is_none() {
        return Err(Error::Parse {
            line: 1,
            msg: "predictions file has no header".into(),
        });
    }
    Ok((preds, echo))
}

#[derive(Debug, Serialize)]
struct EventRow {
    start_t: f64,
    end_t: f64,
    covered: bool,
    n_contributors: usize,
    ref_ccf: Option<f64>,
    pred_ccf: Option<f64>,
    ref_ccd: Option<f64>,
    pred_ccd: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EvalConfigEcho {
    predictions: String,
    reference: String,
    upstream: Vec<String>,
}

#[derive(Debug, Serialize)]
struct EvalDoc {
    config: EvalConfigEcho,
    report: ErrorReport,
    events: Vec<EventRow>,
}

fn event_rows(
    aligned: &[AlignedPrediction],
    uncovered: &[CompressionEvent],
) -> Vec<EventRow> {
    let mut rows: Vec<EventRow> = aligned
        .iter()
        .map(|a| EventRow {
            start_t: a.event.start_t,
            end_t: a.event.end_t,
            covered: true,
            n_contributors: a.n_contributors,
            ref_ccf: a.event.ref_ccf,
            pred_ccf: Some(a.pred_ccf),
            ref_ccd: a.event.ref_ccd,
            pred_ccd: a.pred_ccd,
        })
        .collect();
    rows.extend(uncovered.iter().map(|e| EventRow {
        start_t: e.start_t,
        end_t: e.end_t,
        covered: false,
        n_contributors: 0,
        ref_ccf: e.ref_ccf,
        pred_ccf: None,
        ref_ccd: e.ref_ccd,
        pred_ccd: None,
    }));
    rows.sort_by(|a, b| a.start_t.total_cmp(&b.start_t));
    rows
}

/// Score a predictions file against reference events. Writes the JSON report
/// (config echo, error summary, per-event rows) and optionally a flat CSV of
/// per-event pairs for plotting. Errors with [`Error::EmptyReport`] when no
/// event overlaps any window.
pub fn cmd_eval(
    predictions: &Path,
    reference: &Path,
    output: &Path,
    csv: Option<&Path>,
) -> Result<ErrorReport> {
    let (preds, upstream) = read_predictions_csv(predictions)?;
    let events = read_events_csv(reference)?;
    let alignment = align(&events, &preds)?;
    if alignment.aligned.is_empty() {
        return Err(Error::EmptyReport);
    }
    let report = error_report(&alignment)?;

    let doc = EvalDoc {
        config: EvalConfigEcho {
            predictions: predictions.display().to_string(),
            reference: reference.display().to_string(),
            upstream,
        },
        report: report.clone(),
        events: event_rows(&alignment.aligned, &alignment.uncovered),
    };
    let mut out = create_out(output)?;
    let mut body = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::InvalidConfig(format!("report serialization failed: {e}")))?;
    body.push('\n');
    out.write_all(body.as_bytes())?;
    out.flush()?;

    if let Some(csv_path) = csv {
        let mut w = create_out(csv_path)?;
        writeln!(
            w,
            "# predictions = {}\n# reference = {}",
            predictions.display(),
            reference.display()
        )?;
        writeln!(
            w,
            "start_t,end_t,covered,n_contributors,ref_ccf,pred_ccf,err_ccf,ba_mean_ccf,\
             ref_ccd,pred_ccd,err_ccd,ba_mean_ccd"
        )?;
        for row in event_rows(&alignment.aligned, &alignment.uncovered) {
            let pair = |r: Option<f64>, p: Option<f64>| match (r, p) {
                (Some(r), Some(p)) => (Some(p - r), Some((p + r) / 2.0)),
                _ => (None, None),
            };
            let (err_f, mean_f) = pair(row.ref_ccf, row.pred_ccf);
            let (err_d, mean_d) = pair(row.ref_ccd, row.pred_ccd);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                row.start_t,
                row.end_t,
                row.covered,
                row.n_contributors,
                fmt_opt(row.ref_ccf),
                fmt_opt(row.pred_ccf),
                fmt_opt(err_f),
                fmt_opt(mean_f),
                fmt_opt(row.ref_ccd),
                fmt_opt(row.pred_ccd),
                fmt_opt(err_d),
                fmt_opt(mean_d)
            )?;
        }
        w.flush()?;
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
struct HyperoptDoc {
    config: MetaConfig,
    summary: crate::hyperopt::HyperSummary,
    round_best: Vec<crate::hyperopt::RoundBest>,
    degenerate_evals: usize,
}

/// Run the differential-evolution hyperparameter search and write its JSON
/// summary; optionally dump the full evaluation trace as CSV.
pub fn cmd_hyperopt(cfg: &MetaConfig, output: &Path, trace: Option<&Path>) -> Result<DeOutcome> {
    let outcome = de_optimize(cfg)?;
    if outcome.degenerate_evals > 0 {
        eprintln!(
            "note: {} evaluation(s) had a zero error factor, making their cost zero; \
             treat the winning vector with suspicion",
            outcome.degenerate_evals
        );
    }

    let doc = HyperoptDoc {
        config: cfg.clone(),
        summary: outcome.summary.clone(),
        round_best: outcome.round_best.clone(),
        degenerate_evals: outcome.degenerate_evals,
    };
    let mut out = create_out(output)?;
    let mut body = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::InvalidConfig(format!("report serialization failed: {e}")))?;
    body.push('\n');
    out.write_all(body.as_bytes())?;
    out.flush()?;

    if let Some(trace_path) = trace {
        let mut w = create_out(trace_path)?;
        let mut echo = String::new();
        write!(
            echo,
            "de_pop = {}, de_iters = {}, rounds = {}, seed = {}, f = {}, cr = {}, \
             corpus_size = {}, relative_noise = {}",
            cfg.de_pop,
            cfg.de_iters,
            cfg.rounds,
            cfg.seed,
            cfg.f,
            cfg.cr,
            cfg.corpus_size,
            cfg.relative_noise
        )
        .expect("write to String");
        writeln!(w, "# {echo}")?;
        writeln!(w, "round,iter,index,mu,g_max,epsilon,c_min,cost")?;
        for r in &outcome.trace {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.round,
                r.iter,
                r.index,
                r.vector.mu,
                r.vector.g_max,
                r.vector.epsilon,
                r.vector.c_min,
                r.cost
            )?;
        }
        w.flush()?;
    }
    Ok(outcome)
}

/// Round-trip helper for tests and the Python bindings: fit one window held
/// in memory without touching the filesystem.
pub fn fit_params_once(window: &crate::signal::Window, cfg: EvoConfig) -> Result<SineParams> {
    let mut fitter = Fitter::new(cfg)?;
    fitter.fit_window(window)?;
    Ok(fitter.population()[0].params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_parser_skips_comments_and_blanks() {
        let text = "# a comment\n\nmu = 40\n  g_max=7 \n# end\n";
        let pairs = parse_kv_file(text).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("mu".to_string(), "40".to_string()),
                ("g_max".to_string(), "7".to_string())
            ]
        );
    }

    #[test]
    fn kv_parser_rejects_bare_words() {
        let err = parse_kv_file("mu = 40\nnonsense\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn fit_settings_apply_and_reject() {
        let mut s = FitSettings::default();
        s.apply_kv("mu", "60").unwrap();
        s.apply_kv("estimator", "fft").unwrap();
        s.apply_kv("omega_hi", "20.0").unwrap();
        assert_eq!(s.evo.mu, 60);
        assert_eq!(s.estimator, Estimator::Fft);
        assert_eq!(s.evo.bounds.omega.hi, 20.0);
        assert!(s.apply_kv("nope", "1").is_err());
        assert!(s.apply_kv("mu", "sixty").is_err());
        assert!(s.apply_kv("estimator", "wavelet").is_err());
    }

    #[test]
    fn synth_settings_reject_unknown_and_invalid() {
        let mut s = SynthSettings::default();
        s.apply_kv("recordings", "3").unwrap();
        assert!(s.apply_kv("mu", "40").is_err());
        s.recordings = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn predictions_round_trip_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let rec = dir.path().join("rec.csv");
        let spec = SynthSpec {
            duration_s: 5.0,
            noise_sigma: 0.0,
            ..SynthSpec::default()
        };
        let samples = synthesize_recording(&spec, 9.81).unwrap();
        write_recording_csv(&rec, &samples, &[]).unwrap();

        for (estimator, has_ccd) in [(Estimator::Fft, false), (Estimator::Sine, true)] {
            let out = dir.path().join(format!("pred_{}.csv", estimator.name()));
            let mut settings = FitSettings {
                estimator,
                ..FitSettings::default()
            };
            settings.evo.mu = 40;
            settings.evo.g_max = 3;
            let rows = cmd_fit(&rec, &out, &settings).unwrap();
            assert_eq!(rows, 3);
            let (preds, echo) = read_predictions_csv(&out).unwrap();
            assert_eq!(preds.len(), 3);
            assert!(echo.iter().any(|l| l.starts_with("estimator = ")));
            assert_eq!(preds[0].window_start_t, 0.0);
            assert_eq!(preds[0].window_len_s, 3.0);
            assert_eq!(preds.iter().all(|p| p.ccd.is_some()), has_ccd);
        }
    }

    #[test]
    fn short_recording_yields_header_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let rec = dir.path().join("short.csv");
        let spec = SynthSpec {
            duration_s: 1.0,
            noise_sigma: 0.0,
            ..SynthSpec::default()
        };
        write_recording_csv(&rec, &synthesize_recording(&spec, 9.81).unwrap(), &[]).unwrap();
        let out = dir.path().join("pred.csv");
        let rows = cmd_fit(&rec, &out, &FitSettings::default()).unwrap();
        assert_eq!(rows, 0);
        let (preds, _) = read_predictions_csv(&out).unwrap();
        assert!(preds.is_empty());
    }

    #[test]
    fn unrecognized_predictions_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert!(matches!(
            read_predictions_csv(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn synth_batch_writes_consistent_truth_and_events() {
        let dir = tempfile::tempdir().unwrap();
        let settings = SynthSettings {
            recordings: 2,
            duration_s: 4.0,
            seed: 9,
            ..SynthSettings::default()
        };
        cmd_synth(&settings, dir.path()).unwrap();

        let truth = fs::read_to_string(dir.path().join("truth.csv")).unwrap();
        let rows: Vec<&str> = truth
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("index"))
            .collect();
        assert_eq!(rows.len(), 2);

        for i in 0..2 {
            let rec = read_recording_csv(&dir.path().join(format!("recording_{i:02}.csv"))).unwrap();
            assert_eq!(rec.len(), 400);
            let events = read_events_csv(&dir.path().join(format!("events_{i:02}.csv"))).unwrap();
            assert!(!events.is_empty());
            // Cycle events tile [0, duration) without gaps.
            assert_eq!(events[0].start_t, 0.0);
            for pair in events.windows(2) {
                assert!((pair[0].end_t - pair[1].start_t).abs() < 1e-12);
            }
            let truth_ccf: f64 = rows[i]
                .split(',')
                .nth(6)
                .unwrap()
                .parse()
                .unwrap();
            assert!((events[0].ref_ccf.unwrap() - truth_ccf).abs() < 1e-9);
        }
    }

    #[test]
    fn synth_is_deterministic_per_seed() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let settings = SynthSettings {
            recordings: 1,
            duration_s: 3.0,
            seed: 5,
            ..SynthSettings::default()
        };
        cmd_synth(&settings, dir_a.path()).unwrap();
        cmd_synth(&settings, dir_b.path()).unwrap();
        let a = fs::read(dir_a.path().join("recording_00.csv")).unwrap();
        let b = fs::read(dir_b.path().join("recording_00.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eval_pipeline_produces_report_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let settings = SynthSettings {
            recordings: 1,
            duration_s: 6.0,
            noise_sigma: Some(0.0),
            seed: 3,
            ..SynthSettings::default()
        };
        cmd_synth(&settings, dir.path()).unwrap();

        let pred_path = dir.path().join("pred.csv");
        let mut fit = FitSettings::default();
        fit.evo.g_max = 30;
        fit.evo.seed = 1;
        cmd_fit(&dir.path().join("recording_00.csv"), &pred_path, &fit).unwrap();

        let report_path = dir.path().join("report.json");
        let csv_path = dir.path().join("pairs.csv");
        let report = cmd_eval(
            &pred_path,
            &dir.path().join("events_00.csv"),
            &report_path,
            Some(&csv_path),
        )
        .unwrap();
        assert!(report.n_aligned > 0);
        let ccf = report.ccf.expect("ccf metric present");
        assert!(ccf.median_abs_error < 5.0, "median {}", ccf.median_abs_error);

        let json = fs::read_to_string(&report_path).unwrap();
        assert!(json.contains("\"config\""));
        assert!(json.contains("\"report\""));
        assert!(json.contains("\"events\""));
        let pairs = fs::read_to_string(&csv_path).unwrap();
        assert!(pairs.lines().any(|l| l.starts_with("start_t,")));
    }

    #[test]
    fn eval_with_no_overlap_is_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let pred = dir.path().join("pred.csv");
        fs::write(
            &pred,
            "window_start_t,window_len_s,ccf,ccd,loss,generations\n0,3,120,4,0.1,5\n",
        )
        .unwrap();
        let events = dir.path().join("events.csv");
        fs::write(&events, "start_t,end_t,ref_ccf,ref_ccd\n100,101,120,4\n").unwrap();
        let out = dir.path().join("report.json");
        assert!(matches!(
            cmd_eval(&pred, &events, &out, None),
            Err(Error::EmptyReport)
        ));
    }
}
