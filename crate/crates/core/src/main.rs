use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cpr_core::cli::{
    apply_hyperopt_kv, cmd_eval, cmd_fit, cmd_hyperopt, cmd_synth, parse_kv_file, FitSettings,
    SynthSettings,
};
use cpr_core::error::Error;
use cpr_core::hyperopt::MetaConfig;

/// Estimate chest-compression frequency and depth from accelerometer data.
#[derive(Parser)]
#[command(name = "cprfit", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic recordings with known compression parameters.
    Synth(SynthArgs),
    /// Fit every window of a recording and write per-window estimates.
    Fit(FitArgs),
    /// Score a predictions file against reference compression events.
    Eval(EvalArgs),
    /// Search fitter hyperparameters with differential evolution.
    Hyperopt(HyperoptArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for recordings, events, and truth.csv.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Config file with `key = value` lines; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of recordings to generate.
    #[arg(long)]
    recordings: Option<usize>,
    /// Length of each recording in seconds.
    #[arg(long)]
    duration_s: Option<f64>,
    /// Sampling rate in Hz.
    #[arg(long)]
    rate_hz: Option<f64>,
    /// Noise standard deviation in m/s^2 (default: 10% of each tone's peak).
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Gravity offset added to the vertical axis.
    #[arg(long)]
    gravity: Option<f64>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    /// Input recording CSV (`t,ax,ay,az`).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Output predictions CSV.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Config file with `key = value` lines; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Estimator to run: `sine` or `fft`.
    #[arg(long)]
    estimator: Option<String>,
    /// Window length in seconds.
    #[arg(long)]
    window_len_s: Option<f64>,
    /// Window update period in seconds.
    #[arg(long)]
    update_period_s: Option<f64>,
    /// Expected sampling rate in Hz.
    #[arg(long)]
    rate_hz: Option<f64>,
    /// Gravity magnitude subtracted from the acceleration norm.
    #[arg(long)]
    gravity: Option<f64>,
    /// Population size.
    #[arg(long)]
    mu: Option<usize>,
    /// Offspring per generation.
    #[arg(long)]
    lambda: Option<usize>,
    /// Generation cap per window.
    #[arg(long)]
    g_max: Option<usize>,
    /// Fraction of the population reseeded between windows.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Relative-improvement convergence threshold.
    #[arg(long)]
    c_min: Option<f64>,
    /// Mutation range constant.
    #[arg(long)]
    m_const: Option<f64>,
    /// RNG seed for the fitter.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predictions CSV from `fit`.
    #[arg(long, value_name = "FILE")]
    predictions: PathBuf,
    /// Reference events CSV (`start_t,end_t,ref_ccf,ref_ccd`).
    #[arg(long, value_name = "FILE")]
    reference: PathBuf,
    /// Output JSON report.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Also write flat per-event pairs to this CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct HyperoptArgs {
    /// Output JSON summary.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Config file with `key = value` lines; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Also write every evaluation to this trace CSV.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Differential-evolution population size.
    #[arg(long)]
    de_pop: Option<usize>,
    /// Differential-evolution iterations per round.
    #[arg(long)]
    de_iters: Option<usize>,
    /// Independent rounds (fresh corpus each).
    #[arg(long)]
    rounds: Option<usize>,
    /// Windows per corpus.
    #[arg(long)]
    corpus_size: Option<usize>,
    /// Corpus noise level relative to each tone's peak.
    #[arg(long)]
    relative_noise: Option<f64>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(path: &Option<PathBuf>) -> Result<Vec<(String, String)>, Error> {
    match path {
        Some(p) => parse_kv_file(&std::fs::read_to_string(p)?),
        None => Ok(Vec::new()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Synth(a) => {
            let mut s = SynthSettings::default();
            for (k, v) in load_config(&a.config)? {
                s.apply_kv(&k, &v)?;
            }
            if let Some(v) = a.recordings {
                s.recordings = v;
            }
            if let Some(v) = a.duration_s {
                s.duration_s = v;
            }
            if let Some(v) = a.rate_hz {
                s.rate_hz = v;
            }
            if let Some(v) = a.noise_sigma {
                s.noise_sigma = Some(v);
            }
            if let Some(v) = a.gravity {
                s.gravity = v;
            }
            if let Some(v) = a.seed {
                s.seed = v;
            }
            cmd_synth(&s, &a.out_dir)
        }
        Cmd::Fit(a) => {
            let mut s = FitSettings::default();
            for (k, v) in load_config(&a.config)? {
                s.apply_kv(&k, &v)?;
            }
            if let Some(v) = &a.estimator {
                s.apply_kv("estimator", v)?;
            }
            if let Some(v) = a.window_len_s {
                s.stream.window_len_s = v;
            }
            if let Some(v) = a.update_period_s {
                s.stream.update_period_s = v;
            }
            if let Some(v) = a.rate_hz {
                s.stream.rate_hz = v;
            }
            if let Some(v) = a.gravity {
                s.stream.gravity = v;
            }
            if let Some(v) = a.mu {
                s.evo.mu = v;
            }
            if let Some(v) = a.lambda {
                s.evo.lambda = v;
            }
            if let Some(v) = a.g_max {
                s.evo.g_max = v;
            }
            if let Some(v) = a.epsilon {
                s.evo.epsilon = v;
            }
            if let Some(v) = a.c_min {
                s.evo.c_min = v;
            }
            if let Some(v) = a.m_const {
                s.evo.m_const = v;
            }
            if let Some(v) = a.seed {
                s.evo.seed = v;
            }
            cmd_fit(&a.input, &a.output, &s).map(|rows| {
                eprintln!("wrote {rows} estimate(s) to {}", a.output.display());
            })
        }
        Cmd::Eval(a) => cmd_eval(&a.predictions, &a.reference, &a.output, a.csv.as_deref())
            .map(|report| {
                eprintln!(
                    "aligned {} event(s), {} uncovered",
                    report.n_aligned, report.n_uncovered
                );
            }),
        Cmd::Hyperopt(a) => {
            let mut cfg = MetaConfig::default();
            for (k, v) in load_config(&a.config)? {
                apply_hyperopt_kv(&mut cfg, &k, &v)?;
            }
            if let Some(v) = a.de_pop {
                cfg.de_pop = v;
            }
            if let Some(v) = a.de_iters {
                cfg.de_iters = v;
            }
            if let Some(v) = a.rounds {
                cfg.rounds = v;
            }
            if let Some(v) = a.corpus_size {
                cfg.corpus_size = v;
            }
            if let Some(v) = a.relative_noise {
                cfg.relative_noise = v;
            }
            if let Some(v) = a.seed {
                cfg.seed = v;
            }
            cmd_hyperopt(&cfg, &a.output, a.trace.as_deref()).map(|outcome| {
                eprintln!(
                    "best vectors per round written to {}; mu mean {:.1}, g_max mean {:.1}",
                    a.output.display(),
                    outcome.summary.mu.mean,
                    outcome.summary.g_max.mean
                );
            })
        }
    }
}

/// Usage and configuration mistakes exit 1; malformed or unusable data exits 2.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidParams(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
