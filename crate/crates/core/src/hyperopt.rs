//! Differential-evolution search over the fitter's hyperparameters.
//!
//! Each candidate hyperparameter vector is scored by running the fitter
//! over a small synthetic corpus and multiplying the summed frequency and
//! depth errors by the compute budget `mu * g_max`, so accuracy and cost are
//! traded off in one number. The DE search (rand/1/bin) runs for a fixed
//! iteration budget and is repeated over fresh corpora; the result is the
//! distribution of the per-round winners.

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::evo::{EvoConfig, Fitter, Interval};
use crate::synth::{appendix_corpus, LabelledWindow};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Penalty per failed window fit: the width of the estimate bands.
const FAIL_CCF_CPM: f64 = 210.0;
const FAIL_CCD_CM: f64 = 10.0;

/// Search box, one interval per hyperparameter.
pub const HYPER_BOX: [Interval; 4] = [
    Interval { lo: 20.0, hi: 1000.0 }, // mu
    Interval { lo: 2.0, hi: 50.0 },    // g_max
    Interval { lo: 0.0, hi: 1.0 },     // epsilon
    Interval { lo: 0.0, hi: 0.2 },     // c_min
];

/// One hyperparameter candidate. `mu` and `g_max` live on a continuous
/// scale for the search and are rounded to integers at evaluation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HyperVector {
    pub mu: f64,
    pub g_max: f64,
    pub epsilon: f64,
    pub c_min: f64,
}

impl HyperVector {
    fn to_array(self) -> [f64; 4] {
        [self.mu, self.g_max, self.epsilon, self.c_min]
    }

    fn from_array(v: [f64; 4]) -> Self {
        Self {
            mu: v[0],
            g_max: v[1],
            epsilon: v[2],
            c_min: v[3],
        }
    }

    pub fn clamped(self) -> Self {
        let mut v = self.to_array();
        for (x, iv) in v.iter_mut().zip(&HYPER_BOX) {
            *x = iv.clamp(*x);
        }
        Self::from_array(v)
    }

    pub fn validate(&self) -> Result<()> {
        for (x, iv) in self.to_array().iter().zip(&HYPER_BOX) {
            if !x.is_finite() || !iv.contains(*x) {
                return Err(Error::InvalidConfig(format!(
                    "hyperparameter {x} outside [{}, {}]",
                    iv.lo, iv.hi
                )));
            }
        }
        Ok(())
    }

    /// Integer (mu, g_max) as used at evaluation time.
    pub fn rounded(&self) -> (usize, usize) {
        (self.mu.round() as usize, self.g_max.round() as usize)
    }

    /// The vector as evaluated: integer mu and g_max, continuous rest.
    pub fn as_evaluated(&self) -> Self {
        let (mu, g_max) = self.rounded();
        Self {
            mu: mu as f64,
            g_max: g_max as f64,
            ..*self
        }
    }
}

/// Compute budget times the product of summed errors.
pub fn cost_from_errors(mu: usize, g_max: usize, ccf_err_sum: f64, ccd_err_sum: f64) -> f64 {
    mu as f64 * g_max as f64 * ccf_err_sum * ccd_err_sum
}

/// Cost of one hyperparameter vector on one corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaCost {
    pub cost: f64,
    pub ccf_err_sum: f64,
    pub ccd_err_sum: f64,
}

impl MetaCost {
    /// A zero error factor makes the product collapse to zero regardless of
    /// the other factor; callers may want to flag such degenerate scores.
    pub fn degenerate(&self) -> bool {
        self.ccf_err_sum == 0.0 || self.ccd_err_sum == 0.0
    }
}

/// Score `h` by fitting the corpus windows in sequence with one fitter (so
/// the retention fraction matters) and combining the absolute errors with
/// the compute budget. A window whose fit fails contributes the band maxima
/// (210 cpm, 10 cm) instead of erroring out.
pub fn meta_cost(h: &HyperVector, corpus: &[LabelledWindow], seed: u64) -> Result<MetaCost> {
    h.validate()?;
    let (mu, g_max) = h.rounded();
    let cfg = EvoConfig {
        mu,
        g_max,
        epsilon: h.epsilon,
        c_min: h.c_min,
        seed,
        ..EvoConfig::default()
    };
    let mut fitter = Fitter::new(cfg)?;
    let mut ccf_err_sum = 0.0;
    let mut ccd_err_sum = 0.0;
    for lw in corpus {
        match fitter.fit_window(&lw.window) {
            Ok(est) => {
                ccf_err_sum += (est.ccf - lw.truth.ccf_cpm()).abs();
                ccd_err_sum += (est.ccd - lw.truth.ccd_cm()).abs();
            }
            Err(_) => {
                ccf_err_sum += FAIL_CCF_CPM;
                ccd_err_sum += FAIL_CCD_CM;
            }
        }
    }
    Ok(MetaCost {
        cost: cost_from_errors(mu, g_max, ccf_err_sum, ccd_err_sum),
        ccf_err_sum,
        ccd_err_sum,
    })
}

/// Search settings. `f` and `cr` are the DE differential weight and
/// crossover rate; they ride along into the output metadata.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MetaConfig {
    pub de_pop: usize,
    pub de_iters: usize,
    /// Monte-Carlo repetitions, each on a fresh corpus.
    pub rounds: usize,
    pub seed: u64,
    pub f: f64,
    pub cr: f64,
    /// Labelled windows per corpus.
    pub corpus_size: usize,
    /// Corpus noise as a fraction of each window's clean peak.
    pub relative_noise: f64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            de_pop: 100,
            de_iters: 100,
            rounds: 100,
            seed: 0,
            f: 0.8,
            cr: 0.9,
            corpus_size: 10,
            relative_noise: 0.1,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("de_pop", self.de_pop),
            ("de_iters", self.de_iters),
            ("rounds", self.rounds),
            ("corpus_size", self.corpus_size),
        ] {
            if v < 1 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.de_pop < 4 {
            return Err(Error::InvalidConfig(
                "de_pop must be at least 4 for rand/1 mutation".into(),
            ));
        }
        if !(self.f.is_finite() && self.f > 0.0 && self.f <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "f must lie in (0, 2], got {}",
                self.f
            )));
        }
        if !(self.cr.is_finite() && (0.0..=1.0).contains(&self.cr)) {
            return Err(Error::InvalidConfig(format!(
                "cr must lie in [0, 1], got {}",
                self.cr
            )));
        }
        if !(self.relative_noise.is_finite() && self.relative_noise >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "relative_noise must be nonnegative, got {}",
                self.relative_noise
            )));
        }
        Ok(())
    }
}

/// One evaluated candidate, for the audit trace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TraceRecord {
    pub round: usize,
    /// 0 is the initial population; iterations count from 1.
    pub iter: usize,
    pub index: usize,
    pub vector: HyperVector,
    pub cost: f64,
}

/// Distribution summary of one hyperparameter over the round winners.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ParamStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub sd: f64,
}

fn param_stats(values: &[f64]) -> ParamStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    ParamStats {
        mean,
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        median: crate::eval::median(values),
        sd,
    }
}

/// Per-hyperparameter distribution of the round winners.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HyperSummary {
    pub mu: ParamStats,
    pub g_max: ParamStats,
    pub epsilon: ParamStats,
    pub c_min: ParamStats,
}

/// Winner of one round.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RoundBest {
    pub round: usize,
    pub vector: HyperVector,
    pub cost: f64,
}

/// Everything a search run produces.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DeOutcome {
    pub summary: HyperSummary,
    pub round_best: Vec<RoundBest>,
    /// Best-so-far cost after the initial evaluation and after each
    /// iteration, per round; nonincreasing by construction.
    pub best_histories: Vec<Vec<f64>>,
    pub trace: Vec<TraceRecord>,
    /// Evaluations whose cost collapsed to zero through a zero error factor.
    pub degenerate_evals: usize,
}

/// Run the full search: `rounds` independent DE runs (rand/1/bin) on fresh
/// corpora, summarized per hyperparameter over the round winners (winners
/// taken as evaluated, i.e. with mu and g_max rounded).
pub fn de_optimize(cfg: &MetaConfig) -> Result<DeOutcome> {
    cfg.validate()?;
    let mut round_best = Vec::with_capacity(cfg.rounds);
    let mut best_histories = Vec::with_capacity(cfg.rounds);
    let mut trace = Vec::new();
    let mut degenerate_evals = 0;

    for round in 0..cfg.rounds {
        let corpus = appendix_corpus(
            cfg.corpus_size,
            cfg.relative_noise,
            derive_seed(cfg.seed, &[1, round as u64]),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[2, round as u64]));
        let mut eval = |h: &HyperVector, iter: usize, index: usize, trace: &mut Vec<TraceRecord>|
         -> Result<f64> {
            let mc = meta_cost(
                h,
                &corpus,
                derive_seed(cfg.seed, &[3, round as u64, iter as u64, index as u64]),
            )?;
            if mc.degenerate() {
                degenerate_evals += 1;
            }
            trace.push(TraceRecord {
                round,
                iter,
                index,
                vector: *h,
                cost: mc.cost,
            });
            Ok(mc.cost)
        };

        let mut pop: Vec<HyperVector> = (0..cfg.de_pop)
            .map(|_| {
                let mut v = [0.0; 4];
                for (x, iv) in v.iter_mut().zip(&HYPER_BOX) {
                    *x = rng.random_range(iv.lo..=iv.hi);
                }
                HyperVector::from_array(v)
            })
            .collect();
        let mut costs = Vec::with_capacity(cfg.de_pop);
        for (i, h) in pop.clone().iter().enumerate() {
            costs.push(eval(h, 0, i, &mut trace)?);
        }
        let mut history = vec![costs.iter().cloned().fold(f64::INFINITY, f64::min)];

        for iter in 1..=cfg.de_iters {
            for i in 0..cfg.de_pop {
                let mut pick = |exclude: &[usize]| loop {
                    let r = rng.random_range(0..cfg.de_pop);
                    if !exclude.contains(&r) {
                        break r;
                    }
                };
                let r1 = pick(&[i]);
                let r2 = pick(&[i, r1]);
                let r3 = pick(&[i, r1, r2]);
                let (a, b, c) = (pop[r1].to_array(), pop[r2].to_array(), pop[r3].to_array());
                let mut mutant = [0.0; 4];
                for k in 0..4 {
                    mutant[k] = HYPER_BOX[k].clamp(a[k] + cfg.f * (b[k] - c[k]));
                }
                let j_rand = rng.random_range(0..4);
                let parent = pop[i].to_array();
                let mut tv = [0.0; 4];
                for k in 0..4 {
                    let cross = rng.random_range(0.0..1.0) < cfg.cr;
                    tv[k] = if cross || k == j_rand { mutant[k] } else { parent[k] };
                }
                let tvec = HyperVector::from_array(tv);
                let tcost = eval(&tvec, iter, i, &mut trace)?;
                if tcost <= costs[i] {
                    pop[i] = tvec;
                    costs[i] = tcost;
                }
            }
            history.push(costs.iter().cloned().fold(f64::INFINITY, f64::min));
        }

        let winner = costs
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .expect("nonempty population");
        round_best.push(RoundBest {
            round,
            vector: pop[winner].as_evaluated(),
            cost: costs[winner],
        });
        best_histories.push(history);
    }

    let field = |get: fn(&HyperVector) -> f64| -> Vec<f64> {
        round_best.iter().map(|rb| get(&rb.vector)).collect()
    };
    let summary = HyperSummary {
        mu: param_stats(&field(|v| v.mu)),
        g_max: param_stats(&field(|v| v.g_max)),
        epsilon: param_stats(&field(|v| v.epsilon)),
        c_min: param_stats(&field(|v| v.c_min)),
    };
    Ok(DeOutcome {
        summary,
        round_best,
        best_histories,
        trace,
        degenerate_evals,
    })
}
