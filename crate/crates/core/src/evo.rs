//! Evolution-strategy fitter for the compression sinusoid.
//!
//! A population of candidate parameter vectors is kept sorted by fit loss.
//! Each generation appends five offspring (one fresh random draw, one tight
//! mutation of the current best, three interval crossovers of random parent
//! pairs), re-evaluates, and drops the five worst. Between consecutive
//! windows a configurable fraction of the worst-ranked individuals is
//! replaced with fresh draws while the rest carry over, so a slowly changing
//! stream is tracked without restarting from scratch.
//!
//! All randomness flows through one seeded generator in a fixed draw order
//! (window reseed, then per generation: random child, mutation factors,
//! parent indices and crossover draws per child), which makes a fit
//! reproducible bit-for-bit from `(seed, window sequence)`.

use crate::error::{Error, Result};
use crate::model::{rmse_loss, to_estimate, CprEstimate, SineParams};
use crate::signal::Window;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        rng.random_range(self.lo..self.hi)
    }
}

/// Search box for the three model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    /// Displacement amplitude, meters.
    pub amplitude: Interval,
    /// Angular frequency, rad/s.
    pub omega: Interval,
    /// Phase, radians; kept in `[0, 2*pi)` by wrapping.
    pub phase: Interval,
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            // 0.1..5 cm of displacement amplitude, expressed in meters.
            amplitude: Interval::new(0.001, 0.05),
            // 30..210 compressions per minute.
            omega: Interval::new(PI, 7.0 * PI),
            phase: Interval::new(0.0, TAU),
        }
    }
}

impl ParamBounds {
    fn validate(&self) -> Result<()> {
        for (name, iv, positive) in [
            ("amplitude", self.amplitude, true),
            ("omega", self.omega, true),
            ("phase", self.phase, false),
        ] {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
                return Err(Error::InvalidConfig(format!(
                    "{name} bounds must be a finite interval, got [{}, {}]",
                    iv.lo, iv.hi
                )));
            }
            if positive && iv.lo <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} bounds must be positive, got lower bound {}",
                    iv.lo
                )));
            }
        }
        if self.phase.lo < 0.0 || self.phase.hi > TAU {
            return Err(Error::InvalidConfig(format!(
                "phase bounds must lie within [0, 2*pi], got [{}, {}]",
                self.phase.lo, self.phase.hi
            )));
        }
        Ok(())
    }

    /// Clamp amplitude and omega into their boxes and wrap phase mod 2*pi.
    fn sanitize(&self, amplitude: f64, omega: f64, phase: f64) -> SineParams {
        SineParams {
            amplitude: self.amplitude.clamp(amplitude),
            omega: self.omega.clamp(omega),
            phase: phase.rem_euclid(TAU),
        }
    }
}

/// Fitter settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvoConfig {
    /// Population size.
    pub mu: usize,
    /// Offspring per generation: one random, one mutation, the rest crossover.
    pub lambda: usize,
    /// Generation cap per window.
    pub g_max: usize,
    /// Fraction of the population re-drawn between windows.
    pub epsilon: f64,
    /// Absolute loss threshold in m/s^2: a window's fit stops as soon as the
    /// best individual's RMSE drops below it. A warm population that already
    /// fits the new window this well skips optimization entirely; zero
    /// disables early stopping.
    pub c_min: f64,
    /// Mutation tightness: factors are drawn from `[m_const, 2 - m_const]`.
    pub m_const: f64,
    pub bounds: ParamBounds,
    pub seed: u64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            mu: 400,
            lambda: 5,
            g_max: 10,
            epsilon: 0.5,
            c_min: 0.05,
            m_const: 0.999,
            bounds: ParamBounds::default(),
            seed: 0,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 5 {
            return Err(Error::InvalidConfig(format!(
                "lambda must be at least 5, got {}",
                self.lambda
            )));
        }
        if self.mu < self.lambda {
            return Err(Error::InvalidConfig(format!(
                "mu must be at least lambda, got mu = {} < lambda = {}",
                self.mu, self.lambda
            )));
        }
        if !(self.epsilon.is_finite() && (0.0..=1.0).contains(&self.epsilon)) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.c_min.is_finite() && self.c_min >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "c_min must be nonnegative, got {}",
                self.c_min
            )));
        }
        if !(self.m_const.is_finite() && self.m_const > 0.0 && self.m_const < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "m_const must lie in (0, 1), got {}",
                self.m_const
            )));
        }
        self.bounds.validate()
    }
}

/// One candidate solution; `fitness` is its RMSE on the current window once
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Individual {
    pub params: SineParams,
    pub fitness: Option<f64>,
}

impl Individual {
    fn fresh(rng: &mut impl Rng, bounds: &ParamBounds) -> Self {
        // Draw order per individual: amplitude, omega, phase.
        let amplitude = bounds.amplitude.sample(rng);
        let omega = bounds.omega.sample(rng);
        let phase = bounds.phase.sample(rng);
        Self {
            params: bounds.sanitize(amplitude, omega, phase),
            fitness: None,
        }
    }
}

/// Population state carried across windows of one stream.
pub struct Fitter {
    cfg: EvoConfig,
    population: Vec<Individual>,
    rng: ChaCha8Rng,
    generations_last_window: usize,
    best_trace: Vec<f64>,
    windows_fitted: usize,
}

impl Fitter {
    /// Validate the config and draw the initial population.
    pub fn new(cfg: EvoConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let population = (0..cfg.mu)
            .map(|_| Individual::fresh(&mut rng, &cfg.bounds))
            .collect();
        Ok(Self {
            cfg,
            population,
            rng,
            generations_last_window: 0,
            best_trace: Vec::new(),
            windows_fitted: 0,
        })
    }

    pub fn config(&self) -> &EvoConfig {
        &self.cfg
    }

    /// Current population, sorted ascending by fitness once evaluated.
    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    /// Generations run while fitting the most recent window.
    pub fn generations_last_window(&self) -> usize {
        self.generations_last_window
    }

    /// Best loss after the initial evaluation and after each generation of
    /// the most recent window.
    pub fn best_trace(&self) -> &[f64] {
        &self.best_trace
    }

    /// Replace the worst-ranked `ceil(epsilon * mu)` individuals with fresh
    /// draws, keeping the rest. Ranking is the order left by the previous
    /// window's fit.
    pub fn reseed_fraction(&mut self) {
        let k = ((self.cfg.epsilon * self.cfg.mu as f64).ceil() as usize).min(self.cfg.mu);
        let start = self.cfg.mu - k;
        for i in start..self.cfg.mu {
            self.population[i] = Individual::fresh(&mut self.rng, &self.cfg.bounds);
        }
    }

    /// Produce the generation's offspring: one fresh random draw, one tight
    /// mutation of the current best, and `lambda - 2` interval crossovers of
    /// random parent pairs. Amplitude and omega are clamped to their boxes,
    /// phase is wrapped mod 2*pi.
    pub fn spawn_offspring(&mut self) -> Result<Vec<Individual>> {
        let n = self.population.len();
        if n < 2 {
            return Err(Error::InsufficientParents { have: n });
        }
        let bounds = self.cfg.bounds;
        let mut children = Vec::with_capacity(self.cfg.lambda);

        children.push(Individual::fresh(&mut self.rng, &bounds));

        // Mutation: every coordinate of the best scaled by an independent
        // factor from [m_const, 2 - m_const].
        let x0 = self.population[0].params;
        let m = self.cfg.m_const;
        let mut factor = || self.rng.random_range(m..(2.0 - m));
        let (fa, fo, fp) = (factor(), factor(), factor());
        children.push(Individual {
            params: bounds.sanitize(x0.amplitude * fa, x0.omega * fo, x0.phase * fp),
            fitness: None,
        });

        // Crossover: each child gets its own parent pair a != b, then each
        // coordinate is drawn uniformly between the parents' values.
        for _ in 2..self.cfg.lambda {
            let a = self.rng.random_range(0..n);
            let mut b = self.rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let (pa, pb) = (self.population[a].params, self.population[b].params);
            let mut blend = |x: f64, y: f64| {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                self.rng.random_range(lo..=hi)
            };
            let amplitude = blend(pa.amplitude, pb.amplitude);
            let omega = blend(pa.omega, pb.omega);
            let phase = blend(pa.phase, pb.phase);
            children.push(Individual {
                params: bounds.sanitize(amplitude, omega, phase),
                fitness: None,
            });
        }
        Ok(children)
    }

    /// Fill in missing fitness values against `w` and sort ascending. The
    /// sort is stable, so equal fitness keeps insertion order.
    fn evaluate_and_sort(&mut self, w: &Window) -> Result<()> {
        for ind in &mut self.population {
            if ind.fitness.is_none() {
                ind.fitness = Some(rmse_loss(&ind.params, w)?);
            }
        }
        self.population
            .sort_by(|x, y| x.fitness.unwrap().total_cmp(&y.fitness.unwrap()));
        Ok(())
    }

    fn converged(&self) -> bool {
        self.population[0].fitness.unwrap() < self.cfg.c_min
    }

    /// Run one generation against `w`: spawn offspring, evaluate everyone,
    /// drop the `lambda` worst. Returns whether the best loss has dropped
    /// below `c_min`.
    pub fn step_generation(&mut self, w: &Window) -> Result<bool> {
        let children = self.spawn_offspring()?;
        self.population.extend(children);
        self.evaluate_and_sort(w)?;
        self.population.truncate(self.cfg.mu);
        self.best_trace.push(self.population[0].fitness.unwrap());
        Ok(self.converged())
    }

    /// Fit one window: carry the population over (re-drawing the configured
    /// fraction, except before the very first window), evaluate everyone
    /// against the new samples, then run generations until `g_max` or
    /// convergence. Returns the best candidate as a clinical estimate.
    pub fn fit_window(&mut self, w: &Window) -> Result<CprEstimate> {
        if self.windows_fitted > 0 {
            self.reseed_fraction();
        }
        // The window changed, so every cached fitness is stale.
        for ind in &mut self.population {
            ind.fitness = None;
        }
        self.best_trace.clear();
        self.evaluate_and_sort(w)?;
        self.best_trace.push(self.population[0].fitness.unwrap());

        // A carried-over population may already fit well enough to skip
        // optimization for this window.
        let mut generations = 0;
        while generations < self.cfg.g_max && !self.converged() {
            self.step_generation(w)?;
            generations += 1;
        }
        self.generations_last_window = generations;
        self.windows_fitted += 1;

        let best = &self.population[0];
        Ok(to_estimate(
            &best.params,
            best.fitness.unwrap(),
            w.start_t,
            w.len_s(),
        ))
    }
}
