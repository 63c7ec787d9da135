//! Projected gradient ascent sampling of perceptual manifolds.
//!
//! A perceptual manifold for class `c` at threshold `tau` is the set of
//! hypercube points the classifier assigns to `c` with probability above
//! `tau`. Samples are obtained by ascending `log p(c|x)` from random noise,
//! clipping to the hypercube after every step, and stopping at the first
//! iterate that crosses the threshold.
//!
//! Plain ascent occasionally stalls on flat regions; when allowed, a failed
//! plain run is retried with Adam-preconditioned steps from the same
//! initialization.

use crate::error::{Error, Result};
use crate::model::MlpModel;
use crate::numerics::rng::SeededRng;
use crate::numerics::{mean_and_sem, mean_and_std};
use crate::sample_set::{SampleMeta, SampleSet};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgaOptimizer {
    Plain,
    Adam,
}

/// Projected gradient ascent settings.
#[derive(Debug, Clone)]
pub struct PgaConfig {
    /// Step size alpha.
    pub step_size: f64,
    /// Probability threshold tau defining manifold membership.
    pub threshold: f64,
    /// Iteration budget per run.
    pub max_iters: usize,
    pub optimizer: PgaOptimizer,
    /// Standard deviation of per-step Gaussian noise (0 disables it).
    pub noise_sigma: f64,
    /// Heavy-ball momentum for the plain optimizer, in `[0, 1)`.
    pub momentum: f64,
    /// Retry a failed plain run with Adam from the same initialization.
    pub allow_adam_fallback: bool,
}

impl Default for PgaConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            threshold: 0.9,
            max_iters: 2000,
            optimizer: PgaOptimizer::Plain,
            noise_sigma: 0.0,
            momentum: 0.0,
            allow_adam_fallback: true,
        }
    }
}

impl PgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_size.is_nan() || self.step_size <= 0.0 {
            return Err(Error::invalid("PGA step size must be positive"));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 || self.threshold >= 1.0 {
            return Err(Error::invalid("PGA threshold must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("PGA momentum must lie in [0, 1)"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::invalid("PGA noise sigma must be nonnegative"));
        }
        Ok(())
    }
}

/// Outcome of one sampling run.
#[derive(Debug, Clone)]
pub struct PmSampleResult {
    pub x_final: Vec<f64>,
    pub success: bool,
    pub iterations: usize,
    pub sq_dist_from_init: f64,
    pub final_prob: f64,
    pub used_adam_fallback: bool,
}

fn prob_of(model: &MlpModel, x: &[f64], class: usize) -> Result<f64> {
    let (_, probs) = model.forward(x)?;
    Ok(probs[class])
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

struct AdamState {
    m1: Vec<f64>,
    m2: Vec<f64>,
    t: i32,
}

/// One ascent run with a fixed optimizer. `rng` supplies the per-step noise.
fn ascend(
    model: &MlpModel,
    class: usize,
    cfg: &PgaConfig,
    optimizer: PgaOptimizer,
    init: &[f64],
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, bool, usize, f64)> {
    let d = init.len();
    let mut x = init.to_vec();
    let mut prob = prob_of(model, &x, class)?;
    if prob > cfg.threshold {
        return Ok((x, true, 0, prob));
    }

    let mut velocity = vec![0.0; d];
    let mut adam = AdamState {
        m1: vec![0.0; d],
        m2: vec![0.0; d],
        t: 0,
    };

    for t in 1..=cfg.max_iters {
        let grad = model.grad_logp(&x, class)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericalFailure {
                context: format!(
                    "PGA gradient became non-finite at iteration {t} (snapshot: p = {prob:.6}, |x|_max = {:.3})",
                    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                ),
                residual: prob,
            });
        }
        match optimizer {
            PgaOptimizer::Plain => {
                if cfg.momentum > 0.0 {
                    for (v, &g) in velocity.iter_mut().zip(&grad) {
                        *v = cfg.momentum * *v + g;
                    }
                    for (xi, &v) in x.iter_mut().zip(&velocity) {
                        *xi += cfg.step_size * v;
                    }
                } else {
                    for (xi, &g) in x.iter_mut().zip(&grad) {
                        *xi += cfg.step_size * g;
                    }
                }
            }
            PgaOptimizer::Adam => {
                adam.t += 1;
                let bc1 = 1.0 - 0.9f64.powi(adam.t);
                let bc2 = 1.0 - 0.999f64.powi(adam.t);
                for i in 0..d {
                    adam.m1[i] = 0.9 * adam.m1[i] + 0.1 * grad[i];
                    adam.m2[i] = 0.999 * adam.m2[i] + 0.001 * grad[i] * grad[i];
                    let mh = adam.m1[i] / bc1;
                    let vh = adam.m2[i] / bc2;
                    x[i] += cfg.step_size * mh / (vh.sqrt() + 1e-8);
                }
            }
        }
        if cfg.noise_sigma > 0.0 {
            for xi in x.iter_mut() {
                *xi += cfg.noise_sigma * rng.normal();
            }
        }
        for xi in x.iter_mut() {
            *xi = xi.clamp(0.0, 1.0);
        }
        prob = prob_of(model, &x, class)?;
        if prob > cfg.threshold {
            return Ok((x, true, t, prob));
        }
    }
    Ok((x, false, cfg.max_iters, prob))
}

/// Single manifold-sampling run from an explicit initialization.
///
/// The returned point always lies in the hypercube; `success` holds exactly
/// when the final probability exceeds the threshold, and the run stops at
/// the first crossing iterate.
pub fn pga_sample(
    model: &MlpModel,
    class: usize,
    cfg: &PgaConfig,
    init: &[f64],
    rng: &mut SeededRng,
) -> Result<PmSampleResult> {
    cfg.validate()?;
    if class >= model.n_classes() {
        return Err(Error::invalid(format!("class {class} out of range")));
    }
    if init.len() != model.input_dim() {
        return Err(Error::invalid("initialization has wrong dimension"));
    }
    if init.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::invalid("initialization must lie in the unit hypercube"));
    }

    let (x, success, iterations, final_prob) =
        ascend(model, class, cfg, cfg.optimizer, init, rng)?;
    if success || cfg.optimizer == PgaOptimizer::Adam || !cfg.allow_adam_fallback {
        return Ok(PmSampleResult {
            sq_dist_from_init: sq_dist(&x, init),
            x_final: x,
            success,
            iterations,
            final_prob,
            used_adam_fallback: false,
        });
    }
    let (x, success, iterations2, final_prob) =
        ascend(model, class, cfg, PgaOptimizer::Adam, init, rng)?;
    Ok(PmSampleResult {
        sq_dist_from_init: sq_dist(&x, init),
        x_final: x,
        success,
        iterations: iterations + iterations2,
        final_prob,
        used_adam_fallback: true,
    })
}

/// Convenience wrapper: draw the initialization uniformly from the
/// hypercube using the same stream that feeds the ascent noise.
pub fn pga_sample_from_uniform(
    model: &MlpModel,
    class: usize,
    cfg: &PgaConfig,
    rng: &mut SeededRng,
) -> Result<PmSampleResult> {
    let init = rng.uniform_cube_point(model.input_dim());
    pga_sample(model, class, cfg, &init, rng)
}

/// Per-run record for CSV logs: one line per attempted sample.
#[derive(Debug, Clone)]
pub struct PmRunRecord {
    pub run: usize,
    pub seed: u64,
    pub stream: u64,
    pub success: bool,
    pub iterations: usize,
    pub sq_dist_from_init: f64,
    pub final_prob: f64,
}

impl PmRunRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6}",
            self.run,
            self.seed,
            self.stream,
            self.success,
            self.iterations,
            self.sq_dist_from_init,
            self.final_prob
        )
    }
}

/// Draw `n_samples` manifold samples from independent uniform
/// initializations; failures are excluded from the set but counted in the
/// metadata, and a success rate below one half sets the low-yield flag.
pub fn sample_pm(
    model: &MlpModel,
    class: usize,
    n_samples: usize,
    cfg: &PgaConfig,
    seed: u64,
) -> Result<SampleSet> {
    sample_pm_detailed(model, class, n_samples, cfg, seed).map(|(set, _)| set)
}

/// As [`sample_pm`] but also returns the per-run log.
pub fn sample_pm_detailed(
    model: &MlpModel,
    class: usize,
    n_samples: usize,
    cfg: &PgaConfig,
    seed: u64,
) -> Result<(SampleSet, Vec<PmRunRecord>)> {
    if n_samples == 0 {
        return Err(Error::invalid("sample_pm needs n_samples >= 1"));
    }
    cfg.validate()?;

    // Worker stream i+1 drives run i; stream 0 stays reserved.
    let results: Result<Vec<(PmRunRecord, PmSampleResult)>> = (0..n_samples)
        .into_par_iter()
        .map(|run| {
            let stream = run as u64 + 1;
            let mut rng = SeededRng::with_stream(seed, stream);
            let res = pga_sample_from_uniform(model, class, cfg, &mut rng)?;
            let record = PmRunRecord {
                run,
                seed,
                stream,
                success: res.success,
                iterations: res.iterations,
                sq_dist_from_init: res.sq_dist_from_init,
                final_prob: res.final_prob,
            };
            Ok((record, res))
        })
        .collect();
    let results = results?;

    let successes = results.iter().filter(|(r, _)| r.success).count();
    let mut meta = SampleMeta::new(seed, format!("pm(class={class},tau={})", cfg.threshold))
        .with_label(class as u32);
    meta.attempts = n_samples as u64;
    meta.successes = successes as u64;
    meta.low_yield = successes * 2 < n_samples;

    let mut set = SampleSet::empty(model.input_dim(), meta);
    let mut records = Vec::with_capacity(n_samples);
    for (record, res) in results {
        if record.success {
            set.push_row(&res.x_final);
        }
        records.push(record);
    }
    Ok((set, records))
}

/// Distance statistics from a set of initializations to the manifold.
///
/// Each initialization is ascended to the manifold and the squared
/// Euclidean displacement is recorded; the mean over successful runs is an
/// upper bound on the true distance to the manifold.
#[derive(Debug, Clone)]
pub struct DistanceStats {
    pub mean_sq_dist: f64,
    pub std_sq_dist: f64,
    pub sem_sq_dist: f64,
    pub n_success: usize,
    pub n_total: usize,
    pub init_source: String,
}

pub fn distance_to_pm(
    model: &MlpModel,
    class: usize,
    inits: &SampleSet,
    cfg: &PgaConfig,
) -> Result<DistanceStats> {
    cfg.validate()?;
    if inits.n_samples() == 0 {
        return Err(Error::invalid("distance_to_pm needs at least one init"));
    }
    if !inits.in_unit_cube() {
        return Err(Error::invalid("initializations must lie in the unit hypercube"));
    }

    let n = inits.n_samples();
    let results: Result<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::with_stream(inits.meta.seed ^ 0xd157, i as u64 + 1);
            let res = pga_sample(model, class, cfg, inits.row(i), &mut rng)?;
            Ok(res.success.then_some(res.sq_dist_from_init))
        })
        .collect();
    let dists: Vec<f64> = results?.into_iter().flatten().collect();
    if dists.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no successful ascents out of {n} initializations"
        )));
    }
    let (mean, std) = mean_and_std(&dists);
    let (_, sem) = mean_and_sem(&dists);
    Ok(DistanceStats {
        mean_sq_dist: mean,
        std_sq_dist: std,
        sem_sq_dist: sem,
        n_success: dists.len(),
        n_total: n,
        init_source: inits.meta.source.clone(),
    })
}
