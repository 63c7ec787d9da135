//! L-infinity PGD attacks and robust-accuracy estimation.
//!
//! The attack iterates signed-gradient ascent on the cross-entropy loss,
//! projecting every step onto the intersection of the epsilon-ball around
//! the clean input and the unit hypercube. Success is the first iterate
//! whose argmax prediction leaves the true label. Multi-restart PGD stands
//! in for ensemble attacks here; the measured robust accuracy is an upper
//! bound on the true one.

use crate::error::{Error, Result};
use crate::model::MlpModel;
use crate::numerics::rng::SeededRng;
use rayon::prelude::*;

/// PGD attack configuration.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    /// L-infinity radius of the feasible perturbation set.
    pub epsilon: f64,
    /// Iterations per restart.
    pub steps: usize,
    /// Step size of the signed-gradient update.
    pub step_size: f64,
    /// Restart count; restart 0 starts at the clean input, later restarts
    /// at seeded random points of the ball. Restart streams are fixed, so
    /// raising the count only ever adds trajectories.
    pub restarts: usize,
    /// Target class for the targeted variant; `None` is the untargeted
    /// default used everywhere in scoring.
    pub target: Option<usize>,
    /// Base seed for restart initialization.
    pub seed: u64,
}

impl AttackConfig {
    /// Untargeted attack with step size `epsilon / 4`, 40 steps, 2 restarts.
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            steps: 40,
            step_size: epsilon / 4.0,
            restarts: 2,
            target: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 || self.epsilon >= 0.5 {
            return Err(Error::invalid(format!(
                "attack epsilon must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if self.step_size > self.epsilon {
            return Err(Error::invalid(
                "attack step size must not exceed epsilon",
            ));
        }
        if self.steps == 0 || self.restarts == 0 {
            return Err(Error::invalid("attack needs steps >= 1 and restarts >= 1"));
        }
        Ok(())
    }
}

/// Per-point outcome used for CSV reporting.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub index: usize,
    pub clean_correct: bool,
    pub attack_success: bool,
    pub iterations_used: usize,
    /// `p(label) - max p(other)` at the attacked (or clean) point; negative
    /// once the prediction has flipped.
    pub margin: f64,
}

impl PointOutcome {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6}",
            self.index, self.clean_correct, self.attack_success, self.iterations_used, self.margin
        )
    }
}

/// Robust-accuracy evaluation over a labeled set.
#[derive(Debug, Clone)]
pub struct RobustReport {
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
    pub outcomes: Vec<PointOutcome>,
}

/// Clamp a candidate onto the epsilon-ball around `origin` intersected with
/// the hypercube. The perturbation is clamped first and re-checked after
/// rounding, so the returned point satisfies the L-infinity bound exactly.
fn project(origin: &[f64], candidate: &[f64], epsilon: f64) -> Vec<f64> {
    origin
        .iter()
        .zip(candidate)
        .map(|(&o, &c)| {
            let delta = (c - o).clamp(-epsilon, epsilon);
            let mut v = (o + delta).clamp(0.0, 1.0);
            while (v - o).abs() > epsilon {
                v = next_toward(v, o);
            }
            v
        })
        .collect()
}

#[inline]
fn next_toward(v: f64, target: f64) -> f64 {
    if v == target {
        v
    } else if v < target {
        f64::from_bits(v.to_bits() + 1)
    } else if v > 0.0 {
        f64::from_bits(v.to_bits() - 1)
    } else {
        f64::from_bits((-v).to_bits() + 1).copysign(-1.0)
    }
}

fn margin(probs: &[f64], label: usize) -> f64 {
    let mut best_other = f64::NEG_INFINITY;
    for (i, &p) in probs.iter().enumerate() {
        if i != label && p > best_other {
            best_other = p;
        }
    }
    probs[label] - best_other
}

/// Argmax with lowest-index tie-breaking.
fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

fn misclassified(model: &MlpModel, x: &[f64], label: usize, target: Option<usize>) -> Result<(bool, f64)> {
    let (_, probs) = model.forward(x)?;
    let m = margin(&probs, label);
    let hit = match target {
        None => argmax(&probs) != label,
        Some(t) => argmax(&probs) == t && t != label,
    };
    Ok((hit, m))
}

/// Run `steps` projected signed-gradient steps and return the final iterate.
/// This is the inner loop shared with adversarial training, which wants the
/// strongest perturbation rather than the first misclassification.
pub fn pgd_perturb(
    model: &MlpModel,
    x: &[f64],
    label: usize,
    epsilon: f64,
    steps: usize,
    step_size: f64,
    random_start: Option<&mut SeededRng>,
) -> Result<Vec<f64>> {
    let mut current = match random_start {
        Some(rng) => {
            let jittered: Vec<f64> = x
                .iter()
                .map(|&v| v + rng.uniform_in(-epsilon, epsilon))
                .collect();
            project(x, &jittered, epsilon)
        }
        None => x.to_vec(),
    };
    if epsilon == 0.0 {
        return Ok(current);
    }
    for _ in 0..steps {
        let (_, grad) = model.grad_ce(&current, label)?;
        let stepped: Vec<f64> = current
            .iter()
            .zip(&grad)
            .map(|(&v, &g)| v + step_size * signum(g))
            .collect();
        current = project(x, &stepped, epsilon);
    }
    Ok(current)
}

#[inline]
fn signum(g: f64) -> f64 {
    if g > 0.0 {
        1.0
    } else if g < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Outcome of `pgd_attack`: the adversarial point when one was found plus
/// the iterations spent and the final margin.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub adversarial: Option<Vec<f64>>,
    pub iterations_used: usize,
    pub margin: f64,
}

/// Search the epsilon-ball for a misclassified point; `None` if all
/// restarts fail. Every returned point obeys the perturbation bound exactly
/// and lies in the hypercube.
pub fn pgd_attack(
    model: &MlpModel,
    x: &[f64],
    label: usize,
    cfg: &AttackConfig,
) -> Result<AttackOutcome> {
    cfg.validate()?;
    if label >= model.n_classes() {
        return Err(Error::invalid(format!("label {label} out of range")));
    }
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::invalid("attack input must lie in the unit hypercube"));
    }

    let mut iterations = 0usize;
    let mut last_margin = 0.0;
    for restart in 0..cfg.restarts {
        let mut current = if restart == 0 {
            x.to_vec()
        } else {
            let mut rng = SeededRng::with_stream(cfg.seed, restart as u64);
            let jittered: Vec<f64> = x
                .iter()
                .map(|&v| v + rng.uniform_in(-cfg.epsilon, cfg.epsilon))
                .collect();
            project(x, &jittered, cfg.epsilon)
        };

        let (hit, m) = misclassified(model, &current, label, cfg.target)?;
        last_margin = m;
        if hit {
            return Ok(AttackOutcome {
                adversarial: Some(current),
                iterations_used: iterations,
                margin: m,
            });
        }
        if cfg.epsilon == 0.0 {
            continue;
        }
        for _ in 0..cfg.steps {
            let grad = match cfg.target {
                None => model.grad_ce(&current, label)?.1,
                // Targeted: ascend the target log-probability instead.
                Some(t) => model.grad_logp(&current, t)?,
            };
            let stepped: Vec<f64> = current
                .iter()
                .zip(&grad)
                .map(|(&v, &g)| v + cfg.step_size * signum(g))
                .collect();
            current = project(x, &stepped, cfg.epsilon);
            iterations += 1;
            let (hit, m) = misclassified(model, &current, label, cfg.target)?;
            last_margin = m;
            if hit {
                return Ok(AttackOutcome {
                    adversarial: Some(current),
                    iterations_used: iterations,
                    margin: m,
                });
            }
        }
    }
    Ok(AttackOutcome {
        adversarial: None,
        iterations_used: iterations,
        margin: last_margin,
    })
}

/// Fraction of points that are both correctly classified and resist the
/// attack. Always bounded above by the clean accuracy.
pub fn robust_accuracy(
    model: &MlpModel,
    examples: &[(Vec<f64>, usize)],
    cfg: &AttackConfig,
) -> Result<RobustReport> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::invalid("robust_accuracy needs a nonempty dataset"));
    }
    let outcomes: Result<Vec<PointOutcome>> = examples
        .par_iter()
        .enumerate()
        .map(|(index, (x, label))| {
            let clean_correct = model.predict(x)? == *label;
            if !clean_correct {
                let (_, probs) = model.forward(x)?;
                return Ok(PointOutcome {
                    index,
                    clean_correct,
                    attack_success: false,
                    iterations_used: 0,
                    margin: margin(&probs, *label),
                });
            }
            let outcome = pgd_attack(model, x, *label, cfg)?;
            Ok(PointOutcome {
                index,
                clean_correct,
                attack_success: outcome.adversarial.is_some(),
                iterations_used: outcome.iterations_used,
                margin: outcome.margin,
            })
        })
        .collect();
    let outcomes = outcomes?;
    let n = outcomes.len() as f64;
    let clean = outcomes.iter().filter(|o| o.clean_correct).count() as f64 / n;
    let robust = outcomes
        .iter()
        .filter(|o| o.clean_correct && !o.attack_success)
        .count() as f64
        / n;
    Ok(RobustReport {
        clean_accuracy: clean,
        robust_accuracy: robust,
        outcomes,
    })
}

/// Robust accuracy over an ascending epsilon grid. A certificate found at a
/// small radius is a certificate at every larger radius, so broken points
/// are carried forward; this makes the curve nonincreasing by construction.
pub fn robust_accuracy_sweep(
    model: &MlpModel,
    examples: &[(Vec<f64>, usize)],
    base: &AttackConfig,
    eps_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    for w in eps_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("epsilon grid must be strictly increasing"));
        }
    }
    let mut broken = vec![false; examples.len()];
    let mut curve = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let cfg = AttackConfig {
            epsilon: eps,
            step_size: base.step_size.min(eps).max(eps / 4.0),
            ..base.clone()
        };
        let results: Result<Vec<(usize, bool, bool)>> = examples
            .par_iter()
            .enumerate()
            .map(|(i, (x, label))| {
                let clean = model.predict(x)? == *label;
                if !clean || broken[i] {
                    return Ok((i, clean, broken[i]));
                }
                let outcome = pgd_attack(model, x, *label, &cfg)?;
                Ok((i, clean, outcome.adversarial.is_some()))
            })
            .collect();
        let results = results?;
        let mut robust = 0usize;
        for (i, clean, now_broken) in results {
            broken[i] = now_broken;
            if clean && !now_broken {
                robust += 1;
            }
        }
        curve.push((eps, robust as f64 / examples.len() as f64));
    }
    Ok(curve)
}
