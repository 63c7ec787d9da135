//! Small dense classifiers with exact reverse-mode gradients.
//!
//! A model is a stack of dense layers; the final layer is linear and feeds
//! a softmax. With no hidden layers this is the softmax-linear classifier.
//! Gradients are hand-rolled backprop, verified against central finite
//! differences.

use crate::error::{Error, Result};
use crate::numerics::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Softplus,
    /// Piecewise-linear; kept behind an explicit choice because smooth
    /// activations give better-behaved ascent directions.
    Relu,
}

impl Activation {
    #[inline]
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Softplus => {
                // Stable softplus: ln(1 + e^z).
                if z > 30.0 {
                    z
                } else if z < -30.0 {
                    z.exp()
                } else {
                    z.exp().ln_1p()
                }
            }
            Activation::Relu => z.max(0.0),
        }
    }

    #[inline]
    fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Softplus => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn tag(&self) -> u32 {
        match self {
            Activation::Tanh => 0,
            Activation::Softplus => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Tanh),
            1 => Ok(Activation::Softplus),
            2 => Ok(Activation::Relu),
            other => Err(Error::invalid(format!("unknown activation tag {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Softplus => "softplus",
            Activation::Relu => "relu",
        }
    }
}

/// One dense layer, row-major weights of shape `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc);
        }
    }
}

/// Feed-forward classifier producing class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub seed: u64,
}

/// Intermediate state of a forward pass, kept for backprop.
pub struct ForwardCache {
    /// Pre-activations per layer.
    pub pre: Vec<Vec<f64>>,
    /// Post-activations per layer (last entry = logits).
    pub post: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

/// Parameter gradients matching the model's layer shapes.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub d_weights: Vec<Vec<f64>>,
    pub d_biases: Vec<Vec<f64>>,
}

impl ParamGrads {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            d_weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            d_biases: model.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.d_weights.iter_mut().chain(self.d_biases.iter_mut()) {
            for v in g.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn add(&mut self, other: &ParamGrads) {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.d_biases.iter_mut().zip(&other.d_biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

impl MlpModel {
    /// Fresh model with `N(0, 1/fan_in)` weights and zero biases; fully
    /// determined by the seed.
    pub fn new(layer_dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::invalid(
                "a model needs at least input and output dimensions",
            ));
        }
        if layer_dims.contains(&0) {
            return Err(Error::invalid("layer dimensions must be positive"));
        }
        let mut rng = SeededRng::with_stream(seed, 0);
        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        for w in layer_dims.windows(2) {
            let (in_dim, out_dim) = (w[0], w[1]);
            let scale = 1.0 / (in_dim as f64).sqrt();
            let weights = (0..in_dim * out_dim)
                .map(|_| scale * rng.normal())
                .collect();
            layers.push(Layer {
                in_dim,
                out_dim,
                weights,
                biases: vec![0.0; out_dim],
            });
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            activation,
            seed,
        })
    }

    /// Model with all parameters zero (uniform output probabilities).
    pub fn zeroed(layer_dims: &[usize], activation: Activation) -> Result<Self> {
        let mut m = Self::new(layer_dims, activation, 0)?;
        for layer in m.layers.iter_mut() {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
            layer.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input dimension {} does not match model input {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass retaining per-layer state.
    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        let n_layers = self.layers.len();
        let mut pre = Vec::with_capacity(n_layers);
        let mut post = Vec::with_capacity(n_layers);
        let mut current = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward_into(&current, &mut z);
            let activated = if li + 1 == n_layers {
                z.clone() // final layer stays linear: these are the logits
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            pre.push(z);
            post.push(activated.clone());
            current = activated;
        }
        let probs = softmax(&current);
        Ok(ForwardCache { pre, post, probs })
    }

    /// Logits and class probabilities.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let cache = self.forward_cached(x)?;
        Ok((cache.post.last().unwrap().clone(), cache.probs))
    }

    /// Predicted class: argmax probability, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let (_, probs) = self.forward(x)?;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok(best)
    }

    fn check_class(&self, c: usize) -> Result<()> {
        if c >= self.n_classes() {
            return Err(Error::invalid(format!(
                "class index {c} out of range for {} classes",
                self.n_classes()
            )));
        }
        Ok(())
    }

    /// Backprop from a logit-space gradient. Returns the input gradient;
    /// parameter gradients are accumulated into `grads` when provided.
    fn backward(
        &self,
        x: &[f64],
        cache: &ForwardCache,
        d_logits: Vec<f64>,
        mut grads: Option<&mut ParamGrads>,
    ) -> Vec<f64> {
        let n_layers = self.layers.len();
        let mut delta = d_logits; // gradient wrt pre-activation of layer li
        for li in (0..n_layers).rev() {
            let layer = &self.layers[li];
            let input: &[f64] = if li == 0 { x } else { &cache.post[li - 1] };
            if let Some(g) = grads.as_deref_mut() {
                let dw = &mut g.d_weights[li];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (slot, &inp) in row.iter_mut().zip(input) {
                        *slot += d * inp;
                    }
                }
                for (slot, &d) in g.d_biases[li].iter_mut().zip(&delta) {
                    *slot += d;
                }
            }
            // Gradient wrt the layer input.
            let mut d_input = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (slot, &w) in d_input.iter_mut().zip(row) {
                    *slot += d * w;
                }
            }
            if li > 0 {
                for (slot, &z) in d_input.iter_mut().zip(&cache.pre[li - 1]) {
                    *slot *= self.activation.derivative(z);
                }
            }
            delta = d_input;
        }
        delta
    }

    /// Exact gradient of `log p(c|x)` with respect to the input.
    pub fn grad_logp(&self, x: &[f64], c: usize) -> Result<Vec<f64>> {
        self.check_class(c)?;
        let cache = self.forward_cached(x)?;
        let mut d_logits: Vec<f64> = cache.probs.iter().map(|&p| -p).collect();
        d_logits[c] += 1.0;
        Ok(self.backward(x, &cache, d_logits, None))
    }

    /// Gradient of the cross-entropy loss `-log p(label|x)` wrt the input,
    /// along with the loss value.
    pub fn grad_ce(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        self.check_class(label)?;
        let cache = self.forward_cached(x)?;
        let loss = -cache.probs[label].max(f64::MIN_POSITIVE).ln();
        let mut d_logits = cache.probs.clone();
        d_logits[label] -= 1.0;
        Ok((loss, self.backward(x, &cache, d_logits, None)))
    }

    /// Cross-entropy loss and parameter gradients for one example,
    /// accumulated into `grads`.
    pub fn accumulate_ce_grads(
        &self,
        x: &[f64],
        label: usize,
        grads: &mut ParamGrads,
    ) -> Result<f64> {
        self.check_class(label)?;
        let cache = self.forward_cached(x)?;
        let loss = -cache.probs[label].max(f64::MIN_POSITIVE).ln();
        let mut d_logits = cache.probs.clone();
        d_logits[label] -= 1.0;
        self.backward(x, &cache, d_logits, Some(grads));
        Ok(loss)
    }
}

/// Maximum relative error between `grad_logp` and central finite
/// differences. For inputs above 64 coordinates a seeded random subset of 64
/// coordinates is checked. The error is measured against the gradient's
/// largest magnitude.
pub fn finite_diff_check(model: &MlpModel, x: &[f64], c: usize, step: f64) -> Result<f64> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::invalid("finite_diff_check requires step > 0"));
    }
    let analytic = model.grad_logp(x, c)?;
    let scale = analytic
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);

    let d = x.len();
    let coords: Vec<usize> = if d <= 64 {
        (0..d).collect()
    } else {
        let mut rng = SeededRng::with_stream(model.seed ^ 0xfd, 1);
        let perm = rng.permutation(d);
        perm[..64].to_vec()
    };

    let logp = |point: &[f64]| -> Result<f64> {
        let (_, probs) = model.forward(point)?;
        Ok(probs[c].max(f64::MIN_POSITIVE).ln())
    };

    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for &i in &coords {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = logp(&probe)?;
        probe[i] = orig - step;
        let minus = logp(&probe)?;
        probe[i] = orig;
        let fd = (plus - minus) / (2.0 * step);
        worst = worst.max((fd - analytic[i]).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = MlpModel::zeroed(&[5, 3], Activation::Tanh).unwrap();
        let (_, probs) = m.forward(&[0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        for &p in &probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let a = softmax(&[1.0, 2.0, 3.0]);
        let b = softmax(&[101.0, 102.0, 103.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn probs_normalize_and_stay_positive() {
        let m = MlpModel::new(&[8, 6, 4], Activation::Tanh, 3).unwrap();
        let mut rng = SeededRng::new(10);
        for _ in 0..50 {
            let x = rng.uniform_cube_point(8);
            let (_, probs) = m.forward(&x).unwrap();
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = MlpModel::new(&[4, 2], Activation::Tanh, 0).unwrap();
        assert!(m.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_model_gradient_is_zero() {
        let m = MlpModel::zeroed(&[6, 3], Activation::Tanh).unwrap();
        let g = m.grad_logp(&[0.1; 6], 1).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_softmax_gradient_closed_form() {
        // For a linear model, grad log p(c|x) = W_c - sum_j p_j W_j.
        let m = MlpModel::new(&[5, 3], Activation::Tanh, 7).unwrap();
        let mut rng = SeededRng::new(70);
        let x = rng.uniform_cube_point(5);
        let (_, probs) = m.forward(&x).unwrap();
        let c = 2;
        let w = &m.layers[0].weights;
        let closed: Vec<f64> = (0..5)
            .map(|i| {
                let mut v = w[c * 5 + i];
                for (j, &p) in probs.iter().enumerate() {
                    v -= p * w[j * 5 + i];
                }
                v
            })
            .collect();
        let g = m.grad_logp(&x, c).unwrap();
        for (a, b) in g.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_model_finite_diff_tight() {
        let m = MlpModel::new(&[10, 4], Activation::Tanh, 8).unwrap();
        let mut rng = SeededRng::new(80);
        let x = rng.uniform_cube_point(10);
        let err = finite_diff_check(&m, &x, 1, 1e-5).unwrap();
        assert!(err <= 1e-7, "err = {err:.3e}");
    }

    #[test]
    fn mlp_finite_diff_within_tolerance() {
        for (seed, act) in [(1u64, Activation::Tanh), (2, Activation::Softplus)] {
            let m = MlpModel::new(&[12, 10, 3], act, seed).unwrap();
            let mut rng = SeededRng::new(seed ^ 0xabc);
            let x = rng.uniform_cube_point(12);
            let err = finite_diff_check(&m, &x, 0, 1e-5).unwrap();
            assert!(err <= 1e-5, "{act:?} err = {err:.3e}");
        }
    }

    #[test]
    fn grad_ce_is_negative_grad_logp() {
        let m = MlpModel::new(&[6, 5, 3], Activation::Tanh, 4).unwrap();
        let mut rng = SeededRng::new(40);
        let x = rng.uniform_cube_point(6);
        let g_logp = m.grad_logp(&x, 2).unwrap();
        let (_, g_ce) = m.grad_ce(&x, 2).unwrap();
        for (a, b) in g_logp.iter().zip(&g_ce) {
            assert!((a + b).abs() < 1e-12);
        }
    }
}
