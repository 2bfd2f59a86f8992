use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{alphas, entropy, sigmoid, EntropyLenModel};
use crate::data::{Dataset, LabelSet};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` trains full-batch; otherwise fixed-order consecutive chunks.
    pub batch_size: Option<usize>,
    /// λ, weight of the α entropy penalty.
    pub entropy_weight: f64,
    /// Fraction of the epochs over which λ ramps linearly up from 0.
    pub entropy_warmup: f64,
    /// τ, softmax temperature of the importance scores.
    pub temperature: f64,
    pub hidden_sizes: Vec<usize>,
    pub momentum: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

/// Parameter update rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Heavy-ball gradient descent with `momentum`.
    #[default]
    Momentum,
    /// Adam with β₁ = `momentum`, β₂ = 0.999, ε = 1e-8.
    Adam,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 200,
            batch_size: Some(32),
            entropy_weight: 0.01,
            entropy_warmup: 0.0,
            temperature: 1.0,
            hidden_sizes: vec![20, 20],
            momentum: 0.9,
            optimizer: Optimizer::Momentum,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(self.entropy_weight >= 0.0 && self.entropy_weight.is_finite()) {
            return Err(Error::invalid("entropy weight must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Which terms enter the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub bce: bool,
    pub entropy_weight: f64,
}

impl LossTerms {
    pub fn full(entropy_weight: f64) -> Self {
        Self { bce: true, entropy_weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Objective value at the start of each epoch.
    pub losses: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy over the batch plus `λ · Σ_i H(α^(i))`, and its
/// gradient laid out as a model of identical shape.
pub fn loss_and_grad(model: &EntropyLenModel, batch: &[(&[f64], LabelSet)], terms: LossTerms) -> (f64, EntropyLenModel) {
    let mut grad = model.zeros_like();
    let mut loss = 0.0;
    let inv_n = if batch.is_empty() { 0.0 } else { 1.0 / batch.len() as f64 };
    let tau = model.tau;

    for (c, net) in model.classes.iter().enumerate() {
        let g_net = &mut grad.classes[c];
        let l0 = &net.layers[0];
        let d = l0.cols;
        let (alpha, gate) = alphas(l0, tau);
        let mut dgate = vec![0.0; d];

        if terms.bce {
            let depth = net.layers.len();
            let mut acts: Vec<Vec<f64>> = vec![Vec::new(); depth];
            let mut nz: Vec<(usize, f64, f64)> = Vec::new();
            for &(x, labels) in batch {
                let y = if labels.contains(c) { 1.0 } else { 0.0 };
                nz.clear();
                nz.extend(x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v, v * gate[j])));

                // forward, keeping each layer's output (post-ReLU for hidden layers)
                let mut z0 = l0.bias.clone();
                for (r, z) in z0.iter_mut().enumerate() {
                    let row = &l0.weights[r * d..(r + 1) * d];
                    *z += nz.iter().map(|&(j, _, g)| row[j] * g).sum::<f64>();
                }
                acts[0] = z0;
                super::relu(&mut acts[0]);
                for i in 1..depth {
                    let mut out = Vec::new();
                    net.layers[i].affine(&acts[i - 1], &mut out);
                    if i < depth - 1 {
                        super::relu(&mut out);
                    }
                    acts[i] = out;
                }
                let z = acts[depth - 1][0];
                loss += inv_n * (softplus(z) - y * z);

                // backward
                let mut delta = vec![(sigmoid(z) - y) * inv_n];
                for i in (1..depth).rev() {
                    let layer = &net.layers[i];
                    let input = &acts[i - 1];
                    let gl = &mut g_net.layers[i];
                    let mut back = vec![0.0; layer.cols];
                    for (r, &dz) in delta.iter().enumerate() {
                        if dz == 0.0 {
                            continue;
                        }
                        gl.bias[r] += dz;
                        let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                        let grow = &mut gl.weights[r * layer.cols..(r + 1) * layer.cols];
                        for k in 0..layer.cols {
                            grow[k] += dz * input[k];
                            back[k] += dz * row[k];
                        }
                    }
                    // ReLU mask of the layer below
                    for (b, &a) in back.iter_mut().zip(input) {
                        if a <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
                let g0 = &mut g_net.layers[0];
                for (r, &dz) in delta.iter().enumerate() {
                    if dz == 0.0 {
                        continue;
                    }
                    g0.bias[r] += dz;
                    for &(j, xj, gj) in &nz {
                        g0.weights[r * d + j] += dz * gj;
                        dgate[j] += dz * l0.weights[r * d + j] * xj;
                    }
                }
            }
        }

        // α̃_j = exp(s_j − s_m) with m the argmax; α̃_m ≡ 1.
        let m = gate.iter().position(|&g| g == 1.0).unwrap_or(0);
        let mut ds = vec![0.0; d];
        for j in 0..d {
            if j != m {
                let v = dgate[j] * gate[j];
                ds[j] += v;
                ds[m] -= v;
            }
        }
        if terms.entropy_weight > 0.0 {
            let h = entropy(&alpha);
            loss += terms.entropy_weight * h;
            for j in 0..d {
                if alpha[j] > 0.0 {
                    ds[j] -= terms.entropy_weight * alpha[j] * (alpha[j].ln() + h);
                }
            }
        }
        let g0 = &mut g_net.layers[0];
        for r in 0..l0.rows {
            for j in 0..d {
                let w = l0.weights[r * d + j];
                if w != 0.0 {
                    g0.weights[r * d + j] += ds[j] / tau * w.signum();
                }
            }
        }
    }
    (loss, grad)
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<EntropyLenModel> {
    train_with_history(ds, cfg).map(|(m, _)| m)
}

/// Gradient descent with momentum. Deterministic for a fixed config.
pub fn train_with_history(ds: &Dataset, cfg: &TrainConfig) -> Result<(EntropyLenModel, TrainReport)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let mut model =
        EntropyLenModel::new_random(ds.n_features(), ds.class_names.clone(), &cfg.hidden_sizes, cfg.temperature, cfg.seed)?;
    let samples: Vec<(&[f64], LabelSet)> = ds.examples.iter().map(|e| (&*e.concepts, e.labels)).collect();
    let batch = cfg.batch_size.unwrap_or(samples.len()).min(samples.len());
    let warmup_epochs = (cfg.entropy_warmup * cfg.epochs as f64).round();
    let mut velocity = vec![0.0; model.params().count()];
    let mut second = vec![0.0; velocity.len()];
    let mut step = 0i32;
    let mut losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        let ramp = if warmup_epochs > 0.0 { (epoch as f64 / warmup_epochs).min(1.0) } else { 1.0 };
        let terms = LossTerms::full(cfg.entropy_weight * ramp);
        for chunk in samples.chunks(batch) {
            let (loss, grad) = loss_and_grad(&model, chunk, terms);
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss became {loss} at epoch {epoch} (learning rate {}); try a smaller learning rate",
                    cfg.learning_rate
                )));
            }
            epoch_loss += loss * chunk.len() as f64 / samples.len() as f64;
            step += 1;
            match cfg.optimizer {
                Optimizer::Momentum => {
                    for ((w, v), g) in model.params_mut().zip(velocity.iter_mut()).zip(grad.params()) {
                        *v = cfg.momentum * *v - cfg.learning_rate * g;
                        *w += *v;
                    }
                }
                Optimizer::Adam => {
                    let (b1, b2) = (cfg.momentum, 0.999f64);
                    let c1 = 1.0 - b1.powi(step);
                    let c2 = 1.0 - b2.powi(step);
                    let params = model.params_mut().zip(velocity.iter_mut()).zip(second.iter_mut()).zip(grad.params());
                    for (((w, m), v), g) in params {
                        *m = b1 * *m + (1.0 - b1) * g;
                        *v = b2 * *v + (1.0 - b2) * g * g;
                        *w -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + 1e-8);
                    }
                }
            }
        }
        losses.push(epoch_loss);
    }
    if !model.is_finite() {
        return Err(Error::Numerical("training produced non-finite weights".into()));
    }
    Ok((model, TrainReport { losses }))
}

/// Smallest denominator of the relative error; below it the comparison is
/// effectively absolute. Central differences at step 1e-5 carry ~1e-10 of
/// truncation and rounding error.
const REL_FLOOR: f64 = 1e-6;

/// Largest relative error between the analytic gradient and central finite
/// differences (step 1e-5) over `n_params` randomly chosen parameters.
pub fn gradient_check(
    model: &EntropyLenModel,
    x: &[f64],
    labels: LabelSet,
    terms: LossTerms,
    n_params: usize,
    seed: u64,
) -> Result<f64> {
    const STEP: f64 = 1e-5;
    if x.len() != model.n_features() {
        return Err(Error::DimensionMismatch { expected: model.n_features(), actual: x.len() });
    }
    let batch = [(x, labels)];
    let (_, grad) = loss_and_grad(model, &batch, terms);
    let analytic: Vec<f64> = grad.params().copied().collect();
    let total = analytic.len();
    let mut r = rng::stream(seed, 0x6C);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..n_params.min(total) {
        let idx = r.random_range(0..total);
        let original = *model.params().nth(idx).expect("index in range");
        let mut eval = |v: f64| {
            *probe.params_mut().nth(idx).expect("index in range") = v;
            loss_and_grad(&probe, &batch, terms).0
        };
        let numeric = (eval(original + STEP) - eval(original - STEP)) / (2.0 * STEP);
        *probe.params_mut().nth(idx).expect("index in range") = original;
        let a = analytic[idx];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}
