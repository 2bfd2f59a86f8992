//! Entropy-based Logic Explained Network.
//!
//! One independent subnetwork per class. The first layer is gated: each input
//! is scaled by its normalized importance `α̃_j = α_j / max α`, where
//! `α = softmax(γ / τ)` and `γ_j` is the L1 norm of column `j` of the
//! first-layer weights. Hidden layers use ReLU; the head is a sigmoid.
//! Training minimizes binary cross-entropy plus `λ · Σ_i H(α^(i))`, which
//! drives α toward a few relevant concepts.

mod train;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Predictor, Result, THETA};

pub use train::{gradient_check, loss_and_grad, train, train_with_history, LossTerms, Optimizer, TrainConfig, TrainReport};

/// Fully connected layer, row-major `rows × cols` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseRepr", into = "DenseRepr")]
pub struct Dense {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DenseRepr {
    shape: [usize; 2],
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl TryFrom<DenseRepr> for Dense {
    type Error = Error;

    fn try_from(r: DenseRepr) -> Result<Self> {
        let [rows, cols] = r.shape;
        Dense::from_parts(rows, cols, r.weights, r.bias)
    }
}

impl From<Dense> for DenseRepr {
    fn from(d: Dense) -> Self {
        DenseRepr { shape: [d.rows, d.cols], weights: d.weights, bias: d.bias }
    }
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, weights: vec![0.0; rows * cols], bias: vec![0.0; rows] }
    }

    pub fn from_parts(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("layer dimensions must be positive"));
        }
        if weights.len() != rows * cols || bias.len() != rows {
            return Err(Error::invalid(format!(
                "layer {rows}x{cols} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite layer parameter".into()));
        }
        Ok(Self { rows, cols, weights, bias })
    }

    /// Uniform in `±1/sqrt(cols)`.
    fn random(rows: usize, cols: usize, r: &mut rng::Rng) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        let mut draw = || r.random_range(-bound..bound);
        let weights = (0..rows * cols).map(|_| draw()).collect();
        let bias = (0..rows).map(|_| draw()).collect();
        Self { rows, cols, weights, bias }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    pub fn weight_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.weights[r * self.cols + c]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.cols).zip(&self.bias).map(|(row, b)| {
            b + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>()
        }));
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Subnetwork for one class: `layers[0]` is the gated entropy layer, the last
/// layer is the single-unit head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassNet {
    pub layers: Vec<Dense>,
}

impl ClassNet {
    fn entropy_layer(&self) -> &Dense {
        &self.layers[0]
    }

    fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| Dense::zeros(l.rows, l.cols)).collect() }
    }
}

/// Whether relevance thresholds the max-normalized `α̃` (default) or raw `α`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    #[default]
    Normalized,
    Raw,
}

/// Per-class importance scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaScores {
    /// softmax(γ / τ), sums to 1
    pub alpha: Vec<f64>,
    /// α / max α, attains 1
    pub alpha_tilde: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyLenModel {
    pub class_names: Vec<String>,
    #[serde(default)]
    pub vocab_ref: Option<String>,
    pub tau: f64,
    pub theta: f64,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
    pub classes: Vec<ClassNet>,
}

impl EntropyLenModel {
    /// Random initialization. `hidden_sizes[0]` is the width of the gated
    /// layer; further entries add ReLU layers before the head.
    pub fn new_random(
        n_features: usize,
        class_names: Vec<String>,
        hidden_sizes: &[usize],
        tau: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_features == 0 || class_names.is_empty() {
            return Err(Error::invalid("need at least one feature and one class"));
        }
        if hidden_sizes.is_empty() || hidden_sizes.contains(&0) {
            return Err(Error::invalid("hidden sizes must be nonempty and positive"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        let classes = (0..class_names.len())
            .map(|c| {
                let mut r = rng::stream(seed, 0x1E4 + c as u64);
                let mut layers = Vec::with_capacity(hidden_sizes.len() + 1);
                let mut fan_in = n_features;
                for &h in hidden_sizes {
                    layers.push(Dense::random(h, fan_in, &mut r));
                    fan_in = h;
                }
                layers.push(Dense::random(1, fan_in, &mut r));
                ClassNet { layers }
            })
            .collect();
        Ok(Self { class_names, vocab_ref: None, tau, theta: THETA, alpha_mode: AlphaMode::Normalized, classes })
    }

    /// Builds a model from explicit subnetworks; validates shapes.
    pub fn from_classes(class_names: Vec<String>, tau: f64, classes: Vec<ClassNet>) -> Result<Self> {
        let m = Self { class_names, vocab_ref: None, tau, theta: THETA, alpha_mode: AlphaMode::Normalized, classes };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.classes.len() != self.class_names.len() {
            return Err(Error::invalid("one subnetwork per class required"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        let d = self.classes[0].layers.first().map_or(0, |l| l.cols);
        for net in &self.classes {
            if net.layers.len() < 2 || net.layers[0].cols != d {
                return Err(Error::invalid("every subnetwork needs a gated layer over all features and a head"));
            }
            for pair in net.layers.windows(2) {
                if pair[1].cols != pair[0].rows {
                    return Err(Error::invalid("layer shapes do not chain"));
                }
            }
            if net.layers.last().map(|l| l.rows) != Some(1) {
                return Err(Error::invalid("head must have a single unit"));
            }
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.classes[0].layers[0].cols
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_net(&self, class: usize) -> &ClassNet {
        &self.classes[class]
    }

    pub fn class_net_mut(&mut self, class: usize) -> &mut ClassNet {
        &mut self.classes[class]
    }

    pub fn alpha_scores(&self, class: usize) -> Result<AlphaScores> {
        if class >= self.n_classes() {
            return Err(Error::invalid(format!("class {class} out of range")));
        }
        let (alpha, alpha_tilde) = alphas(self.classes[class].entropy_layer(), self.tau);
        Ok(AlphaScores { alpha, alpha_tilde })
    }

    /// `A^(class)`: features whose importance reaches `theta`, ascending ids.
    pub fn relevant_features(&self, class: usize) -> Result<Vec<usize>> {
        let s = self.alpha_scores(class)?;
        let scores = match self.alpha_mode {
            AlphaMode::Normalized => &s.alpha_tilde,
            AlphaMode::Raw => &s.alpha,
        };
        Ok(scores.iter().enumerate().filter(|(_, &a)| a >= self.theta).map(|(j, _)| j).collect())
    }

    /// `Σ_i H(α^(i))` with `0 · log 0 = 0`.
    pub fn entropy_penalty(&self) -> f64 {
        self.classes.iter().map(|net| entropy(&alphas(net.entropy_layer(), self.tau).0)).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), actual: x.len() });
        }
        Ok((0..self.n_classes()).map(|c| self.forward_class(x, c)).collect())
    }

    fn forward_class(&self, x: &[f64], class: usize) -> f64 {
        let net = &self.classes[class];
        let (_, gate) = alphas(net.entropy_layer(), self.tau);
        let gated: Vec<f64> = gate.iter().zip(x).map(|(g, v)| g * v).collect();
        let mut a = Vec::new();
        let mut next = Vec::new();
        net.layers[0].affine(&gated, &mut a);
        relu(&mut a);
        let last = net.layers.len() - 1;
        for (i, layer) in net.layers.iter().enumerate().skip(1) {
            layer.affine(&a, &mut next);
            if i < last {
                relu(&mut next);
            }
            std::mem::swap(&mut a, &mut next);
        }
        sigmoid(a[0])
    }

    pub fn is_finite(&self) -> bool {
        self.classes.iter().flat_map(|n| &n.layers).flat_map(Dense::params).all(|v| v.is_finite())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.classes.iter_mut().flat_map(|n| n.layers.iter_mut()).flat_map(Dense::params_mut)
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &f64> {
        self.classes.iter().flat_map(|n| n.layers.iter()).flat_map(Dense::params)
    }

    pub(crate) fn zeros_like(&self) -> Self {
        Self { classes: self.classes.iter().map(ClassNet::zeros_like).collect(), ..self.clone() }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        serde_json::to_writer(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Self = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        m.validate()?;
        Ok(m)
    }
}

impl Predictor for EntropyLenModel {
    fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn n_features(&self) -> usize {
        EntropyLenModel::n_features(self)
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), EntropyLenModel::n_features(self), "input dimension");
        (0..self.classes.len()).map(|c| self.forward_class(x, c)).collect()
    }

    fn predict_class(&self, x: &[f64], class: usize) -> f64 {
        assert_eq!(x.len(), EntropyLenModel::n_features(self), "input dimension");
        self.forward_class(x, class)
    }
}

/// Column L1 norms of a layer.
pub(crate) fn column_l1(layer: &Dense) -> Vec<f64> {
    let mut gamma = vec![0.0; layer.cols];
    for row in layer.weights.chunks_exact(layer.cols) {
        for (g, w) in gamma.iter_mut().zip(row) {
            *g += w.abs();
        }
    }
    gamma
}

/// `(α, α̃)` of a gated layer. `α̃_j = exp(s_j − max s)` equals `α_j / max α`
/// and is exactly 1 at the argmax.
pub(crate) fn alphas(layer: &Dense, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let s: Vec<f64> = column_l1(layer).into_iter().map(|g| g / tau).collect();
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tilde: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = tilde.iter().sum();
    (tilde.iter().map(|e| e / z).collect(), tilde)
}

pub(crate) fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

fn relu(v: &mut [f64]) {
    for a in v {
        if *a < 0.0 {
            *a = 0.0;
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
