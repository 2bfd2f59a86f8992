//! Local linear surrogate explainer and submodular pick.
//!
//! Each explanation fits a kernel-weighted ridge regression of the model's
//! class probability on perturbed copies of the input. In discretized mode
//! the perturbations switch off random subsets of the active concepts (the
//! bag-of-words variant); otherwise uniform noise is added and the result is
//! binarized.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Vocabulary;
use crate::rng;
use crate::{binarize, Error, Predictor, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    #[default]
    Discretized,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub n_samples: usize,
    /// Defaults to `0.75 · √d`.
    pub kernel_width: Option<f64>,
    pub top_features: usize,
    pub mode: SamplingMode,
    /// Half-width of the uniform noise in continuous mode.
    pub noise_scale: f64,
    pub ridge: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self { n_samples: 1000, kernel_width: None, top_features: 10, mode: SamplingMode::Discretized, noise_scale: 0.6, ridge: 1e-3 }
    }
}

/// Sparse signed feature weights, largest magnitude first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightExplanation {
    pub weights: Vec<(usize, f64)>,
    pub intercept: f64,
    pub n_samples: usize,
    pub kernel_width: f64,
}

impl WeightExplanation {
    /// Dense length-`d` weight vector.
    pub fn dense(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        for &(j, w) in &self.weights {
            v[j] = w;
        }
        v
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights.iter().find(|(f, _)| *f == j).map_or(0.0, |w| w.1)
    }

    /// `{"weights": {term: w}, "intercept": b}`.
    pub fn to_json(&self, vocab: &Vocabulary) -> serde_json::Value {
        let weights: serde_json::Map<String, serde_json::Value> =
            self.weights.iter().map(|&(j, w)| (vocab.term(j).to_string(), w.into())).collect();
        serde_json::json!({ "weights": weights, "intercept": self.intercept })
    }
}

/// Explains `model`'s probability for `class` around `x`.
pub fn surrogate_local(
    model: &dyn Predictor,
    x: &[f64],
    class: usize,
    cfg: &SurrogateConfig,
    seed: u64,
) -> Result<WeightExplanation> {
    let d = x.len();
    if d != model.n_features() {
        return Err(Error::DimensionMismatch { expected: model.n_features(), actual: d });
    }
    if cfg.n_samples < 10 {
        return Err(Error::invalid("surrogate needs at least 10 samples"));
    }
    if class >= model.n_classes() {
        return Err(Error::invalid(format!("class {class} out of range")));
    }
    let kernel_width = cfg.kernel_width.unwrap_or(0.75 * (d as f64).sqrt());
    if !(kernel_width > 0.0) {
        return Err(Error::invalid("kernel width must be positive"));
    }
    match fit(model, x, class, cfg, kernel_width, cfg.n_samples, seed) {
        Ok(e) => Ok(e),
        Err(Error::Numerical(_)) => fit(model, x, class, cfg, kernel_width, 2 * cfg.n_samples, rng::derive_seed(seed, 1)),
        Err(e) => Err(e),
    }
}

/// Perturbed binary inputs; the first one is the binarized input itself.
pub fn sample_neighbourhood(x: &[f64], mode: SamplingMode, noise_scale: f64, n: usize, r: &mut rng::Rng) -> Vec<Vec<f64>> {
    let base = binarize(x);
    let mut out = Vec::with_capacity(n);
    out.push(base.clone());
    let active: Vec<usize> = (0..x.len()).filter(|&j| base[j] > 0.5).collect();
    for _ in 1..n {
        let mut z = base.clone();
        match mode {
            SamplingMode::Discretized => {
                if !active.is_empty() {
                    let k = r.random_range(1..=active.len());
                    for i in index::sample(r, active.len(), k) {
                        z[active[i]] = 0.0;
                    }
                }
            }
            SamplingMode::Continuous => {
                for (zj, &xj) in z.iter_mut().zip(x) {
                    let v = (xj + r.random_range(-noise_scale..=noise_scale)).clamp(0.0, 1.0);
                    *zj = if v > 0.5 { 1.0 } else { 0.0 };
                }
            }
        }
        out.push(z);
    }
    out
}

fn fit(
    model: &dyn Predictor,
    x: &[f64],
    class: usize,
    cfg: &SurrogateConfig,
    kernel_width: f64,
    n: usize,
    seed: u64,
) -> Result<WeightExplanation> {
    let mut r = rng::stream(seed, 0x5A);
    let samples = sample_neighbourhood(x, cfg.mode, cfg.noise_scale, n, &mut r);
    let base = &samples[0];
    let targets: Vec<f64> = samples.iter().map(|z| model.predict_class(z, class)).collect();
    let kernel: Vec<f64> = samples
        .iter()
        .map(|z| {
            let d2: f64 = z.iter().zip(base).map(|(a, b)| (a - b) * (a - b)).sum();
            (-d2 / (kernel_width * kernel_width)).exp()
        })
        .collect();
    // only columns that vary carry information
    let cols: Vec<usize> = (0..x.len()).filter(|&j| samples.iter().any(|z| z[j] != base[j])).collect();
    let (coef, intercept) = weighted_ridge(&samples, &cols, &targets, &kernel, cfg.ridge)?;
    let mut weights: Vec<(usize, f64)> = cols.iter().copied().zip(coef).filter(|(_, w)| *w != 0.0).collect();
    weights.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    weights.truncate(cfg.top_features);
    Ok(WeightExplanation { weights, intercept, n_samples: n, kernel_width })
}

/// Minimizes `Σ_i k_i (y_i − b − z_i·β)² + λ‖β‖²` with the intercept left
/// unpenalized, by centering on the kernel-weighted means.
pub(crate) fn weighted_ridge(
    samples: &[Vec<f64>],
    cols: &[usize],
    y: &[f64],
    k: &[f64],
    lambda: f64,
) -> Result<(Vec<f64>, f64)> {
    let total: f64 = k.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("all kernel weights vanished".into()));
    }
    let y_mean = k.iter().zip(y).map(|(w, v)| w * v).sum::<f64>() / total;
    if cols.is_empty() {
        return Ok((Vec::new(), y_mean));
    }
    let p = cols.len();
    let means: Vec<f64> = cols.iter().map(|&j| samples.iter().zip(k).map(|(z, w)| w * z[j]).sum::<f64>() / total).collect();
    let mut a = DMatrix::<f64>::zeros(samples.len(), p);
    let mut b = DVector::<f64>::zeros(samples.len());
    for (i, z) in samples.iter().enumerate() {
        let s = k[i].sqrt();
        for (c, &j) in cols.iter().enumerate() {
            a[(i, c)] = s * (z[j] - means[c]);
        }
        b[i] = s * (y[i] - y_mean);
    }
    let mut gram = a.tr_mul(&a);
    for c in 0..p {
        gram[(c, c)] += lambda;
    }
    let rhs = a.tr_mul(&b);
    let chol = gram.cholesky().ok_or_else(|| Error::Numerical("ridge system is not positive definite".into()))?;
    let beta = chol.solve(&rhs);
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite ridge solution".into()));
    }
    let intercept = y_mean - beta.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    Ok((beta.iter().copied().collect(), intercept))
}

/// Result of [`submodular_pick`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    /// Chosen explanation indices in pick order.
    pub indices: Vec<usize>,
    /// Global feature importance `I_j = √(Σ_i |W_ij|)`.
    pub importance: Vec<f64>,
    /// Signed sum of the picked explanations' weights, per feature.
    pub aggregate: Vec<f64>,
}

impl Pick {
    /// The `n` features with largest `|aggregate|`, ties by id.
    pub fn top_features(&self, n: usize) -> Vec<(usize, f64)> {
        let mut f: Vec<(usize, f64)> = self.aggregate.iter().copied().enumerate().filter(|(_, w)| *w != 0.0).collect();
        f.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        f.truncate(n);
        f
    }
}

/// Coverage of a set of explanations: total importance of the features any
/// of them uses.
pub fn coverage(explanations: &[WeightExplanation], importance: &[f64], picked: &[usize]) -> f64 {
    let mut seen = vec![false; importance.len()];
    for &i in picked {
        for &(j, w) in &explanations[i].weights {
            if w != 0.0 {
                seen[j] = true;
            }
        }
    }
    seen.iter().zip(importance).filter(|(s, _)| **s).map(|(_, v)| v).sum()
}

/// Greedy max-coverage selection of `budget` explanations over `d` features;
/// equal gains go to the lowest index.
pub fn submodular_pick(explanations: &[WeightExplanation], d: usize, budget: usize) -> Result<Pick> {
    if explanations.iter().flat_map(|e| &e.weights).any(|&(j, _)| j >= d) {
        return Err(Error::invalid("explanation references a feature beyond d"));
    }
    let mut importance = vec![0.0; d];
    for e in explanations {
        for &(j, w) in &e.weights {
            importance[j] += w.abs();
        }
    }
    importance.iter_mut().for_each(|v| *v = v.sqrt());
    let mut covered = vec![false; d];
    let mut picked = Vec::new();
    let mut remaining: Vec<usize> = (0..explanations.len()).collect();
    while picked.len() < budget && !remaining.is_empty() {
        let gain = |i: usize| -> f64 {
            let mut g = 0.0;
            let mut seen = Vec::new();
            for &(j, w) in &explanations[i].weights {
                if w != 0.0 && !covered[j] && !seen.contains(&j) {
                    seen.push(j);
                    g += importance[j];
                }
            }
            g
        };
        let mut best = 0;
        let mut best_gain = gain(remaining[0]);
        for (pos, &i) in remaining.iter().enumerate().skip(1) {
            let g = gain(i);
            if g > best_gain {
                best = pos;
                best_gain = g;
            }
        }
        let i = remaining.remove(best);
        for &(j, w) in &explanations[i].weights {
            if w != 0.0 {
                covered[j] = true;
            }
        }
        picked.push(i);
    }
    let mut aggregate = vec![0.0; d];
    for &i in &picked {
        for &(j, w) in &explanations[i].weights {
            aggregate[j] += w;
        }
    }
    Ok(Pick { indices: picked, importance, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    struct Indicator(usize, usize);

    impl Predictor for Indicator {
        fn n_classes(&self) -> usize {
            1
        }
        fn n_features(&self) -> usize {
            self.1
        }
        fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
            vec![if x[self.0] > 0.5 { 1.0 } else { 0.0 }]
        }
    }

    struct Constant(f64, usize);

    impl Predictor for Constant {
        fn n_classes(&self) -> usize {
            1
        }
        fn n_features(&self) -> usize {
            self.1
        }
        fn predict_proba(&self, _: &[f64]) -> Vec<f64> {
            vec![self.0]
        }
    }

    /// Probability rises with the count of active features among 0..4,
    /// saturating non-linearly.
    struct Saturating;

    impl Predictor for Saturating {
        fn n_classes(&self) -> usize {
            1
        }
        fn n_features(&self) -> usize {
            8
        }
        fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
            let s: f64 = x[..4].iter().sum::<f64>() + 0.5 * x[0] * x[1];
            vec![1.0 / (1.0 + (2.0 - s).exp())]
        }
    }

    #[test]
    fn indicator_model_puts_weight_on_its_feature() {
        let x = [1.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let e = surrogate_local(&Indicator(0, 6), &x, 0, &SurrogateConfig::default(), 3).unwrap();
        assert_eq!(e.weights[0].0, 0);
        assert!(e.weights[0].1 > 0.99, "{:?}", e.weights);
        assert!(e.weights[1..].iter().all(|(_, w)| w.abs() < 1e-4));
        assert!(e.intercept.abs() < 1e-4);
    }

    #[test]
    fn indicator_on_continuous_sampling() {
        let x = [1.0, 0.0, 0.0, 1.0];
        let cfg = SurrogateConfig { mode: SamplingMode::Continuous, ..Default::default() };
        let e = surrogate_local(&Indicator(3, 4), &x, 0, &cfg, 5).unwrap();
        assert_eq!(e.weights[0].0, 3);
        assert!(e.weights[0].1 > 0.99);
    }

    #[test]
    fn constant_model_gives_zero_weights() {
        let x = [1.0, 1.0, 1.0, 0.0, 1.0];
        let e = surrogate_local(&Constant(0.37, 5), &x, 0, &SurrogateConfig::default(), 0).unwrap();
        assert!(e.weights.iter().all(|(_, w)| w.abs() < 1e-9));
        assert!((e.intercept - 0.37).abs() < 1e-9);
    }

    #[test]
    fn different_seeds_give_different_weights() {
        let x = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let cfg = SurrogateConfig { n_samples: 50, ..Default::default() };
        let a = surrogate_local(&Saturating, &x, 0, &cfg, 1).unwrap();
        let b = surrogate_local(&Saturating, &x, 0, &cfg, 2).unwrap();
        assert_ne!(a.dense(8), b.dense(8));
        assert_eq!(a, surrogate_local(&Saturating, &x, 0, &cfg, 1).unwrap());
    }

    #[test]
    fn rejects_tiny_sample_budget() {
        let cfg = SurrogateConfig { n_samples: 5, ..Default::default() };
        assert!(surrogate_local(&Saturating, &[0.0; 8], 0, &cfg, 0).is_err());
    }

    #[test]
    fn keeps_at_most_top_features() {
        let x = [1.0; 8];
        let cfg = SurrogateConfig { top_features: 2, ..Default::default() };
        let e = surrogate_local(&Saturating, &x, 0, &cfg, 0).unwrap();
        assert_eq!(e.weights.len(), 2);
        assert!(e.weights[0].1.abs() >= e.weights[1].1.abs());
    }

    #[test]
    fn json_uses_terms() {
        let v = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        let e = WeightExplanation { weights: vec![(1, -1.2), (0, 0.9)], intercept: 0.1, n_samples: 10, kernel_width: 1.0 };
        assert_eq!(e.to_json(&v), serde_json::json!({"weights": {"a": 0.9, "b": -1.2}, "intercept": 0.1}));
    }

    fn sse(samples: &[Vec<f64>], cols: &[usize], y: &[f64], k: &[f64], beta: &[f64], b: f64) -> f64 {
        samples
            .iter()
            .zip(y)
            .zip(k)
            .map(|((z, v), w)| {
                let pred = b + cols.iter().zip(beta).map(|(&j, c)| c * z[j]).sum::<f64>();
                w * (v - pred).powi(2)
            })
            .sum()
    }

    proptest! {
        #[test]
        fn discretized_samples_are_binary_subsets(seed in 0u64..200, xs in proptest::collection::vec(0.0f64..=1.0, 1..12)) {
            let mut r = rng::stream(seed, 0);
            let base = binarize(&xs);
            for z in sample_neighbourhood(&xs, SamplingMode::Discretized, 0.6, 30, &mut r) {
                for (a, b) in z.iter().zip(&base) {
                    prop_assert!(*a == 0.0 || *a == 1.0);
                    prop_assert!(a <= b);
                }
            }
        }

        #[test]
        fn ridge_fit_beats_intercept_only(seed in 0u64..200) {
            let mut r = rng::stream(seed, 7);
            let samples: Vec<Vec<f64>> = (0..40).map(|_| (0..5).map(|_| r.random_range(0..2) as f64).collect()).collect();
            let y: Vec<f64> = (0..40).map(|_| r.random::<f64>()).collect();
            let k: Vec<f64> = (0..40).map(|_| r.random_range(0.1..1.0)).collect();
            let cols: Vec<usize> = (0..5).collect();
            let (beta, b) = weighted_ridge(&samples, &cols, &y, &k, 1e-3).unwrap();
            let mean = k.iter().zip(&y).map(|(w, v)| w * v).sum::<f64>() / k.iter().sum::<f64>();
            prop_assert!(sse(&samples, &cols, &y, &k, &beta, b) <= sse(&samples, &cols, &y, &k, &[0.0; 5], mean) + 1e-12);
        }
    }

    fn expl(weights: &[(usize, f64)]) -> WeightExplanation {
        WeightExplanation { weights: weights.to_vec(), intercept: 0.0, n_samples: 10, kernel_width: 1.0 }
    }

    #[test]
    fn pick_takes_everything_when_budget_allows() {
        let es = vec![expl(&[(0, 1.0)]), expl(&[(0, 1.0)]), expl(&[(1, 0.5)])];
        let p = submodular_pick(&es, 2, 5).unwrap();
        let mut idx = p.indices.clone();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn pick_starts_with_full_cover() {
        let es = vec![expl(&[(0, 1.0)]), expl(&[(0, 0.5), (1, -0.5), (2, 0.2)]), expl(&[(2, 1.0)])];
        assert_eq!(submodular_pick(&es, 3, 1).unwrap().indices, vec![1]);
    }

    #[test]
    fn pick_aggregate_and_top_features() {
        let es = vec![expl(&[(0, 1.0), (1, -2.0)]), expl(&[(0, 0.5)])];
        let p = submodular_pick(&es, 2, 2).unwrap();
        assert_eq!(p.aggregate, vec![1.5, -2.0]);
        assert_eq!(p.top_features(1), vec![(1, -2.0)]);
        assert!((p.importance[0] - 1.5f64.sqrt()).abs() < 1e-15);
    }

    fn brute_force_pair(es: &[WeightExplanation], importance: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for a in 0..es.len() {
            for b in a + 1..es.len() {
                best = best.max(coverage(es, importance, &[a, b]));
            }
        }
        best
    }

    #[test]
    fn pick_matches_exhaustive_pair_on_disjoint_supports() {
        // supports are disjoint, so greedy by marginal gain is optimal
        let es: Vec<WeightExplanation> = (0..6).map(|i| expl(&[(i, (i + 1) as f64 * 0.3)])).collect();
        let p = submodular_pick(&es, 6, 2).unwrap();
        assert_eq!(coverage(&es, &p.importance, &p.indices), brute_force_pair(&es, &p.importance));
        assert_eq!(p.indices, vec![5, 4]);
    }

    proptest! {
        #[test]
        fn greedy_pair_reaches_three_quarters_of_optimum(seed in 0u64..300) {
            let mut r = rng::stream(seed, 9);
            let es: Vec<WeightExplanation> = (0..6)
                .map(|_| {
                    let mut w: Vec<(usize, f64)> = (0..8).filter(|_| r.random_bool(0.4)).map(|j| (j, 0.0)).collect();
                    for e in w.iter_mut() {
                        e.1 = r.random_range(-1.0..1.0);
                    }
                    expl(&w)
                })
                .collect();
            let p = submodular_pick(&es, 8, 2).unwrap();
            let got = coverage(&es, &p.importance, &p.indices);
            prop_assert!(got >= 0.75 * brute_force_pair(&es, &p.importance) - 1e-12);
        }
    }
}
