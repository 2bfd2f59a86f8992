//! Random forest over binary concepts, used as the black box that the
//! explainers target.
//!
//! Trees split on `x_j > 0.5` only and store a per-class positive fraction at
//! each leaf, so one forest serves every class of a multi-label problem.
//! Node impurity is the per-class binary Gini index averaged over classes.

use std::path::Path;

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::rng;
use crate::{Error, Predictor, Result, THETA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of features considered at each node, at least one.
    pub feature_subsample: f64,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 50, max_depth: 8, feature_subsample: 0.3, seed: 0 }
    }
}

/// Preorder node. A split's left child (`x_j ≤ 0.5`) immediately follows it;
/// `right` is the index of the right child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split { feature: usize, right: usize },
    Leaf { probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct DecisionTree {
    nodes: Vec<Node>,
    max_depth: usize,
    n_features: usize,
    n_classes: usize,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    max_depth: usize,
    n_features: usize,
    n_classes: usize,
    nodes: Vec<Node>,
}

impl TryFrom<TreeRepr> for DecisionTree {
    type Error = Error;

    fn try_from(r: TreeRepr) -> Result<Self> {
        DecisionTree::from_nodes(r.nodes, r.max_depth, r.n_features, r.n_classes)
    }
}

impl From<DecisionTree> for TreeRepr {
    fn from(t: DecisionTree) -> Self {
        TreeRepr { max_depth: t.max_depth, n_features: t.n_features, n_classes: t.n_classes, nodes: t.nodes }
    }
}

impl DecisionTree {
    /// Validates a preorder node list: every subtree is well formed, leaf
    /// vectors have `n_classes` entries in `[0, 1]`, and depth ≤ `max_depth`.
    pub fn from_nodes(nodes: Vec<Node>, max_depth: usize, n_features: usize, n_classes: usize) -> Result<Self> {
        fn check(nodes: &[Node], at: usize, depth: usize, t: (usize, usize, usize)) -> Result<usize> {
            let (max_depth, d, r) = t;
            match nodes.get(at) {
                None => Err(Error::invalid("dangling child index")),
                Some(Node::Leaf { probs }) => {
                    if probs.len() != r || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(Error::invalid("leaf must hold one probability per class"));
                    }
                    Ok(at + 1)
                }
                Some(&Node::Split { feature, right }) => {
                    if feature >= d || depth >= max_depth {
                        return Err(Error::invalid("split feature or depth out of range"));
                    }
                    let end_left = check(nodes, at + 1, depth + 1, t)?;
                    if right != end_left {
                        return Err(Error::invalid("right child must follow the left subtree"));
                    }
                    check(nodes, right, depth + 1, t)
                }
            }
        }
        if n_classes == 0 {
            return Err(Error::invalid("tree needs at least one class"));
        }
        let end = check(&nodes, 0, 0, (max_depth, n_features, n_classes))?;
        if end != nodes.len() {
            return Err(Error::invalid("unreachable nodes after the root subtree"));
        }
        Ok(Self { nodes, max_depth, n_features, n_classes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Leaf vector reached by `x`.
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { probs } => return probs,
                &Node::Split { feature, right } => at = if x[feature] > THETA { right } else { at + 1 },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> (usize, usize) {
            match nodes[at] {
                Node::Leaf { .. } => (0, at + 1),
                Node::Split { right, .. } => {
                    let (l, _) = go(nodes, at + 1);
                    let (r, end) = go(nodes, right);
                    (1 + l.max(r), end)
                }
            }
        }
        go(&self.nodes, 0).0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub feature_subsample: f64,
    pub seed: u64,
}

impl Forest {
    pub fn new(trees: Vec<DecisionTree>, feature_subsample: f64, seed: u64) -> Result<Self> {
        let Some(first) = trees.first() else {
            return Err(Error::invalid("forest needs at least one tree"));
        };
        if trees.iter().any(|t| t.n_features != first.n_features || t.n_classes != first.n_classes) {
            return Err(Error::invalid("trees disagree on input or output size"));
        }
        Ok(Self { trees, feature_subsample, seed })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f: Forest = serde_json::from_slice(&std::fs::read(path)?)?;
        Forest::new(f.trees, f.feature_subsample, f.seed)
    }
}

impl Predictor for Forest {
    fn n_classes(&self) -> usize {
        self.trees[0].n_classes
    }

    fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    /// Mean of the leaf vectors.
    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_features(), "input dimension");
        let mut out = vec![0.0; self.n_classes()];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.leaf(x)) {
                *o += p;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    fn predict_class(&self, x: &[f64], class: usize) -> f64 {
        assert_eq!(x.len(), self.n_features(), "input dimension");
        self.trees.iter().map(|t| t.leaf(x)[class]).sum::<f64>() / self.trees.len() as f64
    }
}

/// Grows each tree on a bootstrap sample with its own seeded stream; trees
/// are fitted in parallel and the result does not depend on thread count.
pub fn fit_forest(ds: &Dataset, cfg: &ForestConfig) -> Result<Forest> {
    if ds.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if cfg.n_trees == 0 || !(cfg.feature_subsample > 0.0 && cfg.feature_subsample <= 1.0) {
        return Err(Error::invalid("need n_trees ≥ 1 and feature_subsample in (0, 1]"));
    }
    let d = ds.n_features();
    let mtry = ((cfg.feature_subsample * d as f64).round() as usize).clamp(1, d);
    let rows: Vec<(&[f64], u64)> = ds.examples.iter().map(|e| (&e.concepts[..], e.labels.bits())).collect();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(rng::derive_seed(cfg.seed, t as u64), 0xF0);
            let sample: Vec<usize> = (0..rows.len()).map(|_| r.random_range(0..rows.len())).collect();
            let mut g = Grower { rows: &rows, n_classes: ds.n_classes(), d, mtry, max_depth: cfg.max_depth, nodes: Vec::new(), rng: r };
            g.grow(sample, 0);
            DecisionTree { nodes: g.nodes, max_depth: cfg.max_depth, n_features: d, n_classes: ds.n_classes() }
        })
        .collect();
    Forest::new(trees, cfg.feature_subsample, cfg.seed)
}

struct Grower<'a> {
    rows: &'a [(&'a [f64], u64)],
    n_classes: usize,
    d: usize,
    mtry: usize,
    max_depth: usize,
    nodes: Vec<Node>,
    rng: rng::Rng,
}

impl Grower<'_> {
    fn positives(&self, sample: &[usize]) -> Vec<usize> {
        let mut pos = vec![0; self.n_classes];
        for &i in sample {
            for (c, p) in pos.iter_mut().enumerate() {
                *p += ((self.rows[i].1 >> c) & 1) as usize;
            }
        }
        pos
    }

    /// `n · mean_c gini_c`, the size-weighted impurity of a node.
    fn weighted_impurity(&self, pos: &[usize], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        let g: f64 = pos.iter().map(|&p| {
            let q = p as f64 / nf;
            2.0 * q * (1.0 - q)
        }).sum();
        nf * g / self.n_classes as f64
    }

    fn grow(&mut self, sample: Vec<usize>, depth: usize) {
        let n = sample.len();
        let pos = self.positives(&sample);
        let pure = pos.iter().all(|&p| p == 0 || p == n);
        let split = if depth < self.max_depth && n >= 2 && !pure { self.best_split(&sample, &pos) } else { None };
        let Some(feature) = split else {
            self.nodes.push(Node::Leaf { probs: pos.iter().map(|&p| p as f64 / n as f64).collect() });
            return;
        };
        let (right_rows, left_rows): (Vec<usize>, Vec<usize>) = sample.into_iter().partition(|&i| self.rows[i].0[feature] > THETA);
        let at = self.nodes.len();
        self.nodes.push(Node::Split { feature, right: 0 });
        self.grow(left_rows, depth + 1);
        let right = self.nodes.len();
        self.nodes[at] = Node::Split { feature, right };
        self.grow(right_rows, depth + 1);
    }

    /// Lowest-impurity split among a random feature subset; `None` if no
    /// candidate separates the sample.
    fn best_split(&mut self, sample: &[usize], pos: &[usize]) -> Option<usize> {
        let mut candidates = index::sample(&mut self.rng, self.d, self.mtry).into_vec();
        candidates.sort_unstable();
        let n = sample.len();
        let mut best: Option<(f64, usize)> = None;
        let mut pos_right = vec![0usize; self.n_classes];
        for j in candidates {
            pos_right.iter_mut().for_each(|p| *p = 0);
            let mut n_right = 0;
            for &i in sample {
                let (x, y) = self.rows[i];
                if x[j] > THETA {
                    n_right += 1;
                    for (c, p) in pos_right.iter_mut().enumerate() {
                        *p += ((y >> c) & 1) as usize;
                    }
                }
            }
            if n_right == 0 || n_right == n {
                continue;
            }
            let pos_left: Vec<usize> = pos.iter().zip(&pos_right).map(|(a, b)| a - b).collect();
            let imp = self.weighted_impurity(&pos_left, n - n_right) + self.weighted_impurity(&pos_right, n_right);
            if best.is_none_or(|(b, _)| imp < b) {
                best = Some((imp, j));
            }
        }
        best.map(|(_, j)| j)
    }
}
