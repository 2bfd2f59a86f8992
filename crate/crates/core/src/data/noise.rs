use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{rng, Error, Result};

/// Synthetic spurious features correlated with one class in training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub count: usize,
    pub p_target: f64,
    pub p_other: f64,
    pub target_class: usize,
    pub seed: u64,
}

impl NoiseSpec {
    fn validate(&self, ds: &Dataset) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("noise count must be at least 1"));
        }
        if self.target_class >= ds.n_classes() {
            return Err(Error::invalid(format!("target class {} does not exist", self.target_class)));
        }
        for p in [self.p_target, self.p_other] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("noise probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn term(i: usize) -> String {
        format!("__noise_{i}")
    }
}

/// How a noise column is drawn for one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// `p_target` on target-class rows, `p_other` elsewhere.
    Biased,
    /// `p_other` on every row.
    Uniform,
}

/// Appends `spec.count` noise columns. Existing columns are untouched.
/// `stream` selects an independent random stream of `spec.seed`.
pub fn append_noise_columns(ds: &Dataset, spec: &NoiseSpec, mode: NoiseMode, stream: u64) -> Result<(Dataset, Vec<usize>)> {
    spec.validate(ds)?;
    let mut out = ds.clone();
    let ids = out.vocabulary.extend((0..spec.count).map(NoiseSpec::term))?;
    let mut r = rng::stream(spec.seed, stream);
    for ex in &mut out.examples {
        let p = match mode {
            NoiseMode::Biased if ex.labels.contains(spec.target_class) => spec.p_target,
            _ => spec.p_other,
        };
        for _ in 0..spec.count {
            let on = r.random_bool(p);
            ex.concepts.push(if on { 1.0 } else { 0.0 });
        }
    }
    Ok((out, ids))
}

/// Biased noise on `train`, uniform noise on `test`.
pub fn inject_noise_features(train: &Dataset, test: &Dataset, spec: &NoiseSpec) -> Result<(Dataset, Dataset, Vec<usize>)> {
    let (train, ids) = append_noise_columns(train, spec, NoiseMode::Biased, 1)?;
    let (test, _) = append_noise_columns(test, spec, NoiseMode::Uniform, 2)?;
    Ok((train, test, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ConceptVector, LabelSet, LabeledExample, Vocabulary};

    fn balanced(n: usize) -> Dataset {
        let examples = (0..n)
            .map(|i| LabeledExample {
                concepts: ConceptVector::new(vec![(i % 3 == 0) as u8 as f64]).unwrap(),
                labels: LabelSet::from_indices(if i % 2 == 0 { vec![0] } else { vec![1] }),
                raw_text: None,
            })
            .collect();
        Dataset::new(examples, Vocabulary::new(vec!["w".into()]).unwrap(), vec!["c#".into(), "java".into()]).unwrap()
    }

    fn spec(p_target: f64, p_other: f64) -> NoiseSpec {
        NoiseSpec { count: 2, p_target, p_other, target_class: 0, seed: 42 }
    }

    fn rate(ds: &Dataset, col: usize, class: Option<bool>) -> f64 {
        let rows: Vec<_> = ds
            .examples
            .iter()
            .filter(|e| class.map_or(true, |c| e.labels.contains(0) == c))
            .collect();
        rows.iter().filter(|e| e.concepts[col] == 1.0).count() as f64 / rows.len() as f64
    }

    #[test]
    fn paper_settings_shape() {
        let s1 = spec(0.30, 0.05);
        let s2 = spec(0.35, 0.05);
        assert_eq!((s1.count, s2.count), (2, 2));
        assert!(s2.p_target > s1.p_target);
    }

    #[test]
    fn only_appends_columns() {
        let ds = balanced(200);
        let (tr, te, ids) = inject_noise_features(&ds, &ds, &spec(0.3, 0.05)).unwrap();
        assert_eq!(ids, vec![1, 2]);
        assert_eq!(tr.n_features(), 3);
        for (a, b) in ds.examples.iter().zip(&tr.examples) {
            assert_eq!(a.concepts[0], b.concepts[0]);
            assert_eq!(a.labels, b.labels);
        }
        assert_eq!(te.vocabulary.term(2), "__noise_1");
    }

    #[test]
    fn biased_and_uniform_rates() {
        let ds = balanced(20_000);
        let (tr, te, ids) = inject_noise_features(&ds, &ds, &spec(0.30, 0.05)).unwrap();
        for &j in &ids {
            assert!((rate(&tr, j, Some(true)) - 0.30).abs() < 0.02);
            assert!((rate(&tr, j, Some(false)) - 0.05).abs() < 0.01);
            assert!((rate(&te, j, Some(true)) - 0.05).abs() < 0.01);
            assert!((rate(&te, j, None) - 0.05).abs() < 0.01);
        }
    }

    #[test]
    fn unbiased_noise_is_independent_of_label() {
        // 2x2 chi-square, 1 dof; critical value 6.635 at the 0.01 level.
        let ds = balanced(5000);
        let (tr, _) = append_noise_columns(&ds, &spec(0.05, 0.05), NoiseMode::Biased, 9).unwrap();
        for j in [1, 2] {
            let mut table = [[0.0f64; 2]; 2];
            for e in &tr.examples {
                table[e.labels.contains(0) as usize][(e.concepts[j] == 1.0) as usize] += 1.0;
            }
            let n: f64 = table.iter().flatten().sum();
            let mut chi2 = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let row: f64 = table[a].iter().sum();
                    let col = table[0][b] + table[1][b];
                    let expected = row * col / n;
                    chi2 += (table[a][b] - expected).powi(2) / expected;
                }
            }
            assert!(chi2 < 6.635, "chi2 = {chi2}");
        }
    }

    #[test]
    fn rejects_invalid_spec() {
        let ds = balanced(10);
        let mut s = spec(0.3, 0.05);
        s.count = 0;
        assert!(append_noise_columns(&ds, &s, NoiseMode::Biased, 0).is_err());
        let mut s = spec(0.3, 0.05);
        s.target_class = 5;
        assert!(append_noise_columns(&ds, &s, NoiseMode::Biased, 0).is_err());
    }
}
