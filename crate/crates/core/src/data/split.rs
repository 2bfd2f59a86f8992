use rand::seq::SliceRandom;

use super::Dataset;
use crate::{rng, Error, Result};

/// Train / validation / test proportions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Fractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Fractions {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let f = Self { train, val, test };
        if [train, val, test].iter().any(|&p| !(p > 0.0)) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        if (train + val + test - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to {}, not 1", train + val + test)));
        }
        Ok(f)
    }
}

/// Seeded shuffle then cut. Validation and test sizes are `floor(n * f)`;
/// the remainder goes to train.
pub fn split(ds: &Dataset, fractions: Fractions, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let f = Fractions::new(fractions.train, fractions.val, fractions.test)?;
    let n = ds.len();
    let n_val = (n as f64 * f.val + 1e-9).floor() as usize;
    let n_test = (n as f64 * f.test + 1e-9).floor() as usize;
    let n_train = n.saturating_sub(n_val + n_test);
    if n_val == 0 || n_test == 0 || n_train == 0 {
        return Err(Error::invalid(format!(
            "split of {n} examples yields an empty part (train {n_train}, val {n_val}, test {n_test})"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, 0x5911));
    let (train, rest) = idx.split_at(n_train);
    let (val, test) = rest.split_at(n_val);
    Ok((ds.subset(train), ds.subset(val), ds.subset(test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ConceptVector, LabelSet, LabeledExample, Vocabulary};

    fn toy(n: usize) -> Dataset {
        let examples = (0..n)
            .map(|i| LabeledExample {
                concepts: ConceptVector::zeros(1),
                labels: LabelSet::default(),
                raw_text: Some(i.to_string()),
            })
            .collect();
        Dataset::new(examples, Vocabulary::new(vec!["a".into()]).unwrap(), vec!["c".into()]).unwrap()
    }

    fn ids(ds: &Dataset) -> Vec<usize> {
        ds.examples.iter().map(|e| e.raw_text.as_ref().unwrap().parse().unwrap()).collect()
    }

    #[test]
    fn sizes_floor_then_remainder_to_train() {
        let (a, b, c) = split(&toy(10), Fractions { train: 0.8, val: 0.1, test: 0.1 }, 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        let (a, b, c) = split(&toy(1000), Fractions { train: 0.6, val: 0.2, test: 0.2 }, 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (600, 200, 200));
    }

    #[test]
    fn deterministic_disjoint_exhaustive() {
        let ds = toy(97);
        let f = Fractions { train: 0.7, val: 0.15, test: 0.15 };
        let first = split(&ds, f, 3).unwrap();
        let second = split(&ds, f, 3).unwrap();
        assert_eq!(first, second);
        let mut all: Vec<usize> = [ids(&first.0), ids(&first.1), ids(&first.2)].concat();
        all.sort();
        assert_eq!(all, (0..97).collect::<Vec<_>>());
        let other = split(&ds, f, 4).unwrap();
        assert_ne!(ids(&first.0), ids(&other.0));
    }

    #[test]
    fn rejects_bad_fractions() {
        let ds = toy(10);
        assert!(split(&ds, Fractions { train: 0.5, val: 0.2, test: 0.2 }, 0).is_err());
        assert!(split(&ds, Fractions { train: 1.0, val: 0.0, test: 0.0 }, 0).is_err());
        assert!(split(&ds, Fractions { train: 0.9, val: 0.05, test: 0.05 }, 0).is_err());
    }
}
