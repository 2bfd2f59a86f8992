use crate::THETA;

/// Anything that maps a concept vector to per-class probabilities.
///
/// The entropy network and the random forest both implement this, which is
/// the only surface explainers and metrics use.
pub trait Predictor: Sync {
    fn n_classes(&self) -> usize;

    fn n_features(&self) -> usize;

    /// Length-`n_classes` vector with entries in `[0, 1]`.
    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;

    fn predict_class(&self, x: &[f64], class: usize) -> f64 {
        self.predict_proba(x)[class]
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        (**self).predict_proba(x)
    }

    fn predict_class(&self, x: &[f64], class: usize) -> f64 {
        (**self).predict_class(x, class)
    }
}

/// Truth values of the concept predicates, as `{0, 1}`.
pub fn binarize(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > THETA { 1.0 } else { 0.0 }).collect()
}

/// Flips the binarized value of feature `j` in place.
pub fn flip(x: &mut [f64], j: usize) {
    x[j] = if x[j] > THETA { 0.0 } else { 1.0 };
}
