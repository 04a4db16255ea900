use super::{argmax, validate_training, ClassifyError, FeatureMatrix, LabelVector};
use crate::scalar::Scalar;

/// Gaussian naive Bayes: one normal per (class, feature).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb<T> {
    pub(crate) class_set: Vec<u32>,
    pub(crate) log_priors: Vec<T>,
    /// C × F
    pub(crate) means: Vec<Vec<T>>,
    /// C × F, smoothed
    pub(crate) variances: Vec<Vec<T>>,
}

/// Variance smoothing relative to the largest per-feature variance.
pub const VAR_SMOOTHING: f64 = 1e-9;

pub fn train_gaussian_nb<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
) -> Result<GaussianNb<T>, ClassifyError> {
    let idx = validate_training(x, y, true)?;
    let (n, f, c) = (x.n_rows(), x.n_cols(), y.class_set().len());

    let mut counts = vec![0usize; c];
    let mut sums = vec![vec![T::zero(); f]; c];
    for (i, &k) in idx.iter().enumerate() {
        counts[k] += 1;
        for (s, &v) in sums[k].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let means: Vec<Vec<T>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &m)| s.iter().map(|&v| v / T::of_usize(m)).collect())
        .collect();
    let mut variances = vec![vec![T::zero(); f]; c];
    for (i, &k) in idx.iter().enumerate() {
        for ((acc, &v), &mu) in variances[k].iter_mut().zip(x.row(i)).zip(&means[k]) {
            *acc += (v - mu) * (v - mu);
        }
    }

    let epsilon = {
        let mut worst = T::zero();
        for j in 0..f {
            let mean = (0..n).map(|i| x.row(i)[j]).sum::<T>() / T::of_usize(n);
            let var = (0..n).map(|i| (x.row(i)[j] - mean).powi(2)).sum::<T>() / T::of_usize(n);
            worst = worst.max(var);
        }
        let eps = T::of(VAR_SMOOTHING) * worst;
        // All-constant features: fall back to an absolute floor.
        if eps > T::zero() {
            eps
        } else {
            T::of(VAR_SMOOTHING)
        }
    };
    for (row, &m) in variances.iter_mut().zip(&counts) {
        for v in row.iter_mut() {
            *v = *v / T::of_usize(m) + epsilon;
        }
    }
    let log_priors = counts
        .iter()
        .map(|&m| (T::of_usize(m) / T::of_usize(n)).ln())
        .collect();
    Ok(GaussianNb {
        class_set: y.class_set().to_vec(),
        log_priors,
        means,
        variances,
    })
}

impl<T: Scalar> GaussianNb<T> {
    pub fn n_features(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn class_set(&self) -> &[u32] {
        &self.class_set
    }

    /// Per-class `log P(c) + Σ log N(x_j; μ_cj, σ²_cj)`.
    pub fn joint_log_likelihood(&self, x: &[T]) -> Vec<T> {
        let two_pi = T::of(2.0 * std::f64::consts::PI);
        let half = T::of(0.5);
        (0..self.class_set.len())
            .map(|c| {
                let ll: T = x
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.variances[c])
                    .map(|((&v, &mu), &var)| {
                        -half * (two_pi * var).ln() - (v - mu) * (v - mu) / (T::of(2.0) * var)
                    })
                    .sum();
                ll + self.log_priors[c]
            })
            .collect()
    }

    pub(crate) fn predict_index(&self, x: &[T]) -> usize {
        argmax(&self.joint_log_likelihood(x))
    }
}
