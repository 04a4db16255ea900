use super::{argmax, validate_training, ClassifyError, FeatureKind, FeatureMatrix, LabelVector};
use crate::scalar::Scalar;

/// Multinomial naive Bayes over term counts with Laplace smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialNb<T> {
    pub(crate) class_set: Vec<u32>,
    pub(crate) log_priors: Vec<T>,
    /// C × F log term probabilities
    pub(crate) feature_log_prob: Vec<Vec<T>>,
}

pub const LAPLACE_ALPHA: f64 = 1.0;

/// Rejects anything that is not a count: a non-`Counts` feature kind, or any
/// negative or fractional value.
pub fn check_counts<T: Scalar>(x: &FeatureMatrix<T>) -> Result<(), ClassifyError> {
    if x.kind() != FeatureKind::Counts {
        return Err(ClassifyError::NegativeOrNonCountFeatures(format!(
            "{} features",
            x.kind()
        )));
    }
    for i in 0..x.n_rows() {
        if let Some((j, v)) = x
            .row(i)
            .iter()
            .enumerate()
            .find(|(_, v)| **v < T::zero() || v.fract() != T::zero())
        {
            return Err(ClassifyError::NegativeOrNonCountFeatures(format!(
                "value {v} at row {i}, column {j}"
            )));
        }
    }
    Ok(())
}

pub fn train_multinomial_nb<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
) -> Result<MultinomialNb<T>, ClassifyError> {
    let idx = validate_training(x, y, true)?;
    check_counts(x)?;
    let (n, f, c) = (x.n_rows(), x.n_cols(), y.class_set().len());
    let alpha = T::of(LAPLACE_ALPHA);

    let mut class_counts = vec![0usize; c];
    let mut term_counts = vec![vec![T::zero(); f]; c];
    for (i, &k) in idx.iter().enumerate() {
        class_counts[k] += 1;
        for (s, &v) in term_counts[k].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let feature_log_prob = term_counts
        .iter()
        .map(|row| {
            let total: T = row.iter().copied().sum::<T>() + alpha * T::of_usize(f);
            row.iter()
                .map(|&cnt| ((cnt + alpha) / total).ln())
                .collect()
        })
        .collect();
    let log_priors = class_counts
        .iter()
        .map(|&m| (T::of_usize(m) / T::of_usize(n)).ln())
        .collect();
    Ok(MultinomialNb {
        class_set: y.class_set().to_vec(),
        log_priors,
        feature_log_prob,
    })
}

impl<T: Scalar> MultinomialNb<T> {
    pub fn n_features(&self) -> usize {
        self.feature_log_prob.first().map_or(0, Vec::len)
    }

    /// Per-class `Σ x_j log θ_cj + log P(c)`; the likelihood sum is formed
    /// first so mirror-image classes score bit-identically.
    pub fn joint_log_likelihood(&self, x: &[T]) -> Vec<T> {
        self.feature_log_prob
            .iter()
            .zip(&self.log_priors)
            .map(|(theta, &prior)| {
                let ll: T = x.iter().zip(theta).map(|(&v, &t)| v * t).sum();
                ll + prior
            })
            .collect()
    }

    pub(crate) fn predict_index(&self, x: &[T]) -> usize {
        argmax(&self.joint_log_likelihood(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(rows: &[Vec<f64>]) -> FeatureMatrix<f64> {
        FeatureMatrix::from_rows(rows, FeatureKind::Counts).unwrap()
    }

    #[test]
    fn hand_posterior_example() {
        let m = train_multinomial_nb(
            &counts(&[vec![3.0, 0.0], vec![0.0, 3.0]]),
            &LabelVector::new(vec![1, 2]),
        )
        .unwrap();
        // theta_A = (4/5, 1/5), theta_B = (1/5, 4/5)
        assert!((m.feature_log_prob[0][0] - (0.8f64).ln()).abs() < 1e-12);
        assert_eq!(m.predict_index(&[2.0, 0.0]), 0);
        let jll = m.joint_log_likelihood(&[1.0, 1.0]);
        assert_eq!(jll[0], jll[1]);
        assert_eq!(m.predict_index(&[1.0, 1.0]), 0);
    }

    #[test]
    fn latent_features_are_rejected() {
        let latent =
            FeatureMatrix::from_rows(&[vec![-0.3, 0.5], vec![0.2, -0.1]], FeatureKind::Latent)
                .unwrap();
        let err = train_multinomial_nb(&latent, &LabelVector::new(vec![1, 2])).unwrap_err();
        assert_eq!(err.kind_name(), "NegativeOrNonCountFeatures");

        let negative = counts(&[vec![-1.0, 2.0], vec![1.0, 0.0]]);
        assert!(matches!(
            train_multinomial_nb(&negative, &LabelVector::new(vec![1, 2])),
            Err(ClassifyError::NegativeOrNonCountFeatures(_))
        ));
        let fractional = counts(&[vec![0.5, 2.0], vec![1.0, 0.0]]);
        assert!(train_multinomial_nb(&fractional, &LabelVector::new(vec![1, 2])).is_err());
    }
}
