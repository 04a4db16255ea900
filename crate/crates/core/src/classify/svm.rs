//! One-vs-rest linear SVM trained with Pegasos.
//!
//! Each binary problem minimizes `λ/2 ‖w‖² + mean hinge(y · w·x̃)` where
//! `x̃ = [x, 1]`, so the bias is carried as a regularized weight. Updates use
//! the step `1 / (λ t)` followed by projection onto the ball of radius
//! `1/√λ`. All binary problems see the same seeded per-epoch sample order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmax, validate_training, ClassifyError, FeatureMatrix, LabelVector};
use crate::linalg::dot;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig<T> {
    pub epochs: usize,
    pub lambda: T,
    pub seed: u64,
}

impl<T: Scalar> Default for SvmConfig<T> {
    fn default() -> Self {
        SvmConfig {
            epochs: 50,
            lambda: T::of(1e-4),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm<T> {
    pub(crate) class_set: Vec<u32>,
    /// One row per class: F weights followed by the bias.
    pub(crate) weights: Vec<Vec<T>>,
}

pub fn train_linear_svm<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    cfg: &SvmConfig<T>,
) -> Result<LinearSvm<T>, ClassifyError> {
    let idx = validate_training(x, y, true)?;
    // negated so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if cfg.epochs == 0 || !(cfg.lambda > T::zero()) {
        return Err(ClassifyError::InvalidConfig(
            "svm needs epochs >= 1 and lambda > 0".into(),
        ));
    }
    let (n, f) = (x.n_rows(), x.n_cols());
    let augmented: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut r = x.row(i).to_vec();
            r.push(T::one());
            r
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let orders: Vec<Vec<usize>> = (0..cfg.epochs)
        .map(|_| {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();

    let lambda = cfg.lambda;
    let radius = T::one() / lambda.sqrt();
    let weights = (0..y.class_set().len())
        .map(|class| {
            let mut w = vec![T::zero(); f + 1];
            let mut t = 0usize;
            for order in &orders {
                for &i in order {
                    t += 1;
                    let eta = T::one() / (lambda * T::of_usize(t));
                    let target = if idx[i] == class { T::one() } else { -T::one() };
                    let margin = target * dot(&w, &augmented[i]);
                    let shrink = T::one() - eta * lambda;
                    w.iter_mut().for_each(|v| *v *= shrink);
                    if margin < T::one() {
                        for (v, &xi) in w.iter_mut().zip(&augmented[i]) {
                            *v += eta * target * xi;
                        }
                    }
                    let norm = dot(&w, &w).sqrt();
                    if norm > radius {
                        let s = radius / norm;
                        w.iter_mut().for_each(|v| *v *= s);
                    }
                }
            }
            w
        })
        .collect();
    Ok(LinearSvm {
        class_set: y.class_set().to_vec(),
        weights,
    })
}

impl<T: Scalar> LinearSvm<T> {
    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len() - 1)
    }

    pub fn decision_values(&self, x: &[T]) -> Vec<T> {
        self.weights
            .iter()
            .map(|w| {
                let (coef, bias) = w.split_at(w.len() - 1);
                dot(coef, x) + bias[0]
            })
            .collect()
    }

    pub(crate) fn predict_index(&self, x: &[T]) -> usize {
        argmax(&self.decision_values(x))
    }
}
