//! Feedforward network: ReLU hidden layers and a softmax output, trained on
//! mean cross-entropy by minibatch SGD with momentum.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmax, validate_training, ClassifyError, FeatureMatrix, LabelVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig<T> {
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: T,
    pub momentum: T,
    pub seed: u64,
}

impl<T: Scalar> Default for MlpConfig<T> {
    fn default() -> Self {
        MlpConfig {
            batch_size: 32,
            epochs: 10,
            hidden_sizes: vec![128],
            learning_rate: T::of(0.01),
            momentum: T::of(0.9),
            seed: 0,
        }
    }
}

impl<T: Scalar> MlpConfig<T> {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(ClassifyError::InvalidConfig(
                "batch_size and epochs must be at least 1".into(),
            ));
        }
        // negated so NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.learning_rate > T::zero()) {
            return Err(ClassifyError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(ClassifyError::InvalidConfig(
                "hidden layers need at least one unit".into(),
            ));
        }
        Ok(())
    }
}

/// Network weights in one flat buffer. Layer `l` maps `sizes[l]` inputs to
/// `sizes[l+1]` outputs and stores its weight matrix (outputs × inputs, row
/// major) followed by its bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub(crate) class_set: Vec<u32>,
    pub(crate) sizes: Vec<usize>,
    pub(crate) params: Vec<T>,
}

/// Per-step minibatch losses recorded during training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory<T> {
    pub batch_losses: Vec<T>,
}

struct Layer {
    inputs: usize,
    outputs: usize,
    weights: usize,
    bias: usize,
}

impl<T: Scalar> Mlp<T> {
    /// Glorot-uniform weights and zero biases, drawn from `rng`.
    fn initialize(
        n_features: usize,
        class_set: Vec<u32>,
        hidden: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut sizes = vec![n_features];
        sizes.extend_from_slice(hidden);
        sizes.push(class_set.len());
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(T::of(rng.gen_range(-limit..limit)));
            }
            params.extend(std::iter::repeat_n(T::zero(), fan_out));
        }
        Mlp {
            class_set,
            sizes,
            params,
        }
    }

    /// An untrained network with the architecture `cfg` describes.
    pub fn new(n_features: usize, class_set: Vec<u32>, cfg: &MlpConfig<T>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self::initialize(n_features, class_set, &cfg.hidden_sizes, &mut rng)
    }

    fn layers(&self) -> Vec<Layer> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let l = Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: off,
                    bias: off + w[0] * w[1],
                };
                off = l.bias + w[1];
                l
            })
            .collect()
    }

    pub fn n_features(&self) -> usize {
        self.sizes[0]
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Pre-activations of every layer for one input.
    fn forward(&self, x: &[T], layers: &[Layer]) -> Vec<Vec<T>> {
        let mut zs: Vec<Vec<T>> = Vec::with_capacity(layers.len());
        for (li, l) in layers.iter().enumerate() {
            let input: Vec<T> = if li == 0 {
                x.to_vec()
            } else {
                zs[li - 1].iter().map(|&z| relu(z)).collect()
            };
            let w = &self.params[l.weights..l.bias];
            let b = &self.params[l.bias..l.bias + l.outputs];
            let z = (0..l.outputs)
                .map(|o| {
                    let row = &w[o * l.inputs..(o + 1) * l.inputs];
                    row.iter()
                        .zip(&input)
                        .fold(b[o], |acc, (&wi, &xi)| acc + wi * xi)
                })
                .collect();
            zs.push(z);
        }
        zs
    }

    /// Output logits (pre-softmax).
    pub fn logits(&self, x: &[T]) -> Vec<T> {
        self.forward(x, &self.layers()).pop().unwrap_or_default()
    }

    pub fn probabilities(&self, x: &[T]) -> Vec<T> {
        softmax(&self.logits(x))
    }

    pub(crate) fn predict_index(&self, x: &[T]) -> usize {
        argmax(&self.logits(x))
    }

    /// Mean cross-entropy over `rows` and its gradient with respect to
    /// [`Self::params`]. `classes[i]` is the class index of `x.row(rows[i])`.
    pub fn loss_and_gradient_rows(
        &self,
        x: &FeatureMatrix<T>,
        classes: &[usize],
        rows: &[usize],
    ) -> (T, Vec<T>) {
        let layers = self.layers();
        let mut grad = vec![T::zero(); self.params.len()];
        let mut loss = T::zero();
        let scale = T::one() / T::of_usize(rows.len());
        for &r in rows {
            let input = x.row(r);
            let zs = self.forward(input, &layers);
            let logits = zs.last().unwrap();
            let target = classes[r];
            loss += log_sum_exp(logits) - logits[target];

            let mut delta: Vec<T> = softmax(logits);
            delta[target] -= T::one();
            delta.iter_mut().for_each(|d| *d *= scale);

            for li in (0..layers.len()).rev() {
                let l = &layers[li];
                let activation: Vec<T> = if li == 0 {
                    input.to_vec()
                } else {
                    zs[li - 1].iter().map(|&z| relu(z)).collect()
                };
                for o in 0..l.outputs {
                    let d = delta[o];
                    if d == T::zero() {
                        continue;
                    }
                    grad[l.bias + o] += d;
                    let g = &mut grad[l.weights + o * l.inputs..l.weights + (o + 1) * l.inputs];
                    for (gi, &a) in g.iter_mut().zip(&activation) {
                        *gi += d * a;
                    }
                }
                if li == 0 {
                    break;
                }
                let w = &self.params[l.weights..l.bias];
                delta = (0..l.inputs)
                    .map(|i| {
                        if zs[li - 1][i] <= T::zero() {
                            return T::zero();
                        }
                        (0..l.outputs)
                            .fold(T::zero(), |acc, o| acc + w[o * l.inputs + i] * delta[o])
                    })
                    .collect();
            }
        }
        (loss * scale, grad)
    }

    /// Mean cross-entropy over every row of `x` and its gradient.
    pub fn loss_and_gradient(&self, x: &FeatureMatrix<T>, classes: &[usize]) -> (T, Vec<T>) {
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        self.loss_and_gradient_rows(x, classes, &rows)
    }

    pub fn loss(&self, x: &FeatureMatrix<T>, classes: &[usize]) -> T {
        let layers = self.layers();
        let total: T = (0..x.n_rows())
            .map(|r| {
                let zs = self.forward(x.row(r), &layers);
                let logits = zs.last().unwrap();
                log_sum_exp(logits) - logits[classes[r]]
            })
            .sum();
        total / T::of_usize(x.n_rows())
    }
}

fn relu<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        T::zero()
    }
}

fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    m + v.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

fn softmax<T: Scalar>(v: &[T]) -> Vec<T> {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = v.iter().map(|&x| (x - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn train_mlp<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    cfg: &MlpConfig<T>,
) -> Result<Mlp<T>, ClassifyError> {
    train_mlp_with_history(x, y, cfg).map(|(m, _)| m)
}

/// Trains and also returns every minibatch loss. Fails with
/// [`ClassifyError::Diverged`] as soon as a loss is not finite.
pub fn train_mlp_with_history<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    cfg: &MlpConfig<T>,
) -> Result<(Mlp<T>, TrainingHistory<T>), ClassifyError> {
    let classes = validate_training(x, y, true)?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::initialize(
        x.n_cols(),
        y.class_set().to_vec(),
        &cfg.hidden_sizes,
        &mut rng,
    );
    let mut velocity = vec![T::zero(); net.params.len()];
    let mut history = TrainingHistory::default();
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = net.loss_and_gradient_rows(x, &classes, batch);
            if !loss.is_finite() {
                return Err(ClassifyError::Diverged {
                    step: history.batch_losses.len(),
                });
            }
            history.batch_losses.push(loss);
            for ((p, v), &g) in net.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
        }
    }
    Ok((net, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::FeatureKind;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, seed: u64) -> (FeatureMatrix<f64>, LabelVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let (c, l) = if i % 2 == 0 { (-1.5, 10) } else { (1.5, 20) };
            rows.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            labels.push(l);
        }
        (
            FeatureMatrix::from_rows(&rows, FeatureKind::Latent).unwrap(),
            LabelVector::new(labels),
        )
    }

    #[test]
    fn default_config_matches_recorded_values() {
        let cfg = MlpConfig::<f64>::default();
        assert_eq!((cfg.batch_size, cfg.epochs), (32, 10));
        assert_eq!(cfg.hidden_sizes, vec![128]);
        assert_eq!((cfg.learning_rate, cfg.momentum), (0.01, 0.9));
    }

    #[test]
    fn separable_blobs_train_well() {
        let (x, y) = blobs(100, 7);
        let (net, history) = train_mlp_with_history(
            &x,
            &y,
            &MlpConfig {
                seed: 1,
                ..MlpConfig::default()
            },
        )
        .unwrap();
        assert_eq!(history.batch_losses.len(), 10 * 4);
        assert!(history.batch_losses.iter().all(|l| l.is_finite()));
        let hits = (0..100)
            .filter(|&i| net.class_set[net.predict_index(x.row(i))] == y.labels()[i])
            .count();
        assert!(hits >= 95, "training accuracy {hits}/100");
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = blobs(40, 3);
        let cfg = MlpConfig {
            seed: 99,
            hidden_sizes: vec![8],
            ..MlpConfig::default()
        };
        assert_eq!(
            train_mlp(&x, &y, &cfg).unwrap(),
            train_mlp(&x, &y, &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_bad_config() {
        let (x, y) = blobs(10, 1);
        let cfg = MlpConfig {
            batch_size: 0,
            ..MlpConfig::<f64>::default()
        };
        assert!(matches!(
            train_mlp(&x, &y, &cfg),
            Err(ClassifyError::InvalidConfig(_))
        ));
    }

    #[test]
    fn loss_matches_gradient_pass() {
        let (x, y) = blobs(6, 2);
        let net = Mlp::new(
            2,
            y.class_set().to_vec(),
            &MlpConfig {
                hidden_sizes: vec![4, 3],
                ..MlpConfig::default()
            },
        );
        let classes = y.class_indices();
        let (l1, _) = net.loss_and_gradient(&x, &classes);
        assert!((l1 - net.loss(&x, &classes)).abs() < 1e-12);
    }
}
