//! Independent oracles shared by the test targets. Nothing here calls into
//! the library except the thin `library_*` and `check_*` adapters.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use weakmap::classify::{
    train, FeatureKind, FeatureMatrix, LabelVector, Mlp, MlpConfig, ModelKind, TrainConfig,
};
use weakmap::lsa::{fit_lsa_with, LsaParams, SvdMethod};
use weakmap::text::TermDocMatrix;

// Dense singular values: cyclic two-sided Jacobi on the smaller Gram matrix.

pub fn oracle_singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let (m, n) = (a.len(), a[0].len());
    let dim = m.min(n);
    let mut g = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            g[i][j] = if n <= m {
                (0..m).map(|r| a[r][i] * a[r][j]).sum()
            } else {
                (0..n).map(|c| a[i][c] * a[j][c]).sum()
            };
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| g[i][j] * g[i][j])
            .sum();
        if off.sqrt()
            < 1e-15
                * g.iter()
                    .enumerate()
                    .map(|(i, r)| r[i].abs())
                    .fold(0.0, f64::max)
        {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                if g[p][q] == 0.0 {
                    continue;
                }
                let theta = (g[q][q] - g[p][p]) / (2.0 * g[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let (gkp, gkq) = (g[k][p], g[k][q]);
                    g[k][p] = c * gkp - s * gkq;
                    g[k][q] = s * gkp + c * gkq;
                }
                for k in 0..dim {
                    let (gpk, gqk) = (g[p][k], g[q][k]);
                    g[p][k] = c * gpk - s * gqk;
                    g[q][k] = s * gpk + c * gqk;
                }
            }
        }
    }
    let mut sv: Vec<f64> = (0..dim).map(|i| g[i][i].max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

pub fn random_case(seed: u64) -> (Vec<Vec<f64>>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.gen_range(4..=60);
    let cols = rng.gen_range(3..=40);
    let a: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let k = rng.gen_range(1..rows.min(cols));
    (a, k)
}

/// Worst relative singular-value error and absolute truncation-error gap
/// of a fitted model against the oracle.
pub struct SvdDeviation {
    pub sigma_rel: f64,
    pub truncation_abs: f64,
}

pub fn svd_deviation(
    a: &[Vec<f64>],
    k: usize,
    method: SvdMethod,
    oversampling: usize,
    seed: u64,
) -> SvdDeviation {
    let oracle = oracle_singular_values(a);
    let matrix = TermDocMatrix::from_dense(a).unwrap();
    let params = LsaParams {
        method,
        oversampling,
        ..LsaParams::new(k, seed)
    };
    let model = fit_lsa_with(&matrix, &params).unwrap();
    let sigma_rel = model
        .singular_values()
        .iter()
        .zip(&oracle)
        .map(|(&got, &want)| (got - want).abs() / want)
        .fold(0.0, f64::max);
    let approx = model.reconstruct();
    let err: f64 = a
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v)))
        .map(|(i, j, v)| (v - approx[(i, j)]).powi(2))
        .sum::<f64>()
        .sqrt();
    let tail = oracle[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
    SvdDeviation {
        sigma_rel,
        truncation_abs: (err - tail).abs(),
    }
}

pub fn check(a: &[Vec<f64>], k: usize, method: SvdMethod, oversampling: usize, seed: u64) {
    let d = svd_deviation(a, k, method, oversampling, seed);
    assert!(
        d.sigma_rel <= 1e-6,
        "seed {seed} {method:?}: singular values off by {} relative",
        d.sigma_rel
    );
    assert!(
        d.truncation_abs <= 1e-5,
        "seed {seed} {method:?}: truncation error off by {}",
        d.truncation_abs
    );
}

// Naive Bayes and CART: direct formulas and exhaustive split search, with
// split quality compared as exact fractions.

pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub probes: Vec<Vec<f64>>,
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    let n_classes = rng.gen_range(2..=4);
    loop {
        let labels: Vec<u32> = (0..n).map(|_| 10 * rng.gen_range(1..=n_classes)).collect();
        if labels.iter().any(|&l| l != labels[0]) {
            return labels;
        }
    }
}

pub fn dataset(seed: u64, value: impl Fn(&mut ChaCha8Rng) -> f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=20);
    let f = rng.gen_range(1..=4);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..f).map(|_| value(&mut rng)).collect())
        .collect();
    let labels = random_labels(&mut rng, n);
    let mut probes: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..f).map(|_| value(&mut rng)).collect())
        .collect();
    probes.extend(rows.iter().cloned());
    Dataset {
        rows,
        labels,
        probes,
    }
}

pub fn classes(labels: &[u32]) -> Vec<u32> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Index of the first maximum.
pub fn first_max(scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    best
}

pub fn library_predictions(kind: ModelKind, d: &Dataset, feature_kind: FeatureKind) -> Vec<u32> {
    let x = FeatureMatrix::from_rows(&d.rows, feature_kind).unwrap();
    let y = LabelVector::new(d.labels.clone());
    let model = train(kind, &x, &y, &TrainConfig::with_seed(0)).unwrap();
    d.probes.iter().map(|p| model.predict(p).unwrap()).collect()
}

pub fn gnb_oracle(d: &Dataset) -> Vec<u32> {
    let cs = classes(&d.labels);
    let n = d.rows.len() as f64;
    let f = d.rows[0].len();
    let mut max_var: f64 = 0.0;
    for j in 0..f {
        let mean = d.rows.iter().map(|r| r[j]).sum::<f64>() / n;
        max_var = max_var.max(d.rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n);
    }
    let eps = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };
    let stats: Vec<(f64, Vec<f64>, Vec<f64>)> = cs
        .iter()
        .map(|&c| {
            let members: Vec<&Vec<f64>> = d
                .rows
                .iter()
                .zip(&d.labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            let m = members.len() as f64;
            let mu: Vec<f64> = (0..f)
                .map(|j| members.iter().map(|r| r[j]).sum::<f64>() / m)
                .collect();
            let var: Vec<f64> = (0..f)
                .map(|j| members.iter().map(|r| (r[j] - mu[j]).powi(2)).sum::<f64>() / m + eps)
                .collect();
            ((m / n).ln(), mu, var)
        })
        .collect();
    d.probes
        .iter()
        .map(|p| {
            let scores: Vec<f64> = stats
                .iter()
                .map(|(prior, mu, var)| {
                    let ll: f64 = (0..f)
                        .map(|j| {
                            -0.5 * (2.0 * std::f64::consts::PI * var[j]).ln()
                                - (p[j] - mu[j]).powi(2) / (2.0 * var[j])
                        })
                        .sum();
                    ll + prior
                })
                .collect();
            cs[first_max(&scores)]
        })
        .collect()
}

pub fn mnb_oracle(d: &Dataset) -> Vec<u32> {
    let cs = classes(&d.labels);
    let n = d.rows.len() as f64;
    let f = d.rows[0].len();
    let params: Vec<(f64, Vec<f64>)> = cs
        .iter()
        .map(|&c| {
            let members: Vec<&Vec<f64>> = d
                .rows
                .iter()
                .zip(&d.labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            let totals: Vec<f64> = (0..f).map(|j| members.iter().map(|r| r[j]).sum()).collect();
            let denom = totals.iter().sum::<f64>() + f as f64;
            let log_theta = totals.iter().map(|t| ((t + 1.0) / denom).ln()).collect();
            ((members.len() as f64 / n).ln(), log_theta)
        })
        .collect();
    d.probes
        .iter()
        .map(|p| {
            let scores: Vec<f64> = params
                .iter()
                .map(|(prior, lt)| p.iter().zip(lt).map(|(x, t)| x * t).sum::<f64>() + prior)
                .collect();
            cs[first_max(&scores)]
        })
        .collect()
}

pub enum Tree {
    Leaf(u32),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Tree>,
        right: Box<Tree>,
    },
}

pub fn majority(labels: &[u32]) -> u32 {
    let cs = classes(labels);
    let counts: Vec<usize> = cs
        .iter()
        .map(|c| labels.iter().filter(|l| *l == c).count())
        .collect();
    let best = counts
        .iter()
        .enumerate()
        .fold(0, |b, (i, &c)| if c > counts[b] { i } else { b });
    cs[best]
}

/// Σ_c count_c² as used in `Σ n_c²/n` purity; exact integers.
pub fn sq_counts(labels: &[u32]) -> u128 {
    classes(labels)
        .iter()
        .map(|c| labels.iter().filter(|l| *l == c).count() as u128)
        .map(|k| k * k)
        .sum()
}

pub fn grow(rows: &[Vec<f64>], labels: &[u32], depth: usize) -> Tree {
    if classes(labels).len() == 1 || depth >= 16 {
        return Tree::Leaf(majority(labels));
    }
    // best: (numerator, denominator, feature, threshold)
    let mut best: Option<(u128, u128, usize, f64)> = None;
    for f in 0..rows[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let t = if t >= w[1] { w[0] } else { t };
            let left: Vec<u32> = rows
                .iter()
                .zip(labels)
                .filter(|(r, _)| r[f] <= t)
                .map(|(_, &l)| l)
                .collect();
            let right: Vec<u32> = rows
                .iter()
                .zip(labels)
                .filter(|(r, _)| r[f] > t)
                .map(|(_, &l)| l)
                .collect();
            let (nl, nr) = (left.len() as u128, right.len() as u128);
            let (num, den) = (sq_counts(&left) * nr + sq_counts(&right) * nl, nl * nr);
            if best.is_none_or(|(bn, bd, _, _)| num * bd > bn * den) {
                best = Some((num, den, f, t));
            }
        }
    }
    let Some((_, _, feature, threshold)) = best else {
        return Tree::Leaf(majority(labels));
    };
    let (mut lr, mut ll, mut rr, mut rl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (r, &l) in rows.iter().zip(labels) {
        if r[feature] <= threshold {
            lr.push(r.clone());
            ll.push(l);
        } else {
            rr.push(r.clone());
            rl.push(l);
        }
    }
    Tree::Split {
        feature,
        threshold,
        left: Box::new(grow(&lr, &ll, depth + 1)),
        right: Box::new(grow(&rr, &rl, depth + 1)),
    }
}

pub fn tree_predict(t: &Tree, x: &[f64]) -> u32 {
    match t {
        Tree::Leaf(c) => *c,
        Tree::Split {
            feature,
            threshold,
            left,
            right,
        } => tree_predict(
            if x[*feature] <= *threshold {
                left
            } else {
                right
            },
            x,
        ),
    }
}

pub fn tree_oracle(d: &Dataset) -> Vec<u32> {
    let t = grow(&d.rows, &d.labels, 0);
    d.probes.iter().map(|p| tree_predict(&t, p)).collect()
}

// MLP

/// Mean cross-entropy from the documented flat layout: per layer, an
/// outputs × inputs row-major weight block followed by the bias vector.
pub fn reference_loss(
    sizes: &[usize],
    params: &[f64],
    rows: &[Vec<f64>],
    targets: &[usize],
) -> f64 {
    let mut total = 0.0;
    for (x, &t) in rows.iter().zip(targets) {
        let mut a = x.clone();
        let mut offset = 0;
        for l in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let w = &params[offset..offset + n_in * n_out];
            let b = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + (0..n_in).map(|i| w[o * n_in + i] * a[i]).sum::<f64>())
                .collect();
            a = if l + 2 < sizes.len() {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z
            };
        }
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - a[t];
    }
    total / rows.len() as f64
}

pub struct GradientCheck {
    /// |library loss − reference loss|
    pub loss_gap: f64,
    pub n_params: usize,
    /// (parameter, analytic, numeric) outside 1e-4 relative
    pub mismatches: Vec<(usize, f64, f64)>,
}

/// Central differences (h = 1e-5) of the reference loss against the
/// library's backpropagated gradient on 6 samples, 4 features, 3 classes.
pub fn gradient_check(hidden: &[usize]) -> GradientCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let targets = vec![0, 1, 2, 0, 1, 2];
    let x = FeatureMatrix::from_rows(&rows, FeatureKind::Latent).unwrap();
    let cfg = MlpConfig {
        hidden_sizes: hidden.to_vec(),
        seed: 9,
        ..MlpConfig::default()
    };
    let mut net = Mlp::new(4, vec![1, 2, 3], &cfg);
    let (loss, grad) = net.loss_and_gradient(&x, &targets);
    let sizes = net.layer_sizes().to_vec();
    let loss_gap = (loss - reference_loss(&sizes, net.params(), &rows, &targets)).abs();
    let h = 1e-5;
    let mut mismatches = Vec::new();
    for p in 0..grad.len() {
        let orig = net.params()[p];
        net.params_mut()[p] = orig + h;
        let up = reference_loss(&sizes, net.params(), &rows, &targets);
        net.params_mut()[p] = orig - h;
        let down = reference_loss(&sizes, net.params(), &rows, &targets);
        net.params_mut()[p] = orig;
        let numeric = (up - down) / (2.0 * h);
        let diff = (grad[p] - numeric).abs();
        if diff > 1e-4 * grad[p].abs().max(numeric.abs()) && diff >= 1e-10 {
            mismatches.push((p, grad[p], numeric));
        }
    }
    GradientCheck {
        loss_gap,
        n_params: grad.len(),
        mismatches,
    }
}
