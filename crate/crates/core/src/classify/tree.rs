//! CART classification tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of
//! a feature; rows with `x[f] <= threshold` go left. The split minimizing
//! `(n_L·gini_L + n_R·gini_R) / n` wins, scanning features in index order and
//! thresholds in ascending order and keeping the first minimum. A node stays a
//! leaf when it is pure, at `max_depth`, or has no split leaving `min_leaf`
//! rows on both sides.

use super::{validate_training, ClassifyError, FeatureMatrix, LabelVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 16,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<T> {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree<T> {
    pub(crate) class_set: Vec<u32>,
    pub(crate) n_features: usize,
    /// Node 0 is the root.
    pub(crate) nodes: Vec<Node<T>>,
}

/// Midpoint of `a < b`, falling back to `a` when rounding lands on `b`.
pub(crate) fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let m = a + (b - a) / T::of(2.0);
    if m >= b || !m.is_finite() {
        a
    } else {
        m
    }
}

/// Majority class, smallest index on ties.
pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

pub fn train_decision_tree<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    cfg: &TreeConfig,
) -> Result<DecisionTree<T>, ClassifyError> {
    let idx = validate_training(x, y, false)?;
    if cfg.min_leaf == 0 {
        return Err(ClassifyError::InvalidConfig(
            "min_leaf must be at least 1".into(),
        ));
    }
    let mut builder = Builder {
        x,
        classes: &idx,
        n_classes: y.class_set().len(),
        cfg,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    builder.grow(rows, 0);
    Ok(DecisionTree {
        class_set: y.class_set().to_vec(),
        n_features: x.n_cols(),
        nodes: builder.nodes,
    })
}

struct Builder<'a, T> {
    x: &'a FeatureMatrix<T>,
    classes: &'a [usize],
    n_classes: usize,
    cfg: &'a TreeConfig,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Builder<'_, T> {
    fn histogram(&self, rows: &[usize]) -> Vec<usize> {
        let mut h = vec![0; self.n_classes];
        for &r in rows {
            h[self.classes[r]] += 1;
        }
        h
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let hist = self.histogram(&rows);
        self.nodes.push(Node::Leaf {
            class: majority(&hist),
        });

        let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows, &hist) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x.row(i)[feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, rows: &[usize], hist: &[usize]) -> Option<(usize, T)> {
        let n = rows.len();
        let min_leaf = self.cfg.min_leaf;
        let mut best: Option<(Purity, usize, T)> = None;
        let mut sorted = rows.to_vec();
        for f in 0..self.x.n_cols() {
            let value = |i: usize| self.x.row(i)[f];
            sorted.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap().then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            let mut right = hist.to_vec();
            for pos in 0..n - 1 {
                let c = self.classes[sorted[pos]];
                left[c] += 1;
                right[c] -= 1;
                let (a, b) = (value(sorted[pos]), value(sorted[pos + 1]));
                let n_left = pos + 1;
                if a == b || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let purity = Purity::of(&left, n_left, &right, n - n_left);
                if best.as_ref().is_none_or(|(p, _, _)| purity.beats(p)) {
                    best = Some((purity, f, midpoint(a, b)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// `Σ c_L²/n_L + Σ c_R²/n_R` as an exact fraction. Larger means a lower
/// weighted Gini, so comparing these never mistakes a tie for a win.
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(left: &[usize], n_left: usize, right: &[usize], n_right: usize) -> Self {
        let sq = |h: &[usize]| h.iter().map(|&c| (c as u128) * (c as u128)).sum::<u128>();
        let (nl, nr) = (n_left as u128, n_right as u128);
        Purity {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn beats(&self, other: &Purity) -> bool {
        self.num * other.den > other.num * self.den
    }
}

impl<T: Scalar> DecisionTree<T> {
    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub(crate) fn predict_index(&self, x: &[T]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::FeatureKind;

    fn fit(
        rows: &[Vec<f64>],
        labels: Vec<u32>,
    ) -> (DecisionTree<f64>, FeatureMatrix<f64>, LabelVector) {
        let x = FeatureMatrix::from_rows(rows, FeatureKind::Latent).unwrap();
        let y = LabelVector::new(labels);
        (
            train_decision_tree(&x, &y, &TreeConfig::default()).unwrap(),
            x,
            y,
        )
    }

    fn accuracy(t: &DecisionTree<f64>, x: &FeatureMatrix<f64>, y: &LabelVector) -> f64 {
        let hits = (0..x.n_rows())
            .filter(|&i| t.class_set[t.predict_index(x.row(i))] == y.labels()[i])
            .count();
        hits as f64 / x.n_rows() as f64
    }

    #[test]
    fn single_threshold_gives_depth_one() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|v| vec![v as f64, (v * 7 % 3) as f64])
            .collect();
        let labels = (0..10).map(|v| if v > 5 { 2 } else { 1 }).collect();
        let (t, x, y) = fit(&rows, labels);
        assert_eq!(t.depth(), 1);
        assert_eq!(accuracy(&t, &x, &y), 1.0);
        assert!(
            matches!(t.nodes()[0], Node::Split { feature: 0, threshold, .. } if threshold == 5.5)
        );
    }

    #[test]
    fn identical_rows_make_one_leaf() {
        let (t, _, _) = fit(
            &[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![9, 4, 9],
        );
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.class_set[t.predict_index(&[0.0, 0.0])], 9);
        let (tie, _, _) = fit(&[vec![1.0], vec![1.0]], vec![9, 4]);
        assert_eq!(tie.class_set[tie.predict_index(&[1.0])], 4);
    }

    #[test]
    fn three_classes_on_a_line() {
        let rows = [1.0, 2.0, 10.0, 11.0, 20.0, 21.0].map(|v| vec![v]).to_vec();
        let (t, x, y) = fit(&rows, vec![1, 1, 2, 2, 3, 3]);
        assert_eq!(accuracy(&t, &x, &y), 1.0);
        assert!(t.depth() <= 2);
        // both first-level splits score 1/3; the lower threshold wins
        assert!(matches!(t.nodes()[0], Node::Split { threshold, .. } if threshold == 6.0));
    }

    #[test]
    fn depth_and_leaf_limits() {
        let rows = [1.0, 2.0, 10.0, 11.0, 20.0, 21.0].map(|v| vec![v]).to_vec();
        let x = FeatureMatrix::from_rows(&rows, FeatureKind::Latent).unwrap();
        let y = LabelVector::new(vec![1, 1, 2, 2, 3, 3]);
        let stump = train_decision_tree(
            &x,
            &y,
            &TreeConfig {
                max_depth: 1,
                min_leaf: 1,
            },
        )
        .unwrap();
        assert_eq!(stump.depth(), 1);
        let wide = train_decision_tree(
            &x,
            &y,
            &TreeConfig {
                max_depth: 16,
                min_leaf: 3,
            },
        )
        .unwrap();
        assert!(matches!(wide.nodes()[0], Node::Split { threshold, .. } if threshold == 10.5));
    }

    #[test]
    fn midpoints_and_purity_ties() {
        assert_eq!(midpoint(1.0, 2.0), 1.5);
        assert_eq!(midpoint(1.0, 1.0 + f64::EPSILON), 1.0);
        // [2,0]|[0,2] is pure; [1,1]|[1,1] is not; equal fractions tie
        let pure = Purity::of(&[2, 0], 2, &[0, 2], 2);
        let mixed = Purity::of(&[1, 1], 2, &[1, 1], 2);
        assert!(pure.beats(&mixed) && !mixed.beats(&pure));
        let a = Purity::of(&[1, 0], 1, &[1, 2], 3);
        let b = Purity::of(&[1, 2], 3, &[1, 0], 1);
        assert!(!a.beats(&b) && !b.beats(&a));
    }
}
