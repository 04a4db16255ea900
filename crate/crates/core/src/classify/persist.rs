//! Binary model files.

use std::path::Path;

use super::{
    ClassifyError, DecisionTree, GaussianNb, LinearSvm, Mlp, ModelKind, MultinomialNb, Node,
    TrainedModel,
};
use crate::codec::{CodecError, Decoder, Encoder};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"WMAPCLF\0";
const VERSION: u8 = 1;

/// Conventional file name: `<kind>-<seed>.model`.
pub fn model_file_name(kind: ModelKind, seed: u64) -> String {
    format!("{}-{seed}.model", kind.name())
}

fn flat<T: Scalar>(rows: &[Vec<T>]) -> Vec<T> {
    rows.iter().flatten().copied().collect()
}

fn unflat<T: Scalar>(data: Vec<T>, rows: usize, cols: usize) -> Result<Vec<Vec<T>>, CodecError> {
    if data.len() != rows * cols {
        return Err(CodecError::Corrupt(format!(
            "expected {rows}x{cols} values, found {}",
            data.len()
        )));
    }
    Ok(data
        .chunks(cols.max(1))
        .map(<[T]>::to_vec)
        .take(rows)
        .collect())
}

impl<T: Scalar> TrainedModel<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new::<T>(MAGIC, VERSION);
        e.u8(self.kind().tag());
        let classes = self.class_set();
        e.len(classes.len());
        for &c in classes {
            e.u32(c);
        }
        e.len(self.n_features());
        match self {
            TrainedModel::GaussianNb(m) => {
                e.scalars(&m.log_priors);
                e.scalars(&flat(&m.means));
                e.scalars(&flat(&m.variances));
            }
            TrainedModel::MultinomialNb(m) => {
                e.scalars(&m.log_priors);
                e.scalars(&flat(&m.feature_log_prob));
            }
            TrainedModel::LinearSvm(m) => e.scalars(&flat(&m.weights)),
            TrainedModel::DecisionTree(m) => {
                e.len(m.nodes.len());
                for node in &m.nodes {
                    match *node {
                        Node::Leaf { class } => {
                            e.u8(0);
                            e.u32(class as u32);
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            e.u8(1);
                            e.u32(feature as u32);
                            e.scalar(threshold);
                            e.u32(left as u32);
                            e.u32(right as u32);
                        }
                    }
                }
            }
            TrainedModel::Mlp(m) => {
                e.len(m.sizes.len());
                for &s in &m.sizes {
                    e.u32(s as u32);
                }
                e.scalars(&m.params);
            }
        }
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifyError> {
        let mut d = Decoder::new::<T>(bytes, MAGIC, "classifier model", VERSION)?;
        let tag = d.u8()?;
        let kind = ModelKind::from_tag(tag)
            .ok_or_else(|| CodecError::Corrupt(format!("unknown model kind {tag}")))?;
        let n_classes = d.len()?;
        let class_set = (0..n_classes)
            .map(|_| d.u32())
            .collect::<Result<Vec<_>, _>>()?;
        if class_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CodecError::Corrupt("class set not strictly ascending".into()).into());
        }
        let f = d.len()?;
        let c = n_classes;
        let model = match kind {
            ModelKind::GaussianNb => {
                let log_priors = d.scalars()?;
                let means = unflat(d.scalars()?, c, f)?;
                let variances = unflat(d.scalars()?, c, f)?;
                check_len(log_priors.len(), c)?;
                TrainedModel::GaussianNb(GaussianNb {
                    class_set,
                    log_priors,
                    means,
                    variances,
                })
            }
            ModelKind::MultinomialNb => {
                let log_priors = d.scalars()?;
                let feature_log_prob = unflat(d.scalars()?, c, f)?;
                check_len(log_priors.len(), c)?;
                TrainedModel::MultinomialNb(MultinomialNb {
                    class_set,
                    log_priors,
                    feature_log_prob,
                })
            }
            ModelKind::LinearSvm => {
                let weights = unflat(d.scalars()?, c, f + 1)?;
                TrainedModel::LinearSvm(LinearSvm { class_set, weights })
            }
            ModelKind::DecisionTree => {
                let n = d.len()?;
                let mut nodes = Vec::with_capacity(n);
                for _ in 0..n {
                    let node = match d.u8()? {
                        0 => Node::Leaf {
                            class: d.u32()? as usize,
                        },
                        1 => Node::Split {
                            feature: d.u32()? as usize,
                            threshold: d.scalar()?,
                            left: d.u32()? as usize,
                            right: d.u32()? as usize,
                        },
                        other => {
                            return Err(
                                CodecError::Corrupt(format!("unknown node tag {other}")).into()
                            )
                        }
                    };
                    nodes.push(node);
                }
                for (i, node) in nodes.iter().enumerate() {
                    let ok = match *node {
                        Node::Leaf { class } => class < c,
                        // children are always created after their parent
                        Node::Split {
                            feature,
                            left,
                            right,
                            ..
                        } => feature < f && left > i && right > i && left < n && right < n,
                    };
                    if !ok {
                        return Err(CodecError::Corrupt(format!("invalid tree node {i}")).into());
                    }
                }
                if nodes.is_empty() {
                    return Err(CodecError::Corrupt("empty tree".into()).into());
                }
                TrainedModel::DecisionTree(DecisionTree {
                    class_set,
                    n_features: f,
                    nodes,
                })
            }
            ModelKind::Mlp => {
                let n = d.len()?;
                let sizes = (0..n)
                    .map(|_| d.u32().map(|s| s as usize))
                    .collect::<Result<Vec<_>, _>>()?;
                let params = d.scalars()?;
                let expected: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
                if sizes.len() < 2 || sizes[0] != f || sizes[n - 1] != c || params.len() != expected
                {
                    return Err(CodecError::Corrupt(
                        "network shape does not match parameters".into(),
                    )
                    .into());
                }
                TrainedModel::Mlp(Mlp {
                    class_set,
                    sizes,
                    params,
                })
            }
        };
        d.finish()?;
        Ok(model)
    }
}

fn check_len(found: usize, expected: usize) -> Result<(), CodecError> {
    if found != expected {
        return Err(CodecError::Corrupt(format!(
            "expected {expected} priors, found {found}"
        )));
    }
    Ok(())
}

pub fn save_model<T: Scalar>(model: &TrainedModel<T>, path: &Path) -> Result<(), ClassifyError> {
    std::fs::write(path, model.to_bytes()).map_err(|e| ClassifyError::Codec(e.into()))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<TrainedModel<T>, ClassifyError> {
    let bytes = std::fs::read(path).map_err(|e| ClassifyError::Codec(e.into()))?;
    TrainedModel::from_bytes(&bytes)
}
