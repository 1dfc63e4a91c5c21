//! Convex losses with exact gradients: binary and multiclass (softmax)
//! logistic regression, projection onto the feasible L2 ball, and
//! evaluation metrics.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{LabeledPoint, NodeDataset};
use crate::scalar::{axpy, dot, norm, norm_sq, Scalar};

/// Default radius of the feasible parameter ball.
pub const DEFAULT_FEASIBLE_RADIUS: f64 = 100.0;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("label {label} outside 0..{num_classes}")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    BinaryLogistic,
    MulticlassLogistic,
}

/// Loss family plus problem sizes. Multiclass parameters are a flattened
/// K x d matrix, row-major class-by-feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossModel {
    pub kind: LossKind,
    pub feature_dim: usize,
    pub num_classes: usize,
}

impl LossModel {
    pub fn new(kind: LossKind, feature_dim: usize, num_classes: usize) -> Result<Self, ModelError> {
        if feature_dim == 0 {
            return Err(ModelError::InvalidParameter("feature_dim must be >= 1".into()));
        }
        match kind {
            LossKind::BinaryLogistic => {
                if num_classes != 2 {
                    return Err(ModelError::InvalidParameter(format!(
                        "binary logistic needs 2 classes, got {num_classes}"
                    )));
                }
            }
            LossKind::MulticlassLogistic => {
                if num_classes < 2 {
                    return Err(ModelError::InvalidParameter(format!(
                        "multiclass logistic needs >= 2 classes, got {num_classes}"
                    )));
                }
            }
        }
        Ok(LossModel {
            kind,
            feature_dim,
            num_classes,
        })
    }

    /// Length of the flat parameter vector.
    pub fn param_len(&self) -> usize {
        match self.kind {
            LossKind::BinaryLogistic => self.feature_dim,
            LossKind::MulticlassLogistic => self.num_classes * self.feature_dim,
        }
    }

    fn check_dims<S: Scalar>(&self, w: &ParamVector<S>, pt: &LabeledPoint<S>) -> Result<(), ModelError> {
        if w.values.len() != self.param_len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.param_len(),
                actual: w.values.len(),
            });
        }
        if pt.features.len() != self.feature_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.feature_dim,
                actual: pt.features.len(),
            });
        }
        if pt.label >= self.num_classes {
            return Err(ModelError::LabelOutOfRange {
                label: pt.label,
                num_classes: self.num_classes,
            });
        }
        Ok(())
    }
}

/// Flat parameter vector constrained to the ball of radius `feasible_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<S> {
    pub values: Vec<S>,
    pub feasible_radius: S,
}

impl<S: Scalar> ParamVector<S> {
    pub fn zeros(len: usize, feasible_radius: S) -> Self {
        ParamVector {
            values: vec![S::zero(); len],
            feasible_radius,
        }
    }

    /// Uniform draw from the feasible ball: standard-normal direction scaled
    /// by radius * U^(1/len).
    pub fn sample_uniform_ball<R: Rng>(len: usize, feasible_radius: S, rng: &mut R) -> Self {
        let mut values: Vec<S> = (0..len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                S::from_f64_c(z)
            })
            .collect();
        let n = norm(&values);
        if n > S::zero() {
            let u: f64 = rng.random::<f64>();
            let radius = feasible_radius * S::from_f64_c(u.powf(1.0 / len as f64));
            let scale = radius / n;
            values.iter_mut().for_each(|v| *v *= scale);
        }
        ParamVector {
            values,
            feasible_radius,
        }
    }

    pub fn norm(&self) -> S {
        norm(&self.values)
    }
}

/// Numerically stable log(1 + exp(z)).
fn log1p_exp<S: Scalar>(z: S) -> S {
    if z > S::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// Class scores Wx for the multiclass model.
fn class_scores<S: Scalar>(m: &LossModel, w: &[S], x: &[S]) -> Vec<S> {
    (0..m.num_classes)
        .map(|c| dot(&w[c * m.feature_dim..(c + 1) * m.feature_dim], x))
        .collect()
}

/// In-place softmax with max subtraction.
fn softmax<S: Scalar>(scores: &mut [S]) {
    let max = scores.iter().cloned().fold(S::neg_infinity(), S::max);
    let mut sum = S::zero();
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Binary labels are stored as {1, 0}; the loss sees {+1, -1}.
fn signed_label<S: Scalar>(label: usize) -> S {
    if label == 1 {
        S::one()
    } else {
        -S::one()
    }
}

/// Per-point loss value.
pub fn point_loss<S: Scalar>(
    m: &LossModel,
    w: &ParamVector<S>,
    pt: &LabeledPoint<S>,
) -> Result<S, ModelError> {
    m.check_dims(w, pt)?;
    match m.kind {
        LossKind::BinaryLogistic => {
            let margin = signed_label::<S>(pt.label) * dot(&w.values, &pt.features);
            Ok(log1p_exp(-margin))
        }
        LossKind::MulticlassLogistic => {
            let scores = class_scores(m, &w.values, &pt.features);
            let max = scores.iter().cloned().fold(S::neg_infinity(), S::max);
            let log_sum: S = scores.iter().map(|&s| (s - max).exp()).sum::<S>().ln() + max;
            Ok(log_sum - scores[pt.label])
        }
    }
}

/// Exact gradient of the per-point loss.
pub fn point_grad<S: Scalar>(
    m: &LossModel,
    w: &ParamVector<S>,
    pt: &LabeledPoint<S>,
) -> Result<Vec<S>, ModelError> {
    m.check_dims(w, pt)?;
    match m.kind {
        LossKind::BinaryLogistic => {
            let y = signed_label::<S>(pt.label);
            let margin = y * dot(&w.values, &pt.features);
            let coeff = -y * sigmoid(-margin);
            Ok(pt.features.iter().map(|&x| coeff * x).collect())
        }
        LossKind::MulticlassLogistic => {
            let mut probs = class_scores(m, &w.values, &pt.features);
            softmax(&mut probs);
            let mut grad = vec![S::zero(); m.param_len()];
            for (c, &p) in probs.iter().enumerate() {
                let coeff = if c == pt.label { p - S::one() } else { p };
                axpy(
                    coeff,
                    &pt.features,
                    &mut grad[c * m.feature_dim..(c + 1) * m.feature_dim],
                );
            }
            Ok(grad)
        }
    }
}

/// Mean of [`point_grad`] over the node's points: the exact local gradient.
pub fn node_grad<S: Scalar>(
    m: &LossModel,
    w: &ParamVector<S>,
    ds: &NodeDataset<S>,
) -> Result<Vec<S>, ModelError> {
    if ds.points.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut acc = vec![S::zero(); m.param_len()];
    for pt in &ds.points {
        let g = point_grad(m, w, pt)?;
        axpy(S::one(), &g, &mut acc);
    }
    let inv = S::one() / S::from_f64_c(ds.points.len() as f64);
    acc.iter_mut().for_each(|v| *v *= inv);
    Ok(acc)
}

/// Euclidean projection onto the feasible ball: identity inside, radial
/// rescale outside.
pub fn project<S: Scalar>(w: &ParamVector<S>) -> ParamVector<S> {
    let n = w.norm();
    if n <= w.feasible_radius {
        return w.clone();
    }
    let scale = w.feasible_radius / n;
    ParamVector {
        values: w.values.iter().map(|&v| v * scale).collect(),
        feasible_radius: w.feasible_radius,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<S> {
    pub loss: S,
    pub accuracy: S,
}

/// Predicted label: argmax class score, or the sign rule for binary with
/// sign(0) counted as +1 (label 1).
pub fn predict<S: Scalar>(m: &LossModel, w: &ParamVector<S>, pt: &LabeledPoint<S>) -> usize {
    match m.kind {
        LossKind::BinaryLogistic => {
            if dot(&w.values, &pt.features) >= S::zero() {
                1
            } else {
                0
            }
        }
        LossKind::MulticlassLogistic => {
            let scores = class_scores(m, &w.values, &pt.features);
            let mut best = 0;
            for (c, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = c;
                }
            }
            best
        }
    }
}

/// Mean loss and accuracy over a point list.
pub fn evaluate<S: Scalar>(
    m: &LossModel,
    w: &ParamVector<S>,
    test: &[LabeledPoint<S>],
) -> Result<Evaluation<S>, ModelError> {
    if test.is_empty() {
        return Err(ModelError::EmptyTestSet);
    }
    let mut loss = S::zero();
    let mut correct = 0usize;
    for pt in test {
        loss += point_loss(m, w, pt)?;
        if predict(m, w, pt) == pt.label {
            correct += 1;
        }
    }
    let count = S::from_f64_c(test.len() as f64);
    Ok(Evaluation {
        loss: loss / count,
        accuracy: S::from_f64_c(correct as f64) / count,
    })
}

/// Smoothness constant of the local loss: (1/(4n)) sum ||x||^2 for binary
/// logistic, (1/(2n)) sum ||x||^2 for softmax.
pub fn lipschitz_constant<S: Scalar>(m: &LossModel, ds: &NodeDataset<S>) -> Result<S, ModelError> {
    if ds.points.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let sum_sq: S = ds.points.iter().map(|pt| norm_sq(&pt.features)).sum();
    let n = S::from_f64_c(ds.points.len() as f64);
    let factor = match m.kind {
        LossKind::BinaryLogistic => S::from_f64_c(0.25),
        LossKind::MulticlassLogistic => S::from_f64_c(0.5),
    };
    Ok(factor * sum_sq / n)
}
