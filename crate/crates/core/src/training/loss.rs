use crate::autodiff::{Tape, Tensor, Var};
use crate::geometry::{
    chamfer_indexed, nearest_indices, AnatomicalClass, KdTree, MultiClassPointCloud, Point3,
};
use crate::network::{DeformationPrediction, NetOutputs};

use super::TrainingError;

/// Per-class terms of the composite coarse + dense loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub coarse: [f64; 3],
    pub dense: [f64; 3],
    pub alpha: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn recompute_total(&self) -> f64 {
        (0..3).map(|c| self.coarse[c] + self.alpha * self.dense[c]).sum()
    }

    pub fn mean_dense(&self) -> f64 {
        self.dense.iter().sum::<f64>() / 3.0
    }

    /// Elementwise mean of several breakdowns sharing one alpha.
    pub fn average(items: &[LossBreakdown]) -> Option<LossBreakdown> {
        let first = items.first()?;
        let n = items.len() as f64;
        let mut out = LossBreakdown {
            coarse: [0.0; 3],
            dense: [0.0; 3],
            alpha: first.alpha,
            total: 0.0,
        };
        for b in items {
            for c in 0..3 {
                out.coarse[c] += b.coarse[c];
                out.dense[c] += b.dense[c];
            }
            out.total += b.total;
        }
        for c in 0..3 {
            out.coarse[c] /= n;
            out.dense[c] /= n;
        }
        out.total /= n;
        Some(out)
    }
}

/// Ground-truth target split by class with a nearest-neighbour index per class.
#[derive(Debug, Clone)]
pub struct IndexedTarget {
    points: [Vec<Point3>; 3],
    indexes: [KdTree; 3],
}

impl IndexedTarget {
    pub fn new(target: &MultiClassPointCloud) -> Result<Self, TrainingError> {
        target.validate_complete()?;
        let points = target.split_by_class();
        let indexes = [
            KdTree::build(&points[0])?,
            KdTree::build(&points[1])?,
            KdTree::build(&points[2])?,
        ];
        Ok(Self { points, indexes })
    }

    pub fn class_points(&self, class: AnatomicalClass) -> &[Point3] {
        &self.points[class.index()]
    }
}

/// Differentiable symmetric Chamfer distance between the `[k, 3]` tape value
/// `pred` and a fixed point set. Each min-distance term passes its gradient
/// to the single selected nearest neighbour.
pub fn chamfer_on_tape(
    tape: &mut Tape,
    pred: Var,
    target: &[Point3],
    target_index: &KdTree,
) -> Result<Var, TrainingError> {
    let pred_points = tape
        .value(pred)
        .to_points()
        .ok_or(TrainingError::PredictionShape)?;
    let pred_index = KdTree::build(&pred_points)?;
    let pred_to_target = nearest_indices(&pred_points, target_index);
    let target_to_pred = nearest_indices(target, &pred_index);

    let t = tape.constant(Tensor::from_points(target)?);
    let matched_targets = tape.gather_rows(t, &pred_to_target)?;
    let diff = tape.sub(pred, matched_targets)?;
    let dist = tape.row_norms(diff)?;
    let forward = tape.mean(dist);

    let matched_preds = tape.gather_rows(pred, &target_to_pred)?;
    let diff = tape.sub(t, matched_preds)?;
    let dist = tape.row_norms(diff)?;
    let backward = tape.mean(dist);

    let sum = tape.add(forward, backward)?;
    Ok(tape.scale(sum, 0.5))
}

/// Composite loss on the tape: sum over classes of `coarse + alpha * dense`,
/// both measured against the same dense ground truth.
pub fn loss_on_tape(
    tape: &mut Tape,
    outputs: &NetOutputs,
    target: &IndexedTarget,
    alpha: f64,
) -> Result<(Var, LossBreakdown), TrainingError> {
    if !(alpha >= 0.0) {
        return Err(TrainingError::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
    }
    let mut breakdown = LossBreakdown {
        coarse: [0.0; 3],
        dense: [0.0; 3],
        alpha,
        total: 0.0,
    };
    let mut total: Option<Var> = None;
    for class in AnatomicalClass::ALL {
        let c = class.index();
        let coarse = chamfer_on_tape(tape, outputs.coarse[c], &target.points[c], &target.indexes[c])?;
        let dense = chamfer_on_tape(tape, outputs.dense[c], &target.points[c], &target.indexes[c])?;
        breakdown.coarse[c] = tape.value(coarse).item()?;
        breakdown.dense[c] = tape.value(dense).item()?;
        let weighted = tape.scale(dense, alpha);
        let term = tape.add(coarse, weighted)?;
        total = Some(match total {
            None => term,
            Some(t) => tape.add(t, term)?,
        });
    }
    let total = total.expect("three classes");
    breakdown.total = tape.value(total).item()?;
    Ok((total, breakdown))
}

/// Composite loss of a finished prediction (no tape).
pub fn total_loss(
    prediction: &DeformationPrediction,
    target: &MultiClassPointCloud,
    alpha: f64,
) -> Result<LossBreakdown, TrainingError> {
    if !(alpha >= 0.0) {
        return Err(TrainingError::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
    }
    let target = IndexedTarget::new(target)?;
    let mut out = LossBreakdown {
        coarse: [0.0; 3],
        dense: [0.0; 3],
        alpha,
        total: 0.0,
    };
    for c in 0..3 {
        for (set, slot) in [(&prediction.coarse[c], &mut out.coarse[c]), (&prediction.dense[c], &mut out.dense[c])] {
            let idx = KdTree::build(set)?;
            *slot = chamfer_indexed(set, &idx, &target.points[c], &target.indexes[c]);
        }
    }
    out.total = out.recompute_total();
    Ok(out)
}

/// Mean per-class dense Chamfer of a prediction against `target`.
pub fn mean_dense_chamfer(
    prediction: &DeformationPrediction,
    target: &IndexedTarget,
) -> Result<f64, TrainingError> {
    let mut sum = 0.0;
    for c in 0..3 {
        let set = &prediction.dense[c];
        let idx = KdTree::build(set)?;
        sum += chamfer_indexed(set, &idx, &target.points[c], &target.indexes[c]);
    }
    Ok(sum / 3.0)
}
