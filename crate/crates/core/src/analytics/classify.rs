use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{logistic_fit, AnalyticsError, Standardizer};

/// Binary classification summary; all values in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub auroc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

impl ClassificationMetrics {
    pub const CSV_HEADER: &'static str = "input,accuracy,auroc,f1,precision,recall";

    pub fn csv_row(&self, input: &str) -> String {
        format!(
            "{input},{},{},{},{},{}",
            self.accuracy, self.auroc, self.f1, self.precision, self.recall
        )
    }

    pub fn mean(items: &[ClassificationMetrics]) -> Option<Self> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let avg = |f: fn(&ClassificationMetrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Some(Self {
            accuracy: avg(|m| m.accuracy),
            auroc: avg(|m| m.auroc),
            f1: avg(|m| m.f1),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
        })
    }
}

/// Area under the ROC curve as the Mann–Whitney statistic with mid-ranks,
/// so tied scores count one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, AnalyticsError> {
    if scores.len() != labels.len() {
        return Err(AnalyticsError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(AnalyticsError::NonFinite);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(AnalyticsError::SingleLabel);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Threshold metrics plus AUROC. Precision is 0 when nothing is predicted
/// positive, and F1 is 0 when precision and recall are both 0.
pub fn classification_metrics(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<ClassificationMetrics, AnalyticsError> {
    let auroc = auroc(scores, labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ClassificationMetrics {
        accuracy: ratio(tp + tn, scores.len()),
        auroc,
        f1,
        precision,
        recall,
    })
}

/// Fold index per case with each label spread evenly over the folds.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, AnalyticsError> {
    if k < 2 {
        return Err(AnalyticsError::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(AnalyticsError::TooManyFolds { k, cases: labels.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; labels.len()];
    let mut next = 0;
    for want in [false, true] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == want).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_L2: f64 = 1.0;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub mean: ClassificationMetrics,
    pub per_fold: Vec<ClassificationMetrics>,
    pub folds: Vec<usize>,
}

/// Stratified k-fold logistic regression. Standardization is fitted on each
/// training fold only.
pub fn kfold_cv(
    features: &[Vec<f64>],
    labels: &[bool],
    k: usize,
    l2: f64,
    seed: u64,
) -> Result<CvResult, AnalyticsError> {
    if features.len() != labels.len() {
        return Err(AnalyticsError::LengthMismatch { left: features.len(), right: labels.len() });
    }
    let folds = stratified_folds(labels, k, seed)?;
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| {
            let (mut xtr, mut ytr, mut xte, mut yte) = (vec![], vec![], vec![], vec![]);
            for i in 0..labels.len() {
                if folds[i] == f {
                    xte.push(features[i].clone());
                    yte.push(labels[i]);
                } else {
                    xtr.push(features[i].clone());
                    ytr.push(labels[i]);
                }
            }
            let scaler = Standardizer::fit(&xtr)?;
            let model = logistic_fit(&scaler.transform(&xtr), &ytr, l2)?;
            let scores: Vec<f64> = xte
                .iter()
                .map(|x| model.predict_proba(&scaler.transform_row(x)))
                .collect();
            classification_metrics(&scores, &yte, DEFAULT_THRESHOLD)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvResult {
        mean: ClassificationMetrics::mean(&per_fold).expect("k >= 2"),
        per_fold,
        folds,
    })
}
