use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    loss_on_tape, mean_dense_chamfer, AlphaSchedule, IndexedTarget, LossBreakdown, SplitFractions,
    TrainingError,
};
use crate::autodiff::{adam_step, AdamConfig, AdamState, Tape, Tensor};
use crate::geometry::{MultiClassPointCloud, NormalizationTransform};
use crate::network::{ArchitectureConfig, PcdNet};

/// Optimization and early-stopping settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub alpha_schedule: AlphaSchedule,
    /// Optimizer steps without validation improvement before stopping.
    pub patience: u64,
    /// Optimizer steps between validation passes.
    pub validation_interval: u64,
    /// Hard cap on optimizer steps.
    pub max_steps: u64,
    pub split: SplitFractions,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            batch_size: 8,
            learning_rate: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            alpha_schedule: AlphaSchedule::default(),
            patience: 10_000,
            validation_interval: 250,
            max_steps: 1_000_000,
            split: SplitFractions::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: &str| Err(TrainingError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.validation_interval == 0 {
            return bad("validation_interval must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        self.alpha_schedule.validate()?;
        self.split.validate()
    }
}

/// One input/target pair in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: MultiClassPointCloud,
    pub target: MultiClassPointCloud,
}

/// One optimizer step of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    /// Number of optimizer updates applied so far (1-based).
    pub step: u64,
    /// Batch-mean loss terms; `alpha` is the weight used for this update.
    pub loss: LossBreakdown,
    /// Mean per-class dense Chamfer on the validation split, when evaluated.
    pub val_dense_chamfer: Option<f64>,
}

impl LogRow {
    pub const CSV_HEADER: &'static str = "step,alpha,loss_total,loss_coarse_lvendo,loss_coarse_lvepi,loss_coarse_rvendo,loss_dense_lvendo,loss_dense_lvepi,loss_dense_rvendo,val_dense_chamfer";

    pub fn to_csv(&self) -> String {
        let l = &self.loss;
        let val = self
            .val_dense_chamfer
            .map(|v| v.to_string())
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.step,
            l.alpha,
            l.total,
            l.coarse[0],
            l.coarse[1],
            l.coarse[2],
            l.dense[0],
            l.dense[1],
            l.dense[2],
            val
        )
    }
}

/// Hooks for streaming training progress.
pub trait TrainObserver {
    fn on_step(&mut self, _row: &LogRow) -> Result<(), TrainingError> {
        Ok(())
    }

    /// Called with the new best parameters after every validation improvement.
    fn on_improvement(&mut self, _step: u64, _model: &PcdNet) -> Result<(), TrainingError> {
        Ok(())
    }
}

/// Observer that ignores all events.
pub struct NoopObserver;

impl TrainObserver for NoopObserver {}

/// Strict-improvement early stopping over optimizer steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: u64,
    best: f64,
    best_step: u64,
}

impl EarlyStopping {
    pub fn new(patience: u64) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_step: 0,
        }
    }

    /// Records a validation result; returns whether it improved on the best.
    pub fn observe(&mut self, step: u64, metric: f64) -> bool {
        if metric < self.best {
            self.best = metric;
            self.best_step = step;
            true
        } else {
            false
        }
    }

    pub fn should_stop(&self, step: u64) -> bool {
        step.saturating_sub(self.best_step) >= self.patience
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_step(&self) -> u64 {
        self.best_step
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation metric observed.
    pub model: PcdNet,
    pub log: Vec<LogRow>,
    pub best_step: u64,
    pub best_validation: f64,
    pub steps_run: u64,
    pub stopped_early: bool,
}

struct PreparedPair {
    input: MultiClassPointCloud,
    target: IndexedTarget,
}

fn prepare(pairs: &[TrainingPair], t: &NormalizationTransform) -> Result<Vec<PreparedPair>, TrainingError> {
    pairs
        .iter()
        .map(|p| {
            p.input.validate_complete()?;
            Ok(PreparedPair {
                input: t.normalize(&p.input),
                target: IndexedTarget::new(&t.normalize(&p.target))?,
            })
        })
        .collect()
}

/// Mean over pairs of the mean per-class dense Chamfer, in normalized units.
fn validation_metric(model: &PcdNet, pairs: &[PreparedPair]) -> Result<f64, TrainingError> {
    let scores = pairs
        .par_iter()
        .map(|p| {
            let pred = model.predict(&p.input)?;
            mean_dense_chamfer(&pred, &p.target)
        })
        .collect::<Result<Vec<f64>, TrainingError>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn sample_gradient(
    model: &PcdNet,
    pair: &PreparedPair,
    alpha: f64,
) -> Result<(Vec<Vec<f64>>, LossBreakdown), TrainingError> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape);
    let outputs = model.forward(&mut tape, &bound, &pair.input)?;
    let (total, breakdown) = loss_on_tape(&mut tape, &outputs, &pair.target, alpha)?;
    let mut grads = tape.backward(total)?;
    Ok((bound.vars().iter().map(|&v| grads.take(v)).collect(), breakdown))
}

/// Dataset transform: mean centroid and mean bounding-box diagonal over the
/// inputs and targets of the training pairs.
pub fn fit_normalization(pairs: &[TrainingPair]) -> Result<NormalizationTransform, TrainingError> {
    Ok(NormalizationTransform::fit(
        pairs.iter().flat_map(|p| [&p.input, &p.target]),
    )?)
}

/// Trains a fresh network from `arch` on `train`, early-stopping on
/// `validation`.
pub fn train(
    train: &[TrainingPair],
    validation: &[TrainingPair],
    arch: &ArchitectureConfig,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainingError> {
    if train.is_empty() {
        return Err(TrainingError::EmptySplit("train"));
    }
    let normalization = fit_normalization(train)?;
    let model = PcdNet::init(arch.clone(), normalization)?;
    train_from(model, train, validation, config, observer)
}

/// Continues training `model` (keeping its normalization) on `train`.
pub fn train_from(
    mut model: PcdNet,
    train: &[TrainingPair],
    validation: &[TrainingPair],
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainingError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainingError::EmptySplit("train"));
    }
    if validation.is_empty() {
        return Err(TrainingError::EmptySplit("validation"));
    }
    let t = *model.normalization();
    let train_set = prepare(train, &t)?;
    let val_set = prepare(validation, &t)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(config.adam(), model.parameters());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut log = Vec::new();

    let initial = validation_metric(&model, &val_set)?;
    stopper.observe(0, initial);
    let mut best_model = model.clone();
    observer.on_improvement(0, &best_model)?;

    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut step = 0u64;
    let mut stopped_early = false;
    while step < config.max_steps {
        if cursor >= order.len() {
            order = (0..train_set.len()).collect();
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let end = (cursor + config.batch_size).min(order.len());
        let batch = &order[cursor..end];
        cursor = end;

        let alpha = config.alpha_schedule.alpha(step);
        let results = batch
            .par_iter()
            .map(|&i| sample_gradient(&model, &train_set[i], alpha))
            .collect::<Result<Vec<_>, TrainingError>>()?;

        let scale = 1.0 / results.len() as f64;
        let mut grads: Vec<Vec<f64>> = model.parameters().iter().map(|p| vec![0.0; p.numel()]).collect();
        let mut breakdowns = Vec::with_capacity(results.len());
        for (g, b) in results {
            for (acc, gi) in grads.iter_mut().zip(g) {
                acc.iter_mut().zip(gi).for_each(|(a, v)| *a += v);
            }
            breakdowns.push(b);
        }
        let loss = LossBreakdown::average(&breakdowns).expect("non-empty batch");
        if !loss.total.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
            return Err(TrainingError::NonFiniteLoss { step: step + 1 });
        }
        let grads: Vec<Tensor> = model
            .parameters()
            .iter()
            .zip(grads)
            .map(|(p, mut g)| {
                g.iter_mut().for_each(|v| *v *= scale);
                Tensor::new(p.shape().to_vec(), g)
            })
            .collect::<Result<_, _>>()?;
        adam_step(model.parameters_mut(), &grads, &mut adam)?;
        step += 1;

        let mut row = LogRow {
            step,
            loss,
            val_dense_chamfer: None,
        };
        if step % config.validation_interval == 0 {
            let metric = validation_metric(&model, &val_set)?;
            row.val_dense_chamfer = Some(metric);
            if stopper.observe(step, metric) {
                best_model = model.clone();
                observer.on_improvement(step, &best_model)?;
            }
        }
        observer.on_step(&row)?;
        log.push(row);
        if stopper.should_stop(step) {
            stopped_early = true;
            break;
        }
    }

    Ok(TrainOutcome {
        model: best_model,
        log,
        best_step: stopper.best_step(),
        best_validation: stopper.best(),
        steps_run: step,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stopping_tracks_strict_improvement() {
        let mut s = EarlyStopping::new(10);
        assert!(s.observe(0, 1.0));
        assert!(!s.observe(5, 1.0));
        assert!(s.observe(10, 0.5));
        assert!(!s.should_stop(19));
        assert!(s.should_stop(20));
        assert_eq!(s.best_step(), 10);
    }

    #[test]
    fn worsening_metric_stops_after_patience() {
        let mut s = EarlyStopping::new(10);
        let interval = 3;
        let mut stop_at = None;
        for step in (0..100).step_by(interval) {
            s.observe(step, step as f64);
            if s.should_stop(step) {
                stop_at = Some(step);
                break;
            }
        }
        let stop = stop_at.unwrap();
        assert_eq!(s.best_step(), 0);
        assert!(stop <= 10 + interval as u64);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let c = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            patience: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_header_matches_row_width() {
        let row = LogRow {
            step: 3,
            loss: LossBreakdown {
                coarse: [1.0, 2.0, 3.0],
                dense: [4.0, 5.0, 6.0],
                alpha: 0.5,
                total: 13.5,
            },
            val_dense_chamfer: None,
        };
        assert_eq!(
            row.to_csv().split(',').count(),
            LogRow::CSV_HEADER.split(',').count()
        );
        assert!(row.to_csv().ends_with(','));
    }
}
