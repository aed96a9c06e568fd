//! Composite Chamfer loss, alpha schedule, dataset splitting and the training
//! loop with early stopping.

mod loss;
mod schedule;
mod split;
mod trainer;

pub use loss::{
    chamfer_on_tape, loss_on_tape, mean_dense_chamfer, total_loss, IndexedTarget, LossBreakdown,
};
pub use schedule::AlphaSchedule;
pub use split::{split_dataset, SplitFractions};
pub use trainer::{
    fit_normalization, train, train_from, EarlyStopping, LogRow, NoopObserver, TrainConfig,
    TrainObserver, TrainOutcome, TrainingPair,
};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::geometry::GeometryError;
use crate::network::NetworkError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainingError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least 3 records to split, got {0}")]
    TooFewRecords(usize),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("non-finite loss or gradient at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("prediction tensor is not an n x 3 point matrix")]
    PredictionShape,
    #[error("{0}")]
    Observer(String),
}
