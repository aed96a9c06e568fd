use pcdforge_core::geometry::{MultiClassPointCloud, Point3};
use pcdforge_core::network::{ArchitectureConfig, PcdNet};
use pcdforge_core::training::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blob(per_class: usize, radius: f64, seed: u64) -> MultiClassPointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = [0.0, 10.0, 25.0].map(|offset| {
        (0..per_class)
            .map(|_| {
                let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-9);
                [radius * v[0] / n + offset, radius * v[1] / n, radius * v[2] / n]
            })
            .collect::<Vec<Point3>>()
    });
    MultiClassPointCloud::from_classes(sets)
}

fn pairs(n: usize, seed: u64) -> Vec<TrainingPair> {
    (0..n as u64)
        .map(|i| TrainingPair {
            input: blob(32, 30.0, seed + 2 * i),
            target: blob(32, 24.0, seed + 2 * i + 1),
        })
        .collect()
}

fn quick_config(steps: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 2,
        learning_rate: 3e-3,
        max_steps: steps,
        validation_interval: 10,
        patience: 1_000,
        alpha_schedule: AlphaSchedule::new(vec![(0, 1.0)]).unwrap(),
        ..TrainConfig::default()
    }
}

#[derive(Default)]
struct Recorder {
    rows: Vec<LogRow>,
    improvements: Vec<u64>,
}

impl TrainObserver for Recorder {
    fn on_step(&mut self, row: &LogRow) -> Result<(), TrainingError> {
        self.rows.push(row.clone());
        Ok(())
    }

    fn on_improvement(&mut self, step: u64, _model: &PcdNet) -> Result<(), TrainingError> {
        self.improvements.push(step);
        Ok(())
    }
}

#[test]
fn short_run_reduces_validation_loss() {
    let (tr, va) = (pairs(4, 0), pairs(2, 100));
    let mut rec = Recorder::default();
    let out = train(&tr, &va, &ArchitectureConfig::toy(), &quick_config(60), &mut rec).unwrap();
    assert_eq!(out.steps_run, 60);
    assert_eq!(out.log.len(), 60);
    assert_eq!(rec.rows.len(), 60);
    let vals: Vec<u64> = out.log.iter().filter(|r| r.val_dense_chamfer.is_some()).map(|r| r.step).collect();
    assert_eq!(vals, vec![10, 20, 30, 40, 50, 60]);
    assert_eq!(rec.improvements[0], 0);
    assert!(out.best_step > 0, "validation never improved");
    assert_eq!(*rec.improvements.last().unwrap(), out.best_step);
    for r in &out.log {
        assert!((r.loss.total - r.loss.recompute_total()).abs() < 1e-12);
        assert_eq!(r.to_csv().split(',').count(), LogRow::CSV_HEADER.split(',').count());
    }
}

#[test]
fn training_is_deterministic() {
    let (tr, va) = (pairs(3, 7), pairs(1, 70));
    let cfg = quick_config(12);
    let a = train(&tr, &va, &ArchitectureConfig::toy(), &cfg, &mut NoopObserver).unwrap();
    let b = train(&tr, &va, &ArchitectureConfig::toy(), &cfg, &mut NoopObserver).unwrap();
    assert_eq!(a.model.parameters(), b.model.parameters());
    let rows = |o: &TrainOutcome| o.log.iter().map(LogRow::to_csv).collect::<Vec<_>>();
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn patience_stops_the_run() {
    let (tr, va) = (pairs(2, 3), pairs(1, 30));
    let cfg = TrainConfig {
        learning_rate: 0.5,
        patience: 10,
        validation_interval: 5,
        max_steps: 1_000,
        ..quick_config(0)
    };
    let out = train(&tr, &va, &ArchitectureConfig::toy(), &cfg, &mut NoopObserver).unwrap();
    assert!(out.stopped_early);
    assert!(out.steps_run < 1_000);
    assert!(out.steps_run - out.best_step >= 10);
}

#[test]
fn empty_splits_rejected() {
    let tr = pairs(2, 0);
    let arch = ArchitectureConfig::toy();
    assert!(matches!(train(&[], &tr, &arch, &quick_config(1), &mut NoopObserver), Err(TrainingError::EmptySplit("train"))));
    assert!(matches!(train(&tr, &[], &arch, &quick_config(1), &mut NoopObserver), Err(TrainingError::EmptySplit("validation"))));
}

#[test]
fn alpha_schedule_steps_and_rescales() {
    let s = AlphaSchedule::default();
    assert_eq!(s.alpha(0), 0.01);
    assert_eq!(s.alpha(4_999), 0.01);
    assert_eq!(s.alpha(5_000), 0.1);
    assert_eq!(s.alpha(1_000_000), 5.0);
    let r = s.rescaled(0.1);
    assert_eq!(r.alpha(499), 0.01);
    assert_eq!(r.alpha(500), 0.1);
    assert!(AlphaSchedule::new(vec![(5, 1.0)]).is_err());
    assert!(AlphaSchedule::new(vec![(0, 1.0), (0, 2.0)]).is_err());
}

#[test]
fn default_split_sizes() {
    let f = SplitFractions::default();
    assert_eq!(f.sizes(500), [350, 25, 125]);
    assert_eq!(f.sizes(10), [7, 1, 2]);
}

proptest! {
    #[test]
    fn split_is_a_partition(n in 3usize..400, seed in 0u64..1000) {
        let records: Vec<usize> = (0..n).collect();
        let (a, b, c) = split_dataset(&records, SplitFractions::default(), seed).unwrap();
        prop_assert_eq!(a.len() + b.len() + c.len(), n);
        let mut all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, records.clone());
        let again = split_dataset(&records, SplitFractions::default(), seed).unwrap();
        prop_assert_eq!((a, b, c), again);
    }

    #[test]
    fn early_stopping_best_is_running_minimum(metrics in prop::collection::vec(0.0f64..10.0, 1..50)) {
        let mut s = EarlyStopping::new(1_000);
        let mut best = f64::INFINITY;
        for (i, &m) in metrics.iter().enumerate() {
            let improved = s.observe(i as u64, m);
            prop_assert_eq!(improved, m < best);
            best = best.min(m);
            prop_assert_eq!(s.best(), best);
        }
    }
}
