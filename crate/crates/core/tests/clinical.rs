use std::f64::consts::PI;

use pcdforge_core::clinical::*;
use pcdforge_core::geometry::{MultiClassPointCloud, Point3};
use pcdforge_core::network::Direction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

fn ellipsoid(n: usize, axes: [f64; 3], seed: u64) -> Vec<Point3> {
    let [a, b, c] = axes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_max = (b * c).max(a * c).max(a * b);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u: [f64; 3] = UnitSphere.sample(&mut rng);
        let w = ((b * c * u[0]).powi(2) + (a * c * u[1]).powi(2) + (a * b * u[2]).powi(2)).sqrt();
        if rng.random::<f64>() * w_max <= w {
            out.push([a * u[0], b * u[1], c * u[2]]);
        }
    }
    out
}

fn rotate(points: &[Point3], ax: f64, az: f64) -> Vec<Point3> {
    let (sx, cx) = ax.sin_cos();
    let (sz, cz) = az.sin_cos();
    points
        .iter()
        .map(|p| {
            let y = cx * p[1] - sx * p[2];
            let z = sx * p[1] + cx * p[2];
            [cz * p[0] - sz * y, sz * p[0] + cz * y, z]
        })
        .collect()
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want
}

#[test]
fn sphere_volume_within_three_percent() {
    let truth = 4.0 / 3.0 * PI * 1000.0 / 1000.0;
    for seed in 0..5 {
        let v = chamber_volume(&ellipsoid(2000, [10.0; 3], seed), 20).unwrap();
        assert!(rel_err(v, truth) < 0.03, "seed {seed}: {v} vs {truth}");
    }
}

#[test]
fn ellipsoid_volume_within_three_percent() {
    let truth = 4.0 / 3.0 * PI * 30.0 * 25.0 * 50.0 / 1000.0;
    for seed in 0..5 {
        let v = chamber_volume(&ellipsoid(2000, [30.0, 25.0, 50.0], seed), 20).unwrap();
        assert!(rel_err(v, truth) < 0.03, "seed {seed}: {v} vs {truth}");
    }
}

#[test]
fn doubling_scales_volume_by_eight() {
    let pts = ellipsoid(2000, [30.0, 25.0, 50.0], 7);
    let doubled: Vec<Point3> = pts.iter().map(|p| p.map(|v| 2.0 * v)).collect();
    let v1 = chamber_volume(&pts, 20).unwrap();
    let v2 = chamber_volume(&doubled, 20).unwrap();
    assert!(rel_err(v2, 8.0 * v1) < 1e-6);
}

#[test]
fn volume_is_rotation_invariant() {
    let pts = ellipsoid(2000, [30.0, 25.0, 50.0], 3);
    let v = chamber_volume(&pts, 20).unwrap();
    for (ax, az) in [(0.3, 0.0), (1.1, 0.4), (-0.7, 2.5)] {
        let vr = chamber_volume(&rotate(&pts, ax, az), 20).unwrap();
        assert!(rel_err(vr, v) < 0.02, "{vr} vs {v}");
    }
}

#[test]
fn concentric_shell_mass() {
    let endo = ellipsoid(2000, [30.0; 3], 1);
    let epi = ellipsoid(2000, [35.0; 3], 2);
    let truth = 1.05 * 4.0 / 3.0 * PI * (35f64.powi(3) - 30f64.powi(3)) / 1000.0;
    let m = lv_mass(&endo, &epi, 20).unwrap();
    assert!(rel_err(m, truth) < 0.03, "{m} vs {truth}");
    assert!(lv_mass(&epi, &endo, 20).is_err());
    assert!(lv_mass(&endo, &endo, 20).is_err());
}

#[test]
fn ef_invariant_under_common_rescaling() {
    let a = ejection_fraction(134.0, 59.0).unwrap();
    for s in [0.001, 0.5, 3.0, 1e4] {
        let b = ejection_fraction(134.0 * s, 59.0 * s).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

fn heart_like(scale: f64, seed: u64) -> MultiClassPointCloud {
    let endo = ellipsoid(300, [25.0 * scale, 25.0 * scale, 50.0 * scale], seed);
    let epi = ellipsoid(300, [33.0 * scale, 33.0 * scale, 58.0 * scale], seed + 1);
    let rv = ellipsoid(300, [20.0 * scale, 30.0 * scale, 45.0 * scale], seed + 2)
        .into_iter()
        .map(|p| [p[0] + 40.0, p[1], p[2]])
        .collect();
    MultiClassPointCloud::from_classes([endo, epi, rv])
}

#[test]
fn identical_predictions_give_zero_differences() {
    let cases: Vec<EvaluationCase> = (0..3)
        .map(|i| EvaluationCase {
            id: format!("c{i}"),
            input: heart_like(1.0, 10 * i),
            gold: heart_like(0.85, 10 * i + 5),
            predicted: heart_like(0.85, 10 * i + 5),
        })
        .collect();
    let report = evaluate_population(&cases, Direction::Ed2Es, 20).unwrap();
    for c in &report.cases {
        assert_eq!(c.difference, [0.0; 3]);
        assert_eq!(c.gold_function, c.predicted_function);
    }
    for s in &report.summary {
        assert_eq!(s.gold, s.predicted);
    }
}

#[test]
fn single_case_has_zero_sd_and_means_reconstruct() {
    let case = EvaluationCase {
        id: "only".into(),
        input: heart_like(1.0, 1),
        gold: heart_like(0.85, 2),
        predicted: heart_like(0.8, 3),
    };
    let report = evaluate_population(std::slice::from_ref(&case), Direction::Ed2Es, 20).unwrap();
    for s in &report.summary {
        assert_eq!(s.gold.sd, 0.0);
        assert_eq!(s.predicted.sd, 0.0);
    }

    let cases: Vec<EvaluationCase> = (0..5)
        .map(|i| EvaluationCase {
            id: format!("c{i}"),
            input: heart_like(1.0, 100 + i),
            gold: heart_like(0.85, 200 + i),
            predicted: heart_like(0.8 + 0.02 * i as f64, 300 + i),
        })
        .collect();
    let report = evaluate_population(&cases, Direction::Ed2Es, 20).unwrap();
    let lv = report.summary_for("lv_volume_ml").unwrap();
    let mean = report.cases.iter().map(|c| c.predicted.lv_volume).sum::<f64>() / 5.0;
    assert!((lv.predicted.mean - mean).abs() < 1e-12);
    let diff = report.cases.iter().map(|c| c.difference[0]).sum::<f64>() / 5.0;
    assert!((lv.difference.unwrap().mean - diff).abs() < 1e-12);
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("subject_id,gold_lv_volume_ml,pred_lv_volume_ml"));
    assert!(report.summary_text().contains("gold denominator"));
}

#[test]
fn ef_pairs_gold_input_with_predicted_output() {
    let ed = heart_like(1.0, 1);
    let es_gold = heart_like(0.85, 2);
    let es_pred = heart_like(0.8, 3);
    let report = evaluate_population(
        &[EvaluationCase {
            id: "a".into(),
            input: ed.clone(),
            gold: es_gold.clone(),
            predicted: es_pred.clone(),
        }],
        Direction::Ed2Es,
        20,
    )
    .unwrap();
    let c = &report.cases[0];
    let want = cloud_function_metrics(&ed, &es_pred, 20).unwrap();
    assert_eq!(c.predicted_function, want);
    assert_eq!(c.gold_function, cloud_function_metrics(&ed, &es_gold, 20).unwrap());

    // Relaxation: gold ES is the input, ED is predicted.
    let report = evaluate_population(
        &[EvaluationCase {
            id: "b".into(),
            input: es_gold.clone(),
            gold: ed.clone(),
            predicted: heart_like(1.05, 4),
        }],
        Direction::Es2Ed,
        20,
    )
    .unwrap();
    let c = &report.cases[0];
    assert_eq!(c.predicted_function, cloud_function_metrics(&heart_like(1.05, 4), &es_gold, 20).unwrap());
}

#[test]
fn empty_population_rejected() {
    assert!(matches!(
        evaluate_population(&[], Direction::Ed2Es, 20),
        Err(ClinicalError::EmptyPopulation)
    ));
}
