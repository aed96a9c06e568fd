use pcdforge_core::analytics::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ks_small_samples() {
    let r = ks_two_sample(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    assert!((r.d - 1.0 / 3.0).abs() < 1e-12);
    assert!(r.p_value > 0.5 && r.p_value <= 1.0);
    let same = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(same.d, 0.0);
    assert_eq!(same.p_value, 1.0);
    let apart = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[10.0, 11.0, 12.0, 13.0]).unwrap();
    assert_eq!(apart.d, 1.0);
    assert!(ks_two_sample(&[], &[1.0]).is_err());
    assert!(ks_two_sample(&[f64::NAN], &[1.0]).is_err());
}

#[test]
fn kolmogorov_tail_reference_values() {
    // Q(λ) at standard quantiles of the Kolmogorov distribution.
    for (lambda, q) in [(1.3581, 0.05), (1.2238, 0.10), (1.6276, 0.01)] {
        assert!((kolmogorov_q(lambda) - q).abs() < 2e-4, "Q({lambda}) = {}", kolmogorov_q(lambda));
    }
    assert_eq!(kolmogorov_q(0.0), 1.0);
    // Both evaluation branches agree at the switch point.
    let lo = kolmogorov_q(1.18 - 1e-9);
    let hi = kolmogorov_q(1.18 + 1e-9);
    assert!((lo - hi).abs() < 1e-8);
}

#[test]
fn auroc_reference_and_ties() {
    let a = auroc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
    assert!((a - 0.75).abs() < 1e-12);
    let tied = auroc(&[0.5; 4], &[false, true, false, true]).unwrap();
    assert!((tied - 0.5).abs() < 1e-12);
    assert!(auroc(&[0.1, 0.2], &[true, true]).is_err());
}

#[test]
fn threshold_metrics_by_hand() {
    // TP=2, FP=1, FN=1, TN=2
    let scores = [0.9, 0.8, 0.2, 0.7, 0.1, 0.3];
    let labels = [true, true, true, false, false, false];
    let m = classification_metrics(&scores, &labels, 0.5).unwrap();
    assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-12);
    assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    let none = classification_metrics(&[0.1, 0.2], &[true, false], 0.5).unwrap();
    assert_eq!(none.precision, 0.0);
    assert_eq!(none.f1, 0.0);
}

fn penalized_gradient(m: &LogisticModel, x: &[Vec<f64>], y: &[bool], l2: f64) -> Vec<f64> {
    let d = x[0].len();
    let mut g = vec![0.0; d + 1];
    for (row, &label) in x.iter().zip(y) {
        let r = sigmoid(m.decision(row)) - if label { 1.0 } else { 0.0 };
        for k in 0..d {
            g[k] += r * row[k];
        }
        g[d] += r;
    }
    for k in 0..d {
        g[k] += l2 * m.weights[k];
    }
    g
}

#[test]
fn logistic_stationary_and_matches_grid_search() {
    let x: Vec<Vec<f64>> = [-2.0, -1.0, -0.5, 0.0, 0.3, 0.5, 1.0, 1.5, 2.0, 2.5].iter().map(|v| vec![*v]).collect();
    let y = [false, false, true, false, false, true, true, false, true, true];
    let m = logistic_fit(&x, &y, 1.0).unwrap();
    assert!(m.converged);
    assert!(penalized_gradient(&m, &x, &y, 1.0).iter().all(|g| g.abs() < 1e-7));

    let objective = |w: f64, b: f64| {
        let mut nll = 0.5 * w * w;
        for (row, &label) in x.iter().zip(&y) {
            let p = sigmoid(w * row[0] + b);
            nll -= if label { p.ln() } else { (1.0 - p).ln() };
        }
        nll
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in -300..=300 {
        for j in -300..=300 {
            let (w, b) = (i as f64 * 0.01, j as f64 * 0.01);
            let v = objective(w, b);
            if v < best.0 {
                best = (v, w, b);
            }
        }
    }
    assert!((m.weights[0] - best.1).abs() < 0.011);
    assert!((m.intercept - best.2).abs() < 0.011);
    for w in m.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn logistic_separable_stays_finite() {
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 9.5]).collect();
    let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
    let m = logistic_fit(&x, &y, 1.0).unwrap();
    assert!(m.converged && m.weights[0].is_finite() && m.weights[0] > 0.0);
    for (row, &label) in x.iter().zip(&y) {
        assert_eq!(m.predict_proba(row) > 0.5, label);
    }
    assert!(logistic_fit(&x, &[true; 20], 1.0).is_err());
}

#[test]
fn standardizer_population_moments() {
    let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
    let s = Standardizer::fit(&rows).unwrap();
    assert_eq!(s.mean, vec![3.0, 5.0]);
    assert!((s.sd[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(s.sd[1], 1.0);
    let t = s.transform(&rows);
    let m0: f64 = t.iter().map(|r| r[0]).sum::<f64>() / 3.0;
    let v0: f64 = t.iter().map(|r| r[0] * r[0]).sum::<f64>() / 3.0;
    assert!(m0.abs() < 1e-12 && (v0 - 1.0).abs() < 1e-12);
    assert!(t.iter().all(|r| r[1] == 0.0));
    assert!(Standardizer::fit(&[vec![1.0], vec![1.0, 2.0]]).is_err());
}

#[test]
fn stratified_folds_balance() {
    let labels: Vec<bool> = (0..53).map(|i| i % 4 == 0).collect();
    let folds = stratified_folds(&labels, 10, 3).unwrap();
    for f in 0..10 {
        let pos = (0..53).filter(|&i| folds[i] == f && labels[i]).count();
        let neg = (0..53).filter(|&i| folds[i] == f && !labels[i]).count();
        assert!((1..=2).contains(&pos), "fold {f} pos {pos}");
        assert!((3..=5).contains(&neg), "fold {f} neg {neg}");
    }
    assert_eq!(folds, stratified_folds(&labels, 10, 3).unwrap());
    assert!(stratified_folds(&labels[..5], 10, 3).is_err());
}

#[test]
fn cross_validation_separates_informative_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let labels: Vec<bool> = (0..120).map(|i| i < 60).collect();
    let features: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| vec![rng.random::<f64>() + if l { 0.8 } else { 0.0 }, rng.random::<f64>()])
        .collect();
    let cv = kfold_cv(&features, &labels, 10, DEFAULT_L2, 1).unwrap();
    assert_eq!(cv.per_fold.len(), 10);
    assert!(cv.mean.auroc > 0.9, "{:?}", cv.mean);
    let again = kfold_cv(&features, &labels, 10, DEFAULT_L2, 1).unwrap();
    assert_eq!(cv, again);
}

fn harrell_oracle(risk: &[f64], events: &[bool], times: &[f64]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..risk.len() {
        for j in 0..risk.len() {
            if times[i] < times[j] && events[i] {
                den += 1.0;
                if risk[i] > risk[j] {
                    num += 1.0;
                } else if risk[i] == risk[j] {
                    num += 0.5;
                }
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

proptest! {
    #[test]
    fn harrell_matches_pairwise(
        data in prop::collection::vec((0u8..6, any::<bool>(), 0u8..8), 2..60)
    ) {
        let risk: Vec<f64> = data.iter().map(|d| d.0 as f64).collect();
        let events: Vec<bool> = data.iter().map(|d| d.1).collect();
        let times: Vec<f64> = data.iter().map(|d| d.2 as f64 + 1.0).collect();
        match harrell_oracle(&risk, &events, &times) {
            Some(want) => prop_assert!((harrell_c(&risk, &events, &times).unwrap() - want).abs() < 1e-12),
            None => prop_assert!(harrell_c(&risk, &events, &times).is_err()),
        }
    }

    #[test]
    fn ks_statistic_matches_brute_force(
        a in prop::collection::vec(0u8..20, 1..30),
        b in prop::collection::vec(0u8..20, 1..30),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        let want = a.iter().chain(&b).map(|&x| (cdf(&a, x) - cdf(&b, x)).abs()).fold(0.0, f64::max);
        let got = ks_two_sample(&a, &b).unwrap();
        prop_assert!((got.d - want).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got.p_value));
    }
}

/// Breslow log partial likelihood with the same ridge as the fit.
fn cox_objective(beta: &[f64], x: &[Vec<f64>], events: &[bool], times: &[f64], ridge: f64) -> f64 {
    let eta: Vec<f64> = x.iter().map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum()).collect();
    let mut l = 0.0;
    for i in 0..x.len() {
        if events[i] {
            let s: f64 = (0..x.len()).filter(|&j| times[j] >= times[i]).map(|j| eta[j].exp()).sum();
            l += eta[i] - s.ln();
        }
    }
    l - 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
}

#[test]
fn cox_one_covariate_matches_grid_search() {
    let x: Vec<Vec<f64>> = [1.0, 0.2, 0.5, 0.9, -0.3, 0.0, 1.4, -1.0].iter().map(|v| vec![*v]).collect();
    let times = [2.0, 5.0, 3.0, 1.0, 4.0, 3.0, 6.0, 7.0];
    let events = [true, false, true, true, true, false, true, false];
    let fit = cox_fit(&x, &events, &times).unwrap();
    assert!(fit.converged);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in -5000..=5000 {
        let b = i as f64 * 1e-3;
        let v = cox_objective(&[b], &x, &events, &times, COX_RIDGE);
        if v > best.0 {
            best = (v, b);
        }
    }
    assert!((fit.coefficients[0] - best.1).abs() < 1.1e-3, "{} vs {}", fit.coefficients[0], best.1);
    assert!((fit.log_likelihood - cox_objective(&fit.coefficients, &x, &events, &times, COX_RIDGE)).abs() < 1e-9);
}

#[test]
fn cox_two_covariates_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 80;
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>()]).collect();
    let times: Vec<f64> = x
        .iter()
        .map(|r| -(rng.random::<f64>().ln()) / (1.5 * r[0]).exp() + 0.01)
        .collect();
    let events: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
    let fit = cox_fit(&x, &events, &times).unwrap();
    assert!(fit.gradient_norm < 1e-6);
    let h = 1e-5;
    for k in 0..2 {
        let mut up = fit.coefficients.clone();
        let mut dn = fit.coefficients.clone();
        up[k] += h;
        dn[k] -= h;
        let g = (cox_objective(&up, &x, &events, &times, COX_RIDGE) - cox_objective(&dn, &x, &events, &times, COX_RIDGE)) / (2.0 * h);
        assert!(g.abs() < 1e-5, "coordinate {k}: {g}");
    }
    assert!(fit.coefficients[0] > 0.5);
    assert!(fit.c_index > 0.6);
}

#[test]
fn cox_rejects_too_few_events() {
    let x = vec![vec![1.0], vec![2.0], vec![3.0]];
    assert!(matches!(
        cox_fit(&x, &[true, false, false], &[1.0, 2.0, 3.0]),
        Err(AnalyticsError::TooFewEvents(1))
    ));
}

#[test]
fn survival_cv_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 100;
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>() * 2.0 - 1.0]).collect();
    let times: Vec<f64> = x.iter().map(|r| -(rng.random::<f64>().ln()) / (2.0 * r[0]).exp()).collect();
    let events: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.6).collect();
    let a = survival_cv(&x, &events, &times, 10, 4).unwrap();
    let b = survival_cv(&x, &events, &times, 10, 4).unwrap();
    assert_eq!(a.per_fold, b.per_fold);
    assert!(a.mean_c > 0.6, "{}", a.mean_c);
}
