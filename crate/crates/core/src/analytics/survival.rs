use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{stratified_folds, AnalyticsError, Standardizer};

pub const COX_RIDGE: f64 = 1e-6;
pub const COX_MAX_ITERATIONS: usize = 200;
const COX_GRADIENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalFit {
    pub coefficients: Vec<f64>,
    /// Penalized log partial likelihood at the solution.
    pub log_likelihood: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Breslow cumulative baseline hazard as `(time, H0(time))` at event times.
    pub baseline_hazard: Vec<(f64, f64)>,
    /// Harrell's C of the fitted risk on the fitting data.
    pub c_index: f64,
}

impl SurvivalFit {
    pub fn risk(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

struct CoxData {
    /// Row indices ordered by decreasing time.
    order: Vec<usize>,
    x: Vec<Vec<f64>>,
    events: Vec<bool>,
    times: Vec<f64>,
}

struct CoxEval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl CoxData {
    /// Penalized Breslow log partial likelihood with gradient and negative
    /// Hessian.
    fn evaluate(&self, beta: &DVector<f64>, ridge: f64, with_hessian: bool) -> CoxEval {
        let p = beta.len();
        let eta: Vec<f64> = self
            .x
            .iter()
            .map(|r| r.iter().zip(beta.iter()).map(|(a, b)| a * b).sum())
            .collect();
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s0 = 0.0;
        let mut s1 = DVector::zeros(p);
        let mut s2 = DMatrix::zeros(p, p);
        let mut value = 0.0;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        let mut i = 0;
        while i < self.order.len() {
            // Add the whole tied group to the risk set before scoring its events.
            let t = self.times[self.order[i]];
            let mut j = i;
            while j < self.order.len() && self.times[self.order[j]] == t {
                let r = self.order[j];
                let w = (eta[r] - shift).exp();
                let xr = DVector::from_column_slice(&self.x[r]);
                s0 += w;
                s1.axpy(w, &xr, 1.0);
                if with_hessian {
                    s2 += w * &xr * xr.transpose();
                }
                j += 1;
            }
            let log_s0 = s0.ln() + shift;
            let mean = &s1 / s0;
            for &r in &self.order[i..j] {
                if !self.events[r] {
                    continue;
                }
                value += eta[r] - log_s0;
                for (g, v) in grad.iter_mut().zip(&self.x[r]) {
                    *g += v;
                }
                grad -= &mean;
                if with_hessian {
                    hess += &s2 / s0 - &mean * mean.transpose();
                }
            }
            i = j;
        }
        value -= 0.5 * ridge * beta.norm_squared();
        grad -= ridge * beta;
        for k in 0..p {
            hess[(k, k)] += ridge;
        }
        CoxEval { value, grad, hess }
    }
}

/// Cox proportional-hazards fit by Newton iterations with backtracking on
/// the ridge-penalized Breslow partial likelihood.
pub fn cox_fit(x: &[Vec<f64>], events: &[bool], times: &[f64]) -> Result<SurvivalFit, AnalyticsError> {
    cox_fit_with_ridge(x, events, times, COX_RIDGE)
}

pub fn cox_fit_with_ridge(
    x: &[Vec<f64>],
    events: &[bool],
    times: &[f64],
    ridge: f64,
) -> Result<SurvivalFit, AnalyticsError> {
    if x.is_empty() {
        return Err(AnalyticsError::Empty("feature matrix"));
    }
    if x.len() != events.len() || x.len() != times.len() {
        return Err(AnalyticsError::LengthMismatch { left: x.len(), right: events.len().min(times.len()) });
    }
    let p = x[0].len();
    if x.iter().any(|r| r.len() != p) {
        return Err(AnalyticsError::Ragged);
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(AnalyticsError::InvalidArgument("survival times must be positive".into()));
    }
    let n_events = events.iter().filter(|&&e| e).count();
    if n_events < 2 {
        return Err(AnalyticsError::TooFewEvents(n_events));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
    let data = CoxData {
        order,
        x: x.to_vec(),
        events: events.to_vec(),
        times: times.to_vec(),
    };

    let mut beta = DVector::zeros(p);
    let mut current = data.evaluate(&beta, ridge, true);
    let mut iterations = 0;
    let mut converged = current.grad.norm() < COX_GRADIENT_TOLERANCE;
    while !converged && iterations < COX_MAX_ITERATIONS {
        let step = match current.hess.clone().cholesky() {
            Some(c) => c.solve(&current.grad),
            None => current.hess.clone().lu().solve(&current.grad).ok_or(AnalyticsError::Singular)?,
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let candidate = &beta + t * &step;
            let eval = data.evaluate(&candidate, ridge, false);
            if eval.value.is_finite() && eval.value >= current.value + 1e-4 * t * current.grad.dot(&step) {
                beta = candidate;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        current = data.evaluate(&beta, ridge, true);
        if current.grad.norm() < COX_GRADIENT_TOLERANCE {
            converged = true;
        } else if !accepted {
            break;
        }
    }
    let gradient_norm = current.grad.norm();
    if !converged && gradient_norm >= 1e-6 {
        return Err(AnalyticsError::NonConvergence {
            iterations,
            gradient_norm,
        });
    }

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let risk: Vec<f64> = x.iter().map(|r| r.iter().zip(&coefficients).map(|(a, b)| a * b).sum()).collect();
    let baseline_hazard = breslow_baseline(&risk, events, times);
    let c_index = harrell_c(&risk, events, times)?;
    Ok(SurvivalFit {
        coefficients,
        log_likelihood: current.value,
        gradient_norm,
        iterations,
        converged: true,
        baseline_hazard,
        c_index,
    })
}

fn breslow_baseline(risk: &[f64], events: &[bool], times: &[f64]) -> Vec<(f64, f64)> {
    let mut event_times: Vec<f64> = times.iter().zip(events).filter(|(_, &e)| e).map(|(t, _)| *t).collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();
    let mut cumulative = 0.0;
    event_times
        .into_iter()
        .map(|t| {
            let d = times.iter().zip(events).filter(|(s, &e)| e && **s == t).count() as f64;
            let at_risk: f64 = times.iter().zip(risk).filter(|(s, _)| **s >= t).map(|(_, r)| r.exp()).sum();
            cumulative += d / at_risk;
            (t, cumulative)
        })
        .collect()
}

/// Fenwick tree of counts over risk ranks.
struct Fenwick(Vec<usize>);

impl Fenwick {
    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks `< i`.
    fn below(&self, mut i: usize) -> usize {
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Harrell's concordance index. A pair is comparable when the subject with
/// the strictly smaller time had an event; it is concordant when that
/// subject has the higher risk, and tied risks count one half.
pub fn harrell_c(risk: &[f64], events: &[bool], times: &[f64]) -> Result<f64, AnalyticsError> {
    if risk.len() != events.len() || risk.len() != times.len() {
        return Err(AnalyticsError::LengthMismatch { left: risk.len(), right: events.len().min(times.len()) });
    }
    if risk.iter().chain(times).any(|v| v.is_nan()) {
        return Err(AnalyticsError::NonFinite);
    }
    let mut sorted_risk = risk.to_vec();
    sorted_risk.sort_by(f64::total_cmp);
    sorted_risk.dedup();
    let rank = |r: f64| sorted_risk.partition_point(|&v| v < r);

    let mut order: Vec<usize> = (0..risk.len()).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
    let mut tree = Fenwick(vec![0; sorted_risk.len() + 1]);
    let mut later = 0usize;
    let (mut concordant2, mut comparable) = (0u128, 0u128);
    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        let mut j = i;
        while j < order.len() && times[order[j]] == t {
            j += 1;
        }
        for &s in &order[i..j] {
            if events[s] {
                let r = rank(risk[s]);
                let lower = tree.below(r);
                let equal = tree.below(r + 1) - lower;
                concordant2 += (2 * lower + equal) as u128;
                comparable += later as u128;
            }
        }
        for &s in &order[i..j] {
            tree.add(rank(risk[s]));
        }
        later += j - i;
        i = j;
    }
    if comparable == 0 {
        return Err(AnalyticsError::NoComparablePairs);
    }
    Ok(concordant2 as f64 / (2.0 * comparable as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCvResult {
    pub mean_c: f64,
    pub per_fold: Vec<f64>,
    pub folds: Vec<usize>,
}

/// k-fold Cox regression, folds stratified by event status; each fold's
/// test C-index uses standardization and coefficients from its training
/// folds.
pub fn survival_cv(
    features: &[Vec<f64>],
    events: &[bool],
    times: &[f64],
    k: usize,
    seed: u64,
) -> Result<SurvivalCvResult, AnalyticsError> {
    if features.len() != events.len() || features.len() != times.len() {
        return Err(AnalyticsError::LengthMismatch { left: features.len(), right: events.len() });
    }
    let folds = stratified_folds(events, k, seed)?;
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| {
            let (mut xtr, mut etr, mut ttr) = (vec![], vec![], vec![]);
            let (mut xte, mut ete, mut tte) = (vec![], vec![], vec![]);
            for i in 0..features.len() {
                if folds[i] == f {
                    xte.push(features[i].clone());
                    ete.push(events[i]);
                    tte.push(times[i]);
                } else {
                    xtr.push(features[i].clone());
                    etr.push(events[i]);
                    ttr.push(times[i]);
                }
            }
            let scaler = Standardizer::fit(&xtr)?;
            let fit = cox_fit(&scaler.transform(&xtr), &etr, &ttr)?;
            let risk: Vec<f64> = xte.iter().map(|x| fit.risk(&scaler.transform_row(x))).collect();
            harrell_c(&risk, &ete, &tte)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(SurvivalCvResult {
        mean_c: per_fold.iter().sum::<f64>() / k as f64,
        per_fold,
        folds,
    })
}

pub const SURVIVAL_CSV_HEADER: &str = "input,c_index";
