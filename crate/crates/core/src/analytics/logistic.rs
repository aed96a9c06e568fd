use nalgebra::{DMatrix, DVector};

use super::AnalyticsError;

pub const MAX_NEWTON_ITERATIONS: usize = 100;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
/// Smallest and largest reported probability.
const PROB_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub l2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective after each accepted step, starting from zero weights.
    pub objective_trace: Vec<f64>,
}

impl LogisticModel {
    pub fn zeros(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
            intercept: 0.0,
            l2: 0.0,
            iterations: 0,
            converged: false,
            objective_trace: Vec::new(),
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Probability of the positive label, strictly inside (0, 1).
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x)).clamp(PROB_EPS, 1.0 - PROB_EPS)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn design(x: &[Vec<f64>]) -> DMatrix<f64> {
    let d = x[0].len();
    DMatrix::from_fn(x.len(), d + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] })
}

/// Negative log-likelihood plus `l2/2 ‖w‖²`; the intercept is unpenalized.
fn objective(xd: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, l2: f64) -> f64 {
    let eta = xd * beta;
    let nll: f64 = eta.iter().zip(y.iter()).map(|(e, yi)| softplus(*e) - yi * e).sum();
    nll + 0.5 * l2 * beta.rows(1, beta.len() - 1).norm_squared()
}

/// L2-penalized logistic regression by damped Newton iterations.
pub fn logistic_fit(x: &[Vec<f64>], y: &[bool], l2: f64) -> Result<LogisticModel, AnalyticsError> {
    if x.is_empty() {
        return Err(AnalyticsError::Empty("feature matrix"));
    }
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(AnalyticsError::Ragged);
    }
    if x.iter().flatten().any(|v| !v.is_finite()) || !(l2 >= 0.0) {
        return Err(AnalyticsError::NonFinite);
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives < 2 || y.len() - positives < 2 {
        return Err(AnalyticsError::SingleLabel);
    }
    let xd = design(x);
    let yv = DVector::from_iterator(y.len(), y.iter().map(|&v| if v { 1.0 } else { 0.0 }));
    let p = d + 1;
    let mut beta = DVector::zeros(p);
    let mut obj = objective(&xd, &yv, &beta, l2);
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let eta = &xd * &beta;
        let mu = eta.map(sigmoid);
        let mut grad = xd.transpose() * (&mu - &yv);
        let mut penalty = DVector::from_element(p, l2);
        penalty[0] = 0.0;
        grad += penalty.component_mul(&beta);
        if grad.norm() < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-12));
        let mut hess = xd.transpose() * DMatrix::from_diagonal(&w) * &xd;
        hess += DMatrix::from_diagonal(&penalty);
        // Tiny diagonal floor keeps separable, unpenalized problems solvable.
        for i in 0..p {
            hess[(i, i)] += 1e-10;
        }
        let direction = match hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => hess.lu().solve(&grad).ok_or(AnalyticsError::Singular)?,
        };
        let slope = grad.dot(&direction);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let candidate = &beta - t * &direction;
            let c_obj = objective(&xd, &yv, &candidate, l2);
            if c_obj <= obj - 1e-4 * t * slope {
                beta = candidate;
                obj = c_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // No further decrease is representable; treat as stationary.
            converged = grad.norm() < 1e-6;
            break;
        }
        trace.push(obj);
    }
    Ok(LogisticModel {
        weights: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        l2,
        iterations,
        converged,
        objective_trace: trace,
    })
}
